"""Log-log rate fits and the envelope functions of the rate statements."""

import numpy as np

ENVELOPES = {
    "eps": lambda e: e,
    "eps_sqrtlog": lambda e: e * np.sqrt(1 + np.abs(np.log(e))),
    "eps_log": lambda e: e * (1 + np.abs(np.log(e))),
    "log": lambda e: 1 + np.abs(np.log(e)),
}


def envelope(name, eps):
    """Evaluate the envelope `name` (see ENVELOPES) at eps."""
    try:
        f = ENVELOPES[name]
    except KeyError:
        raise ValueError(f"unknown envelope {name!r}; choose from {sorted(ENVELOPES)}") from None
    return f(np.asarray(eps, dtype=float))


def loglog_slope(x, y):
    """Least-squares slope of ln y against ln x; nan if any y is not positive."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if len(x) < 2 or np.any(y <= 0) or np.any(x <= 0):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def ratio_spread(values, env):
    """Ratios values / env and their max/min spread (inf if a ratio vanishes)."""
    r = np.asarray(values, dtype=float) / np.asarray(env, dtype=float)
    lo = np.min(r)
    return r, (float(np.max(r) / lo) if lo > 0 else float("inf"))
