"""Run configuration: a JSON document validated into dataclasses; unknown keys are rejected."""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import geometry
from .potential import PROFILES, TransversePotential

COMMANDS = ("geom-check", "spectrum", "converge", "estimates")

SHAPES = {
    "circle": (geometry.circle, {"R": 1.0}),
    "sphere": (geometry.sphere, {"R": 1.0}),
    "segment": (geometry.segment, {"L": 1.0}),
    "broken_line": (geometry.broken_line, {"theta": np.pi / 4, "L": 10.0, "delta_s": 0.5}),
    "wavy": (geometry.wavy, {"amplitude": 0.2, "period": 2.0, "L": 10.0}),
    "sin_curve": (geometry.sin_curve, {"umax": 6.0}),
}


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return cls(**data)


@dataclass
class ShapeSpec:
    kind: str = "circle"
    R: Optional[float] = None
    L: Optional[float] = None
    theta: Optional[float] = None
    delta_s: Optional[float] = None
    amplitude: Optional[float] = None
    period: Optional[float] = None
    umax: Optional[float] = None
    orientation: Optional[int] = None

    def params(self):
        if self.kind not in SHAPES:
            raise ConfigError(f"shape.kind must be one of {sorted(SHAPES)}")
        _, defaults = SHAPES[self.kind]
        out = dict(defaults)
        for key in defaults:
            val = getattr(self, key)
            if val is not None:
                out[key] = float(val)
        extra = [f.name for f in fields(self) if f.name not in ("kind", "orientation")
                 and f.name not in defaults and getattr(self, f.name) is not None]
        if extra:
            raise ConfigError(f"shape {self.kind!r} does not take {extra}")
        return out

    def build(self):
        maker, _ = SHAPES[self.kind]
        kwargs = self.params()
        if self.orientation is not None:
            if self.orientation not in (-1, 1):
                raise ConfigError("shape.orientation must be +1 or -1")
            kwargs["orientation"] = self.orientation
        try:
            return maker(**kwargs)
        except geometry.GeometryError as exc:
            raise ConfigError(f"shape: {exc}") from exc


@dataclass
class PotentialSpec:
    profile: str = "box"
    amplitude: float = 1.0
    beta: float = 0.3
    weights: list = field(default_factory=lambda: [1.0, 0.5])

    def build(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"potential.profile must be one of {list(PROFILES)}")
        if not self.beta > 0:
            raise ConfigError("potential.beta must be positive")
        if len(self.weights) != 2:
            raise ConfigError("potential.weights needs two entries")
        return TransversePotential(self.profile, float(self.amplitude), float(self.beta),
                                   tuple(float(w) for w in self.weights))


@dataclass
class Resolution:
    sigma_nodes: int = 256
    gauss: int = 16
    lat: int = 16
    volume_spacing: Optional[float] = None
    volume_points: int = 2500

    def validate(self):
        if self.sigma_nodes < 8 or self.sigma_nodes % 2:
            raise ConfigError("resolution.sigma_nodes must be even and >= 8")
        if self.gauss < 2:
            raise ConfigError("resolution.gauss must be >= 2")
        if self.lat < 4:
            raise ConfigError("resolution.lat must be >= 4")
        if self.volume_spacing is not None and not self.volume_spacing > 0:
            raise ConfigError("resolution.volume_spacing must be positive")
        if self.volume_points < 100:
            raise ConfigError("resolution.volume_points must be >= 100")


@dataclass
class Thresholds:
    slope_min: float = 0.9
    slope_max: float = 1.15
    ratio_factor: float = 3.0
    exponent_tol: float = 0.1
    sup_ratio_factor: float = 1.5

    def validate(self):
        if not 0 < self.slope_min <= self.slope_max:
            raise ConfigError("thresholds need 0 < slope_min <= slope_max")
        if not (self.ratio_factor >= 1 and self.sup_ratio_factor >= 1):
            raise ConfigError("ratio factors must be >= 1")
        if not self.exponent_tol >= 0:
            raise ConfigError("thresholds.exponent_tol must be >= 0")


@dataclass
class EstimatesSpec:
    lambdas: list = field(default_factory=lambda: [-1.0, -4.0])
    r0: list = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.4])


@dataclass
class RunConfig:
    command: Optional[str] = None
    shape: ShapeSpec = field(default_factory=ShapeSpec)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    alpha: Optional[float] = None
    eps: Optional[list] = None
    resolution: Resolution = field(default_factory=Resolution)
    thresholds: Thresholds = field(default_factory=Thresholds)
    estimates: EstimatesSpec = field(default_factory=EstimatesSpec)
    seed: int = 0
    output: str = "out"
    refine: bool = False
    expect_count: Optional[int] = None
    # 'lambda' is a Python keyword; it is stored under these names
    lam: object = -25.0
    lambda_window: Optional[list] = None

    @property
    def eps_list(self):
        """The eps sweep, strictly decreasing (default {0.2, 0.1, 0.05, 0.025} beta)."""
        if self.eps is None:
            return [f * self.potential.beta for f in (0.2, 0.1, 0.05, 0.025)]
        return sorted((float(e) for e in self.eps), reverse=True)

    def validate(self, command=None):
        try:
            return self._validate(command)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value: {exc}") from exc

    def _validate(self, command):
        if self.command is not None and self.command not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}")
        if command is not None and self.command is not None and command != self.command:
            raise ConfigError(f"config is for {self.command!r}, invoked as {command!r}")
        cmd = command or self.command
        self.shape.params()
        self.potential.build()
        self.resolution.validate()
        self.thresholds.validate()
        beta = self.potential.beta
        if self.eps is not None:
            eps = [float(e) for e in self.eps]
            if any(not 0 < e <= beta for e in eps):
                raise ConfigError(f"every eps must lie in (0, beta] with beta = {beta}")
            if len(set(eps)) != len(eps):
                raise ConfigError("eps values must be distinct")
        if cmd == "converge" and len(self.eps_list) < 4:
            raise ConfigError("converge needs at least 4 eps values for the rate fits")
        if not (self.lam == "auto" or (isinstance(self.lam, (int, float)) and self.lam < 0)):
            raise ConfigError("lambda must be negative or \"auto\"")
        if self.lambda_window is not None:
            if len(self.lambda_window) != 2 or not self.lambda_window[0] < self.lambda_window[1]:
                raise ConfigError("lambda_window must be [lo, hi] with lo < hi")
        if self.alpha is not None and self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if cmd == "estimates":
            if not self.estimates.r0:
                raise ConfigError("estimates.r0 must be a non-empty list")
            if any(not r > 0 for r in self.estimates.r0):
                raise ConfigError("estimates.r0 entries must be positive")
            if not self.estimates.lambdas or any(not l < 0 for l in self.estimates.lambdas):
                raise ConfigError("estimates.lambdas must be a non-empty list of negative values")
        if self.expect_count is not None and self.expect_count < 0:
            raise ConfigError("expect_count must be >= 0")
        return self

    def canonical(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def hash(self):
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    if "lam" in data:
        raise ConfigError("unknown keys ['lam']")
    if "lambda" in data:
        data["lam"] = data.pop("lambda")
    sub = {"shape": ShapeSpec, "potential": PotentialSpec, "resolution": Resolution,
           "thresholds": Thresholds, "estimates": EstimatesSpec}
    names = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}")
    kwargs = {}
    for key, val in data.items():
        kwargs[key] = _build(sub[key], val, key) if key in sub else val
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load(path, command=None):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_dict(data).validate(command)
