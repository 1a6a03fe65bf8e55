import numpy as np
import pytest
from scipy import linalg

import oracles
from deltashell import operators as op
from deltashell.discrete import (DiscreteOperator, GridError, VolumeGrid, build_volume_grid,
                                 operator_norm, schur_bound)
from deltashell.geometry import build_quadrature, circle, sphere
from deltashell.kernels import green
from deltashell.potential import TransversePotential, product_grid, profile_functions

LAM = -4.0


@pytest.fixture(scope="module")
def circ():
    quad = build_quadrature(circle(), 64)
    grid = product_grid(quad, 8)
    V = TransversePotential("gaussian", 1.0, 0.3)
    u, v = profile_functions(V, grid)
    vgrid = build_volume_grid(quad, 2.0, 0.3, h=0.25, delta_vol=0.2)
    return quad, grid, u, v, vgrid


def test_circle_single_layer_modes():
    quad = build_quadrature(circle(), 128)
    for kappa in (0.5, 1.0, 3.0):
        M = op.assemble_M(-kappa**2, quad)
        for n in range(5):
            mode = np.cos(n * quad.param[:, 0])
            got = (M.matrix @ mode) @ mode / (mode @ mode)
            assert got == pytest.approx(oracles.circle_mode(n, kappa), rel=1e-7)


def test_sphere_single_layer_constant_mode():
    quad = build_quadrature(sphere(), 16, rule="product")
    M = op.assemble_M(-1.0, quad)
    ones = np.ones(quad.n)
    val = M.matrix @ ones
    exact = (1 - np.exp(-2)) / 2
    assert exact == pytest.approx(oracles.sphere_constant_mode(1.0), rel=1e-15)
    assert np.allclose(val, exact, rtol=1e-4)


def test_single_layer_vanishes_for_large_kappa():
    quad = build_quadrature(circle(), 64)
    norms = [operator_norm(op.assemble_M(-k**2, quad)) for k in (1, 4, 16)]
    assert np.all(np.diff(norms) < 0) and norms[-1] < norms[0] / 10


def test_gamma_examples(circ):
    quad, grid, u, v, vgrid = circ
    g = op.assemble_gamma(LAM, quad, vgrid)
    gs = op.assemble_gamma_star(LAM, quad, vgrid)
    far = np.argmax(np.linalg.norm(vgrid.points, axis=1))
    assert g.matrix[far, 5] == pytest.approx(
        green(LAM, vgrid.points[far] - quad.nodes[5]) * quad.weights[5], rel=1e-12)
    assert np.allclose(g.adjoint().matrix, gs.matrix, rtol=1e-12, atol=0)
    # field point at the centre of the circle
    pt = VolumeGrid(np.zeros((1, 2)), np.ones(1), 1.0, np.zeros(2), (1, 1),
                    np.ones((1, 1), bool), 0.5, 1.0)
    g0 = op.assemble_gamma(LAM, quad, pt)
    assert (g0.matrix @ np.ones(quad.n))[0] == pytest.approx(2 * np.pi * green(LAM, np.array([1.0, 0])), rel=1e-12)
    assert np.all(gs.matrix @ np.zeros(vgrid.n) == 0)


def test_gamma_star_tiny_ball(circ):
    quad = circ[0]
    vgrid = build_volume_grid(quad, 2.0, 0.3, h=0.02)
    x0 = np.array([3.0, 0.5])
    ball = np.linalg.norm(vgrid.points - x0, axis=1) < 0.1
    f = ball.astype(float)
    out = op.assemble_gamma_star(LAM, quad, vgrid).matrix @ f
    vol = ball.sum() * vgrid.h**2
    approx = vol * np.array([green(LAM, x0 - y) for y in quad.nodes])
    assert np.allclose(out, approx, rtol=0.02)


def test_clearance_errors(circ):
    quad, grid, u, v, _ = circ
    narrow = build_volume_grid(quad, 2.0, 0.3, h=0.25, delta_vol=0.05)
    with pytest.raises(GridError):
        op.assemble_A_eps(LAM, 0.05, grid, v, narrow)
    close = VolumeGrid(np.array([[1.05, 0.0]]), np.ones(1), 0.1, np.zeros(2), (1, 1),
                       np.ones((1, 1), bool), 0.2, 0.05)
    with pytest.raises(GridError):
        op.assemble_gamma(LAM, quad, close)


def test_krein_resolvent(circ):
    quad, grid, u, v, vgrid = circ
    rng = np.random.default_rng(0)
    f = rng.normal(size=vgrid.n)
    free = op.free_resolvent_apply(LAM, vgrid, f)
    assert np.allclose(op.krein_resolvent_apply(LAM, 0.0, quad, vgrid, f), free)
    R = op.free_resolvent(LAM, vgrid)
    full = DiscreteOperator(R.matrix + op.krein_correction(LAM, 0.5, quad, vgrid).matrix,
                            vgrid.weights, vgrid.weights)
    assert full.symmetry_defect() < 1e-8
    assert np.allclose(R.matrix @ f, free)
    # far source: the correction is exponentially small
    far = np.exp(-np.sum((vgrid.points - [4.5, 0.0]) ** 2, axis=1) / 0.1)
    out = op.krein_resolvent_apply(LAM, 0.5, quad, vgrid, far)
    base = op.free_resolvent_apply(LAM, vgrid, far)
    assert np.max(np.abs(out - base)) < np.exp(-2.0 * 3.0) * np.max(np.abs(base))


def test_eps_zero_identities(circ):
    quad, grid, u, v, vgrid = circ
    B0 = op.assemble_B_eps(LAM, 0.0, grid, u, v)
    U = op.surface_to_product(grid, u)
    Vh = op.product_to_surface(grid, v)
    M = op.assemble_M(LAM, quad)
    assert np.max(np.abs(B0.matrix - U.matrix @ M.matrix @ Vh.matrix)) <= 1e-10
    A0 = op.assemble_A_eps(LAM, 0.0, grid, v, vgrid)
    g = op.assemble_gamma(LAM, quad, vgrid)
    assert np.max(np.abs(A0.matrix - g.matrix @ Vh.matrix)) <= 1e-10
    C0 = op.assemble_C_eps(LAM, 0.0, grid, u, vgrid)
    gs = op.assemble_gamma_star(LAM, quad, vgrid)
    assert np.max(np.abs(C0.matrix - U.matrix @ gs.matrix)) <= 1e-10


def test_zero_profiles(circ):
    quad, grid, u, v, vgrid = circ
    z = np.zeros_like(u)
    assert not np.any(op.assemble_B_eps(LAM, 0.05, grid, z, z).matrix)
    assert not np.any(op.assemble_A_eps(LAM, 0.05, grid, z, vgrid).matrix)
    assert not np.any(op.assemble_C_eps(LAM, 0.05, grid, z, vgrid).matrix)
    f = np.ones(vgrid.n)
    assert np.allclose(op.heps_resolvent_apply(LAM, 0.05, grid, z, z, vgrid, f),
                       op.free_resolvent_apply(LAM, vgrid, f))


def test_A_eps_far_field_and_adjoint(circ):
    quad, grid, u, v, vgrid = circ
    eps = 0.05
    A = op.assemble_A_eps(LAM, eps, grid, v, vgrid)
    C = op.assemble_C_eps(LAM, eps, grid, u, vgrid)
    i = np.argmax(np.linalg.norm(vgrid.points, axis=1))
    x = vgrid.points[i]
    # first order Taylor: each column differs from G(x - y) * weight by <= eps |grad G|
    Y0 = np.repeat(quad.nodes, grid.nt, axis=0)
    base = np.array([green(LAM, x - y) for y in Y0])
    col = v * op._layer_det(grid, eps) * grid.weights
    gradmax = 2.0 * green(LAM, np.array([np.linalg.norm(x) - 1.1, 0.0]))
    assert np.all(np.abs(A.matrix[i] - base * col) <= eps * gradmax * np.abs(col) + 1e-15)
    # v = u: C_eps is the adjoint of A_eps in the det-weighted layer inner product
    det = op._layer_det(grid, eps)
    lhs = C.matrix * grid.weights[:, None] * det[:, None]
    rhs = A.matrix.T * vgrid.weights[None, :]
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)


def test_heps_neumann_series(circ):
    quad, grid, u, v, vgrid = circ
    eps = 0.05
    B = op.assemble_B_eps(LAM, eps, grid, u, v)
    nb = operator_norm(B)
    assert nb < 1
    rhs = np.random.default_rng(2).normal(size=grid.n)
    exact = linalg.solve(np.eye(grid.n) - B.matrix, rhs)
    term, acc, errs = rhs.copy(), rhs.copy(), []
    for _ in range(8):
        term = B.matrix @ term
        acc = acc + term
        errs.append(np.linalg.norm(acc - exact))
    rates = np.array(errs[1:]) / np.array(errs[:-1])
    assert np.all(rates <= nb * 1.05)


def test_heps_requires_contraction(circ):
    quad, grid, *_ , vgrid = circ
    strong = TransversePotential("box", 60.0, 0.3)
    u, v = profile_functions(strong, grid)
    with pytest.raises(op.SpectralParameterError):
        op.heps_resolvent_apply(-0.25, 0.05, grid, u, v, vgrid, np.ones(vgrid.n))


def test_operator_norm_examples():
    w = np.full(5, 0.2)
    assert operator_norm(DiscreteOperator(np.eye(5), w, w)) == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    win, wout = rng.uniform(0.5, 2, 7), rng.uniform(0.5, 2, 6)
    a, b = rng.normal(size=6), rng.normal(size=7)
    # D = a b^T w_in acts as f -> a <b, f>_w
    D = DiscreteOperator(np.outer(a, b * win), win, wout)
    assert operator_norm(D) == pytest.approx(np.sqrt(a**2 @ wout) * np.sqrt(b**2 @ win), rel=1e-12)
    M = rng.normal(size=(50, 50))
    w50 = rng.uniform(0.1, 1, 50)
    D50 = DiscreteOperator(M, w50, w50)
    S = np.sqrt(w50)[:, None] * M / np.sqrt(w50)[None, :]
    assert operator_norm(D50) == pytest.approx(np.linalg.svd(S, compute_uv=False)[0], rel=1e-8)
    assert schur_bound(D50) >= operator_norm(D50)
    with pytest.raises(GridError):
        operator_norm(DiscreteOperator(M, -w50, w50))
