import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locctl.geometry import (Ball, Box, Contracted, Simplex, SmoothedSimplex, body_from_config, boundary_distance,
                             contains, contract, grid_points, project)

# values below were computed with an SLSQP quadratic-program oracle and frozen


def test_ball_radial_projection():
    np.testing.assert_allclose(project(Ball([0, 0], 1), [2, 0]), [1, 0])


def test_simplex_symmetric_projection():
    np.testing.assert_allclose(project(Simplex(3), [0.5, 0.5, 0.5]), [1 / 3] * 3, atol=1e-12)


def test_simplex_projection_matches_qp_oracle():
    np.testing.assert_allclose(project(Simplex(3), [1.2, -0.1, 0.3]), [0.95, 0.0, 0.05], atol=1e-9)


def test_ball_boundary_point_for_tiny_offset():
    # the squared norm of this offset is subnormal
    z = Ball([0.0, 0.0], 1.0).nearest_boundary_point([0.0, 2.8e-160])
    assert np.allclose(z, [0.0, 1.0], atol=1e-15)


def test_projection_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        project(Ball([0, 0], 1), [1, 2, 3])


@pytest.mark.parametrize("y,expected", [((0, 0), 1.0), ((0.6, 0), 0.4)])
def test_ball_boundary_distance(y, expected):
    assert boundary_distance(Ball([0, 0], 1), y) == pytest.approx(expected, abs=1e-12)


def test_simplex_centroid_boundary_distance():
    # QP oracle distance to the nearest facet inside the affine hull: 0.408248290...
    assert boundary_distance(Simplex(3), [1 / 3] * 3) == pytest.approx(0.40824829046, abs=1e-9)


def test_boundary_distance_rejects_outside_point():
    with pytest.raises(ValueError):
        boundary_distance(Ball([0, 0], 1), [2, 0])


def test_boundary_distance_zero_on_boundary():
    assert boundary_distance(Ball([0, 0], 1), [1, 0]) == 0.0
    assert boundary_distance(Simplex(3), [0.5, 0.5, 0.0]) == 0.0


def test_contracted_ball_projection():
    np.testing.assert_allclose(contract(Ball([0, 0], 1), 0.2).project([2, 0]), [0.8, 0])


def test_contract_zero_is_identity(rng):
    B, C = Ball([0, 0], 1), contract(Ball([0, 0], 1), 0.0)
    for z in rng.uniform(-1.5, 1.5, (200, 2)):
        assert B.contains(z) == C.contains(z)


def test_contracted_member_keeps_distance_from_boundary():
    B = Ball([0, 0], 1)
    C = contract(B, 0.1)
    assert C.contains([0.9, 0])
    assert B.boundary_distance([0.9, 0]) >= B.r * 0.1 - 1e-12


def test_contract_rejects_delta_one():
    with pytest.raises(ValueError):
        contract(Ball([0, 0], 1), 1.0)


def test_contains_examples():
    assert contains(Simplex(3), [1 / 3] * 3, 0)
    assert contains(Ball([0, 0], 1), [1 + 1e-12, 0], 1e-9)
    # smallest coordinate of any member is phi / n = 0.1
    assert not contains(SmoothedSimplex(3, 0.3), [1, 0, 0])
    assert contains(SmoothedSimplex(3, 0.3), [0.8, 0.1, 0.1])


def test_smoothed_simplex_zero_matches_simplex(rng):
    S, S0 = Simplex(4), SmoothedSimplex(4, 0.0)
    pts = np.vstack([rng.dirichlet(np.ones(4), 100), rng.uniform(-0.2, 1.0, (100, 4))])
    for z in pts:
        assert S.contains(z) == S0.contains(z)


def test_simplex_projection_agrees_with_qp_oracle(rng):
    from scipy.optimize import minimize

    for n in (2, 3, 5, 10):
        for _ in range(5):
            z = rng.normal(0, 1, n)
            r = minimize(lambda y: np.sum((y - z) ** 2), np.full(n, 1 / n), method="SLSQP",
                         bounds=[(0, None)] * n, constraints=[{"type": "eq", "fun": lambda y: y.sum() - 1}],
                         options={"ftol": 1e-15, "maxiter": 1000})
            np.testing.assert_allclose(Simplex(n).project(z), r.x, atol=1e-6)


def test_radii():
    B = Ball([0, 0], 2)
    assert (B.r, B.R) == (2, 2)
    S = Simplex(3)
    assert S.r == pytest.approx(math.sqrt(3 / 2) / 3)
    assert S.R >= S.r > 0


def test_body_from_config():
    B = body_from_config({"type": "ball", "radius": 1.0, "dim": 2})
    assert isinstance(B, Ball) and B.dim == 2
    with pytest.raises(ValueError):
        body_from_config({"type": "ellipsoid"})


def test_grid_points_are_members():
    for body in (Ball([0, 0], 1), Simplex(3), Box([-1], [1])):
        pts = grid_points(body, 0.05)
        assert len(pts) > 10
        assert all(body.contains(p) for p in pts)


# --- properties ----------------------------------------------------------------

BODIES = {
    "ball": Ball([0.0, 0.0], 1.0),
    "box": Box([-1.0, -0.5], [1.0, 2.0]),
    "simplex": Simplex(3),
    "smoothed": SmoothedSimplex(3, 0.3),
    "contracted": Contracted(Ball([0.0, 0.0], 1.0), 0.25),
}

coords = st.floats(-3, 3, allow_nan=False)


def _vec(body, draw):
    return np.array([draw(coords) for _ in range(body.dim)])


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(sorted(BODIES)), st.data())
def test_projection_nonexpansive_and_idempotent(name, data):
    body = BODIES[name]
    z1, z2 = _vec(body, data.draw), _vec(body, data.draw)
    p1, p2 = body.project(z1), body.project(z2)
    assert body.contains(p1)
    assert np.linalg.norm(p1 - p2) <= np.linalg.norm(z1 - z2) + 1e-9
    np.testing.assert_allclose(body.project(p1), p1, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(sorted(BODIES)), st.data())
def test_boundary_distance_ball_stays_inside(name, data):
    body = BODIES[name]
    y = body.project(_vec(body, data.draw) * 0.3)
    pi = body.boundary_distance(y)
    rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 31)))
    exited = False
    for _ in range(64):
        u = body.tangent(rng.standard_normal(body.dim))
        u /= np.linalg.norm(u)
        assert body.contains(y + max(pi - 1e-9, 0) * u)
        exited |= not body.contains(y + (pi + 1e-6) * u)
    # the nearest boundary direction is always a witness
    z = body.nearest_boundary_point(y)
    gap = np.linalg.norm(z - y)
    if gap > 0:
        d = (z - y) / gap
        exited |= not body.contains(y + (pi + 1e-6) * d)
    assert exited


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.95), st.floats(0, 0.95), st.data())
def test_contraction_nested(d1, d2, data):
    d1, d2 = min(d1, d2), max(d1, d2)
    base = Ball([0.0, 0.0], 1.0)
    z = _vec(base, data.draw)
    if contract(base, d2).contains(z):
        assert contract(base, d1).contains(z)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.9), st.data())
def test_contracted_projection_is_scaled_projection(delta, data):
    base = Simplex(3)
    z = _vec(base, data.draw)
    C = contract(base, delta)
    c = base.center
    expected = c + (1 - delta) * (base.project(c + (z - c) / (1 - delta)) - c)
    np.testing.assert_allclose(C.project(z), expected, atol=1e-9)
    assert base.boundary_distance(C.project(z)) >= base.r * delta - 1e-9
