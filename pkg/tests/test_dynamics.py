import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locctl.dynamics import (BoundaryPush, DynamicsModel, NoAdversary, Pin1D, RadialPush, Script, adversary_next,
                             make_field_model, make_affine_field_model, make_interval_model, make_linear_model,
                             make_prop1_instance, nonconvex_oracle, solve_action, solve_action_linear)
from locctl.geometry import Ball, Box, Simplex


def _rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def test_solve_scaled_identity():
    x, res = solve_action_linear(2 * np.eye(2), [0, 0], [0.1, 0], Ball([0, 0], 1))
    np.testing.assert_allclose(x, [0.05, 0], atol=1e-12)
    assert res <= 1e-12


def test_solve_clips_to_action_boundary():
    x, res = solve_action_linear(np.eye(2), [0, 0], [3, 0], Ball([0, 0], 1))
    np.testing.assert_allclose(x, [1, 0], atol=1e-9)
    assert res == pytest.approx(2.0)


def test_solve_matches_dense_solve(rng):
    X = Ball(np.zeros(3), 10.0)
    for _ in range(50):
        A = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        b = rng.normal(size=3)
        x_true = rng.uniform(-1, 1, 3)
        target = A @ x_true + b
        x, res = solve_action_linear(A, b, target, X)
        np.testing.assert_allclose(x, np.linalg.solve(A, target - b), atol=1e-9)
        assert res <= 1e-9


def test_solve_on_box_and_simplex():
    x, res = solve_action_linear(np.eye(2), [0, 0], [0.5, 2.0], Box([-1, -1], [1, 1]))
    np.testing.assert_allclose(x, [0.5, 1.0], atol=1e-12)
    assert res == pytest.approx(1.0)
    x, res = solve_action_linear(np.eye(3), np.zeros(3), [0.2, 0.3, 0.5], Simplex(3))
    np.testing.assert_allclose(x, [0.2, 0.3, 0.5], atol=1e-9)


def test_oracle_delegates_to_linear_solver():
    m = make_field_model(2, 0.5, lambda y: 0.5 * max(1 - np.linalg.norm(y), 0) * np.eye(2))
    y, target = np.array([0.1, 0.0]), np.array([0.2, 0.1])
    A, b = m.local_form(y)
    np.testing.assert_array_equal(nonconvex_oracle(m, y, target)[0], solve_action_linear(A, b, target, m.action_space)[0])


def test_oracle_on_black_box_model_reaches_target():
    Y, X = Ball([0, 0], 1), Ball([0, 0], 1)
    m = DynamicsModel(Y, X, 0.5, lambda x, y, t=0: Y.project(y + 0.5 * np.tanh(x)))
    y = np.array([0.1, -0.2])
    target = y + np.array([0.1, 0.05])
    x, res = nonconvex_oracle(m, y, target)
    assert res <= 1e-6
    np.testing.assert_allclose(x, np.arctanh(np.array([0.2, 0.1])), atol=1e-5)


def test_prop1_oracle_cannot_hold_state():
    m = make_prop1_instance(0.1, 0.2)
    y = np.array([0.05, 0.0])
    _, res = nonconvex_oracle(m, y, y)
    assert res >= 0.2 - 0.1
    with pytest.raises(ValueError):
        make_prop1_instance(0.2, 0.3)


def test_prop1_loss_floor():
    # any action sequence from the designated point spends at least alpha every other round
    m = make_prop1_instance(0.1, 0.2)
    rng = np.random.default_rng(0)
    y, total = np.zeros(2), 0.0
    T = 1000
    for t in range(T):
        aim = np.zeros(2)
        x, _ = solve_action(m, y, aim, t) if np.linalg.norm(y) > 0.1 else (rng.normal(size=2) * 0.01, 0)
        y = m.step(x, y, t)
        total += np.linalg.norm(y)
    assert total >= 0.1 * T / 2


def test_field_model_isotropic_solution():
    rho = 0.5
    m = make_field_model(2, rho, lambda y: rho * max(1 - np.linalg.norm(y), 0) * np.eye(2))
    y = np.array([0.3, 0.2])
    pi = 1 - np.linalg.norm(y)
    target = y + 0.9 * rho * pi * np.array([0.6, 0.8])
    x, res = solve_action(m, y, target)
    np.testing.assert_allclose(x, (target - y) / (pi * rho), atol=1e-9)
    assert np.linalg.norm(x) <= 1 and res <= 1e-8


def test_field_model_rotated_field_reachability(rng):
    rho = 0.5

    def field(y):
        pi = max(1 - np.linalg.norm(y), 0)
        return _rot(y[0] + 2 * y[1]) @ np.diag([pi * rho, 2 * pi * rho])

    m = make_field_model(2, rho, field)
    for _ in range(1000):
        y = Ball([0, 0], 1).project(rng.uniform(-1, 1, 2) * 0.95)
        pi = m.state_space.boundary_distance(y)
        u = rng.standard_normal(2)
        target = y + rho * pi * rng.uniform() * u / np.linalg.norm(u)
        _, res = solve_action(m, y, target)
        assert res <= 1e-8


def test_field_model_rejects_weak_field():
    with pytest.raises(ValueError):
        make_field_model(2, 0.5, lambda y: 0.1 * max(1 - np.linalg.norm(y), 0) * np.eye(2) + 0 * y[0])


def test_field_model_target_outside_certified_ball_may_miss():
    rho = 0.5
    m = make_field_model(2, rho, lambda y: rho * max(1 - np.linalg.norm(y), 0) * np.eye(2))
    y = np.array([0.5, 0.0])
    _, res = solve_action(m, y, y + np.array([1.01 * rho * 0.5, 0]))
    assert res > 0


def test_field_model_action_linear_residual_bound(rng):
    rho = 0.5
    m = make_field_model(2, rho, lambda y: rho * max(1 - np.linalg.norm(y), 0) * np.eye(2), q_scale=0.3, q_power=1.0)
    C, c = m.q_bound
    for _ in range(200):
        y = rng.uniform(-0.4, 0.4, 2)
        x = rng.uniform(-0.3, 0.3, 2)
        A, b = m.local_form(y)
        gap = np.linalg.norm(m.step(x, y) - (A @ x + b))
        assert gap <= C * np.linalg.norm(A @ x) ** (1 + c) + 1e-12


def test_affine_field_contraction_closed_form():
    rho = 0.5
    m = make_affine_field_model(2, rho, lambda y: 0.9 * np.eye(2), lambda y: np.eye(2), c=0.6)
    y = np.array([0.2, -0.1])
    pi = 1 - np.linalg.norm(y)
    target = y + 0.5 * rho * pi * np.array([1.0, 0.0])
    x, res = solve_action(m, y, target)
    np.testing.assert_allclose(x, target - 0.9 * y, atol=1e-12)
    assert res <= 1e-12


def test_affine_field_with_identity_drift_matches_field_model(rng):
    rho = 0.5
    A = lambda y: rho * max(1 - np.linalg.norm(y), 0) * np.eye(2)
    m1 = make_field_model(2, rho, A)
    m2 = make_affine_field_model(2, rho, lambda y: np.eye(2), A, c=1.0)
    for _ in range(50):
        y, x = rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.7, 0.7, 2)
        np.testing.assert_allclose(m1.step(x, y), m2.step(x, y), atol=1e-15)


def test_affine_field_rejects_condition_violation():
    with pytest.raises(ValueError):
        make_affine_field_model(2, 0.5, lambda y: 0.5 * np.eye(2), lambda y: np.eye(2), c=0.1)


def test_linear_model_reachability(rng):
    m = make_linear_model(np.diag([0.5, 1.0]), np.eye(2), Ball([0, 0], 1), Ball([0, 0], 1), 0.5, mode="strong")
    for _ in range(200):
        y = rng.uniform(-0.5, 0.5, 2)
        u = rng.standard_normal(2)
        target = m.state_space.project(y + 0.5 * rng.uniform() * u / np.linalg.norm(u))
        _, res = solve_action(m, y, target)
        assert res <= 1e-8


def test_radial_push_at_center():
    w = adversary_next(RadialPush(0.5, 1.0, budget=5), np.zeros(2), Ball([0, 0], 1))
    assert np.linalg.norm(w) == pytest.approx(0.25)


def test_radial_push_points_outward_and_respects_budget():
    adv = RadialPush(0.5, 0.5, budget=0.3)
    Y = Ball([0, 0], 1)
    w = adv.next(np.array([0.5, 0.0]), Y)
    np.testing.assert_allclose(w, [0.5 / 3 * 0.5, 0])
    total = np.linalg.norm(w)
    for _ in range(20):
        total += np.linalg.norm(adv.next(np.array([0.1, 0.0]), Y))
    assert total <= 0.3 + 1e-12
    assert adv.spent == pytest.approx(total)


@pytest.mark.parametrize("rho", [0.25, 0.5, 1.0])
@pytest.mark.parametrize("beta", [0.0, 0.5])
def test_boundary_push_geometric_decay(rho, beta):
    # follow a stay-put controller: each round the adversary pushes further out
    Y = Ball([0, 0], 1)
    adv = BoundaryPush(beta, rho)
    y = np.array([0.1, 0.05])
    d0 = Y.boundary_distance(y)
    rate = 1 - (1 - beta) * rho ** 2 / (1 + beta * rho)
    for t in range(1, 40):
        target = y  # a stay-put controller
        w = adv.next(target, Y)
        y = target + w
        assert Y.contains(y)
        assert Y.boundary_distance(y) <= d0 * rate ** t + 1e-9


def test_pin1d_drives_to_lower_end():
    Y = Box([-1.0], [1.0])
    adv = Pin1D(-1.0, budget=10)
    w1 = adv.next(np.array([0.0]), Y)
    np.testing.assert_allclose(w1, [-1.0])
    assert np.linalg.norm(w1) <= 1 + 0.25
    w2 = adv.next(np.array([-0.75]), Y)
    assert np.linalg.norm(w2) <= 0.25 + 1e-12


def test_pin1d_stops_when_budget_spent():
    adv = Pin1D(-1.0, budget=1.5)
    Y = Box([-1.0], [1.0])
    ws = [adv.next(np.array([0.0]), Y) for _ in range(4)]
    assert sum(np.linalg.norm(w) for w in ws) <= 1.5 + 1e-12
    assert np.linalg.norm(ws[-1]) == 0


def test_script_and_none():
    Y = Ball([0, 0], 1)
    adv = Script([[0.1, 0], [0, 0.2]])
    np.testing.assert_allclose(adv.next(np.zeros(2), Y), [0.1, 0])
    np.testing.assert_allclose(adv.next(np.zeros(2), Y), [0, 0.2])
    np.testing.assert_allclose(adv.next(np.zeros(2), Y), [0, 0])
    np.testing.assert_allclose(NoAdversary().next(np.ones(2) * 0.3, Y), [0, 0])


def test_interval_model_is_strong():
    m = make_interval_model(1.0, 0.25)
    assert m.mode == "strong" and m.reach_radius(np.array([0.99])) == 0.25
    np.testing.assert_allclose(m.step([1.0], [0.9]), [1.0])


def test_model_rejects_bad_mode():
    with pytest.raises(ValueError):
        DynamicsModel(Ball([0], 1), Ball([0], 1), 0.5, lambda x, y, t=0: y, mode="medium")


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.0, 0.95), st.floats(0, 2 * math.pi))
def test_radial_push_norm_formula(rho, r0, angle):
    alpha = 0.5
    Y = Ball([0, 0], 1)
    y = r0 * np.array([math.cos(angle), math.sin(angle)])
    w = RadialPush(alpha, rho, budget=np.inf).next(y, Y)
    assert np.linalg.norm(w) == pytest.approx((rho - alpha * rho) / (1 + rho) * (1 - r0), abs=1e-12)
    assert Y.contains(y + w)
