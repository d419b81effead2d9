import math

import numpy as np
import pytest

from locctl.audit import audit_regret
from locctl.controllers import (ControllerConfig, TrajectoryLog, default_target_body, linear_policy_run,
                                nested_bco_params, nested_bco_run, oen_ftrl_ap_run, oen_ftrl_params, oen_ftrl_run,
                                oen_ftrl_uap_run, probing_oco_run, state_targeting_policy_step, state_targeting_run)
from locctl.dynamics import (BoundaryPush, Pin1D, RadialPush, make_field_model, make_interval_model, make_linear_model)
from locctl.geometry import Ball
from locctl.losses import DistanceLoss, LinearLoss, SquaredDistanceLoss


def _rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def rotating_model(rho=0.5):
    def field(y):
        pi = max(1 - np.linalg.norm(y), 0)
        return rho * pi * _rot(y[0] + 2 * y[1]) @ np.diag([1.0, 1.5])

    return make_field_model(2, rho, field)


def isotropic_model(rho=0.5):
    return make_field_model(2, rho, lambda y: rho * max(1 - np.linalg.norm(y), 0) * np.eye(2))


def plain_ball_model():
    B = Ball([0, 0], 1)
    return make_linear_model(np.eye(2), np.eye(2), B, Ball([0, 0], 1), 1.0, mode="strong")


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        ControllerConfig(T=-1)
    with pytest.raises(ValueError):
        ControllerConfig(T=10, L=0)


def test_oen_ftrl_loss_minimized_at_origin_has_zero_regret():
    log = oen_ftrl_run(isotropic_model(), DistanceLoss([0.0, 0.0]), ControllerConfig(T=200))
    np.testing.assert_allclose(log.array("targets"), 0, atol=1e-15)
    assert audit_regret(log, DistanceLoss([0.0, 0.0]), comparator=0.0) == 0.0


@pytest.mark.parametrize("T", [256, 1024])
def test_oen_ftrl_regret_under_bound_and_feasible(T):
    model = rotating_model()
    losses = DistanceLoss([0.5, 0.0])
    log = oen_ftrl_run(model, losses, ControllerConfig(T=T, G=0.5))
    assert all(log.feasible) and not log.meta["failed"]
    assert max(log.residuals) <= 1e-8
    path = log.state_path
    assert np.all(np.linalg.norm(log.array("targets") - path[:-1], axis=1) <= log.meta["step_cap"] + 1e-12)
    assert audit_regret(log, losses, model.state_space) <= log.meta["bound"]


def test_oen_ftrl_rejects_too_short_horizon():
    with pytest.raises(ValueError):
        oen_ftrl_run(isotropic_model(0.01), DistanceLoss([0.5, 0.0]), ControllerConfig(T=1, L=50.0))


def test_ap_cap_is_one_sixth_of_pi():
    rho, alpha = 0.5, 0.5
    assert (rho - alpha * rho) / (1 + rho) == pytest.approx(1 / 6)


def test_ap_shadow_equals_oen_ftrl_at_scaled_rho():
    model = isotropic_model()
    losses = DistanceLoss([0.4, -0.2])
    T, alpha = 300, 0.5
    base = oen_ftrl_run(model, losses, ControllerConfig(T=T, rho=alpha * model.rho, G=0.5))
    ap = oen_ftrl_ap_run(model, losses, RadialPush(alpha, model.rho, budget=2.0),
                         ControllerConfig(T=T, alpha=alpha, G=0.5))
    np.testing.assert_allclose(np.vstack(ap.shadow), base.array("states"), atol=1e-9)
    assert sum(ap.w_norms) > 1.0  # the adversary really did move the state


def test_ap_zero_adversary_matches_oen_ftrl():
    model = rotating_model()
    losses = DistanceLoss([0.5, 0.0])
    cfg = ControllerConfig(T=200, alpha=0.5, G=0.5)
    ap = oen_ftrl_ap_run(model, losses, None, cfg)
    base = oen_ftrl_run(model, losses, ControllerConfig(T=200, rho=0.25, G=0.5))
    np.testing.assert_allclose(ap.array("states"), base.array("states"), atol=1e-9)


def test_ap_regret_with_radial_push():
    model = isotropic_model()
    losses = DistanceLoss([0.0, 0.0])
    log = oen_ftrl_ap_run(model, losses, RadialPush(0.5, 0.5, budget=5.0), ControllerConfig(T=1000, alpha=0.5, G=0.5))
    assert log.meta["cap_violations"] == 0
    assert audit_regret(log, losses, comparator=0.0) <= log.meta["bound"]
    assert log.meta["E"] <= 5.0 + 1e-12


def test_ap_aborts_on_cap_violation_unless_disabled():
    model = isotropic_model()
    losses = DistanceLoss([0.0, 0.0])
    cfg = ControllerConfig(T=50, alpha=0.5, G=0.5)
    with pytest.raises(RuntimeError):
        oen_ftrl_ap_run(model, losses, BoundaryPush(0.0, 0.5), cfg)
    log = oen_ftrl_ap_run(model, losses, BoundaryPush(0.0, 0.5), cfg, enforce_cap=False)
    assert log.meta["cap_violations"] > 0


def test_uap_rejects_short_horizon():
    with pytest.raises(ValueError):
        oen_ftrl_uap_run(make_interval_model(1.0, 0.25), LinearLoss([-1.0], 1.0), None,
                         ControllerConfig(T=10, alpha=0.1))


def test_uap_exact_tracking_without_disturbance():
    m = make_interval_model(1.0, 0.25)
    log = oen_ftrl_uap_run(m, LinearLoss([-1.0], 1.0), None, ControllerConfig(T=2000, alpha=0.1))
    np.testing.assert_allclose(np.vstack(log.shadow), log.array("states"), atol=1e-12)


def test_uap_pinned_interval_regret_window():
    m = make_interval_model(1.0, 0.25)
    losses = LinearLoss([-1.0], 1.0)  # f(y) = 1 - y
    T = 2000
    log = oen_ftrl_uap_run(m, losses, Pin1D(-1.0, 10.0), ControllerConfig(T=T, alpha=0.1))
    reg = audit_regret(log, losses, m.state_space)
    assert reg >= min(2 * 10 / 0.25, 2 * T) - 1e-9
    assert reg <= log.meta["bound"]


def test_uap_reached_dichotomy():
    m = make_interval_model(1.0, 0.25)
    rho, a = 0.25, 0.1
    log = oen_ftrl_uap_run(m, LinearLoss([-1.0], 1.0), Pin1D(-1.0, 10.0), ControllerConfig(T=2000, alpha=a))
    shadow, path = np.vstack(log.shadow), log.state_path
    for t in range(1, len(log)):
        dev = np.linalg.norm(path[t] - shadow[t - 1])
        if log.meta["reached"][t]:
            assert dev <= (1 + a) * rho + 1e-9
        else:
            assert dev > (1 - a) * rho - 1e-9


def test_probing_requires_x1():
    with pytest.raises(ValueError):
        probing_oco_run(plain_ball_model(), DistanceLoss([0.2, 0.0]), ControllerConfig(T=50))


def test_probing_estimation_phase_recovers_matrix():
    A = np.array([[1.0, 0.0], [0.0, 2.0]])
    m = make_linear_model(A, np.eye(2), Ball([0, 0], 1), Ball([0, 0], 1), 0.5, mode="strong")
    log = probing_oco_run(m, DistanceLoss([0.2, 0.0]), ControllerConfig(T=500, x1=np.zeros(2), probe_eps=0.01),
                          A_true=A)
    assert log.meta["fit_errors"][0] <= 1e-9
    with pytest.raises(ValueError):
        probing_oco_run(m, DistanceLoss([0.2, 0.0]), ControllerConfig(T=5, x1=np.zeros(2)))


def test_probing_fit_stays_close():
    A = np.diag([0.5, 1.0])
    m = make_linear_model(A, np.eye(2), Ball([0, 0], 1), Ball([0, 0], 1), 0.5, mode="strong")
    eps = 0.01
    log = probing_oco_run(m, DistanceLoss([0.3, 0.1]), ControllerConfig(T=1000, x1=np.zeros(2), probe_eps=eps, G=0.5),
                          A_true=A)
    assert max(log.meta["fit_errors"]) <= 10 * eps


def test_nested_bco_parameters():
    probe, delta, eta = nested_bco_params(2, 1.0, 1.0, 0.5, 1.0, 10_000)
    assert probe == pytest.approx(0.1)
    assert delta == pytest.approx(0.8)
    assert eta == pytest.approx(1 / 4000)


def test_nested_bco_rejects_small_horizon():
    with pytest.raises(ValueError):
        nested_bco_run(isotropic_model(0.5), DistanceLoss([0.2, 0.1], 0.5), ControllerConfig(T=100))


def test_nested_bco_steps_feasible():
    model = isotropic_model(1.0)
    log = nested_bco_run(model, DistanceLoss([0.2, 0.1], 0.5), ControllerConfig(T=1024, seed=3))
    assert all(log.feasible)
    steps = np.linalg.norm(np.diff(log.state_path, axis=0), axis=1)
    assert steps[1:].max() <= log.meta["step_bound"] + 1e-12
    assert log.meta["step_bound"] <= log.meta["step_cap"] + 1e-12


def test_linear_policy_on_projection_instance():
    B = Ball([0, 0], 1)
    m = make_linear_model(np.eye(2), np.eye(2), B, Ball([0, 0], 1), 1.0, mode="strong")
    p = np.array([0.5, 0.0])
    losses = SquaredDistanceLoss(p, lipschitz=3.0)
    rng = np.random.default_rng(6)
    for K in [np.zeros((2, 2)), np.eye(2), rng.normal(size=(2, 2))]:
        log = linear_policy_run(m, losses, K, 100)
        np.testing.assert_array_equal(log.array("actions"), 0)
        assert audit_regret(log, losses, B) == pytest.approx(25.0, abs=1e-9)


def test_state_targeting_reaches_reachable_target_in_one_step():
    m = isotropic_model()
    y_hat = np.array([0.2, 0.0])
    x = state_targeting_policy_step(m, np.zeros(2), default_target_body(m, 100), y_hat)
    np.testing.assert_allclose(m.step(x, np.zeros(2)), y_hat, atol=1e-12)


def test_state_targeting_arrival_follows_contraction():
    rho = 0.5
    m = isotropic_model(rho)
    y_hat = np.array([0.5, 0.0])
    log = state_targeting_run(m, DistanceLoss(y_hat), y_hat, 30)
    path = log.state_path
    # each step closes min(gap, rho * pi(y_prev)) of the gap
    for t in range(1, len(path)):
        gap_prev = np.linalg.norm(path[t - 1] - y_hat)
        reach = rho * (1 - np.linalg.norm(path[t - 1]))
        assert np.linalg.norm(path[t] - y_hat) <= max(0.0, gap_prev - reach) + 1e-9
    assert np.linalg.norm(path[-1] - y_hat) < 1e-9


def test_state_targeting_linear_full_rank_matches_inverse():
    A = np.array([[2.0, 0.5], [0.0, 1.5]])
    Bm = np.array([[0.5, 0.0], [0.1, 0.5]])
    m = make_linear_model(A, Bm, Ball([0, 0], 1), Ball([0, 0], 5), 1.0, mode="strong")
    y, y_hat = np.array([0.3, -0.2]), np.array([0.1, 0.4])
    x = state_targeting_policy_step(m, y, default_target_body(m, 100), y_hat)
    np.testing.assert_allclose(x, np.linalg.solve(A, y_hat - Bm @ y), atol=1e-9)


def test_same_seed_same_digest():
    model = isotropic_model(1.0)
    a = nested_bco_run(model, DistanceLoss([0.2, 0.1], 0.5), ControllerConfig(T=1024, seed=5))
    b = nested_bco_run(model, DistanceLoss([0.2, 0.1], 0.5), ControllerConfig(T=1024, seed=5))
    c = nested_bco_run(model, DistanceLoss([0.2, 0.1], 0.5), ControllerConfig(T=1024, seed=6))
    assert a.digest() == b.digest() != c.digest()


def test_empty_log():
    log = TrajectoryLog(np.zeros(2))
    assert len(log) == 0 and log.total_loss == 0.0
    assert log.array("states").shape == (0, 2)
