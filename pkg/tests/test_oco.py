import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locctl.controllers import oen_ftrl_params
from locctl.geometry import Ball, Box, Simplex
from locctl.oco import Fkm, Ftrl, Ogd, fkm_step, ftrl_next, ftrl_update, holder_calibrate, ogd_step


def test_ftrl_starts_at_regularizer_minimizer():
    np.testing.assert_allclose(ftrl_next(Ftrl(Ball([0, 0], 1), 0.1)), [0, 0])


def test_ftrl_interval_matches_argmin_oracle():
    st_ = Ftrl(Box([-1], [1]), 0.1)
    ftrl_update(st_, [2.0])
    # bounded scalar minimization of 0.2 y + y^2 / 2 gives -0.2
    np.testing.assert_allclose(ftrl_next(st_), [-0.2], atol=1e-12)


def test_ftrl_ball_saturates():
    st_ = Ftrl(Ball([0, 0], 1), 1.0)
    ftrl_update(st_, [3.0, 0.0])
    np.testing.assert_allclose(ftrl_next(st_), [-1, 0])


def test_ftrl_accumulates_and_rejects_bad_dimension():
    st_ = Ftrl(Ball([0, 0], 1), 0.1)
    ftrl_update(st_, [1, 0])
    ftrl_update(st_, [0, 1])
    np.testing.assert_allclose(st_.grad_sum, [1, 1])
    assert st_.round == 2
    before = ftrl_next(st_)
    ftrl_update(st_, [0, 0])
    np.testing.assert_allclose(ftrl_next(st_), before)
    with pytest.raises(ValueError):
        ftrl_update(st_, [1, 2, 3])


def test_ftrl_regret_audit_against_comparator_grid(rng):
    Y = Ball([0, 0], 1)
    T, L = 2000, 1.0
    eta = math.sqrt(Y.R ** 2 / 2 / (T * L ** 2))
    st_ = Ftrl(Y, eta)
    gs = rng.normal(0.3, 1, (T, 2))
    gs /= np.maximum(np.linalg.norm(gs, axis=1, keepdims=True), 1)
    total = 0.0
    for g in gs:
        total += g @ ftrl_next(st_)
        ftrl_update(st_, g)
    angles = np.linspace(0, 2 * np.pi, 721)
    comps = np.column_stack([np.cos(angles), np.sin(angles)])
    best = (comps @ gs.sum(axis=0)).min()
    assert total - best <= st_.regret_bound(T, L)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=2, max_size=30), st.floats(0.01, 1))
def test_ftrl_step_norm_bound(grads, eta):
    st_ = Ftrl(Ball([0, 0], 1), eta)
    prev = ftrl_next(st_)
    for g in grads:
        g = np.array(g)
        L = max(np.linalg.norm(g), 1e-12)
        ftrl_update(st_, g)
        nxt = ftrl_next(st_)
        assert np.linalg.norm(nxt - prev) <= eta * L / st_.gamma + 1e-12
        prev = nxt


@settings(max_examples=100, deadline=None)
@given(st.permutations(list(range(6))))
def test_ftrl_output_depends_only_on_gradient_sum(order):
    grads = np.array([[1, 0, 0], [0, 2, 0], [0.5, 0.5, 0.5], [-1, 0, 3], [0, 0, -2], [0.1, 0.2, 0.3]])
    a, b = Ftrl(Simplex(3), 0.2), Ftrl(Simplex(3), 0.2)
    for g in grads:
        ftrl_update(a, g)
    for i in order:
        ftrl_update(b, grads[i])
    np.testing.assert_allclose(ftrl_next(a), ftrl_next(b), atol=1e-12)


def test_fkm_gradient_estimate_formula():
    f = Fkm(Ball([0, 0], 1), 0.1, 0.1, np.random.default_rng(0))
    f.last_direction = np.array([0.0, 1.0])
    np.testing.assert_allclose(f.gradient_estimate(0.5), [0, 10])


def test_fkm_zero_loss_keeps_center():
    f = Fkm(Ball([0, 0], 1), 0.1, 0.1, np.random.default_rng(0))
    c = f.center.copy()
    fkm_step(f, 0.0)
    np.testing.assert_allclose(f.center, c)


def test_fkm_gradient_estimate_is_unbiased_for_smoothed_loss():
    # E[(n/d) f(v + d u) u] = grad of the ball-smoothed f; for ||y||^2 that is 2v
    f = Fkm(Ball([0, 0], 1), 0.1, 0.1, np.random.default_rng(7))
    v = np.array([0.3, -0.2])
    f.center = v.copy()
    est = np.zeros(2)
    N = 10_000
    for _ in range(N):
        y = f.point
        est += f.gradient_estimate(y @ y)
        f.last_direction = f.rng.standard_normal(2)
        f.last_direction /= np.linalg.norm(f.last_direction)
    assert np.linalg.norm(est / N - 2 * v) < 0.05


def test_fkm_points_stay_inside_and_steps_bounded(rng):
    Y = Ball([0, 0], 1)
    f = Fkm(Y, 0.002, 0.05, np.random.default_rng(3))
    prev = f.point
    for _ in range(2000):
        loss = 0.5 * np.linalg.norm(prev - np.array([0.2, 0.1]))
        nxt = f.step(loss)
        assert Y.contains(nxt)
        assert f.inner.contains(f.center)
        assert np.linalg.norm(nxt - prev) <= f.step_bound(1.0) + 1e-12
        prev = nxt


def test_ogd_simplex_step_matches_oracle():
    st_ = Ogd(Simplex(2), 0.1, point=[0.5, 0.5])
    ogd_step(st_, [1.0, 0.0])
    np.testing.assert_allclose(st_.point, [0.45, 0.55], atol=1e-12)
    ogd_step(st_, [0.0, 0.0])
    np.testing.assert_allclose(st_.point, [0.45, 0.55], atol=1e-12)


def test_ogd_regret_audit(rng):
    Y = Simplex(3)
    T = 4000
    R_B, G_B = math.sqrt(2) / 2 * math.sqrt(2), 1.0
    st_ = Ogd(Y, 2 * R_B / (G_B * math.sqrt(T)))
    gs = rng.uniform(-1, 1, (T, 3)) / math.sqrt(3) + np.array([0.1, 0, -0.1]) / math.sqrt(3)
    total = 0.0
    for g in gs:
        total += g @ st_.point
        ogd_step(st_, g)
    best = gs.sum(axis=0).min()  # linear losses: a vertex is optimal
    assert total - best <= 2 * R_B * G_B * math.sqrt(T)


def test_holder_calibration_values():
    eta, delta, step = holder_calibrate(1.0, 0.5, 0.5, 1.0, 1.0, 0.5, 10_000)
    # direct evaluation of the calibration formulas
    assert eta == pytest.approx(0.00019524840630305584, rel=1e-12)
    assert step == pytest.approx(0.0033655677059077757, rel=1e-12)
    assert delta == pytest.approx(step / 0.5)


def test_holder_beta_one_is_lipschitz_shape():
    e1, _, _ = holder_calibrate(1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 100)
    e2, _, _ = holder_calibrate(1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 400)
    assert e1 / e2 == pytest.approx(2.0)


@pytest.mark.parametrize("beta", [0.0, 1.5])
def test_holder_rejects_bad_exponent(beta):
    with pytest.raises(ValueError):
        holder_calibrate(1.0, beta, 0.5, 1.0, 1.0, 0.5, 100)


def test_holder_step_bound_holds_on_run(rng):
    # losses |y - a| on [-1, 1]: subgradients of norm at most lambda = 1
    eta, _, step = holder_calibrate(1.0, 0.5, 0.5, 1.0, 1.0, 0.5, 2000)
    ftrl = Ftrl(Box([-1], [1]), eta)
    prev = ftrl_next(ftrl)
    worst = 0.0
    for a in rng.uniform(-1, 1, 2000):
        ftrl_update(ftrl, [np.sign(prev[0] - a)])
        nxt = ftrl_next(ftrl)
        worst = max(worst, abs(nxt[0] - prev[0]))
        prev = nxt
    assert worst <= step + 1e-12


def test_oen_ftrl_calibration_example():
    eta, delta, bound = oen_ftrl_params(1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 10_000)
    assert eta == pytest.approx(0.004082482904638631, rel=1e-12)
    assert delta == pytest.approx(0.008164965809277262, rel=1e-12)
    assert bound == pytest.approx(2 * math.sqrt(3 * 10_000 * 0.5), rel=1e-12)
