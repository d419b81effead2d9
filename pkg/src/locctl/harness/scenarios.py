"""Builders that turn config records into models, losses and adversaries, the
per-family scenario runners, and the named presets."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import dynamics as dyn
from ..audit import best_fixed_state
from ..controllers import (ControllerConfig, linear_policy_run, nested_bco_run, oen_ftrl_ap_run,
                           oen_ftrl_run, oen_ftrl_uap_run, probing_oco_run, state_targeting_run)
from ..geometry import Ball, body_from_config
from ..losses import DistanceLoss, LinearLoss, SquaredDistanceLoss
from .config import ConfigError, ScenarioConfig, rng_for

# stream ids for rng_for; fixed so adding a new consumer never shifts old draws
LOSS_STREAM, MODEL_STREAM, CONTROLLER_STREAM = 1, 2, 3


@dataclass
class Outcome:
    """Everything a run produces, flattened to per-round arrays."""

    targets: np.ndarray
    actions: np.ndarray
    states: np.ndarray
    w_norms: np.ndarray
    losses: np.ndarray
    comparator: np.ndarray  # per-round loss of the audited comparator
    residuals: np.ndarray
    feasible: np.ndarray
    regret: float
    bound: Optional[float] = None
    checks: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    digest: str = ""
    log: object = None  # the controller's own log, for audits that need more than the rows


def _need(entry, key, where):
    if key not in entry:
        raise ConfigError(f"{where}.{key}", "missing")
    return entry[key]


def _check_keys(entry, allowed, where):
    for k in entry:
        if k not in allowed:
            raise ConfigError(f"{where}.{k}", "unknown key")


# --- models -----------------------------------------------------------------------

def _rotating_field(rho, stretch):
    Y = Ball(np.zeros(2), 1.0)
    D = np.diag([1.0, stretch])

    def A(y):
        pi = Y.boundary_distance(Y.project(y))
        th = y[0] + 2 * y[1]
        c, s = math.cos(th), math.sin(th)
        return rho * pi * np.array([[c, -s], [s, c]]) @ D

    return A


def _isotropic_field(rho, n):
    Y = Ball(np.zeros(n), 1.0)
    eye = np.eye(n)
    return lambda y: rho * Y.boundary_distance(Y.project(y)) * eye


MODEL_KEYS = {
    "field": {"family", "n", "rho", "field", "stretch", "q_scale", "q_power"},
    "affine_field": {"family", "n", "rho", "c", "R", "gain", "drive"},
    "linear": {"family", "A", "B", "b", "rho", "mode", "state", "action"},
    "interval": {"family", "R", "rho"},
    "targeting": {"family", "n"},
    "jump": {"family", "alpha", "beta"},
}


def build_model(entry):
    entry = dict(entry)
    fam = _need(entry, "family", "model")
    if fam not in MODEL_KEYS:
        raise ConfigError("model.family", f"unknown model family {fam!r}")
    _check_keys(entry, MODEL_KEYS[fam], "model")
    if fam == "field":
        n = int(entry.get("n", 2))
        rho = float(entry.get("rho", 0.5))
        kind = entry.get("field", "rotating")
        if kind == "rotating":
            if n != 2:
                raise ConfigError("model.n", "the rotating field is two-dimensional")
            A = _rotating_field(rho, float(entry.get("stretch", 1.5)))
        elif kind == "isotropic":
            A = _isotropic_field(rho, n)
        else:
            raise ConfigError("model.field", f"unknown field {kind!r}")
        return dyn.make_field_model(n, rho, A, float(entry.get("q_scale", 0.0)), float(entry.get("q_power", 1.0)))
    if fam == "affine_field":
        n = int(entry.get("n", 2))
        rho = float(entry.get("rho", 0.5))
        g, a = float(entry.get("gain", 0.25)), float(entry.get("drive", 1.0))
        K = (1.0 - g) * np.eye(n)
        return dyn.make_affine_field_model(n, rho, lambda y: K, lambda y: a * np.eye(n), float(entry.get("c", 1.0)),
                                 float(entry.get("R", 1.0)))
    if fam == "linear":
        try:
            Y = body_from_config(_need(entry, "state", "model"))
            X = body_from_config(_need(entry, "action", "model"))
        except ValueError as exc:
            raise ConfigError("model.state/action", str(exc)) from None
        A = np.atleast_2d(np.asarray(_need(entry, "A", "model"), float))
        B = np.atleast_2d(np.asarray(entry.get("B", np.eye(Y.dim)), float))
        return dyn.make_linear_model(A, B, Y, X, float(_need(entry, "rho", "model")),
                                     entry.get("mode", "weak"), entry.get("b"))
    if fam == "interval":
        return dyn.make_interval_model(float(entry.get("R", 1.0)), float(_need(entry, "rho", "model")))
    if fam == "targeting":
        n = int(entry.get("n", 2))
        B = Ball(np.zeros(n), 1.0)
        return dyn.make_linear_model(np.eye(n), np.eye(n), B, B, 1.0, mode="strong")
    return dyn.make_prop1_instance(float(entry.get("alpha", 0.1)), float(entry.get("beta", 0.3)))


# --- losses -----------------------------------------------------------------------

LOSS_KEYS = {
    "distance": {"kind", "anchor", "scale"},
    "drifting_distance": {"kind", "center", "radius", "period", "scale"},
    "squared": {"kind", "anchor", "lipschitz", "scale"},
    "linear": {"kind", "coef", "offset"},
    "adversarial_linear": {"kind", "scale"},
}


def build_losses(entry, dim, T, seed):
    entry = dict(entry)
    kind = _need(entry, "kind", "losses")
    if kind not in LOSS_KEYS:
        raise ConfigError("losses.kind", f"unknown loss kind {kind!r}")
    _check_keys(entry, LOSS_KEYS[kind], "losses")
    scale = float(entry.get("scale", 1.0))
    if kind == "distance":
        return DistanceLoss(np.asarray(entry.get("anchor", np.zeros(dim)), float), scale)
    if kind == "drifting_distance":
        c = np.asarray(entry.get("center", np.zeros(dim)), float)
        rad, per = float(entry.get("radius", 0.3)), float(entry.get("period", 500))
        phase = 2 * math.pi * np.arange(max(T, 1)) / per
        anchors = np.tile(c, (max(T, 1), 1))
        anchors[:, 0] += rad * np.cos(phase)
        if dim > 1:
            anchors[:, 1] += rad * np.sin(phase)
        return DistanceLoss(anchors, scale)
    if kind == "squared":
        return SquaredDistanceLoss(_need(entry, "anchor", "losses"), float(_need(entry, "lipschitz", "losses")), scale)
    if kind == "linear":
        return LinearLoss(np.asarray(_need(entry, "coef", "losses"), float), float(entry.get("offset", 0.0)))
    g = rng_for(seed, LOSS_STREAM)
    c = g.standard_normal((max(T, 1), dim))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return LinearLoss(scale * c)


ADVERSARY_KEYS = {
    "none": {"kind"},
    "radial": {"kind", "alpha", "rho", "budget"},
    "boundary": {"kind", "beta", "rho", "budget"},
    "pin1d": {"kind", "target", "budget"},
    "script": {"kind", "disturbances"},
}


def build_adversary(entry):
    if entry is None:
        return dyn.NoAdversary()
    kind = _need(entry, "kind", "adversary")
    if kind not in ADVERSARY_KEYS:
        raise ConfigError("adversary.kind", f"unknown adversary {kind!r}")
    _check_keys(entry, ADVERSARY_KEYS[kind], "adversary")
    if kind == "none":
        return dyn.NoAdversary()
    if kind == "radial":
        return dyn.RadialPush(float(entry["alpha"]), float(entry["rho"]), float(entry["budget"]))
    if kind == "boundary":
        return dyn.BoundaryPush(float(entry.get("beta", 0.0)), float(entry["rho"]),
                                float(entry.get("budget", np.inf)))
    if kind == "pin1d":
        return dyn.Pin1D(float(entry["target"]), float(entry["budget"]))
    return dyn.Script(entry["disturbances"])


# --- core runs --------------------------------------------------------------------

def _from_log(log, losses, body, T, bound, checks, comparator_point=None):
    if comparator_point is None:
        best, point = best_fixed_state(losses, body, T)
    else:
        point = np.asarray(comparator_point, float)
        best = float(losses.totals(point[None, :], T)[0]) if T else 0.0
    comp = np.array([losses.value(t, point) for t in range(T)])
    realized = np.asarray(log.losses, float)
    regret = float(realized.sum() - best) if T else 0.0
    if bound is not None:
        checks["within_bound"] = bool(regret <= bound + 1e-9)
    d = body.dim
    return Outcome(log.array("targets").reshape(T, -1) if T else np.zeros((0, d)),
                   log.array("actions").reshape(T, -1) if T else np.zeros((0, 0)),
                   log.array("states").reshape(T, -1) if T else np.zeros((0, d)),
                   log.w_norms, realized, comp, log.array("residuals"), log.array("feasible"),
                   regret, bound, checks, dict(log.meta, comparator=point.tolist()), log.digest(), log)


def run_core(cfg: ScenarioConfig, seed):
    model = build_model(cfg.model)
    Y = model.state_space
    T = cfg.T
    losses = build_losses(cfg.losses, Y.dim, T, seed)
    adversary = build_adversary(cfg.adversary)
    cc = dict(cfg.controller_config)
    extra = {k: cc.pop(k) for k in ("K", "y_hat", "enforce_cap") if k in cc}
    if "x1" in cc:
        cc["x1"] = np.asarray(cc["x1"], float)
    cc.setdefault("L", losses.lipschitz)
    ctl = ControllerConfig(T=T, seed=int(seed), **cc)
    checks = {}
    name = cfg.controller
    if name == "oen_ftrl":
        log = oen_ftrl_run(model, losses, ctl, adversary)
        undisturbed = isinstance(adversary, dyn.NoAdversary)
        bound = log.meta["bound"] if undisturbed else None
        if undisturbed:
            checks["feasible"] = bool(all(log.feasible))
    elif name == "oen_ftrl_ap":
        log = oen_ftrl_ap_run(model, losses, adversary, ctl, enforce_cap=bool(extra.get("enforce_cap", True)))
        bound = log.meta["bound"] if not log.meta["cap_violations"] else None
    elif name == "oen_ftrl_uap":
        log = oen_ftrl_uap_run(model, losses, adversary, ctl)
        bound = log.meta["bound"]
    elif name == "probing_oco":
        A_true = np.asarray(cfg.model["A"], float) if cfg.model.get("family") == "linear" else None
        log = probing_oco_run(model, losses, ctl, A_true)
        bound = None
    elif name == "nested_bco":
        log = nested_bco_run(model, losses, ctl)
        bound = None
        checks["feasible"] = bool(all(log.feasible))
    elif name == "state_targeting":
        y_hat = extra.get("y_hat")
        if y_hat is None:
            raise ConfigError("controller_config.y_hat", "state targeting needs a target state")
        log = state_targeting_run(model, losses, np.asarray(y_hat, float), T)
        bound = None
    else:
        K = extra.get("K")
        if K is None:
            raise ConfigError("controller_config.K", "linear policy needs a gain matrix")
        log = linear_policy_run(model, losses, np.asarray(K, float), T)
        bound = None
    return _from_log(log, losses, Y, T, bound, checks)


# --- applications -----------------------------------------------------------------

APP_KEYS = {
    "pricing": {"family", "valuation", "alpha", "phi", "C0", "drift", "theta_range"},
    "steering": {"family", "n", "payoff", "drift_total", "alpha", "period"},
    "recommendations": {"family", "n", "k", "lam", "sigma", "theta", "theta_range", "variant", "eps", "phi"},
    "performative": {"family", "n", "theta", "kappa", "sigma", "mu", "samples"},
}


def _empty(dim, adim=0):
    z = np.zeros(0)
    return Outcome(np.zeros((0, dim)), np.zeros((0, adim)), np.zeros((0, dim)), z, z, z, z,
                   np.zeros(0, bool), 0.0)


def run_pricing(cfg, seed):
    from ..applications import pricing as pr

    entry = cfg.model
    T = cfg.T
    alpha = np.asarray(entry.get("alpha", [1.0, 1.0]), float)
    n = alpha.size
    phi = float(entry.get("phi", 0.5))
    kind = entry.get("valuation", "ces")
    if kind == "ces":
        v = pr.CES(alpha)
    elif kind == "cobb_douglas":
        v = pr.CobbDouglas(alpha)
    else:
        raise ConfigError("model.valuation", f"unknown valuation {kind!r}")
    if T == 0:
        return _empty(n, n)
    g = rng_for(seed, MODEL_STREAM)
    drifts = g.uniform(0, float(entry.get("drift", 0.1)), (T, n))
    lo, hi = entry.get("theta_range", [0.5, 1.0])
    th = g.uniform(lo, hi, T)
    body = pr.ValuationBody(v, n, phi)
    lam, beta = v.holder() or v.holder(body.radius)
    env = pr.PricingEnv(v, n, phi, pr.LinearCosts(float(entry.get("C0", 0.1)), phi, drifts), lo,
                        lambda t: th[t], lam=lam, beta=beta)
    log = pr.pricing_run(env, T, body)
    best, point = pr.stable_reserve_best(env, body, T)
    rewards = np.asarray(log.rewards)
    comp = np.array([pr.pricing_surrogate_reward(env, point, t) for t in range(T)])
    regret = float(best - rewards.sum())
    bound = log.meta["bound"]
    R = np.vstack(log.reserves)
    prev = np.vstack([np.zeros(n), R[:-1]])
    sur = np.asarray(log.surrogates)
    gap_ok = bool(np.all(np.abs(rewards - sur) <= 2 * log.meta["L"] * np.linalg.norm(R - prev, axis=1) ** beta + 1e-9))
    checks = {"within_bound": regret <= bound, "surrogate_gap": gap_ok}
    digest = _digest(R, np.vstack(log.prices), rewards)
    return Outcome(R, np.vstack(log.prices), R, np.zeros(T), -rewards, -comp, np.zeros(T), np.ones(T, bool),
                   regret, bound, checks, dict(log.meta, comparator=point.tolist()), digest, log)


def _drifting_rows(B0, n, T, total, period):
    """Row matrices rotated in the (e_1, e_2) plane with sum_t eps_t = total,
    where eps_t is the largest row change between rounds."""
    from ..applications.steering import rotation

    if total <= 0:
        return lambda t: B0, np.zeros(T)
    rownorm = float(np.linalg.norm(B0, axis=1).max())
    per = total / max(T - 1, 1)  # round 0 has no predecessor
    d = 2 * math.asin(per / (2 * rownorm))
    sgn = np.sign(np.sin(np.arange(T) * 2 * np.pi / period))
    sgn[sgn == 0] = 1
    ang = np.concatenate([[0.0], np.cumsum(sgn[1:] * d)])
    mats = [B0 @ rotation(n, a).T for a in ang]
    stream = lambda t: mats[max(t, 0)]
    eps = np.array([np.linalg.norm(stream(t) - stream(t - 1), axis=1).max() for t in range(T)])
    return stream, eps


def run_steering(cfg, seed):
    from ..applications import steering as st

    entry = cfg.model
    T = cfg.T
    n = int(entry.get("n", 3))
    payoff = np.asarray(entry.get("payoff", [1.0, 0.2, 0.5][:n] + [0.0] * max(0, n - 3)), float)
    B0 = st.cross_polytope_rows(n)
    m = B0.shape[0]
    A = np.tile(payoff, (m, 1))
    if T == 0:
        return _empty(n, m)
    Bs, eps = _drifting_rows(B0, n, T, float(entry.get("drift_total", 0.0)), float(entry.get("period", 2000)))
    env = st.SteeringEnv(lambda t: A, Bs, T)
    log = st.steering_run(env, T, alpha=float(entry.get("alpha", 0.5)))
    rewards = np.asarray(log.rewards)
    S = sum(env.A(t) for t in range(T))
    i, j = np.unravel_index(int(np.argmax(S)), S.shape)
    comp = np.array([env.A(t)[i, j] for t in range(T)])
    regret = float(comp.sum() - rewards.sum())
    inner, full = st.steering_bound(env, log, float(eps.sum()))
    states = np.vstack(log.states[1:] + [log.final_state])
    w = np.linalg.norm(np.vstack(log.w), axis=1)
    checks = {"within_bound": regret <= full,
              "learner_regret": st.learner_regret(env, log) <= 2 * st.R_B * env.L * math.sqrt(T)}
    if not eps.any():
        checks["average_reward"] = bool(rewards.mean() >= payoff.max() - 5 / math.sqrt(T))
    meta = dict(log.meta, inner_bound=inner, eps_sum=float(eps.sum()), learner_regret=st.learner_regret(env, log))
    digest = _digest(states, np.vstack(log.actions), rewards)
    return Outcome(np.vstack(log.targets), np.vstack(log.actions), states, w, -rewards, -comp, np.zeros(T),
                   np.ones(T, bool), regret, full, checks, meta, digest, log)


def run_recommendations(cfg, seed):
    from ..applications import recommendations as rc

    entry = cfg.model
    T = cfg.T
    n, k = int(entry.get("n", 10)), int(entry.get("k", 2))
    lam = float(entry.get("lam", (k - 1) / (n - 1) + 0.1))
    sigma = float(entry.get("sigma", 1.5))
    theta = float(entry.get("theta", 0.2))
    lo, hi = entry.get("theta_range", [theta, theta])
    g = rng_for(seed, MODEL_STREAM)
    th = g.uniform(lo, hi, max(T, 1))
    env = rc.RecommendationEnv(n, k, rc.scale_bounded_scores(lam, sigma, n, seed), lam, sigma, theta,
                               lambda t: th[t])
    variant = entry.get("variant", "eird_ball")
    body, rho = rc.rec_benchmark_body(env, variant, eps=entry.get("eps"), phi=entry.get("phi"))
    if T == 0:
        return _empty(n, len(env.menus))
    losses = build_losses(cfg.losses or {"kind": "adversarial_linear"}, n, T, seed)
    log, choices, bound = rc.rec_run(env, body, rho, losses, T)
    best, point = best_fixed_state(losses, body, T)
    real = np.array([losses.value(t, choices[t]) for t in range(T)])
    comp = np.array([losses.value(t, point) for t in range(T)])
    regret = float(real.sum() - best)
    checks = {"feasible": bool(all(log.feasible)), "within_bound": regret <= bound}
    return Outcome(log.array("targets"), log.array("actions"), log.array("states"), log.w_norms, real, comp,
                   log.array("residuals"), log.array("feasible"), regret, bound, checks,
                   dict(log.meta, comparator=point.tolist()), log.digest(), log)


def run_performative(cfg, seed):
    from ..applications import performative as pp

    entry = cfg.model
    T = cfg.T
    n = int(entry.get("n", 2))
    env = pp.PerformativeEnv(n, float(entry.get("theta", 0.3)), float(entry.get("kappa", 0.5)),
                             float(entry.get("sigma", 1.0)), entry.get("mu"), None,
                             int(entry.get("samples", 2000)), seed=int(seed))
    if T == 0:
        return _empty(n, n)
    lspec = dict(cfg.losses or {"kind": "logistic"})
    kind = lspec.pop("kind", "logistic")
    _check_keys(lspec, {"scale"}, "losses")
    s = float(lspec.get("scale", 0.5))
    g = rng_for(seed, LOSS_STREAM)
    if kind == "logistic":
        f = pp.LogisticPPLoss(g.normal(0, s, (T, n)), g.normal(0, s, (T, n)))
    elif kind == "linear":
        f = pp.LinearPPLoss(g.normal(0, s, (T, n)), g.normal(0, s, (T, n)))
    else:
        raise ConfigError("losses.kind", f"unknown performative loss {kind!r}")
    log, stream = pp.pp_run(env, f, T)
    if kind == "linear":
        # the surrogate is linear in y: <c, y + mean xi> + <d, y / sigma>
        xi = env.xi.mean(axis=0)
        lin = LinearLoss(f.c[:T] + f.d[:T] / env.sigma, (f.c[:T] @ xi))
        best, point = best_fixed_state(lin, env.Y, T)
    else:
        best, point = best_fixed_state(stream, env.Y, T, resolution=0.2, refine_iters=100)
    comp = np.array([stream.value(t, point) for t in range(T)])
    realized = np.asarray(log.losses)
    regret = float(realized.sum() - best)
    bound = log.meta["pp_bound"]
    gaps, gap_bounds = pp.pp_true_loss_gap(env, f, log)
    checks = {"feasible": bool(all(log.feasible)), "within_bound": regret <= bound,
              "true_loss_gap": bool(np.all(gaps <= gap_bounds))}
    return Outcome(log.array("targets"), log.array("actions"), log.array("states"), log.w_norms, realized, comp,
                   log.array("residuals"), log.array("feasible"), regret, bound, checks,
                   dict(log.meta, comparator=np.asarray(point).tolist()), log.digest(), log)


APP_RUNNERS = {"pricing": run_pricing, "steering": run_steering, "recommendations": run_recommendations,
               "performative": run_performative}


def run_application(cfg, seed):
    fam = _need(cfg.model, "family", "model")
    if fam not in APP_RUNNERS:
        raise ConfigError("model.family", f"unknown application {fam!r}")
    _check_keys(cfg.model, APP_KEYS[fam], "model")
    return APP_RUNNERS[fam](cfg, seed)


def _digest(*arrays):
    import hashlib

    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(np.asarray(a, float)).tobytes())
    return h.hexdigest()


# --- presets ----------------------------------------------------------------------

def _p(description, **kw):
    kw.setdefault("seeds", [0])
    return description, kw


PRESETS = dict([
    ("rotating-ball", _p(
        "Nested FTRL on the rotating-field ball, distance loss to (0.5, 0)",
        scenario="rotating-ball", model={"family": "field", "rho": 0.5, "field": "rotating"},
        controller="oen_ftrl", controller_config={"gamma": 1.0, "G": 0.5},
        losses={"kind": "distance", "anchor": [0.5, 0.0]}, T=1024)),
    ("damped-ball", _p(
        "Nested FTRL on damped linear dynamics over the unit ball, drifting distance loss",
        scenario="damped-ball", model={"family": "affine_field", "rho": 0.5, "gain": 0.25},
        controller="oen_ftrl", losses={"kind": "drifting_distance", "radius": 0.3, "period": 400}, T=1024)),
    ("bandit-ball", _p(
        "Bandit nested controller on the isotropic ball, rho = 1",
        scenario="bandit-ball", model={"family": "field", "rho": 1.0, "field": "isotropic"},
        controller="nested_bco", losses={"kind": "distance", "anchor": [0.2, 0.1], "scale": 0.5}, T=4096,
        seeds=[0, 1, 2])),
    ("radial-push", _p(
        "Disturbance-tolerant controller against a radial push with budget 5",
        scenario="radial-push", model={"family": "field", "rho": 0.5, "field": "isotropic"},
        controller="oen_ftrl_ap", controller_config={"alpha": 0.5},
        losses={"kind": "distance", "anchor": [0.0, 0.0]},
        adversary={"kind": "radial", "alpha": 0.5, "rho": 0.5, "budget": 5.0}, T=1000)),
    ("boundary-push", _p(
        "Unbudgeted push toward the boundary; regret grows linearly",
        scenario="boundary-push", model={"family": "field", "rho": 0.5, "field": "isotropic"},
        controller="oen_ftrl", losses={"kind": "distance", "anchor": [0.0, 0.0]},
        adversary={"kind": "boundary", "beta": 0.0, "rho": 0.5}, T=500)),
    ("pinned-interval", _p(
        "Unbounded-disturbance controller on [-1, 1] while an adversary pins the state at -1",
        scenario="pinned-interval", model={"family": "interval", "R": 1.0, "rho": 0.25},
        controller="oen_ftrl_uap", controller_config={"alpha": 0.1},
        losses={"kind": "linear", "coef": [-1.0], "offset": 1.0},
        adversary={"kind": "pin1d", "target": -1.0, "budget": 10.0}, T=1000)),
    ("reach-target", _p(
        "State-targeting policy steering to p = (0.5, 0)",
        scenario="reach-target", model={"family": "targeting", "n": 2}, controller="state_targeting",
        controller_config={"y_hat": [0.5, 0.0]},
        losses={"kind": "squared", "anchor": [0.5, 0.0], "lipschitz": 3.0}, T=1000)),
    ("linear-feedback", _p(
        "Linear feedback x = -K y from the origin never moves",
        scenario="linear-feedback", model={"family": "targeting", "n": 2}, controller="linear_policy",
        controller_config={"K": [[1.0, 0.3], [-0.2, 0.7]]},
        losses={"kind": "squared", "anchor": [0.5, 0.0], "lipschitz": 3.0}, T=1000)),
    ("probing-diagonal", _p(
        "Probing controller learning constant diagonal dynamics",
        scenario="probing-diagonal",
        model={"family": "linear", "A": [[0.5, 0.0], [0.0, 1.0]], "rho": 0.5, "mode": "strong",
               "state": {"type": "ball", "dim": 2, "radius": 1.0},
               "action": {"type": "ball", "dim": 2, "radius": 1.0}},
        controller="probing_oco", controller_config={"probe_eps": 0.01, "x1": [0.0, 0.0]},
        losses={"kind": "distance", "anchor": [0.5, 0.2]}, T=1024)),
    ("forced-jump", _p(
        "Dynamics that cannot hold the state near the origin",
        scenario="forced-jump", model={"family": "jump", "alpha": 0.1, "beta": 0.3},
        controller="state_targeting", controller_config={"y_hat": [0.0, 0.0]},
        losses={"kind": "distance", "anchor": [0.0, 0.0]}, T=100)),
    ("pp-linear-map", _p(
        "Performative prediction with linear losses and a mixing data distribution",
        scenario="pp-linear-map", model={"family": "performative", "n": 2, "theta": 0.3, "kappa": 0.5,
                                         "mu": [0.1, 0.0], "samples": 2000},
        controller="application", losses={"kind": "linear"}, T=300)),
    ("pp-logistic", _p(
        "Performative prediction with logistic losses",
        scenario="pp-logistic", model={"family": "performative", "n": 2, "theta": 0.3, "kappa": 0.5,
                                       "mu": [0.1, 0.0], "samples": 2000},
        controller="application", losses={"kind": "logistic"}, T=300)),
    ("rec-eird", _p(
        "Recommendations over the certified realizable ball, n = 10, k = 2",
        scenario="rec-eird", model={"family": "recommendations", "n": 10, "k": 2, "lam": 1 / 9 + 0.1,
                                    "sigma": 1.5, "theta": 0.2, "theta_range": [0.2, 0.6],
                                    "variant": "eird_ball", "eps": 0.1},
        controller="application", losses={"kind": "adversarial_linear"}, T=1000)),
    ("rec-smoothed", _p(
        "Recommendations over the smoothed simplex with scale-bounded scores",
        scenario="rec-smoothed", model={"family": "recommendations", "n": 6, "k": 2, "lam": 0.3,
                                        "sigma": 1.2, "theta": 0.3, "variant": "smoothed_simplex",
                                        "phi": 0.5},
        controller="application", losses={"kind": "adversarial_linear"}, T=500)),
    ("pricing-ces", _p(
        "Adaptive pricing, square-root CES valuation",
        scenario="pricing-ces", model={"family": "pricing", "valuation": "ces", "alpha": [1.0, 1.0],
                                       "phi": 0.5, "C0": 0.1, "drift": 0.1, "theta_range": [0.5, 1.0]},
        controller="application", T=4096)),
    ("pricing-cobbdouglas", _p(
        "Adaptive pricing, Cobb-Douglas valuation",
        scenario="pricing-cobbdouglas", model={"family": "pricing", "valuation": "cobb_douglas",
                                               "alpha": [0.3, 0.3], "phi": 0.5, "C0": 0.1, "drift": 0.1,
                                               "theta_range": [0.5, 1.0]},
        controller="application", T=4096)),
    ("steering-fixed-game", _p(
        "Steering a gradient-descent learner in a fixed game",
        scenario="steering-fixed-game", model={"family": "steering", "n": 3, "payoff": [1.0, 0.2, 0.5]},
        controller="application", T=10000)),
    ("steering-drifting-game", _p(
        "Steering while the learner's payoff rows rotate, total drift 3",
        scenario="steering-drifting-game", model={"family": "steering", "n": 3, "payoff": [1.0, 0.2, 0.5],
                                                  "drift_total": 3.0},
        controller="application", T=10000)),
])


def list_scenarios():
    return [(name, desc) for name, (desc, _) in PRESETS.items()]


def preset(name, **overrides):
    if name not in PRESETS:
        raise ConfigError("scenario", f"unknown preset {name!r}")
    d = copy.deepcopy(PRESETS[name][1])
    d.update(overrides)
    return ScenarioConfig.from_dict(d)


def execute(cfg: ScenarioConfig, seed):
    """Run one seed. Parameter combinations a controller refuses (for example a
    horizon too short for its calibration) surface as ConfigError."""
    try:
        if cfg.controller == "application":
            return run_application(cfg, seed)
        return run_core(cfg, seed)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(cfg.controller, str(exc)) from exc
