"""Nested controllers: an outer OCO learner picks target states, an inner
solver finds actions that reach them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import RESIDUAL_TOL, NoAdversary, solve_action, solve_action_linear
from .geometry import Contracted, TOL
from .oco import Fkm, Ftrl


@dataclass
class ControllerConfig:
    T: int
    L: float = 1.0
    rho: Optional[float] = None  # defaults to model.rho
    alpha: float = 0.1
    gamma: float = 1.0
    G: Optional[float] = None  # defaults to gamma/2 * R^2
    eta: Optional[float] = None  # overrides the calibrated step size
    probe_eps: float = 0.01
    seed: int = 0
    x1: Optional[np.ndarray] = None  # near-stabilizing action for probing

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("horizon must be nonnegative")
        if self.L <= 0 or self.gamma <= 0:
            raise ValueError("L and gamma must be positive")


class TrajectoryLog:
    """Append-only per-round record of a controller run."""

    fields = ("targets", "actions", "undisturbed", "disturbances", "states",
              "losses", "residuals", "feasible")

    def __init__(self, y0, name=""):
        self.y0 = np.asarray(y0, float).copy()
        self.name = name
        self.meta = {}
        for f in self.fields:
            setattr(self, f, [])
        self.shadow = []

    def append(self, target, action, undisturbed, w, state, loss, residual, feasible):
        self.targets.append(np.asarray(target, float).copy())
        self.actions.append(np.atleast_1d(np.asarray(action, float)).copy())
        self.undisturbed.append(np.asarray(undisturbed, float).copy())
        self.disturbances.append(np.asarray(w, float).copy())
        self.states.append(np.asarray(state, float).copy())
        self.losses.append(float(loss))
        self.residuals.append(float(residual))
        self.feasible.append(bool(feasible))

    def __len__(self):
        return len(self.states)

    def array(self, name):
        vals = getattr(self, name)
        if name in ("losses", "residuals"):
            return np.asarray(vals, float)
        if name == "feasible":
            return np.asarray(vals, bool)
        if not vals:
            return np.zeros((0, self.y0.shape[0]))
        return np.vstack(vals)

    @property
    def state_path(self):
        """y_0, y_1, ..., y_T."""
        return np.vstack([self.y0[None, :], self.array("states")])

    @property
    def total_loss(self):
        return float(np.sum(self.losses))

    @property
    def w_norms(self):
        return np.linalg.norm(self.array("disturbances"), axis=1) if len(self) else np.zeros(0)

    def digest(self):
        import hashlib

        h = hashlib.sha256()
        for f in self.fields:
            h.update(np.ascontiguousarray(self.array(f)).tobytes())
        return h.hexdigest()


def _resolve(model, cfg):
    Y = model.state_space
    rho = model.rho if cfg.rho is None else float(cfg.rho)
    G = 0.5 * cfg.gamma * Y.R ** 2 if cfg.G is None else float(cfg.G)
    return Y, rho, G


def oen_ftrl_params(r, R, rho, L, gamma, G, T):
    eta = math.sqrt(G * gamma / ((1.0 + R / (r * rho)) * T * L ** 2))
    delta = eta * L / (r * rho * gamma)
    bound = 2.0 * L * math.sqrt((1.0 + R / (r * rho)) * T * G / gamma)
    return eta, delta, bound


def _play(model, y_prev, target, t):
    x, _ = solve_action(model, y_prev, target, t)
    y_und = model.step(x, y_prev, t)
    return x, y_und, float(np.linalg.norm(y_und - target))


def oen_ftrl_run(model, losses, cfg, adversary=None, eta=None):
    """FTRL over the contracted state space; each target is reached in one round.

    A solver miss shows up in the residual column and, without an adversary,
    flags the run as failed.
    """
    Y, rho, G = _resolve(model, cfg)
    eta_c, delta, bound = oen_ftrl_params(Y.r, Y.R, rho, cfg.L, cfg.gamma, G, max(cfg.T, 1))
    eta = cfg.eta if eta is None else eta
    if eta is not None:
        eta_c = float(eta)
        delta = eta_c * cfg.L / (Y.r * rho * cfg.gamma)
    if delta >= 1:
        raise ValueError(f"contraction delta={delta:.3g} >= 1; horizon too short for rho")
    ftrl = Ftrl(Contracted(Y, delta), eta_c, cfg.gamma, G)
    adversary = adversary or NoAdversary()
    y = Y.center.copy()
    log = TrajectoryLog(y, "oen_ftrl")
    log.meta.update(eta=eta_c, delta=delta, bound=bound, rho=rho, G=G, step_cap=Y.r * delta * rho,
                    ftrl_step=eta_c * cfg.L / cfg.gamma)
    for t in range(cfg.T):
        target = ftrl.next_point()
        x, y_und, res = _play(model, y, target, t)
        w = adversary.next(y_und, Y)
        y_new = y_und + w
        ok = (np.linalg.norm(target - y) <= Y.r * delta * rho + 1e-12) and res <= RESIDUAL_TOL
        log.append(target, x, y_und, w, y_new, losses.value(t, y_new), res, ok)
        ftrl.update(losses.grad(t, y_new))
        y = y_new
    log.meta["failed"] = not all(log.feasible) and isinstance(adversary, NoAdversary)
    return log


def oen_ftrl_ap_run(model, losses, adversary, cfg, enforce_cap=True):
    """Shadow-trajectory controller tolerating disturbances up to
    (rho - alpha rho)/(1 + rho) * pi(undisturbed state) per round.

    With ``enforce_cap=False`` oversized disturbances are recorded in
    ``meta["cap_violations"]`` instead of aborting; lower-bound demos use this.
    """
    Y, rho, G = _resolve(model, cfg)
    a = cfg.alpha
    if not 0 < a < 1:
        raise ValueError("alpha must lie in (0, 1)")
    eta, delta, inner = oen_ftrl_params(Y.r, Y.R, a * rho, cfg.L, cfg.gamma, G, max(cfg.T, 1))
    if cfg.eta is not None:
        eta = float(cfg.eta)
        delta = eta * cfg.L / (Y.r * a * rho * cfg.gamma)
    if delta >= 1:
        raise ValueError(f"contraction delta={delta:.3g} >= 1; horizon too short")
    ftrl = Ftrl(Contracted(Y, delta), eta, cfg.gamma, G)
    adversary = adversary or NoAdversary()
    cap_factor = (rho - a * rho) / (1.0 + rho)
    y = Y.center.copy()
    log = TrajectoryLog(y, "oen_ftrl_ap")
    log.meta.update(eta=eta, delta=delta, inner_bound=inner, rho=rho, alpha=a, G=G)
    violations = 0
    for t in range(cfg.T):
        shadow = ftrl.next_point()
        x, y_und, res = _play(model, y, shadow, t)
        w = adversary.next(y_und, Y)
        cap = cap_factor * Y.boundary_distance(Y.project(y_und))
        if np.linalg.norm(w) > cap + 1e-12:
            violations += 1
            if enforce_cap:
                raise RuntimeError(f"round {t}: disturbance {np.linalg.norm(w):.3g} exceeds cap {cap:.3g}")
        y_new = y_und + w
        log.append(shadow, x, y_und, w, y_new, losses.value(t, y_new), res, res <= RESIDUAL_TOL)
        log.shadow.append(shadow)
        ftrl.update(losses.grad(t, shadow))
        y = y_new
    E = float(np.sum(log.w_norms)) if len(log) else 0.0
    log.meta.update(E=E, bound=inner + cfg.L * E, cap_violations=violations)
    return log


def oen_ftrl_uap_run(model, losses, adversary, cfg):
    """FTRL over the full state space; targets farther than rho are clipped to
    the reachable ball. Requires eta L / gamma <= rho alpha."""
    Y, rho, G = _resolve(model, cfg)
    a = cfg.alpha
    T = max(cfg.T, 1)
    eta = math.sqrt(G * cfg.gamma / (T * cfg.L ** 2)) if cfg.eta is None else float(cfg.eta)
    if eta * cfg.L / cfg.gamma > rho * a + 1e-15:
        raise ValueError("horizon too short: eta L / gamma exceeds rho * alpha")
    ftrl = Ftrl(Y, eta, cfg.gamma, G)
    adversary = adversary or NoAdversary()
    y = Y.center.copy()
    log = TrajectoryLog(y, "oen_ftrl_uap")
    log.meta.update(eta=eta, rho=rho, alpha=a, G=G)
    reached = []
    for t in range(cfg.T):
        shadow = ftrl.next_point()
        d = shadow - y
        nd = np.linalg.norm(d)
        aim = shadow if nd <= rho else y + d * (rho / nd)
        x, y_und, res = _play(model, y, aim, t)
        reached.append(nd <= rho + 1e-12)
        w = adversary.next(y_und, Y)
        y_new = y_und + w
        log.append(aim, x, y_und, w, y_new, losses.value(t, y_new), res, res <= RESIDUAL_TOL)
        log.shadow.append(shadow)
        ftrl.update(losses.grad(t, shadow))
        y = y_new
    E = float(np.sum(log.w_norms)) if len(log) else 0.0
    # distance from state to shadow is at most the diameter, so R here is half of it
    R = Y.R
    log.meta.update(E=E, reached=reached, bound=2 * math.sqrt(T * G * cfg.L ** 2 / cfg.gamma)
                    + 2 * cfg.L * R * E / ((1 - a) * rho))
    return log


def _fit_affine(X, D, ridge=1e-10):
    """Least-squares fit D ~ A x + b over rows; returns (A, b)."""
    Z = np.hstack([X, np.ones((X.shape[0], 1))])
    # ridge acts on unit-norm columns so tiny probe offsets are not swamped by it
    scale = np.linalg.norm(Z, axis=0)
    scale[scale == 0] = 1.0
    Zs = np.vstack([Z / scale, math.sqrt(ridge) * np.eye(Z.shape[1])])
    Ds = np.vstack([D, np.zeros((Z.shape[1], D.shape[1]))])
    coef = np.linalg.lstsq(Zs, Ds, rcond=None)[0] / scale[:, None]
    return coef[:-1].T, coef[-1]


def probing_oco_run(model, losses, cfg, A_true=None):
    """Learns action-linear dynamics y' - y ~ A x + b from probes while
    running the disturbance-tolerant controller one inner step per 2n+1 rounds."""
    if cfg.x1 is None:
        raise ValueError("probing needs a near-stabilizing action x1")
    Y, X = model.state_space, model.action_space
    n = Y.dim
    if X.dim != n:
        raise ValueError("probing assumes dim X = dim Y")
    rho = model.rho if cfg.rho is None else float(cfg.rho)
    G = 0.5 * cfg.gamma * Y.R ** 2 if cfg.G is None else float(cfg.G)
    eps, a = float(cfg.probe_eps), cfg.alpha
    block = 2 * n + 1
    T_inner = max(cfg.T // block - 1, 1)
    eta, delta, inner = oen_ftrl_params(Y.r, Y.R, a * rho, cfg.L, cfg.gamma, G, T_inner)
    if cfg.eta is not None:
        eta = float(cfg.eta)
        delta = eta * cfg.L / (Y.r * a * rho * cfg.gamma)
    if delta >= 1:
        raise ValueError(f"contraction delta={delta:.3g} >= 1; horizon too short")
    ftrl = Ftrl(Contracted(Y, delta), eta, cfg.gamma, G)
    x1 = np.asarray(cfg.x1, float)
    I = np.eye(n)
    y = Y.center.copy()
    log = TrajectoryLog(y, "probing_oco")
    xs, ds = [], []
    fit_errors = []
    t = 0

    def record(target, x):
        nonlocal y, t
        y_new = model.step(x, y, t)
        xs.append(x)
        ds.append(y_new - y)
        log.append(target, x, y_new, y_new - target, y_new, losses.value(t, y_new), 0.0, True)
        y = y_new
        t += 1

    # estimation phase
    for x in [x1] + [x1 + s * eps * I[i] for i in range(n) for s in (1, -1)]:
        if t >= cfg.T:
            break
        record(y, X.project(x))
    A_hat, b_hat = _fit_affine(np.array(xs[-block:]), np.array(ds[-block:]))
    if A_true is not None:
        fit_errors.append(float(np.linalg.norm(A_hat - A_true)))

    def go(target):
        x, _ = solve_action_linear(A_hat, b_hat + y, target, X)
        record(target, x)

    while t < cfg.T:
        shadow = ftrl.next_point()
        base = y.copy()
        grads = []
        seq = [base] + [base + (j / (2 * n)) * (shadow - base) + s * eps * I[i]
                        for i in range(n) for j, s in ((2 * i + 1, 1), (2 * i + 2, -1))]
        for tgt in seq:
            if t >= cfg.T:
                break
            grads.append(losses.grad(t, shadow))
            go(Y.project(tgt))
        log.shadow.append(shadow)
        ftrl.update(np.mean(grads, axis=0))
        if len(xs) >= block:
            A_hat, b_hat = _fit_affine(np.array(xs[-block:]), np.array(ds[-block:]))
            if A_true is not None:
                fit_errors.append(float(np.linalg.norm(A_hat - A_true)))
    log.meta.update(eta=eta, delta=delta, inner_bound=inner, A_hat=A_hat, b_hat=b_hat,
                    fit_errors=fit_errors, block=block)
    return log


def nested_bco_params(n, r, R, rho, L, T):
    probe = T ** -0.25
    delta = 4.0 / (r * rho * T ** 0.25)
    eta = R / (2.0 * n * r * L * T ** 0.75)
    return probe, delta, eta


def nested_bco_run(model, losses, cfg):
    """Bandit controller: FKM over the contracted state space, seeing only f_t(y_t)."""
    Y = model.state_space
    rho = model.rho if cfg.rho is None else float(cfg.rho)
    n = Y.dim if not getattr(Y, "hull", False) else Y.dim - 1
    probe, delta, eta = nested_bco_params(n, Y.r, Y.R, rho, cfg.L, max(cfg.T, 1))
    if delta >= 1:
        raise ValueError(f"contraction delta={delta:.3g} >= 1; horizon too short for rho")
    if cfg.eta is not None:
        eta = float(cfg.eta)
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    K = Contracted(Y, delta)
    fkm = Fkm(K, eta, probe, rng)
    y = Y.center.copy()
    log = TrajectoryLog(y, "nested_bco")
    log.meta.update(probe=probe, delta=delta, eta=eta, rho=rho,
                    step_bound=fkm.step_bound(cfg.L), step_cap=Y.r * delta * rho)
    target = fkm.point
    for t in range(cfg.T):
        x, y_und, res = _play(model, y, target, t)
        ok = np.linalg.norm(target - y) <= Y.r * delta * rho + 1e-12 and res <= RESIDUAL_TOL
        loss = losses.value(t, y_und)
        log.append(target, x, y_und, np.zeros_like(y_und), y_und, loss, res, ok)
        y = y_und
        target = fkm.step(loss)
    return log


def state_targeting_policy_step(model, y_prev, target_body, y_hat, t=0, iters=60):
    """Action moving the next state as close to y_hat as possible while staying
    in ``target_body``."""
    y_prev = np.asarray(y_prev, float)
    x, _ = solve_action(model, y_prev, y_hat, t)
    if target_body.contains(model.step(x, y_prev, t)):
        return x
    # fall back to the farthest exactly reachable point on the segment to y_hat
    lo, hi = 0.0, 1.0
    best = solve_action(model, y_prev, y_prev, t)[0]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        aim = y_prev + mid * (y_hat - y_prev)
        xm, res = solve_action(model, y_prev, aim, t)
        if res <= RESIDUAL_TOL and target_body.contains(model.step(xm, y_prev, t)):
            lo, best = mid, xm
        else:
            hi = mid
    return best


class _Inset:
    """{y in Y : pi(y) >= margin}, the default target class of state-targeting policies."""

    def __init__(self, Y, margin):
        self.Y, self.margin = Y, margin

    def contains(self, z, tol=TOL):
        return self.Y.contains(z, tol) and self.Y.boundary_distance(self.Y.project(z)) >= self.margin - tol


def default_target_body(model, T):
    rho = model.rho
    return _Inset(model.state_space, (T * rho) ** -0.5 if T > 0 else 0.0)


def state_targeting_run(model, losses, y_hat, T, target_body=None):
    Y = model.state_space
    target_body = target_body or default_target_body(model, T)
    y = Y.center.copy()
    y_hat = np.asarray(y_hat, float)
    log = TrajectoryLog(y, "state_targeting")
    for t in range(T):
        x = state_targeting_policy_step(model, y, target_body, y_hat, t)
        y_new = model.step(x, y, t)
        log.append(y_hat, x, y_new, np.zeros_like(y), y_new, losses.value(t, y_new),
                   float(np.linalg.norm(y_new - y_hat)), True)
        y = y_new
    return log


def linear_policy_run(model, losses, K, T):
    Y, X = model.state_space, model.action_space
    K = np.atleast_2d(np.asarray(K, float))
    y = Y.center.copy()
    log = TrajectoryLog(y, "linear_policy")
    for t in range(T):
        x = X.project(-K @ y)
        y_new = model.step(x, y, t)
        log.append(y_new, x, y_new, np.zeros_like(y), y_new, losses.value(t, y_new), 0.0, True)
        y = y_new
    return log
