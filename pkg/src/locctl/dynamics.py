"""Dynamics models, action solvers, instance families and disturbance adversaries."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq, lsq_linear, nnls

from .geometry import Ball, Box, Simplex, TOL

RESIDUAL_TOL = 1e-8


@dataclass
class DynamicsModel:
    state_space: object
    action_space: object
    rho: float
    evaluator: Callable  # (x, y, t) -> y'
    mode: str = "weak"
    time_varying: bool = False
    local_form: Optional[Callable] = None  # (y, t) -> (A_y, b_y)
    q_bound: tuple = (0.0, 0.0)
    solver: Optional[Callable] = None  # (y_prev, target, t) -> (x, residual)
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("weak", "strong"):
            raise ValueError("mode must be 'weak' or 'strong'")
        if self.rho <= 0:
            raise ValueError("rho must be positive")

    def step(self, x, y, t=0):
        return self.evaluator(np.asarray(x, float), np.asarray(y, float), t)

    def reach_radius(self, y):
        """Radius of the certified reachable ball around y."""
        if self.mode == "strong":
            return self.rho
        return self.rho * self.state_space.boundary_distance(y)


# --- constrained least squares --------------------------------------------------

def _ls_ball(A, d, center, radius):
    """min ||A x - d|| over ||x - center|| <= radius (exact trust-region solve)."""
    d = d - A @ center
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    c = U.T @ d
    pos = s > s[0] * 1e-13 if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    z0 = Vt[pos].T @ (c[pos] / s[pos])
    if np.linalg.norm(z0) <= radius:
        return center + z0

    def norm_gap(lam):
        return np.linalg.norm(s * c / (s ** 2 + lam)) - radius

    hi = max(s[0] * np.linalg.norm(c) / radius, 1e-300)
    while norm_gap(hi) > 0:
        hi *= 2.0
    lam = brentq(norm_gap, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    z = Vt.T @ (s * c / (s ** 2 + lam))
    nz = np.linalg.norm(z)
    if nz > radius:
        z *= radius / nz
    return center + z


def _ls_simplex(A, d):
    """min ||A x - d|| over the simplex via nonnegative least squares with a
    heavily weighted sum-to-one row."""
    m = A.shape[1]
    w = 1e4 * max(1.0, np.abs(A).max())
    M = np.vstack([A, w * np.ones((1, m))])
    rhs = np.concatenate([d, [w]])
    x, _ = nnls(M, rhs, maxiter=50 * m)
    s = x.sum()
    return x / s if s > 0 else np.full(m, 1.0 / m)


def _ls_generic(A, d, X, iters=5000):
    x = X.project(X.center)
    Lip = max(np.linalg.norm(A, 2) ** 2, 1e-12)
    z, t = x.copy(), 1.0
    for _ in range(iters):
        x_new = X.project(z - (A.T @ (A @ z - d)) / Lip)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        z = x_new + ((t - 1) / t_new) * (x_new - x)
        if np.linalg.norm(x_new - x) < 1e-15:
            x = x_new
            break
        x, t = x_new, t_new
    return x


def solve_action_linear(A, b, target, X):
    """x in X minimizing ||A x + b - target||; returns (x, residual)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = np.asarray(target, float) - np.asarray(b, float)
    if isinstance(X, Ball) and not X.hull:
        x = _ls_ball(A, d, X.center, X.radius)
    elif isinstance(X, Box):
        if A.shape[0] == A.shape[1] and np.linalg.matrix_rank(A) == A.shape[0]:
            x = np.linalg.solve(A, d)
            if not X.contains(x, 0.0):
                x = lsq_linear(A, d, bounds=(X.lo, X.hi), method="bvls", tol=1e-14).x
        else:
            x = lsq_linear(A, d, bounds=(X.lo, X.hi), method="bvls", tol=1e-14).x
        x = X.project(x)
    elif isinstance(X, Simplex):
        x = _ls_simplex(A, d)
    else:
        x = _ls_generic(A, d, X)
    return x, float(np.linalg.norm(A @ x - d))


def _fd_grad(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def nonconvex_oracle(model, y_prev, target, t=0, starts=16, iters=200, seed=0):
    """Multistart projected gradient on ||D(x, y_prev) - target||^2."""
    if model.local_form is not None:
        A, b = model.local_form(np.asarray(y_prev, float), t)
        return solve_action_linear(A, b, target, model.action_space)
    X = model.action_space
    target = np.asarray(target, float)

    def obj(x):
        r = model.step(x, y_prev, t) - target
        return float(r @ r)

    rng = np.random.default_rng(seed)
    lo, hi = X.bounding_box()
    inits = [X.project(X.center)] + [X.project(rng.uniform(lo, hi)) for _ in range(starts - 1)]
    best_x, best_f = inits[0], obj(inits[0])
    for x in inits:
        f = obj(x)
        step = 1.0
        for _ in range(iters):
            if f <= 1e-24:
                break
            g = _fd_grad(obj, x)
            if not np.any(g):
                break
            while step > 1e-12:
                xn = X.project(x - step * g)
                fn = obj(xn)
                if fn < f - 1e-4 * step * float(g @ g) or (fn < f and step < 1e-6):
                    break
                step *= 0.5
            else:
                break
            if f - fn < 1e-18:
                x, f = xn, fn
                break
            x, f = xn, fn
            step = min(step * 2.0, 1.0)
        if f < best_f:
            best_x, best_f = x, f
        if best_f <= 1e-24:
            break
    if best_f > RESIDUAL_TOL ** 2 and X.dim <= 3:
        axes = [np.linspace(lo[i], hi[i], 21) for i in range(X.dim)]
        grid = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
        for x in grid:
            if X.contains(x):
                f = obj(x)
                if f < best_f:
                    best_x, best_f = x, f
    return best_x, float(np.sqrt(best_f))


def solve_action(model, y_prev, target, t=0):
    if model.solver is not None:
        return model.solver(np.asarray(y_prev, float), np.asarray(target, float), t)
    return nonconvex_oracle(model, y_prev, target, t)


# --- instance families ------------------------------------------------------------

def _check_field(Y, rho, check, samples, seed):
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        u = rng.standard_normal(Y.dim)
        u /= np.linalg.norm(u)
        y = Y.center + u * Y.R * rng.uniform() ** (1.0 / Y.dim)
        y = Y.project(y)
        if not check(y, Y.boundary_distance(y)):
            raise ValueError(f"controllability condition fails at y={y}")


def make_field_model(n, rho, A_field, q_scale=0.0, q_power=1.0, check_samples=200, seed=0):
    """y' = Proj_Y(y + A_y x [+ q_y(x)]) on the unit ball, X the unit ball.

    The optional residual q_y(x) = q_scale * ||A_y x||^(1 + q_power) * e_1 makes the
    model locally action-linear around the stabilizer x* = 0.
    """
    Y = Ball(np.zeros(n), 1.0)
    X = Ball(np.zeros(n), 1.0)

    def check(y, pi):
        s = np.linalg.svd(np.atleast_2d(A_field(y)), compute_uv=False)
        return s.min() >= pi * rho - 1e-12

    _check_field(Y, rho, check, check_samples, seed)
    e1 = np.eye(n)[0]

    def evaluator(x, y, t=0):
        step = A_field(y) @ x
        if q_scale:
            step = step + q_scale * np.linalg.norm(step) ** (1.0 + q_power) * e1
        return Y.project(y + step)

    def local_form(y, t=0):
        return np.atleast_2d(A_field(y)), y

    return DynamicsModel(Y, X, rho, evaluator, "weak", False, local_form,
                         (q_scale, q_power), name="field")


def make_affine_field_model(n, rho, K_field, A_field, c, R=1.0, check_samples=200, seed=0):
    """y' = Proj_Y(K_y y + A_y x) with Y = Ball(0, R), X = Ball(0, cR).

    The sampled certification uses c R sigma_min(A_y) >= R ||K_y - I|| + pi(y) rho.
    """
    Y = Ball(np.zeros(n), R)
    X = Ball(np.zeros(n), c * R)

    def check(y, pi):
        A = np.atleast_2d(A_field(y))
        M = np.atleast_2d(K_field(y)) - np.eye(n)
        smin = np.linalg.svd(A, compute_uv=False).min()
        return c * R * smin >= R * np.linalg.norm(M, 2) + pi * rho - 1e-12

    _check_field(Y, rho, check, check_samples, seed)

    def evaluator(x, y, t=0):
        return Y.project(np.atleast_2d(K_field(y)) @ y + np.atleast_2d(A_field(y)) @ x)

    def local_form(y, t=0):
        return np.atleast_2d(A_field(y)), np.atleast_2d(K_field(y)) @ y

    return DynamicsModel(Y, X, rho, evaluator, "weak", False, local_form, name="affine_field")


def make_linear_model(A, B, Y, X, rho, mode="weak", b=None):
    """y' = Proj_Y(B y + A x + b)."""
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    b = np.zeros(Y.dim) if b is None else np.asarray(b, float)

    def evaluator(x, y, t=0):
        return Y.project(B @ y + A @ x + b)

    def local_form(y, t=0):
        return A, B @ y + b

    return DynamicsModel(Y, X, rho, evaluator, mode, False, local_form, name="linear")


def make_interval_model(R, rho):
    """Strongly rho-controllable scalar dynamics y' = clip(y + rho x) on [-R, R]."""
    Y = Box([-R], [R])
    X = Box([-1.0], [1.0])
    return make_linear_model([[rho]], [[1.0]], Y, X, rho, mode="strong")


def make_prop1_instance(alpha, beta, dim=2):
    """Dynamics that cannot hold the state near the designated point 0.

    Inside B_alpha(0) every action produces a jump of length beta away from the
    current state; elsewhere y' = Proj_Y(y + x). Y = X = unit ball.
    """
    if alpha > beta / 2:
        raise ValueError("requires alpha <= beta / 2")
    if alpha + beta > 1:
        raise ValueError("requires alpha + beta <= 1 so jumps stay in the unit ball")
    Y = Ball(np.zeros(dim), 1.0)
    X = Ball(np.zeros(dim), 1.0)
    e1 = np.eye(dim)[0]

    def evaluator(x, y, t=0):
        if np.linalg.norm(y) <= alpha:
            n = np.linalg.norm(x)
            u = x / n if n > 1e-12 else e1
            return Y.project(y + beta * u)
        return Y.project(y + x)

    return DynamicsModel(Y, X, 1.0, evaluator, "weak", False, None,
                         name="prop1", meta={"alpha": alpha, "beta": beta, "designated": np.zeros(dim)})


# --- adversaries --------------------------------------------------------------------

class Adversary:
    budget = np.inf

    def __init__(self):
        self.spent = 0.0
        self.history = []

    def next(self, undisturbed, body):
        w = self._propose(np.asarray(undisturbed, float), body)
        nw = float(np.linalg.norm(w))
        room = self.budget - self.spent
        if nw > room:
            w = w * (room / nw) if nw > 0 else w
            nw = max(room, 0.0)
        self.spent += nw
        self.history.append(nw)
        return w

    def _propose(self, y, body):
        return np.zeros_like(y)


class NoAdversary(Adversary):
    pass


class RadialPush(Adversary):
    def __init__(self, alpha, rho, budget):
        super().__init__()
        self.alpha, self.rho, self.budget = float(alpha), float(rho), float(budget)
        self.kappa = (self.rho - self.alpha * self.rho) / (1.0 + self.rho)

    def _propose(self, y, body):
        pi = body.boundary_distance(body.project(y))
        d = body.tangent(y - body.center)
        n = np.linalg.norm(d)
        if n < 1e-15:
            d = body.tangent(np.eye(body.dim)[0])
            n = np.linalg.norm(d)
        return self.kappa * pi * d / n


class BoundaryPush(Adversary):
    def __init__(self, beta, rho, budget=np.inf):
        super().__init__()
        self.beta, self.rho, self.budget = float(beta), float(rho), float(budget)
        self.factor = self.rho / (1.0 + self.beta * self.rho)

    def _propose(self, y, body):
        y = body.project(y)
        pi = body.boundary_distance(y)
        z = body.nearest_boundary_point(y)
        d = z - y
        n = np.linalg.norm(d)
        if n < 1e-15:
            return np.zeros_like(y)
        return min(self.factor * pi, n) * d / n


class Pin1D(Adversary):
    def __init__(self, target, budget):
        super().__init__()
        self.target, self.budget = float(target), float(budget)

    def _propose(self, y, body):
        return np.full_like(y, self.target) - y


class Script(Adversary):
    def __init__(self, disturbances):
        super().__init__()
        self.seq = [np.asarray(w, float) for w in disturbances]
        self.t = 0

    def _propose(self, y, body):
        w = self.seq[self.t] if self.t < len(self.seq) else np.zeros_like(y)
        self.t += 1
        return w


def adversary_next(adv, undisturbed, body):
    return adv.next(undisturbed, body)
