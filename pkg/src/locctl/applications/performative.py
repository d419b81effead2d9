"""Performative prediction with a slowly mixing data distribution.

The deployed classifier x moves the mean feature state y' = A(x, y); the data
distribution is a geometric mixture p_t = (1 - theta) p_{t-1} + theta (y_t + xi)
with xi zero-mean-shifted noise. Stable classifiers satisfy A(x, s(x)) = s(x).
"""
from __future__ import annotations

import math

import numpy as np

from ..dynamics import DynamicsModel
from ..geometry import Ball
from ..losses import LossStream


def _softplus(u):
    # same values as logaddexp(0, u), about 3x faster
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


def _sigmoid(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


class LogisticPPLoss:
    """f_t(x, z) = softplus(<c_t, z> - <a_t, x>) + <d_t, x>; jointly convex."""

    def __init__(self, c, a, d=None):
        self.c = np.atleast_2d(np.asarray(c, float))
        self.a = np.atleast_2d(np.asarray(a, float))
        self.d = np.zeros_like(self.a) if d is None else np.atleast_2d(np.asarray(d, float))
        self.Lz = float(np.max(np.linalg.norm(self.c, axis=1) + np.linalg.norm(self.a, axis=1)
                               + np.linalg.norm(self.d, axis=1)))

    def _row(self, M, t):
        return M[t % M.shape[0]]

    def value(self, t, x, Z):
        """Values at one classifier x and many samples Z (rows)."""
        u = Z @ self._row(self.c, t) - x @ self._row(self.a, t)
        return _softplus(u) + x @ self._row(self.d, t)

    def grads(self, t, x, Z):
        """(mean d/dx, mean d/dz) over the sample rows."""
        u = Z @ self._row(self.c, t) - x @ self._row(self.a, t)
        s = _sigmoid(u).mean()
        return -s * self._row(self.a, t) + self._row(self.d, t), s * self._row(self.c, t)


class LinearPPLoss:
    """f_t(x, z) = <c_t, z> + <d_t, x>."""

    def __init__(self, c, d):
        self.c = np.atleast_2d(np.asarray(c, float))
        self.d = np.atleast_2d(np.asarray(d, float))
        self.Lz = float(np.max(np.linalg.norm(self.c, axis=1) + np.linalg.norm(self.d, axis=1)))

    def value(self, t, x, Z):
        return Z @ self.c[t % len(self.c)] + x @ self.d[t % len(self.d)]

    def grads(self, t, x, Z):
        return self.d[t % len(self.d)].copy(), self.c[t % len(self.c)].copy()


class PerformativeEnv:
    """Y = unit ball of mean states, s(x) = sigma x with X = Ball(0, 1/sigma),
    A(x, y) = (1 - kappa) y + kappa s(x)."""

    def __init__(self, n, theta, kappa, sigma=1.0, mu=None, Sigma=None, sample_count=10_000, seed=0):
        if not 0 < theta <= 1 or not 0 < kappa <= 1:
            raise ValueError("theta and kappa must lie in (0, 1]")
        self.n, self.theta, self.kappa, self.sigma = int(n), float(theta), float(kappa), float(sigma)
        self.mu = np.zeros(n) if mu is None else np.asarray(mu, float)
        self.Sigma = 0.01 * np.eye(n) if Sigma is None else np.asarray(Sigma, float)
        self.sample_count = int(sample_count)
        rng = np.random.Generator(np.random.Philox(key=seed))
        self.xi = rng.multivariate_normal(self.mu, self.Sigma, size=self.sample_count)
        self.Y = Ball(np.zeros(n), 1.0)
        self.X = Ball(np.zeros(n), 1.0 / self.sigma)
        self.S = 1.0 / self.sigma  # Lipschitz constant of s^{-1}
        self.L_y = self.S * abs(1.0 - 1.0 / self.kappa)  # of the inverse action map in y

    def s(self, x):
        return self.sigma * np.asarray(x, float)

    def s_inv(self, y):
        return np.asarray(y, float) / self.sigma

    def A(self, x, y):
        return (1 - self.kappa) * np.asarray(y, float) + self.kappa * self.s(x)

    def model(self):
        Y, X = self.Y, self.X

        def evaluator(x, y, t=0):
            return Y.project(self.A(x, y))

        def local_form(y, t=0):
            return self.kappa * self.sigma * np.eye(self.n), (1 - self.kappa) * y

        return DynamicsModel(Y, X, self.kappa, evaluator, "weak", False, local_form, name="performative")


def pp_surrogate_loss(env, f, y, t=0):
    """Monte-Carlo E_{z ~ y + xi} f_t(s^{-1}(y), z) and its gradient in y, using
    the env's fixed noise draws for every query (common random numbers)."""
    y = np.asarray(y, float)
    x = env.s_inv(y)
    Z = y + env.xi
    val = float(np.mean(f.value(t, x, Z)))
    gx, gz = f.grads(t, x, Z)
    return val, gx / env.sigma + gz


class SurrogateStream(LossStream):
    def __init__(self, env, f):
        self.env, self.f = env, f
        self.lipschitz = (1.0 + env.S) * f.Lz

    def value(self, t, y):
        return pp_surrogate_loss(self.env, self.f, y, t)[0]

    def grad(self, t, y):
        return pp_surrogate_loss(self.env, self.f, y, t)[1]

    def totals(self, points, T):
        P = np.atleast_2d(np.asarray(points, float))
        if isinstance(self.f, LogisticPPLoss):
            # u = <c, y + xi> - <a, y / sigma> splits into a point part and a noise part
            out = np.zeros(P.shape[0])
            for t in range(T):
                c, a, d = self.f._row(self.f.c, t), self.f._row(self.f.a, t), self.f._row(self.f.d, t)
                u = (P @ (c - a / self.env.sigma))[:, None] + (self.env.xi @ c)[None, :]
                out += _softplus(u).mean(axis=1) + P @ d / self.env.sigma
            return out
        return np.array([sum(self.value(t, p) for t in range(T)) for p in P])


def pp_eta(env, T, G, Lz, rho, gamma=1.0, R=1.0, r=1.0):
    c = 1 + env.L_y + R / (r * rho) + (2 - env.theta) / env.theta
    return math.sqrt(G * gamma / (c * T * Lz ** 2 * (1 + env.S) ** 2))


def pp_bound(env, T, G, Lz, rho, gamma=1.0, R=1.0, r=1.0):
    c = 1 + env.L_y + R / (r * rho) + (2 - env.theta) / env.theta
    return 2 * math.sqrt(c * T * G * Lz ** 2 * (1 + env.S) ** 2 / gamma)


def pp_run(env, f, T, gamma=1.0):
    from ..controllers import ControllerConfig, oen_ftrl_run

    G = 0.5 * gamma
    stream = SurrogateStream(env, f)
    eta = pp_eta(env, T, G, f.Lz, env.kappa, gamma)
    cfg = ControllerConfig(T=T, L=stream.lipschitz, rho=env.kappa, gamma=gamma, G=G, eta=eta)
    log = oen_ftrl_run(env.model(), stream, cfg)
    log.meta["pp_bound"] = pp_bound(env, T, G, f.Lz, env.kappa, gamma)
    return log, stream


def pp_true_losses(env, f, log, horizon_tol=1e-12):
    """Per-round loss of the deployed classifier on the actual mixture p_t.

    p_t puts weight (1-theta)^t on y_0 + xi and theta (1-theta)^h on
    y_{t-h} + xi for h = 0..t-1. Tails below ``horizon_tol`` are folded into
    the oldest kept component.
    """
    th = env.theta
    path = log.state_path
    actions = log.array("actions")
    T = len(log)
    out = np.zeros(T)
    if th == 1:
        H = 1
    else:
        H = min(T, int(math.ceil(math.log(horizon_tol) / math.log(1 - th))) + 1)
    for t in range(T):
        x = actions[t]
        acc = 0.0
        mass = 0.0
        for h in range(min(t + 1, H)):
            w = th * (1 - th) ** h
            acc += w * float(np.mean(f.value(t, x, path[t + 1 - h] + env.xi)))
            mass += w
        # remaining mass sits on the oldest state reached (exactly y_0 when t+1 <= H)
        oldest = path[max(t + 1 - H, 0)]
        acc += (1 - mass) * float(np.mean(f.value(t, x, oldest + env.xi)))
        out[t] = acc
    return out


def pp_true_loss_gap(env, f, log):
    """(per-round gaps |true - surrogate|, per-round bound).

    The bound is (1-theta)^t M + L_z step (L_y + (1-theta)/theta) with step the
    largest realized state move and M the largest |true - surrogate| gap
    attributable to the initial component.
    """
    true = pp_true_losses(env, f, log)
    path = log.state_path
    T = len(log)
    sur = np.array([pp_surrogate_loss(env, f, path[t + 1], t)[0] for t in range(T)])
    gaps = np.abs(true - sur)
    steps = np.linalg.norm(np.diff(path, axis=0), axis=1)
    step = float(steps.max()) if T else 0.0
    actions = log.array("actions")
    M = max(abs(float(np.mean(f.value(t, actions[t], path[0] + env.xi))) - sur[t]) for t in range(T)) if T else 0.0
    th = env.theta
    tail = (1 - th) ** np.arange(1, T + 1) * M
    drift = f.Lz * step * (env.L_y + (1 - th) / th)
    return gaps, tail + drift + 1e-9
