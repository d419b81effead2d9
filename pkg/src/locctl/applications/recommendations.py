"""Adaptive recommendations: menus of k items steer a user's memory vector.

A menu K at memory v yields choice probabilities s_i(v) / sum_{j in K} s_j(v);
memory then moves v <- (1 - theta_t) v + theta_t p.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .. import _kernels
from ..dynamics import DynamicsModel
from ..geometry import Ball, SmoothedSimplex

IRD_TOL = 1e-12


class RecommendationEnv:
    def __init__(self, n, k, scores, lam, sigma=None, theta=0.2, theta_schedule=None):
        if not 1 <= k < n:
            raise ValueError("need 1 <= k < n")
        if not 0 < lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")
        self.n, self.k = int(n), int(k)
        self.scores = scores  # v -> array of n scores in [lam, 1]
        self.lam = float(lam)
        self.sigma = sigma
        self.theta = float(theta)
        self.theta_schedule = theta_schedule  # t -> theta_t in [theta, 1]
        self.menus = np.array(list(itertools.combinations(range(self.n), self.k)), dtype=np.int64)
        self._menu_index = {tuple(m): i for i, m in enumerate(self.menus)}

    def theta_at(self, t):
        return self.theta if self.theta_schedule is None else float(self.theta_schedule(t))

    def s(self, v):
        s = np.asarray(self.scores(np.asarray(v, float)), float)
        if np.any(s < self.lam - 1e-12) or np.any(s > 1 + 1e-12):
            raise ValueError("scores leave [lambda, 1]")
        return s

    def choice_matrix(self, v):
        """Row K is the choice distribution under menu K (menus in lexicographic order)."""
        s = self.s(v)
        P = np.zeros((len(self.menus), self.n))
        rows = np.arange(len(self.menus))[:, None]
        sm = s[self.menus]
        P[rows, self.menus] = sm / sm.sum(axis=1, keepdims=True)
        return P

    def step(self, x, v, t):
        theta = self.theta_at(t)
        return (1 - theta) * v + theta * (np.asarray(x, float) @ self.choice_matrix(v))


def scale_bounded_scores(lam, sigma, n, seed=0):
    """Scores s_i(v) = ((1-lam) v_i + lam) * c_i(v) with c_i in [1/sigma, sigma],
    clipped into [lam, 1]. Smooth multiplicative wobble drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    freq = rng.uniform(1, 4, n)
    phase = rng.uniform(0, 2 * np.pi, n)
    amp = math.log(sigma)

    def scores(v):
        base = (1 - lam) * v + lam
        wob = np.exp(amp * np.sin(freq * v * 2 * np.pi + phase))
        return np.clip(base * wob, lam, 1.0)

    return scores


def rec_choice_distribution(env, menu, v):
    menu = np.asarray(sorted(menu), dtype=np.int64)
    if menu.size != env.k:
        raise ValueError(f"menu must contain exactly k={env.k} items")
    s = env.s(v)
    out = np.zeros(env.n)
    out[menu] = s[menu] / s[menu].sum()
    return out


def rec_menu_times(p, v, k, env):
    p = np.asarray(p, float)
    s = env.s(v)
    if np.any((p > 0) & (s < env.lam - 1e-12)):
        raise ValueError("scores below the floor on the support of p")
    q = p / s
    mu = k * q / q.sum()
    return mu, bool(mu.max() <= 1 + IRD_TOL)


def in_eird(p, k, lam):
    """p is realizable at every memory for every score function with range
    in [lam, 1]; the worst case puts lam on one item and 1 on the rest."""
    p = np.asarray(p, float)
    rest = p.sum() - p
    return bool(np.all((k - 1) * p / lam <= rest + IRD_TOL))


def rec_menu_synthesis(p, v, k, env, dense=True):
    """Menu distribution inducing choice distribution p at memory v."""
    mu, ok = rec_menu_times(p, v, k, env)
    if not ok:
        raise ValueError("target is not realizable at this memory")
    mu = np.minimum(mu, 1.0)
    mu = mu * (k / mu.sum())
    menus, z = _kernels.systematic_menus(np.ascontiguousarray(mu), k)
    s = env.s(v)
    x = z * s[menus].sum(axis=1)
    x = x / x.sum()
    if not dense:
        return menus, x
    out = np.zeros(len(env.menus))
    for m, w in zip(menus, x):
        out[env._menu_index[tuple(sorted(m))]] += w
    return out


def eird_radius(n, k, eps):
    return eps * (2 * (n - 1) / (math.sqrt(2) * n)) / (n * (k - 1) + eps)


def rec_benchmark_body(env, variant, eps=None, phi=None):
    """(state space, local controllability constant) for the two benchmark classes."""
    n, k, lam = env.n, env.k, env.lam
    u = np.full(n, 1.0 / n)
    if variant == "eird_ball":
        if eps is None:
            eps = lam - (k - 1) / (n - 1)
        if eps <= 0 or lam < (k - 1) / (n - 1) + eps - 1e-12:
            raise ValueError("eird ball needs lambda >= (k-1)/(n-1) + eps with eps > 0")
        return Ball(u, eird_radius(n, k, eps), hull=True), env.theta
    if variant == "smoothed_simplex":
        sigma = env.sigma
        if sigma is None or sigma > math.sqrt(4 * (n - 1) / k):
            raise ValueError("smoothed simplex needs scale-bounded scores with sigma <= sqrt(4(n-1)/k)")
        if phi is None:
            phi = min(0.9, k * lam * sigma ** 2)
        return SmoothedSimplex(n, phi), env.theta * lam * phi
    raise ValueError(f"unknown variant {variant!r}")


def rec_model(env, body, rho):
    """DynamicsModel over memories; actions are dense menu distributions."""
    X_dim = len(env.menus)

    def evaluator(x, v, t=0):
        return env.step(x, v, t)

    def solver(v, target, t=0):
        theta = env.theta_at(t)
        p = v + (target - v) / theta
        p = np.maximum(p, 0.0)
        p = p / p.sum()
        mu, ok = rec_menu_times(p, v, env.k, env)
        if not ok:
            # pull p back toward the body center, which is always realizable
            c = body.center
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if rec_menu_times(c + mid * (p - c), v, env.k, env)[1]:
                    lo = mid
                else:
                    hi = mid
            p = c + lo * (p - c)
        x = rec_menu_synthesis(p, v, env.k, env)
        v_new = env.step(x, v, t)
        return x, float(np.linalg.norm(v_new - target))

    class _Menus:
        dim = X_dim

    return DynamicsModel(body, _Menus(), rho, evaluator, "weak", True, None, solver=solver,
                         name="recommendations")


def rec_regret_bound(R, r, theta, T, G, L, gamma=1.0):
    return 2 * math.sqrt((2 + R / (r * theta) + 1 / theta) * T * G * L ** 2 / gamma)


def rec_eta(R, r, theta, T, G, L, gamma=1.0):
    return math.sqrt(G * gamma / ((2 + R / (r * theta) + 1 / theta) * T * L ** 2))


def rec_run(env, body, rho, losses, T, gamma=1.0):
    """OEN-FTRL over ``body`` with the recommendation calibration.

    ``losses`` acts on the realized choice distribution p_t, which is what the
    user actually consumes; the controller feeds the same function of v_t.
    Returns (log, choices, bound).
    """
    from ..controllers import ControllerConfig, oen_ftrl_run

    G = 0.5 * gamma * body.R ** 2
    eta = rec_eta(body.R, body.r, env.theta, T, G, losses.lipschitz, gamma)
    model = rec_model(env, body, rho)
    cfg = ControllerConfig(T=T, L=losses.lipschitz, rho=rho, gamma=gamma, G=G, eta=eta)
    log = oen_ftrl_run(model, losses, cfg)
    path = log.state_path
    choices = np.array([path[t] + (path[t + 1] - path[t]) / env.theta_at(t) for t in range(T)])
    bound = rec_regret_bound(body.R, body.r, env.theta, T, G, losses.lipschitz, gamma)
    return log, choices, bound
