"""Inner online learners: FTRL, one-point bandit FKM, projected OGD."""
from __future__ import annotations

import math

import numpy as np

from .geometry import Contracted


class Ftrl:
    """FTRL with psi(y) = gamma/2 * ||y - c||^2, c the domain center.

    The leader is then a single projection of c - eta * grad_sum / gamma.
    """

    def __init__(self, domain, eta, gamma=1.0, G=None):
        if eta <= 0 or gamma <= 0:
            raise ValueError("eta and gamma must be positive")
        self.domain = domain
        self.eta = float(eta)
        self.gamma = float(gamma)
        self.G = 0.5 * gamma * domain.R ** 2 if G is None else float(G)
        self.grad_sum = np.zeros(domain.dim)
        self.round = 0

    def next_point(self):
        return self.domain.project(self.domain.center - self.eta * self.grad_sum / self.gamma)

    def update(self, gradient):
        g = np.asarray(gradient, dtype=float)
        if g.shape != self.grad_sum.shape:
            raise ValueError(f"gradient dimension {g.shape} does not match {self.grad_sum.shape}")
        self.grad_sum = self.grad_sum + self.domain.tangent(g)
        self.round += 1
        return self

    def regret_bound(self, T, L):
        return self.eta * T * L ** 2 / self.gamma + self.G / self.eta


def random_unit(rng, dim, tangent=None):
    while True:
        u = rng.standard_normal(dim)
        if tangent is not None:
            u = tangent(u)
        n = np.linalg.norm(u)
        if n > 1e-12:
            return u / n


class Fkm:
    """One-point gradient estimation with spherical smoothing.

    The center lives in the domain shrunk by probe_radius / r_domain around the
    domain center, so the probe ball of radius ``probe_radius`` stays inside.
    """

    def __init__(self, domain, eta, probe_radius, rng, L=None):
        if probe_radius <= 0 or probe_radius >= domain.r:
            raise ValueError("probe radius must lie in (0, inradius of the domain)")
        self.domain = domain
        self.eta = float(eta)
        self.probe_radius = float(probe_radius)
        self.inner = Contracted(domain, self.probe_radius / domain.r)
        self.rng = rng
        self.center = domain.center.copy()
        self.n = domain.dim
        self.last_direction = random_unit(rng, domain.dim, domain.tangent)

    @property
    def point(self):
        return self.center + self.probe_radius * self.last_direction

    def gradient_estimate(self, observed_loss):
        return (self.n / self.probe_radius) * float(observed_loss) * self.last_direction

    def step(self, observed_loss):
        g = self.gradient_estimate(observed_loss)
        self.center = self.inner.project(self.center - self.eta * g)
        self.last_direction = random_unit(self.rng, self.n, self.domain.tangent)
        return self.point

    def step_bound(self, L):
        return 2.0 * self.probe_radius + self.eta * self.n * L / self.probe_radius


class Ogd:
    def __init__(self, domain, step, point=None):
        self.domain = domain
        self.step = float(step)
        self.point = domain.center.copy() if point is None else domain.project(point)

    def update(self, gradient):
        self.point = self.domain.project(self.point - self.step * np.asarray(gradient, float))
        return self.point


def ftrl_next(state):
    return state.next_point()


def ftrl_update(state, gradient):
    return state.update(gradient)


def ogd_step(state, gradient):
    state.update(gradient)
    return state


def fkm_step(state, observed_loss):
    return state, state.step(observed_loss)


def holder_calibrate(lam, beta, G, gamma, R, theta, T):
    """Step size and contraction for FTRL on (lam, beta)-Holder losses.

    Returns (eta, delta, step_bound).
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if lam < 1.0:
        raise ValueError("the Holder constant must be at least 1")
    L = lam
    K = L * (3.0 + (R / theta) ** beta) * (L / gamma) ** (beta / (2.0 - beta))
    eta = (G / (K * T)) ** ((2.0 - beta) / 2.0)
    step = (eta * lam / gamma) ** (1.0 / (2.0 - beta))
    return eta, step / theta, step


def holder_regret_bound(L, beta, G, gamma, R, theta, T):
    return 2.0 * L * (G / gamma) ** (beta / 2.0) * (T * (3.0 + (R / theta) ** beta)) ** ((2.0 - beta) / 2.0)


def lipschitz_eta(G, gamma, T, L, factor=1.0):
    """eta = sqrt(G gamma / (factor T L^2))."""
    return math.sqrt(G * gamma / (factor * T * L ** 2))
