"""Adaptive pricing against a buyer whose reserve bundle decays between rounds.

The buyer holds y_{t-1}; a fraction 1 - theta_t survives, the buyer then buys
x_t maximizing v(x + (1 - theta_t) y_{t-1}) - <p_t, x>. Posting p = grad v(y*)
makes the buyer top up exactly to y*.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ..geometry import ConvexBody, TOL, _vec
from ..oco import Ftrl, holder_calibrate, holder_regret_bound


class CES:
    """v(y) = (sum_i alpha_i y_i^kappa)^beta, homogeneous of degree kappa * beta."""

    def __init__(self, alpha, kappa=0.5, beta=1.0):
        self.alpha = np.asarray(alpha, float)
        self.kappa, self.beta = float(kappa), float(beta)
        if not (0 < self.kappa <= 1 and 0 < self.kappa * self.beta < 1):
            raise ValueError("need 0 < kappa <= 1 and 0 < kappa*beta < 1")
        self.k = self.kappa * self.beta

    def __call__(self, y):
        y = np.maximum(np.asarray(y, float), 0.0)
        return float((self.alpha @ y ** self.kappa) ** self.beta)

    def grad(self, y):
        y = np.asarray(y, float)
        s = self.alpha @ y ** self.kappa
        return self.beta * s ** (self.beta - 1) * self.alpha * self.kappa * y ** (self.kappa - 1)

    def holder(self):
        """(lambda, beta) valid on the whole orthant for the square-root family."""
        if self.kappa == 0.5 and self.beta == 1.0:
            n = self.alpha.size
            return max(1.0, float(np.linalg.norm(self.alpha)) * n ** 0.25), 0.5
        return None


class CobbDouglas:
    """v(y) = prod_i y_i^alpha_i, homogeneous of degree sum(alpha)."""

    def __init__(self, alpha):
        self.alpha = np.asarray(alpha, float)
        self.k = float(self.alpha.sum())
        if not (np.all(self.alpha > 0) and self.k < 1):
            raise ValueError("need positive exponents summing below 1")

    def __call__(self, y):
        y = np.maximum(np.asarray(y, float), 0.0)
        return float(np.prod(y ** self.alpha))

    def grad(self, y):
        y = np.asarray(y, float)
        return self(y) * self.alpha / y

    def holder(self, radius=None):
        """(lambda, beta) on the box [0, radius]^n; needs the radius, so None without it.

        Changing coordinate i by h moves v by at most radius^(k - a_i) h^a_i;
        exponents are lowered to min(a) using h <= sqrt(n) radius.
        """
        if radius is None:
            return None
        b = float(self.alpha.min())
        diam = math.sqrt(self.alpha.size) * radius
        lam = sum(radius ** (self.k - a) * max(diam, 1.0) ** (a - b) for a in self.alpha)
        return max(1.0, float(lam)), b


def unit_max(v, n, samples=2001):
    """V = max of v on the unit sphere's positive part."""
    if n == 2:
        f = lambda a: -v(np.array([math.cos(a), math.sin(a)]))
        grid = np.linspace(0, math.pi / 2, samples)
        i = int(np.argmin([f(a) for a in grid]))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, samples - 1)]
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        a = res.x
        return -res.fun, np.array([math.cos(a), math.sin(a)])
    best, arg = -np.inf, None
    rng = np.random.default_rng(0)
    for _ in range(20):
        u0 = np.abs(rng.standard_normal(n))
        res = minimize(lambda u: -v(np.abs(u) / np.linalg.norm(u)), u0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        u = np.abs(res.x) / np.linalg.norm(res.x)
        if v(u) > best:
            best, arg = v(u), u
    return best, arg


class ValuationBody(ConvexBody):
    """{y >= 0 : v(y) >= phi ||y||}. Star-shaped about the origin with radial
    function (v(u)/phi)^(1/(1-k)) along unit directions u."""

    def __init__(self, v, n, phi, center=None):
        self.v, self.phi, self.dim = v, float(phi), int(n)
        self.k = v.k
        self.V, self.u_star = unit_max(v, n)
        self.radius = (self.V / self.phi) ** (1.0 / (1.0 - self.k))
        if center is None:
            center = self._deepest_point()
        self.center = np.asarray(center, float)
        self.r = self.boundary_distance(self.center)
        if self.r < 1.0:
            raise ValueError("phi too large: the body contains no unit ball")
        bd = self._boundary_samples(4001)
        self.R = float(max(np.linalg.norm(bd - self.center, axis=1).max(), np.linalg.norm(self.center)))

    def radial(self, u):
        return (self.v(u) / self.phi) ** (1.0 / (1.0 - self.k))

    def _boundary_samples(self, m):
        if self.dim == 2:
            a = np.linspace(0, math.pi / 2, m)
            U = np.stack([np.cos(a), np.sin(a)], axis=1)
        else:
            rng = np.random.default_rng(1)
            U = np.abs(rng.standard_normal((m * 4, self.dim)))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
        rad = np.array([self.radial(u) for u in U])
        return U * rad[:, None]

    def _deepest_point(self):
        f = lambda b: -self._dist_to_boundary(b * self.u_star)
        res = minimize_scalar(f, bounds=(0.0, self.radius), method="bounded", options={"xatol": 1e-10})
        return res.x * self.u_star

    def _dist_to_boundary(self, y):
        y = np.asarray(y, float)
        if self.dim == 2:
            f = lambda a: np.linalg.norm(self.radial(np.array([math.cos(a), math.sin(a)]))
                                         * np.array([math.cos(a), math.sin(a)]) - y)
            grid = np.linspace(0, math.pi / 2, 721)
            vals = [f(a) for a in grid]
            i = int(np.argmin(vals))
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, 720)]
            d = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}).fun
            d = min(d, min(vals))
        else:
            d = float(np.linalg.norm(self._boundary_samples(2000) - y, axis=1).min())
        return float(min(d, np.min(y), np.linalg.norm(y))) if np.all(y >= 0) else 0.0

    def member(self, y, tol=TOL):
        y = np.asarray(y, float)
        if np.any(y < -tol):
            return False
        n = np.linalg.norm(y)
        if n <= tol:
            return True
        return n <= self.radial(np.maximum(y, 0) / n) + tol

    def contains(self, z, tol=TOL):
        z = np.asarray(z, float)
        return z.shape == (self.dim,) and self.member(z, tol)

    def project(self, z):
        z = _vec(z, self.dim)
        if self.member(z, 0.0):
            return z.copy()
        cons = [{"type": "ineq", "fun": lambda y: self.v(np.maximum(y, 1e-300)) - self.phi * np.linalg.norm(y)}]
        x0 = np.clip(z, 1e-6, None)
        nz = np.linalg.norm(x0)
        x0 = x0 * min(1.0, self.radial(x0 / nz) / nz) * 0.999
        res = minimize(lambda y: 0.5 * np.sum((y - z) ** 2), x0, jac=lambda y: y - z,
                       constraints=cons, bounds=[(0, None)] * self.dim, method="SLSQP",
                       options={"ftol": 1e-15, "maxiter": 200})
        y = np.maximum(res.x, 0.0)
        if not self.member(y, 0.0):
            # pull toward the center until inside
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if self.member(self.center + mid * (y - self.center), 0.0):
                    lo = mid
                else:
                    hi = mid
            y = self.center + lo * (y - self.center)
        return y

    def boundary_distance(self, y):
        return self._dist_to_boundary(y)

    def bounding_box(self):
        return np.zeros(self.dim), np.full(self.dim, self.radius)

    def describe(self):
        return {"type": "valuation_body", "phi": self.phi}


class LinearCosts:
    """c_t(x) = C0 + phi ||x|| + <a_t, x> with a_t >= 0."""

    def __init__(self, C0, phi, drifts):
        self.C0, self.phi = float(C0), float(phi)
        self.drifts = np.asarray(drifts, float)
        self.lipschitz = self.phi + float(np.linalg.norm(self.drifts, axis=1).max())

    def __call__(self, t, x):
        return self.C0 + self.phi * float(np.linalg.norm(x)) + float(self.drifts[t] @ x)

    def grad(self, t, x):
        n = np.linalg.norm(x)
        return self.phi * (x / n if n > 0 else 0 * x) + self.drifts[t]


class PricingEnv:
    def __init__(self, valuation, n, phi, costs, theta, theta_schedule, lam=None, beta=None):
        self.v, self.n, self.phi = valuation, int(n), float(phi)
        self.costs, self.theta, self.theta_schedule = costs, float(theta), theta_schedule
        h = valuation.holder()
        if lam is None or beta is None:
            if h is None:
                raise ValueError("Holder constants must be supplied for this valuation")
            lam, beta = h
        self.lam, self.beta = float(lam), float(beta)
        self.k = valuation.k

    def theta_at(self, t):
        return float(self.theta_schedule(t))


def pricing_state_space(env):
    return ValuationBody(env.v, env.n, env.phi)


def pricing_price_for_target(env, y_target):
    y_target = np.asarray(y_target, float)
    if np.any(y_target <= 0):
        raise ValueError("target reserves must be positive")
    return env.v.grad(y_target)


def buyer_best_response(target, carried):
    """Bundle bought at prices grad v(target): top up from the carried reserve."""
    x = np.asarray(target, float) - np.asarray(carried, float)
    if np.any(x <= 0):
        raise ValueError("target must dominate the carried reserve")
    return x


def buyer_best_response_numeric(v, prices, carried, x0=None):
    """Numerical maximization of v(x + carried) - <p, x> over x >= 0."""
    carried = np.asarray(carried, float)
    prices = np.asarray(prices, float)
    n = carried.size
    f = lambda x: -(v(x + carried) - prices @ x)
    g = lambda x: -(v.grad(np.maximum(x + carried, 1e-12)) - prices)
    x0 = np.ones(n) if x0 is None else np.asarray(x0, float)
    res = minimize(f, x0, jac=g, bounds=[(0, None)] * n, method="L-BFGS-B",
                   options={"ftol": 1e-16, "gtol": 1e-12, "maxiter": 10000})
    return res.x


def pricing_surrogate_reward(env, y, t):
    theta = env.theta_at(t)
    y = np.asarray(y, float)
    return theta * env.k * env.v(y) - env.costs(t, theta * y)


def _surrogate_grad(env, y, t):
    theta = env.theta_at(t)
    return theta * env.k * env.v.grad(y) - theta * env.costs.grad(t, theta * y)


def recover_theta(y_prev, y_now, x_now, tol=1e-8):
    idx = np.where(y_prev > 1e-6)[0]
    if idx.size == 0:
        return None
    vals = 1.0 - (y_now - x_now)[idx] / y_prev[idx]
    if np.ptp(vals) > tol:
        raise RuntimeError("inconsistent decay estimates across coordinates")
    return float(vals[0])


class PricingLog:
    def __init__(self):
        self.reserves, self.prices, self.bundles, self.rewards, self.surrogates = [], [], [], [], []
        self.thetas = []
        self.meta = {}


def pricing_run(env, T, body=None, gamma=1.0):
    """Holder-calibrated FTRL over the contracted reserve space."""
    body = body or pricing_state_space(env)
    L = env.k * env.lam + env.costs.lipschitz
    G = 0.5 * gamma * body.R ** 2
    eta, delta, step = holder_calibrate(L, env.beta, G, gamma, body.R, env.theta, T)
    if delta >= 1:
        raise ValueError("contraction >= 1; horizon too short")
    from ..geometry import Contracted

    ftrl = Ftrl(Contracted(body, delta), eta, gamma, G)
    y = np.zeros(env.n)
    log = PricingLog()
    log.meta.update(eta=eta, delta=delta, step_bound=step, L=L, G=G, R=body.R,
                    bound=holder_regret_bound(L, env.beta, G, gamma, body.R, env.theta, T))
    for t in range(T):
        target = ftrl.next_point()
        theta = env.theta_at(t)
        carried = (1 - theta) * y
        if np.any(target <= carried):
            raise RuntimeError(f"round {t}: target not reachable from the carried reserve")
        p = pricing_price_for_target(env, target)
        x = buyer_best_response(target, carried)
        y_new = carried + x
        th = recover_theta(y, y_new, x)
        if th is not None and abs(th - theta) > 1e-8:
            raise RuntimeError("decay recovery disagrees with the schedule")
        log.reserves.append(y_new)
        log.prices.append(p)
        log.bundles.append(x)
        log.thetas.append(theta)
        log.rewards.append(float(p @ x) - env.costs(t, x))
        log.surrogates.append(pricing_surrogate_reward(env, y_new, t))
        ftrl.update(-_surrogate_grad(env, y_new, t))
        y = y_new
    log.body = body
    return log


def stable_reserve_best(env, body, T, resolution=None):
    """max over y in the body of sum_t f*_t(y) (concave): grid then refine."""
    th = np.array([env.theta_at(t) for t in range(T)])
    a = env.costs.drifts[:T]
    S = th.sum()
    lin = (th[:, None] * a).sum(axis=0)

    def total(Y):
        Y = np.atleast_2d(Y)
        vals = np.array([env.v(y) for y in Y])
        return S * env.k * vals - T * env.costs.C0 - S * env.costs.phi * np.linalg.norm(Y, axis=1) - Y @ lin

    res = resolution or body.radius / 200
    lo, hi = body.bounding_box()
    axes = [np.arange(lo[i], hi[i] + res / 2, res) for i in range(env.n)]
    mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    mesh = mesh[[body.member(p) for p in mesh]]
    vals = total(mesh)
    i = int(np.argmax(vals))
    best, arg = float(vals[i]), mesh[i]
    cons = [{"type": "ineq", "fun": lambda y: env.v(np.maximum(y, 1e-300)) - env.phi * np.linalg.norm(y)}]
    r = minimize(lambda y: -total(np.maximum(y, 1e-12))[0], np.maximum(arg, 1e-6), constraints=cons,
                 bounds=[(1e-12, None)] * env.n, method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    if body.member(r.x, 1e-9) and -r.fun > best:
        best, arg = float(-r.fun), r.x
    return best, arg


def pricing_regret(env, log, T=None):
    T = len(log.rewards) if T is None else T
    best, _ = stable_reserve_best(env, log.body, T)
    return best - float(np.sum(log.rewards[:T]))
