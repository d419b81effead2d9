"""Per-round convex loss streams over the state space.

Rounds are indexed from 0. A stream exposes values, analytic gradients, a
Lipschitz constant and aggregate totals used by regret audits.
"""
from __future__ import annotations

import numpy as np

from . import _kernels


class LossStream:
    lipschitz: float = 1.0

    def value(self, t, y):
        raise NotImplementedError

    def grad(self, t, y):
        raise NotImplementedError

    def totals(self, points, T):
        """sum_{t<T} f_t(p) for each row p of ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([sum(self.value(t, p) for t in range(T)) for p in points])

    def total_grad(self, y, T):
        return sum((self.grad(t, y) for t in range(T)), np.zeros_like(np.asarray(y, float)))

    def argmin(self, body, T):
        """Known minimizer of the aggregate loss over ``body``, if any."""
        return None


def _unit(v):
    n = np.linalg.norm(v)
    return v / n if n > 0 else np.zeros_like(v)


class DistanceLoss(LossStream):
    """f_t(y) = scale * ||y - p_t||, with a fixed or per-round anchor."""

    def __init__(self, anchors, scale=1.0):
        a = np.asarray(anchors, dtype=float)
        self.fixed = a.ndim == 1
        self.anchors = a
        self.scale = float(scale)
        self.lipschitz = self.scale

    def anchor(self, t):
        return self.anchors if self.fixed else self.anchors[t]

    def value(self, t, y):
        return self.scale * float(np.linalg.norm(np.asarray(y) - self.anchor(t)))

    def grad(self, t, y):
        return self.scale * _unit(np.asarray(y, float) - self.anchor(t))

    def totals(self, points, T):
        points = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
        if self.fixed:
            return T * self.scale * np.linalg.norm(points - self.anchors, axis=1)
        centers = np.ascontiguousarray(self.anchors[:T])
        return self.scale * _kernels.distance_totals(points, centers, 1.0)

    def total_grad(self, y, T):
        if self.fixed:
            return T * self.grad(0, y)
        d = np.asarray(y, float) - self.anchors[:T]
        n = np.linalg.norm(d, axis=1, keepdims=True)
        return self.scale * (d / np.where(n > 0, n, 1.0)).sum(axis=0)

    def argmin(self, body, T):
        if self.fixed:
            return body.project(self.anchors)
        return None


class SquaredDistanceLoss(LossStream):
    """f_t(y) = scale * ||y - p||^2. ``lipschitz`` must be given for the domain."""

    def __init__(self, anchor, lipschitz, scale=1.0):
        self.anchor = np.asarray(anchor, dtype=float)
        self.scale = float(scale)
        self.lipschitz = float(lipschitz)

    def value(self, t, y):
        d = np.asarray(y) - self.anchor
        return self.scale * float(d @ d)

    def grad(self, t, y):
        return 2.0 * self.scale * (np.asarray(y, float) - self.anchor)

    def totals(self, points, T):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return T * self.scale * ((points - self.anchor) ** 2).sum(axis=1)

    def total_grad(self, y, T):
        return T * self.grad(0, y)

    def argmin(self, body, T):
        return body.project(self.anchor)


class LinearLoss(LossStream):
    """f_t(y) = <c_t, y> + b_t."""

    def __init__(self, coefs, offsets=0.0):
        c = np.asarray(coefs, dtype=float)
        self.fixed = c.ndim == 1
        self.coefs = c
        self.offsets = offsets
        self.lipschitz = float(np.max(np.linalg.norm(np.atleast_2d(c), axis=1)))

    def coef(self, t):
        return self.coefs if self.fixed else self.coefs[t]

    def offset(self, t):
        return float(self.offsets if np.isscalar(self.offsets) else self.offsets[t])

    def value(self, t, y):
        return float(self.coef(t) @ np.asarray(y, float)) + self.offset(t)

    def grad(self, t, y):
        return self.coef(t).copy()

    def _csum(self, T):
        return T * self.coefs if self.fixed else self.coefs[:T].sum(axis=0)

    def _osum(self, T):
        return T * self.offsets if np.isscalar(self.offsets) else float(np.sum(self.offsets[:T]))

    def totals(self, points, T):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return points @ self._csum(T) + self._osum(T)

    def argmin(self, body, T):
        from .geometry import Ball

        if isinstance(body, Ball):
            d = body.tangent(self._csum(T))
            n = np.linalg.norm(d)
            return body.center.copy() if n == 0 else body.center - body.radius * d / n
        return None

    def total_grad(self, y, T):
        return self._csum(T)


class FunctionLoss(LossStream):
    """Wraps plain callables value(t, y) and grad(t, y)."""

    def __init__(self, value, grad, lipschitz, argmin=None):
        self._value = value
        self._grad = grad
        self.lipschitz = float(lipschitz)
        self._argmin = argmin

    def value(self, t, y):
        return float(self._value(t, np.asarray(y, float)))

    def grad(self, t, y):
        return np.asarray(self._grad(t, np.asarray(y, float)), dtype=float)

    def argmin(self, body, T):
        return None if self._argmin is None else self._argmin(body, T)
