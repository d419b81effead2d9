"""Convex bodies used as state and action spaces.

Every body has a ``center``: the point the quadratic regularizer is anchored
at and the point contractions scale toward. It is the origin for balls and
boxes that contain it, and the barycenter for simplices.
"""
from __future__ import annotations

import numpy as np

from . import _kernels

TOL = 1e-9


def _vec(z, dim):
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.shape[0] != dim:
        raise ValueError(f"expected a vector of dimension {dim}, got shape {z.shape}")
    return z


class ConvexBody:
    """Base class. Subclasses fill in dim, center, r, R and the primitives."""

    dim: int
    center: np.ndarray
    r: float
    R: float

    def project(self, z):
        raise NotImplementedError

    def boundary_distance(self, y):
        raise NotImplementedError

    def nearest_boundary_point(self, y):
        raise NotImplementedError

    def contains(self, z, tol=TOL):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            return False
        return float(np.linalg.norm(z - self.project(z))) <= tol

    def contract(self, delta):
        return Contracted(self, delta)

    def tangent(self, v):
        """Component of ``v`` parallel to the body's affine hull."""
        return np.asarray(v, dtype=float)

    def bounding_box(self):
        raise NotImplementedError

    def _check_member(self, y):
        y = _vec(y, self.dim)
        if not self.contains(y):
            raise ValueError("point is outside the body")
        return y

    def describe(self):
        raise NotImplementedError


class Ball(ConvexBody):
    """Euclidean ball. With ``hull=True`` it is intersected with the
    hyperplane through the center orthogonal to the all-ones vector, which is
    how balls inside a simplex are represented."""

    def __init__(self, center, radius, hull=False):
        self.center = np.atleast_1d(np.asarray(center, dtype=float)).copy()
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.dim = self.center.shape[0]
        self.hull = bool(hull)
        self.r = self.radius
        self.R = self.radius

    def tangent(self, v):
        v = np.asarray(v, dtype=float)
        return v - v.mean() if self.hull else v

    def project(self, z):
        z = _vec(z, self.dim)
        d = self.tangent(z - self.center)
        nrm = np.linalg.norm(d)
        if nrm > self.radius:
            d = d * (self.radius / nrm)
        return self.center + d

    def contains(self, z, tol=TOL):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            return False
        d = z - self.center
        off = abs(d.sum()) / np.sqrt(self.dim) if self.hull else 0.0
        return np.hypot(max(np.linalg.norm(self.tangent(d)) - self.radius, 0.0), off) <= tol

    def boundary_distance(self, y):
        y = self._check_member(y)
        return max(self.radius - float(np.linalg.norm(self.tangent(y - self.center))), 0.0)

    def nearest_boundary_point(self, y):
        d = self.tangent(np.asarray(y, dtype=float) - self.center)
        big = np.abs(d).max()
        if big == 0:
            d = self.tangent(np.eye(self.dim)[0])
        else:
            d = d / big  # rescale first: tiny vectors have subnormal squared norms
        return self.center + d * (self.radius / np.linalg.norm(d))

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def describe(self):
        out = {"type": "ball", "radius": self.radius, "dim": self.dim}
        if np.any(self.center != 0):
            out["center"] = self.center.tolist()
        if self.hull:
            out["hull"] = True
        return out


class Box(ConvexBody):
    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float)).copy()
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float)).copy()
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValueError("box needs lo < hi componentwise")
        self.dim = self.lo.shape[0]
        inside = np.all(self.lo < 0) and np.all(self.hi > 0)
        self.center = np.zeros(self.dim) if inside else 0.5 * (self.lo + self.hi)
        self.r = float(np.min(np.minimum(self.center - self.lo, self.hi - self.center)))
        far = np.maximum(np.abs(self.center - self.lo), np.abs(self.hi - self.center))
        self.R = float(np.linalg.norm(far))

    def project(self, z):
        return np.clip(_vec(z, self.dim), self.lo, self.hi)

    def boundary_distance(self, y):
        y = self._check_member(y)
        return max(float(np.min(np.minimum(y - self.lo, self.hi - y))), 0.0)

    def nearest_boundary_point(self, y):
        y = np.asarray(y, dtype=float)
        gaps = np.concatenate((y - self.lo, self.hi - y))
        i = int(np.argmin(gaps))
        z = y.copy()
        if i < self.dim:
            z[i] = self.lo[i]
        else:
            z[i - self.dim] = self.hi[i - self.dim]
        return z

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def describe(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Simplex(ConvexBody):
    """Probability simplex. Distances are measured inside its affine hull."""

    def __init__(self, n):
        if n < 2:
            raise ValueError("simplex needs n >= 2")
        self.dim = self.n = int(n)
        self.center = np.full(self.n, 1.0 / self.n)
        self._scale = np.sqrt(self.n / (self.n - 1.0))
        self.r = self._scale / self.n
        self.R = float(np.sqrt((self.n - 1.0) / self.n))

    def tangent(self, v):
        v = np.asarray(v, dtype=float)
        return v - v.mean()

    def project(self, z):
        return _kernels.project_simplex(np.ascontiguousarray(_vec(z, self.dim)))

    def boundary_distance(self, y):
        y = self._check_member(y)
        return max(float(np.min(y)) * self._scale, 0.0)

    def nearest_boundary_point(self, y):
        y = np.asarray(y, dtype=float)
        i = int(np.argmin(y))
        e = -np.full(self.n, 1.0 / (self.n - 1))
        e[i] = 1.0
        return y - y[i] * e

    def bounding_box(self):
        return np.zeros(self.n), np.ones(self.n)

    def describe(self):
        return {"type": "simplex", "n": self.n}


class SmoothedSimplex(ConvexBody):
    """(1 - phi) * simplex + phi * uniform."""

    def __init__(self, n, phi):
        if not 0.0 <= phi < 1.0:
            raise ValueError("phi must lie in [0, 1)")
        self.base = Simplex(n)
        self.phi = float(phi)
        self.dim = self.n = self.base.n
        self.center = self.base.center.copy()
        self.r = (1.0 - self.phi) * self.base.r
        self.R = (1.0 - self.phi) * self.base.R

    def _to_base(self, y):
        return (y - self.phi * self.center) / (1.0 - self.phi)

    def _from_base(self, y):
        return (1.0 - self.phi) * y + self.phi * self.center

    tangent = Simplex.tangent

    def project(self, z):
        return self._from_base(self.base.project(self._to_base(_vec(z, self.dim))))

    def boundary_distance(self, y):
        y = self._check_member(y)
        return (1.0 - self.phi) * self.base.boundary_distance(self.base.project(self._to_base(y)))

    def nearest_boundary_point(self, y):
        return self._from_base(self.base.nearest_boundary_point(self._to_base(np.asarray(y, float))))

    def bounding_box(self):
        return np.full(self.n, self.phi / self.n), np.full(self.n, 1.0 - self.phi + self.phi / self.n)

    def describe(self):
        return {"type": "smoothed_simplex", "n": self.n, "phi": self.phi}


class Contracted(ConvexBody):
    """{c + (1 - delta)(y - c) : y in inner} with c the inner body's center."""

    def __init__(self, inner, delta):
        if not 0.0 <= delta < 1.0:
            raise ValueError("contraction delta must lie in [0, 1)")
        self.inner = inner
        self.delta = float(delta)
        self.dim = inner.dim
        self.center = inner.center.copy()
        self.r = (1.0 - self.delta) * inner.r
        self.R = (1.0 - self.delta) * inner.R

    def _up(self, z):
        return self.center + (z - self.center) / (1.0 - self.delta)

    def _down(self, z):
        return self.center + (1.0 - self.delta) * (z - self.center)

    def tangent(self, v):
        return self.inner.tangent(v)

    def project(self, z):
        return self._down(self.inner.project(self._up(_vec(z, self.dim))))

    def contains(self, z, tol=TOL):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            return False
        return self.inner.contains(self._up(z), tol / (1.0 - self.delta))

    def boundary_distance(self, y):
        y = self._check_member(y)
        return (1.0 - self.delta) * self.inner.boundary_distance(self.inner.project(self._up(y)))

    def nearest_boundary_point(self, y):
        return self._down(self.inner.nearest_boundary_point(self._up(np.asarray(y, float))))

    def bounding_box(self):
        lo, hi = self.inner.bounding_box()
        return self._down(lo), self._down(hi)

    def describe(self):
        return {"type": "contracted", "delta": self.delta, "inner": self.inner.describe()}


def contract(body, delta):
    return Contracted(body, delta)


def project(body, z):
    return body.project(z)


def boundary_distance(body, y):
    return body.boundary_distance(y)


def contains(body, z, tol=TOL):
    return body.contains(z, tol)


def body_from_config(entry):
    """Build a body from a tagged record such as {"type": "ball", "radius": 1, "dim": 2}."""
    entry = dict(entry)
    kind = entry.pop("type", None)
    allowed = {
        "ball": {"radius", "dim", "center", "hull"},
        "box": {"lo", "hi"},
        "simplex": {"n"},
        "smoothed_simplex": {"n", "phi"},
        "contracted": {"delta", "inner"},
    }
    if kind not in allowed:
        raise ValueError(f"unknown body type {kind!r}")
    extra = set(entry) - allowed[kind]
    if extra:
        raise ValueError(f"unknown key(s) for body {kind!r}: {sorted(extra)}")
    if kind == "ball":
        dim = int(entry.get("dim", 1))
        center = entry.get("center", np.zeros(dim))
        return Ball(center, float(entry.get("radius", 1.0)), bool(entry.get("hull", False)))
    if kind == "box":
        return Box(entry["lo"], entry["hi"])
    if kind == "simplex":
        return Simplex(int(entry["n"]))
    if kind == "smoothed_simplex":
        return SmoothedSimplex(int(entry["n"]), float(entry["phi"]))
    return Contracted(body_from_config(entry["inner"]), float(entry["delta"]))


def grid_points(body, resolution=1e-2, max_points=250_000):
    """Deterministic grid of members of ``body``.

    The spacing starts at ``resolution`` and is widened if the grid over the
    bounding box would exceed ``max_points``.
    """
    lo, hi = body.bounding_box()
    simplex_like = isinstance(body, (Simplex, SmoothedSimplex)) or (
        isinstance(body, Contracted) and isinstance(_innermost(body), (Simplex, SmoothedSimplex))
    ) or getattr(_innermost(body), "hull", False)
    free = body.dim - 1 if simplex_like else body.dim
    step = resolution
    span = float(np.max(hi - lo))
    while (span / step + 1) ** free > max_points:
        step *= 1.5
    if span / step < 8:
        return _sampled_points(body, max_points=min(max_points, 20_000))
    axes = [np.arange(lo[i], hi[i] + 0.5 * step, step) for i in range(free)]
    mesh = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
    if simplex_like:
        last = body.center.sum() - mesh.sum(axis=1, keepdims=True)
        mesh = np.hstack([mesh, last])
    keep = np.array([body.contains(p) for p in mesh], dtype=bool) if len(mesh) < 5000 else _bulk_contains(body, mesh)
    return mesh[keep]


def _sampled_points(body, max_points=20_000, seed=0):
    """Deterministic scatter of members for bodies too high-dimensional to grid."""
    rng = np.random.default_rng(seed)
    u = np.array([body.tangent(v) for v in rng.standard_normal((max_points, body.dim))])
    u /= np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-300)
    rad = body.R * rng.uniform(size=(max_points, 1)) ** (1.0 / body.dim)
    pts = np.array([body.project(p) for p in body.center + u * rad])
    return np.vstack([body.center[None, :], pts])


def _innermost(body):
    while isinstance(body, Contracted):
        body = body.inner
    return body


def _bulk_contains(body, pts):
    inner = _innermost(body)
    scale = 1.0
    b = body
    while isinstance(b, Contracted):
        scale *= 1.0 - b.delta
        b = b.inner
    c = inner.center
    q = c + (pts - c) / scale
    if isinstance(inner, Ball):
        d = q - c
        if inner.hull:
            d = d - d.mean(axis=1, keepdims=True)
        return np.linalg.norm(d, axis=1) <= inner.radius + TOL
    if isinstance(inner, Box):
        return np.all((q >= inner.lo - TOL) & (q <= inner.hi + TOL), axis=1)
    if isinstance(inner, SmoothedSimplex):
        q = (q - inner.phi * c) / (1.0 - inner.phi)
    if isinstance(inner, (Simplex, SmoothedSimplex)):
        return np.all(q >= -TOL, axis=1) & (np.abs(q.sum(axis=1) - 1.0) <= TOL)
    return np.array([body.contains(p) for p in pts], dtype=bool)
