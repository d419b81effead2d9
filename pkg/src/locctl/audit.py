"""Regret audits against offline comparators."""
from __future__ import annotations

import numpy as np

from .geometry import grid_points


def best_fixed_state(losses, body, T, resolution=1e-2, refine_iters=300):
    """(best aggregate loss, argmin) over a grid of members, refined by projected
    subgradient descent and compared against a known analytic minimizer."""
    if T == 0:
        return 0.0, body.center.copy()
    pts = grid_points(body, resolution)
    tot = losses.totals(pts, T)
    i = int(np.argmin(tot))
    best, arg = float(tot[i]), pts[i]
    y = arg.copy()
    step = resolution
    for k in range(refine_iters):
        g = losses.total_grad(y, T)
        ng = np.linalg.norm(g)
        if ng == 0:
            break
        y = body.project(y - step / np.sqrt(k + 1) * g / ng)
        v = float(losses.totals(y[None, :], T)[0])
        if v < best:
            best, arg = v, y.copy()
    a = losses.argmin(body, T)
    if a is not None:
        v = float(losses.totals(np.asarray(a, float)[None, :], T)[0])
        if v <= best:
            best, arg = v, np.asarray(a, float)
    return best, arg


def audit_regret(log, losses, body=None, benchmark="best_fixed_state_grid", comparator=None):
    """Realized total loss minus the comparator's total loss."""
    T = len(log)
    realized = float(np.sum(log.losses))
    if comparator is not None:
        return realized - float(comparator)
    if benchmark == "analytic_minimizer":
        a = losses.argmin(body, T)
        if a is None:
            raise ValueError("loss stream has no analytic minimizer")
        return realized - float(losses.totals(np.asarray(a)[None, :], T)[0])
    if benchmark == "best_fixed_state_grid":
        return realized - best_fixed_state(losses, body, T)[0]
    raise ValueError(f"benchmark {benchmark!r} needs an application-specific audit")


def cumulative_regret(log, losses, best_point):
    """Running regret against a fixed comparator point."""
    T = len(log)
    comp = np.array([losses.value(t, best_point) for t in range(T)])
    return np.cumsum(np.asarray(log.losses) - comp)
