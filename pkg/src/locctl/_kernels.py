"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``LOCCTL_NUMBA=0`` to force the numpy implementations. The numba path is
also skipped when numba cannot be imported.
"""
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAS_NUMBA and os.environ.get("LOCCTL_NUMBA", "1").strip() not in ("0", "false", "no")


# --- simplex projection -----------------------------------------------------

def project_simplex_np(z):
    n = z.shape[0]
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    k = idx[u - css / idx > 0][-1]
    tau = css[k - 1] / k
    return np.maximum(z - tau, 0.0)


@njit(cache=True)
def project_simplex_nb(z):
    n = z.shape[0]
    u = np.sort(z)[::-1]
    css = 0.0
    tau = 0.0
    for i in range(n):
        css += u[i]
        t = (css - 1.0) / (i + 1)
        if u[i] - t > 0:
            tau = t
    out = np.empty(n)
    for i in range(n):
        out[i] = max(z[i] - tau, 0.0)
    return out


# --- aggregate distance losses over a grid of comparators ---------------------

def distance_totals_np(points, centers, power):
    """Sum over rows of ``centers`` of ||point - c||**power, for every point."""
    out = np.zeros(points.shape[0])
    chunk = max(1, 2_000_000 // max(1, centers.shape[0] * points.shape[1]))
    for s in range(0, points.shape[0], chunk):
        p = points[s:s + chunk]
        d = np.sqrt(((p[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2))
        out[s:s + chunk] = (d ** power).sum(axis=1)
    return out


@njit(cache=True)
def distance_totals_nb(points, centers, power):
    m, n = points.shape
    T = centers.shape[0]
    out = np.zeros(m)
    for i in range(m):
        acc = 0.0
        for t in range(T):
            s = 0.0
            for j in range(n):
                d = points[i, j] - centers[t, j]
                s += d * d
            acc += np.sqrt(s) ** power
        out[i] = acc
    return out


# --- systematic sampling of inclusion marginals -------------------------------

def systematic_menus_np(mu, k):
    """Decompose marginals ``mu`` (sum k, each <= 1) into k-subsets.

    Returns (menus, weights): menus is (M, k) int array of item indices,
    weights sum to 1 and item i appears with total weight mu[i].
    """
    n = mu.shape[0]
    starts = np.concatenate(([0.0], np.cumsum(mu)[:-1]))
    cuts = np.unique(np.concatenate(([0.0, 1.0], np.mod(starts, 1.0))))
    cuts = cuts[(cuts >= 0.0) & (cuts <= 1.0)]
    menus = []
    weights = []
    ends = starts + mu
    for a, b in zip(cuts[:-1], cuts[1:]):
        w = b - a
        if w <= 0:
            continue
        tau = 0.5 * (a + b)
        menu = np.empty(k, dtype=np.int64)
        for j in range(k):
            p = tau + j
            i = np.searchsorted(ends, p, side="right")
            menu[j] = min(i, n - 1)
        menus.append(menu)
        weights.append(w)
    return np.array(menus, dtype=np.int64).reshape(-1, k), np.array(weights)


@njit(cache=True)
def _searchsorted_right(a, v):
    lo = 0
    hi = a.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def systematic_menus_nb(mu, k):
    n = mu.shape[0]
    starts = np.zeros(n)
    for i in range(1, n):
        starts[i] = starts[i - 1] + mu[i - 1]
    ends = starts + mu
    raw = np.empty(n + 2)
    raw[0] = 0.0
    raw[1] = 1.0
    for i in range(n):
        raw[i + 2] = starts[i] - np.floor(starts[i])
    cuts = np.unique(raw)
    menus = np.empty((cuts.shape[0], k), dtype=np.int64)
    weights = np.empty(cuts.shape[0])
    m = 0
    for c in range(cuts.shape[0] - 1):
        a = cuts[c]
        b = cuts[c + 1]
        if b - a <= 0:
            continue
        tau = 0.5 * (a + b)
        for j in range(k):
            i = _searchsorted_right(ends, tau + j)
            menus[m, j] = min(i, n - 1)
        weights[m] = b - a
        m += 1
    return menus[:m], weights[:m]


# numba's sort loses to numpy's vectorized sort on long vectors
SIMPLEX_NUMBA_MAX = 1024


def _project_simplex_dispatch(z):
    if z.shape[0] > SIMPLEX_NUMBA_MAX:
        return project_simplex_np(z)
    return project_simplex_nb(z)


if USE_NUMBA:
    project_simplex = _project_simplex_dispatch
    distance_totals = distance_totals_nb
    systematic_menus = systematic_menus_nb
else:
    project_simplex = project_simplex_np
    distance_totals = distance_totals_np
    systematic_menus = systematic_menus_np

BACKEND = "numba" if USE_NUMBA else "numpy"
