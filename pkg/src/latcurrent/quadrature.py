"""Globally adaptive Gauss-Kronrod (G7/K15) quadrature for vectorized integrands."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# 15 nodes on [-1, 1]: -x0..-x6, 0, x6..x0
_NODES = np.concatenate([-_XK[:-1], [0.0], _XK[-2::-1]])
_WK15 = np.concatenate([_WK[:-1], [_WK[-1]], _WK[-2::-1]])
_WG7 = np.zeros(15)
_WG7[[1, 3, 5]] = _WG[:3]
_WG7[7] = _WG[3]
_WG7[[9, 11, 13]] = _WG[2::-1]


@dataclass
class QuadResult:
    value: float
    error: float
    panels: int
    evaluations: int
    converged: bool


def _gk_panels(f, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    k = half * (fx @ _WK15)
    g = half * (fx @ _WG7)
    return k, np.abs(k - g)


def integrate(f, breakpoints, atol: float = 1e-10, rtol: float = 0.0,
              max_panels: int = 20000) -> QuadResult:
    """Integrate ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    ``f`` must accept a 1-D array of abscissae.  Interior breakpoints seed the
    initial panels (put them at known peaks/kinks).  Panels are bisected, worst
    first in batches, until the summed |K15 - G7| estimate is at most
    ``max(atol, rtol*|value|)``.
    """
    pts = np.unique(np.asarray(breakpoints, dtype=float))
    if pts.size < 2:
        raise ValueError("need at least two distinct breakpoints")
    a, b = pts[:-1], pts[1:]
    val, err = _gk_panels(f, a, b)
    nevals = 15 * a.size
    while True:
        total, total_err = val.sum(), err.sum()
        target = max(atol, rtol * abs(total))
        if total_err <= target:
            return QuadResult(float(total), float(total_err), a.size, nevals, True)
        if a.size >= max_panels:
            return QuadResult(float(total), float(total_err), a.size, nevals, False)
        # split the panels that carry the bulk of the error
        order = np.argsort(err)[::-1]
        csum = np.cumsum(err[order])
        nsplit = int(np.searchsorted(csum, total_err - 0.5 * target)) + 1
        nsplit = min(max(nsplit, 1), max_panels - a.size, order.size)
        sel = np.zeros(a.size, dtype=bool)
        sel[order[:nsplit]] = True
        m = 0.5 * (a[sel] + b[sel])
        na = np.concatenate([a[sel], m])
        nb = np.concatenate([m, b[sel]])
        nv, ne = _gk_panels(f, na, nb)
        nevals += 15 * na.size
        a = np.concatenate([a[~sel], na])
        b = np.concatenate([b[~sel], nb])
        val = np.concatenate([val[~sel], nv])
        err = np.concatenate([err[~sel], ne])
