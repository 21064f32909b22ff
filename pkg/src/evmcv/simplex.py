"""Nelder-Mead direct search.

Standard coefficients (reflection 1, expansion 2, contraction 0.5, shrink 0.5)
with the Lagarias et al. (1998) acceptance rules.  Proposed points are clipped
into an optional box; non-finite objective values count as ``+inf``.  Vertex
ties are broken by index (stable sort), so a run is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REFLECT = 1.0
EXPAND = 2.0
CONTRACT = 0.5
SHRINK = 0.5


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool
    history: list = field(default_factory=list)


def _safe(fun):
    def wrapped(x):
        val = fun(x)
        return float(val) if np.isfinite(val) else np.inf

    return wrapped


def nelder_mead(fun, x0, step=0.1, max_iterations=2000, tolerance=1e-9, bounds=None):
    """Minimize ``fun`` from ``x0``.

    Parameters
    ----------
    fun : callable
        Maps a 1-D array to a float.
    x0 : array_like
        Starting point; becomes vertex 0 of the initial simplex.
    step : float or array_like
        Vertex ``i + 1`` is ``x0 + step_i * e_i``.  A scalar step is scaled
        by ``max(|x0_i|, 1)`` per coordinate.
    max_iterations : int
    tolerance : float
        Stop once ``max(f) - min(f)`` over the simplex falls below this.
    bounds : (lower, upper) or None
        Every proposed point is clipped into the box.

    Returns
    -------
    SimplexResult
        ``history`` holds the best value after every iteration.
    """
    fun = _safe(fun)
    x0 = np.asarray(x0, dtype=float).copy()
    n = x0.size
    if bounds is not None:
        lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), x0.shape) for b in bounds)
        clip = lambda x: np.clip(x, lo, hi)  # noqa: E731
    else:
        clip = lambda x: x  # noqa: E731
    x0 = clip(x0)

    if np.ndim(step) == 0:
        steps = float(step) * np.maximum(np.abs(x0), 1.0)
    else:
        steps = np.asarray(step, dtype=float)

    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        v = x0.copy()
        v[i] += steps[i]
        v = clip(v)
        if v[i] == x0[i]:  # pinned against the box; step inward
            v[i] = x0[i] - steps[i]
            v = clip(v)
        sim[i + 1] = v
    fs = np.array([fun(v) for v in sim])
    nfev = n + 1
    if not np.isfinite(fs[0]):
        raise ValueError("objective is not finite at the starting point")

    history = []
    it = 0
    converged = False
    while it < max_iterations:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if fs[-1] - fs[0] < tolerance:
            converged = True
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]

        xr = clip(centroid + REFLECT * (centroid - worst))
        fr = fun(xr)
        nfev += 1
        if fr < fs[0]:
            xe = clip(centroid + EXPAND * (xr - centroid))
            fe = fun(xe)
            nfev += 1
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
        elif fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
        else:
            if fr < fs[-1]:
                xc = clip(centroid + CONTRACT * (xr - centroid))
                fc = fun(xc)
                nfev += 1
                accept = fc <= fr
            else:
                xc = clip(centroid + CONTRACT * (worst - centroid))
                fc = fun(xc)
                nfev += 1
                accept = fc < fs[-1]
            if accept:
                sim[-1], fs[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    sim[i] = clip(sim[0] + SHRINK * (sim[i] - sim[0]))
                    fs[i] = fun(sim[i])
                nfev += n
        history.append(float(fs.min()))

    best = int(np.argmin(fs))  # first index among ties
    return SimplexResult(sim[best].copy(), float(fs[best]), it, nfev, converged, history)
