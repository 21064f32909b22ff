"""Independent ground truth: quadrature zero-variance solutions, Hermite
identities and the two-function lower-bound construction.

Nothing here uses the fitting code; these routines exist to check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .distributions import (
    Density,
    Exponential,
    LogNormalGBM,
    MultivariateNormal,
    ProductDensity,
    StdNormal,
    std_normal,
)
from .rng import generator


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive Simpson settings.

    ``window`` overrides the default truncation window of the density;
    ``cells`` is the number of grid cells the window is split into before
    adaptive refinement; ``max_subdivisions`` caps the total number of
    intervals ever examined.
    """

    tol: float = 1e-10
    window: Optional[tuple] = None
    cells: int = 2000
    max_subdivisions: int = 2_000_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


def default_window(density: Density):
    """Finite interval holding all but a negligible amount of mass."""
    if isinstance(density, StdNormal) or (isinstance(density, MultivariateNormal) and density.dim == 1):
        scale = 1.0 if isinstance(density, StdNormal) else math.sqrt(density.spec.matrix[0, 0])
        return (-10.0 * scale, 10.0 * scale)
    if isinstance(density, Exponential):
        return (1e-12, 50.0)
    if isinstance(density, LogNormalGBM):
        hi = density.x0 * math.exp(density.mu * density.t + 10 * density.sigma * math.sqrt(density.t))
        return (1e-12, hi)
    if isinstance(density, ProductDensity) and density.dim == 1:
        return default_window(density.components[0])
    raise ValueError(f"no default quadrature window for {density.density_id}")


def adaptive_simpson(func, lo, hi, tol, max_subdivisions=2_000_000):
    """Integrate ``func`` over each interval ``[lo[k], hi[k]]``.

    Adaptive Simpson with interval bisection, processed level by level so
    ``func`` is always called on whole arrays.  ``tol`` (scalar or one per
    interval) is the absolute tolerance of each interval and is halved at
    each bisection; accepted pieces get the usual Richardson correction.

    Returns
    -------
    values : ndarray
        One integral per interval.
    error : float
        Sum of the accepted local error estimates.
    """
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    itol = np.broadcast_to(np.asarray(tol, dtype=float), lo.shape).copy()
    cell = np.arange(lo.size)
    width = hi - lo
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = np.split(func(np.concatenate([lo, mid, hi])), 3)
    whole = width / 6.0 * (flo + 4.0 * fmid + fhi)

    values = np.zeros(lo.size)
    err = 0.0
    seen = lo.size
    while lo.size:
        q1 = 0.5 * (lo + mid)
        q3 = 0.5 * (mid + hi)
        f1, f3 = np.split(func(np.concatenate([q1, q3])), 2)
        h = width / 12.0
        left = h * (flo + 4.0 * f1 + fmid)
        right = h * (fmid + 4.0 * f3 + fhi)
        delta = left + right - whole
        tiny = np.abs(width) <= 1e-13 * np.maximum(1.0, np.abs(mid))
        done = (np.abs(delta) <= 15.0 * itol) | tiny
        if not np.all(np.isfinite(delta[done])):
            raise QuadratureError("integrand is not finite on the window")
        np.add.at(values, cell[done], (left + right + delta / 15.0)[done])
        err += float(np.sum(np.abs(delta[done]))) / 15.0

        keep = ~done
        if not np.any(keep):
            break
        seen += 2 * int(keep.sum())
        if seen > max_subdivisions:
            raise QuadratureError(f"no convergence within {max_subdivisions} subdivisions")
        lo_k, mid_k, hi_k = lo[keep], mid[keep], hi[keep]
        lo = np.concatenate([lo_k, mid_k])
        hi = np.concatenate([mid_k, hi_k])
        mid = np.concatenate([q1[keep], q3[keep]])
        flo = np.concatenate([flo[keep], fmid[keep]])
        fhi = np.concatenate([fmid[keep], fhi[keep]])
        fmid = np.concatenate([f1[keep], f3[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        cell = np.concatenate([cell[keep], cell[keep]])
        itol = np.concatenate([itol[keep], itol[keep]]) / 2.0
        width = hi - lo
    return values, err


def adaptive_simpson_cells(func, edges, tol=1e-10, max_subdivisions=2_000_000):
    """Per-cell integrals over a partition; ``tol`` is shared in proportion to cell width."""
    edges = np.asarray(edges, dtype=float)
    width = np.abs(np.diff(edges))
    share = width / width.sum() if width.sum() > 0 else np.ones_like(width)
    return adaptive_simpson(func, edges[:-1], edges[1:], tol * share, max_subdivisions)


def integrate(func, a, b, tol=1e-10, cells=64, max_subdivisions=2_000_000) -> float:
    vals, _ = adaptive_simpson_cells(func, np.linspace(a, b, cells + 1), tol, max_subdivisions)
    return float(vals.sum())


def _scalar_f(f):
    """Wrap a batch integrand ``(n, 1) -> (n,)`` as ``(n,) -> (n,)``."""

    def g(t):
        return np.asarray(f(np.asarray(t, dtype=float)[:, None]), dtype=float).reshape(-1)

    return g


def _unnormalized(density):
    def p(t):
        return np.exp(density._log_density(np.asarray(t, dtype=float)[:, None]))

    return p


def expectation(f, density: Density, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """``E_pi[f]`` as a ratio of two quadratures of the unnormalized density."""
    a, b = quad.window or default_window(density)
    p = _unnormalized(density)
    g = _scalar_f(f)
    mass = integrate(p, a, b, quad.tol, 256, quad.max_subdivisions)
    num = integrate(lambda t: p(t) * g(t), a, b, quad.tol * max(mass, 1e-300), 256,
                    quad.max_subdivisions)
    return num / mass


class ZeroVarianceSolution:
    """``phi*(x) = (1/pi(x)) int_A^x pi(t) (f(t) - E) dt`` on a 1-D window.

    The running integral is accumulated once over a uniform grid, from the
    left end up to the mode of ``pi`` and from the right end down to it, so
    each tail is integrated from its own (small) end.  Evaluating at ``x``
    adds the integral over the partial cell by the same adaptive rule.
    """

    def __init__(self, f, density: Density, quad: QuadratureSpec = QuadratureSpec()):
        if density.dim != 1:
            raise ValueError("the quadrature oracle is one-dimensional")
        self.density = density
        self.quad = quad
        self.window = quad.window or default_window(density)
        self.expectation = expectation(f, density, quad)
        p = _unnormalized(density)
        g = _scalar_f(f)
        e = self.expectation
        self._p = p
        self._integrand = lambda t: p(t) * (g(t) - e)

        a, b = self.window
        self.nodes = np.linspace(a, b, quad.cells + 1)
        self.nodes[0], self.nodes[-1] = a, b
        cellvals, self.quad_error = adaptive_simpson_cells(
            self._integrand, self.nodes, quad.tol, quad.max_subdivisions
        )
        self.split = int(np.argmax(p(self.nodes)))
        # left[k] = int_a^{node_k}, right[k] = int_{node_k}^b
        self._left = np.concatenate([[0.0], np.cumsum(cellvals)])
        self._right = np.concatenate([np.cumsum(cellvals[::-1])[::-1], [0.0]])
        self.mass = integrate(p, a, b, quad.tol, 256, quad.max_subdivisions)

    def boundary_values(self):
        """``pi * phi*`` (``pi`` normalized) at the two window ends.

        The left value integrates the whole window from the right end and vice
        versa, so both are non-trivial and should vanish.
        """
        return -self._right[0] / self.mass, self._left[-1] / self.mass

    def running_integral(self, x):
        """``int_A^x pi(t) (f(t) - E) dt`` (unnormalized ``pi``)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a, b = self.window
        if np.any(x < a) or np.any(x > b):
            raise ValueError("point outside the quadrature window")
        k = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self.nodes.size - 2)
        use_left = k < self.split
        # anchor: nearest node on the near side of the mode
        anchor = np.where(use_left, self.nodes[k], self.nodes[k + 1])
        base = np.where(use_left, self._left[k], -self._right[k + 1])
        edges_lo = np.minimum(anchor, x)
        edges_hi = np.maximum(anchor, x)
        sign = np.where(x >= anchor, 1.0, -1.0)
        partial, _ = adaptive_simpson(self._integrand, edges_lo, edges_hi,
                                      self.quad.tol * 1e-3, self.quad.max_subdivisions)
        return base + sign * partial

    def __call__(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = self.running_integral(x_arr) / self._p(np.atleast_1d(x_arr))
        return float(out[0]) if x_arr.ndim == 0 else out


def zero_variance_phi_1d(f, density: Density, quad: QuadratureSpec = QuadratureSpec()):
    return ZeroVarianceSolution(f, density, quad)


def verify_zero_variance(f, density, phi_star, grid, expectation_value=None, step=1e-5) -> float:
    """Max over ``grid`` of ``|f(x) - zeta_phi*(x) - E|``.

    ``zeta_phi* = phi*' + phi* * score`` with the derivative taken by central
    differences of step ``step``.
    """
    if expectation_value is None:
        expectation_value = getattr(phi_star, "expectation", None)
    if expectation_value is None:
        expectation_value = expectation(f, density)
    x = np.asarray(grid, dtype=float).reshape(-1)
    dphi = (np.asarray(phi_star(x + step)) - np.asarray(phi_star(x - step))) / (2 * step)
    zeta = dphi + np.asarray(phi_star(x)) * density.score(x[:, None])[:, 0]
    fx = np.asarray(f(x[:, None]), dtype=float).reshape(-1)
    return float(np.max(np.abs(fx - zeta - expectation_value)))


# --- Hermite identities --------------------------------------------------------


def hermite_values(k, x):
    """H_1 = x (minus the score) and H_2 = x^2 - 1 (the second ratio) of N(0, 1)."""
    dens = std_normal(1)
    pts = np.asarray(x, dtype=float).reshape(-1, 1)
    if k == 1:
        return -dens.score(pts)[:, 0]
    if k == 2:
        return dens.second_ratio(0, 0, pts)
    raise ValueError("k must be 1 or 2")


def hermite_expectation_check(k: int, n: int, seed: int):
    """Monte Carlo mean of H_k under N(0, 1) and its standard error."""
    vals = hermite_values(k, std_normal(1).sample(n, seed).points)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


# --- lower-bound construction ------------------------------------------------------


def lower_bound_probability(n: int) -> float:
    """``(1 - 1/n)^(n - 1)``."""
    return (1.0 - 1.0 / n) ** (n - 1)


def lower_bound_eps(n: int) -> float:
    """Atom weight making a size-``n`` sample miss both atoms with
    probability exactly ``(1 - 1/n)^(n - 1)``.

    This is ``1/(2n)`` shrunk by the factor that turns ``(1 - 1/n)^n`` into
    ``(1 - 1/n)^(n - 1)``; the conditional variance ``2 eps`` still exceeds
    ``1/(2n)``.
    """
    return 0.5 * (1.0 - lower_bound_probability(n) ** (1.0 / n))


def evm_select(labels: np.ndarray):
    """Adversarial empirical-variance minimizer over ``{g0 = 0, g1}``.

    ``labels`` holds sample points coded 0, 1, 2 for ``x1, x2, x3``;
    ``g1 = 1[x = x1] - 1[x = x2]``.  Ties go to ``g1``.  Returns the chosen
    index (0 or 1).
    """
    g1 = (labels == 0).astype(float) - (labels == 1).astype(float)
    return 1 if np.all(g1 == g1[0]) else 0


def lower_bound_scenario(n: int, trials: int, seed: int, eps: Optional[float] = None) -> float:
    """Fraction of trials whose selected function has variance >= 1/(2n)."""
    if n < 2 or trials < 1:
        raise ValueError("need n > 1 and trials >= 1")
    eps = lower_bound_eps(n) if eps is None else float(eps)
    if not 0 < eps <= 0.25:
        raise ValueError("eps must lie in (0, 1/4]")
    rng = generator(seed)
    labels = rng.choice(3, size=(trials, n), p=[eps, eps, 1.0 - 2.0 * eps])
    g1 = (labels == 0).astype(float) - (labels == 1).astype(float)
    pick_g1 = np.all(g1 == g1[:, :1], axis=1)
    var_selected = np.where(pick_g1, 2.0 * eps, 0.0)
    return float(np.mean(var_selected >= 1.0 / (2 * n)))


# --- score consistency -------------------------------------------------------------


def score_gradient_error(density: Density, points, step=1e-5) -> float:
    """Largest ``|fd - score| / max(1, |score|)`` over ``points``.

    ``fd`` is the central-difference gradient of ``log_density``.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    score = density.score(x)
    worst = 0.0
    for i in range(density.dim):
        up, dn = x.copy(), x.copy()
        up[:, i] += step
        dn[:, i] -= step
        fd = (density.log_density(up) - density.log_density(dn)) / (2 * step)
        err = np.abs(fd - score[:, i]) / np.maximum(1.0, np.abs(score[:, i]))
        worst = max(worst, float(np.max(err)))
    return worst
