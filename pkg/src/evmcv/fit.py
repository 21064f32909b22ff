"""EVM and least-squares fitting of control-variate parameters."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .distributions import Dataset
from .families import BasketExpFamily, CvFamily
from .simplex import nelder_mead
from .variance import empirical_variance


class FitError(RuntimeError):
    """A fit could not produce a parameter vector."""


class FitMethod(str, enum.Enum):
    EVM_LINEAR = "EVM_LINEAR"
    EVM_NONLINEAR = "EVM_NONLINEAR"
    LS_LINEAR = "LS_LINEAR"


@dataclass
class FitResult:
    a_hat: np.ndarray
    objective: float
    method: FitMethod
    iterations: int
    converged: bool
    start_point: Optional[np.ndarray] = None
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["a_hat"] = [float(v) for v in self.a_hat]
        out["start_point"] = None if self.start_point is None else [float(v) for v in self.start_point]
        out["method"] = self.method.value
        del out["history"]
        return out


@dataclass(frozen=True)
class SearchOptions:
    max_iterations: int = 2000
    tolerance: float = 1e-9
    restarts: int = 1
    parameter_box: Optional[tuple] = None
    initial_step: float = 0.1

    def __post_init__(self):
        if self.max_iterations < 1 or self.restarts < 1:
            raise ValueError("max_iterations and restarts must be positive")
        if not self.tolerance > 0 or not self.initial_step > 0:
            raise ValueError("tolerance and initial_step must be positive")


def _fvalues(f, data):
    return np.asarray(f(data.points), dtype=float).reshape(-1)


def _solve_spd(mat, rhs):
    """Solve a symmetric PSD system; one ridge retry if it looks singular."""

    def attempt(m):
        try:
            chol = np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return None
        diag = np.diag(chol)
        if diag.size and (diag.min() ** 2) <= np.finfo(float).eps * (diag.max() ** 2):
            return None
        y = np.linalg.solve(chol, rhs)
        return np.linalg.solve(chol.T, y)

    sol = attempt(mat)
    if sol is None:
        m = mat.shape[0]
        ridge = 1e-10 * np.trace(mat) / max(m, 1)
        sol = attempt(mat + ridge * np.eye(m))
    if sol is None or not np.all(np.isfinite(sol)):
        raise FitError(
            f"normal equations are singular even after the ridge fallback (size {mat.shape[0]})"
        )
    return sol


def _embed(family, free_values):
    a = np.zeros(family.param_dim)
    a[family.free] = free_values
    return a


def objective(f, family: CvFamily, a, data: Dataset) -> float:
    """Empirical variance of ``f - zeta_a`` over ``data``."""
    return empirical_variance(_fvalues(f, data) - family.eval(a, data.points))


def evm_fit_linear(f, family: CvFamily, data: Dataset) -> FitResult:
    """Closed-form EVM: sample-covariance normal equations in the free parameters."""
    if not family.linear:
        raise ValueError(f"{family.family_id} is not linear; use evm_fit_nonlinear")
    fv = _fvalues(f, data)
    h = family.basis(data.points)[:, family.free]
    hc = h - h.mean(axis=0)
    fc = fv - fv.mean()
    n = data.n
    cov = hc.T @ hc / (n - 1)
    rhs = hc.T @ fc / (n - 1)
    a = _embed(family, _solve_spd(cov, rhs))
    return FitResult(a, objective(f, family, a, data), FitMethod.EVM_LINEAR, 1, True, None)


def ls_fit_linear(f, family: CvFamily, data: Dataset) -> FitResult:
    """Least squares ``sum_i (f(X_i) - zeta_a(X_i))^2``, no intercept."""
    if not family.linear:
        raise ValueError(f"{family.family_id} is not linear")
    fv = _fvalues(f, data)
    h = family.basis(data.points)[:, family.free]
    a = _embed(family, _solve_spd(h.T @ h, h.T @ fv))
    resid = fv - family.eval(a, data.points)
    return FitResult(a, float(resid @ resid), FitMethod.LS_LINEAR, 1, True, None)


def ls_objective(f, family, a, data) -> float:
    resid = _fvalues(f, data) - family.eval(a, data.points)
    return float(resid @ resid)


def finite_difference_gradient(f, family, a, data, step=1e-5) -> np.ndarray:
    """Central-difference gradient of the EVM objective (zeros at masked entries)."""
    a = family.admissible(a)
    grad = np.zeros(family.param_dim)
    for i in np.flatnonzero(family.free):
        up, dn = a.copy(), a.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (objective(f, family, up, data) - objective(f, family, dn, data)) / (2 * step)
    return grad


def evm_fit_nonlinear(
    f, family: CvFamily, data: Dataset, start, opts: SearchOptions = SearchOptions()
) -> FitResult:
    """Nelder-Mead on ``a -> V_n(f - zeta_a)`` over the free parameters.

    ``opts.restarts`` runs are chained, each from the previous best with a
    fresh simplex; the chain stops early once a run gains less than
    ``opts.tolerance``.
    """
    start = family.admissible(start)
    fv = _fvalues(f, data)
    pts, _ = family._points(data.points)
    free = family.free

    def obj(z):
        a = np.zeros(family.param_dim)
        a[free] = z
        with np.errstate(all="ignore"):
            return empirical_variance(fv - family._eval(a, pts))

    box = opts.parameter_box if opts.parameter_box is not None else family.default_box()
    bounds = None
    if box is not None:
        lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (family.param_dim,)) for b in box)
        bounds = (lo[free], hi[free])
        start = np.where(free, np.clip(start, lo, hi), 0.0)

    z = start[free]
    if not math.isfinite(obj(z)):
        raise FitError(f"{family.family_id}: objective is not finite at the start point")

    total_it, history, converged = 0, [], False
    best = obj(z)
    for _ in range(opts.restarts):
        res = nelder_mead(obj, z, step=opts.initial_step, max_iterations=opts.max_iterations,
                          tolerance=opts.tolerance, bounds=bounds)
        total_it += res.iterations
        history.extend(res.history)
        converged = res.converged
        gain = best - res.fun
        if res.fun <= best:
            z, best = res.x, res.fun
        if gain < opts.tolerance:
            break
    a = _embed(family, z)
    return FitResult(a, best, FitMethod.EVM_NONLINEAR, total_it, converged, start, history)


START_GRID_A0 = (-1.0, -0.5, 0.5, 1.0)
START_GRID_A1 = (0.5, 1.0, 2.0)


def fit_basket_1d(f_1d, density, variant, data, opts=SearchOptions()) -> FitResult:
    """Best 1-D basket fit over the deterministic grid of starts."""
    fam = BasketExpFamily(density, variant)
    best = None
    for a0 in START_GRID_A0:
        for a1 in START_GRID_A1:
            start = [a0, a1] if variant == 1 else [a0, a1, 0.0]
            try:
                res = evm_fit_nonlinear(f_1d, fam, data, start, opts)
            except FitError:
                continue
            if best is None or res.objective < best.objective:
                best = res
    if best is None:
        raise FitError("no grid start gave a finite objective")
    return best


def basket_start_point(
    f_1d: Sequence[Callable],
    densities: Sequence,
    variant: int,
    opts: SearchOptions = SearchOptions(),
    n: int = 1000,
    seed: int = 0,
) -> np.ndarray:
    """Start point for a d-asset basket fit assembled from per-asset 1-D fits.

    Asset ``i`` is fitted against ``f_1d[i]`` on its own ``n``-point sample
    drawn with ``seed`` (the same seed for every asset, so identical assets
    get identical blocks).  A failed asset contributes a zero block.
    """
    k = variant + 1
    blocks = []
    for f_i, dens in zip(f_1d, densities):
        try:
            data = dens.sample(n, seed)
            blocks.append(fit_basket_1d(f_i, dens, variant, data, opts).a_hat)
        except (FitError, ValueError, FloatingPointError):
            blocks.append(np.zeros(k))
    return np.concatenate(blocks)
