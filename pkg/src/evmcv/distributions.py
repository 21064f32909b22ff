"""Score-equipped densities and seeded samplers.

All densities are stored through their log-density *up to an additive
constant*; nothing in the package ever needs a normalizing constant.  Points
are arrays whose last axis has length ``dim``; a batch of ``n`` points is an
``(n, dim)`` array and every pointwise method maps it to ``(n,)`` (or
``(n, dim)`` for the score).

Coordinate indices are zero-based throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import derive_seed, generator

# points closer than this to a zero lower endpoint are treated as outside the
# numerical support (1/x terms in the log-normal score)
LOWER_GUARD = 1e-12


class OutsideSupportError(ValueError):
    """Raised when a density is evaluated outside its support."""


@dataclass(frozen=True)
class Dataset:
    """An ``(n, d)`` sample together with where it came from."""

    points: np.ndarray
    seed: int
    density_id: str

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValueError(f"a Dataset needs at least 2 rows, got shape {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def column(self, i: int) -> "Dataset":
        return Dataset(self.points[:, i : i + 1], self.seed, self.density_id)


class Density:
    """Base class; subclasses fill in the ``_``-prefixed hooks.

    Attributes
    ----------
    dim : int
    lower, upper : ndarray
        Per-coordinate support endpoints (may be infinite).
    density_id : str
        Identifier used in config files.
    """

    dim: int
    density_id: str

    # --- hooks -----------------------------------------------------------
    def _log_density(self, x):
        raise NotImplementedError

    def _score(self, x):
        raise NotImplementedError

    def _hessian_ratio(self, x):
        raise NotImplementedError

    def _sample(self, rng, count, seed):
        raise NotImplementedError

    has_second_ratio = False

    @property
    def lower(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def upper(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def vanishes_at_boundary(self) -> np.ndarray:
        """Per coordinate: does pi go to 0 at both support endpoints?

        Where it does not (e.g. ``Exp(1)`` at 0), a Stein control variate
        needs its constant term pinned to zero.
        """
        return np.ones(self.dim, dtype=bool)

    # --- public API ------------------------------------------------------
    def _prepare(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        if x.shape[-1] != self.dim:
            if self.dim == 1:
                x = x[..., None]
            else:
                raise ValueError(f"expected last axis of length {self.dim}, got shape {x.shape}")
        self.check_support(x)
        return x

    def check_support(self, x):
        lo = np.where(self.lower == 0.0, LOWER_GUARD, self.lower)
        if np.any(x < lo) or np.any(x > self.upper) or np.any(np.isnan(x)):
            raise OutsideSupportError(f"{self.density_id}: point(s) outside support")
        # open endpoints
        finite_lo = np.isfinite(self.lower)
        if np.any(finite_lo) and np.any((x == self.lower) & finite_lo):
            raise OutsideSupportError(f"{self.density_id}: point(s) on the support boundary")

    def log_density(self, x):
        """Log-density up to an additive constant."""
        return self._log_density(self._prepare(x))

    def score(self, x):
        """Gradient of the log-density, same shape as ``x`` (as a batch)."""
        return self._score(self._prepare(x))

    def hessian_ratio(self, x):
        """``(..., d, d)`` array of second-derivative ratios d_i d_j pi / pi."""
        if not self.has_second_ratio:
            raise NotImplementedError(f"{self.density_id} does not expose second-derivative ratios")
        return self._hessian_ratio(self._prepare(x))

    def second_ratio(self, i, j, x):
        return self.hessian_ratio(x)[..., i, j]

    def sample(self, count: int, seed: int) -> Dataset:
        """Draw ``count`` i.i.d. points; identical ``(count, seed)`` give identical data."""
        if count < 2:
            raise ValueError("count must be at least 2")
        pts = self._sample(generator(seed), int(count), int(seed))
        return Dataset(pts, int(seed), self.density_id)


def _support_arrays(lo, hi, dim):
    return np.full(dim, lo, dtype=float), np.full(dim, hi, dtype=float)


@dataclass(frozen=True)
class StdNormal(Density):
    dim: int
    density_id: str = field(default="std_normal", init=False)
    has_second_ratio = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    @property
    def lower(self):
        return np.full(self.dim, -np.inf)

    @property
    def upper(self):
        return np.full(self.dim, np.inf)

    def _log_density(self, x):
        return -0.5 * np.sum(x * x, axis=-1)

    def _score(self, x):
        return -x

    def _hessian_ratio(self, x):
        return x[..., :, None] * x[..., None, :] - np.eye(self.dim)

    def score_derivative(self, x):
        # 1-D only: d/dx of the score
        return -np.ones_like(np.asarray(x, dtype=float))

    def _sample(self, rng, count, seed):
        return rng.standard_normal((count, self.dim))


@dataclass(frozen=True)
class Exponential(Density):
    """Unit-rate exponential on (0, inf)."""

    dim: int = field(default=1, init=False)
    density_id: str = field(default="exp1", init=False)
    has_second_ratio = True

    @property
    def lower(self):
        return np.zeros(1)

    @property
    def upper(self):
        return np.full(1, np.inf)

    @property
    def vanishes_at_boundary(self):
        return np.zeros(1, dtype=bool)

    def _log_density(self, x):
        return -x[..., 0]

    def _score(self, x):
        return -np.ones_like(x)

    def _hessian_ratio(self, x):
        return np.ones(x.shape[:-1] + (1, 1))

    def score_derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def _sample(self, rng, count, seed):
        return rng.standard_exponential((count, 1))


@dataclass(frozen=True)
class CovarianceSpec:
    """A symmetric positive-definite covariance and its eigenvalues."""

    matrix: np.ndarray
    eigenvalues: np.ndarray = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"covariance must be square, got shape {m.shape}")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
            raise ValueError("covariance is not symmetric to 1e-12")
        m = 0.5 * (m + m.T)
        ev = np.linalg.eigvalsh(m) if self.eigenvalues is None else np.asarray(self.eigenvalues, float)
        if np.any(ev <= 0):
            raise ValueError("covariance is not positive definite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "eigenvalues", np.sort(ev))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def to_json(self) -> str:
        return json.dumps(self.matrix.tolist())

    @classmethod
    def from_json(cls, text: str) -> "CovarianceSpec":
        return cls(np.array(json.loads(text), dtype=float))


@dataclass(frozen=True, eq=False)
class MultivariateNormal(Density):
    """Zero-mean Gaussian N(0, Sigma)."""

    spec: CovarianceSpec
    density_id: str = field(default="mvn", init=False)
    has_second_ratio = True

    def __post_init__(self):
        try:
            chol = np.linalg.cholesky(self.spec.matrix)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not positive definite") from exc
        prec = np.linalg.inv(self.spec.matrix)
        prec = 0.5 * (prec + prec.T)
        for arr in (chol, prec):
            arr.setflags(write=False)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "precision", prec)

    @property
    def dim(self):
        return self.spec.dim

    @property
    def lower(self):
        return np.full(self.dim, -np.inf)

    @property
    def upper(self):
        return np.full(self.dim, np.inf)

    def _log_density(self, x):
        return -0.5 * np.einsum("...i,ij,...j->...", x, self.precision, x)

    def _score(self, x):
        return -x @ self.precision

    def _hessian_ratio(self, x):
        px = x @ self.precision
        return px[..., :, None] * px[..., None, :] - self.precision

    def _sample(self, rng, count, seed):
        z = rng.standard_normal((count, self.dim))
        return z @ self._chol.T


@dataclass(frozen=True)
class LogNormalGBM(Density):
    """Law of X(t) for dX = X (mu dt + sigma dW), X(0) = x0."""

    x0: float
    mu: float
    sigma: float
    t: float
    dim: int = field(default=1, init=False)
    density_id: str = field(default="lognormal_gbm", init=False)
    has_second_ratio = True

    def __post_init__(self):
        if not (self.x0 > 0 and self.sigma > 0 and self.t > 0):
            raise ValueError("x0, sigma and t must be positive")

    @property
    def log_mean(self):
        return math.log(self.x0) + (self.mu - 0.5 * self.sigma**2) * self.t

    @property
    def log_var(self):
        return self.sigma**2 * self.t

    @property
    def lower(self):
        return np.zeros(1)

    @property
    def upper(self):
        return np.full(1, np.inf)

    def _log_density(self, x):
        lx = np.log(x[..., 0])
        return -lx - (lx - self.log_mean) ** 2 / (2.0 * self.log_var)

    def _score(self, x):
        lx = np.log(x)
        return -1.0 / x - (lx - self.log_mean) / (x * self.log_var)

    def score_derivative(self, x):
        x = np.asarray(x, dtype=float)
        lx = np.log(x)
        return 1.0 / x**2 - (1.0 - lx + self.log_mean) / (x**2 * self.log_var)

    def _hessian_ratio(self, x):
        s = self._score(x)
        return (self.score_derivative(x) + s * s)[..., None]

    def _sample(self, rng, count, seed):
        z = rng.standard_normal((count, 1))
        return np.exp(self.log_mean + math.sqrt(self.log_var) * z)


@dataclass(frozen=True, eq=False)
class ProductDensity(Density):
    """Independent coordinates, one 1-D density per coordinate."""

    components: tuple
    density_id: str = field(default="product", init=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a product density needs at least one component")
        for c in comps:
            if c.dim != 1:
                raise ValueError("product components must be one-dimensional")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return len(self.components)

    @property
    def has_second_ratio(self):
        return all(c.has_second_ratio for c in self.components)

    @property
    def lower(self):
        return np.concatenate([c.lower for c in self.components])

    @property
    def upper(self):
        return np.concatenate([c.upper for c in self.components])

    @property
    def vanishes_at_boundary(self):
        return np.concatenate([c.vanishes_at_boundary for c in self.components])

    def _log_density(self, x):
        return sum(c._log_density(x[..., i : i + 1]) for i, c in enumerate(self.components))

    def _score(self, x):
        return np.concatenate(
            [c._score(x[..., i : i + 1]) for i, c in enumerate(self.components)], axis=-1
        )

    def _hessian_ratio(self, x):
        s = self._score(x)
        h = s[..., :, None] * s[..., None, :]
        for i, c in enumerate(self.components):
            h[..., i, i] = c._hessian_ratio(x[..., i : i + 1])[..., 0, 0]
        return h

    def _sample(self, rng, count, seed):
        cols = [
            c.sample(count, derive_seed(seed, f"component/{i}")).points
            for i, c in enumerate(self.components)
        ]
        return np.hstack(cols)


# --- constructors ------------------------------------------------------------


def std_normal(dim: int = 1) -> StdNormal:
    return StdNormal(dim)


def exponential_unit() -> Exponential:
    return Exponential()


def mvn(spec: CovarianceSpec) -> MultivariateNormal:
    if not isinstance(spec, CovarianceSpec):
        spec = CovarianceSpec(spec)
    return MultivariateNormal(spec)


def lognormal_gbm(x0: float, mu: float, sigma: float, t: float) -> LogNormalGBM:
    return LogNormalGBM(float(x0), float(mu), float(sigma), float(t))


def product_density(components: Sequence[Density]) -> ProductDensity:
    return ProductDensity(tuple(components))


def random_covariance(dim: int, seed: int) -> CovarianceSpec:
    """Sigma = Q diag(lam) Q^T with Q from the QR factorization of a
    Uniform[-1, 1] matrix and ``lam`` evenly spaced on [0.2, 2.0]."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = generator(seed)
    q, _ = np.linalg.qr(rng.uniform(-1.0, 1.0, size=(dim, dim)))
    lam = np.linspace(0.2, 2.0, dim)
    sigma = (q * lam) @ q.T
    return CovarianceSpec(0.5 * (sigma + sigma.T), eigenvalues=lam)
