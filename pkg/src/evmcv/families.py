"""Zero-mean control-variate families built from Stein-type operators.

Every family evaluates ``zeta_a(x) = sum_i [d_i phi_i(x) + phi_i(x) * score_i(x)]``
(or, for the Gaussian Hermite family, second-derivative ratios), i.e. the
product-rule form of ``(1/pi) sum_i d_i (phi_i pi)``.  The density only enters
through its score, so normalizing constants never appear.

Parameter layouts (flat vectors, as serialized to JSON):

``poly1d``         ``(a_0, ..., a_deg)``, ``phi(x) = sum_k a_k x**k``
``additive_poly``  ``a[i, k]`` row-major: coordinate ``i`` owns ``a[(deg+1)*i : (deg+1)*(i+1)]``
``gauss_hermite``  ``d`` first-order weights, then ``a_ij`` for ``i <= j`` in row-major
                   upper-triangle order ``(0,0), (0,1), ..., (0,d-1), (1,1), ...``
``rotated_poly``   ``a`` (``d x 4``, row-major) followed by ``B`` (``d x d``, row-major)
``basket_exp1``    per asset ``(a_i0, a_i1)``, asset after asset
``basket_exp2``    per asset ``(a_i0, a_i1, a_i2)``, asset after asset
"""

from __future__ import annotations

import numpy as np

from .distributions import (
    Density,
    LogNormalGBM,
    MultivariateNormal,
    ProductDensity,
)

COST_UNITS = 2


class CvFamily:
    """A parametric control-variate family ``a -> zeta_a``.

    Subclasses implement :meth:`_eval`.  Linear families also implement
    :meth:`basis`, returning the ``(n, param_dim)`` design matrix with
    ``zeta_a(X) = basis(X) @ a``.
    """

    family_id = "abstract"
    linear = False

    def __init__(self, density: Density, param_dim: int, constraint_mask=None):
        self.density = density
        self.param_dim = int(param_dim)
        if constraint_mask is None:
            constraint_mask = np.zeros(self.param_dim, dtype=bool)
        mask = np.asarray(constraint_mask, dtype=bool)
        if mask.shape != (self.param_dim,):
            raise ValueError("constraint mask has the wrong length")
        mask.setflags(write=False)
        self.constraint_mask = mask
        self.cost_units = COST_UNITS

    def __repr__(self):
        return f"{type(self).__name__}(family_id={self.family_id!r}, param_dim={self.param_dim})"

    @property
    def free(self) -> np.ndarray:
        return ~self.constraint_mask

    def admissible(self, a) -> np.ndarray:
        """Copy of ``a`` with masked entries set to zero."""
        a = np.array(a, dtype=float).reshape(-1)
        if a.shape != (self.param_dim,):
            raise ValueError(f"{self.family_id}: expected {self.param_dim} parameters, got {a.size}")
        a[self.constraint_mask] = 0.0
        return a

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 0 or (x.ndim == 1 and self.density.dim > 1) or (
            x.ndim == 1 and x.size == 1
        )
        x = self.density._prepare(x)
        if x.ndim == 1:
            x = x[None, :]
        return x, single

    def eval(self, a, x):
        """``zeta_a`` at a point (returns a float) or a batch ``(n, d)`` (returns ``(n,)``)."""
        a = self.admissible(a)
        pts, single = self._points(x)
        out = self._eval(a, pts)
        return float(out[0]) if single else out

    __call__ = eval

    def _eval(self, a, x):
        raise NotImplementedError

    def basis(self, x) -> np.ndarray:
        raise NotImplementedError(f"{self.family_id} is not linear in its parameters")

    def default_box(self):
        """``(lower, upper)`` parameter bounds used by the nonlinear fitter, or None."""
        return None


class _LinearFamily(CvFamily):
    linear = True

    def _eval(self, a, x):
        return self.basis(x) @ a

    def basis(self, x):
        pts, _ = self._points(x)
        return self._basis(pts)


def first_order_stein(density: Density, phi, dphi):
    """Stein operator on a vector field given with its diagonal partials.

    ``phi(x)`` and ``dphi(x)`` map an ``(n, d)`` batch to ``(n, d)``: the field
    components and ``d phi_i / d x_i``.  Returns ``x -> sum_i [dphi_i + phi_i * score_i]``.
    """

    def zeta(x):
        pts = density._prepare(x)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        val = np.sum(dphi(pts) + phi(pts) * density._score(pts), axis=-1)
        return float(val[0]) if single else val

    return zeta


def _poly_columns(x, score, degree, dscale=1.0):
    """Columns ``dscale * k x^(k-1) + x^k score`` for k = 0..degree (1-D inputs)."""
    cols = []
    xk_minus = np.zeros_like(x)  # k * x^(k-1)
    xk = np.ones_like(x)
    for k in range(degree + 1):
        cols.append(dscale * xk_minus + xk * score)
        xk_minus = (k + 1) * xk
        xk = xk * x
    return np.stack(cols, axis=-1)


class Poly1dFamily(_LinearFamily):
    family_id = "poly1d"

    def __init__(self, density: Density, degree: int = 3):
        if density.dim != 1:
            raise ValueError("poly1d needs a one-dimensional density")
        self.degree = int(degree)
        mask = np.zeros(self.degree + 1, dtype=bool)
        mask[0] = not density.vanishes_at_boundary[0]
        super().__init__(density, self.degree + 1, mask)

    def _basis(self, x):
        return _poly_columns(x[:, 0], self.density._score(x)[:, 0], self.degree)


class AdditivePolyFamily(_LinearFamily):
    family_id = "additive_poly"

    def __init__(self, density: ProductDensity, degree: int = 3):
        if not isinstance(density, ProductDensity):
            raise ValueError("additive_poly needs a product density")
        self.degree = int(degree)
        m = self.degree + 1
        d = density.dim
        mask = np.zeros((d, m), dtype=bool)
        mask[:, 0] = ~density.vanishes_at_boundary
        super().__init__(density, d * m, mask.reshape(-1))

    def _basis(self, x):
        s = self.density._score(x)
        blocks = [_poly_columns(x[:, i], s[:, i], self.degree) for i in range(self.density.dim)]
        return np.concatenate(blocks, axis=-1)


class GaussHermiteFamily(_LinearFamily):
    """First-order score terms plus all second-derivative ratios ``i <= j``."""

    family_id = "gauss_hermite"

    def __init__(self, density: Density):
        if not density.has_second_ratio:
            raise ValueError("gauss_hermite needs a density with second-derivative ratios")
        d = density.dim
        self.pairs = np.array([(i, j) for i in range(d) for j in range(i, d)], dtype=int)
        super().__init__(density, d + len(self.pairs))

    def _basis(self, x):
        s = self.density._score(x)
        h = self.density._hessian_ratio(x)
        return np.concatenate([s, h[:, self.pairs[:, 0], self.pairs[:, 1]]], axis=-1)


def _cubic(a, y):
    """phi(y) and phi'(y) for row-wise cubic coefficients ``a`` (d, 4), ``y`` (n, d)."""
    phi = a[:, 0] + y * (a[:, 1] + y * (a[:, 2] + y * a[:, 3]))
    dphi = a[:, 1] + y * (2.0 * a[:, 2] + y * 3.0 * a[:, 3])
    return phi, dphi


class RotatedPolyFamily(CvFamily):
    """``sum_i (1/pi) d_i (phi_i((Bx)_i) pi)`` with cubic ``phi_i``; nonlinear in ``B``."""

    family_id = "rotated_poly"

    def __init__(self, density: Density, box: float = 10.0):
        d = density.dim
        self.d = d
        self.box = float(box)
        mask = np.zeros((d, 4), dtype=bool)
        mask[:, 0] = ~density.vanishes_at_boundary
        full = np.concatenate([mask.reshape(-1), np.zeros(d * d, dtype=bool)])
        super().__init__(density, 4 * d + d * d, full)

    def split(self, a):
        d = self.d
        return a[: 4 * d].reshape(d, 4), a[4 * d :].reshape(d, d)

    def pack(self, coef, rot):
        coef = np.asarray(coef, dtype=float).reshape(self.d, 4)
        rot = np.asarray(rot, dtype=float).reshape(self.d, self.d)
        return np.concatenate([coef.reshape(-1), rot.reshape(-1)])

    def _eval(self, a, x):
        coef, rot = self.split(a)
        y = x @ rot.T
        phi, dphi = _cubic(coef, y)
        return np.sum(np.diag(rot) * dphi + phi * self.density._score(x), axis=-1)

    def basis_given_rotation(self, rot, x):
        """Design matrix in the cubic coefficients with ``B`` held fixed."""
        pts, _ = self._points(x)
        rot = np.asarray(rot, dtype=float).reshape(self.d, self.d)
        y = pts @ rot.T
        s = self.density._score(pts)
        diag = np.diag(rot)
        cols = [_poly_columns(y[:, i], s[:, i], 3, diag[i]) for i in range(self.d)]
        return np.concatenate(cols, axis=-1)

    def default_box(self):
        return (np.full(self.param_dim, -self.box), np.full(self.param_dim, self.box))


class BasketExpFamily(CvFamily):
    """Sum over assets of Stein terms of ``a0 * exp(a1 ln x + a2 ln^2 x)``."""

    def __init__(self, density, variant: int = 1, exponent_box: float = 10.0):
        if variant not in (1, 2):
            raise ValueError("variant must be 1 or 2")
        comps = density.components if isinstance(density, ProductDensity) else (density,)
        for c in comps:
            if not isinstance(c, LogNormalGBM):
                raise ValueError("basket families need log-normal components")
        self.variant = variant
        self.family_id = f"basket_exp{variant}"
        self.k = variant + 1
        self.d = len(comps)
        self.exponent_box = float(exponent_box)
        super().__init__(density, self.k * self.d)

    def _eval(self, a, x):
        a = a.reshape(self.d, self.k)
        lx = np.log(x)
        expo = a[:, 1] * lx
        slope = np.broadcast_to(a[:, 1], lx.shape)
        if self.variant == 2:
            expo = expo + a[:, 2] * lx * lx
            slope = slope + 2.0 * a[:, 2] * lx
        phi = a[:, 0] * np.exp(expo)
        # phi'(x) = phi * (a1 + 2 a2 ln x) / x
        return np.sum(phi * (slope / x + self.density._score(x)), axis=-1)

    def default_box(self):
        lo = np.full((self.d, self.k), -self.exponent_box)
        hi = np.full((self.d, self.k), self.exponent_box)
        return lo.reshape(-1), hi.reshape(-1)


def poly1d_family(density, degree=3):
    return Poly1dFamily(density, degree)


def additive_poly_family(density, degree=3):
    return AdditivePolyFamily(density, degree)


def gaussian_hermite_family(density):
    return GaussHermiteFamily(density)


def rotated_poly_family(density):
    return RotatedPolyFamily(density)


def basket_exp_family(densities, variant=1):
    from .distributions import product_density

    if isinstance(densities, (list, tuple)):
        densities = product_density(densities)
    return BasketExpFamily(densities, variant)


def cv_mean_check(family: CvFamily, a, n: int, seed: int):
    """Monte Carlo mean and standard error of ``zeta_a`` over ``n`` fresh draws."""
    if n < 2:
        raise ValueError("n must be at least 2")
    a = family.admissible(a)
    if not np.any(a):
        return 0.0, 0.0
    vals = family.eval(a, family.density.sample(n, seed).points)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(n))


def random_parameters(family: CvFamily, rng) -> np.ndarray:
    """A random admissible parameter vector of moderate size.

    Exponents of the basket families stay small enough that the control
    variate keeps a finite variance; rotations stay near the identity.
    """
    a = rng.uniform(-1.0, 1.0, family.param_dim)
    if isinstance(family, RotatedPolyFamily):
        coef, rot = family.split(a)
        a = family.pack(coef, np.eye(family.d) + 0.3 * rot)
    elif isinstance(family, BasketExpFamily) and family.variant == 2:
        a = a.reshape(family.d, family.k)
        a[:, 2] *= 0.1
        a = a.reshape(-1)
    return family.admissible(a)
