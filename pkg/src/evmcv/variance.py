"""Empirical variance, reduced values and the cost-weighted efficiency."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

CSV_COLUMNS = (
    "experiment_id",
    "n_train",
    "n_test",
    "svar",
    "svar_evm",
    "svar_ls",
    "eff_evm",
    "eff_ls",
    "ratio",
    "seed",
)


def empirical_variance(values) -> float:
    """The pairwise U-statistic ``1/(n(n-1)) sum_{i<j} (v_i - v_j)^2``.

    Computed in O(n) as the ``1/(n-1)``-normalized centered sum of squares,
    with the first-order correction term of the corrected two-pass algorithm
    so the result stays accurate when the mean dwarfs the spread.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    n = v.size
    if n < 2:
        raise ValueError("empirical variance needs at least 2 values")
    dev = v - v.mean()
    ss = np.dot(dev, dev) - dev.sum() ** 2 / n
    return max(float(ss) / (n - 1), 0.0)


def reduced_values(f, family, a, data) -> np.ndarray:
    """``f(X_i) - zeta_a(X_i)`` for every row of ``data``."""
    pts = getattr(data, "points", data)
    return np.asarray(f(pts), dtype=float) - family.eval(a, pts)


@dataclass(frozen=True)
class CostModel:
    """Per-point evaluation costs of the integrand and the control variate."""

    cost_f: int = 1
    cost_cv: int = 2

    def __post_init__(self):
        if self.cost_f < 1 or self.cost_cv < 1:
            raise ValueError("costs must be >= 1")


def efficiency(svar: float, svar_method: float, cost: CostModel = CostModel()) -> float:
    """``svar * cost_f / (svar_method * (cost_f + cost_cv))``.

    A zero ``svar_method`` gives ``math.inf``; see :attr:`VarianceReport.eff_evm_infinite`.
    """
    if svar_method < 0:
        raise ValueError("svar_method must be non-negative")
    if svar_method == 0:
        return math.inf
    return (svar * cost.cost_f) / (svar_method * (cost.cost_f + cost.cost_cv))


@dataclass(frozen=True)
class VarianceReport:
    svar: float
    svar_evm: float
    svar_ls: Optional[float] = None
    cost: CostModel = CostModel()

    @property
    def eff_evm(self) -> float:
        return efficiency(self.svar, self.svar_evm, self.cost)

    @property
    def eff_ls(self) -> Optional[float]:
        if self.svar_ls is None:
            return None
        return efficiency(self.svar, self.svar_ls, self.cost)

    @property
    def eff_evm_infinite(self) -> bool:
        return self.svar_evm == 0

    @property
    def ratio(self) -> float:
        return math.inf if self.svar_evm == 0 else self.svar / self.svar_evm
