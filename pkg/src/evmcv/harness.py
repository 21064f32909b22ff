"""Experiment runner: draw a training set, fit, draw an independent test set,
report variances and efficiencies.

Seeds: every experiment has one master seed; the training sample, test
sample, random covariance, basket initial prices and the 1-D basket start
fits each use their own stream derived from it (see :mod:`evmcv.rng`).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import distributions as dist
from . import families as fam
from .fit import (
    FitError,
    FitResult,
    SearchOptions,
    basket_start_point,
    evm_fit_linear,
    evm_fit_nonlinear,
    ls_fit_linear,
)
from .rng import derive_seed, generator
from .variance import CSV_COLUMNS, CostModel, VarianceReport, empirical_variance

DEFAULT_SEED = 20190813
TEST_CHUNK = 100_000


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


class ExperimentError(RuntimeError):
    """A run failed after it started; ``report`` holds what was computed."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# --- integrands ------------------------------------------------------------------


def sumsq(x):
    return np.sum(x * x, axis=1)


def sumexp(x):
    return np.sum(np.exp(x), axis=1)


def sumcos(x):
    return np.sum(np.cos(x), axis=1)


def invnorm(x):
    return 1.0 / (1.0 + np.sqrt(np.sum(x * x, axis=1)))


def basket_call(strike):
    def payoff(x):
        return np.maximum(np.sum(x, axis=1) - strike, 0.0)

    payoff.strike = strike
    return payoff


INTEGRANDS = {"sumsq": sumsq, "sumexp": sumexp, "sumcos": sumcos, "invnorm": invnorm,
              "basket_call": basket_call}
FAMILIES = ("poly1d", "additive_poly", "gauss_hermite", "rotated_poly", "basket_exp1",
            "basket_exp2")
DENSITIES = ("std_normal", "exp1", "mvn", "lognormal_gbm", "product")
START_RULES = ("zeros", "sigma_hat", "sigma_hat_inv_sqrt", "one_dim")


# --- configuration -----------------------------------------------------------------


@dataclass(frozen=True)
class BasketParams:
    """GBM basket: initial prices ~ Uniform[x0_low, x0_high], strike = sum of them."""

    t: float = 1.0
    mu: float = 0.5
    sigma: float = 1.0
    x0_low: float = 0.5
    x0_high: float = 1.5
    strike: object = "sum_x0"

    def __post_init__(self):
        if not (self.t > 0 and self.sigma > 0 and 0 < self.x0_low <= self.x0_high):
            raise ConfigError("basket: need t > 0, sigma > 0 and 0 < x0_low <= x0_high")
        if self.strike != "sum_x0" and not isinstance(self.strike, (int, float)):
            raise ConfigError("basket.strike must be 'sum_x0' or a number")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    density: dict
    integrand: str
    family: str
    n_train: int
    n_test: int
    seed: int = DEFAULT_SEED
    methods: tuple = ("evm",)
    family_options: dict = field(default_factory=dict)
    cost: CostModel = CostModel()
    search: SearchOptions = SearchOptions()
    start: object = "zeros"
    basket: Optional[BasketParams] = None
    reference: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_train < 2:
            raise ConfigError("n_train must be >= 2")
        if self.n_test < 2:
            raise ConfigError("n_test must be >= 2")
        if self.integrand not in INTEGRANDS:
            raise ConfigError(f"integrand: unknown id {self.integrand!r}")
        if self.family not in FAMILIES:
            raise ConfigError(f"family: unknown id {self.family!r}")
        if not isinstance(self.density, dict) or self.density.get("id") not in DENSITIES:
            raise ConfigError(f"density.id: unknown density {self.density!r}")
        methods = tuple(self.methods)
        if "evm" not in methods or not set(methods) <= {"evm", "ls"}:
            raise ConfigError("methods must contain 'evm' and only 'evm'/'ls'")
        object.__setattr__(self, "methods", methods)
        if isinstance(self.start, str) and self.start not in START_RULES:
            raise ConfigError(f"start: unknown rule {self.start!r}")
        if (self.integrand == "basket_call") != (self.basket is not None):
            raise ConfigError("basket: required exactly when integrand is 'basket_call'")
        if self.family.startswith("basket") and self.basket is None:
            raise ConfigError("family: basket families need a [basket] section")
        if self.integrand == "sumexp" and _uses_exponential(self.density):
            raise ConfigError("integrand: 'sumexp' has infinite variance under exp1")

    def to_dict(self) -> dict:
        out = {
            "experiment_id": self.experiment_id,
            "density": self.density,
            "integrand": self.integrand,
            "family": self.family,
            "family_options": dict(self.family_options),
            "methods": list(self.methods),
            "n_train": self.n_train,
            "n_test": self.n_test,
            "seed": self.seed,
            "start": self.start if isinstance(self.start, str) else [float(v) for v in self.start],
            "cost": {"cost_f": self.cost.cost_f, "cost_cv": self.cost.cost_cv},
            "search": {
                "max_iterations": self.search.max_iterations,
                "tolerance": self.search.tolerance,
                "restarts": self.search.restarts,
                "initial_step": self.search.initial_step,
            },
        }
        if self.basket is not None:
            out["basket"] = {f.name: getattr(self.basket, f.name) for f in fields(BasketParams)}
        if self.reference:
            out["reference"] = dict(self.reference)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        """Build from a parsed TOML table; unknown or malformed keys raise ConfigError."""
        known = {"experiment_id", "density", "integrand", "family", "family_options", "methods",
                 "n_train", "n_test", "seed", "start", "cost", "search", "basket", "reference"}
        for key in raw:
            if key not in known:
                raise ConfigError(f"{key}: unknown key")
        for key in ("experiment_id", "density", "integrand", "family", "n_train", "n_test"):
            if key not in raw:
                raise ConfigError(f"{key}: missing required key")
        kw = {k: raw[k] for k in ("experiment_id", "integrand", "family") if k in raw}
        for key in ("n_train", "n_test", "seed"):
            if key in raw:
                if not isinstance(raw[key], int) or isinstance(raw[key], bool):
                    raise ConfigError(f"{key}: expected an integer, got {raw[key]!r}")
                kw[key] = raw[key]
        if not isinstance(raw["density"], dict):
            raise ConfigError("density: expected a table")
        _check_density_spec(raw["density"], "density")
        kw["density"] = raw["density"]
        if "methods" in raw:
            kw["methods"] = tuple(raw["methods"])
        if "family_options" in raw:
            opts = raw["family_options"]
            for key in opts:
                if key not in ("degree", "box"):
                    raise ConfigError(f"family_options.{key}: unknown key")
            kw["family_options"] = dict(opts)
        if "start" in raw:
            kw["start"] = raw["start"] if isinstance(raw["start"], str) else tuple(raw["start"])
        kw["cost"] = _sub(CostModel, raw.get("cost", {}), "cost")
        kw["search"] = _sub(SearchOptions, raw.get("search", {}), "search")
        if "basket" in raw:
            kw["basket"] = _sub(BasketParams, raw["basket"], "basket")
        if "reference" in raw:
            kw["reference"] = dict(raw["reference"])
        return cls(**kw)


def _uses_exponential(spec):
    if spec.get("id") == "exp1":
        return True
    if spec.get("id") == "product":
        comps = spec.get("components") or [spec.get("component")]
        return any(c == "exp1" or (isinstance(c, dict) and _uses_exponential(c)) for c in comps)
    return False


def _sub(kind, table, name):
    if not isinstance(table, dict):
        raise ConfigError(f"{name}: expected a table")
    names = {f.name for f in fields(kind)}
    for key in table:
        if key not in names:
            raise ConfigError(f"{name}.{key}: unknown key")
    try:
        return kind(**table)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def _check_density_spec(spec, where):
    allowed = {
        "std_normal": {"id", "dim"},
        "exp1": {"id"},
        "mvn": {"id", "dim", "covariance"},
        "lognormal_gbm": {"id", "x0", "mu", "sigma", "t"},
        "product": {"id", "components", "component", "dim"},
    }
    did = spec.get("id")
    if did not in allowed:
        raise ConfigError(f"{where}.id: unknown density {did!r}")
    for key in spec:
        if key not in allowed[did]:
            raise ConfigError(f"{where}.{key}: unknown key for density {did!r}")
    if did == "product":
        if "components" in spec:
            for i, c in enumerate(spec["components"]):
                _check_density_spec(c, f"{where}.components[{i}]")
        elif "component" not in spec or "dim" not in spec:
            raise ConfigError(f"{where}: product needs 'components' or 'component' + 'dim'")


def load_configs(path) -> list:
    """Experiments from a TOML file: one ``[experiment]`` table or an
    ``[[experiment]]`` array."""
    try:
        import tomllib as tomli
    except ModuleNotFoundError:  # Python < 3.11
        import tomli

    path = Path(path)
    try:
        with path.open("rb") as fh:
            doc = tomli.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: no such config file") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML ({exc})") from exc
    for key in doc:
        if key != "experiment":
            raise ConfigError(f"{key}: unknown top-level key (expected 'experiment')")
    if "experiment" not in doc:
        raise ConfigError("experiment: missing [experiment] section")
    items = doc["experiment"]
    if isinstance(items, dict):
        items = [items]
    return [ExperimentConfig.from_dict(item) for item in items]


# --- building blocks ---------------------------------------------------------------


def build_density(spec, seed, basket=None):
    """Density from a config spec; returns ``(density, extras)``."""
    did = spec["id"]
    extras = {}
    if basket is not None:
        dim = int(spec.get("dim", len(spec.get("components", [])) or 1))
        rng = generator(derive_seed(seed, "basket_x0"))
        x0 = rng.uniform(basket.x0_low, basket.x0_high, size=dim)
        comps = [dist.lognormal_gbm(v, basket.mu, basket.sigma, basket.t) for v in x0]
        strike = float(np.sum(x0)) if basket.strike == "sum_x0" else float(basket.strike)
        extras.update(x0=[float(v) for v in x0], strike=strike, components=comps)
        return dist.product_density(comps), extras
    if did == "std_normal":
        return dist.std_normal(int(spec.get("dim", 1))), extras
    if did == "exp1":
        return dist.exponential_unit(), extras
    if did == "lognormal_gbm":
        return dist.lognormal_gbm(spec["x0"], spec["mu"], spec["sigma"], spec["t"]), extras
    if did == "mvn":
        cov = spec.get("covariance", "random")
        if isinstance(cov, str):
            if cov != "random":
                raise ConfigError(f"density.covariance: unknown rule {cov!r}")
            covspec = dist.random_covariance(int(spec["dim"]), derive_seed(seed, "covariance"))
        else:
            covspec = dist.CovarianceSpec(np.array(cov, dtype=float))
        extras["covariance"] = covspec.matrix.tolist()
        return dist.mvn(covspec), extras
    if did == "product":
        if "components" in spec:
            comps = [build_density(c, seed)[0] for c in spec["components"]]
        else:
            comp = spec["component"]
            comp = {"id": comp} if isinstance(comp, str) else comp
            comps = [build_density(comp, seed)[0] for _ in range(int(spec["dim"]))]
        return dist.product_density(comps), extras
    raise ConfigError(f"density.id: unknown density {did!r}")


def build_family(family_id, density, options=None):
    options = options or {}
    if family_id == "poly1d":
        return fam.poly1d_family(density, options.get("degree", 3))
    if family_id == "additive_poly":
        if isinstance(density, dist.StdNormal):
            density = dist.product_density([dist.std_normal(1)] * density.dim)
        elif not isinstance(density, dist.ProductDensity):
            density = dist.product_density([density])
        return fam.additive_poly_family(density, options.get("degree", 3))
    if family_id == "gauss_hermite":
        return fam.gaussian_hermite_family(density)
    if family_id == "rotated_poly":
        return fam.RotatedPolyFamily(density, options.get("box", 10.0))
    if family_id in ("basket_exp1", "basket_exp2"):
        return fam.BasketExpFamily(density, int(family_id[-1]), options.get("box", 10.0))
    raise ConfigError(f"family: unknown id {family_id!r}")


def _start_point(config, family, train, extras):
    rule = config.start
    if not isinstance(rule, str):
        return np.asarray(rule, dtype=float)
    if rule == "zeros":
        return np.zeros(family.param_dim)
    if rule in ("sigma_hat", "sigma_hat_inv_sqrt"):
        if not isinstance(family, fam.RotatedPolyFamily):
            raise ConfigError(f"start: {rule!r} applies to rotated_poly only")
        sigma_hat = np.cov(train.points, rowvar=False).reshape(family.d, family.d)
        if rule == "sigma_hat_inv_sqrt":
            lam, vec = np.linalg.eigh(sigma_hat)
            sigma_hat = (vec / np.sqrt(lam)) @ vec.T
        return family.pack(np.zeros((family.d, 4)), sigma_hat)
    if rule == "one_dim":
        if not isinstance(family, fam.BasketExpFamily):
            raise ConfigError("start: 'one_dim' applies to basket families only")
        comps = extras["components"]
        f_1d = [basket_call(x0) for x0 in extras["x0"]]
        return basket_start_point(f_1d, comps, family.variant, config.search,
                                  n=config.n_train, seed=derive_seed(config.seed, "basket_start"))
    raise ConfigError(f"start: unknown rule {rule!r}")


# --- reports -----------------------------------------------------------------------


@dataclass
class ExperimentReport:
    experiment_id: str
    n_train: int
    n_test: int
    seed: int
    svar: Optional[float] = None
    svar_evm: Optional[float] = None
    svar_ls: Optional[float] = None
    cost: CostModel = CostModel()
    family_id: str = ""
    density_id: str = ""
    fits: dict = field(default_factory=dict)
    times: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)

    @property
    def variance(self) -> VarianceReport:
        return VarianceReport(self.svar, self.svar_evm, self.svar_ls, self.cost)

    @property
    def eff_evm(self):
        return None if self.svar_evm is None else self.variance.eff_evm

    @property
    def eff_ls(self):
        return None if self.svar_evm is None else self.variance.eff_ls

    @property
    def ratio(self):
        return None if self.svar_evm is None else self.variance.ratio

    def csv_row(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "svar": self.svar,
            "svar_evm": self.svar_evm,
            "svar_ls": self.svar_ls,
            "eff_evm": self.eff_evm,
            "eff_ls": self.eff_ls,
            "ratio": self.ratio,
            "seed": self.seed,
        }

    def to_dict(self, include_timing=False) -> dict:
        out = self.csv_row()
        out.update(
            cost={"cost_f": self.cost.cost_f, "cost_cv": self.cost.cost_cv},
            family_id=self.family_id,
            density_id=self.density_id,
            fits={k: v.to_dict() for k, v in self.fits.items()},
            extras=self.extras,
            config=self.config,
            reference=self.reference,
        )
        if include_timing:
            out["times"] = dict(self.times)
        return out


def _test_values(density, f, fits, family, n_test, seed):
    """f and reduced values on the test sample, drawn in fixed-size chunks."""
    fvals, reduced = [], {k: [] for k in fits}
    done = 0
    chunk_id = 0
    while done < n_test:
        m = min(TEST_CHUNK, n_test - done)
        chunk_seed = seed if n_test <= TEST_CHUNK else derive_seed(seed, f"chunk/{chunk_id}")
        pts = density.sample(max(m, 2), chunk_seed).points[:m]
        fv = np.asarray(f(pts), dtype=float)
        fvals.append(fv)
        for key, res in fits.items():
            reduced[key].append(fv - family.eval(res.a_hat, pts))
        done += m
        chunk_id += 1
    return np.concatenate(fvals), {k: np.concatenate(v) for k, v in reduced.items()}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Train, fit every configured method, test on an independent sample."""
    t_start = time.perf_counter()
    report = ExperimentReport(config.experiment_id, config.n_train, config.n_test, config.seed,
                              cost=config.cost, family_id=config.family,
                              config=config.to_dict(), reference=dict(config.reference))
    density, extras = build_density(config.density, config.seed, config.basket)
    report.density_id = density.density_id
    report.extras = {k: v for k, v in extras.items() if k != "components"}
    if config.integrand == "basket_call":
        f = basket_call(extras["strike"])
    else:
        f = INTEGRANDS[config.integrand]
    family = build_family(config.family, density, config.family_options)

    train = density.sample(config.n_train, derive_seed(config.seed, "train"))
    fits = {}
    t_fit = time.perf_counter()
    try:
        if family.linear:
            fits["evm"] = evm_fit_linear(f, family, train)
            if "ls" in config.methods:
                fits["ls"] = ls_fit_linear(f, family, train)
        else:
            if "ls" in config.methods:
                raise ConfigError("methods: 'ls' needs a linear family")
            start = _start_point(config, family, train, extras)
            fits["evm"] = evm_fit_nonlinear(f, family, train, start, config.search)
    except (FitError, np.linalg.LinAlgError) as exc:
        report.fits = fits
        report.times = {"fit": time.perf_counter() - t_fit}
        raise ExperimentError(f"{config.experiment_id}: fit failed: {exc}", report) from exc
    report.fits = fits
    t_test = time.perf_counter()

    fv, reduced = _test_values(density, f, fits, family, config.n_test,
                               derive_seed(config.seed, "test"))
    report.svar = empirical_variance(fv)
    report.svar_evm = empirical_variance(reduced["evm"])
    if "ls" in reduced:
        report.svar_ls = empirical_variance(reduced["ls"])
    t_end = time.perf_counter()
    report.times = {"fit": t_test - t_fit, "test": t_end - t_test, "total": t_end - t_start}
    return report


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


REFERENCE_COLUMNS = ("ref_svar", "ref_svar_evm", "ref_svar_ls", "ref_eff_evm", "ref_eff_ls",
                     "ref_ratio")


def format_csv(reports, include_reference=False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = list(CSV_COLUMNS) + (list(REFERENCE_COLUMNS) if include_reference else [])
    writer.writerow(cols)
    for rep in reports:
        row = rep.csv_row()
        values = [_fmt(row[c]) for c in CSV_COLUMNS]
        if include_reference:
            values += [_fmt(rep.reference.get(c[4:])) for c in REFERENCE_COLUMNS]
        writer.writerow(values)
    return buf.getvalue()


def format_json(reports, include_timing=False) -> str:
    return json.dumps([r.to_dict(include_timing) for r in reports], indent=2) + "\n"


def emit_report(reports, format="csv", destination=None, include_reference=False,
                include_timing=False) -> str:
    """Serialize reports as CSV or JSON; write to ``destination`` if given.

    Output depends only on the reports' contents; wall-clock times are left
    out unless ``include_timing`` is set (JSON only).
    """
    if format == "csv":
        text = format_csv(reports, include_reference)
    elif format == "json":
        text = format_json(reports, include_timing)
    else:
        raise ValueError(f"unknown report format {format!r}")
    if destination is not None:
        path = Path(destination)
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
    return text


# --- replication -------------------------------------------------------------------


@dataclass
class ReplicateSummary:
    experiment_id: str
    seeds: list
    reports: list
    failures: list
    median_ratio: float
    iqr_ratio: float
    median_svar_evm: float
    iqr_svar_evm: float

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "seeds": list(self.seeds),
            "failures": list(self.failures),
            "median_ratio": self.median_ratio,
            "iqr_ratio": self.iqr_ratio,
            "median_svar_evm": self.median_svar_evm,
            "iqr_svar_evm": self.iqr_svar_evm,
        }


def _median_iqr(values):
    if not values:
        return math.nan, math.nan
    arr = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return float(med), float(q3 - q1)


def replicate_seeds(base_seed, k):
    return [derive_seed(base_seed, f"replicate/{j}") for j in range(k)]


def replicate(config: ExperimentConfig, k: int, base_seed: int) -> ReplicateSummary:
    """Run ``config`` under ``k`` seeds derived from ``base_seed``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    seeds = replicate_seeds(base_seed, k)
    reports, failures = [], []
    for s in seeds:
        try:
            reports.append(run_experiment(replace(config, seed=s)))
        except ExperimentError as exc:
            failures.append({"seed": s, "error": str(exc)})
    med_r, iqr_r = _median_iqr([r.ratio for r in reports])
    med_v, iqr_v = _median_iqr([r.svar_evm for r in reports])
    return ReplicateSummary(config.experiment_id, seeds, reports, failures, med_r, iqr_r,
                            med_v, iqr_v)


# --- built-in tables -----------------------------------------------------------------

_REF_KEYS = ("svar", "svar_evm", "svar_ls", "eff_evm", "eff_ls")


def _ref(*values, keys=_REF_KEYS):
    return dict(zip(keys, values))


ROTATED_SEARCH = SearchOptions(max_iterations=3000, restarts=10)
BASKET_SEARCH = SearchOptions(max_iterations=2000, restarts=3)
BASKET_DIMS = (1, 10, 25, 50, 100)


def _linear_rows(tag, density, family, rows, n_train, n_test, seed):
    out = []
    for integrand, ref in rows:
        out.append(ExperimentConfig(
            experiment_id=f"{tag}-{integrand}", density=density, integrand=integrand,
            family=family, n_train=n_train, n_test=n_test, seed=seed,
            methods=("evm", "ls"), reference=ref))
    return out


def _table1(seed):
    normal = [
        ("sumsq", _ref(1.9989, 3.2e-15, 0.0064, 2.0e14, 103.1210)),
        ("sumexp", _ref(4.6410, 0.0272, 0.0319, 56.8328, 48.3517)),
        ("sumcos", _ref(0.1999, 0.0008, 0.0016, 82.7796, 39.7381)),
        ("invnorm", _ref(0.0346, 0.0105, 0.0087, 1.0948, 1.3260)),
    ]
    expo = [
        ("sumsq", _ref(19.9852, 3.0e-13, 0.0042, 2.1e13, 1553.47)),
        ("sumcos", _ref(0.3492, 0.0431, 0.0422, 2.7002, 2.7543)),
        ("invnorm", _ref(0.0479, 0.0012, 0.0017, 13.1472, 8.9878)),
    ]
    return (_linear_rows("t1-normal", {"id": "std_normal", "dim": 1}, "poly1d", normal,
                         500, 100_000, seed)
            + _linear_rows("t1-exp", {"id": "exp1"}, "poly1d", expo, 500, 100_000, seed))


_T2_NORMAL = [
    ("sumsq", _ref(20.0487, 1.0e-13, 37.7377, 6.4e13, 0.1770)),
    ("sumexp", _ref(46.1526, 0.3992, 104.6210, 38.5331, 0.1470)),
    ("sumcos", _ref(2.0038, 0.0102, 13.5536, 64.9322, 0.0492)),
    ("invnorm", _ref(0.0020, 0.0003, 0.0246, 2.2811, 0.0278)),
]


def _table2(seed):
    expo = [
        ("sumsq", _ref(193.939, 1.4e-12, 1461.3, 4.4e13, 0.0442)),
        ("sumcos", _ref(3.4982, 2.2988, 73.657, 0.5072, 0.0158)),
        ("invnorm", _ref(0.0031, 0.0007, 0.1542, 1.4758, 0.0068)),
    ]
    normal_d = {"id": "product", "component": "std_normal", "dim": 10}
    exp_d = {"id": "product", "component": "exp1", "dim": 10}
    return (_linear_rows("t2-normal", normal_d, "additive_poly", _T2_NORMAL, 500, 100_000, seed)
            + _linear_rows("t2-exp", exp_d, "additive_poly", expo, 500, 100_000, seed))


def _table3(seed):
    rows = [
        ("sumsq", _ref(20.0487, 1.5e-10, 1508.83, 4.3e10, 0.0044)),
        ("sumexp", _ref(46.1526, 1.5104, 4058.03, 10.1849, 0.0037)),
        ("sumcos", _ref(2.0038, 0.0286, 557.905, 23.3086, 0.0011)),
        ("invnorm", _ref(0.0020, 0.0048, 0.9988, 0.1420, 0.0006)),
    ]
    normal_d = {"id": "product", "component": "std_normal", "dim": 10}
    return _linear_rows("t3-normal", normal_d, "additive_poly", rows, 50, 100_000, seed)


_MVN = {"id": "mvn", "dim": 10, "covariance": "random"}


def _table4(seed):
    rows = [
        ("sumsq", _ref(315.494, 0.0236, 265.268, 4453.3, 0.3964)),
        ("sumexp", _ref(3454.95, 1875.80, 2618.53, 0.6139, 0.4398)),
        ("sumcos", _ref(6.8764, 3.1421, 5.0005, 0.7294, 0.4583)),
    ]
    return _linear_rows("t4-mvn", _MVN, "gauss_hermite", rows, 500, 10_000, seed)


def _table5(seed):
    rows = [
        ("sumsq", _ref(31.1849, 0.1567, 66.3020, keys=("svar", "svar_evm", "eff_evm"))),
        ("sumexp", _ref(88.3872, 3.9196, 7.5166, keys=("svar", "svar_evm", "eff_evm"))),
        ("sumcos", _ref(2.5196, 0.0829, 10.1279, keys=("svar", "svar_evm", "eff_evm"))),
    ]
    return [
        ExperimentConfig(experiment_id=f"t5-rotated-{integrand}", density=_MVN,
                         integrand=integrand, family="rotated_poly", n_train=500,
                         n_test=10_000, seed=seed, start="sigma_hat", search=ROTATED_SEARCH,
                         reference=ref)
        for integrand, ref in rows
    ]


_BASKET_REF = {
    1: {1: (2.4038, 0.0044, 538.2110, 179.4021), 10: (52.2875, 0.5232, 99.9237, 33.3079),
        25: (131.6974, 1.0134, 129.9545, 43.3181), 50: (266.1397, 2.8339, 93.9114, 31.3038),
        100: (517.9147, 5.4508, 95.0159, 31.6719)},
    2: {1: (2.4038, 0.0041, 575.4038, 191.8013), 10: (52.2875, 0.4707, 111.0782, 37.0260),
        25: (131.6974, 0.2241, 587.4850, 195.8283), 50: (266.1397, 0.0561, 4737.881, 1579.294),
        100: (517.9147, 0.0313, 16543.88, 5514.628)},
}


def basket_config(dim, variant, seed=DEFAULT_SEED, n_train=1000, n_test=1_000_000,
                  search=BASKET_SEARCH):
    ref = _BASKET_REF.get(variant, {}).get(dim)
    return ExperimentConfig(
        experiment_id=f"t{5 + variant}-basket{variant}-d{dim}",
        density={"id": "product", "component": "lognormal_gbm", "dim": dim},
        integrand="basket_call", family=f"basket_exp{variant}", n_train=n_train,
        n_test=n_test, seed=seed, start="one_dim", search=search, basket=BasketParams(),
        reference=_ref(*ref, keys=("svar", "svar_evm", "ratio", "eff_evm")) if ref else {})


def _table_basket(variant, seed):
    return [basket_config(d, variant, seed) for d in BASKET_DIMS]


TABLES = {1: _table1, 2: _table2, 3: _table3, 4: _table4, 5: _table5,
          6: lambda seed: _table_basket(1, seed), 7: lambda seed: _table_basket(2, seed)}


def table_configs(table: int, seed: int = DEFAULT_SEED) -> list:
    """Built-in row set of a results table.

    1: 1-D normal and exponential, cubic Stein polynomials.
    2: 10-D product normal and exponential, additive cubic polynomials.
    3: as 2 (normal only) with 50 training points.
    4: 10-D Gaussian with random covariance, score plus second-ratio family.
    5: same Gaussian, rotated cubic family (nonlinear), start at the sample covariance.
    6, 7: GBM basket call, first and second exponential-of-log families.

    Each config carries the published values in ``reference`` for side-by-side
    output; they are never asserted.
    """
    if table not in TABLES:
        raise ValueError(f"table must be in 1..{len(TABLES)}, got {table!r}")
    return TABLES[table](seed)
