"""Command-line front end: ``evmcv run|table|verify|list``.

Exit codes: 0 success, 1 usage or config error, 2 runtime or check failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import distributions as dist
from . import families as fam
from . import harness, oracle
from .rng import derive_seed, generator
from .variance import empirical_variance

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer: {text}")
    return value


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evmcv", description="Control variates fitted by empirical variance "
                     "minimization: experiments, built-in tables and self-checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def output_flags(p):
        p.add_argument("--out", metavar="PATH", help="write the report here (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="report format (default: csv)")
        p.add_argument("--seed", type=_u64, metavar="U64", help="override every master seed")
        p.add_argument("--replicate", type=_positive, metavar="K",
                       help="run each experiment under K derived seeds and report median/IQR")
        p.add_argument("--jobs", type=_positive, metavar="N",
                       help="experiments run in parallel (default: logical processors)")

    p_run = sub.add_parser("run", help="run every experiment in a TOML config file")
    p_run.add_argument("--config", required=True, metavar="PATH", help="TOML experiment file")
    output_flags(p_run)

    p_table = sub.add_parser("table", help="run a built-in results table (1..7)")
    p_table.add_argument("table", type=int, metavar="N", help="table number, 1..7")
    output_flags(p_table)

    sub.add_parser("verify", help="run the oracle checks and print PASS/FAIL per check")
    sub.add_parser("list", help="list built-in tables, densities, families and integrands")
    return parser


# --- running experiments -------------------------------------------------------------


def _run_one(config):
    try:
        return harness.run_experiment(config), None
    except harness.ExperimentError as exc:
        return exc.report, str(exc)


def _run_replicated(args):
    config, k, base = args
    return harness.replicate(config, k, base)


def _map(func, items, jobs):
    jobs = jobs or os.cpu_count() or 1
    if jobs == 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(func, items))


def _replicate_csv(summaries):
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = ["experiment_id", "k", "failures", "median_ratio", "iqr_ratio", "median_svar_evm",
            "iqr_svar_evm"]
    writer.writerow(cols)
    for s in summaries:
        writer.writerow([s.experiment_id, len(s.seeds), len(s.failures), repr(s.median_ratio),
                         repr(s.iqr_ratio), repr(s.median_svar_evm), repr(s.iqr_svar_evm)])
    return buf.getvalue()


def _execute(configs, args, include_reference):
    if args.seed is not None:
        configs = [replace(c, seed=args.seed) for c in configs]
    if args.replicate:
        base = lambda c: args.seed if args.seed is not None else c.seed  # noqa: E731
        summaries = _map(_run_replicated, [(c, args.replicate, base(c)) for c in configs],
                         args.jobs)
        if args.format == "json":
            import json

            text = json.dumps([s.to_dict() for s in summaries], indent=2) + "\n"
        else:
            text = _replicate_csv(summaries)
        _write(text, args.out)
        return EXIT_FAILURE if any(s.failures for s in summaries) else EXIT_OK

    results = _map(_run_one, configs, args.jobs)
    reports = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    text = harness.emit_report(reports, args.format, include_reference=include_reference)
    _write(text, args.out)
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    return EXIT_FAILURE if errors else EXIT_OK


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc.strerror or exc}") from exc


def cmd_run(args) -> int:
    try:
        configs = harness.load_configs(args.config)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return _execute(configs, args, include_reference=False)


def cmd_table(args) -> int:
    if args.table not in harness.TABLES:
        print(f"error: table must be in 1..{len(harness.TABLES)}, got {args.table}",
              file=sys.stderr)
        return EXIT_USAGE
    return _execute(harness.table_configs(args.table), args, include_reference=True)


# --- verify --------------------------------------------------------------------------


def _basket_density(dim):
    return dist.product_density(
        [dist.lognormal_gbm(0.5 + 0.25 * i, 0.5, 1.0, 1.0) for i in range(dim)])


VERIFY_DENSITIES = {
    "std_normal": lambda: dist.std_normal(3),
    "exp1": dist.exponential_unit,
    "mvn": lambda: dist.mvn(dist.random_covariance(3, 11)),
    "lognormal_gbm": lambda: dist.lognormal_gbm(1.0, 0.5, 1.0, 1.0),
    "product": lambda: dist.product_density(
        [dist.std_normal(1), dist.exponential_unit(), dist.lognormal_gbm(1.2, 0.5, 1.0, 1.0)]),
}

VERIFY_FAMILIES = {
    "poly1d/std_normal": lambda: fam.poly1d_family(dist.std_normal(1)),
    "poly1d/exp1": lambda: fam.poly1d_family(dist.exponential_unit()),
    "additive_poly": lambda: fam.additive_poly_family(
        dist.product_density([dist.std_normal(1), dist.exponential_unit()])),
    "gauss_hermite": lambda: fam.gaussian_hermite_family(dist.mvn(dist.random_covariance(3, 5))),
    "rotated_poly": lambda: fam.rotated_poly_family(dist.mvn(dist.random_covariance(3, 5))),
    "basket_exp1": lambda: fam.basket_exp_family(_basket_density(2), 1),
    "basket_exp2": lambda: fam.basket_exp_family(_basket_density(2), 2),
}

_ZERO_VARIANCE_CASES = {
    "std_normal/x^2": (lambda x: x[:, 0] ** 2, dist.std_normal(1)),
    "std_normal/cos": (lambda x: np.cos(x[:, 0]), dist.std_normal(1)),
    "exp1/x^2": (lambda x: x[:, 0] ** 2, dist.exponential_unit()),
    "exp1/cos": (lambda x: np.cos(x[:, 0]), dist.exponential_unit()),
}

_EXPECTATIONS = (
    ("std_normal/x^2", lambda x: x[:, 0] ** 2, dist.std_normal(1), 1.0),
    ("std_normal/exp", lambda x: np.exp(x[:, 0]), dist.std_normal(1), np.exp(0.5)),
    ("std_normal/cos", lambda x: np.cos(x[:, 0]), dist.std_normal(1), np.exp(-0.5)),
    ("exp1/x^2", lambda x: x[:, 0] ** 2, dist.exponential_unit(), 2.0),
)

SEED = 7


def _check_scores():
    out = []
    for name, make in VERIFY_DENSITIES.items():
        dens = make()
        pts = dens.sample(200, derive_seed(SEED, f"verify/{name}")).points
        err = oracle.score_gradient_error(dens, pts)
        out.append((f"score_fd[{name}]", err <= 1e-6, f"max rel err {err:.2e}"))
        if dens.has_second_ratio:
            h = dens.hessian_ratio(pts)
            asym = float(np.max(np.abs(h - np.swapaxes(h, -1, -2))))
            out.append((f"second_ratio_symmetry[{name}]", asym == 0.0, f"max asym {asym:.1e}"))
    return out


def _check_stein():
    out = []
    for name, make in VERIFY_FAMILIES.items():
        family = make()
        rng = generator(derive_seed(SEED, f"verify/params/{name}"))
        worst = 0.0
        for j in range(5):
            a = fam.random_parameters(family, rng)
            mean, se = fam.cv_mean_check(family, a, 20_000, derive_seed(SEED, f"verify/{name}/{j}"))
            if se > 0:
                worst = max(worst, abs(mean) / se)
        out.append((f"stein_zero_mean[{name}]", worst <= 4.0, f"max |mean|/stderr {worst:.2f}"))
    return out


def _check_zero_variance():
    out = []
    for name, (f, dens) in _ZERO_VARIANCE_CASES.items():
        phi = oracle.zero_variance_phi_1d(f, dens)
        lo, hi = (-3.0, 3.0) if dens.density_id == "std_normal" else (0.05, 6.0)
        resid = oracle.verify_zero_variance(f, dens, phi, np.linspace(lo, hi, 41))
        out.append((f"zero_variance[{name}]", resid <= 1e-5, f"max residual {resid:.2e}"))
        edge = max(abs(v) for v in phi.boundary_values())
        out.append((f"zero_variance_boundary[{name}]", edge <= 1e-8, f"max |pi phi*| {edge:.1e}"))
    for name, f, dens, exact in _EXPECTATIONS:
        err = abs(oracle.expectation(f, dens) - exact)
        out.append((f"quadrature_expectation[{name}]", err <= 1e-8, f"abs err {err:.1e}"))
    return out


def _check_hermite():
    out = []
    for k in (1, 2):
        mean, se = oracle.hermite_expectation_check(k, 100_000, derive_seed(SEED, f"hermite/{k}"))
        out.append((f"hermite_mean[{k}]", abs(mean) <= 4 * se, f"mean {mean:.2e} se {se:.1e}"))
    x = dist.std_normal(1).sample(100_000, derive_seed(SEED, "hermite/norm")).points
    second = float(np.mean(oracle.hermite_values(2, x) ** 2 / 2.0))
    out.append(("hermite_norm[2]", abs(second - 1.0) <= 0.05, f"E[H2^2/2] {second:.4f}"))
    return out


def _check_lower_bound():
    n, trials = 10, 10_000
    freq = oracle.lower_bound_scenario(n, trials, derive_seed(SEED, "lower_bound"))
    p = oracle.lower_bound_probability(n)
    floor = p - 4 * np.sqrt(p * (1 - p) / trials)
    return [("lower_bound[n=10]", freq >= floor, f"freq {freq:.4f} floor {floor:.4f}")]


def _check_u_statistic():
    rng = generator(derive_seed(SEED, "u_statistic"))
    worst = 0.0
    for _ in range(20):
        v = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), int(rng.integers(2, 60)))
        diff = v[:, None] - v[None, :]
        pair = float(np.sum(np.triu(diff * diff, 1))) / (v.size * (v.size - 1))
        worst = max(worst, abs(empirical_variance(v) - pair) / max(pair, 1e-300))
    return [("u_statistic_identity", worst <= 1e-12, f"max rel err {worst:.1e}")]


def verify_checks() -> list:
    """Every self-check as ``(name, passed, detail)``."""
    checks = []
    for group in (_check_scores, _check_stein, _check_zero_variance, _check_hermite,
                  _check_lower_bound, _check_u_statistic):
        try:
            checks.extend(group())
        except Exception as exc:  # a crashing check is a failed check
            checks.append((group.__name__.lstrip("_"), False, f"raised {exc!r}"))
    return checks


def cmd_verify(args) -> int:
    checks = verify_checks()
    width = max(len(name) for name, _, _ in checks)
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name:<{width}}  {detail}")
    failed = sum(not ok for _, ok, _ in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAILURE


def cmd_list(args) -> int:
    print("tables:")
    for t in harness.TABLES:
        ids = [c.experiment_id for c in harness.table_configs(t)]
        print(f"  {t}: {len(ids)} rows ({', '.join(ids)})")
    print("densities: " + ", ".join(harness.DENSITIES))
    print("families: " + ", ".join(harness.FAMILIES))
    print("integrands: " + ", ".join(harness.INTEGRANDS))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "table": cmd_table, "verify": cmd_verify, "list": cmd_list}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
