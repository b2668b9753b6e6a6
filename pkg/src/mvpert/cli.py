"""Command-line front end: ``mvpert {gauss,student-t,sensitivity,metrics}``.

Every run prints one JSON report on stdout and a short summary on
stderr.  Exit codes: 0 success (fallbacks are listed under
``warnings``), 2 invalid input, 3 matrix validation failure or dimension
mismatch.

The report is deterministic for a fixed input, configuration and seed.
Stage timings vary between runs, so they are only included with
``--timings``; the thread count is not echoed.
"""

import argparse
import json
import math
import os
import sys
import time
import warnings
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .corr_matrix import DEFAULT_LAMBDA_MIN, build_correlation_matrix, convergence_metrics, regularize
from .errors import CorrelationMatrixError, DimensionTooLarge, OneFactorError
from .fileio import matrix_digest, read_matrix
from .gauss_engine import ExpandOptions, PerturbationSetup, limits_vector, order_terms, perturbation
from .one_factor import check_positive_definite, fit_one_factor
from .oracle import PRNG, mc_gaussian_cdf, mc_gaussian_difference, mc_student_t_cdf, tensor_grid_cdf
from .pade import infinite_order, pade_approximants
from .quadrature import QuadratureConfig, YQuadrature, zeta_grid
from .student_t import student_t_terms

SCHEMA_VERSION = "1.0"
# one stage per flow-chart step; steps 6-9 form the quadrature loop
STAGES = (
    "validate_matrix",
    "fit_loadings",
    "check_rho_f",
    "perturbation_matrix",
    "read_limits",
    "quadrature",
    "pade",
    "extrapolation",
    "metrics",
)
EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MATRIX = 3
_NONFINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


class InputError(Exception):
    """Bad flag value or unreadable file (exit 2)."""


class DimensionMismatch(Exception):
    """Matrix and limits, or two matrices, disagree in size (exit 3)."""


# ---------------------------------------------------------------------------
# report


def _encode(obj):
    # JSON has no inf/nan; spell them as strings so the report stays strict JSON
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _encode(obj.item())
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_encode(v) for v in obj]
    return obj


def _decode(obj):
    if isinstance(obj, str) and obj in _NONFINITE:
        return _NONFINITE[obj]
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


@dataclass
class RunReport:
    command: str
    input: dict
    stages: list
    expansion: dict = None
    sensitivity: dict = None
    metrics: dict = None
    oracle: dict = None
    oracle_abs_diff: float = None
    warnings: list = field(default_factory=list)
    version: str = __version__
    schema_version: str = SCHEMA_VERSION

    def to_json(self):
        return json.dumps(_encode(asdict(self)), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**_decode(json.loads(text)))


class StageClock:
    def __init__(self, timed):
        self.timed = timed
        self.stages = []

    @contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        yield
        entry = {"name": name}
        if self.timed:
            entry["ms"] = round(1e3 * (time.perf_counter() - t0), 3)
        self.stages.append(entry)


# ---------------------------------------------------------------------------
# argument handling


def parse_xmax(text):
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise InputError(f"--xmax: {exc}") from exc
    if not vals or any(math.isnan(v) for v in vals):
        raise InputError("--xmax must be a comma list of numbers or +-inf")
    return vals


def _load(path):
    try:
        return read_matrix(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read matrix {path!r}: {exc}") from exc


def _quad(args):
    try:
        return QuadratureConfig(lambda_cut=float(args.lam), nodes=args.nodes)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _options(args):
    return ExpandOptions(pade_policy=args.pade_policy, naive=args.naive_n4,
                         workers=args.threads or os.cpu_count() or 1)


def _config(args, quad):
    return {
        "order": args.order,
        "quadrature": quad.as_dict(),
        "lambda_min": args.lambda_min,
        "pade_policy": args.pade_policy,
        "naive_n4": args.naive_n4,
        "compare_mc": args.compare_mc,
        "compare_grid": args.compare_grid,
        "seed": args.seed,
        "prng": PRNG if args.compare_mc else None,
    }


# ---------------------------------------------------------------------------
# pipeline


def _validated(entries, lambda_min):
    rho = build_correlation_matrix(entries, min_dim=1)
    if lambda_min is not None:
        rho = regularize(rho, lambda_min)
    return rho


def _limits(xmax, n):
    if len(xmax) != n:
        raise DimensionMismatch(f"xmax has {len(xmax)} entries, matrix dimension is {n}")
    return limits_vector(xmax, n)


def expansion_block(terms, order, pades, extrapolated):
    """Report fields for the first ``order + 1`` terms; higher entries are null.

    ``pades`` and ``extrapolated`` are the outputs of
    :func:`pade_approximants` and :func:`infinite_order`.  ``headline`` is
    the extrapolated value at order 2, else the highest available Pade
    value.
    """
    i0, i1, i2 = (float(t) for t in terms)
    p0, p1, p11, p02, p2, pade_notes = pades
    i_inf, alpha, osc, extra_notes = extrapolated
    out = {
        "i0": i0, "i1": i1, "i2": i2,
        "partial0": i0, "partial1": i0 + i1, "partial2": i0 + i1 + i2,
        "pade1": p1, "pade2_11": p11, "pade2_02": p02, "pade2": p2,
        "i_infinity": i_inf, "alpha": alpha, "oscillating": osc,
    }
    notes = list(pade_notes) + list(extra_notes)
    if order < 2:
        dropped = ["i_infinity", "alpha", "oscillating", "i2", "partial2", "pade2_11", "pade2_02", "pade2"]
        if order == 0:
            dropped += ["i1", "partial1", "pade1"]
        for key in dropped:
            out[key] = None
        notes = [n for n in pade_notes if "[0/1]" in n] if order == 1 else []
    out["headline"] = (i0, p1, i_inf)[order]
    return out, notes


def expansion_fields(terms, order=2, policy="average"):
    pades = pade_approximants(*(float(t) for t in terms), policy)
    return expansion_block(terms, order, pades, infinite_order(pades[0], pades[1], pades[4]))


def run_expansion(args, nu=None):
    """Flow-chart pipeline shared by ``gauss`` and ``student-t``."""
    clock = StageClock(args.timings)
    options = _options(args)
    quad = _quad(args)
    xmax = parse_xmax(args.xmax)
    entries = _load(args.rho)
    captured = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with clock("validate_matrix"):
            rho = _validated(entries, args.lambda_min)
        with clock("fit_loadings"):
            model = fit_one_factor(rho)
        with clock("check_rho_f"):
            check_positive_definite(model)
        with clock("perturbation_matrix"):
            eps, j_norm = perturbation(rho, model)
        with clock("read_limits"):
            limits = _limits(xmax, rho.n)
        with clock("quadrature"):
            setup = PerturbationSetup(rho, model, eps, j_norm, limits, quad, None)
            if nu is None:
                terms, notes = order_terms(setup, options, max_order=args.order)
            else:
                terms, notes = student_t_terms(setup, nu, YQuadrature(), options)
            captured += notes
        with clock("pade"):
            pades = pade_approximants(*(float(x) for x in terms), args.pade_policy)
        with clock("extrapolation"):
            extrapolated = infinite_order(pades[0], pades[1], pades[4])
        block, notes = expansion_block(terms, args.order, pades, extrapolated)
        captured += notes
        with clock("metrics"):
            metric_notes = []
            metrics = convergence_metrics(rho, model, eps, limits, metric_notes)
            captured += metric_notes
    captured = [f"{w.category.__name__}: {w.message}" for w in caught] + captured

    nodes = len(zeta_grid(quad)[0])
    block["node_count"] = nodes if nu is None else nodes * YQuadrature().y_nodes
    config = _config(args, quad)
    if nu is not None:
        config["y_quadrature"] = YQuadrature().as_dict()
    report = RunReport(
        command="gauss" if nu is None else "student-t",
        input={"matrix_sha256": matrix_digest(entries), "n": rho.n, "xmax": list(limits),
               "nu": nu, "config": config},
        stages=clock.stages,
        expansion=block,
        metrics=metrics.as_dict(),
        warnings=captured,
    )
    _attach_oracle(report, args, rho, limits, nu)
    return report


def _attach_oracle(report, args, rho, limits, nu):
    est = None
    if args.compare_grid:
        if nu is not None:
            raise InputError("--compare-grid is a Gaussian oracle; use --compare-mc with --nu")
        try:
            est = tensor_grid_cdf(rho, limits, nodes_per_dim=args.compare_grid)
        except DimensionTooLarge as exc:
            raise InputError(str(exc)) from exc
    elif args.compare_mc:
        try:
            if nu is None:
                est = mc_gaussian_cdf(rho, limits, args.compare_mc, args.seed)
            else:
                est = mc_student_t_cdf(rho, limits, nu, args.compare_mc, args.seed)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    if est is not None:
        report.oracle = est.to_record()
        report.oracle_abs_diff = abs(report.expansion["headline"] - est.value)


def cmd_gauss(args):
    return run_expansion(args)


def cmd_student_t(args):
    if args.nu is None or not args.nu > 0:
        raise InputError(f"--nu must be > 0, got {args.nu}")
    return run_expansion(args, nu=float(args.nu))


def cmd_sensitivity(args):
    """Difference of two expansions that share the ``rho_f`` fitted from ``--rho``."""
    clock = StageClock(args.timings)
    options = _options(args)
    quad = _quad(args)
    xmax = parse_xmax(args.xmax)
    e1, e2 = _load(args.rho), _load(args.rho2)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with clock("validate_matrix"):
            rho1 = _validated(e1, args.lambda_min)
            rho2 = _validated(e2, args.lambda_min)
            if rho1.n != rho2.n:
                raise DimensionMismatch(f"matrix dimensions differ: {rho1.n} vs {rho2.n}")
        with clock("fit_loadings"):
            model = fit_one_factor(rho1)
        with clock("check_rho_f"):
            check_positive_definite(model)
        with clock("perturbation_matrix"):
            eps1, j1 = perturbation(rho1, model)
            eps2, j2 = perturbation(rho2, model)
        with clock("read_limits"):
            limits = _limits(xmax, rho1.n)
        notes = []
        with clock("quadrature"):
            t1, n1 = order_terms(PerturbationSetup(rho1, model, eps1, j1, limits, quad, None), options)
            t2, n2 = order_terms(PerturbationSetup(rho2, model, eps2, j2, limits, quad, None), options)
            notes += n1 + n2
        with clock("pade"):
            pades = [pade_approximants(*(float(x) for x in t), args.pade_policy) for t in (t1, t2)]
        with clock("extrapolation"):
            ext = [infinite_order(p[0], p[1], p[4]) for p in pades]
        b1, m1 = expansion_block(t1, 2, pades[0], ext[0])
        b2, m2 = expansion_block(t2, 2, pades[1], ext[1])
        notes += m1 + m2
        with clock("metrics"):
            metrics = convergence_metrics(rho2, model, eps2, limits, notes)
    notes = [f"{w.category.__name__}: {w.message}" for w in caught] + notes

    diff = {k: b2[k] - b1[k] for k in ("i0", "i1", "i2", "partial0", "partial1", "partial2",
                                         "pade1", "pade2", "i_infinity")}
    sens = {
        "rho_f_seed": "rho",
        "note": "both expansions use the one-factor base fitted from --rho",
        "per_order": [float(t2[k] - t1[k]) for k in range(3)],
        "difference": diff,
        "rho": b1,
        "rho2": b2,
    }
    report = RunReport(
        command="sensitivity",
        input={"matrix_sha256": matrix_digest(e1), "matrix2_sha256": matrix_digest(e2), "n": rho1.n,
               "xmax": list(limits), "nu": None, "config": _config(args, quad)},
        stages=clock.stages,
        sensitivity=sens,
        metrics=metrics.as_dict(),
        warnings=notes,
    )
    if args.compare_mc:
        est = mc_gaussian_difference(rho1, rho2, limits, args.compare_mc, args.seed)
        report.oracle = est.to_record()
        report.oracle_abs_diff = abs(diff["i_infinity"] - est.value)
    return report


def cmd_metrics(args):
    entries = _load(args.rho)
    clock = StageClock(args.timings)
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with clock("validate_matrix"):
            rho = _validated(entries, args.lambda_min)
        with clock("fit_loadings"):
            model = fit_one_factor(rho)
        with clock("perturbation_matrix"):
            eps, _ = perturbation(rho, model)
        with clock("read_limits"):
            limits = _limits(parse_xmax(args.xmax) if args.xmax else [0.0] * rho.n, rho.n)
        with clock("metrics"):
            metrics = convergence_metrics(rho, model, eps, limits, notes).as_dict()
    notes = [f"{w.category.__name__}: {w.message}" for w in caught] + notes
    cutoff = DEFAULT_LAMBDA_MIN if args.lambda_min is None else args.lambda_min
    metrics["regularization_cutoff"] = cutoff
    metrics["regularization_suggested"] = bool(metrics["lambda_min"] < cutoff)
    if metrics["regularization_suggested"]:
        notes.append(f"lambda_min {metrics['lambda_min']:.3e} below {cutoff:g}; consider --lambda-min")
    return RunReport(
        command="metrics",
        input={"matrix_sha256": matrix_digest(entries), "n": rho.n, "xmax": list(limits), "nu": None,
               "config": {"lambda_min": args.lambda_min}},
        stages=clock.stages,
        metrics=metrics,
        warnings=notes,
    )


# ---------------------------------------------------------------------------
# entry point


def _common(p, *, expansion=True):
    p.add_argument("--rho", required=True, help="CSV (plain rows) or JSON {\"rho\": [[...]]} matrix file")
    p.add_argument("--xmax", required=expansion, help="comma list of upper limits; inf allowed")
    p.add_argument("--lambda-min", type=float, default=None, help="eigenvalue cutoff for regularization")
    p.add_argument("--timings", action="store_true", help="include per-stage milliseconds")
    # accepted everywhere so one invocation template fits every subcommand; never changes output
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    if not expansion:
        return
    p.add_argument("--order", type=int, choices=(0, 1, 2), default=2)
    p.add_argument("--nodes", type=int, default=QuadratureConfig.nodes, help="zeta nodes")
    p.add_argument("--lambda", dest="lam", type=float, default=QuadratureConfig.lambda_cut,
                   help="zeta cutoff Lambda")
    p.add_argument("--pade-policy", choices=("max", "average"), default="average")
    p.add_argument("--compare-mc", type=int, default=None, metavar="SAMPLES")
    p.add_argument("--compare-grid", type=int, default=None, metavar="NODES_PER_DIM")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--naive-n4", action="store_true", help="use the explicit O(n^4) second-order sums")


def build_parser():
    parser = argparse.ArgumentParser(prog="mvpert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("gauss", help="multivariate normal CDF")
    _common(p)
    p.set_defaults(func=cmd_gauss)
    p = sub.add_parser("student-t", help="multivariate Student-t CDF")
    _common(p)
    p.add_argument("--nu", type=float, required=True)
    p.set_defaults(func=cmd_student_t)
    p = sub.add_parser("sensitivity", help="change in the CDF between two matrices")
    _common(p)
    p.add_argument("--rho2", required=True)
    p.set_defaults(func=cmd_sensitivity)
    p = sub.add_parser("metrics", help="convergence diagnostics only")
    _common(p, expansion=False)
    p.set_defaults(func=cmd_metrics)
    return parser


def _summary(report):
    lines = [f"mvpert {report.command}  n={report.input['n']}"]
    if report.expansion:
        e = report.expansion
        lines.append(f"  headline   {e['headline']:.12g}")
        lines.append(f"  partials   {e['partial0']!r} {e['partial1']!r} {e['partial2']!r}")
    if report.sensitivity:
        lines.append(f"  difference {report.sensitivity['difference']['i_infinity']:.12g}")
    if report.oracle:
        o = report.oracle
        lines.append(f"  oracle     {o['value']:.12g} +- {o['std_error']:.2g} ({o['method']})")
    if report.metrics:
        m = report.metrics
        lines.append(f"  lambda_min {m['lambda_min']:.4g}  R(N) {m['r_of_n']:.4g}")
    lines += [f"  warning: {w}" for w in report.warnings]
    return "\n".join(lines) + "\n"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except (CorrelationMatrixError, OneFactorError, DimensionMismatch) as exc:
        invariant = getattr(exc, "invariant", None)
        tag = f" [{invariant}]" if invariant else ""
        sys.stderr.write(f"mvpert: matrix validation failed{tag}: {exc}\n")
        return EXIT_MATRIX
    except (InputError, ValueError) as exc:
        sys.stderr.write(f"mvpert: invalid input: {exc}\n")
        return EXIT_INPUT
    sys.stdout.write(report.to_json())
    sys.stderr.write(_summary(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
