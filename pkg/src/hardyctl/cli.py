"""Command-line front end: config ingestion, task orchestration, reports.

Exit codes: 0 verdict positive, 1 verdict negative, 2 input error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from hardyctl import __version__
from hardyctl.admissibility import GridSpec, ResolventModel, analyze
from hardyctl.carleson import (
    SQUARE_CONVENTION,
    AtomicMeasure,
    carleson_constant,
    kernel_test_constant,
    transfer_size_bound,
)
from hardyctl.config import (
    AnalysisConfig,
    dumps,
    load_config,
    parse_complex,
    parse_complex_list,
)
from hardyctl.controllability import (
    DiagonalSystem,
    JordanBlock,
    JordanSystem,
    exact_control_measure,
    heat_admissible_perturbation,
    heat_decay_sum,
    heat_row_sum,
    heat_system,
    null_control_measure,
    perturb_check,
    wave_row_sum,
    wave_system,
)
from hardyctl.errors import HardyError, InputError, NumericalError
from hardyctl.halfplane import INNER_PRODUCT_CONVENTION
from hardyctl.interpolation import (
    InterpolationProblem,
    fc_construct,
    j_operator,
    min_norm_solve,
    min_norm_sup,
    vasyunin_measure,
)

EXIT_POSITIVE, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3
THREADS_ENV = "HARDYCTL_THREADS"
REPORT_FORMAT = "hardyctl-report"
DEFAULT_SWEEP_TOL = 0.05
# successive sweep increments must shrink at least this fast to count as converging
SWEEP_CONTRACTION = 0.6

CONVENTIONS = {
    "square": SQUARE_CONVENTION,
    "inner_product": INNER_PRODUCT_CONVENTION,
    "nodes": "eigenvalue lambda (Re < 0) is mirrored to the node -lambda (Re > 0)",
    "complex": "[re, im]",
}
FINITE_SECTION_NOTE = (
    "finite-section certificate: computed on a truncation and a sampling grid; "
    "it bounds but does not prove the infinite-dimensional statement"
)


# ---------------------------------------------------------------------------
# building core objects from a config


def build_system(spec: dict):
    if "generator" in spec:
        return (heat_system if spec["generator"] == "heat" else wave_system)(int(spec["n"]))
    if "blocks" in spec:
        blocks = [JordanBlock(parse_complex(b["eigenvalue"]), tuple(parse_complex_list(b["coefficients"]))) for b in spec["blocks"]]
        return JordanSystem(blocks)
    return DiagonalSystem(parse_complex_list(spec["eigenvalues"]), parse_complex_list(spec["control"]))


def section_order(system) -> np.ndarray:
    """Indices ordered by |lambda| so prefixes are the natural truncations."""
    lam = np.array([b.eigenvalue for b in system.blocks]) if isinstance(system, JordanSystem) else system.eigenvalues
    return np.argsort(np.abs(lam), kind="stable")


def subsystem(system, idx):
    if isinstance(system, JordanSystem):
        return JordanSystem([system.blocks[i] for i in idx])
    return DiagonalSystem(system.eigenvalues[idx], system.control[idx])


def build_grid(params: dict, override: str | None) -> GridSpec:
    kw = dict(params.get("grid", {}))
    if override:
        kw.update(parse_grid_flag(override))
    return GridSpec(**kw)


def parse_grid_flag(text: str) -> dict:
    """``--grid key=value,...`` with GridSpec field names."""
    types = {"re_min": float, "re_max": float, "per_decade": int, "n_imag": int, "im_factor": float, "max_spectral": int}
    out = {}
    for part in filter(None, text.split(",")):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in types:
            raise InputError(f"--grid: cannot parse {part!r} (fields: {', '.join(types)})")
        try:
            out[key] = types[key](value)
        except ValueError:
            raise InputError(f"--grid: bad value for {key}: {value!r}") from None
    return out


def measure_json(m: AtomicMeasure) -> list:
    return [{"location": z, "weight": w} for z, w in zip(m.locations, m.weights)]


def sweep_verdict(values, tol: float = DEFAULT_SWEEP_TOL) -> tuple[bool, float | None]:
    """Decide boundedness from constants on growing truncations.

    Bounded when the last step grows by at most ``tol`` (relative), or when
    the increments contract geometrically with ratio <= ``SWEEP_CONTRACTION``.
    Returns the verdict and the geometric extrapolation of the limit, if any.
    """
    values = [float(c) for c in values]
    if not all(math.isfinite(c) for c in values):
        return False, None
    if len(values) < 2 or values[-2] == 0:
        return True, values[-1] if values else None
    if len(values) >= 3:
        d1, d2 = values[-2] - values[-3], values[-1] - values[-2]
        if d1 > 0 and d2 >= 0 and d2 <= SWEEP_CONTRACTION * d1:
            r = d2 / d1
            return True, values[-1] + d2 * r / (1 - r)
    ok = values[-1] <= (1 + tol) * values[-2]
    return ok, values[-1] if ok else None


# ---------------------------------------------------------------------------
# tasks; each returns (results dict, verdict)


def task_measure(config: AnalysisConfig, threads: int, grid_flag=None):
    params = config.params
    system = build_system(config.system)
    tau = params.get("tau") if config.task == "null" else None

    def build(sys_):
        return exact_control_measure(sys_) if tau is None else null_control_measure(sys_, tau)

    measure = build(system)
    C, square = carleson_constant(measure, threads=threads, return_square=True)
    order = section_order(system)
    n = order.size
    sizes = sorted({max(1, n // 4), max(1, n // 2), n})
    sweep = [(k, carleson_constant(build(subsystem(system, order[:k])), threads=threads)) for k in sizes]
    tol = params.get("sweep_tol", DEFAULT_SWEEP_TOL)
    verdict, limit = sweep_verdict([c for _, c in sweep], tol)
    results = {
        "measure": measure_json(measure),
        "carleson_constant": C,
        "maximizing_square": {"center": square.center, "size": square.size} if square else None,
        "kernel_test_constant": kernel_test_constant(measure),
        "sweep": [{"truncation": k, "carleson_constant": c} for k, c in sweep],
        "sweep_tol": tol,
        "extrapolated_constant": limit,
        "claim": "exact controllability" if tau is None else f"null controllability in time {tau!r}",
    }
    return results, verdict


def _perturbed_points(config, system):
    params = config.params
    if "perturbed" in params:
        return parse_complex_list(params["perturbed"])
    spec = params["perturbation"]
    scale = spec.get("scale", 0.1)
    if spec["kind"] == "heat-sqrt":
        if config.system.get("generator") != "heat":
            raise InputError("/params/perturbation/kind: heat-sqrt needs the heat generator")
        return heat_admissible_perturbation(system.truncation, scale)
    return system.eigenvalues - scale


def task_perturb(config: AnalysisConfig, threads: int, grid_flag=None):
    system = build_system(config.system)
    if not isinstance(system, DiagonalSystem):
        raise InputError("/system: the perturb task needs a diagonal system")
    mu = _perturbed_points(config, system)
    params = config.params
    rep = perturb_check(system, mu, eta=params.get("eta", 0.0), sweep_tol=params.get("sweep_tol", 0.1))
    nu = exact_control_measure(system)
    # colliding perturbed eigenvalues have no control measure
    distinct = np.unique(mu).size == mu.size
    nu_mu = exact_control_measure(DiagonalSystem(mu, system.control)) if distinct else None
    R = float(np.max(rep.eps))
    transfer = None
    if R < 1:
        alpha, factor = transfer_size_bound(R)
        transfer = {"R": R, "alpha": alpha, "size_factor": factor}
    results = {
        "eps": rep.eps,
        "conditions": {"i": rep.cond_i, "ii": rep.cond_ii, "iii": rep.cond_iii},
        "witness_i": rep.witness_i,
        "witness_ii": list(rep.witness_ii) if rep.witness_ii else None,
        "argmax_iii": rep.argmax_iii,
        "sup_sum": rep.sup_sum,
        "margin": rep.margin,
        "eta": rep.eta,
        "sweep": [{"truncation": k, "sup_sum": s} for k, s in rep.sweep],
        "carleson_constant": carleson_constant(nu, threads=threads),
        "perturbed_carleson_constant": None if nu_mu is None else carleson_constant(nu_mu, threads=threads),
        "transfer": transfer,
    }
    return results, rep.passed


def _interpolation_problem(spec: dict) -> InterpolationProblem:
    nodes = parse_complex_list(spec["nodes"])
    K = spec["multiplicities"]
    if len(K) != nodes.size:
        raise InputError("/params/interpolation/multiplicities: one entry per node")
    targets = spec.get("targets")
    if targets is not None:
        if len(targets) != nodes.size or any(len(t) != k for t, k in zip(targets, K)):
            raise InputError("/params/interpolation/targets: need K_n values for node n")
        targets = [parse_complex_list(t) for t in targets]
    weights = spec.get("weights", "standard")
    if weights == "standard":
        return InterpolationProblem.standard(nodes, K, targets)
    if len(weights) != nodes.size:
        raise InputError("/params/interpolation/weights: one matrix per node")
    G = []
    for n, (g, k) in enumerate(zip(weights, K)):
        if len(g) != k or any(len(row) != k for row in g):
            raise InputError(f"/params/interpolation/weights/{n}: expected a {k}x{k} matrix")
        G.append(np.array([parse_complex_list(row) for row in g]))
    if targets is None:
        targets = [np.zeros(k) for k in K]
    return InterpolationProblem(nodes, K, G, targets)


def task_interpolate(config: AnalysisConfig, threads: int, grid_flag=None):
    spec = config.params["interpolation"]
    problem = _interpolation_problem(spec)
    nu = vasyunin_measure(problem)
    sol = min_norm_solve(problem, certify=spec.get("certify", False))
    J = j_operator(problem)
    sup = min_norm_sup(problem)
    gap = abs(J.norm - sup) / max(J.norm, sup)
    fc = fc_construct(problem)
    fc_res = max((float(np.max(np.abs(r))) for r in problem.residuals(fc)), default=0.0)
    results = {
        "measure": measure_json(nu),
        "carleson_constant": carleson_constant(nu, threads=threads),
        "blaschke_sum": problem.blaschke_sum(),
        "min_norm": {
            "norm": sol.norm,
            "max_residual": sol.max_residual,
            "condition": sol.condition,
            "method": sol.method,
            "orthogonality": sol.orthogonality,
        },
        "j_norm": J.norm,
        "min_norm_sup": sup,
        "duality_gap": gap,
        "fc_max_residual": fc_res,
    }
    scale = max(1.0, float(np.max(np.abs(problem.hermite_data()), initial=0.0)))
    verdict = sol.max_residual <= 1e-9 * scale and gap < 1e-8
    return results, bool(verdict)


def task_admissibility(config: AnalysisConfig, threads: int, grid_flag=None):
    params = config.params
    system = build_system(config.system)
    if not isinstance(system, DiagonalSystem):
        raise InputError("/system: the admissibility task needs a diagonal system")
    if "observation" in params:
        C = np.array([parse_complex_list(row) for row in params["observation"]])
    else:
        C = system.control[None, :]
    delta = params.get("delta")
    if delta is not None:
        delta = np.array([parse_complex_list(r) for r in delta]) if delta and isinstance(delta[0], list) and isinstance(delta[0][0], list) else parse_complex_list(delta)
    model = ResolventModel(system.eigenvalues, C, delta)
    grid = build_grid(params, grid_flag)
    rep = analyze(model, w=params.get("w", 0.0), w0=params.get("w0", 0.0), grid=grid)
    results = {
        "M": rep.M,
        "w": rep.w,
        "sup_defect": rep.sup_defect,
        "gram_constant": rep.gram_constant,
        "delta_gap": rep.delta_gap,
        "analytic_constant": rep.analytic_constant,
        "delta_dissipative": rep.delta_dissipative,
        "M_forward": rep.M_forward,
        "converse": rep.converse,
        "perturbed_M": rep.perturbed_M,
        "checks": rep.verdicts,
        "grid": rep.grid,
    }
    if delta is None:
        verdict = rep.verdicts["admissible_on_grid"] and rep.verdicts["gram_finite"]
    else:
        verdict = rep.verdicts["hypotheses_met"]
    return results, bool(verdict)


TASK_RUNNERS = {
    "exact": task_measure,
    "null": task_measure,
    "perturb": task_perturb,
    "interpolate": task_interpolate,
    "admissibility": task_admissibility,
}


# ---------------------------------------------------------------------------
# series for plot data


def heat_rowsum_series(sizes=(64, 128, 256, 512, 1024)):
    return {"columns": ["n", "row_sum"], "convention": "sum_{k<=10n,k!=n} 4k^2n^2/|n^4-k^4|",
            "rows": [[n, heat_row_sum(n, 10 * n)] for n in sizes]}


def heat_decay_series(sizes=(64, 128, 256, 512, 1024)):
    return {"columns": ["n", "decay_sum"], "convention": "sum_{k<=10n,k!=n} k^2/|n^4-k^4|",
            "rows": [[n, heat_decay_sum(n)] for n in sizes]}


def wave_rowsum_series(sizes=(0, 1, 10, 100, 250, 500), kmax=5000):
    return {"columns": ["n", "row_sum", "row_sum_doubled"],
            "convention": f"sum_{{|k|<=K,k!=n}} 4/(|n-k| sqrt(4+(n-k)^2)), K={kmax} and {2 * kmax}",
            "rows": [[n, wave_row_sum(n, kmax), wave_row_sum(n, 2 * kmax)] for n in sizes]}


SERIES = {
    "heat-rowsum": heat_rowsum_series,
    "heat-decay": heat_decay_series,
    "wave-rowsum": wave_rowsum_series,
}


def emit_plot_data(report: dict, series: str, path) -> None:
    """Write one series of ``report["series"]`` as tab-separated columns.

    A series with no rows yields a header-only file.  Unknown names raise
    ``InputError``.
    """
    available = report.get("series", {})
    if series not in available:
        raise InputError(f"unknown series {series!r} (available: {', '.join(sorted(available)) or 'none'})")
    data = available[series]
    lines = [
        f"# series: {series}",
        f"# hardyctl {report.get('version', __version__)}",
        f"# convention: {data.get('convention', '')}",
        f"# square: {CONVENTIONS['square']}",
        f"# inner_product: {CONVENTIONS['inner_product']}",
        "# " + "\t".join(data["columns"]),
    ]
    for row in data["rows"]:
        lines.append("\t".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# reports


def run_config(config: AnalysisConfig, *, threads: int = 1, grid: str | None = None, series=()) -> dict:
    """Run the configured task; the returned report holds no timing data."""
    results, verdict = TASK_RUNNERS[config.task](config, threads, grid)
    report = {
        "format": REPORT_FORMAT,
        "version": __version__,
        "config": config.to_dict(),
        "task": config.task,
        "conventions": CONVENTIONS,
        "finite_section": FINITE_SECTION_NOTE,
        "results": results,
        "verdict": bool(verdict),
    }
    names = list(config.params.get("series", [])) + list(series)
    if names:
        unknown = [s for s in names if s not in SERIES]
        if unknown:
            raise InputError(f"unknown series {unknown[0]!r} (available: {', '.join(SERIES)})")
        report["series"] = {s: SERIES[s]() for s in names}
    return report


def summarize(report: dict, elapsed: float) -> str:
    res = report["results"]
    lines = [f"hardyctl {report['version']}  task={report['task']}  verdict={'POSITIVE' if report['verdict'] else 'NEGATIVE'}"]
    for key in ("carleson_constant", "kernel_test_constant", "perturbed_carleson_constant", "sup_sum", "margin",
                "j_norm", "min_norm_sup", "duality_gap", "M", "gram_constant", "delta_gap"):
        if key in res and res[key] is not None:
            lines.append(f"  {key:28s} {res[key]:.10g}")
    if "conditions" in res:
        lines.append("  conditions                   " + "  ".join(f"({k})={'ok' if v else 'FAIL'}" for k, v in res["conditions"].items()))
    if "sweep" in res:
        parts = []
        for row in res["sweep"]:
            value = next(v for k, v in row.items() if k != "truncation")
            parts.append(f"N={row['truncation']}: {value:.6g}")
        lines.append("  sweep                        " + ", ".join(parts))
    lines.append(f"  note: {report['finite_section']}")
    lines.append(f"  elapsed {elapsed:.3f} s")
    return "\n".join(lines)


def write_report(report: dict, path) -> None:
    try:
        Path(path).write_text(dumps(report))
    except OSError as exc:
        raise InputError(f"cannot write report {path}: {exc.strerror}") from None


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="machine report path (JSON)")
    common.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    common.add_argument("--grid", help="grid overrides, e.g. re_min=1e-3,per_decade=20")
    common.add_argument("--plot", help="write plot data for --series to this path")
    common.add_argument("--series", action="append", default=[], choices=sorted(SERIES), help="series to compute")

    parser = argparse.ArgumentParser(prog="hardyctl", description="Controllability and admissibility certificates for diagonal and Jordan systems.")
    parser.add_argument("--version", action="version", version=f"hardyctl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("analyze", "run the task named in the config"),
        ("perturb", "perturbation criterion"),
        ("interpolate", "weighted multiple interpolation"),
        ("admissibility", "resolvent-based admissibility bounds"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--config", required=True, help="JSON config file")
    p = sub.add_parser("examples", parents=[common], help="built-in heat and wave examples")
    p.add_argument("generator", choices=["heat", "wave"])
    p.add_argument("--n", type=int, default=100, help="truncation N")
    p.add_argument("--task", choices=["exact", "null", "perturb", "admissibility"], default="exact")
    p.add_argument("--tau", type=float, help="control time for --task null")
    return parser


def _config_from_args(args) -> AnalysisConfig:
    if args.command == "examples":
        data = {"task": args.task, "system": {"generator": args.generator, "n": args.n}}
        params = {}
        if args.tau is not None:
            params["tau"] = args.tau
        if args.task == "perturb":
            params["perturbation"] = {"kind": "heat-sqrt" if args.generator == "heat" else "shift", "scale": 0.1}
        if params:
            data["params"] = params
        return AnalysisConfig.from_dict(data)
    config = load_config(args.config)
    if args.command != "analyze" and config.task != args.command:
        raise InputError(f"/task: config task is {config.task!r} but the {args.command!r} subcommand was used")
    return config


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_POSITIVE
    try:
        threads = args.threads if args.threads is not None else default_threads()
        if threads < 1:
            raise InputError("--threads must be positive")
        config = _config_from_args(args)
        start = time.perf_counter()
        report = run_config(config, threads=threads, grid=args.grid, series=args.series)
        elapsed = time.perf_counter() - start
        out = args.out or config.output.get("report")
        if out:
            write_report(report, out)
        plot = args.plot or config.output.get("plot")
        if plot:
            names = list(report.get("series", {}))
            if len(names) != 1:
                raise InputError("--plot needs exactly one --series")
            emit_plot_data(report, names[0], plot)
        print(summarize(report, elapsed))
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (HardyError, ValueError) as exc:
        # DomainError and argument validation from the core modules
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_POSITIVE if report["verdict"] else EXIT_NEGATIVE
