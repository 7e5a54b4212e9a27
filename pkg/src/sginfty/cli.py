"""Command line interface.

Verbs:
  analyze-matrix     convergence analysis of a matrix power family
  analyze-generator  convergence analysis of an exponential family
  abel-probe         resolvent pole probe at a chosen point
  pde-demo           drift-diffusion scenario run
  ensemble           seeded random family suite

Each verb prints a JSON report to stdout. With --output DIR the report,
a CSV companion and diagnostic figures are written into the directory.
Exit codes: 0 completed analysis, 2 bad input, 3 numerical failure.
"""

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .ensembles import DEFAULT_SEED, KINDS, run_ensemble
from .exceptions import EigenSolverError, InputError, SpectralPointError
from .figures import (
    convergence_figure,
    ensemble_figure,
    probe_figure,
    spectrum_figure,
)
from .infinity import abel_pole_probe
from .io import (
    _read_json,
    analysis_report,
    ensemble_report,
    json_text,
    load_matrix,
    load_scenario,
    load_semigroup_spec,
    matrix_from_json,
    pde_report,
    probe_report,
    write_csv,
)
from .parabolic import (
    DENSE_LIMIT,
    assemble_operator,
    build_propagator,
    check_dissipativity,
    check_lyapunov,
    measure_convergence,
)
from .semigroups import NATURALS, NONNEG_REALS, SemigroupSpec, parse_monoid

_NORMS = {"1": 1, "2": 2, "inf": np.inf}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sginfty",
        description="Long-time structure of matrix semigroups.",
    )
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    def add_output(p):
        p.add_argument(
            "--output",
            metavar="DIR",
            help="directory receiving report.json, a CSV companion and figures",
        )
        p.add_argument(
            "--no-figures",
            action="store_true",
            help="skip PNG rendering in the output directory",
        )

    def add_analysis(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True, metavar="FILE",
                       help="matrix file (.csv or JSON) or full family file")
        p.add_argument("--monoid", help="index monoid name for bare matrix input")
        p.add_argument("--norm", choices=sorted(_NORMS),
                       help="operator norm exponent (default 2)")
        p.add_argument("--tol", type=float, default=1e-9,
                       help="tolerance for group structure detection")
        p.add_argument("--k-max", type=int, default=10_000, dest="k_max",
                       help="largest cyclic order scanned")
        add_output(p)
        return p

    add_analysis("analyze-matrix", "analyze a discrete power family T^n")
    add_analysis("analyze-generator", "analyze a continuous family e^{tA}")

    p = sub.add_parser("abel-probe", help="resolvent pole probe near a point")
    p.add_argument("--input", required=True, metavar="FILE",
                   help="matrix file (.csv or JSON)")
    p.add_argument("lam", nargs="?", default="1", metavar="LAMBDA",
                   help="probe point as a Python complex literal (default 1)")
    add_output(p)

    p = sub.add_parser("pde-demo", help="run a drift-diffusion scenario")
    p.add_argument("--input", required=True, metavar="FILE",
                   help="scenario JSON file")
    p.add_argument("--t-max", type=float, dest="t_max",
                   help="override the scenario time horizon")
    add_output(p)

    p = sub.add_parser("ensemble", help="run a seeded random family suite")
    p.add_argument("kind", choices=KINDS, help="family kind")
    p.add_argument("count", type=int, help="number of members")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"base seed (default {DEFAULT_SEED})")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker threads (results do not depend on this)")
    add_output(p)

    return parser


def _load_family(args, mode):
    path = Path(args.input)
    if path.suffix.lower() == ".csv":
        matrix = load_matrix(path)
    else:
        data = _read_json(path)
        if isinstance(data, dict) and "mode" in data:
            if args.monoid is not None or args.norm is not None:
                raise InputError(
                    "--monoid and --norm only apply to bare matrix input; "
                    f"{path} already declares the family"
                )
            sg = load_semigroup_spec(path)
            if sg.mode != mode:
                raise InputError(
                    f"{path}: expected a {mode} family, "
                    f"file declares mode {sg.mode!r}"
                )
            return sg
        matrix = matrix_from_json(data, context=str(path))
    if args.monoid is not None:
        try:
            monoid = parse_monoid(args.monoid)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    else:
        monoid = NATURALS if mode == "discrete" else NONNEG_REALS
    try:
        return SemigroupSpec(mode, matrix, monoid, _NORMS[args.norm or "2"])
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _prepare_analyze(args, mode):
    sg = _load_family(args, mode)

    def runner():
        doc = analysis_report(sg, k_max=args.k_max, tol=args.tol)

        def emit(outdir, figures):
            write_csv(
                outdir / "peripheral.csv",
                ["re", "im", "pole_order"],
                [(e["re"], e["im"], e["pole_order"]) for e in doc["peripheral"]],
            )
            if figures:
                spectrum_figure(outdir / "spectrum.png", sg.matrix, sg.mode)

        return doc, emit

    return runner


def _prepare_probe(args):
    matrix = load_matrix(args.input)
    try:
        lam = complex(args.lam)
    except ValueError:
        raise InputError(
            f"cannot parse probe point {args.lam!r} as a complex number"
        ) from None
    if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
        raise InputError("probe point must be finite")
    if abs(abs(lam) - 1.0) > 1e-6:
        raise InputError(
            f"probe point must lie on the unit circle, got |lambda|={abs(lam):.6g}"
        )

    def runner():
        doc = probe_report(abel_pole_probe(matrix, lam), lam)

        def emit(outdir, figures):
            rows = [
                (k + 1, pt["re"], pt["im"], norm)
                for k, (pt, norm) in enumerate(zip(doc["schedule"], doc["norms"]))
            ]
            write_csv(outdir / "schedule.csv", ["step", "re", "im", "norm"], rows)
            if figures:
                probe_figure(outdir / "probe.png", doc)

        return doc, emit

    return runner


def _prepare_pde(args):
    sc = load_scenario(args.input)
    if args.t_max is not None:
        sc = replace(
            sc, t_max=args.t_max, params={**sc.params, "t_max": args.t_max}
        )
    # reject inconsistent timing before any factorization work starts
    if sc.t_max < 2 * sc.probe:
        raise InputError(
            f"time horizon {sc.t_max:g} is shorter than two probe "
            f"intervals of {sc.probe:g}"
        )
    ratio = sc.probe / sc.tau
    if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise InputError(
            f"probe interval {sc.probe:g} must be a positive multiple "
            f"of tau={sc.tau:g}"
        )
    n_unknowns = 2 * sc.grid.n_points
    if n_unknowns > DENSE_LIMIT:
        raise InputError(
            f"scenario has {n_unknowns} unknowns; dense snapshot probing "
            f"is capped at {DENSE_LIMIT}"
        )

    def runner():
        op = assemble_operator(sc.grid, sc.pot)
        diss = check_dissipativity(sc.pot, sc.grid)
        lyap = check_lyapunov(sc.grid, sc.pot.beta, sc.lambda0)
        prop = build_propagator(op, sc.tau, sc.scheme)
        meas = measure_convergence(prop, sc.t_max, sc.probe)
        doc = pde_report(sc, op, diss, lyap, meas)

        def emit(outdir, figures):
            write_csv(
                outdir / "series.csv",
                ["t", "diff_norm", "op_norm", "rank"],
                [(r.t, r.diff_norm, r.op_norm, r.rank) for r in meas.rows],
            )
            if figures:
                convergence_figure(outdir / "convergence.png", meas.rows)

        return doc, emit

    return runner


def _prepare_ensemble(args):
    if args.count < 1:
        raise InputError("count must be a positive integer")
    if args.jobs < 1:
        raise InputError("jobs must be a positive integer")

    def runner():
        stats = run_ensemble(args.kind, args.count, seed=args.seed, jobs=args.jobs)
        doc = ensemble_report(stats)

        def emit(outdir, figures):
            write_csv(
                outdir / "members.csv",
                ["index", "seed", "dim", "margin", "passed"],
                [(m.index, m.seed, m.dim, m.margin, m.passed) for m in stats.members],
            )
            if figures:
                ensemble_figure(outdir / "margins.png", stats)

        return doc, emit

    return runner


def _prepare(args):
    if args.verb == "analyze-matrix":
        return _prepare_analyze(args, "discrete")
    if args.verb == "analyze-generator":
        return _prepare_analyze(args, "continuous")
    if args.verb == "abel-probe":
        return _prepare_probe(args)
    if args.verb == "pde-demo":
        return _prepare_pde(args)
    return _prepare_ensemble(args)


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        runner = _prepare(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        doc, emit = runner()
    except (EigenSolverError, SpectralPointError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    text = json_text(doc)
    sys.stdout.write(text)
    if args.output:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.json").write_text(text)
        emit(outdir, not args.no_figures)
    return 0


if __name__ == "__main__":
    sys.exit(main())
