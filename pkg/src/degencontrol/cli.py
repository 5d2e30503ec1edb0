"""Command-line front end.

    degencontrol verify SCENARIO [--cells N] [--dt DT] [--out DIR] [--no-timestamp]
    degencontrol spectrum SCENARIO [--count K] [--modes K] [--potential zero|synthesized]
    degencontrol synthesize SCENARIO
    degencontrol evolve SCENARIO [--method spectral|backward_euler|crank_nicolson]
    degencontrol demo-budyko-sellers [--insolation CSV]
    degencontrol converge SCENARIO --cells-list 250,500,1000 --dt-list 1e-3,...

Exit status: 0 on success (for ``verify`` and the demo: the eps criterion and
every applicable check passed), 1 when a check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import pipeline
from .control import build_plan
from .discretization import assemble, b_norm, write_field_csv
from .errors import DegenControlError
from .evolution import (check_nonnegativity, evolve_implicit, evolve_spectral,
                        gronwall_envelope, remainder_decay, steering_error)
from .spectral import eigendecompose

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _float_list(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cells", type=int, help="override n_cells")
    common.add_argument("--dt", type=float, help="override the implicit time step")
    common.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit timestamp and wall-clock from JSON reports")
    common.add_argument("--seed", type=_u64, default=0,
                        help="seed for randomized checks (unsigned 64-bit)")

    parser = argparse.ArgumentParser(
        prog="degencontrol",
        description="Static multiplicative control of degenerate diffusion on (-1, 1).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues (and modes) as CSV")
    p.add_argument("scenario", type=Path)
    p.add_argument("--count", type=int, default=None, help="number of eigenvalues (default all)")
    p.add_argument("--modes", type=int, default=0, help="also dump the first K modes")
    p.add_argument("--potential", choices=("zero", "synthesized"), default="zero",
                   help="operator potential: none, or the synthesized alpha_*")

    p = sub.add_parser("synthesize", parents=[common], help="control plan as JSON")
    p.add_argument("scenario", type=Path)

    p = sub.add_parser("evolve", parents=[common], help="trace CSV and summary JSON")
    p.add_argument("scenario", type=Path)
    p.add_argument("--method", choices=("spectral", "backward_euler", "crank_nicolson"),
                   default="backward_euler")

    p = sub.add_parser("verify", parents=[common], help="full pipeline with all checks")
    p.add_argument("scenario", type=Path)

    p = sub.add_parser("demo-budyko-sellers", parents=[common],
                       help="Legendre pipeline framed as the energy balance model")
    p.add_argument("--insolation", type=Path, help="two-column CSV (x, Q), metadata only")

    p = sub.add_parser("converge", parents=[common], help="refinement study as CSV")
    p.add_argument("scenario", type=Path)
    p.add_argument("--cells-list", type=_int_list, required=True)
    p.add_argument("--dt-list", type=_float_list, required=True)
    p.add_argument("--lambda2-exact", type=float, default=None)
    return parser


def _scenario(args) -> pipeline.Scenario:
    sc = pipeline.load_scenario(args.scenario)
    return sc.with_overrides(n_cells=args.cells, dt=args.dt,
                             output_dir=str(args.out) if args.out else None)


def _out_dir(sc) -> Path:
    out = Path(sc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_spectrum(args) -> int:
    sc = _scenario(args)
    grid, coeff, v0, vd = pipeline.resolve_scenario(sc)
    if args.potential == "synthesized":
        plan = build_plan(coeff, v0, vd, sc.epsilon, sc.mode,
                          mollifier_delta=sc.mollifier_delta)
        decomp = plan.spectrum
    else:
        decomp = eigendecompose(assemble(coeff, None, grid))
    count = decomp.n if args.count is None else min(args.count, decomp.n)
    out = _out_dir(sc)
    with open(out / "spectrum.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("k", "lambda_k"))
        for k in range(count):
            w.writerow((k + 1, repr(float(decomp.lambdas[k]))))
    if args.modes:
        kk = min(args.modes, decomp.n)
        with open(out / "modes.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x"] + [f"omega_{k + 1}" for k in range(kk)])
            for i, x in enumerate(grid.centers):
                w.writerow([repr(float(x))] + [repr(float(decomp.modes[k, i]))
                                               for k in range(kk)])
    print(out / "spectrum.csv")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    sc = _scenario(args)
    grid, coeff, v0, vd = pipeline.resolve_scenario(sc)
    plan = build_plan(coeff, v0, vd, sc.epsilon, sc.mode, mollifier_delta=sc.mollifier_delta)
    out = _out_dir(sc)
    alpha_path = out / "alpha_star.csv"
    write_field_csv(alpha_path, plan.alpha_star, ("x", "alpha_star"))
    doc = {
        "epsilon": plan.epsilon,
        "T": plan.horizon_T,
        "beta": plan.beta,
        "lambda1": plan.lambda1,
        "lambda2": plan.lambda2,
        "overlap": plan.overlap,
        "predicted_error": plan.predicted_error,
        "alpha_star_csv_path": str(alpha_path),
    }
    text = _dump(doc)
    (out / "plan.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_evolve(args) -> int:
    sc = _scenario(args)
    grid, coeff, v0, vd = pipeline.resolve_scenario(sc)
    plan = build_plan(coeff, v0, vd, sc.epsilon, sc.mode, mollifier_delta=sc.mollifier_delta)
    if args.method == "spectral":
        trace = evolve_spectral(plan.spectrum, plan.beta, v0, plan.horizon_T)
    else:
        op = assemble(coeff, plan.alpha_star, grid)
        trace = evolve_implicit(op, plan.beta, v0, plan.horizon_T, sc.dt, method=args.method,
                                certify_positivity=(args.method == "backward_euler"
                                                    and sc.mode == "T1"))
    out = _out_dir(sc)
    pipeline.write_trace_csv(out / f"trace_{args.method}.csv", trace)
    alpha_sup = float(np.max(np.abs(plan.control.values)))
    doc = {
        "steering_error": steering_error(trace, plan.target),
        "min_value": float(np.min(trace.min_values)),
        "b_norm": b_norm(trace, coeff),
        "gronwall_ok": gronwall_envelope(trace, alpha_sup),
        "remainder_ok": remainder_decay(plan.spectrum, plan.beta, v0, trace.times),
        "positivity_ok": check_nonnegativity(trace).passed if sc.mode == "T1" else None,
        "method": args.method,
    }
    text = _dump(doc)
    (out / f"summary_{args.method}.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _emit_report(report) -> int:
    sys.stdout.write(report.to_json())
    return report.exit_code


def cmd_verify(args) -> int:
    sc = _scenario(args)
    report = pipeline.run_pipeline(sc, timestamp=not args.no_timestamp, seed=args.seed)
    return _emit_report(report)


def cmd_demo(args) -> int:
    sc = pipeline.budyko_sellers_scenario().with_overrides(
        n_cells=args.cells, dt=args.dt, output_dir=str(args.out) if args.out else None)
    report = pipeline.run_budyko_sellers_demo(args.insolation, scenario=sc,
                                              timestamp=not args.no_timestamp,
                                              seed=args.seed)
    return _emit_report(report)


def cmd_converge(args) -> int:
    sc = _scenario(args)
    table = pipeline.run_convergence_study(sc, args.cells_list, args.dt_list,
                                           args.lambda2_exact)
    out = _out_dir(sc)
    table.write_csv(out / "convergence.csv")
    sys.stdout.write(_dump({"orders": table.orders, "margin_estimate": table.margin_estimate,
                            "csv": str(out / "convergence.csv")}))
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "synthesize": cmd_synthesize,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
    "demo-budyko-sellers": cmd_demo,
    "converge": cmd_converge,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sc = None
    try:
        if getattr(args, "scenario", None) is not None:
            sc = pipeline.load_scenario(args.scenario)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except DegenControlError as exc:
        where = sc.context_for(exc) if sc is not None else ""
        print(f"error: {where}{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
