"""Command-line entry point.

    dpcov run --mechanism gauss,separate --synthetic n=1000,d=64,N=4,s=3 \
              --rho 0.1 --reps 50 --seed 7 --sweep d=16,64,256 --out results.csv

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .adaptive import TAU_CAP_EXPONENT
from .harness import (
    MECHANISM_NAMES,
    ExperimentPlan,
    NumericalFailure,
    run_plan,
    write_results,
)
from .datagen import SynthSpec
from .privacy import pure, zcdp

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _parse_synthetic(text: str) -> SynthSpec:
    fields = {"n": None, "d": None, "N": 1, "s": 3.0}
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"bad --synthetic entry {part!r}; expected key=value")
        key, value = part.split("=", 1)
        key = key.strip()
        if key not in fields:
            raise ValueError(f"unknown --synthetic key {key!r} (use n, d, N, s)")
        fields[key] = float(value) if key == "s" else int(value)
    if fields["n"] is None or fields["d"] is None:
        raise ValueError("--synthetic needs at least n=... and d=...")
    return SynthSpec(n=fields["n"], d=fields["d"], bins=fields["N"], skew=fields["s"])


def _parse_sweep(text: str) -> tuple[str, tuple]:
    if "=" not in text:
        raise ValueError("--sweep expects AXIS=v1,v2,...")
    axis, values = text.split("=", 1)
    axis = axis.strip()
    parsed = [float(v) if axis in ("rho", "eps") else int(v) for v in values.split(",") if v]
    if not parsed:
        raise ValueError("--sweep got an empty value list")
    return axis, tuple(parsed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpcov", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment plan")
    run.add_argument(
        "--mechanism",
        required=True,
        help=f"comma-separated list from {{{','.join(MECHANISM_NAMES)}}}",
    )
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="CSV file, one row per individual")
    source.add_argument("--synthetic", help="synthetic spec, e.g. n=1000,d=64,N=4,s=3")
    budget = run.add_mutually_exclusive_group(required=True)
    budget.add_argument("--rho", type=float, help="zCDP budget")
    budget.add_argument("--eps", type=float, help="pure-DP budget")
    run.add_argument("--delta", type=float, default=1e-10,
                     help="delta for reporting the approximate-DP equivalent")
    run.add_argument("--beta", type=float, default=0.05, help="failure probability")
    run.add_argument("--reps", type=int, default=50, help="repetitions per configuration")
    run.add_argument("--seed", type=int, default=0, help="master seed (decimal uint64)")
    run.add_argument("--sweep", help="sweep one axis, e.g. d=16,64,256 or rho=0.05,0.1")
    run.add_argument("--out", help="results CSV path (also writes .summary.csv / .meta.json)")
    run.add_argument("--zero-noise", action="store_true",
                     help="test mode: all noise draws return 0")
    run.add_argument("--lap-constant", type=float, default=4.0,
                     help="constant in the Laplace-side concentration bounds")
    run.add_argument("--tau-cap-exponent", type=int, default=TAU_CAP_EXPONENT,
                     help="smallest dyadic threshold exponent searched")
    run.add_argument("--workers", type=int, default=1, help="parallel workers")
    run.add_argument("--verbose", action="store_true", help="print per-run details")
    return parser


def _plan_from_args(args) -> ExperimentPlan:
    sweep_axis, sweep_values = (None, None)
    if args.sweep:
        sweep_axis, sweep_values = _parse_sweep(args.sweep)
    return ExperimentPlan(
        mechanisms=tuple(m.strip() for m in args.mechanism.split(",") if m.strip()),
        budget=zcdp(args.rho) if args.rho is not None else pure(args.eps),
        synth_spec=_parse_synthetic(args.synthetic) if args.synthetic else None,
        csv_path=args.input,
        delta=args.delta,
        beta=args.beta,
        repetitions=args.reps,
        sweep_axis=sweep_axis,
        sweep_values=sweep_values,
        master_seed=args.seed,
        out_path=args.out,
        zero_noise=args.zero_noise,
        lap_constant=args.lap_constant,
        tau_cap_exponent=args.tau_cap_exponent,
        workers=args.workers,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        plan = _plan_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"dpcov: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        rows, summaries = run_plan(plan)
    except NumericalFailure as exc:
        print(f"dpcov: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"dpcov: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.verbose:
        for mech in plan.mechanisms:
            if not mech.startswith("adaptive"):
                continue
            v = plan.budget.value
            split = (
                {"radius": v / 8, "trace": v / 8, "svt": v / 4, "mechanism": v / 2}
                if plan.budget.kind == "zcdp"
                else {"radius": v / 4, "trace": v / 4, "svt": v / 4, "mechanism": v / 4}
            )
            parts = ", ".join(f"{k}={s:.6g}" for k, s in split.items())
            print(f"{mech} budget ledger ({plan.budget.kind}={v:.6g}): {parts}")
        for row in rows:
            extra = ""
            if row.chosen_tau is not None:
                extra = f" tau={row.chosen_tau:.6g} branch={row.chosen_branch}"
            print(
                f"{row.mechanism} d={row.d} n={row.n} N={row.bins} "
                f"{row.budget_kind}={row.budget_value:.6g} rep={row.rep} "
                f"err={row.frobenius_error:.6g} ({row.elapsed_ms:.1f} ms){extra}"
            )
    for s in summaries:
        print(
            f"{s.mechanism} d={s.d} n={s.n} N={s.bins} {s.budget_kind}={s.budget_value:.6g}: "
            f"mean={s.mean_error:.6g} std={s.std_error:.6g} ({s.runs} runs)"
        )
    if plan.out_path:
        try:
            write_results(rows, summaries, plan, plan.out_path)
        except OSError as exc:
            print(f"dpcov: input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
