"""Experiment runner: mechanism x dataset sweeps with deterministic seeding.

Every (configuration, repetition) pair gets its own random stream derived
from the master seed by label, so results are identical regardless of worker
count or scheduling order.  The results file holds one row per repetition;
the summary file one row per (mechanism, configuration) with mean and
standard deviation of the Frobenius error.  Floats are printed with 17
significant digits so files round-trip exactly and diffs are stable.

Wall-clock timings are kept in memory (``ResultRow.elapsed_ms``) but not
written to the results file, which must be byte-identical across reruns.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adaptive import TAU_CAP_EXPONENT, adaptive_cov, adaptive_cov_pure
from .bounds import BoundConstants
from .datagen import SynthSpec, load_csv, rescale_radius, synth
from .linalg import Dataset, covariance, frobenius_dist
from .mechanisms import (
    MechanismReport,
    gauss_cov,
    lap_cov,
    separate_cov,
    separate_cov_pure,
    zero_cov,
)
from .privacy import PrivacyBudget, zcdp_to_approx
from .randomness import RandomStream

__all__ = [
    "MECHANISM_NAMES",
    "ExperimentPlan",
    "ResultRow",
    "SummaryRow",
    "run_plan",
    "summarize",
    "write_results",
]

MECHANISM_NAMES = ("gauss", "lap", "separate", "separate-pure", "adaptive", "adaptive-pure", "zero")
_ZCDP_MECHS = ("gauss", "separate", "adaptive")
_PURE_MECHS = ("lap", "separate-pure", "adaptive-pure")
SWEEP_AXES = ("d", "n", "N", "rho", "eps")

RESULT_COLUMNS = (
    "mechanism",
    "d",
    "n",
    "N",
    "budget_kind",
    "budget_value",
    "beta",
    "seed",
    "rep",
    "frobenius_error",
    "chosen_tau",
    "chosen_branch",
)


class NumericalFailure(RuntimeError):
    """A mechanism produced a non-finite estimate."""


@dataclass(frozen=True)
class ExperimentPlan:
    """One experiment: mechanisms x (optionally swept) configurations."""

    mechanisms: tuple[str, ...]
    budget: PrivacyBudget
    synth_spec: SynthSpec | None = None
    csv_path: str | None = None
    delta: float = 1e-10
    beta: float = 0.05
    repetitions: int = 50
    sweep_axis: str | None = None
    sweep_values: tuple | None = None
    master_seed: int = 0
    out_path: str | None = None
    zero_noise: bool = False
    lap_constant: float = 4.0
    tau_cap_exponent: int = TAU_CAP_EXPONENT
    workers: int = 1

    def __post_init__(self):
        if not self.mechanisms:
            raise ValueError("no mechanisms selected")
        for m in self.mechanisms:
            if m not in MECHANISM_NAMES:
                raise ValueError(f"unknown mechanism {m!r}")
            if m in _ZCDP_MECHS and self.budget.kind != "zcdp":
                raise ValueError(f"mechanism {m!r} needs --rho (zCDP budget)")
            if m in _PURE_MECHS and self.budget.kind != "pure":
                raise ValueError(f"mechanism {m!r} needs --eps (pure-DP budget)")
        if (self.synth_spec is None) == (self.csv_path is None):
            raise ValueError("exactly one of synth_spec and csv_path is required")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if (self.sweep_axis is None) != (self.sweep_values is None):
            raise ValueError("sweep axis and values go together")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {self.sweep_axis!r}")
            if not self.sweep_values:
                raise ValueError("empty sweep value list")
            if self.sweep_axis in ("d", "n", "N") and self.synth_spec is None:
                raise ValueError(f"sweeping {self.sweep_axis} requires synthetic data")
            if self.sweep_axis == "rho" and self.budget.kind != "zcdp":
                raise ValueError("sweeping rho requires a zCDP budget")
            if self.sweep_axis == "eps" and self.budget.kind != "pure":
                raise ValueError("sweeping eps requires a pure-DP budget")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class ResultRow:
    """One mechanism run on one configuration."""

    mechanism: str
    d: int
    n: int
    bins: int | None
    budget_kind: str
    budget_value: float
    beta: float
    seed: int
    rep: int
    frobenius_error: float
    elapsed_ms: float
    chosen_tau: float | None
    chosen_branch: str | None


@dataclass(frozen=True)
class SummaryRow:
    mechanism: str
    d: int
    n: int
    bins: int | None
    budget_kind: str
    budget_value: float
    mean_error: float
    std_error: float
    runs: int


@dataclass(frozen=True)
class _Config:
    index: int
    synth_spec: SynthSpec | None
    budget: PrivacyBudget


def _sub_seed(master: int, label: str) -> int:
    digest = hashlib.blake2b(
        int(master).to_bytes(8, "little") + label.encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def _expand_configs(plan: ExperimentPlan) -> list[_Config]:
    if plan.sweep_axis is None:
        return [_Config(0, plan.synth_spec, plan.budget)]
    configs = []
    for i, value in enumerate(plan.sweep_values):
        spec, budget = plan.synth_spec, plan.budget
        if plan.sweep_axis == "d":
            spec = dataclasses.replace(spec, d=int(value))
        elif plan.sweep_axis == "n":
            spec = dataclasses.replace(spec, n=int(value))
        elif plan.sweep_axis == "N":
            spec = dataclasses.replace(spec, bins=int(value))
        else:  # rho / eps
            budget = PrivacyBudget(budget.kind, float(value))
        configs.append(_Config(i, spec, budget))
    return configs


def _materialize(plan: ExperimentPlan, config: _Config) -> Dataset:
    if config.synth_spec is not None:
        seed = _sub_seed(plan.master_seed, f"data/{config.index}")
        return synth(dataclasses.replace(config.synth_spec, seed=seed))
    return rescale_radius(load_csv(plan.csv_path))


def _run_mechanism(
    name: str, x: Dataset, budget: PrivacyBudget, plan: ExperimentPlan, stream: RandomStream
) -> MechanismReport:
    if name == "gauss":
        return gauss_cov(x, budget.value, stream)
    if name == "lap":
        return lap_cov(x, budget.value, stream)
    if name == "separate":
        return separate_cov(x, budget.value, stream)
    if name == "separate-pure":
        return separate_cov_pure(x, budget.value, stream)
    if name == "adaptive":
        return adaptive_cov(
            x, budget.value, plan.beta, stream, tau_cap_exponent=plan.tau_cap_exponent
        )
    if name == "adaptive-pure":
        return adaptive_cov_pure(
            x,
            budget.value,
            plan.beta,
            stream,
            tau_cap_exponent=plan.tau_cap_exponent,
            constants=BoundConstants(plan.lap_constant),
        )
    if name == "zero":
        return zero_cov(x)
    raise ValueError(f"unknown mechanism {name!r}")


def run_plan(plan: ExperimentPlan) -> tuple[list[ResultRow], list[SummaryRow]]:
    """Execute the plan and return per-repetition rows plus a summary."""
    configs = _expand_configs(plan)
    datasets = {c.index: _materialize(plan, c) for c in configs}
    exact = {c.index: covariance(datasets[c.index]) for c in configs}

    def one_run(config: _Config, mech: str, rep: int) -> ResultRow:
        x = datasets[config.index]
        stream = RandomStream(plan.master_seed, zero_noise=plan.zero_noise).child(
            f"run/{config.index}/{mech}/{rep}"
        )
        started = time.perf_counter()
        report = _run_mechanism(mech, x, config.budget, plan, stream)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        if not np.all(np.isfinite(report.estimate)):
            raise NumericalFailure(f"non-finite estimate from {mech!r}")
        is_adaptive = mech.startswith("adaptive")
        return ResultRow(
            mechanism=mech,
            d=x.dim,
            n=x.count,
            bins=config.synth_spec.bins if config.synth_spec else None,
            budget_kind=config.budget.kind,
            budget_value=config.budget.value,
            beta=plan.beta,
            seed=plan.master_seed,
            rep=rep,
            frobenius_error=frobenius_dist(report.estimate, exact[config.index]),
            elapsed_ms=elapsed_ms,
            chosen_tau=report.clip_threshold if is_adaptive else None,
            chosen_branch=report.variant if is_adaptive else None,
        )

    tasks = [
        (config, mech, rep)
        for config in configs
        for mech in plan.mechanisms
        for rep in range(plan.repetitions)
    ]
    if plan.workers == 1:
        rows = [one_run(*t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            rows = list(pool.map(lambda t: one_run(*t), tasks))
    return rows, summarize(rows)


def summarize(rows: list[ResultRow]) -> list[SummaryRow]:
    """Mean/std of the Frobenius error per (mechanism, configuration), in
    first-appearance order."""
    if not rows:
        raise ValueError("nothing to summarize")
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = (row.mechanism, row.d, row.n, row.bins, row.budget_kind, row.budget_value)
        groups.setdefault(key, []).append(row.frobenius_error)
    out = []
    for key, errors in groups.items():
        mech, d, n, bins, kind, value = key
        mean = float(np.mean(errors))
        std = float(np.std(errors, ddof=1)) if len(errors) > 1 else 0.0
        out.append(SummaryRow(mech, d, n, bins, kind, value, mean, std, len(errors)))
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_results(
    rows: list[ResultRow],
    summaries: list[SummaryRow],
    plan: ExperimentPlan,
    out_path: str | Path,
) -> dict:
    """Write the results CSV, a plot-ready summary CSV, and a JSON metadata
    sidecar; returns the metadata.  All three are deterministic functions of
    the plan and master seed."""
    out_path = Path(out_path)
    with out_path.open("w", newline="") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for r in rows:
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        r.mechanism,
                        r.d,
                        r.n,
                        r.bins,
                        r.budget_kind,
                        r.budget_value,
                        r.beta,
                        r.seed,
                        r.rep,
                        r.frobenius_error,
                        r.chosen_tau,
                        r.chosen_branch,
                    )
                )
                + "\n"
            )
    summary_path = out_path.with_suffix(".summary.csv")
    with summary_path.open("w", newline="") as fh:
        fh.write("mechanism,d,n,N,budget_kind,budget_value,mean_error,std_error,runs\n")
        for s in summaries:
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        s.mechanism,
                        s.d,
                        s.n,
                        s.bins,
                        s.budget_kind,
                        s.budget_value,
                        s.mean_error,
                        s.std_error,
                        s.runs,
                    )
                )
                + "\n"
            )
    meta = {
        "mechanisms": list(plan.mechanisms),
        "budget_kind": plan.budget.kind,
        "budget_value": plan.budget.value,
        "beta": plan.beta,
        "delta": plan.delta,
        "repetitions": plan.repetitions,
        "master_seed": plan.master_seed,
        "zero_noise": plan.zero_noise,
        "sweep_axis": plan.sweep_axis,
        "sweep_values": list(plan.sweep_values) if plan.sweep_values else None,
    }
    if plan.budget.kind == "zcdp":
        meta["approx_dp_equivalent"] = {
            "eps": zcdp_to_approx(plan.budget.value, plan.delta),
            "delta": plan.delta,
        }
    meta_path = out_path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta
