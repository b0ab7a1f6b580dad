"""Reproducible experiments: solve dispatch, the integrality-gap sweep, and
benchmark runs over instance corpora."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

from .discretize import build_grid
from .errors import DomainError, SizeError, SpeedScaleError
from .generators import generate_gap_family
from .instances import (
    HeterogeneousInstance,
    Instance,
    Schedule,
    energy_of_schedule,
    validate_schedule,
)
from .multiproc import schedule_multiproc
from .oracle import DEFAULT_CAP, brute_force_nonpreemptive, yds_preemptive
from .relaxation import build_relaxation, solve_relaxation
from .rounding import round_to_schedule


@dataclass
class SolveOutcome:
    schedule: Schedule
    energy: float
    energies: dict
    bounds: dict
    details: dict


def solve_instance(
    instance,
    epsilon=0.5,
    strategy: str = "lp",
    include_nonpreemption: bool = True,
    cap: int = DEFAULT_CAP,
) -> SolveOutcome:
    """One-stop solver: relaxation + rounding on one processor, the greedy
    independent-set scheduler on several."""
    if isinstance(instance, HeterogeneousInstance):
        raise DomainError(
            "solve handles homogeneous instances; use the brute-force oracle "
            "for heterogeneous ones"
        )
    if instance.processors == 1:
        grid = build_grid(instance, epsilon)
        model = build_relaxation(instance, grid, include_nonpreemption)
        solution, rep = solve_relaxation(model)
        result = round_to_schedule(solution, instance)
        alpha = instance.alpha
        energies = {
            "lp_value": rep.value,
            "lp_input": result.energy_input,
            "after_deadline_split": result.energy_split,
            "after_compression": result.energy_compressed,
            "matching_weight": result.matching_weight,
            "final": result.energy_final,
        }
        bounds = {
            "rounding_ratio": result.energy_final / rep.value,
            "rounding_bound": 12.0 ** (alpha - 1.0),
            "stage_factors": result.stage_factors(),
        }
        details = {
            "grid_points": grid.size,
            "lp_columns": rep.columns,
            "lp_lazy_rows": rep.lazy_rows,
            "lp_iterations": rep.iterations,
        }
        return SolveOutcome(result.schedule, result.energy_final, energies, bounds, details)
    schedule, info = schedule_multiproc(instance, strategy)
    energies = {"final": info["energy"], "lower_bound": info["lower_bound"]}
    bounds = {"ratio_vs_lower_bound": info["ratio"]}
    details = {"strategy": strategy, "residue_jobs": info["residue_jobs"]}
    return SolveOutcome(schedule, info["energy"], energies, bounds, details)


@dataclass
class GapRow:
    n: int
    lp_without: Optional[float]
    lp_with: Optional[float]
    brute: Optional[float]
    ratio_without: Optional[float]
    ratio_with: Optional[float]
    skipped: str = ""


def gap_experiment(ns, alpha: float = 2.0, epsilon=1, cap: int = DEFAULT_CAP) -> list[GapRow]:
    """The integrality-gap sweep on the small-jobs-plus-big-job family.

    epsilon defaults to 1 so the continuous optimum of the n=2 instance (big
    job straddling the middle, energy 8) lies exactly on the grid.
    """
    rows = []
    for n in ns:
        inst = generate_gap_family(n, alpha)
        grid = build_grid(inst, epsilon)
        try:
            _, rep_no = solve_relaxation(build_relaxation(inst, grid, False))
            _, rep_yes = solve_relaxation(build_relaxation(inst, grid, True))
            _, brute = brute_force_nonpreemptive(inst, grid, cap)
            rows.append(
                GapRow(
                    n,
                    rep_no.value,
                    rep_yes.value,
                    brute,
                    brute / rep_no.value,
                    brute / rep_yes.value,
                )
            )
        except SizeError as exc:
            rows.append(GapRow(n, None, None, None, None, None, skipped=str(exc)))
    return rows


def gap_rows_to_csv(rows: list[GapRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["n", "lp_without_nonpreemption", "lp_with_nonpreemption", "brute", "ratio_without", "ratio_with", "skipped"]
    )
    for r in rows:
        writer.writerow(
            [
                r.n,
                _fmt(r.lp_without),
                _fmt(r.lp_with),
                _fmt(r.brute),
                _fmt(r.ratio_without),
                _fmt(r.ratio_with),
                r.skipped,
            ]
        )
    return buf.getvalue()


def _fmt(x) -> str:
    return "" if x is None else f"{x:.9g}"


@dataclass
class BenchRow:
    name: str
    n: int
    m: int
    alpha: float
    strategy: str
    energy: Optional[float]
    lower_bound: Optional[float]
    ratio: Optional[float]
    runtime_s: float
    error: str = ""


def bench(
    named_instances: list[tuple[str, Instance]],
    strategies=("lp", "greedy"),
    epsilon=0.5,
    cap: int = DEFAULT_CAP,
) -> list[BenchRow]:
    """Energy and lower-bound ratios per instance and strategy.

    Single-processor instances run the relaxation-plus-rounding pipeline (one
    row, strategy "round") against the preemptive lower bound; multiprocessor
    instances run every requested window strategy.  Failures become rows with
    the error recorded, and the sweep continues.
    """
    from .reports import Stopwatch

    rows: list[BenchRow] = []
    for name, inst in sorted(named_instances, key=lambda x: x[0]):
        runs = [("round", None)] if inst.processors == 1 else [(s, None) for s in strategies]
        for strategy, _ in runs:
            try:
                with Stopwatch() as sw:
                    if inst.processors == 1:
                        outcome = solve_instance(inst, epsilon=epsilon, cap=cap)
                        _, lower = yds_preemptive(inst)
                        energy = outcome.energy
                    else:
                        schedule, info = schedule_multiproc(inst, strategy)
                        energy, lower = info["energy"], info["lower_bound"]
                rows.append(
                    BenchRow(
                        name,
                        inst.n,
                        inst.processors,
                        inst.alpha,
                        strategy,
                        energy,
                        lower,
                        energy / lower if lower > 0 else math.inf,
                        sw.elapsed,
                    )
                )
            except SpeedScaleError as exc:
                rows.append(
                    BenchRow(
                        name, inst.n, inst.processors, inst.alpha, strategy,
                        None, None, None, 0.0, error=str(exc),
                    )
                )
    return rows


def bench_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["name", "n", "m", "alpha", "strategy", "energy", "lower_bound", "ratio", "runtime_s", "error"]
    )
    for r in rows:
        writer.writerow(
            [r.name, r.n, r.m, r.alpha, r.strategy, _fmt(r.energy), _fmt(r.lower_bound),
             _fmt(r.ratio), f"{r.runtime_s:.6f}", r.error]
        )
    return buf.getvalue()
