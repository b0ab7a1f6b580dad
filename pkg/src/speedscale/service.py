"""FastAPI service exposing the solver toolkit.

All endpoints are stateless wrappers over the library: requests carry instance
documents in the JSON formats of the serialize module, responses carry
schedules, reports, or CSV sweeps.  Library errors map onto HTTP statuses by
kind: parse 400, infeasible or size 409, contract or internal 500.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .discretize import build_grid
from .errors import ParseError, SpeedScaleError
from .experiments import (
    bench,
    bench_to_csv,
    gap_experiment,
    gap_rows_to_csv,
    solve_instance,
)
from .hardness import (
    gap_constant,
    max_matching_size,
    parse_3dm,
    reduce_f,
    serialize_3dm,
    verify_gap_inequality,
)
from .instances import energy_of_schedule, validate_schedule
from .oracle import DEFAULT_CAP, brute_force_nonpreemptive, yds_preemptive
from .rationals import fraction_to_json
from .relaxation import build_relaxation, solve_relaxation
from .reports import Stopwatch, make_report
from .serialize import parse_instance, parse_schedule, serialize_instance, serialize_schedule
from .generators import generate_gap_family, generate_random

app = FastAPI(
    title="speedscale",
    version=__version__,
    description="Minimum-energy speed-scaling scheduling service",
)

_STATUS_BY_KIND = {"parse": 400, "infeasible": 409, "size": 409, "contract": 500, "internal": 500}


@app.exception_handler(SpeedScaleError)
async def _library_error(request: Request, exc: SpeedScaleError):
    body = {"error": {"kind": exc.kind, "message": str(exc)}}
    if isinstance(exc, ParseError):
        body["error"]["path"] = exc.path
    return JSONResponse(status_code=_STATUS_BY_KIND.get(exc.kind, 500), content=body)


class SolveRequest(BaseModel):
    instance: dict
    epsilon: float = 0.5
    strategy: str = "lp"
    include_nonpreemption: bool = True
    cap: int = DEFAULT_CAP


class ScheduleReply(BaseModel):
    schedule: dict
    report: dict


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/solve", response_model=ScheduleReply)
def solve(req: SolveRequest) -> ScheduleReply:
    instance = parse_instance(req.instance)
    with Stopwatch() as sw:
        outcome = solve_instance(
            instance,
            epsilon=req.epsilon,
            strategy=req.strategy,
            include_nonpreemption=req.include_nonpreemption,
            cap=req.cap,
        )
    report = make_report(
        "solve",
        instance,
        parameters={
            "alpha": instance.alpha,
            "epsilon": req.epsilon,
            "strategy": req.strategy,
            "include_nonpreemption": req.include_nonpreemption,
        },
        energies=outcome.energies,
        bounds=outcome.bounds,
        wall_time_s=sw.elapsed,
    )
    report["details"] = outcome.details
    return ScheduleReply(
        schedule=serialize_schedule(outcome.schedule, outcome.energy), report=report
    )


class LpRequest(BaseModel):
    instance: dict
    epsilon: float = 0.5
    include_nonpreemption: bool = True


class LpReply(BaseModel):
    lp_value: float
    status: str
    nnz: int
    runtime_s: float
    columns: int
    lazy_rows: int
    iterations: int
    report: dict


@app.post("/lp/solve", response_model=LpReply)
def lp_solve(req: LpRequest) -> LpReply:
    instance = parse_instance(req.instance)
    with Stopwatch() as sw:
        grid = build_grid(instance, req.epsilon)
        _, rep = solve_relaxation(
            build_relaxation(instance, grid, req.include_nonpreemption)
        )
    report = make_report(
        "lp solve",
        instance,
        parameters={
            "alpha": instance.alpha,
            "epsilon": req.epsilon,
            "include_nonpreemption": req.include_nonpreemption,
        },
        energies={"lp_value": rep.value},
        wall_time_s=sw.elapsed,
    )
    return LpReply(
        lp_value=rep.value,
        status=rep.status,
        nnz=rep.nnz,
        runtime_s=rep.runtime_s,
        columns=rep.columns,
        lazy_rows=rep.lazy_rows,
        iterations=rep.iterations,
        report=report,
    )


class RoundRequest(BaseModel):
    instance: dict
    epsilon: float = 0.5


class RoundReply(BaseModel):
    schedule: dict
    stages: dict
    report: dict


@app.post("/round", response_model=RoundReply)
def round_endpoint(req: RoundRequest) -> RoundReply:
    from .rounding import round_to_schedule

    instance = parse_instance(req.instance)
    with Stopwatch() as sw:
        grid = build_grid(instance, req.epsilon)
        solution, rep = solve_relaxation(build_relaxation(instance, grid, True))
        result = round_to_schedule(solution, instance)
    stages = {
        "E_x": result.energy_input,
        "E_y": result.energy_split,
        "E_z": result.energy_compressed,
        "W_match": result.matching_weight,
        "E_final": result.energy_final,
        "ratio": result.ratio,
    }
    report = make_report(
        "round",
        instance,
        parameters={"alpha": instance.alpha, "epsilon": req.epsilon},
        energies={"lp_value": rep.value, **stages},
        bounds={"rounding_bound": 12.0 ** (instance.alpha - 1.0)},
        wall_time_s=sw.elapsed,
    )
    return RoundReply(
        schedule=serialize_schedule(result.schedule, result.energy_final),
        stages=stages,
        report=report,
    )


class OracleRequest(BaseModel):
    instance: dict
    epsilon: Optional[float] = None
    cap: int = DEFAULT_CAP


class YdsReply(BaseModel):
    energy: float
    profile: list
    report: dict


@app.post("/oracle/yds", response_model=YdsReply)
def oracle_yds(req: OracleRequest) -> YdsReply:
    instance = parse_instance(req.instance)
    with Stopwatch() as sw:
        profile, energy = yds_preemptive(instance)
    pieces = [
        {
            "job": p.job,
            "start": fraction_to_json(p.start),
            "end": fraction_to_json(p.end),
            "speed": fraction_to_json(p.speed),
        }
        for p in profile.pieces
    ]
    report = make_report(
        "oracle yds",
        instance,
        parameters={"alpha": instance.alpha},
        energies={"preemptive_optimum": energy},
        wall_time_s=sw.elapsed,
    )
    return YdsReply(energy=energy, profile=pieces, report=report)


@app.post("/oracle/brute", response_model=ScheduleReply)
def oracle_brute(req: OracleRequest) -> ScheduleReply:
    from .errors import ContractViolationError

    instance = parse_instance(req.instance)
    with Stopwatch() as sw:
        grid = build_grid(instance, req.epsilon) if req.epsilon is not None else None
        schedule, energy = brute_force_nonpreemptive(instance, grid, req.cap)
        violations = validate_schedule(schedule, instance)
        if violations:
            raise ContractViolationError("; ".join(violations))
    report = make_report(
        "oracle brute",
        instance,
        parameters={
            "alpha": instance.alpha,
            "epsilon": req.epsilon,
            "cap": req.cap,
        },
        energies={"brute_optimum": energy},
        wall_time_s=sw.elapsed,
    )
    return ScheduleReply(schedule=serialize_schedule(schedule, energy), report=report)


class DiscretizeRequest(BaseModel):
    instance: dict
    epsilon: float = 0.5


@app.post("/discretize")
def discretize_endpoint(req: DiscretizeRequest):
    instance = parse_instance(req.instance)
    grid = build_grid(instance, req.epsilon)
    return {
        "size": grid.size,
        "points": [fraction_to_json(p) for p in grid.points],
        "inserted": list(grid.inserted),
    }


class GapRequest(BaseModel):
    ns: list[int] = Field(default=[2, 4, 8])
    alpha: float = 2.0
    epsilon: float = 1.0
    cap: int = DEFAULT_CAP


@app.post("/gap-experiment")
def gap_endpoint(req: GapRequest):
    with Stopwatch() as sw:
        rows = gap_experiment(req.ns, req.alpha, req.epsilon, req.cap)
    return {
        "rows": [vars(r) for r in rows],
        "csv": gap_rows_to_csv(rows),
        "report": make_report(
            "gap-experiment",
            parameters={"ns": req.ns, "alpha": req.alpha, "epsilon": req.epsilon},
            wall_time_s=sw.elapsed,
        ),
    }


class ReduceRequest(BaseModel):
    tdm: dict
    alpha: float = 2.0


@app.post("/reduce-3dm")
def reduce_endpoint(req: ReduceRequest):
    tdm = parse_3dm(req.tdm)
    artifacts = reduce_f(tdm, req.alpha)
    return {
        "instance": serialize_instance(artifacts.instance),
        "artifacts": {
            "q": artifacts.q,
            "element_jobs": dict(sorted(artifacts.element_job.items())),
            "triple_machines": {
                "|".join(t): pid for t, pid in sorted(artifacts.triple_machine.items())
            },
            "dummy_machines": list(artifacts.dummy_machines),
            "dummy_jobs": list(artifacts.dummy_jobs),
        },
    }


class CheckGapRequest(BaseModel):
    tdm: dict
    schedule: dict
    alpha: float = 2.0
    cap: int = DEFAULT_CAP


@app.post("/check-gap")
def check_gap_endpoint(req: CheckGapRequest):
    tdm = parse_3dm(req.tdm)
    artifacts = reduce_f(tdm, req.alpha)
    schedule = parse_schedule(req.schedule)
    with Stopwatch() as sw:
        opt_matching = max_matching_size(tdm)
        _, opt_energy = brute_force_nonpreemptive(artifacts.instance, None, req.cap)
        verdict = verify_gap_inequality(
            tdm, schedule, artifacts, opt_matching, opt_energy
        )
    verdict["report"] = make_report(
        "check-gap",
        artifacts.instance,
        parameters={"alpha": req.alpha, "q": tdm.q, "beta": gap_constant(req.alpha)},
        energies={
            "schedule": verdict["schedule_energy"],
            "optimum": verdict["opt_energy"],
        },
        wall_time_s=sw.elapsed,
    )
    return verdict


class BenchRequest(BaseModel):
    instances: list[dict]  # [{"name": ..., "instance": {...}}]
    strategies: list[str] = Field(default=["lp", "greedy"])
    epsilon: float = 0.5
    cap: int = DEFAULT_CAP


@app.post("/bench")
def bench_endpoint(req: BenchRequest):
    named = []
    for i, entry in enumerate(req.instances):
        if "name" not in entry or "instance" not in entry:
            raise ParseError(f"instances[{i}]", "expected {'name', 'instance'}")
        named.append((str(entry["name"]), parse_instance(entry["instance"])))
    with Stopwatch() as sw:
        rows = bench(named, tuple(req.strategies), req.epsilon, req.cap)
    return {
        "rows": [vars(r) for r in rows],
        "csv": bench_to_csv(rows),
        "report": make_report(
            "bench",
            parameters={"strategies": req.strategies, "epsilon": req.epsilon},
            wall_time_s=sw.elapsed,
        ),
    }


class GenRandomRequest(BaseModel):
    n: int
    m: int = 1
    alpha: float = 2.0
    seed: int = 0
    work_range: tuple[float, float] = (1, 3)
    horizon: int = 3


@app.post("/gen/random")
def gen_random(req: GenRandomRequest):
    inst = generate_random(req.n, req.m, req.alpha, req.seed, req.work_range, req.horizon)
    return {"instance": serialize_instance(inst)}


class GenGapRequest(BaseModel):
    n: int
    alpha: float = 2.0


@app.post("/gen/gap-family")
def gen_gap(req: GenGapRequest):
    return {"instance": serialize_instance(generate_gap_family(req.n, req.alpha))}


class ValidateRequest(BaseModel):
    instance: dict
    schedule: dict


@app.post("/validate")
def validate_endpoint(req: ValidateRequest):
    instance = parse_instance(req.instance)
    schedule = parse_schedule(req.schedule)
    violations = validate_schedule(schedule, instance)
    out = {"valid": not violations, "violations": violations}
    if not violations:
        out["energy"] = energy_of_schedule(schedule, instance)
    return out
