"""Multiprocessor scheduling: greedy independent sets, per-zone windows, a
pluggable window-assignment step, and deadline-ordered de-preemption.

The end-to-end scheduler:

  1. draw m earliest-deadline greedy independent sets, one per processor;
  2. partition each processor's timeline into zones at its set's deadlines
     and build one heterogeneous "window" processor per (processor, zone),
     with zone-relative clipped life intervals;
  3. assign every job to one window ("lp": an assignment LP rounded by
     min-cost matching over window copies; "greedy": earliest deadline into
     the least-loaded feasible window) and schedule each window preemptively;
  4. reorder every window's pieces into contiguous runs by non-decreasing
     deadline, keeping each job's total duration and energy.

The zone-respecting schedule transformations (move independent sets onto
their processors; cut intervals at zone boundaries) are exposed as standalone
operations with their per-job energy factors asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractViolationError, DomainError, InfeasibleError
from .instances import (
    Assignment,
    HetJob,
    HetProcessor,
    HeterogeneousInstance,
    Instance,
    Job,
    Schedule,
    energy_of_job,
    interiors_overlap,
    validate_schedule,
)
from .lpsolve import EQUAL, LESS, LinearProgram, solve_lp
from .matching import min_cost_saturating_matching
from .oracle import yds_preemptive
from .rounding import _closed_overlap

STAGE_RTOL = 1e-9


@dataclass(frozen=True)
class ZonePartition:
    """Per processor: an independent set, its deadlines, and the zones they cut."""

    instance: Instance
    sets: tuple[tuple[Job, ...], ...]  # one independent set per processor
    residue: tuple[Job, ...]  # jobs in no set

    def deadlines_of(self, i: int) -> list[Fraction]:
        return [j.deadline for j in self.sets[i]]

    def zones_of(self, i: int) -> list[tuple[Fraction, Fraction]]:
        """Zones of processor i (0-based), sentinels clipped to the span."""
        lo = min(j.release for j in self.instance.jobs)
        hi = max(j.deadline for j in self.instance.jobs)
        cuts = [lo] + [d for d in self.deadlines_of(i) if lo < d < hi] + [hi]
        return [(a, b) for a, b in zip(cuts, cuts[1:]) if a < b]


def greedy_independent_sets(instance: Instance) -> ZonePartition:
    """m successive earliest-deadline greedy maximal independent sets."""
    remaining = sorted(instance.jobs, key=lambda j: (j.deadline, j.id))
    sets = []
    for _ in range(instance.processors):
        chosen: list[Job] = []
        rest: list[Job] = []
        for job in remaining:
            if all(not _closed_overlap(job, c) for c in chosen):
                chosen.append(job)
            else:
                rest.append(job)
        sets.append(tuple(chosen))
        remaining = rest
    return ZonePartition(instance, tuple(sets), tuple(remaining))


@dataclass(frozen=True)
class Window:
    pid: str  # heterogeneous processor id
    machine: int  # 1-based source processor
    zone_index: int  # 1-based zone on that processor
    zone: tuple[Fraction, Fraction]  # absolute time


@dataclass(frozen=True)
class WindowedInstance:
    het: HeterogeneousInstance
    windows: tuple[Window, ...]
    source: Instance

    def window_by_pid(self, pid: str) -> Window:
        for w in self.windows:
            if w.pid == pid:
                return w
        raise DomainError(f"no window {pid}")


def build_heterogeneous_instance(
    instance: Instance, partition: ZonePartition
) -> WindowedInstance:
    """One heterogeneous processor per (processor, zone), zone-relative windows.

    A job alive during part of a zone gets release max(r - zone_start, 0),
    deadline min(d - zone_start, zone_length), and its original work.
    """
    windows = []
    for i in range(instance.processors):
        for l, (lo, hi) in enumerate(partition.zones_of(i), start=1):
            windows.append(Window(f"p{i + 1}.z{l}", i + 1, l, (lo, hi)))
    processors = tuple(HetProcessor(w.pid, instance.alpha) for w in windows)
    jobs = []
    for job in instance.jobs:
        works = {}
        lives = {}
        for w in windows:
            lo, hi = w.zone
            if min(job.deadline, hi) <= max(job.release, lo):
                continue  # not alive inside this zone
            rel_r = max(job.release - lo, Fraction(0))
            rel_d = min(job.deadline - lo, hi - lo)
            works[w.pid] = job.work
            lives[w.pid] = (rel_r, rel_d)
        if not works:
            raise ContractViolationError(f"job {job.id} is alive in no zone")
        jobs.append(HetJob(job.id, job.release, job.deadline, works, lives))
    het = HeterogeneousInstance(instance.alpha, processors, tuple(jobs))
    return WindowedInstance(het, tuple(windows), instance)


@dataclass(frozen=True)
class WindowSchedule:
    """Preemptive schedule of one window: total duration per assigned job."""

    window: Window
    durations: dict[int, Fraction]  # job id -> total run time (zone-relative)
    energy: float


def _window_subinstance(windowed: WindowedInstance, pid: str, job_ids) -> Instance:
    het = windowed.het
    jobs = []
    for jid in sorted(job_ids):
        job = het.job_by_id(jid)
        r, d = job.life_on(pid)
        jobs.append(Job(jid, r, d, job.work_on(pid)))
    return Instance(het.alpha_of(pid), 1, tuple(jobs))


def _edf_order(windowed: WindowedInstance, job_ids) -> list[int]:
    source = {j.id: j for j in windowed.source.jobs}
    return sorted(job_ids, key=lambda jid: (source[jid].deadline, jid))


def _reorder_fits(sub: Instance, order: list[int], durations) -> bool:
    cursor = Fraction(0)
    for jid in order:
        job = sub.job_by_id(jid)
        start = max(cursor, job.release)
        end = start + durations[jid]
        if end > job.deadline:
            return False
        cursor = end
    return True


def _stretched_sequence_durations(sub: Instance, order: list[int]) -> dict[int, Fraction]:
    """A feasible contiguous duration vector for the given order: seed every job
    with an equal share of its remaining window, then greedily extend."""
    eps = min((j.deadline - j.release) for j in sub.jobs) / (2 * len(order) + 2)
    starts: dict[int, Fraction] = {}
    ends: dict[int, Fraction] = {}
    cursor = Fraction(0)
    for jid in order:
        job = sub.job_by_id(jid)
        start = max(cursor, job.release)
        if start + eps > job.deadline:
            raise ContractViolationError(
                f"no contiguous deadline-ordered schedule in window for job {jid}"
            )
        starts[jid], ends[jid] = start, start + eps
        cursor = start + eps
    # extend each interval to the next job's start or its own deadline
    for pos in range(len(order) - 1, -1, -1):
        jid = order[pos]
        job = sub.job_by_id(jid)
        limit = starts[order[pos + 1]] if pos + 1 < len(order) else None
        new_end = job.deadline if limit is None else min(job.deadline, limit)
        ends[jid] = max(ends[jid], new_end)
    return {jid: ends[jid] - starts[jid] for jid in order}


def _convex_sequence_durations(
    sub: Instance, order: list[int], seed: dict[int, Fraction]
) -> dict[int, Fraction]:
    """Polish a feasible contiguous sequence with a convex solver; falls back
    to the seed whenever the polished point is not exactly feasible."""
    from scipy.optimize import minimize

    alpha = sub.alpha
    jobs = [sub.job_by_id(jid) for jid in order]
    k = len(jobs)
    x0 = []
    cursor = Fraction(0)
    for job in jobs:
        start = max(cursor, job.release)
        end = start + seed[job.id]
        x0 += [float(start), float(end)]
        cursor = end

    def objective(x):
        total = 0.0
        for i, job in enumerate(jobs):
            length = max(x[2 * i + 1] - x[2 * i], 1e-12)
            total += float(job.work) ** alpha * length ** (1.0 - alpha)
        return total

    cons = []
    for i, job in enumerate(jobs):
        cons.append({"type": "ineq", "fun": lambda x, i=i: x[2 * i + 1] - x[2 * i] - 1e-9})
        cons.append({"type": "ineq", "fun": lambda x, i=i, r=float(job.release): x[2 * i] - r})
        cons.append({"type": "ineq", "fun": lambda x, i=i, d=float(job.deadline): d - x[2 * i + 1]})
        if i + 1 < k:
            cons.append({"type": "ineq", "fun": lambda x, i=i: x[2 * i + 2] - x[2 * i + 1]})
    res = minimize(objective, x0, method="SLSQP", constraints=cons,
                   options={"maxiter": 200, "ftol": 1e-12})
    if not res.success:
        return seed
    durations = {
        job.id: Fraction(float(res.x[2 * i + 1] - res.x[2 * i])).limit_denominator(10**9)
        for i, job in enumerate(jobs)
    }
    if any(d <= 0 for d in durations.values()) or not _reorder_fits(sub, order, durations):
        return seed
    if sum(
        energy_of_job(sub.job_by_id(j).work, durations[j], alpha) for j in order
    ) > sum(
        energy_of_job(sub.job_by_id(j).work, seed[j], alpha) for j in order
    ):
        return seed
    return durations


def _assign_greedy(windowed: WindowedInstance) -> dict[str, list[int]]:
    """Earliest original deadline first, into the least-loaded feasible window."""
    het = windowed.het
    loads: dict[str, Fraction] = {w.pid: Fraction(0) for w in windowed.windows}
    chosen: dict[str, list[int]] = {w.pid: [] for w in windowed.windows}
    for jid in _edf_order(windowed, [j.id for j in het.jobs]):
        job = het.job_by_id(jid)
        best = None
        for w in windowed.windows:
            life = job.life_on(w.pid)
            if life is None:
                continue
            width = w.zone[1] - w.zone[0]
            score = (loads[w.pid] + job.work_on(w.pid)) / width
            if best is None or score < best[0]:
                best = (score, w.pid)
        if best is None:
            raise InfeasibleError(f"job {jid} fits in no window")
        loads[best[1]] += job.work_on(best[1])
        chosen[best[1]].append(jid)
    return chosen


def _assign_lp(windowed: WindowedInstance) -> dict[str, list[int]]:
    """Assignment LP rounded by a min-cost matching over window copies.

    Cost of putting a job into a window is the energy of running it alone in
    its clipped window; congestion rows cap the total clipped length per
    window, doubling the caps until the LP is feasible.
    """
    het = windowed.het
    alpha_pow = het.alpha
    job_ids = sorted(j.id for j in het.jobs)
    variables: list[tuple[int, str]] = []
    cost: dict[tuple[int, str], float] = {}
    clip: dict[tuple[int, str], Fraction] = {}
    for jid in job_ids:
        job = het.job_by_id(jid)
        for w in windowed.windows:
            life = job.life_on(w.pid)
            if life is None:
                continue
            variables.append((jid, w.pid))
            clip[(jid, w.pid)] = life[1] - life[0]
            cost[(jid, w.pid)] = energy_of_job(job.work_on(w.pid), life[1] - life[0], alpha_pow)
    index = {v: i for i, v in enumerate(variables)}

    relax = 1
    solution = None
    while relax <= 64:
        lp = LinearProgram(len(variables))
        for v, i in index.items():
            lp.objective[i] = cost[v]
        for jid in job_ids:
            lp.add_row({i: 1.0 for (j, p), i in index.items() if j == jid}, EQUAL, 1.0)
        for w in windowed.windows:
            coeffs = {
                i: float(clip[(j, p)]) for (j, p), i in index.items() if p == w.pid
            }
            if coeffs:
                width = float(w.zone[1] - w.zone[0])
                lp.add_row(coeffs, LESS, width * relax)
        sol = solve_lp(lp)
        if sol.status == "optimal":
            solution = sol
            break
        relax *= 2
    if solution is None:
        raise ContractViolationError("window assignment LP stayed infeasible")

    # round: per window, spread jobs over unit copies by decreasing clipped length
    per_window: dict[str, list[tuple[int, Fraction, float]]] = {}
    for (jid, pid), i in index.items():
        mass = float(solution.x[i])
        if mass > 1e-9:
            per_window.setdefault(pid, []).append((jid, clip[(jid, pid)], mass))
    rights: list[tuple[str, int]] = []
    edges: list[tuple[int, int, float]] = []
    left_index = {jid: i for i, jid in enumerate(job_ids)}
    for pid in sorted(per_window):
        items = sorted(per_window[pid], key=lambda it: (-it[1], it[0]))
        total = sum(m for _, _, m in items)
        copies = max(1, math.ceil(total - 1e-9))
        base = len(rights)
        rights.extend((pid, c + 1) for c in range(copies))
        prefix = 0.0
        for jid, _, mass in items:
            lo, hi = prefix, prefix + mass
            prefix = hi
            i = math.floor(lo + 1e-12) + 1
            while i - 1 < hi - 1e-12:
                if base + i - 1 < len(rights):
                    edges.append((left_index[jid], base + i - 1, cost[(jid, pid)]))
                i += 1
    chosen_idx, _ = min_cost_saturating_matching(len(job_ids), len(rights), edges)
    chosen: dict[str, list[int]] = {w.pid: [] for w in windowed.windows}
    for jid, eidx in zip(job_ids, chosen_idx):
        pid = rights[edges[eidx][1]][0]
        chosen[pid].append(jid)
    return chosen


def solve_windows(windowed: WindowedInstance, strategy: str = "lp") -> list[WindowSchedule]:
    """Assign every job to one window and schedule each window preemptively.

    Durations are taken from the per-window preemptive optimum; when they
    cannot be laid out contiguously in deadline order, the window is re-solved
    as a contiguous deadline-ordered sequence so the final reorder always
    succeeds.
    """
    if strategy == "greedy":
        chosen = _assign_greedy(windowed)
    elif strategy == "lp":
        chosen = _assign_lp(windowed)
    else:
        raise DomainError(f"unknown window strategy {strategy!r}")
    out = []
    for w in windowed.windows:
        job_ids = chosen.get(w.pid, [])
        if not job_ids:
            continue
        sub = _window_subinstance(windowed, w.pid, job_ids)
        profile, _ = yds_preemptive(sub)
        durations = {jid: profile.duration_of(jid) for jid in job_ids}
        order = _edf_order(windowed, job_ids)
        if not _reorder_fits(sub, order, durations):
            durations = _stretched_sequence_durations(sub, order)
            durations = _convex_sequence_durations(sub, order, durations)
        energy = sum(
            energy_of_job(sub.job_by_id(j).work, durations[j], sub.alpha) for j in job_ids
        )
        out.append(WindowSchedule(w, durations, energy))
    return out


def edf_reorder(
    windowed: WindowedInstance, window_schedules: list[WindowSchedule]
) -> Schedule:
    """Contiguous runs in non-decreasing original deadline order per window.

    Total durations are preserved exactly; each job runs at constant speed, so
    the energy never increases (merging preempted pieces cannot raise it).
    """
    assignments = []
    for ws in window_schedules:
        pid = ws.window.pid
        zone_lo = ws.window.zone[0]
        sub = _window_subinstance(windowed, pid, list(ws.durations))
        order = _edf_order(windowed, list(ws.durations))
        cursor = Fraction(0)
        for jid in order:
            job = sub.job_by_id(jid)
            start = max(cursor, job.release)
            end = start + ws.durations[jid]
            if end > job.deadline:
                raise ContractViolationError(
                    f"deadline-ordered reorder infeasible for job {jid} in window {pid}"
                )
            cursor = end
            assignments.append(
                Assignment(jid, f"p{ws.window.machine}", zone_lo + start, zone_lo + end)
            )
    assignments.sort(key=lambda a: a.job)
    return Schedule(tuple(assignments))


def schedule_multiproc(
    instance: Instance, strategy: str = "lp"
) -> tuple[Schedule, dict]:
    """End-to-end multiprocessor scheduler; the result is always validated."""
    partition = greedy_independent_sets(instance)
    windowed = build_heterogeneous_instance(instance, partition)
    window_schedules = solve_windows(windowed, strategy)
    schedule = edf_reorder(windowed, window_schedules)
    violations = validate_schedule(schedule, instance)
    if violations:
        raise ContractViolationError(
            "multiprocessor schedule invalid: " + "; ".join(violations)
        )
    energy = sum(
        energy_of_job(instance.job_by_id(a.job).work, a.end - a.start, instance.alpha)
        for a in schedule.assignments
    )
    per_processor: dict[int, list[int]] = {}
    for a in schedule.assignments:
        per_processor.setdefault(int(a.processor[1:].split(".")[0]), []).append(a.job)
    lower = 0.0
    for i, jids in sorted(per_processor.items()):
        sub = Instance(
            instance.alpha, 1, tuple(j for j in instance.jobs if j.id in set(jids))
        )
        lower += yds_preemptive(sub)[1]
    info = {
        "energy": energy,
        "lower_bound": lower,
        "ratio": energy / lower if lower > 0 else math.inf,
        "strategy": strategy,
        "residue_jobs": [j.id for j in partition.residue],
    }
    return schedule, info


# ---------------------------------------------------------------------------
# Schedule transformations (testable analysis machinery)
# ---------------------------------------------------------------------------


def _overlap_len(a: tuple, b: tuple) -> Fraction:
    return max(Fraction(0), min(a[1], b[1]) - max(a[0], b[0]))


def transform_assign_to_processors(
    schedule: Schedule, subpartition: list[list[Job]], instance: Instance
) -> Schedule:
    """Move each independent set onto its own processor.

    A moved job either shares a long-enough overlap with a (non-member) job
    already there, in which case both run back to back inside the overlap at
    one speed, or it drops into the idle middle fifth of its old interval.
    Changed jobs lose at most the factor (5/2)**(a-1) * (1 + wmax/wmin)**a.
    """
    if len(subpartition) > instance.processors:
        raise DomainError("more independent sets than processors")
    for i, group in enumerate(subpartition):
        for x, a in enumerate(group):
            for b in group[x + 1 :]:
                if _closed_overlap(a, b):
                    raise DomainError(
                        f"set {i + 1}: jobs {a.id} and {b.id} are not independent"
                    )
    violations = validate_schedule(schedule, instance)
    if violations:
        raise DomainError("schedule invalid: " + "; ".join(violations))

    alpha = instance.alpha
    works = {j.id: j.work for j in instance.jobs}
    wmax = max(works.values())
    wmin = min(works.values())
    factor = (5.0 / 2.0) ** (alpha - 1.0) * float(1 + wmax / wmin) ** alpha

    current: dict[int, Assignment] = {a.job: a for a in schedule.assignments}
    members: dict[int, int] = {}  # job id -> target processor (1-based)
    for i, group in enumerate(subpartition, start=1):
        for job in group:
            members[job.id] = i

    original = dict(current)
    moved = [jid for jid, a in current.items()
             if jid in members and a.processor != f"p{members[jid]}"]
    for jid in moved:
        del current[jid]  # vacate before re-placing

    for jid in sorted(moved):
        target = f"p{members[jid]}"
        me = original[jid]
        my_iv = (me.start, me.end)
        my_len = me.end - me.start
        occupants = sorted(
            (a for a in current.values()
             if a.processor == target and a.job not in members),
            key=lambda a: (a.start, a.job),
        )
        partner = None
        for occ in occupants:
            ov = _overlap_len(my_iv, (occ.start, occ.end))
            if ov * 5 >= 2 * min(my_len, occ.end - occ.start):
                partner = occ
                break
        if partner is not None:
            ov_lo = max(me.start, partner.start)
            ov_hi = min(me.end, partner.end)
            w_me, w_pa = works[jid], works[partner.job]
            total = w_me + w_pa
            # both run at one speed inside the overlap, earlier original start first
            if partner.start <= me.start:
                first, w_first = partner.job, w_pa
            else:
                first, w_first = jid, w_me
            split = ov_lo + (ov_hi - ov_lo) * w_first / total
            pieces = {first: (ov_lo, split), (partner.job if first == jid else jid): (split, ov_hi)}
            pair_energy = float(total) ** alpha / float(ov_hi - ov_lo) ** (alpha - 1.0)
            short = min(my_len, partner.end - partner.start)
            w_short = w_me if my_len <= partner.end - partner.start else w_pa
            base = energy_of_job(w_short, short, alpha)
            if pair_energy > factor * base * (1.0 + STAGE_RTOL):
                raise ContractViolationError(
                    f"pairing of jobs {jid} and {partner.job} exceeds the energy factor"
                )
            current[partner.job] = Assignment(partner.job, target, *pieces[partner.job])
            current[jid] = Assignment(jid, target, *pieces[jid])
        else:
            # the middle fifth must be idle: every occupant overlaps an end of
            # the interval by less than 2/5 of it, so the center is free
            fifth = my_len / 5
            mid_lo, mid_hi = me.start + 2 * fifth, me.end - 2 * fifth
            busy = [
                (a.start, a.end) for a in current.values() if a.processor == target
            ]
            for s, e in busy:
                if interiors_overlap(s, e, mid_lo, mid_hi):
                    raise ContractViolationError(
                        f"middle fifth of job {jid} is not idle on {target}"
                    )
            current[jid] = Assignment(jid, target, mid_lo, mid_hi)

    result = Schedule(tuple(sorted(current.values(), key=lambda a: a.job)))
    violations = validate_schedule(result, instance)
    if violations:
        raise ContractViolationError("transformed schedule invalid: " + "; ".join(violations))
    return result


def cut_at_zone_boundaries(
    schedule: Schedule, subpartition: list[list[Job]], instance: Instance
) -> Schedule:
    """Cut every interval at its processor's zone boundaries, keeping the
    larger side (ties go left); at most one boundary can be crossed."""
    boundaries: dict[str, list[Fraction]] = {}
    for i, group in enumerate(subpartition, start=1):
        boundaries[f"p{i}"] = sorted(j.deadline for j in group)
    out = []
    for a in schedule.assignments:
        cuts = [d for d in boundaries.get(a.processor, []) if a.start < d < a.end]
        if len(cuts) >= 2:
            raise ContractViolationError(
                f"job {a.job}: interval [{a.start}, {a.end}] spans a full zone "
                f"(boundaries {cuts}); some independent-set job cannot run"
            )
        if cuts:
            d = cuts[0]
            left, right = (a.start, d), (d, a.end)
            keep = left if left[1] - left[0] >= right[1] - right[0] else right
            if (keep[1] - keep[0]) * 2 < a.end - a.start:
                raise ContractViolationError("kept side is smaller than half")
            out.append(Assignment(a.job, a.processor, keep[0], keep[1]))
        else:
            out.append(a)
    result = Schedule(tuple(out))
    violations = validate_schedule(result, instance)
    if violations:
        raise ContractViolationError("cut schedule invalid: " + "; ".join(violations))
    return result
