"""Exact baselines: the preemptive single-processor optimum (YDS), exhaustive
landmark-aligned non-preemptive optima for tiny instances, and the generalized
Bell number.

YDS runs on the exact rational release/deadline points, independent of any
landmark grid: it is a continuous-time lower bound.  The brute force is a
dynamic program over grid points and job subsets, so it is exact over all
schedules whose execution intervals have landmark endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .discretize import LandmarkGrid
from .errors import ContractViolationError, DomainError, InfeasibleError, SizeError
from .instances import (
    Assignment,
    HeterogeneousInstance,
    Instance,
    Schedule,
    energy_of_job,
)

#: default cap on grid points x job subsets x processors explored by the brute force
DEFAULT_CAP = 10_000_000


@dataclass(frozen=True)
class ProfilePiece:
    start: Fraction
    end: Fraction
    job: int
    speed: Fraction


@dataclass(frozen=True)
class SpeedProfile:
    """Piecewise-constant preemptive schedule: per-job work allocation pieces."""

    pieces: tuple[ProfilePiece, ...]
    critical_speeds: tuple[Fraction, ...]  # one per extraction level, in order

    def energy(self, alpha: float) -> float:
        return sum(
            float(p.end - p.start) * float(p.speed) ** alpha for p in self.pieces
        )

    def duration_of(self, job_id: int) -> Fraction:
        return sum((p.end - p.start for p in self.pieces if p.job == job_id), Fraction(0))

    def work_of(self, job_id: int) -> Fraction:
        return sum(
            ((p.end - p.start) * p.speed for p in self.pieces if p.job == job_id),
            Fraction(0),
        )


def _edf_within(jobs, lo: Fraction, hi: Fraction, speed: Fraction):
    """Earliest-deadline-first at constant speed inside [lo, hi]; exact arithmetic."""
    remaining = {j[0]: j[3] for j in jobs}
    info = {j[0]: j for j in jobs}
    pending = sorted(jobs, key=lambda j: (j[1], j[0]))  # by release
    active: list[int] = []
    pieces = []
    cur = lo
    idx = 0
    while remaining:
        while idx < len(pending) and pending[idx][1] <= cur:
            active.append(pending[idx][0])
            idx += 1
        if not active:
            if idx >= len(pending):
                raise ContractViolationError("EDF ran out of work before finishing")
            cur = pending[idx][1]
            continue
        active.sort(key=lambda jid: (info[jid][2], jid))
        jid = active[0]
        finish = cur + remaining[jid] / speed
        next_release = pending[idx][1] if idx < len(pending) else None
        stop = finish if next_release is None or finish <= next_release else next_release
        if stop > cur:
            pieces.append(ProfilePiece(cur, stop, jid, speed))
            remaining[jid] -= (stop - cur) * speed
        if remaining[jid] == 0:
            if stop > info[jid][2]:
                raise ContractViolationError(
                    f"EDF missed the deadline of job {jid} in a critical interval"
                )
            del remaining[jid]
            active.pop(0)
        cur = stop
    return pieces


def _yds_recursive(jobs) -> tuple[list[ProfilePiece], list[Fraction]]:
    """jobs: list of (id, release, deadline, work) with exact Fractions."""
    if not jobs:
        return [], []
    starts = sorted({j[1] for j in jobs})
    ends = sorted({j[2] for j in jobs})
    best = None
    for t in starts:
        for t2 in ends:
            if t2 <= t:
                continue
            inside = [j for j in jobs if j[1] >= t and j[2] <= t2]
            if not inside:
                continue
            density = sum(j[3] for j in inside) / (t2 - t)
            key = (-density, t, t2 - t)
            if best is None or key < best[0]:
                best = (key, t, t2, inside, density)
    if best is None:
        raise ContractViolationError("no candidate critical interval")
    _, t, t2, critical, speed = best
    pieces = _edf_within(critical, t, t2, speed)

    critical_ids = {j[0] for j in critical}
    shift = t2 - t

    def contract(x: Fraction) -> Fraction:
        if x <= t:
            return x
        if x >= t2:
            return x - shift
        return t

    rest = [
        (j[0], contract(j[1]), contract(j[2]), j[3])
        for j in jobs
        if j[0] not in critical_ids
    ]
    sub_pieces, sub_speeds = _yds_recursive(rest)
    for p in sub_pieces:
        if p.end <= t:
            pieces.append(p)
        elif p.start >= t:
            pieces.append(ProfilePiece(p.start + shift, p.end + shift, p.job, p.speed))
        else:
            pieces.append(ProfilePiece(p.start, t, p.job, p.speed))
            pieces.append(ProfilePiece(t2, p.end + shift, p.job, p.speed))
    return pieces, [speed] + sub_speeds


def yds_preemptive(instance: Instance) -> tuple[SpeedProfile, float]:
    """Optimal preemptive single-processor profile and its energy.

    Repeatedly extracts the maximum-density interval (ties: earliest start,
    then shortest), schedules its jobs at the density speed by EDF, contracts
    the timeline and recurses.  The energy is a lower bound for every
    non-preemptive schedule of the same instance.
    """
    if not isinstance(instance, Instance) or instance.processors != 1:
        raise DomainError("yds_preemptive requires a homogeneous single-processor instance")
    jobs = [(j.id, j.release, j.deadline, j.work) for j in instance.jobs]
    pieces, speeds = _yds_recursive(jobs)
    pieces.sort(key=lambda p: (p.start, p.end, p.job))
    for a, b in zip(pieces, pieces[1:]):
        if a.end > b.start:
            raise ContractViolationError("YDS produced overlapping pieces")
    profile = SpeedProfile(tuple(pieces), tuple(speeds))
    energy = profile.energy(instance.alpha)
    return profile, energy


# ---------------------------------------------------------------------------
# Brute force over landmark-aligned schedules
# ---------------------------------------------------------------------------


def _single_machine_dp(tpoints, jobs, alpha: float, cap: int):
    """Minimum-energy disjoint grid intervals, one per job.

    tpoints: list of Fraction grid points.  jobs: list of (job_id, lo_idx,
    hi_idx, work_float).  Returns (energy, [(job_id, a_idx, b_idx), ...]).
    """
    G = len(tpoints)
    n = len(jobs)
    if n == 0:
        return 0.0, []
    if G * (1 << n) > cap:
        raise SizeError(
            f"single-machine search needs {G * (1 << n)} states, cap is {cap}"
        )
    t = np.array([float(x) for x in tpoints])
    full = (1 << n) - 1
    size = 1 << n
    f = np.full((G, size), np.inf)
    f[:, 0] = 0.0
    act = np.full((G, size), -1, dtype=np.int64)
    with_j = [np.nonzero(np.arange(size) & (1 << k))[0] for k in range(n)]
    buf = np.empty((G, size))
    for i in range(1, G):
        f[i] = f[i - 1]
        for k, (jid, lo, hi, w) in enumerate(jobs):
            if not (lo < i <= hi):
                continue
            lengths = t[i] - t[lo:i]
            ecol = w**alpha * lengths ** (1.0 - alpha)
            window = buf[: i - lo]
            np.add(f[lo:i], ecol[:, None], out=window)
            amin = np.argmin(window, axis=0)
            cmin = window[amin, np.arange(size)]
            wj = with_j[k]
            wo = wj ^ (1 << k)
            better = cmin[wo] < f[i, wj]
            if np.any(better):
                rows = wj[better]
                f[i, rows] = cmin[wo][better]
                act[i, rows] = k * G + (lo + amin[wo][better])
    if not np.isfinite(f[G - 1, full]):
        raise InfeasibleError(
            "no feasible landmark-aligned schedule on this grid (grid too coarse?)"
        )
    # backtrack
    intervals = []
    i, S = G - 1, full
    while S:
        a = act[i, S]
        if a < 0:
            i -= 1
            continue
        k, start_idx = divmod(int(a), G)
        intervals.append((jobs[k][0], start_idx, i))
        S ^= 1 << k
        i = start_idx
    energy = 0.0
    for jid, a_idx, b_idx in intervals:
        w = next(j[3] for j in jobs if j[0] == jid)
        energy += w**alpha * float(t[b_idx] - t[a_idx]) ** (1.0 - alpha)
    return energy, sorted(intervals, key=lambda x: x[1])


def _grid_jobs_for(instance: Instance, grid: LandmarkGrid, job_ids=None):
    out = []
    for j in instance.jobs:
        if job_ids is not None and j.id not in job_ids:
            continue
        lo, hi = grid.span_indices(j.release, j.deadline)
        out.append((j.id, lo, hi, float(j.work)))
    return out


def _submasks(S: int):
    T = S
    while True:
        yield T
        if T == 0:
            return
        T = (T - 1) & S


def brute_force_nonpreemptive(
    instance, grid: LandmarkGrid | None = None, cap: int = DEFAULT_CAP
) -> tuple[Schedule, float]:
    """Exhaustive minimum-energy non-preemptive schedule with grid-aligned endpoints.

    Single machine: subset dynamic program over grid points.  Several machines:
    partition dynamic program with a per-subset single-machine cache.  For
    heterogeneous instances where a machine sees one common life interval, the
    per-machine optimum is the closed form load**alpha / span**(alpha-1)
    (constant speed, jobs back to back), and no grid is needed on that machine.
    """
    if isinstance(instance, Instance):
        if grid is None:
            raise DomainError("a landmark grid is required for homogeneous instances")
        return _brute_homogeneous(instance, grid, cap)
    if isinstance(instance, HeterogeneousInstance):
        return _brute_heterogeneous(instance, grid, cap)
    raise DomainError(f"cannot brute-force a {type(instance).__name__}")


def _brute_homogeneous(instance: Instance, grid: LandmarkGrid, cap: int):
    n = instance.n
    m = instance.processors
    if grid.size * (1 << n) * m > cap:
        raise SizeError(
            f"search needs {grid.size * (1 << n) * m} states, cap is {cap}"
        )
    alpha = instance.alpha
    ids = [j.id for j in instance.jobs]

    cache: dict[int, tuple[float, list]] = {0: (0.0, [])}

    def solve_subset(T: int):
        if T not in cache:
            subset_ids = {ids[k] for k in range(n) if T >> k & 1}
            jobs = _grid_jobs_for(instance, grid, subset_ids)
            try:
                cache[T] = _single_machine_dp(grid.points, jobs, alpha, cap)
            except InfeasibleError:
                cache[T] = (math.inf, [])
        return cache[T]

    full = (1 << n) - 1
    if m == 1:
        energy, intervals = solve_subset(full)
        if not math.isfinite(energy):
            raise InfeasibleError("no feasible landmark-aligned schedule on this grid")
        return _schedule_from_parts(instance, grid, {1: intervals}), energy

    INF = math.inf
    f = {0: 0.0}
    parent: dict[tuple[int, int], int] = {}
    for machine in range(1, m + 1):
        g = {}
        for S in range(full + 1):
            best, best_T = INF, None
            for T in _submasks(S):
                if T and (T & -T) != (S & -S):
                    continue  # the lowest remaining job pins the machine: kills symmetry
                prev = f.get(S ^ T)
                if prev is None or not math.isfinite(prev):
                    continue
                cost = 0.0 if T == 0 else solve_subset(T)[0]
                val = prev + cost
                if val < best:
                    best, best_T = val, T
            if math.isfinite(best):
                g[S] = best
                parent[(machine, S)] = best_T
        f = g
    if full not in f or not math.isfinite(f[full]):
        raise InfeasibleError("no feasible landmark-aligned schedule on this grid")
    parts = {}
    S = full
    for machine in range(m, 0, -1):
        T = parent[(machine, S)]
        parts[machine] = solve_subset(T)[1] if T else []
        S ^= T
    return _schedule_from_parts(instance, grid, parts), f[full]


def _schedule_from_parts(instance, grid: LandmarkGrid, parts: dict[int, list]) -> Schedule:
    assignments = []
    for machine in sorted(parts):
        for jid, a_idx, b_idx in parts[machine]:
            assignments.append(
                Assignment(jid, f"p{machine}", grid.points[a_idx], grid.points[b_idx])
            )
    assignments.sort(key=lambda a: a.job)
    return Schedule(tuple(assignments))


def _brute_heterogeneous(instance: HeterogeneousInstance, grid, cap: int):
    n = instance.n
    m = len(instance.processors)
    if m * (3**n) > cap:
        raise SizeError(f"search needs about {m * 3 ** n} states, cap is {cap}")
    jobs = list(instance.jobs)

    cost_cache: dict[tuple[int, int], float] = {}
    plan_cache: dict[tuple[int, int], list] = {}

    def machine_cost(pi: int, T: int) -> float:
        key = (pi, T)
        if key in cost_cache:
            return cost_cache[key]
        pid = instance.processors[pi].id
        alpha = instance.processors[pi].alpha
        members = [jobs[k] for k in range(n) if T >> k & 1]
        lives = {j.life_on(pid) for j in members}
        if None in lives:
            cost_cache[key] = math.inf
            plan_cache[key] = []
            return math.inf
        if len(lives) == 1 and members:
            r0, d0 = next(iter(lives))
            load = sum(j.work_on(pid) for j in members)
            span = d0 - r0
            cost = float(load) ** alpha / float(span) ** (alpha - 1.0)
            cur = r0
            plan = []
            for j in sorted(members, key=lambda x: x.id):
                length = span * j.work_on(pid) / load
                plan.append((j.id, cur, cur + length))
                cur += length
            cost_cache[key] = cost
            plan_cache[key] = plan
            return cost
        if not members:
            cost_cache[key] = 0.0
            plan_cache[key] = []
            return 0.0
        if grid is None:
            raise DomainError(
                "a landmark grid is required for heterogeneous machines with mixed life intervals"
            )
        gjobs = []
        for j in members:
            r, d = j.life_on(pid)
            lo, hi = grid.span_indices(r, d)
            gjobs.append((j.id, lo, hi, float(j.work_on(pid))))
        try:
            energy, intervals = _single_machine_dp(grid.points, gjobs, alpha, cap)
            cost_cache[key] = energy
            plan_cache[key] = [
                (jid, grid.points[a], grid.points[b]) for jid, a, b in intervals
            ]
        except InfeasibleError:
            cost_cache[key] = math.inf
            plan_cache[key] = []
        return cost_cache[key]

    full = (1 << n) - 1
    INF = math.inf
    f = [dict() for _ in range(m + 1)]
    f[m][0] = 0.0
    choice: dict[tuple[int, int], int] = {}
    for pi in range(m - 1, -1, -1):
        for S in range(full + 1):
            best, best_T = INF, None
            for T in _submasks(S):
                rest = f[pi + 1].get(S ^ T)
                if rest is None:
                    continue
                c = machine_cost(pi, T)
                if not math.isfinite(c):
                    continue
                if c + rest < best:
                    best, best_T = c + rest, T
            if math.isfinite(best):
                f[pi][S] = best
                choice[(pi, S)] = best_T
    if full not in f[0]:
        raise InfeasibleError("no feasible assignment of jobs to machines")
    assignments = []
    S = full
    for pi in range(m):
        T = choice[(pi, S)]
        machine_cost(pi, T)
        for jid, s, e in plan_cache[(pi, T)]:
            assignments.append(Assignment(jid, instance.processors[pi].id, s, e))
        S ^= T
    assignments.sort(key=lambda a: a.job)
    return Schedule(tuple(assignments)), f[0][full]


# ---------------------------------------------------------------------------
# Generalized Bell number
# ---------------------------------------------------------------------------


def generalized_bell(alpha: float, tolerance: float = 1e-12) -> float:
    """Sum over k >= 0 of k**(alpha-1) * e**(-1) / k!, truncated below tolerance.

    For integer alpha this is the Poisson(1) moment of order alpha-1:
    1, 2, 5 for alpha = 2, 3, 4.
    """
    if alpha <= 1:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    if tolerance <= 0:
        raise DomainError("tolerance must be positive")
    inv_e = math.exp(-1.0)
    total = 0.0
    k = 1
    fact = 1.0
    while True:
        fact *= k
        term = k ** (alpha - 1.0) / fact * inv_e
        total += term
        # once the term ratio drops below 1/2 the tail is under 2 * next term
        if k > 2**alpha and 2.0 * term * (2.0 ** (alpha - 1.0) / (k + 1)) < tolerance:
            break
        k += 1
        if k > 10_000:
            raise ContractViolationError("generalized Bell series failed to converge")
    return total
