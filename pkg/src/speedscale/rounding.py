"""Rounding pipeline: fractional relaxation solution to an integral schedule.

Four stages, each with a proven energy factor:

  1. split_at_deadlines     - shift mass off intervals crossing a deadline of a
                              good independent set; factor <= 2**(alpha-1)
  2. compress_to_subzones   - halve every interval into a dyadic subzone of its
                              zone, contained in the job's life; factor
                              exactly 2**(alpha-1)
  3. saturating matching    - integral choice of one (subzone, length) per job
                              via min-cost bipartite matching; weight <= E(z)
  4. matching_to_schedule   - place each job for a third of its edge length,
                              packed outward from zone boundaries, innermost
                              subzone first; factor exactly 3**(alpha-1)

Composed: E(schedule) <= 12**(alpha-1) * E(x) for any feasible input x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractViolationError, DomainError
from .instances import Assignment, Instance, Job, Schedule, validate_schedule
from .matching import min_cost_saturating_matching
from .relaxation import FractionalSolution, Interval

#: numeric slack for stage-invariant checks on float energies
STAGE_RTOL = 1e-9
#: pointwise-load slack accepted on pipeline inputs
LOAD_TOL = 1e-5


def _closed_overlap(a: Job, b: Job) -> bool:
    return max(a.release, b.release) <= min(a.deadline, b.deadline)


@dataclass(frozen=True)
class GoodIndependentSet:
    """Jobs with pairwise disjoint lives, deadlines strictly increasing, such
    that no other job's life lies strictly between two consecutive deadlines."""

    members: tuple[Job, ...]
    jobs: tuple[Job, ...]  # the pool the set was drawn from

    @property
    def deadlines(self) -> tuple[Fraction, ...]:
        return tuple(j.deadline for j in self.members)

    def span(self) -> tuple[Fraction, Fraction]:
        return (
            min(j.release for j in self.jobs),
            max(j.deadline for j in self.jobs),
        )

    def zones(self) -> list[tuple[Fraction, Fraction]]:
        """Consecutive-deadline zones, sentinels clipped to the instance span."""
        lo, hi = self.span()
        cuts = [lo] + [d for d in self.deadlines if lo < d < hi] + [hi]
        return [(a, b) for a, b in zip(cuts, cuts[1:]) if a < b]


def good_independent_set(jobs) -> GoodIndependentSet:
    """Earliest-deadline greedy maximal independent set; always good."""
    pool = tuple(jobs)
    if not pool:
        raise DomainError("cannot build an independent set from no jobs")
    chosen: list[Job] = []
    for job in sorted(pool, key=lambda j: (j.deadline, j.id)):
        if all(not _closed_overlap(job, c) for c in chosen):
            chosen.append(job)
    return GoodIndependentSet(tuple(chosen), pool)


def is_good(members, jobs) -> bool:
    """Whether an independent set is good for the pool; raises if not independent."""
    members = sorted(members, key=lambda j: j.deadline)
    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            if _closed_overlap(a, b):
                raise DomainError(f"jobs {a.id} and {b.id} are not independent")
    deadlines = [j.deadline for j in members]
    bounds = [None] + deadlines + [None]  # None = -inf / +inf sentinel
    for job in jobs:
        for lo, hi in zip(bounds, bounds[1:]):
            if (lo is None or job.release > lo) and (hi is None or job.deadline < hi):
                return False
    return True


@dataclass(frozen=True)
class Subzone:
    """Dyadic prefix or suffix of a zone: the first or last 1/2**depth of it."""

    zone: tuple[Fraction, Fraction]
    side: str  # "start" | "end"
    depth: int

    def __post_init__(self):
        if self.side not in ("start", "end"):
            raise DomainError(f"unknown subzone side {self.side!r}")
        if self.depth < 1:
            raise DomainError("subzone depth starts at 1")

    @property
    def interval(self) -> Interval:
        lo, hi = self.zone
        width = (hi - lo) / 2**self.depth
        if self.side == "start":
            return (lo, lo + width)
        return (hi - width, hi)

    @property
    def length(self) -> Fraction:
        lo, hi = self.zone
        return (hi - lo) / 2**self.depth


def split_at_deadlines(x: FractionalSolution, gis: GoodIndependentSet) -> FractionalSolution:
    """Shift mass to the larger side of any crossed deadline (ties go left).

    Input intervals may cross at most one deadline each; two crossings mean the
    landmark-load constraint was violated upstream.
    """
    deadlines = gis.deadlines
    merged: dict[tuple[int, Interval], Fraction] = {}
    for jid, (s, e), m in x.entries:
        crossing = [d for d in deadlines if s < d < e]
        if len(crossing) >= 2:
            raise ContractViolationError(
                f"job {jid}: interval [{s}, {e}] crosses deadlines {crossing}; "
                "the input violates the relaxation's constraints"
            )
        if crossing:
            d = crossing[0]
            iv = (s, d) if d - s >= e - d else (d, e)
        else:
            iv = (s, e)
        key = (jid, iv)
        merged[key] = merged.get(key, Fraction(0)) + m
    entries = tuple((jid, iv, m) for (jid, iv), m in sorted(merged.items()))
    y = FractionalSolution(entries, x.alpha, x.works, x.grid)
    _assert_factor(x.energy(), y.energy(), 2.0 ** (x.alpha - 1.0), "deadline split")
    return y


@dataclass(frozen=True)
class SubzoneAssignment:
    """Compressed fractional solution plus each entry's subzone."""

    solution: FractionalSolution
    subzones: tuple[Subzone, ...]  # parallel to solution.entries
    gis: GoodIndependentSet

    def items_by_subzone(self) -> dict[Subzone, list[tuple[int, Fraction, Fraction]]]:
        """Per subzone: (job id, interval length, mass), lengths aggregated."""
        out: dict[Subzone, dict[tuple[int, Fraction], Fraction]] = {}
        for (jid, (s, e), m), z in zip(self.solution.entries, self.subzones):
            bucket = out.setdefault(z, {})
            key = (jid, e - s)
            bucket[key] = bucket.get(key, Fraction(0)) + m
        return {
            z: [(jid, length, mass) for (jid, length), mass in sorted(items.items())]
            for z, items in out.items()
        }


def _zone_of(zones, s: Fraction, e: Fraction):
    for lo, hi in zones:
        if lo <= s and e <= hi:
            return (lo, hi)
    return None


def _depth_for(gap: Fraction, rel: Fraction) -> int:
    """Smallest k >= 1 with rel <= gap / 2**k (rel is the offset from the anchor)."""
    k = 1
    while gap / 2 ** (k + 1) >= rel:
        k += 1
    return k


def compress_to_subzones(y: FractionalSolution, gis: GoodIndependentSet) -> SubzoneAssignment:
    """Halve every interval toward its zone's anchor deadline.

    Jobs whose life starts at or before the zone are compressed toward the zone
    start; jobs whose life ends at or after the zone end toward the zone end
    (jobs qualifying for both go to the start side).  Every output interval
    lands inside a subzone contained in the job's life.
    """
    zones = gis.zones()
    lives = {j.id: (j.release, j.deadline) for j in gis.jobs}
    merged: dict[tuple[int, Interval], Fraction] = {}
    zone_of_entry: dict[tuple[int, Interval], Subzone] = {}
    for jid, (s, e), m in y.entries:
        zone = _zone_of(zones, s, e)
        if zone is None:
            raise ContractViolationError(
                f"job {jid}: interval [{s}, {e}] still crosses a zone boundary"
            )
        z_lo, z_hi = zone
        gap = z_hi - z_lo
        r_j, d_j = lives[jid]
        if r_j <= z_lo:
            s2, e2 = (s + z_lo) / 2, (e + z_lo) / 2
            depth = _depth_for(gap, e2 - z_lo)
            sub = Subzone(zone, "start", depth)
        elif d_j >= z_hi:
            s2, e2 = (s + z_hi) / 2, (e + z_hi) / 2
            depth = _depth_for(gap, z_hi - s2)
            sub = Subzone(zone, "end", depth)
        else:
            raise ContractViolationError(
                f"job {jid}: life [{r_j}, {d_j}] lies strictly inside zone "
                f"[{z_lo}, {z_hi}]; the independent set is not good"
            )
        lo2, hi2 = sub.interval
        if not (lo2 <= s2 and e2 <= hi2):
            raise ContractViolationError(
                f"job {jid}: compressed interval [{s2}, {e2}] escapes its subzone"
            )
        if not (r_j <= lo2 and hi2 <= d_j):
            raise ContractViolationError(
                f"job {jid}: subzone {sub.interval} is not inside the life interval"
            )
        key = (jid, (s2, e2))
        merged[key] = merged.get(key, Fraction(0)) + m
        zone_of_entry[key] = sub
    entries = tuple((jid, iv, m) for (jid, iv), m in sorted(merged.items()))
    z = FractionalSolution(entries, y.alpha, y.works, None)
    _assert_factor(y.energy(), z.energy(), 2.0 ** (y.alpha - 1.0), "subzone compression")
    subzones = tuple(zone_of_entry[(jid, iv)] for jid, iv, _ in entries)
    return SubzoneAssignment(z, subzones, gis)


@dataclass(frozen=True)
class GraphEdge:
    left: int  # index into AssignmentGraph.jobs
    right: int  # index into AssignmentGraph.rights
    weight: float
    length: Fraction
    induced_mass: Fraction  # fractional matching induced by the compressed solution


@dataclass(frozen=True)
class AssignmentGraph:
    """Bipartite job / subzone-copy graph in the spirit of parallel-machine
    rounding: each subzone gets ceil(total mass) unit-capacity copies, items
    sorted by decreasing length span consecutive copies."""

    jobs: tuple[int, ...]  # left vertex -> job id
    rights: tuple[tuple[Subzone, int], ...]  # right vertex -> (subzone, copy)
    edges: tuple[GraphEdge, ...]
    mass_length: dict[Subzone, Fraction]  # v(Z): sum of mass * length per subzone

    def edges_at_right(self, r: int) -> list[GraphEdge]:
        return [e for e in self.edges if e.right == r]


def build_assignment_graph(assignment: SubzoneAssignment) -> AssignmentGraph:
    """Sort each subzone's fractional items by decreasing length and spread
    them over unit-capacity copies; an item spanning several copies yields one
    edge per touched copy, all carrying the item's weight and length."""
    sol = assignment.solution
    alpha = sol.alpha
    job_ids = sol.job_ids()
    left_index = {jid: i for i, jid in enumerate(job_ids)}
    rights: list[tuple[Subzone, int]] = []
    edges: list[GraphEdge] = []
    mass_length: dict[Subzone, Fraction] = {}
    for sub, items in sorted(
        assignment.items_by_subzone().items(),
        key=lambda kv: (kv[0].zone, kv[0].side, kv[0].depth),
    ):
        items = sorted(items, key=lambda it: (-it[1], it[0]))  # by length desc, then id
        total = sum(m for _, _, m in items)
        copies = math.ceil(total)
        if copies == 0:
            continue
        base = len(rights)
        rights.extend((sub, i + 1) for i in range(copies))
        mass_length[sub] = sum((length * m for _, length, m in items), Fraction(0))
        prefix = Fraction(0)
        for jid, length, mass in items:
            lo, hi = prefix, prefix + mass
            prefix = hi
            weight = float(sol.works[jid]) ** alpha * float(length) ** (1.0 - alpha)
            i = math.floor(lo) + 1
            while i - 1 < hi:
                share = min(Fraction(i), hi) - max(Fraction(i - 1), lo)
                if share > 0:
                    edges.append(
                        GraphEdge(left_index[jid], base + i - 1, weight, length, share)
                    )
                i += 1
    graph = AssignmentGraph(tuple(job_ids), tuple(rights), tuple(edges), mass_length)
    _check_induced_matching(graph)
    return graph


def _check_induced_matching(graph: AssignmentGraph) -> None:
    """The fractional matching induced by the compressed solution must be
    feasible: unit mass per job, at most unit mass per copy."""
    per_left = [Fraction(0)] * len(graph.jobs)
    per_right = [Fraction(0)] * len(graph.rights)
    for e in graph.edges:
        per_left[e.left] += e.induced_mass
        per_right[e.right] += e.induced_mass
    for i, m in enumerate(per_left):
        if m != 1:
            raise ContractViolationError(
                f"job {graph.jobs[i]}: induced fractional matching mass {m} != 1"
            )
    for r, m in enumerate(per_right):
        if m > 1:
            raise ContractViolationError(
                f"copy {graph.rights[r]}: induced fractional load {m} exceeds 1"
            )


@dataclass(frozen=True)
class Matching:
    edges: tuple[GraphEdge, ...]
    weight: float


def min_weight_saturating_matching(graph: AssignmentGraph) -> Matching:
    """Minimum-weight matching covering every job; never heavier than the
    induced fractional matching."""
    chosen_idx, weight = min_cost_saturating_matching(
        len(graph.jobs),
        len(graph.rights),
        [(e.left, e.right, e.weight) for e in graph.edges],
    )
    chosen = tuple(graph.edges[i] for i in chosen_idx)
    fractional = sum(float(e.induced_mass) * e.weight for e in graph.edges)
    if weight > fractional * (1.0 + STAGE_RTOL) + 1e-12:
        raise ContractViolationError(
            f"integral matching weight {weight} exceeds the fractional weight {fractional}"
        )
    return Matching(chosen, weight)


def matching_to_schedule(
    matching: Matching, graph: AssignmentGraph, gis: GoodIndependentSet
) -> Schedule:
    """Give each matched job an interval of a third of its edge length inside
    its subzone, packing start-side subzones leftward from the zone start and
    end-side subzones rightward from the zone end, innermost subzone first."""
    by_subzone: dict[Subzone, list[GraphEdge]] = {}
    for e in matching.edges:
        by_subzone.setdefault(graph.rights[e.right][0], []).append(e)

    lives = {j.id: (j.release, j.deadline) for j in gis.jobs}
    deadline_of = {j.id: j.deadline for j in gis.jobs}
    release_of = {j.id: j.release for j in gis.jobs}
    assignments: list[Assignment] = []
    sides = sorted(
        {(z.zone, z.side) for z in by_subzone},
        key=lambda zs: (zs[0], zs[1]),
    )
    for zone, side in sides:
        subs = sorted(
            (z for z in by_subzone if z.zone == zone and z.side == side),
            key=lambda z: -z.depth,
        )
        cursor = zone[0] if side == "start" else zone[1]
        for sub in subs:
            group = by_subzone[sub]
            if side == "start":
                group.sort(key=lambda e: (deadline_of[graph.jobs[e.left]], graph.jobs[e.left]))
            else:
                group.sort(key=lambda e: (-release_of[graph.jobs[e.left]], graph.jobs[e.left]))
            for e in group:
                jid = graph.jobs[e.left]
                piece = e.length / 3
                if side == "start":
                    start, end = cursor, cursor + piece
                    cursor = end
                else:
                    start, end = cursor - piece, cursor
                    cursor = start
                assignments.append(Assignment(jid, "p1", start, end))
            placed_ok = (
                cursor <= sub.interval[1] if side == "start" else cursor >= sub.interval[0]
            )
            if not placed_ok:
                total = sum(e.length for e in group)
                raise ContractViolationError(
                    f"packing overflow in subzone {sub.interval}: placed lengths "
                    f"l(Z)={total}, |Z|={sub.length}, v(Z)={graph.mass_length.get(sub)}"
                )
    for a in assignments:
        r, d = lives[a.job]
        if not (r <= a.start and a.end <= d):
            raise ContractViolationError(
                f"job {a.job}: placed interval [{a.start}, {a.end}] leaves its life"
            )
    assignments.sort(key=lambda a: a.job)
    return Schedule(tuple(assignments))


@dataclass(frozen=True)
class PipelineResult:
    schedule: Schedule
    energy_input: float
    energy_split: float
    energy_compressed: float
    matching_weight: float
    energy_final: float

    @property
    def ratio(self) -> float:
        return self.energy_final / self.energy_input

    def stage_factors(self) -> dict[str, float]:
        return {
            "split": self.energy_split / self.energy_input,
            "compress": self.energy_compressed / self.energy_split,
            "matching": self.matching_weight / self.energy_compressed,
            "schedule": self.energy_final / self.matching_weight,
        }


def round_to_schedule(x: FractionalSolution, instance: Instance) -> PipelineResult:
    """Full pipeline; the result's energy is at most 12**(alpha-1) * E(x)."""
    if instance.processors != 1:
        raise DomainError("the rounding pipeline runs on single-processor instances")
    load = x.max_pointwise_load()
    if load > 1.0 + LOAD_TOL:
        raise DomainError(
            f"input is not feasible for the relaxation: pointwise load {load}"
        )
    for job in instance.jobs:
        if float(x.job_mass(job.id)) < 1.0 - LOAD_TOL:
            raise DomainError(f"job {job.id} carries less than unit mass")
    alpha = instance.alpha
    gis = good_independent_set(instance.jobs)
    e_x = x.energy()
    y = split_at_deadlines(x, gis)
    z = compress_to_subzones(y, gis)
    graph = build_assignment_graph(z)
    matching = min_weight_saturating_matching(graph)
    schedule = matching_to_schedule(matching, graph, gis)
    violations = validate_schedule(schedule, instance)
    if violations:
        raise ContractViolationError("rounded schedule invalid: " + "; ".join(violations))
    e_final = sum(
        float(x.works[a.job]) ** alpha * float(a.end - a.start) ** (1.0 - alpha)
        for a in schedule.assignments
    )
    result = PipelineResult(schedule, e_x, y.energy(), z.solution.energy(), matching.weight, e_final)
    bound = 12.0 ** (alpha - 1.0)
    if result.ratio > bound * (1.0 + STAGE_RTOL):
        raise ContractViolationError(
            f"pipeline ratio {result.ratio} exceeds {bound}"
        )
    return result


def _assert_factor(before: float, after: float, factor: float, stage: str) -> None:
    if after > before * factor * (1.0 + STAGE_RTOL) + 1e-12:
        raise ContractViolationError(
            f"{stage} increased energy by {after / before:.6f}, allowed {factor:.6f}"
        )
