"""Hardness reduction toolkit: bounded 3-dimensional matching to minimum-energy
scheduling with processor-dependent works, and back.

The forward map builds, from a 3DM instance with parts of size q, a scheduling
instance with 3q machines (one per triple plus dummies) and 5q jobs (one per
element plus 2q dummies), all with life interval [0, 3]: element jobs weigh 1
on machines of triples containing them and 4 elsewhere, dummy jobs weigh 3
everywhere.  The backward map first repairs a schedule so every element job
sits on a machine of one of its triples, never increasing energy, then reads
off the triples whose machines carry exactly their own three element jobs.

Since all lives are [0, 3], a schedule's quality is determined by the load
vector: a machine with load L runs its jobs back to back at speed L/3 for
energy L**alpha / 3**(alpha-1), and the canonical form of any assignment is
that constant-speed layout.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractViolationError, DomainError, ParseError
from .instances import (
    Assignment,
    HetJob,
    HetProcessor,
    HeterogeneousInstance,
    Schedule,
    energy_of_schedule,
    validate_schedule,
)

Triple = tuple[str, str, str]


@dataclass(frozen=True)
class ThreeDMInstance:
    """Element sets A, B, C of size q and a triple family with every element
    occurring in at least one and at most three triples."""

    q: int
    triples: tuple[Triple, ...]

    def __post_init__(self):
        if self.q < 1:
            raise DomainError("q must be at least 1")
        if len(set(self.triples)) != len(self.triples):
            raise DomainError("triples must be distinct")
        counts: dict[str, int] = {}
        for t in self.triples:
            if len(t) != 3:
                raise DomainError(f"not a triple: {t!r}")
            for e in t:
                counts[e] = counts.get(e, 0) + 1
        for part in range(3):
            part_elems = {t[part] for t in self.triples}
            if len(part_elems) != self.q:
                raise DomainError(
                    f"part {part}: {len(part_elems)} elements, expected q={self.q}"
                )
        for e, c in counts.items():
            if not (1 <= c <= 3):
                raise DomainError(f"element {e} occurs {c} times; bound is 1..3")

    @property
    def elements(self) -> tuple[str, ...]:
        out = []
        for part in range(3):
            out.extend(sorted({t[part] for t in self.triples}))
        return tuple(out)

    def is_matching(self, triples) -> bool:
        used: set[str] = set()
        for t in triples:
            if t not in self.triples:
                return False
            if used & set(t):
                return False
            used |= set(t)
        return True


def parse_3dm(source) -> ThreeDMInstance:
    """{"q": 2, "triples": [["a1","b1","c1"], ...]}"""
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError("<document>", f"invalid JSON: {exc}") from None
    else:
        doc = source
    if not isinstance(doc, dict) or "q" not in doc or "triples" not in doc:
        raise ParseError("<document>", "expected an object with 'q' and 'triples'")
    q = doc["q"]
    if isinstance(q, bool) or not isinstance(q, int):
        raise ParseError("q", "q must be an integer")
    triples = []
    for i, t in enumerate(doc["triples"]):
        if not isinstance(t, (list, tuple)) or len(t) != 3:
            raise ParseError(f"triples[{i}]", "expected a list of three element names")
        if not all(isinstance(e, str) and e for e in t):
            raise ParseError(f"triples[{i}]", "element names must be non-empty strings")
        triples.append(tuple(t))
    try:
        return ThreeDMInstance(q, tuple(triples))
    except DomainError as exc:
        raise ParseError("triples", str(exc)) from None


def serialize_3dm(tdm: ThreeDMInstance) -> dict:
    return {"q": tdm.q, "triples": [list(t) for t in tdm.triples]}


def planted_instance(q: int, seed: int = 0, extra_triples: int | None = None) -> ThreeDMInstance:
    """A 3DM instance with a planted perfect matching plus random distractors.

    The planted matching (a_i, b_i, c_i) guarantees the optimum is exactly q;
    distractors respect the occurrence bound of three per element.
    """
    if q < 1:
        raise DomainError("q must be at least 1")
    rng = random.Random(seed)
    a = [f"a{i}" for i in range(1, q + 1)]
    b = [f"b{i}" for i in range(1, q + 1)]
    c = [f"c{i}" for i in range(1, q + 1)]
    triples = [(a[i], b[i], c[i]) for i in range(q)]
    counts = {e: 1 for row in (a, b, c) for e in row}
    if extra_triples is None:
        extra_triples = q
    attempts = 0
    while extra_triples > 0 and attempts < 200:
        attempts += 1
        t = (rng.choice(a), rng.choice(b), rng.choice(c))
        if t in triples:
            continue
        if any(counts[e] >= 3 for e in t):
            continue
        triples.append(t)
        for e in t:
            counts[e] += 1
        extra_triples -= 1
    return ThreeDMInstance(q, tuple(triples))


def max_matching_size(tdm: ThreeDMInstance) -> int:
    """Exact maximum 3-dimensional matching by depth-first search (desk scale)."""
    best = 0
    triples = tdm.triples

    def walk(idx: int, used: frozenset, size: int):
        nonlocal best
        best = max(best, size)
        if size + (len(triples) - idx) <= best:
            return
        for i in range(idx, len(triples)):
            t = triples[i]
            if not (used & set(t)):
                walk(i + 1, used | set(t), size + 1)

    walk(0, frozenset(), 0)
    return best


@dataclass(frozen=True)
class ReductionArtifacts:
    instance: HeterogeneousInstance
    q: int
    element_job: dict[str, int]  # element name -> job id
    triple_machine: dict[Triple, str]  # triple -> machine id
    dummy_machines: tuple[str, ...]
    dummy_jobs: tuple[int, ...]

    def machine_triple(self, pid: str) -> Triple | None:
        for t, p in self.triple_machine.items():
            if p == pid:
                return t
        return None


def reduce_f(tdm: ThreeDMInstance, alpha: float = 2.0) -> ReductionArtifacts:
    """Forward reduction: 3q machines, 5q jobs, all lives [0, 3].

    Element jobs weigh 1 on machines of triples containing them, 4 everywhere
    else; the 2q dummy jobs weigh 3 on every machine.
    """
    q = tdm.q
    triple_machine = {t: f"t{i + 1}" for i, t in enumerate(tdm.triples)}
    n_dummy_machines = 3 * q - len(tdm.triples)
    if n_dummy_machines < 0:
        raise DomainError("more triples than 3q; occurrence bound violated")
    dummy_machines = tuple(f"d{i + 1}" for i in range(n_dummy_machines))
    machine_ids = list(triple_machine.values()) + list(dummy_machines)
    processors = tuple(HetProcessor(pid, alpha) for pid in machine_ids)

    element_job = {e: i + 1 for i, e in enumerate(tdm.elements)}
    jobs = []
    for e, jid in element_job.items():
        works = {}
        for t, pid in triple_machine.items():
            works[pid] = Fraction(1) if e in t else Fraction(4)
        for pid in dummy_machines:
            works[pid] = Fraction(4)
        jobs.append(HetJob(jid, Fraction(0), Fraction(3), works))
    dummy_jobs = tuple(range(3 * q + 1, 5 * q + 1))
    for jid in dummy_jobs:
        jobs.append(
            HetJob(jid, Fraction(0), Fraction(3), {pid: Fraction(3) for pid in machine_ids})
        )
    instance = HeterogeneousInstance(alpha, processors, tuple(jobs))
    return ReductionArtifacts(
        instance, q, element_job, triple_machine, dummy_machines, dummy_jobs
    )


def load_energy(loads: dict[str, Fraction], alpha: float) -> float:
    """Energy of the canonical constant-speed layout with the given loads."""
    return sum(float(L) ** alpha / 3.0 ** (alpha - 1.0) for L in loads.values() if L > 0)


def canonical_schedule(assignment: dict[int, str], artifacts: ReductionArtifacts) -> Schedule:
    """Constant-speed back-to-back layout of a job -> machine assignment."""
    instance = artifacts.instance
    per_machine: dict[str, list[int]] = {}
    for jid, pid in sorted(assignment.items()):
        per_machine.setdefault(pid, []).append(jid)
    out = []
    for pid in sorted(per_machine):
        jobs = [instance.job_by_id(j) for j in sorted(per_machine[pid])]
        load = sum(j.work_on(pid) for j in jobs)
        cursor = Fraction(0)
        for j in jobs:
            length = 3 * j.work_on(pid) / load
            out.append(Assignment(j.id, pid, cursor, cursor + length))
            cursor += length
    out.sort(key=lambda a: a.job)
    return Schedule(tuple(out))


def _assignment_of(schedule: Schedule, artifacts: ReductionArtifacts) -> dict[int, str]:
    violations = validate_schedule(schedule, artifacts.instance)
    if violations:
        raise DomainError("invalid schedule: " + "; ".join(violations))
    return {a.job: a.processor for a in schedule.assignments}


def _loads(assignment: dict[int, str], artifacts: ReductionArtifacts) -> dict[str, Fraction]:
    loads = {p.id: Fraction(0) for p in artifacts.instance.processors}
    for jid, pid in assignment.items():
        loads[pid] += artifacts.instance.job_by_id(jid).work_on(pid)
    return loads


def repair_schedule(schedule: Schedule, artifacts: ReductionArtifacts) -> Schedule:
    """Move every element job onto a machine of one of its triples.

    When the target machine carries a dummy job or a work-4 element job, the
    two are swapped; otherwise the element job simply moves.  Energy of the
    canonical layout never increases, checked after every step.
    """
    instance = artifacts.instance
    assignment = _assignment_of(schedule, artifacts)
    alpha = instance.alpha
    energy = load_energy(_loads(assignment, artifacts), alpha)
    job_element = {jid: e for e, jid in artifacts.element_job.items()}
    dummy_set = set(artifacts.dummy_jobs)

    for e, jid in sorted(artifacts.element_job.items(), key=lambda kv: kv[1]):
        pid = assignment[jid]
        if instance.job_by_id(jid).work_on(pid) == 1:
            continue  # already on a machine of one of its triples
        target = min(p for t, p in artifacts.triple_machine.items() if e in t)
        swap_candidates = sorted(
            j
            for j, p in assignment.items()
            if p == target
            and (j in dummy_set or (j in job_element and instance.job_by_id(j).work_on(p) == 4))
        )
        if swap_candidates:
            other = swap_candidates[0]
            assignment[other] = pid
            assignment[jid] = target
        else:
            assignment[jid] = target
        new_energy = load_energy(_loads(assignment, artifacts), alpha)
        if new_energy > energy * (1.0 + 1e-9):
            raise ContractViolationError(
                f"repair step for element {e} increased energy "
                f"{energy:.6f} -> {new_energy:.6f}"
            )
        energy = new_energy
    return canonical_schedule(assignment, artifacts)


def extract_matching_g(schedule: Schedule, artifacts: ReductionArtifacts) -> list[Triple]:
    """Triples whose machine runs exactly its own three element jobs, after repair."""
    repaired = repair_schedule(schedule, artifacts)
    assignment = {a.job: a.processor for a in repaired.assignments}
    job_element = {jid: e for e, jid in artifacts.element_job.items()}
    on_machine: dict[str, set[str]] = {}
    for jid, pid in assignment.items():
        if jid in job_element:
            on_machine.setdefault(pid, set()).add(job_element[jid])
    matching = []
    for t, pid in artifacts.triple_machine.items():
        if on_machine.get(pid, set()) == set(t):
            matching.append(t)
    matching.sort()
    return matching


def gap_constant(alpha: float) -> float:
    """beta with OPT(3DM) - |extracted matching| <= beta * (E - OPT(scheduling)).

    beta = 3**(alpha-1) / ((3/2) * ((2**alpha + 4**alpha)/2 - 3**alpha));
    the denominator is positive for alpha > 1 by strict convexity.
    """
    if alpha <= 1:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    denom = 1.5 * ((2.0**alpha + 4.0**alpha) / 2.0 - 3.0**alpha)
    return 3.0 ** (alpha - 1.0) / denom


def verify_gap_inequality(
    tdm: ThreeDMInstance,
    schedule: Schedule,
    artifacts: ReductionArtifacts,
    opt_matching: int,
    opt_energy: float,
    tol: float = 1e-9,
) -> dict:
    """Check both sides of the reduction's approximation-preserving argument.

    opt_matching and opt_energy come from exact oracles.  Returns the verdict
    and the quantities so callers can report them.
    """
    alpha = artifacts.instance.alpha
    matching = extract_matching_g(schedule, artifacts)
    if not tdm.is_matching(matching):
        raise ContractViolationError("extracted triples are not a matching")
    energy = energy_of_schedule(schedule, artifacts.instance)
    beta = gap_constant(alpha)
    lhs = opt_matching - len(matching)
    rhs = beta * (energy - opt_energy)
    gap_ok = lhs <= rhs + tol
    opt_bound_ok = opt_energy <= 9.0 * opt_matching + tol
    return {
        "holds": bool(gap_ok and opt_bound_ok),
        "matching_size": len(matching),
        "opt_matching": opt_matching,
        "schedule_energy": energy,
        "opt_energy": opt_energy,
        "beta": beta,
        "gap_lhs": lhs,
        "gap_rhs": rhs,
        "energy_bound_ok": bool(opt_bound_ok),
    }
