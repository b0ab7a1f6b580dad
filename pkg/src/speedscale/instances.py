"""Core data model: jobs, instances, schedules, and energy accounting.

Conventions used everywhere:
  - life and execution intervals are closed; "disjoint" means interiors
    disjoint, so touching endpoints are allowed;
  - times and works are exact rationals, energies are floats with a relative
    tolerance of 1e-9;
  - all types are immutable after construction and operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from .errors import DomainError
from .rationals import to_fraction

#: relative tolerance for float energy comparisons
ENERGY_RTOL = 1e-9


def energy_of_job(work, length, alpha: float) -> float:
    """Energy of running ``work`` at constant speed in an interval of ``length``.

    Equals length * (work/length)**alpha = work**alpha / length**(alpha-1).
    """
    work = Fraction(work)
    length = Fraction(length)
    if work <= 0:
        raise DomainError(f"work must be positive, got {work}")
    if length <= 0:
        raise DomainError(f"interval length must be positive, got {length}")
    if alpha <= 1:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    return float(work) ** alpha / float(length) ** (alpha - 1.0)


def rescale_energy(energy_old: float, len_old, len_new, alpha: float) -> float:
    """Energy after moving a job from an interval of ``len_old`` to ``len_new``."""
    len_old = Fraction(len_old)
    len_new = Fraction(len_new)
    if len_old <= 0 or len_new <= 0:
        raise DomainError("interval lengths must be positive")
    return energy_old * float(Fraction(len_old, len_new)) ** (alpha - 1.0)


def interiors_overlap(a1, b1, a2, b2) -> bool:
    """Whether [a1,b1] and [a2,b2] share an interior point."""
    return max(a1, a2) < min(b1, b2)


@dataclass(frozen=True)
class Job:
    """A job with life interval [release, deadline] and positive work volume."""

    id: int
    release: Fraction
    deadline: Fraction
    work: Fraction

    def __post_init__(self):
        if self.release >= self.deadline:
            raise DomainError(
                f"job {self.id}: release {self.release} must precede deadline {self.deadline}"
            )
        if self.work <= 0:
            raise DomainError(f"job {self.id}: work must be positive, got {self.work}")

    @property
    def life(self) -> tuple[Fraction, Fraction]:
        return (self.release, self.deadline)


def make_job(id: int, release, deadline, work) -> Job:
    """Job constructor accepting any rational-convertible times."""
    return Job(id, to_fraction(release), to_fraction(deadline), to_fraction(work))


@dataclass(frozen=True)
class Instance:
    """Homogeneous instance: m identical processors with power s**alpha."""

    alpha: float
    processors: int
    jobs: tuple[Job, ...]

    def __post_init__(self):
        if self.alpha <= 1:
            raise DomainError(f"alpha must exceed 1, got {self.alpha}")
        if self.processors < 1:
            raise DomainError(f"need at least one processor, got {self.processors}")
        ids = [j.id for j in self.jobs]
        if len(set(ids)) != len(ids):
            raise DomainError("job ids must be unique")

    @property
    def n(self) -> int:
        return len(self.jobs)

    def job_by_id(self, job_id: int) -> Job:
        for j in self.jobs:
            if j.id == job_id:
                return j
        raise DomainError(f"no job with id {job_id}")

    def processor_ids(self) -> list[str]:
        return [f"p{i}" for i in range(1, self.processors + 1)]

    def span(self) -> tuple[Fraction, Fraction]:
        return (min(j.release for j in self.jobs), max(j.deadline for j in self.jobs))


@dataclass(frozen=True)
class HetProcessor:
    id: str
    alpha: float

    def __post_init__(self):
        if self.alpha <= 1:
            raise DomainError(f"processor {self.id}: alpha must exceed 1")


@dataclass(frozen=True)
class HetJob:
    """A job whose work (and optionally life interval) depends on the processor.

    A processor absent from ``work_per_processor`` cannot run the job.
    ``life_per_processor`` overrides the default life interval per processor.
    """

    id: int
    release: Fraction
    deadline: Fraction
    work_per_processor: Mapping[str, Fraction]
    life_per_processor: Mapping[str, tuple[Fraction, Fraction]] = field(default_factory=dict)

    def __post_init__(self):
        if self.release >= self.deadline:
            raise DomainError(f"job {self.id}: release must precede deadline")
        for pid, w in self.work_per_processor.items():
            if w <= 0:
                raise DomainError(f"job {self.id}: work on {pid} must be positive")
        for pid, (r, d) in self.life_per_processor.items():
            if r >= d:
                raise DomainError(f"job {self.id}: life on {pid} is empty")

    def work_on(self, pid: str) -> Optional[Fraction]:
        return self.work_per_processor.get(pid)

    def life_on(self, pid: str) -> Optional[tuple[Fraction, Fraction]]:
        if pid not in self.work_per_processor:
            return None
        return self.life_per_processor.get(pid, (self.release, self.deadline))


@dataclass(frozen=True)
class HeterogeneousInstance:
    """Heterogeneous instance: per-processor exponents, works and life intervals."""

    alpha: float
    processors: tuple[HetProcessor, ...]
    jobs: tuple[HetJob, ...]

    def __post_init__(self):
        if self.alpha <= 1:
            raise DomainError(f"alpha must exceed 1, got {self.alpha}")
        if not self.processors:
            raise DomainError("need at least one processor")
        pids = [p.id for p in self.processors]
        if len(set(pids)) != len(pids):
            raise DomainError("processor ids must be unique")
        for p in self.processors:
            if p.alpha > self.alpha:
                raise DomainError(f"processor {p.id}: alpha exceeds the instance alpha")
        ids = [j.id for j in self.jobs]
        if len(set(ids)) != len(ids):
            raise DomainError("job ids must be unique")
        known = set(pids)
        for j in self.jobs:
            usable = [p for p in j.work_per_processor if p in known]
            if not j.work_per_processor:
                raise DomainError(f"job {j.id}: schedulable on no processor")
            if set(j.work_per_processor) - known:
                raise DomainError(f"job {j.id}: unknown processor in work map")
            if not usable:
                raise DomainError(f"job {j.id}: schedulable on no processor")

    @property
    def n(self) -> int:
        return len(self.jobs)

    def processor_ids(self) -> list[str]:
        return [p.id for p in self.processors]

    def alpha_of(self, pid: str) -> float:
        for p in self.processors:
            if p.id == pid:
                return p.alpha
        raise DomainError(f"no processor with id {pid}")

    def job_by_id(self, job_id: int) -> HetJob:
        for j in self.jobs:
            if j.id == job_id:
                return j
        raise DomainError(f"no job with id {job_id}")


AnyInstance = Union[Instance, HeterogeneousInstance]


@dataclass(frozen=True)
class Assignment:
    """One job's execution interval; ``processor`` is None in the single-pool view."""

    job: int
    processor: Optional[str]
    start: Fraction
    end: Fraction


@dataclass(frozen=True)
class Schedule:
    assignments: tuple[Assignment, ...]

    def by_processor(self) -> dict[Optional[str], list[Assignment]]:
        out: dict[Optional[str], list[Assignment]] = {}
        for a in self.assignments:
            out.setdefault(a.processor, []).append(a)
        return out

    def assignment_of(self, job_id: int) -> Optional[Assignment]:
        for a in self.assignments:
            if a.job == job_id:
                return a
        return None


def _job_life_and_work(instance: AnyInstance, job_id: int, processor: Optional[str]):
    """Resolve (life, work, alpha) of a job on a processor; None when unusable."""
    if isinstance(instance, Instance):
        job = instance.job_by_id(job_id)
        return job.life, job.work, instance.alpha
    job = instance.job_by_id(job_id)
    if processor is None:
        return (job.release, job.deadline), None, instance.alpha
    life = job.life_on(processor)
    if life is None:
        return None, None, instance.alpha_of(processor) if processor in instance.processor_ids() else instance.alpha
    return life, job.work_on(processor), instance.alpha_of(processor)


def validate_schedule(schedule: Schedule, instance: AnyInstance) -> list[str]:
    """Return every violation of the schedule invariants; empty list means valid.

    Never raises: malformed entries are reported as violations.
    """
    violations: list[str] = []
    known_jobs = {j.id for j in instance.jobs}
    known_procs = set(instance.processor_ids())
    seen: set[int] = set()

    for a in schedule.assignments:
        tag = f"job {a.job}"
        if a.job not in known_jobs:
            violations.append(f"{tag}: unknown job id")
            continue
        if a.job in seen:
            violations.append(f"{tag}: assigned more than once")
            continue
        seen.add(a.job)
        if a.start >= a.end:
            violations.append(f"{tag}: empty execution interval [{a.start}, {a.end}]")
            continue
        if a.processor is not None and a.processor not in known_procs:
            violations.append(f"{tag}: unknown processor {a.processor}")
            continue
        life, work, _ = _job_life_and_work(instance, a.job, a.processor)
        if life is None or (a.processor is not None and work is None):
            violations.append(f"{tag}: not schedulable on processor {a.processor}")
            continue
        if a.start < life[0] or a.end > life[1]:
            violations.append(
                f"{tag}: interval [{a.start}, {a.end}] leaves life interval "
                f"[{life[0]}, {life[1]}]"
            )

    for jid in sorted(known_jobs - seen):
        violations.append(f"job {jid}: not scheduled")

    for pid, group in schedule.by_processor().items():
        if pid is None:
            continue
        good = [a for a in group if a.start < a.end and a.job in known_jobs]
        good.sort(key=lambda a: (a.start, a.end, a.job))
        for i, first in enumerate(good):
            for second in good[i + 1 :]:
                if second.start >= first.end:
                    break
                if interiors_overlap(first.start, first.end, second.start, second.end):
                    violations.append(
                        f"processor {pid}: jobs {first.job} and {second.job} overlap"
                    )

    pooled = [a for a in schedule.assignments if a.processor is None and a.job in known_jobs]
    if pooled and isinstance(instance, HeterogeneousInstance):
        violations.append("pooled (processor-less) assignments require a homogeneous instance")
    elif pooled:
        # single-pool rule: no point may be interior to more than m intervals
        m = instance.processors
        events = []
        for a in schedule.assignments:
            if a.start < a.end and a.job in known_jobs:
                events.append((a.start, 1))
                events.append((a.end, -1))
        events.sort()
        depth = 0
        for i, (t, delta) in enumerate(events):
            depth += delta
            if depth > m and i + 1 < len(events) and events[i + 1][0] > t:
                violations.append(f"more than {m} intervals overlap after t={t}")
                break
    return violations


def energy_of_schedule(schedule: Schedule, instance: AnyInstance) -> float:
    """Total energy of a valid schedule; raises on an invalid one."""
    violations = validate_schedule(schedule, instance)
    if violations:
        raise DomainError("invalid schedule: " + "; ".join(violations))
    total = 0.0
    for a in schedule.assignments:
        life, work, alpha = _job_life_and_work(instance, a.job, a.processor)
        if work is None:  # pooled homogeneous assignment
            work = instance.job_by_id(a.job).work
        total += energy_of_job(work, a.end - a.start, alpha)
    return total
