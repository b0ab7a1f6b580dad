"""Landmark grid: discretized time points and the allowed execution intervals.

Between every pair of consecutive distinct release/deadline values the grid
inserts ceil(n^2 * (1 + 1/epsilon) - 1) equally spaced landmarks (n = number of
jobs).  Restricting execution intervals to landmark endpoints costs at most a
factor (1 + epsilon)^(alpha-1) in energy, which tests certify against a
continuous oracle on tiny instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError
from .instances import HeterogeneousInstance, Instance, Job
from .rationals import to_fraction


@dataclass(frozen=True)
class LandmarkGrid:
    """Sorted distinct time points; ``inserted[i]`` is False for instance endpoints."""

    points: tuple[Fraction, ...]
    inserted: tuple[bool, ...]
    epsilon: Fraction

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.points[1:], self.points)):
            raise DomainError("grid points must be strictly increasing")

    @property
    def size(self) -> int:
        return len(self.points)

    def index_of(self, t: Fraction) -> int:
        """Index of an exact grid point; raises if t is not on the grid."""
        lo, hi = 0, len(self.points) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            if self.points[mid] == t:
                return mid
            if self.points[mid] < t:
                lo = mid + 1
            else:
                hi = mid - 1
        raise DomainError(f"{t} is not a grid point")

    def span_indices(self, lo: Fraction, hi: Fraction) -> tuple[int, int]:
        """Smallest index >= lo and largest index <= hi (both must be on-grid)."""
        return self.index_of(lo), self.index_of(hi)


def _endpoint_values(instance) -> list[Fraction]:
    values = set()
    if isinstance(instance, Instance):
        for j in instance.jobs:
            values.add(j.release)
            values.add(j.deadline)
    elif isinstance(instance, HeterogeneousInstance):
        for j in instance.jobs:
            for pid in instance.processor_ids():
                life = j.life_on(pid)
                if life is not None:
                    values.add(life[0])
                    values.add(life[1])
    else:
        raise DomainError(f"cannot build a grid for {type(instance).__name__}")
    return sorted(values)


def landmarks_per_gap(n: int, epsilon: Fraction) -> int:
    """ceil(n^2 (1 + 1/eps) - 1); rounding up keeps the density guarantee."""
    exact = Fraction(n * n) * (1 + 1 / Fraction(epsilon)) - 1
    return max(0, math.ceil(exact))


def build_grid(instance, epsilon) -> LandmarkGrid:
    """Landmark grid of an instance at density parameter epsilon > 0."""
    eps = to_fraction(epsilon, "epsilon")
    if eps <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    endpoints = _endpoint_values(instance)
    per_gap = landmarks_per_gap(len(instance.jobs), eps)
    points: list[Fraction] = []
    inserted: list[bool] = []
    for i, value in enumerate(endpoints):
        points.append(value)
        inserted.append(False)
        if i + 1 < len(endpoints):
            nxt = endpoints[i + 1]
            step = (nxt - value) / (per_gap + 1)
            for k in range(1, per_gap + 1):
                points.append(value + k * step)
                inserted.append(True)
    return LandmarkGrid(tuple(points), tuple(inserted), eps)


def candidate_intervals(grid: LandmarkGrid, job: Job) -> list[tuple[Fraction, Fraction]]:
    """All grid-endpoint intervals inside the job's life, by start then end."""
    lo, hi = grid.span_indices(job.release, job.deadline)
    out = []
    for a in range(lo, hi):
        for b in range(a + 1, hi + 1):
            out.append((grid.points[a], grid.points[b]))
    return out
