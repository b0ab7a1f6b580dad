"""Instance generators: the integrality-gap family and seeded random instances."""

from __future__ import annotations

import random
from fractions import Fraction

from .errors import DomainError
from .instances import Instance, Job


def generate_gap_family(n: int, alpha: float = 2.0) -> Instance:
    """n unit-work jobs in consecutive unit slots plus one big job spanning them.

    Small job i lives in [i-1, i] with work 1; the big job lives in [0, n] with
    work n.  Single processor.  The LP relaxation without the non-preemption
    constraint undervalues this family by a factor growing with n.
    """
    if n < 1:
        raise DomainError(f"gap family needs n >= 1, got {n}")
    jobs = [Job(i, Fraction(i - 1), Fraction(i), Fraction(1)) for i in range(1, n + 1)]
    jobs.append(Job(n + 1, Fraction(0), Fraction(n), Fraction(n)))
    return Instance(alpha, 1, tuple(jobs))


def generate_random(
    n: int,
    m: int,
    alpha: float = 2.0,
    seed: int = 0,
    work_range: tuple = (1, 3),
    horizon: int = 3,
) -> Instance:
    """Deterministic random instance with integer endpoints inside [0, horizon].

    Endpoints are integers so instances share landmarks, which keeps the
    discretized interval LP at desk scale.  Works are quarter-integer rationals
    drawn from [work_range[0], work_range[1]].
    """
    if n < 1 or m < 1:
        raise DomainError("need n >= 1 jobs and m >= 1 processors")
    if horizon < 1:
        raise DomainError(f"horizon must be at least 1, got {horizon}")
    lo, hi = (Fraction(work_range[0]), Fraction(work_range[1]))
    if lo <= 0 or hi < lo:
        raise DomainError(f"empty or nonpositive work range {work_range}")
    rng = random.Random(seed)
    jobs = []
    qlo, qhi = int(lo * 4), int(hi * 4)
    for jid in range(1, n + 1):
        release = rng.randint(0, horizon - 1)
        deadline = rng.randint(release + 1, horizon)
        work = Fraction(rng.randint(qlo, qhi), 4)
        jobs.append(Job(jid, Fraction(release), Fraction(deadline), work))
    return Instance(alpha, m, tuple(jobs))
