"""Interval-indexed LP relaxation of single-processor non-preemptive scheduling.

One variable x[I,j] per job j and allowed execution interval I with landmark
endpoints inside the job's life interval; objective coefficient
(w_j/|I|)**alpha * |I|.  Constraints:

  (assignment)      sum_I x[I,j] >= 1                          per job
  (landmark load)   sum over I whose interior contains t <= 1  per grid point
  (non-preemption)  for every job j and interval I inside its life:
                    [mass of j on intervals meeting I's interior] +
                    [mass of other jobs on intervals containing I] <= 1

The non-preemption family is quadratic in the interval count, but rows whose
interval pokes outside the job's life are componentwise dominated by rows
inside it, and the remaining family is handled lazily: the solver separates
violated rows exactly.  Columns are generated lazily as well, priced against
the duals, with a Lagrangian bound certifying the reported value: every job
carries exactly unit mass at an optimum, so the full optimum is at least the
master value plus the sum of per-job minimum reduced costs.  The toggle
``include_nonpreemption`` drops the third family entirely, which is what the
integrality-gap experiment measures.
"""

from __future__ import annotations

import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .discretize import LandmarkGrid
from .errors import ContractViolationError, DomainError, InfeasibleError
from .instances import Instance
from .lpsolve import GREATER, LESS, LinearProgram, solve_lp

#: masses below this are dropped when extracting a fractional solution
MASS_EPS = 1e-8
#: violation tolerance used by the row separator
ROW_TOL = 1e-7
#: relative Lagrangian gap at which column generation stops
GAP_RTOL = 1e-9

Interval = tuple[Fraction, Fraction]


@dataclass(frozen=True)
class FractionalSolution:
    """Sparse fractional assignment of jobs to execution intervals.

    Masses are exact rationals normalized to sum to 1 per job; interval
    endpoints are exact as well, so the rounding pipeline's halving arithmetic
    never sees float noise.
    """

    entries: tuple[tuple[int, Interval, Fraction], ...]  # (job id, (s, e), mass)
    alpha: float
    works: dict[int, Fraction]
    grid: LandmarkGrid | None = None

    def energy(self) -> float:
        total = 0.0
        for jid, (s, e), mass in self.entries:
            w = float(self.works[jid])
            total += float(mass) * w**self.alpha * float(e - s) ** (1.0 - self.alpha)
        return total

    def job_mass(self, jid: int) -> Fraction:
        return sum((m for j, _, m in self.entries if j == jid), Fraction(0))

    def support_of(self, jid: int) -> list[tuple[Interval, Fraction]]:
        return [(iv, m) for j, iv, m in self.entries if j == jid]

    def job_ids(self) -> list[int]:
        return sorted({j for j, _, _ in self.entries})

    def max_pointwise_load(self) -> float:
        """Peak total mass covering a single time point (sweep over endpoints)."""
        events = []
        for _, (s, e), m in self.entries:
            events.append((s, 1, float(m)))
            events.append((e, 0, -float(m)))  # ends sort first: touching is not overlap
        if not events:
            return 0.0
        events.sort(key=lambda x: (x[0], x[1]))
        depth = peak = 0.0
        for _, _, delta in events:
            depth += delta
            peak = max(peak, depth)
        return peak

    def landmark_loads(self) -> list[float]:
        """Total mass whose interval interior covers each grid point."""
        if self.grid is None:
            raise DomainError("solution carries no grid")
        loads = [0.0] * self.grid.size
        for _, (s, e), m in self.entries:
            for k, t in enumerate(self.grid.points):
                if s < t < e:
                    loads[k] += float(m)
        return loads

    def nonpreemption_violation(self, jobs_lives: dict[int, Interval]) -> float:
        """Largest left-hand side of the non-preemption family, over all rows.

        Candidate intervals are built from support endpoints clipped into each
        job's life, which is where the piecewise-constant row value can change,
        so the maximum over candidates equals the maximum over all rows.
        """
        worst = 0.0
        all_points = sorted({p for _, (s, e), _ in self.entries for p in (s, e)})
        for jid, (lo, hi) in jobs_lives.items():
            points = sorted({p for p in all_points if lo <= p <= hi} | {lo, hi})
            own = self.support_of(jid)
            others = [(j, iv, m) for j, iv, m in self.entries if j != jid]
            for ai, a in enumerate(points):
                for b in points[ai + 1 :]:
                    overlap = sum(
                        float(m) for (s, e), m in own if max(s, a) < min(e, b)
                    )
                    containing = sum(
                        float(m) for _, (s, e), m in others if s <= a and b <= e
                    )
                    worst = max(worst, overlap + containing)
        return worst


@dataclass
class RelaxationModel:
    """The LP relaxation of a single-processor instance over a landmark grid."""

    instance: Instance
    grid: LandmarkGrid
    include_nonpreemption: bool = True
    job_ranges: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if self.instance.processors != 1:
            raise DomainError("the relaxation is defined for single-processor instances")
        if not self.job_ranges:
            self.job_ranges = [
                self.grid.span_indices(j.release, j.deadline) for j in self.instance.jobs
            ]

    def variable_count(self) -> int:
        return sum((hi - lo + 1) * (hi - lo) // 2 for lo, hi in self.job_ranges)

    def objective_coefficient(self, job_idx: int, a: int, b: int) -> float:
        w = float(self.instance.jobs[job_idx].work)
        length = float(self.grid.points[b] - self.grid.points[a])
        return w**self.instance.alpha * length ** (1.0 - self.instance.alpha)

    def all_columns(self) -> list[tuple[int, int, int]]:
        cols = []
        for k, (lo, hi) in enumerate(self.job_ranges):
            for a in range(lo, hi):
                for b in range(a + 1, hi + 1):
                    cols.append((k, a, b))
        return cols

    def to_linear_program(self, max_vars: int = 4000):
        """Full materialization (for tests and tiny models): all columns, all rows.

        Returns (LinearProgram, columns) where columns[i] = (job_idx, a, b).
        """
        if self.variable_count() > max_vars:
            raise DomainError(
                f"materializing {self.variable_count()} variables exceeds {max_vars}"
            )
        columns = self.all_columns()
        index = {col: i for i, col in enumerate(columns)}
        lp = LinearProgram(len(columns))
        for i, (k, a, b) in enumerate(columns):
            lp.objective[i] = self.objective_coefficient(k, a, b)
        n = self.instance.n
        for k in range(n):
            lo, hi = self.job_ranges[k]
            coeffs = {
                index[(k, a, b)]: 1.0
                for a in range(lo, hi)
                for b in range(a + 1, hi + 1)
            }
            lp.add_row(coeffs, GREATER, 1.0)
        for t in range(self.grid.size):
            coeffs = {i: 1.0 for i, (k, a, b) in enumerate(columns) if a < t < b}
            if coeffs:
                lp.add_row(coeffs, LESS, 1.0)
        if self.include_nonpreemption:
            for k, a, b in columns:
                coeffs: dict[int, float] = {}
                for i, (k2, a2, b2) in enumerate(columns):
                    if k2 == k:
                        if max(a, a2) < min(b, b2):
                            coeffs[i] = 1.0
                    elif a2 <= a and b <= b2:
                        coeffs[i] = 1.0
                lp.add_row(coeffs, LESS, 1.0)
        return lp, columns


def build_relaxation(
    instance: Instance, grid: LandmarkGrid, include_nonpreemption: bool = True
) -> RelaxationModel:
    return RelaxationModel(instance, grid, include_nonpreemption)


@dataclass
class RelaxationReport:
    value: float
    status: str
    nnz: int
    columns: int
    lazy_rows: int
    iterations: int
    gap_bound: float
    runtime_s: float


def _edf_step_columns(model: RelaxationModel) -> list[tuple[int, int, int]]:
    """One disjoint single-step interval per job, earliest deadline first."""
    order = sorted(
        range(model.instance.n),
        key=lambda k: (model.instance.jobs[k].deadline, model.instance.jobs[k].id),
    )
    cursor = 0
    cols = []
    for k in order:
        lo, hi = model.job_ranges[k]
        start = max(cursor, lo)
        if start + 1 > hi:
            return []  # greedy failed; caller falls back to all single steps
        cols.append((k, start, start + 1))
        cursor = start + 1
    return cols


def _profile_seed_columns(model: RelaxationModel) -> list[tuple[int, int, int]]:
    """Columns snapped to the preemptive optimum's allocation spans."""
    from .oracle import yds_preemptive

    try:
        profile, _ = yds_preemptive(model.instance)
    except Exception:
        return []
    points = model.grid.points
    cols = []
    for k, job in enumerate(model.instance.jobs):
        pieces = [p for p in profile.pieces if p.job == job.id]
        if not pieces:
            continue
        lo, hi = model.job_ranges[k]
        spans = [(min(p.start for p in pieces), max(p.end for p in pieces))]
        spans += [(p.start, p.end) for p in pieces[:4]]
        for s, e in spans:
            a_hi = bisect_right(points, s) - 1
            a_lo = bisect_left(points, s)
            b_lo = bisect_left(points, e)
            b_hi = bisect_right(points, e) - 1
            for a in {a_lo, a_hi}:
                for b in {b_lo, b_hi}:
                    a2, b2 = max(lo, min(a, hi)), max(lo, min(b, hi))
                    if a2 < b2:
                        cols.append((k, a2, b2))
    return cols


class _IncrementalHighs:
    """Persistent HiGHS model: columns and rows are added in place, and each
    re-solve warm-starts from the previous basis (dual simplex)."""

    def __init__(self, num_fixed_rows: int, n_assignment: int):
        from scipy.optimize._highspy import _core as hscore

        self._core = hscore
        self.h = hscore._Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.setOptionValue("threads", 1)
        self.h.setOptionValue("random_seed", 0)
        inf = float("inf")
        lower = np.full(num_fixed_rows, -inf)
        upper = np.full(num_fixed_rows, 1.0)
        lower[:n_assignment] = 1.0
        upper[:n_assignment] = inf
        starts = np.zeros(num_fixed_rows + 1, dtype=np.int64)
        self.h.addRows(
            num_fixed_rows, lower, upper, 0, starts,
            np.array([], dtype=np.int32), np.array([]),
        )

    def add_column(self, cost: float, row_indices: list[int]) -> None:
        inf = float("inf")
        nnz = len(row_indices)
        self.h.addCols(
            1,
            np.array([cost]),
            np.array([0.0]),
            np.array([inf]),
            nnz,
            np.array([0, nnz], dtype=np.int64),
            np.array(row_indices, dtype=np.int32),
            np.ones(nnz),
        )

    def add_row(self, col_indices: list[int]) -> None:
        nnz = len(col_indices)
        self.h.addRows(
            1,
            np.array([-float("inf")]),
            np.array([1.0]),
            nnz,
            np.array([0, nnz], dtype=np.int64),
            np.array(col_indices, dtype=np.int32),
            np.ones(nnz),
        )

    def solve(self):
        self.h.run()
        status = self.h.modelStatusToString(self.h.getModelStatus())
        if status == "Infeasible":
            return None
        if status != "Optimal":
            raise ContractViolationError(f"LP master failed with status {status}")
        sol = self.h.getSolution()
        x = np.asarray(sol.col_value)
        duals = np.asarray(sol.row_dual)
        return x, float(self.h.getInfo().objective_function_value), duals


class _Generator:
    """Column generation with lazy non-preemption rows for one model.

    Rows are ordered: one assignment row per job (>= 1), one landmark-load row
    per grid point (<= 1), then lazy non-preemption rows (<= 1).
    """

    def __init__(self, model: RelaxationModel, master_method: str):
        self.model = model
        self.method = master_method
        self.t = np.array([float(p) for p in model.grid.points])
        self.n = model.instance.n
        self.columns: list[tuple[int, int, int]] = []
        self.col_index: dict[tuple[int, int, int], int] = {}
        self.lazy_rows: list[tuple[int, int, int]] = []  # (job_idx, a, b)
        self.obj: list[float] = []
        self.col_rows: list[list[int]] = []  # fixed-row indices per column
        self.lazy_members: list[list[int]] = []  # column indices per lazy row
        self.engine = None
        if master_method == "highs":
            self.engine = _IncrementalHighs(self.n + model.grid.size, self.n)

    @property
    def num_rows(self) -> int:
        return self.n + self.model.grid.size + len(self.lazy_rows)

    def add_column(self, col: tuple[int, int, int]) -> bool:
        if col in self.col_index:
            return False
        k, a, b = col
        i = len(self.columns)
        self.columns.append(col)
        self.col_index[col] = i
        self.obj.append(self.model.objective_coefficient(k, a, b))
        g = self.model.grid.size
        rows = [k] + [self.n + tt for tt in range(a + 1, b)]
        self.col_rows.append(rows)
        lazy_hits = []
        for r, (rk, ra, rb) in enumerate(self.lazy_rows):
            if self._lazy_coeff(rk, ra, rb, k, a, b):
                lazy_hits.append(r)
                self.lazy_members[r].append(i)
        if self.engine is not None:
            self.engine.add_column(
                self.obj[-1], rows + [self.n + g + r for r in lazy_hits]
            )
        return True

    @staticmethod
    def _lazy_coeff(rk, ra, rb, k, a, b) -> float:
        if k == rk:
            return 1.0 if max(a, ra) < min(b, rb) else 0.0
        return 1.0 if a <= ra and rb <= b else 0.0

    def add_lazy_row(self, row: tuple[int, int, int]) -> bool:
        if row in self.lazy_rows:
            return False
        rk, ra, rb = row
        self.lazy_rows.append(row)
        members = [
            i
            for i, (k, a, b) in enumerate(self.columns)
            if self._lazy_coeff(rk, ra, rb, k, a, b)
        ]
        self.lazy_members.append(members)
        if self.engine is not None:
            self.engine.add_row(members)
        return True

    def _raise_infeasible(self):
        raise InfeasibleError(
            f"relaxation infeasible on a grid of {self.model.grid.size} points "
            f"(epsilon={self.model.grid.epsilon}); the grid is too coarse"
        )

    def solve_master(self):
        """Solve the current master; returns (x, objective, mu, lam, sigma)."""
        g = self.model.grid.size
        if self.engine is not None:
            result = self.engine.solve()
            if result is None:
                self._raise_infeasible()
            x, value, duals = result
            return x, value, duals[: self.n], duals[self.n : self.n + g], duals[self.n + g :]
        lp = self.build_master()
        sol = solve_lp(lp, self.method)
        if sol.status == "infeasible":
            self._raise_infeasible()
        if sol.status != "optimal":
            raise ContractViolationError(f"LP master failed with status {sol.status}")
        d = sol.duals
        return sol.x, float(sol.objective), d[: self.n], d[self.n : self.n + g], d[self.n + g :]

    def build_master(self) -> LinearProgram:
        """Materialize the master as a LinearProgram (simplex backend, tests)."""
        lp = LinearProgram(len(self.columns))
        for i, c in enumerate(self.obj):
            lp.objective[i] = c
        rows: list[dict[int, float]] = [dict() for _ in range(self.num_rows)]
        for i, fixed in enumerate(self.col_rows):
            for r in fixed:
                rows[r][i] = 1.0
        for r, members in enumerate(self.lazy_members):
            for i in members:
                rows[self.n + self.model.grid.size + r][i] = 1.0
        for k in range(self.n):
            lp.add_row(rows[k], GREATER, 1.0)
        for r in range(self.n, self.num_rows):
            lp.add_row(rows[r], LESS, 1.0)
        return lp

    def price(self, mu, lam, sigma, batch: int = 15):
        """New columns with negative reduced cost, plus the Lagrangian gap.

        gap = sum over jobs of min(0, minimum reduced cost); the full optimum
        is at least master value + gap because each job carries exactly unit
        mass at any optimum of the full program.
        """
        cums = np.concatenate([[0.0], np.cumsum(lam)])
        new_cols: list[tuple[float, tuple[int, int, int]]] = []
        gap = 0.0
        alpha = self.model.instance.alpha
        for k in range(self.n):
            lo, hi = self.model.job_ranges[k]
            R = hi - lo + 1
            if R < 2:
                continue
            tt = self.t[lo : hi + 1]
            lengths = tt[None, :] - tt[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                rc = float(self.model.instance.jobs[k].work) ** alpha * np.where(
                    lengths > 0, lengths, np.nan
                ) ** (1.0 - alpha)
            rc -= mu[k]
            # landmark-load duals: sum over interior points of the interval
            rc -= cums[None, lo : hi + 1] - cums[lo + 1 : hi + 2, None]
            for r, (rk, ra, rb) in enumerate(self.lazy_rows):
                y = sigma[r]
                if abs(y) < 1e-12:
                    continue
                if rk == k:
                    # columns overlapping the row interval's interior
                    a_hi = min(rb, hi)  # a < rb
                    b_lo = max(ra + 1, lo + 1)  # b > ra
                    if a_hi > lo and b_lo <= hi:
                        rc[: a_hi - lo, b_lo - lo :] -= y
                elif lo <= ra and rb <= hi:
                    # columns containing the row interval
                    rc[: ra - lo + 1, rb - lo :] -= y
            rc_flat = rc.ravel()
            order = np.argsort(rc_flat, kind="stable")
            first = rc_flat[order[0]]
            if np.isfinite(first) and first < 0:
                gap += first
            taken = 0
            for pos in order:
                val = rc_flat[pos]
                if not np.isfinite(val) or val >= -1e-9:
                    break
                col = (k, lo + int(pos) // R, lo + int(pos) % R)
                if col not in self.col_index:
                    new_cols.append((val, col))
                    taken += 1
                    if taken >= batch:
                        break
        new_cols.sort(key=lambda x: (x[0], x[1]))
        return [c for _, c in new_cols], gap

    def separate(self, x: np.ndarray, per_job: int = 5):
        """Most violated non-preemption rows per job on the current solution."""
        support = [
            (k, a, b, x[i]) for i, (k, a, b) in enumerate(self.columns) if x[i] > MASS_EPS
        ]
        rows = []
        for k in range(self.n):
            lo, hi = self.model.job_ranges[k]
            R = hi - lo + 1
            if R < 2:
                continue
            lhs = np.zeros((R, R))
            for k2, a2, b2, v in support:
                if k2 == k:
                    a_hi = min(b2, hi)
                    b_lo = max(a2 + 1, lo + 1)
                    if a_hi > lo and b_lo <= hi:
                        lhs[: a_hi - lo, b_lo - lo :] += v
                else:
                    row_lo = max(a2 - lo, 0)
                    col_hi = min(b2, hi) - lo
                    if row_lo < R and col_hi >= 0:
                        lhs[row_lo:, : col_hi + 1] += v
            lhs[np.tril_indices(R)] = 0.0  # b <= a is not a valid interval
            flat = lhs.ravel()
            count = min(per_job, flat.size)
            best = np.argpartition(flat, -count)[-count:]
            for pos in sorted(best, key=lambda p: (-flat[p], p)):
                if flat[pos] > 1.0 + ROW_TOL:
                    rows.append(((k, lo + int(pos) // R, lo + int(pos) % R), flat[pos]))
        rows.sort(key=lambda r: (-r[1], r[0]))
        return [r for r, _ in rows]


def solve_relaxation(
    model: RelaxationModel, master_method: str = "highs", max_rounds: int = 400
) -> tuple[FractionalSolution, RelaxationReport]:
    """Optimum of the relaxation via column generation and exact row separation.

    The final iterate is feasible for the full program (all landmark-load rows
    are in every master; the row separator finds no violation) and the
    Lagrangian bound certifies its value is within GAP_RTOL of the full
    optimum, relatively.
    """
    start = time.perf_counter()
    gen = _Generator(model, master_method)
    for k, (lo, hi) in enumerate(model.job_ranges):
        gen.add_column((k, lo, hi))
        endpoint_idx = [
            i for i, ins in enumerate(model.grid.inserted) if not ins and lo <= i <= hi
        ]
        for ai, a in enumerate(endpoint_idx):
            for b in endpoint_idx[ai + 1 :]:
                gen.add_column((k, a, b))
    for col in _profile_seed_columns(model):
        gen.add_column(col)
    seed = _edf_step_columns(model)
    if seed:
        for col in seed:
            gen.add_column(col)
    else:
        for k, (lo, hi) in enumerate(model.job_ranges):
            for a in range(lo, hi):
                gen.add_column((k, a, a + 1))
    if model.include_nonpreemption:
        for k, (lo, hi) in enumerate(model.job_ranges):
            gen.add_lazy_row((k, lo, hi))

    x = value = gap = None
    for round_no in range(1, max_rounds + 1):
        x, value, mu, lam, sigma = gen.solve_master()
        new_rows = gen.separate(x) if model.include_nonpreemption else []
        new_cols, gap = gen.price(mu, lam, sigma)
        added = sum(gen.add_lazy_row(r) for r in new_rows)
        if gap < -GAP_RTOL * (1.0 + abs(value)):
            added += sum(gen.add_column(c) for c in new_cols)
        if not added:
            break
    else:
        raise ContractViolationError("relaxation solver did not converge")

    runtime = time.perf_counter() - start
    solution = _extract_solution(model, gen, x)
    nnz = sum(len(r) for r in gen.col_rows) + sum(len(m) for m in gen.lazy_members)
    report = RelaxationReport(
        value=float(value),
        status="optimal",
        nnz=nnz,
        columns=len(gen.columns),
        lazy_rows=len(gen.lazy_rows),
        iterations=round_no,
        gap_bound=float(gap),
        runtime_s=runtime,
    )
    return solution, report


def _extract_solution(model: RelaxationModel, gen: _Generator, x: np.ndarray) -> FractionalSolution:
    """Drop tiny masses and normalize each job's total to exactly 1."""
    per_job: dict[int, list[tuple[Interval, Fraction]]] = {}
    for i, (k, a, b) in enumerate(gen.columns):
        v = float(x[i])
        if v <= MASS_EPS:
            continue
        jid = model.instance.jobs[k].id
        iv = (model.grid.points[a], model.grid.points[b])
        per_job.setdefault(jid, []).append((iv, Fraction(v)))
    entries = []
    works = {}
    for job in model.instance.jobs:
        works[job.id] = job.work
        chunks = per_job.get(job.id)
        if not chunks:
            raise ContractViolationError(f"job {job.id} received no fractional mass")
        total = sum(m for _, m in chunks)
        if float(total) < 1.0 - 1e-5:
            raise ContractViolationError(
                f"job {job.id} mass {float(total)} violates the assignment constraint"
            )
        merged: dict[Interval, Fraction] = {}
        for iv, m in chunks:
            merged[iv] = merged.get(iv, Fraction(0)) + m / total
        for iv in sorted(merged):
            entries.append((job.id, iv, merged[iv]))
    return FractionalSolution(tuple(entries), model.instance.alpha, works, model.grid)
