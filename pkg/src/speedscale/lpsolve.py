"""Generic linear-program solving behind one small contract.

Two interchangeable backends: a dense two-phase simplex with Bland's
anti-cycling rule (dependency-free, deterministic pivoting) and scipy's HiGHS
for programs too large for a dense tableau.  Both report duals, and every
"optimal" answer is certified by a primal-feasibility / dual-feasibility /
duality-gap check; a failed certificate is reported as status "failed",
never as a silent wrong answer.

Tolerances are centralized here: FEASIBILITY_TOL and OPTIMALITY_TOL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError

FEASIBILITY_TOL = 1e-7
OPTIMALITY_TOL = 1e-7

#: dense-tableau cell budget above which solve_lp switches to the HiGHS backend
_DENSE_CELL_LIMIT = 250_000

LESS, GREATER, EQUAL = "<=", ">=", "="


@dataclass
class LinearProgram:
    """min c.x subject to sparse rows (coeffs, relation, rhs); x >= lower bounds."""

    num_vars: int
    objective: dict[int, float] = field(default_factory=dict)
    rows: list[tuple[dict[int, float], str, float]] = field(default_factory=list)
    lower_bounds: dict[int, float] = field(default_factory=dict)

    def add_row(self, coeffs: dict[int, float], relation: str, rhs: float) -> None:
        if relation not in (LESS, GREATER, EQUAL):
            raise DomainError(f"unknown relation {relation!r}")
        self.rows.append((coeffs, relation, rhs))

    def validate(self) -> None:
        for j, c in self.objective.items():
            if not (0 <= j < self.num_vars):
                raise DomainError(f"objective references variable {j} out of range")
            if not math.isfinite(c):
                raise DomainError(f"objective coefficient for x{j} is not finite")
        for i, (coeffs, relation, rhs) in enumerate(self.rows):
            if relation not in (LESS, GREATER, EQUAL):
                raise DomainError(f"row {i}: unknown relation {relation!r}")
            if not math.isfinite(rhs):
                raise DomainError(f"row {i}: right-hand side is not finite")
            for j, c in coeffs.items():
                if not (0 <= j < self.num_vars):
                    raise DomainError(f"row {i} references variable {j} out of range")
                if not math.isfinite(c):
                    raise DomainError(f"row {i}: coefficient for x{j} is not finite")


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | failed
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None  # one per row; rc_j = c_j - sum_r y_r A_rj
    feasibility_tolerance: float = FEASIBILITY_TOL
    optimality_tolerance: float = OPTIMALITY_TOL
    certified: bool = False
    backend: str = ""


def _certify(lp: LinearProgram, x: np.ndarray, duals: Optional[np.ndarray]) -> bool:
    """Primal and dual feasibility plus a small duality gap, all within tolerance."""
    if duals is None:
        return False
    xscale = 1.0 + float(np.max(np.abs(x), initial=0.0))
    for j in range(lp.num_vars):
        if x[j] < lp.lower_bounds.get(j, 0.0) - FEASIBILITY_TOL * xscale:
            return False
    for i, (coeffs, relation, rhs) in enumerate(lp.rows):
        a = sum(c * x[j] for j, c in coeffs.items())
        slack_tol = FEASIBILITY_TOL * (1.0 + abs(rhs)) * xscale
        if relation == LESS and a > rhs + slack_tol:
            return False
        if relation == GREATER and a < rhs - slack_tol:
            return False
        if relation == EQUAL and abs(a - rhs) > slack_tol:
            return False
        y = duals[i]
        if relation == LESS and y > OPTIMALITY_TOL:
            return False
        if relation == GREATER and y < -OPTIMALITY_TOL:
            return False
    rc = np.zeros(lp.num_vars)
    for j, c in lp.objective.items():
        rc[j] = c
    for i, (coeffs, _, _) in enumerate(lp.rows):
        y = duals[i]
        if y != 0.0:
            for j, c in coeffs.items():
                rc[j] -= y * c
    cscale = 1.0 + float(np.max(np.abs(rc), initial=0.0))
    if float(np.min(rc, initial=0.0)) < -OPTIMALITY_TOL * cscale * 10:
        return False
    primal = sum(c * x[j] for j, c in lp.objective.items())
    dual = sum(duals[i] * row[2] for i, row in enumerate(lp.rows))
    dual += sum(rc[j] * lb for j, lb in lp.lower_bounds.items())
    gap_scale = 1.0 + abs(primal) + abs(dual)
    return abs(primal - dual) <= math.sqrt(OPTIMALITY_TOL) * gap_scale


def solve_lp(lp: LinearProgram, method: str = "auto") -> LpSolution:
    """Solve a LinearProgram; method is "auto", "simplex" or "highs"."""
    lp.validate()
    if method == "auto":
        cells = max(1, len(lp.rows)) * max(1, lp.num_vars)
        method = "simplex" if cells <= _DENSE_CELL_LIMIT else "highs"
    if method == "simplex":
        sol = _solve_simplex(lp)
    elif method == "highs":
        sol = _solve_highs(lp)
    else:
        raise DomainError(f"unknown method {method!r}")
    if sol.status == "optimal":
        sol.certified = _certify(lp, sol.x, sol.duals)
        if not sol.certified:
            sol.status = "failed"
    return sol


def _solve_highs(lp: LinearProgram) -> LpSolution:
    from scipy import sparse
    from scipy.optimize import linprog

    c = np.zeros(lp.num_vars)
    for j, v in lp.objective.items():
        c[j] = v
    ub_rows, ub_rhs, ub_src = [], [], []
    eq_rows, eq_rhs, eq_src = [], [], []
    for i, (coeffs, relation, rhs) in enumerate(lp.rows):
        if relation == EQUAL:
            eq_rows.append(coeffs)
            eq_rhs.append(rhs)
            eq_src.append(i)
        elif relation == LESS:
            ub_rows.append(coeffs)
            ub_rhs.append(rhs)
            ub_src.append((i, 1.0))
        else:
            ub_rows.append({j: -v for j, v in coeffs.items()})
            ub_rhs.append(-rhs)
            ub_src.append((i, -1.0))

    def build(rows):
        data, ri, ci = [], [], []
        for r, coeffs in enumerate(rows):
            for j, v in coeffs.items():
                ri.append(r)
                ci.append(j)
                data.append(v)
        return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), lp.num_vars))

    bounds = [(lp.lower_bounds.get(j, 0.0), None) for j in range(lp.num_vars)]
    res = linprog(
        c,
        A_ub=build(ub_rows) if ub_rows else None,
        b_ub=np.array(ub_rhs) if ub_rows else None,
        A_eq=build(eq_rows) if eq_rows else None,
        b_eq=np.array(eq_rhs) if eq_rows else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return LpSolution("infeasible", backend="highs")
    if res.status == 3:
        return LpSolution("unbounded", backend="highs")
    if res.status != 0:
        return LpSolution("failed", backend="highs")
    duals = np.zeros(len(lp.rows))
    if ub_rows:
        for (i, sign), y in zip(ub_src, res.ineqlin.marginals):
            duals[i] = sign * y
    if eq_rows:
        for i, y in zip(eq_src, res.eqlin.marginals):
            duals[i] = y
    return LpSolution("optimal", res.x, float(res.fun), duals, backend="highs")


def _solve_simplex(lp: LinearProgram, max_pivots: int = 100_000) -> LpSolution:
    """Dense two-phase simplex with Bland's rule on the shifted standard form."""
    n = lp.num_vars
    m = len(lp.rows)
    lb = np.array([lp.lower_bounds.get(j, 0.0) for j in range(n)])
    cost = np.zeros(n)
    for j, v in lp.objective.items():
        cost[j] = v

    if m == 0:
        x = lb.copy()
        return LpSolution("optimal", x, float(cost @ x), np.zeros(0), backend="simplex")

    # standard form: M z = b with z = [x - lb, slacks] >= 0, b >= 0
    nslack = sum(1 for _, rel, _ in lp.rows if rel != EQUAL)
    total = n + nslack
    M = np.zeros((m, total + m))  # artificial columns appended
    b = np.zeros(m)
    row_sign = np.ones(m)
    si = n
    for i, (coeffs, relation, rhs) in enumerate(lp.rows):
        for j, c in coeffs.items():
            M[i, j] = c
        b[i] = rhs - sum(c * lb[j] for j, c in coeffs.items())
        if relation == LESS:
            M[i, si] = 1.0
            si += 1
        elif relation == GREATER:
            M[i, si] = -1.0
            si += 1
        if b[i] < 0:
            M[i, :total] = -M[i, :total]
            b[i] = -b[i]
            row_sign[i] = -1.0
        M[i, total + i] = 1.0

    T = np.hstack([M, b[:, None]])
    basis = list(range(total, total + m))
    basis_pos = {v: i for i, v in enumerate(basis)}

    def run(costs, ncols, pivots_left):
        while pivots_left > 0:
            pivots_left -= 1
            rc = costs[:ncols] - costs[basis] @ T[:, :ncols]
            entering = -1
            for j in range(ncols):  # Bland: smallest improving index
                if rc[j] < -1e-9 and j not in basis_pos:
                    entering = j
                    break
            if entering < 0:
                return "optimal", pivots_left
            col = T[:, entering]
            leave, best = -1, np.inf
            for i in range(m):
                if col[i] > 1e-11:
                    ratio = T[i, -1] / col[i]
                    if ratio < best - 1e-12:
                        best, leave = ratio, i
                    elif ratio < best + 1e-12 and leave >= 0 and basis[i] < basis[leave]:
                        leave = i
            if leave < 0:
                return "unbounded", pivots_left
            piv = T[leave, entering]
            T[leave] /= piv
            colvals = T[:, entering].copy()
            colvals[leave] = 0.0
            T[...] -= np.outer(colvals, T[leave])
            basis_pos.pop(basis[leave], None)
            basis[leave] = entering
            basis_pos[entering] = leave
        return "failed", 0

    cost1 = np.zeros(total + m)
    cost1[total:] = 1.0
    status, left = run(cost1, total + m, max_pivots)
    if status != "optimal":
        return LpSolution("failed", backend="simplex")
    if float(cost1[basis] @ T[:, -1]) > 1e-7:
        return LpSolution("infeasible", backend="simplex")

    # pivot leftover degenerate artificials out where a real column is available
    for i in range(m):
        if basis[i] >= total:
            for j in range(total):
                if abs(T[i, j]) > 1e-9 and j not in basis_pos:
                    T[i] /= T[i, j]
                    colvals = T[:, j].copy()
                    colvals[i] = 0.0
                    T[...] -= np.outer(colvals, T[i])
                    basis_pos.pop(basis[i], None)
                    basis[i] = j
                    basis_pos[j] = i
                    break

    cost2 = np.zeros(total + m)
    cost2[:n] = cost
    status, _ = run(cost2, total, left)
    if status == "unbounded":
        return LpSolution("unbounded", backend="simplex")
    if status != "optimal":
        return LpSolution("failed", backend="simplex")

    z = np.zeros(total + m)
    for i, v in enumerate(basis):
        z[v] = T[i, -1]
    x = z[:n] + lb
    objective = float(cost @ x)

    # duals on the standardized rows: solve B^T y = c_B, then undo row negations
    B = M[:, basis]
    cB = cost2[basis]
    try:
        y_std = np.linalg.solve(B.T, cB)
    except np.linalg.LinAlgError:
        y_std = np.linalg.lstsq(B.T, cB, rcond=None)[0]
    duals = y_std * row_sign
    return LpSolution("optimal", x, objective, duals, backend="simplex")


def export_lp_text(lp: LinearProgram, name: str = "problem") -> str:
    """Developer tooling: CPLEX-LP-format text for cross-checking externally."""

    def terms(coeffs):
        parts = []
        for j in sorted(coeffs):
            c = coeffs[j]
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {abs(c):.12g} x{j}")
        text = " ".join(parts) if parts else "+ 0 x0"
        return text[2:] if text.startswith("+ ") else text

    lines = [f"\\* {name} *\\", "Minimize", f" obj: {terms(lp.objective)}", "Subject To"]
    for i, (coeffs, relation, rhs) in enumerate(lp.rows):
        lines.append(f" r{i}: {terms(coeffs)} {relation} {rhs:.12g}")
    lines.append("Bounds")
    for j in range(lp.num_vars):
        lines.append(f" x{j} >= {lp.lower_bounds.get(j, 0.0):.12g}")
    lines.append("End")
    return "\n".join(lines) + "\n"
