from fractions import Fraction as F

import pytest

from speedscale.discretize import build_grid
from speedscale.errors import DomainError
from speedscale.generators import generate_gap_family, generate_random
from speedscale.instances import Instance, Job
from speedscale.lpsolve import solve_lp
from speedscale.oracle import brute_force_nonpreemptive
from speedscale.relaxation import (
    FractionalSolution,
    build_relaxation,
    solve_relaxation,
)


def half_half_solution(instance, grid):
    """Every job split half/half between the two halves of its life interval."""
    entries = []
    works = {}
    for j in instance.jobs:
        works[j.id] = j.work
        mid = (j.release + j.deadline) / 2
        entries.append((j.id, (j.release, mid), F(1, 2)))
        entries.append((j.id, (mid, j.deadline), F(1, 2)))
    return FractionalSolution(tuple(entries), instance.alpha, works, grid)


class TestModel:
    def test_single_job_single_variable(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)),))
        from speedscale.discretize import LandmarkGrid

        grid = LandmarkGrid((F(0), F(1)), (False, False), F(1))
        model = build_relaxation(inst, grid)
        assert model.variable_count() == 1
        lp, cols = model.to_linear_program()
        assert len(cols) == 1
        # assignment row only binds; the landmark rows are empty at the endpoints
        assert sum(1 for coeffs, rel, _ in lp.rows if rel == ">=") == 1

    def test_objective_coefficient_formula(self):
        inst = Instance(3.0, 1, (Job(1, F(0), F(2), F(3)),))
        grid = build_grid(inst, 1)
        model = build_relaxation(inst, grid)
        lo, hi = model.job_ranges[0]
        coeff = model.objective_coefficient(0, lo, hi)
        assert coeff == pytest.approx(3.0**3 / 2.0**2)

    def test_landmark_row_couples_jobs(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)), Job(2, F(0), F(1), F(1))))
        from speedscale.discretize import LandmarkGrid

        grid = LandmarkGrid((F(0), F(1, 2), F(1)), (False, True, False), F(1))
        lp, cols = build_relaxation(inst, grid).to_linear_program()
        # the row at t=1/2 contains the two full-life columns of both jobs
        full_cols = [i for i, (k, a, b) in enumerate(cols) if (a, b) == (0, 2)]
        coupling = [
            coeffs
            for coeffs, rel, rhs in lp.rows
            if rel == "<=" and all(i in coeffs for i in full_cols)
        ]
        assert coupling

    def test_requires_single_processor(self):
        inst = Instance(2.0, 2, (Job(1, F(0), F(1), F(1)),))
        grid = build_grid(Instance(2.0, 1, inst.jobs), 1)
        with pytest.raises(DomainError):
            build_relaxation(inst, grid)


class TestHalfHalfPoint:
    def test_feasible_without_nonpreemption(self):
        inst = generate_gap_family(4, 2.0)
        grid = build_grid(inst, 1)
        x = half_half_solution(inst, grid)
        assert all(float(m) == 0.5 for _, _, m in x.entries)
        # landmark loads never exceed 1
        assert max(x.landmark_loads()) <= 1.0 + 1e-12
        assert x.max_pointwise_load() <= 1.0 + 1e-12

    def test_violates_nonpreemption(self):
        inst = generate_gap_family(4, 2.0)
        grid = build_grid(inst, 1)
        x = half_half_solution(inst, grid)
        lives = {j.id: (j.release, j.deadline) for j in inst.jobs}
        # a small job's full life is covered by itself (mass 1) plus the big
        # job's half containing it (mass 1/2)
        assert x.nonpreemption_violation(lives) == pytest.approx(1.5)

    def test_half_half_value(self):
        inst = generate_gap_family(4, 2.0)
        grid = build_grid(inst, 1)
        x = half_half_solution(inst, grid)
        assert x.energy() == pytest.approx(4 * 2**2)  # n * 2**alpha at alpha=2


class TestSolve:
    def test_single_job_value(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(4)),))
        grid = build_grid(inst, 1)
        sol, rep = solve_relaxation(build_relaxation(inst, grid))
        assert rep.value == pytest.approx(4.0**2 / 2.0)
        assert sol.support_of(1) == [((F(0), F(2)), F(1))]

    def test_gap4_without_nonpreemption_at_most_16(self):
        inst = generate_gap_family(4, 2.0)
        grid = build_grid(inst, 1)
        _, rep = solve_relaxation(build_relaxation(inst, grid, False))
        assert rep.value <= 16.0 + 1e-6

    def test_dropping_nonpreemption_never_increases_value(self):
        for seed in (0, 3, 5):
            inst = generate_random(3, 1, 2.0, seed=seed)
            grid = build_grid(inst, 1)
            _, with_rep = solve_relaxation(build_relaxation(inst, grid, True))
            _, without_rep = solve_relaxation(build_relaxation(inst, grid, False))
            assert without_rep.value <= with_rep.value + 1e-6

    def test_gap4_with_nonpreemption_within_twelve_of_brute(self):
        inst = generate_gap_family(4, 2.0)
        grid = build_grid(inst, 1)
        _, rep = solve_relaxation(build_relaxation(inst, grid, True))
        _, brute = brute_force_nonpreemptive(inst, grid)
        assert rep.value >= brute / 12.0 - 1e-9
        assert rep.value <= brute + 1e-6

    def test_matches_full_materialization(self):
        for seed, flag in [(2, True), (2, False), (7, True)]:
            inst = generate_random(2, 1, 2.0, seed=seed, horizon=2)
            grid = build_grid(inst, 1)
            model = build_relaxation(inst, grid, flag)
            lp, _ = model.to_linear_program()
            direct = solve_lp(lp, "highs")
            _, rep = solve_relaxation(model)
            assert direct.status == "optimal"
            assert rep.value == pytest.approx(direct.objective, rel=1e-7, abs=1e-7)

    def test_simplex_master_path_agrees(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(2)), Job(2, F(0), F(1), F(1))))
        grid = build_grid(inst, 1)
        _, highs_rep = solve_relaxation(build_relaxation(inst, grid), "highs")
        _, simplex_rep = solve_relaxation(build_relaxation(inst, grid), "simplex")
        assert simplex_rep.value == pytest.approx(highs_rep.value, rel=1e-6)

    def test_relaxation_below_every_aligned_schedule(self):
        for seed in range(5):
            inst = generate_random(3, 1, 2.0, seed=40 + seed)
            grid = build_grid(inst, 1)
            _, rep = solve_relaxation(build_relaxation(inst, grid, True))
            _, brute = brute_force_nonpreemptive(inst, grid)
            assert rep.value <= brute + 1e-6 * (1 + brute)

    def test_solution_entries_are_normalized_rationals(self):
        inst = generate_random(3, 1, 2.0, seed=13)
        grid = build_grid(inst, 1)
        sol, _ = solve_relaxation(build_relaxation(inst, grid))
        for j in inst.jobs:
            assert sol.job_mass(j.id) == 1

    def test_gap_growth_without_nonpreemption(self):
        # integral optimum over LP value grows with the family size
        ratios = []
        for n in (4, 8):
            inst = generate_gap_family(n, 2.0)
            grid = build_grid(inst, 1)
            _, rep = solve_relaxation(build_relaxation(inst, grid, False))
            _, brute = brute_force_nonpreemptive(inst, grid, cap=2 * 10**7)
            ratios.append(brute / rep.value)
        assert ratios[1] > ratios[0]
