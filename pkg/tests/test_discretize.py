from fractions import Fraction as F

import pytest

from speedscale.discretize import build_grid, candidate_intervals, landmarks_per_gap
from speedscale.errors import DomainError
from speedscale.generators import generate_gap_family
from speedscale.instances import Instance, Job
from speedscale.oracle import brute_force_nonpreemptive

from .oracles import gap_family_continuous_optimum


def test_two_jobs_three_endpoints():
    # 2 jobs, endpoint values {0,1,2}, eps=1: 7 inserted per gap, 17 points
    inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)), Job(2, F(1), F(2), F(1))))
    grid = build_grid(inst, 1)
    assert grid.size == 17
    assert sum(1 for i in grid.inserted if i) == 14


def test_single_job_three_points():
    inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)),))
    grid = build_grid(inst, 1)
    assert grid.size == 3
    assert [p for p, ins in zip(grid.points, grid.inserted) if not ins] == [0, 1]


def test_shared_endpoints_deduplicated():
    inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)), Job(2, F(0), F(1), F(2))))
    grid = build_grid(inst, 1)
    assert len(set(grid.points)) == grid.size


def test_fractional_count_rounds_up():
    # 1 job at eps=3: 1*(1+1/3)-1 = 1/3 -> one landmark per gap
    assert landmarks_per_gap(1, F(3)) == 1
    assert landmarks_per_gap(2, F(1)) == 7


def test_grid_points_increasing_and_rational():
    inst = generate_gap_family(3, 2.0)
    grid = build_grid(inst, F(1, 2))
    assert all(b > a for a, b in zip(grid.points, grid.points[1:]))
    assert all(isinstance(p, F) for p in grid.points)


def test_candidate_intervals_full_life():
    inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(1)), Job(2, F(0), F(1), F(1))))
    grid_points = (F(0), F(1), F(2))
    from speedscale.discretize import LandmarkGrid

    grid = LandmarkGrid(grid_points, (False, False, False), F(1))
    assert candidate_intervals(grid, inst.jobs[0]) == [
        (F(0), F(1)),
        (F(0), F(2)),
        (F(1), F(2)),
    ]
    assert candidate_intervals(grid, inst.jobs[1]) == [(F(0), F(1))]


def test_candidate_interval_count_is_choose_two():
    inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)),))
    grid = build_grid(inst, 1)
    g = grid.size
    assert len(candidate_intervals(grid, inst.jobs[0])) == g * (g - 1) // 2


def test_candidates_stay_inside_life():
    inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(1)), Job(2, F(1), F(2), F(1))))
    grid = build_grid(inst, 1)
    for a, b in candidate_intervals(grid, inst.jobs[1]):
        assert F(1) <= a < b <= F(2)


def test_epsilon_must_be_positive():
    inst = generate_gap_family(1)
    with pytest.raises(DomainError):
        build_grid(inst, 0)


def test_refinement_never_increases_optimum():
    # eps=1 gives 2n^2 parts per gap, eps=1/3 gives 4n^2: the finer grid is a superset
    inst = generate_gap_family(2, 2.0)
    coarse = build_grid(inst, 1)
    fine = build_grid(inst, F(1, 3))
    assert set(coarse.points) <= set(fine.points)
    _, e_coarse = brute_force_nonpreemptive(inst, coarse)
    _, e_fine = brute_force_nonpreemptive(inst, fine)
    assert e_fine <= e_coarse + 1e-12


@pytest.mark.parametrize("eps", [1, F(1, 2), F(1, 4)])
def test_landmark_alignment_loses_at_most_the_promised_factor(eps):
    # certified against the closed-form continuous optimum of the gap family
    for n in (1, 2):
        inst = generate_gap_family(n, 2.0)
        grid = build_grid(inst, eps)
        _, aligned = brute_force_nonpreemptive(inst, grid)
        continuous = gap_family_continuous_optimum(n, 2.0)
        assert aligned <= (1 + float(eps)) ** (2.0 - 1.0) * continuous * (1 + 1e-6)
        assert aligned >= continuous - 1e-6


def test_single_job_alignment_factor():
    inst = Instance(3.0, 1, (Job(1, F(0), F(1), F(2)),))
    grid = build_grid(inst, 1)
    _, aligned = brute_force_nonpreemptive(inst, grid)
    continuous = 2.0**3  # full life interval, speed 2
    assert aligned <= (1 + 1) ** 2 * continuous + 1e-9
    assert aligned == pytest.approx(continuous)  # the full interval is on the grid
