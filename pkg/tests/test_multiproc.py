import random
from fractions import Fraction as F

import pytest

from speedscale.discretize import build_grid
from speedscale.errors import DomainError
from speedscale.generators import generate_random
from speedscale.instances import (
    Assignment,
    Instance,
    Job,
    Schedule,
    energy_of_job,
    energy_of_schedule,
    validate_schedule,
)
from speedscale.multiproc import (
    build_heterogeneous_instance,
    cut_at_zone_boundaries,
    edf_reorder,
    greedy_independent_sets,
    schedule_multiproc,
    solve_windows,
    transform_assign_to_processors,
)
from speedscale.oracle import brute_force_nonpreemptive
from speedscale.rounding import good_independent_set


def random_valid_schedule(inst, seed):
    """A random feasible schedule: deadline order, random processors/lengths."""
    rng = random.Random(seed)
    per_proc = {p: [] for p in inst.processor_ids()}
    assignments = []
    for j in sorted(inst.jobs, key=lambda j: (j.deadline, j.id)):
        placed = False
        procs = inst.processor_ids()[:]
        rng.shuffle(procs)
        for p in procs:
            busy = sorted(per_proc[p])
            starts = [j.release] + [e for _, e in busy]
            for c in starts:
                if c < j.release or c >= j.deadline:
                    continue
                nxt = min([s for s, _ in busy if s >= c], default=j.deadline)
                hi = min(nxt, j.deadline)
                if hi > c:
                    length = (hi - c) * F(rng.randint(1, 4), 4)
                    assignments.append(Assignment(j.id, p, c, c + length))
                    per_proc[p].append((c, c + length))
                    placed = True
                    break
            if placed:
                break
        if not placed:
            return None
    return Schedule(tuple(sorted(assignments, key=lambda a: a.job)))


class TestGreedySets:
    def test_m1_matches_single_processor_greedy(self):
        inst = generate_random(5, 1, 2.0, seed=5, horizon=4)
        part = greedy_independent_sets(inst)
        gis = good_independent_set(inst.jobs)
        assert part.sets[0] == gis.members

    def test_disjoint_jobs_all_in_first_set(self):
        inst = Instance(
            2.0, 3, (Job(1, F(0), F(1), F(1)), Job(2, F(2), F(3), F(1)), Job(3, F(4), F(5), F(1)))
        )
        part = greedy_independent_sets(inst)
        assert [[j.id for j in s] for s in part.sets] == [[1, 2, 3], [], []]

    def test_identical_lives_split(self):
        inst = Instance(2.0, 2, (Job(1, F(0), F(1), F(1)), Job(2, F(0), F(1), F(1))))
        part = greedy_independent_sets(inst)
        assert [[j.id for j in s] for s in part.sets] == [[1], [2]]
        assert part.residue == ()

    def test_residue_recorded(self):
        inst = Instance(2.0, 1, tuple(Job(i, F(0), F(1), F(1)) for i in (1, 2, 3)))
        part = greedy_independent_sets(inst)
        assert [j.id for j in part.residue] == [2, 3]


class TestWindows:
    def test_job_inside_zone_keeps_relative_life(self):
        inst = Instance(2.0, 1, (Job(1, F(1), F(3), F(1)), Job(2, F(4), F(6), F(1))))
        part = greedy_independent_sets(inst)
        windowed = build_heterogeneous_instance(inst, part)
        # zones of p1: [1,3] and [3,6]; job 1 fully inside the first
        job = windowed.het.job_by_id(1)
        assert job.life_on("p1.z1") == (F(0), F(2))

    def test_boundary_clipping_formulas(self):
        # zone [t0, t1] = [1, 3]: a job [2, 6] is clipped to [1, 2] relative
        inst = Instance(2.0, 1, (Job(1, F(1), F(3), F(1)), Job(2, F(2), F(6), F(1))))
        part = greedy_independent_sets(inst)
        windowed = build_heterogeneous_instance(inst, part)
        job2 = windowed.het.job_by_id(2)
        assert job2.life_on("p1.z1") == (F(1), F(2))  # max(r-t0,0), min(d-t0, len)
        assert job2.life_on("p1.z2") == (F(0), F(3))

    def test_job_absent_from_dead_zones(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)), Job(2, F(2), F(4), F(1))))
        part = greedy_independent_sets(inst)
        windowed = build_heterogeneous_instance(inst, part)
        job1 = windowed.het.job_by_id(1)
        assert job1.life_on("p1.z2") is None

    def test_single_job_single_window(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(4)),))
        windowed = build_heterogeneous_instance(inst, greedy_independent_sets(inst))
        ws = solve_windows(windowed, "greedy")
        assert len(ws) == 1 and ws[0].durations == {1: F(2)}

    def test_disjoint_jobs_share_window(self):
        inst = Instance(
            2.0, 1, (Job(1, F(0), F(4), F(1)), Job(2, F(1), F(2), F(1)), Job(3, F(2), F(3), F(1)))
        )
        windowed = build_heterogeneous_instance(inst, greedy_independent_sets(inst))
        for strategy in ("lp", "greedy"):
            ws = solve_windows(windowed, strategy)
            assigned = sorted(j for w in ws for j in w.durations)
            assert assigned == [1, 2, 3]
            schedule = edf_reorder(windowed, ws)
            assert validate_schedule(schedule, inst) == []

    def test_strategies_both_feasible_and_reported(self):
        inst = generate_random(5, 2, 2.0, seed=17)
        energies = {}
        for strategy in ("lp", "greedy"):
            schedule, info = schedule_multiproc(inst, strategy)
            assert validate_schedule(schedule, inst) == []
            energies[strategy] = info["energy"]
        assert all(e > 0 for e in energies.values())

    def test_unknown_strategy_rejected(self):
        inst = generate_random(2, 1, 2.0, seed=1)
        windowed = build_heterogeneous_instance(inst, greedy_independent_sets(inst))
        with pytest.raises(DomainError):
            solve_windows(windowed, "magic")


class TestReorder:
    def test_single_job_unchanged(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(4)),))
        windowed = build_heterogeneous_instance(inst, greedy_independent_sets(inst))
        schedule = edf_reorder(windowed, solve_windows(windowed, "lp"))
        a = schedule.assignment_of(1)
        assert (a.start, a.end) == (F(0), F(2))

    def test_equal_windows_deadline_order(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(4), F(2)), Job(2, F(0), F(4), F(1))))
        # force both into one window by hand
        part = greedy_independent_sets(inst)
        windowed = build_heterogeneous_instance(inst, part)
        ws = solve_windows(windowed, "greedy")
        schedule = edf_reorder(windowed, ws)
        assert validate_schedule(schedule, inst) == []
        a1, a2 = schedule.assignment_of(1), schedule.assignment_of(2)
        # both deadlines are 4: ties broken by id, job 1 first
        assert a1.end <= a2.start

    def test_durations_and_energy_preserved(self):
        for seed in range(8):
            inst = generate_random(4, 2, 2.0, seed=seed)
            windowed = build_heterogeneous_instance(inst, greedy_independent_sets(inst))
            ws = solve_windows(windowed, "greedy")
            schedule = edf_reorder(windowed, ws)
            durations = {w: dict(s.durations) for w, s in zip([s.window.pid for s in ws], ws)}
            for s in ws:
                for jid, dur in s.durations.items():
                    a = schedule.assignment_of(jid)
                    assert a.end - a.start == dur
            total = sum(s.energy for s in ws)
            assert energy_of_schedule(schedule, inst) == pytest.approx(total, rel=1e-9)

    def test_preempted_job_merges_without_energy_increase(self):
        # two jobs force preemption of the long one in the preemptive optimum
        inst = Instance(2.0, 1, (Job(1, F(0), F(4), F(2)), Job(2, F(1), F(2), F(2))))
        windowed = build_heterogeneous_instance(inst, greedy_independent_sets(inst))
        ws = solve_windows(windowed, "lp")
        schedule = edf_reorder(windowed, ws)
        assert validate_schedule(schedule, inst) == []
        merged = sum(
            energy_of_job(inst.job_by_id(a.job).work, a.end - a.start, 2.0)
            for a in schedule.assignments
        )
        assert merged <= sum(s.energy for s in ws) * (1 + 1e-9)


class TestEndToEnd:
    def test_m1_single_job(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(4)),))
        schedule, info = schedule_multiproc(inst)
        a = schedule.assignment_of(1)
        assert (a.processor, a.start, a.end) == ("p1", F(0), F(2))
        assert info["energy"] == pytest.approx(8.0)

    def test_always_valid(self):
        for seed in range(10):
            inst = generate_random(1 + seed % 5, 2, 2.0, seed=seed)
            schedule, info = schedule_multiproc(inst)
            assert validate_schedule(schedule, inst) == []
            assert info["ratio"] >= 1 - 1e-9

    def test_equal_work_ratio_under_constant(self):
        for seed in range(10):
            inst = generate_random(2 + seed % 4, 2, 2.0, seed=seed, work_range=(1, 1))
            schedule, info = schedule_multiproc(inst)
            grid = build_grid(inst, F(1, 2))
            _, opt = brute_force_nonpreemptive(inst, grid)
            assert info["energy"] <= 10 * 1.1 * 1.1 * opt * (1 + 1e-9)


class TestTransforms:
    def make_pair(self, seed, n=4, m=2):
        inst = generate_random(n, m, 2.0, seed=seed, horizon=4)
        schedule = random_valid_schedule(inst, seed)
        if schedule is None or validate_schedule(schedule, inst):
            return None
        part = greedy_independent_sets(inst)
        return inst, schedule, [list(s) for s in part.sets]

    def test_already_placed_jobs_untouched(self):
        inst = Instance(2.0, 2, (Job(1, F(0), F(1), F(1)), Job(2, F(2), F(3), F(1))))
        schedule = Schedule(
            (Assignment(1, "p1", F(0), F(1)), Assignment(2, "p2", F(2), F(3)))
        )
        moved = transform_assign_to_processors(schedule, [[inst.jobs[0]], [inst.jobs[1]]], inst)
        assert moved.assignment_of(1) == schedule.assignment_of(1)

    def test_middle_fifth_shrinks_by_exactly_five(self):
        # no partner available: the job drops into its middle fifth, factor 5
        inst = Instance(2.0, 2, (Job(1, F(0), F(5), F(1)),))
        schedule = Schedule((Assignment(1, "p2", F(0), F(5)),))
        moved = transform_assign_to_processors(schedule, [[inst.jobs[0]]], inst)
        a = moved.assignment_of(1)
        assert (a.processor, a.start, a.end) == ("p1", F(2), F(3))
        assert energy_of_job(F(1), F(1), 2.0) == pytest.approx(
            5.0 ** (2.0 - 1.0) * energy_of_job(F(1), F(5), 2.0)
        )

    def test_contained_occupant_triggers_pairing(self):
        # an occupant fully inside the moved job's interval always pairs
        inst = Instance(
            2.0, 2,
            (Job(1, F(0), F(5), F(1)), Job(2, F(0), F(2), F(1)), Job(3, F(3), F(5), F(1))),
        )
        schedule = Schedule(
            (
                Assignment(1, "p2", F(0), F(5)),
                Assignment(2, "p1", F(0), F(2)),
                Assignment(3, "p1", F(3), F(5)),
            )
        )
        moved = transform_assign_to_processors(schedule, [[inst.jobs[0]]], inst)
        a1, a2 = moved.assignment_of(1), moved.assignment_of(2)
        assert a1.processor == "p1"
        # jobs 1 and 2 share the overlap [0,2] back to back at one speed
        assert {a2.start, a1.end} == {F(0), F(2)} and a2.end == a1.start
        assert validate_schedule(moved, inst) == []

    def test_exact_two_fifths_overlap_pairs(self):
        # overlap exactly 2/5 of the shorter interval: inclusive, so case 1
        inst = Instance(2.0, 2, (Job(1, F(0), F(5), F(1)), Job(2, F(3), F(8), F(1))))
        schedule = Schedule(
            (Assignment(1, "p2", F(0), F(5)), Assignment(2, "p1", F(3), F(8)))
        )
        moved = transform_assign_to_processors(schedule, [[inst.jobs[0]]], inst)
        a1, a2 = moved.assignment_of(1), moved.assignment_of(2)
        assert a1.processor == "p1" and a2.processor == "p1"
        # both inside the overlap [3,5]
        assert F(3) <= a1.start and a1.end <= F(5)
        assert F(3) <= a2.start and a2.end <= F(5)

    def test_random_pairs_full_chain(self):
        tested = 0
        for seed in range(60):
            pack = self.make_pair(seed)
            if pack is None:
                continue
            inst, schedule, sub = pack
            s1 = transform_assign_to_processors(schedule, sub, inst)
            s2 = cut_at_zone_boundaries(s1, sub, inst)
            assert validate_schedule(s2, inst) == []
            for i, group in enumerate(sub, start=1):
                for j in group:
                    assert s1.assignment_of(j.id).processor == f"p{i}"
                    assert s2.assignment_of(j.id).processor == f"p{i}"
            alpha = inst.alpha
            wmax = max(j.work for j in inst.jobs)
            wmin = min(j.work for j in inst.jobs)
            bound = (5 / 2) ** (alpha - 1) * float(1 + wmax / wmin) ** alpha
            e0 = energy_of_schedule(schedule, inst)
            e2 = energy_of_schedule(s2, inst)
            assert e2 <= bound * e0 * (1 + 1e-9)
            # each job's energy changes in at most one of the two transforms
            for j in inst.jobs:
                es = [
                    energy_of_job(j.work, s.assignment_of(j.id).end - s.assignment_of(j.id).start, alpha)
                    for s in (schedule, s1, s2)
                ]
                assert es[0] == pytest.approx(es[1], rel=1e-12) or es[1] == pytest.approx(
                    es[2], rel=1e-12
                )
            tested += 1
        assert tested >= 30

    def test_interval_cut_keeps_larger_side(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(3), F(1)), Job(2, F(0), F(1), F(1))))
        schedule = Schedule(
            (Assignment(1, "p1", F(0), F(3)), Assignment(2, "p1", F(0), F(0) + F(1, 100)))
        )
        # manual subpartition put job 2's deadline at 1 as the boundary
        cut = cut_at_zone_boundaries(schedule, [[inst.jobs[1]]], inst)
        a = cut.assignment_of(1)
        assert (a.start, a.end) == (F(1), F(3))

    def test_rejects_dependent_subpartition(self):
        inst = Instance(2.0, 2, (Job(1, F(0), F(2), F(1)), Job(2, F(1), F(3), F(1))))
        schedule = Schedule(
            (Assignment(1, "p1", F(0), F(2)), Assignment(2, "p2", F(2), F(3)))
        )
        with pytest.raises(DomainError):
            transform_assign_to_processors(schedule, [[inst.jobs[0], inst.jobs[1]]], inst)
