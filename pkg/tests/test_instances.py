import json
import random
from fractions import Fraction as F

import pytest

from speedscale.errors import DomainError, ParseError
from speedscale.generators import generate_gap_family, generate_random
from speedscale.instances import (
    Assignment,
    Instance,
    Job,
    Schedule,
    energy_of_job,
    energy_of_schedule,
    rescale_energy,
    validate_schedule,
)
from speedscale.serialize import (
    canonical_json,
    instance_digest,
    parse_instance,
    serialize_instance,
    serialize_schedule,
    parse_schedule,
)


class TestEnergy:
    def test_unit_length(self):
        assert energy_of_job(2, 1, 2.0) == 4.0

    def test_identity_case(self):
        assert energy_of_job(1, 1, 3.0) == 1.0

    def test_direct_evaluation(self):
        assert energy_of_job(3, 2, 2.0) == pytest.approx(4.5)

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            energy_of_job(0, 1, 2.0)
        with pytest.raises(DomainError):
            energy_of_job(1, 0, 2.0)
        with pytest.raises(DomainError):
            energy_of_job(1, 1, 1.0)

    def test_decreasing_and_halving(self):
        rng = random.Random(1)
        for _ in range(50):
            w = F(rng.randint(1, 8), rng.randint(1, 4))
            length = F(rng.randint(1, 8), rng.randint(1, 4))
            alpha = rng.choice([1.5, 2.0, 2.5, 3.0])
            e = energy_of_job(w, length, alpha)
            assert energy_of_job(w, 2 * length, alpha) == pytest.approx(
                e * 2.0 ** (1 - alpha), rel=1e-12
            )
            assert energy_of_job(w, length + F(1, 3), alpha) < e

    def test_convex_in_length(self):
        for a, b in [(F(1), F(2)), (F(1, 2), F(3))]:
            mid = (a + b) / 2
            assert energy_of_job(1, mid, 2.5) <= 0.5 * (
                energy_of_job(1, a, 2.5) + energy_of_job(1, b, 2.5)
            )

    def test_split_half_constant_speed(self):
        # two halves, each half the work: energy unchanged
        whole = energy_of_job(4, 2, 2.5)
        halves = 2 * energy_of_job(2, 1, 2.5)
        assert halves == pytest.approx(whole, rel=1e-12)


class TestRescale:
    def test_halving(self):
        assert rescale_energy(4.0, 2, 1, 2.0) == pytest.approx(8.0)

    def test_identity(self):
        assert rescale_energy(5.0, 3, 3, 2.5) == pytest.approx(5.0)

    def test_stretch(self):
        assert rescale_energy(1.0, 1, 5, 3.0) == pytest.approx(1.0 / 25.0)

    def test_round_trip(self):
        rng = random.Random(2)
        for _ in range(50):
            e = rng.uniform(0.1, 10)
            a, b = F(rng.randint(1, 9)), F(rng.randint(1, 9))
            alpha = rng.uniform(1.1, 4)
            assert rescale_energy(rescale_energy(e, a, b, alpha), b, a, alpha) == pytest.approx(e)

    def test_agrees_with_direct(self):
        e = energy_of_job(3, 2, 2.0)
        assert rescale_energy(e, 2, F(1, 2), 2.0) == pytest.approx(energy_of_job(3, F(1, 2), 2.0))

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            rescale_energy(1.0, 0, 1, 2.0)


class TestScheduleEnergy:
    def test_two_unit_jobs(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)), Job(2, F(1), F(2), F(1))))
        sched = Schedule((Assignment(1, "p1", F(0), F(1)), Assignment(2, "p1", F(1), F(2))))
        assert energy_of_schedule(sched, inst) == pytest.approx(2.0)

    def test_single_job_speed_two(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(4)),))
        sched = Schedule((Assignment(1, "p1", F(0), F(2)),))
        assert energy_of_schedule(sched, inst) == pytest.approx(8.0)

    def test_additivity(self):
        inst = Instance(2.5, 2, (Job(1, F(0), F(2), F(1)), Job(2, F(0), F(2), F(3))))
        sched = Schedule((Assignment(1, "p1", F(0), F(2)), Assignment(2, "p2", F(0), F(2))))
        assert energy_of_schedule(sched, inst) == pytest.approx(
            energy_of_job(1, 2, 2.5) + energy_of_job(3, 2, 2.5)
        )

    def test_invalid_schedule_raises_with_violations(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)), Job(2, F(0), F(1), F(1))))
        sched = Schedule((Assignment(1, "p1", F(0), F(1)), Assignment(2, "p1", F(0), F(1))))
        with pytest.raises(DomainError, match="overlap"):
            energy_of_schedule(sched, inst)


class TestValidate:
    def test_single_job_valid(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(1)),))
        sched = Schedule((Assignment(1, "p1", F(0), F(2)),))
        assert validate_schedule(sched, inst) == []

    def test_overlap_reported(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)), Job(2, F(0), F(1), F(1))))
        sched = Schedule((Assignment(1, "p1", F(0), F(1)), Assignment(2, "p1", F(0), F(1))))
        assert any("overlap" in v for v in validate_schedule(sched, inst))

    def test_life_breach_reported(self):
        inst = Instance(2.0, 1, (Job(1, F(2), F(3), F(1)),))
        sched = Schedule((Assignment(1, "p1", F(1), F(3)),))
        assert any("life" in v for v in validate_schedule(sched, inst))

    def test_touching_intervals_allowed(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(2), F(1)), Job(2, F(0), F(2), F(1))))
        sched = Schedule((Assignment(1, "p1", F(0), F(1)), Assignment(2, "p1", F(1), F(2))))
        assert validate_schedule(sched, inst) == []

    def test_missing_job_reported(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(1), F(1)), Job(2, F(1), F(2), F(1))))
        sched = Schedule((Assignment(1, "p1", F(0), F(1)),))
        assert any("not scheduled" in v for v in validate_schedule(sched, inst))

    def test_single_pool_depth(self):
        inst = Instance(2.0, 2, tuple(Job(i, F(0), F(1), F(1)) for i in (1, 2, 3)))
        pooled = Schedule(tuple(Assignment(i, None, F(0), F(1)) for i in (1, 2, 3)))
        assert any("overlap" in v for v in validate_schedule(pooled, inst))
        ok = Schedule(
            (
                Assignment(1, None, F(0), F(1)),
                Assignment(2, None, F(0), F(1)),
                Assignment(3, None, F(0), F(0) + F(1, 2)),
            )
        )
        # three intervals, but only after t=1/2 do just two overlap
        assert any("overlap" in v for v in validate_schedule(ok, inst))


class TestSerialize:
    def test_minimal_round_trip(self):
        doc = {
            "alpha": 2.0,
            "processors": 1,
            "jobs": [{"id": 1, "release": 0, "deadline": 3, "work": 2}],
        }
        inst = parse_instance(json.dumps(doc))
        assert isinstance(inst, Instance) and inst.n == 1
        assert serialize_instance(inst) == doc

    def test_alpha_at_most_one_rejected(self):
        doc = {"alpha": 1.0, "processors": 1, "jobs": []}
        with pytest.raises(ParseError, match="alpha"):
            parse_instance(doc)

    def test_field_paths_in_errors(self):
        doc = {
            "alpha": 2.0,
            "processors": 1,
            "jobs": [{"id": 1, "release": 3, "deadline": 1, "work": 1}],
        }
        with pytest.raises(ParseError) as err:
            parse_instance(doc)
        assert "jobs[0]" in str(err.value)

    def test_nonpositive_work_rejected(self):
        doc = {
            "alpha": 2.0,
            "processors": 1,
            "jobs": [{"id": 1, "release": 0, "deadline": 1, "work": 0}],
        }
        with pytest.raises(ParseError, match="work"):
            parse_instance(doc)

    def test_heterogeneous_round_trip(self):
        doc = {
            "alpha": 2.0,
            "processors": [{"id": "p1", "alpha": 2.0}, {"id": "p2", "alpha": 2.0}],
            "jobs": [
                {
                    "id": 1,
                    "release": 0,
                    "deadline": 3,
                    "work_per_processor": {"p1": 1, "p2": 4},
                    "life_per_processor": {"p1": [0, 3]},
                }
            ],
        }
        inst = parse_instance(doc)
        assert serialize_instance(inst) == doc
        assert inst.jobs[0].work_on("p2") == 4
        assert inst.jobs[0].life_on("p2") == (0, 3)

    def test_hardness_generator_output_parses(self):
        from speedscale.hardness import planted_instance, reduce_f

        artifacts = reduce_f(planted_instance(1, seed=0, extra_triples=0), 2.0)
        doc = serialize_instance(artifacts.instance)
        works = {w for j in doc["jobs"] for w in j["work_per_processor"].values()}
        assert works == {1, 3, 4}
        again = parse_instance(canonical_json(doc))
        assert serialize_instance(again) == doc

    def test_rational_encoding(self):
        inst = Instance(2.0, 1, (Job(1, F(0), F(3, 2), F(1, 3)),))
        doc = serialize_instance(inst)
        assert doc["jobs"][0]["deadline"] == "3/2"
        assert doc["jobs"][0]["work"] == "1/3"
        assert parse_instance(doc).jobs[0].work == F(1, 3)

    def test_schedule_round_trip(self):
        sched = Schedule((Assignment(1, "p1", F(0), F(3, 2)),))
        doc = serialize_schedule(sched, 4.0)
        assert doc["energy"] == 4.0
        assert parse_schedule(doc) == sched

    def test_digest_stable(self):
        a = generate_random(3, 1, 2.0, seed=4)
        b = generate_random(3, 1, 2.0, seed=4)
        assert instance_digest(a) == instance_digest(b)


class TestGenerators:
    def test_gap_family_small(self):
        inst = generate_gap_family(1, 2.0)
        assert inst.n == 2

    def test_gap_family_layout(self):
        inst = generate_gap_family(4, 2.0)
        smalls = [j for j in inst.jobs if j.work == 1]
        assert [(j.release, j.deadline) for j in smalls] == [(0, 1), (1, 2), (2, 3), (3, 4)]
        big = inst.jobs[-1]
        assert (big.release, big.deadline, big.work) == (0, 4, 4)

    def test_gap_family_lower_bound_constant(self):
        # the straddling argument forces at least 2*((n+2)/2)**alpha
        assert 2 * ((4 + 2) / 2) ** 2 == 18

    def test_gap_family_rejects_zero(self):
        with pytest.raises(DomainError):
            generate_gap_family(0)

    def test_random_deterministic(self):
        a = generate_random(3, 1, 2.0, seed=7)
        b = generate_random(3, 1, 2.0, seed=7)
        assert a == b

    def test_random_equal_work_regime(self):
        inst = generate_random(5, 2, 2.0, seed=3, work_range=(1, 1))
        assert {j.work for j in inst.jobs} == {1}

    def test_random_round_trip(self):
        inst = generate_random(5, 2, 2.0, seed=1)
        assert parse_instance(serialize_instance(inst)) == inst

    def test_random_lives_inside_horizon(self):
        inst = generate_random(20, 1, 2.0, seed=9, horizon=4)
        for j in inst.jobs:
            assert 0 <= j.release < j.deadline <= 4
