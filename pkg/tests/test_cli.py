import json

import pytest

from speedscale.cli import main


@pytest.fixture()
def one_job(tmp_path):
    path = tmp_path / "one.json"
    path.write_text(
        json.dumps(
            {
                "alpha": 2.0,
                "processors": 1,
                "jobs": [{"id": 1, "release": 0, "deadline": 2, "work": 4}],
            }
        )
    )
    return str(path)


@pytest.fixture()
def tdm_file(tmp_path):
    path = tmp_path / "tdm.json"
    path.write_text(json.dumps({"q": 1, "triples": [["a1", "b1", "c1"]]}))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def test_solve_writes_schedule(capsys, one_job):
    code, out = run(capsys, ["solve", "-i", one_job, "--epsilon", "1"])
    assert code == 0
    body = json.loads(out)
    assert body["schedule"]["assignments"][0]["job"] == 1
    assert body["report"]["command"] == "solve"


def test_lp_solve_subcommand(capsys, one_job):
    code, out = run(capsys, ["lp", "solve", "-i", one_job, "--epsilon", "1"])
    assert code == 0
    assert json.loads(out)["lp_value"] == pytest.approx(8.0)


def test_round_subcommand(capsys, one_job):
    code, out = run(capsys, ["round", "-i", one_job, "--epsilon", "1"])
    assert code == 0
    assert json.loads(out)["stages"]["ratio"] <= 12.0


def test_oracle_subcommands(capsys, one_job):
    code, out = run(capsys, ["oracle", "yds", "-i", one_job])
    assert code == 0 and json.loads(out)["energy"] == pytest.approx(8.0)
    code, out = run(capsys, ["oracle", "brute", "-i", one_job, "--epsilon", "1"])
    assert code == 0 and json.loads(out)["schedule"]["energy"] == pytest.approx(8.0)


def test_discretize_dump(capsys, one_job):
    code, out = run(capsys, ["discretize", "-i", one_job, "--epsilon", "1", "--dump"])
    assert code == 0
    points = json.loads(out)
    assert points[0] == 0 and points[-1] == 2


def test_gap_experiment_csv(capsys):
    code, out = run(capsys, ["gap-experiment", "--ns", "2", "--alpha", "2"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("n,")
    assert lines[1].startswith("2,")


def test_reduce_and_check_gap(capsys, tmp_path, tdm_file):
    code, out = run(capsys, ["reduce-3dm", "--input", tdm_file])
    assert code == 0
    reduced = json.loads(out)
    inst_path = tmp_path / "reduced.json"
    inst_path.write_text(json.dumps(reduced["instance"]))
    code, out = run(capsys, ["oracle", "brute", "-i", str(inst_path)])
    assert code == 0
    sched_path = tmp_path / "sched.json"
    sched_path.write_text(json.dumps(json.loads(out)["schedule"]))
    code, out = run(capsys, ["check-gap", "--tdm", tdm_file, "--schedule", str(sched_path)])
    assert code == 0
    assert json.loads(out)["holds"] is True


def test_bench_over_corpus(capsys, tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for seed in (1, 2):
        code, _ = main(
            ["gen", "random", "--n", "2", "--seed", str(seed),
             "--out", str(corpus / f"r{seed}.json")]
        ), None
    code, out = run(capsys, ["bench", "--corpus", str(corpus), "--epsilon", "1"])
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 3  # header + 2 rows
    assert all(line.split(",")[7] and float(line.split(",")[7]) >= 1.0 for line in lines[1:])


def test_gen_outputs_round_trip(capsys):
    code, out = run(capsys, ["gen", "gap-family", "--n", "2"])
    assert code == 0
    doc = json.loads(out)
    assert len(doc["jobs"]) == 3


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(
        json.dumps(
            {
                "alpha": 2.0,
                "processors": 1,
                "jobs": [{"id": 1, "release": 3, "deadline": 1, "work": 1}],
            }
        )
    )
    with pytest.raises(SystemExit) as err:
        main(["solve", "-i", str(bad)])
    assert err.value.code == 1


def test_missing_file_exit_code(capsys):
    with pytest.raises(SystemExit) as err:
        main(["solve", "-i", "/nonexistent/path.json"])
    assert err.value.code == 1


def test_out_flag_writes_file(capsys, one_job, tmp_path):
    target = tmp_path / "result.json"
    code, out = run(capsys, ["oracle", "yds", "-i", one_job, "--out", str(target)])
    assert code == 0
    assert json.loads(target.read_text())["energy"] == pytest.approx(8.0)
