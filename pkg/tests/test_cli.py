import json

import pytest

from impulsekit.cli import main, run

BUNDLED = ["example1", "example1_revisited", "example2_pipeline",
           "example2_majorant"]


def run_job(tmp_path, payload, *extra):
    job = tmp_path / "job.json"
    job.write_text(json.dumps(payload))
    return run(["--job", str(job), "--out-dir", str(tmp_path / "out"),
                "--quiet", *extra])


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_jobs_succeed(tmp_path, name):
    code = run(["--job", "bundled:" + name, "--out-dir", str(tmp_path),
                "--quiet"])
    assert code == 0
    artifacts = list(tmp_path.iterdir())
    assert artifacts
    for path in artifacts:
        if path.suffix == ".json":
            json.loads(path.read_text())  # every artifact is valid JSON


def test_reruns_are_byte_identical(tmp_path):
    for name in BUNDLED:
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert run(["--job", "bundled:" + name, "--out-dir", str(out),
                        "--quiet"]) == 0
        for pa in sorted(a.iterdir()):
            assert pa.read_bytes() == (b / pa.name).read_bytes()


def test_pipeline_report_content(tmp_path):
    run(["--job", "bundled:example2_pipeline", "--out-dir", str(tmp_path),
         "--quiet"])
    report = json.loads((tmp_path / "example2_report.json").read_text())
    assert report["status"] == "iss-certified"
    assert report["audit"]["flow"]["counterexamples"] == []
    assert report["audit"]["jump"]["counterexamples"] == []
    assert report["dwell"]["classification"] == "contractive"


def test_divergent_verdict_still_exits_zero(tmp_path):
    code = run(["--job", "bundled:example2_majorant", "--out-dir",
                str(tmp_path), "--quiet"])
    assert code == 0
    blob = json.loads((tmp_path / "example2_majorant_dwell.json").read_text())
    assert blob["verdict"]["classification"] == "divergent"


def test_missing_argument_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    assert "--job" in capsys.readouterr().err


def test_unreadable_job_file(tmp_path):
    assert run(["--job", str(tmp_path / "nope.json"),
                "--out-dir", str(tmp_path)]) == 2
    assert run(["--job", "bundled:nope", "--out-dir", str(tmp_path)]) == 2


def test_invalid_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["--job", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_schema_violations_exit_3(tmp_path, capsys):
    assert run_job(tmp_path, {"systems": [], "tasks": []}) == 3

    payload = {"systems": {"sys": {"n": 1, "m": 0, "flow": ["-x1"]}},
               "tasks": [{"kind": "simulate", "system": "ghost",
                          "x0": [1.0], "T": 1.0, "out": "a.json"}]}
    assert run_job(tmp_path, payload) == 3
    assert "ghost" in capsys.readouterr().err

    payload["tasks"] = [{"kind": "warp", "out": "a.json"}]
    assert run_job(tmp_path, payload) == 3

    payload["tasks"] = [{"kind": "simulate", "system": "sys", "x0": [1.0],
                         "T": 1.0}]
    assert run_job(tmp_path, payload) == 3

    payload["tasks"] = [
        {"kind": "simulate", "system": "sys", "x0": [1.0], "T": 1.0,
         "out": "same.json"},
        {"kind": "simulate", "system": "sys", "x0": [2.0], "T": 1.0,
         "out": "same.json"},
    ]
    assert run_job(tmp_path, payload) == 3
    assert "collision" in capsys.readouterr().err


def test_missing_key_is_reported(tmp_path, capsys):
    payload = {"systems": {"sys": {"n": 1}}, "tasks": []}
    assert run_job(tmp_path, payload) == 3
    err = capsys.readouterr().err
    assert "missing required key" in err
    assert "flow" in err


def test_certificate_type_mismatch(tmp_path):
    payload = {
        "systems": {"sys": {"n": 1, "m": 0, "flow": ["-x1"]}},
        "certificates": {"sub": {"type": "subsystem", "V": "abs(x1)", "n": 1,
                                 "c": 1.0, "d_hat": -0.5,
                                 "gain_internal": 0.5}},
        "tasks": [{"kind": "certify", "system": "sys", "certificate": "sub",
                   "region": {"X": 1.0}, "out": "r.json"}],
    }
    assert run_job(tmp_path, payload) == 3


def test_failing_task_exits_1_and_writes_error_artifact(tmp_path, capsys):
    payload = {"systems": {"sys": {"n": 1, "m": 0, "flow": ["x1*x1"]}},
               "tasks": [{"kind": "simulate", "system": "sys", "x0": [10.0],
                          "T": 5.0, "dt": 0.001, "out": "blow.json"}]}
    assert run_job(tmp_path, payload) == 1
    blob = json.loads((tmp_path / "out" / "blow.json").read_text())
    assert set(blob) == {"error", "task", "kind"}
    assert "flow integration failed" in blob["error"]


def test_sampled_dwell_respects_seed(tmp_path):
    payload = {"tasks": [{
        "kind": "dwell",
        "d": [-0.5, -0.9], "c": 1.0, "lambda": 0.3, "T": 30.0,
        "mu": 2.0, "sample": {"intensity": 0.4},
        "out": "sampled.json",
    }]}
    job = tmp_path / "job.json"
    job.write_text(json.dumps(payload))

    def artifact(out, seed):
        assert run(["--job", str(job), "--out-dir", str(out),
                    "--seed", str(seed), "--quiet"]) == 0
        return (out / "sampled.json").read_bytes()

    first = artifact(tmp_path / "s7a", 7)
    again = artifact(tmp_path / "s7b", 7)
    other = artifact(tmp_path / "s8", 8)
    assert first == again
    assert first != other
    blob = json.loads(first)
    assert blob["seed"] == 7
    assert blob["check"]["passed"] is True
    assert len(blob["sampled"]) == 2


def test_progress_lines_unless_quiet(tmp_path, capsys):
    run(["--job", "bundled:example1", "--out-dir", str(tmp_path / "loud")])
    assert "task 1 (simulate)" in capsys.readouterr().out
    run(["--job", "bundled:example1", "--out-dir", str(tmp_path / "hush"),
         "--quiet"])
    assert capsys.readouterr().out == ""


def test_constant_expressions_allowed_for_numbers(tmp_path):
    payload = {"tasks": [{
        "kind": "dwell",
        "sequences": [{"kind": "periodic", "start": 1.0, "period": 2.0},
                      {"kind": "periodic", "start": 2.0, "period": 2.0}],
        "d": ["0-ln(2)", "0-ln(0.6)"],
        "c": 0.2, "lambda": 0.1, "T": 100.0, "mu": "ln(2)",
        "out": "dwell.json",
    }]}
    assert run_job(tmp_path, payload) == 0
    blob = json.loads((tmp_path / "out" / "dwell.json").read_text())
    assert blob["check"]["passed"] is True
