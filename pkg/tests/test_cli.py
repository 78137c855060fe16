import json

import pytest

from henkin_dichotomy.cli import EXIT_BUDGET, EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def dlo_config(tmp_path):
    p = tmp_path / "dlo.json"
    p.write_text(json.dumps({"theory": "dlo", "stage_budget": 30}))
    return str(p)


def test_run_writes_trace(capsys, tmp_path, dlo_config):
    trace = tmp_path / "t.jsonl"
    code, out, _ = run_cli(capsys, "run", "--config", dlo_config, "--trace", str(trace))
    assert code == EXIT_OK
    assert out.splitlines()[0] == "stages\t31"
    assert len(trace.read_text().splitlines()) == 31


def test_resume_matches_fresh(capsys, tmp_path, dlo_config):
    fresh, part, resumed = (tmp_path / n for n in ("a", "b", "c"))
    run_cli(capsys, "run", "--config", dlo_config, "--trace", str(fresh))
    run_cli(capsys, "run", "--config", dlo_config, "--budget", "12", "--trace", str(part))
    code, _, _ = run_cli(capsys, "run", "--config", dlo_config, "--resume", str(part),
                         "--trace", str(resumed))
    assert code == EXIT_OK
    assert resumed.read_bytes() == fresh.read_bytes()


def test_resume_below_trace_is_usage_error(capsys, tmp_path, dlo_config):
    part = tmp_path / "p"
    run_cli(capsys, "run", "--config", dlo_config, "--trace", str(part))
    code, _, err = run_cli(capsys, "run", "--config", dlo_config, "--budget", "5",
                           "--resume", str(part))
    assert code == EXIT_USAGE and "budget" in err


def test_tampered_resume(capsys, tmp_path, dlo_config):
    part = tmp_path / "p"
    run_cli(capsys, "run", "--config", dlo_config, "--budget", "6", "--trace", str(part))
    lines = part.read_text().splitlines()
    rec = json.loads(lines[4])
    rec["delta"] = "(and (rel L (c 0) (c 0)) (= (c 4) (c 4)))"
    lines[4] = json.dumps(rec)
    part.write_text("\n".join(lines) + "\n")
    code, _, _ = run_cli(capsys, "run", "--config", dlo_config, "--resume", str(part))
    assert code == EXIT_FAILURE


def test_decide(capsys):
    code, out, _ = run_cli(capsys, "decide", "--e", "3", "--theory", "dlo")
    stage = int(out.split("\t")[2].split()[1])
    assert code == EXIT_OK and stage <= 16


def test_decide_budget_exhausted(capsys):
    code, _, err = run_cli(capsys, "decide", "--e", "30", "--budget", "10")
    assert code == EXIT_BUDGET and "budget" in err


def test_complete(capsys):
    assert run_cli(capsys, "complete", "--formula", "(rel L (v 0) (v 1))")[1].startswith("COMPLETE")
    code, out, _ = run_cli(capsys, "complete", "--theory", "pair", "--H", "1:3",
                           "--formula", "(rel R 1 (v 0))")
    assert out.startswith("INCOMPLETE") and "RS 1 3" in out


def test_complete_bad_formula(capsys):
    code, _, err = run_cli(capsys, "complete", "--formula", "(rel L (v 0)")
    assert code == EXIT_FAILURE and err


def test_iso(capsys):
    code, out, _ = run_cli(capsys, "iso", "--model-b", '{"kind": "dlo-canonical", "scale": "-1"}',
                           "--count", "10")
    pairs = [tuple(map(int, line.split("\t"))) for line in out.splitlines()]
    assert code == EXIT_OK and len(pairs) == 10
    assert len({a for a, _ in pairs}) == 10


def test_embed(capsys):
    code, out, _ = run_cli(capsys, "embed", "--theory", "pair", "--model-a", "pair-prime",
                           "--model-b", '{"kind": "pair-prime", "extras": 1}', "--count", "6")
    assert code == EXIT_OK and len(out.splitlines()) == 6


def test_theta(capsys):
    spec = '{"kind": "finite", "size": 3, "relations": {"P": [[0]]}}'
    code, out, _ = run_cli(capsys, "theta", "--model", spec, "--n", "3", "--l", "2")
    assert code == EXIT_OK and out.splitlines()[-1] == "verified"
    code, out, _ = run_cli(capsys, "theta", "--model", spec, "--n", "3", "--l", "6", "--cap", "500")
    assert out.splitlines()[-1].startswith("unverified")


def test_counterexample_lemma4(capsys):
    code, out, _ = run_cli(capsys, "counterexample", "lemma4", "--behavior", "formula:7:(rel U 2 (v 0))")
    assert code == EXIT_OK
    assert "l\t7" in out and "U_8 = evens" in out and "not complete for 0" in out
    code, out, _ = run_cli(capsys, "counterexample", "lemma4", "--behavior", "diverges")
    assert "all U_i empty" in out


def test_counterexample_pair(capsys):
    assert run_cli(capsys, "counterexample", "pair", "--H", "4:2", "--i", "4")[1].strip() == "INCOMPLETE"
    assert run_cli(capsys, "counterexample", "pair", "--H", "4:2", "--i", "3")[1].strip() == "COMPLETE"


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == EXIT_USAGE
    assert run_cli(capsys, "counterexample", "pair")[0] == EXIT_USAGE
    assert run_cli(capsys, "complete", "--H", "1:3", "--formula", "(= (v 0) (v 0))")[0] == EXIT_USAGE


def test_missing_config(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", "--config", str(tmp_path / "nope.json"))
    assert code == EXIT_FAILURE and "no such" in err


def test_witness_invalid(capsys, dlo_config):
    code, out, _ = run_cli(capsys, "witness", "--config", dlo_config, "--code", "0")
    assert code == EXIT_OK and out.startswith("INVALID")
