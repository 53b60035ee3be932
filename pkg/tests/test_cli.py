import io
import json

import pytest

from betalab.cli import COMMANDS, RunConfig, build_parser, merge_config, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def lines(text):
    return [json.loads(s) for s in text.splitlines() if s.strip()]


def test_expand_example():
    code, out, _ = call("expand", "--x", "0.75", "--beta", "1.5", "--n", "4")
    assert code == 0
    (obj,) = lines(out)
    assert obj["digits"] == "1000"
    assert obj["remainder"]["dec"].startswith("0.421875")


def test_omega_example():
    code, out, _ = call("omega", "--x", "1", "--n", "2", "--window", "1.1,1.99")
    assert code == 0
    objs = lines(out)
    assert [o["w"] for o in objs] == ["10", "11"]
    assert objs[0]["lower_is_one"] and objs[1]["full"]


def test_beta_star_example():
    code, out, _ = call("beta-star", "--l", "log:1.442695")
    assert code == 0
    lo, hi = lines(out)[0]["beta_star"]
    assert lo.startswith("2.0000000") and hi.startswith("2.0000000")
    _, out, _ = call("beta-star", "--l", "l:0,0,0")
    assert lines(out)[0]["beta_star"] == "inf"


def test_small_commands():
    _, out, _ = call("star", "--beta", "1.5", "--n", "10")
    assert lines(out)[0]["digits"] == "1010000010"
    _, out, _ = call("admissible", "--w", "11", "--beta", "1.5")
    assert lines(out)[0]["admissible"] is False
    _, out, _ = call("sigma", "--beta", "1.5", "--n", "2")
    assert [o["w"] for o in lines(out)] == ["00", "01", "10"]
    _, out, _ = call("xi", "--beta", "2", "--n", "10", "--counts")
    rep = lines(out)[0]
    assert rep["sigma_count"] == rep["xi_count"] == 1024
    _, out, _ = call("full-check", "--w", "11", "--x", "1")
    assert lines(out)[0]["full"] is True
    _, out, _ = call("full-check", "--w", "10", "--beta", "1.5")
    assert lines(out)[0]["side"] == "shift"
    _, out, _ = call("proportion", "--beta", "1.9", "--lam", "0.02", "--n-range", "7..8")
    objs = lines(out)
    assert objs[0]["premise"]["holds"] and len(objs) == 3
    _, out, _ = call("slice", "--w", "11", "--x", "1", "--target", "0.5", "--radius", "0.25")
    assert not lines(out)[0]["empty"]
    _, out, _ = call("slice-r", "--w", "10", "--beta", "2", "--L", "0,0", "--phi-n", "0.5")
    obj = lines(out)[0]
    assert obj["left_closed"] and obj["upper_ok"]
    code, out, _ = call("structural", "--x", "1", "--n", "2", "--window", "1.1,1.99")
    assert code == 0 and lines(out)[0]["ok"]


def test_exit_codes():
    assert call("expand", "--x", "abc", "--beta", "1.5", "--n", "4")[0] == 2
    assert call("expand", "--x", "0.5", "--beta", "1.5")[0] == 2
    assert call("omega", "--x", "1", "--n", "8", "--window", "1.1,2.9", "--cap", "5")[0] == 3
    assert call("slice-r", "--w", "1", "--beta", "2", "--L", "1,0", "--phi-n", "0.1")[0] == 2
    code, _, err = call("scan-e", "--x", "0.7", "--targets", "0.3", "--phi", "power:1,1", "--window", "1.2,2.2")
    assert code == 2 and "--seed" in err
    assert call("no-such-command")[0] == 2
    assert call("expand", "--bogus", "1")[0] == 2


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_help_lists_flags(name, capsys):
    assert run([name, "--help"]) == 0
    text = capsys.readouterr().out
    assert "--config" in text and "--out" in text and "--format" in text
    if name.startswith("scan"):
        assert "--seed" in text and "default: 500" in text and "default: 16384" in text


def test_config_file_and_override(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"x": "0.75", "beta": "1.5", "n": 2}))
    _, out, _ = call("expand", "--config", str(path))
    assert lines(out)[0]["digits"] == "10"
    _, out, _ = call("expand", "--config", str(path), "--n", "4")
    assert lines(out)[0]["digits"] == "1000"
    assert call("expand", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_run_config_round_trip():
    args = build_parser().parse_args(["scan-r", "--beta", "1.8", "--L", "1,0", "--phi", "power:1,1", "--seed", "4"])
    cfg = merge_config(args)
    again = RunConfig.from_json(json.loads(json.dumps(cfg.to_json())))
    assert again == cfg
    assert cfg.get("samples") == 500 and cfg.get("L") == "1,0"


def test_scan_outputs(tmp_path):
    prefix = str(tmp_path / "run")
    argv = ["scan-r", "--beta", "1.8", "--L", "1,0", "--phi", "power:1,1", "--seed", "42", "--samples", "30", "--n-max", "128"]
    code, out, _ = call(*argv, "--out", prefix)
    assert code == 0
    pointer = lines(out)[0]
    assert pointer["csv"].endswith("run.csv")
    summary = json.loads(open(prefix + ".json").read())
    assert summary["seed"] == 42 and summary["config_hash"] == pointer["config_hash"]
    csv_text = open(prefix + ".csv").read()
    assert csv_text.splitlines()[0].startswith("N,first_hit")
    _, out, _ = call(*argv, "--format", "csv")
    assert out == csv_text
    _, out, _ = call(*argv)
    assert json.loads(out) == summary


def test_out_file_for_enumerations(tmp_path):
    path = tmp_path / "sigma.jsonl"
    code, out, _ = call("sigma", "--beta", "1.5", "--n", "3", "--out", str(path))
    assert code == 0 and out == ""
    assert len(path.read_text().splitlines()) == 5
