import csv
import io
import json

import pytest

from numradius import cli

ID_LINF2 = {"command": "v", "space": {"kind": "lp", "p": "inf", "dim": 2}, "operator": [[1, 0], [0, 1]], "seed": 0}


def test_parse_minimal():
    cfg = cli.parse_config(json.dumps(ID_LINF2))
    assert cfg.command == "v" and cfg.operator is not None and cfg.seed == 0


def test_missing_seed_named():
    with pytest.raises(cli.ConfigError) as e:
        cli.parse_config(json.dumps({"command": "probe", "probe": "eta_pp"}))
    assert any(v.startswith("seed") for v in e.value.violations)


def test_unknown_kind_named():
    bad = dict(ID_LINF2, space={"kind": "banana", "dim": 2})
    with pytest.raises(cli.ConfigError) as e:
        cli.parse_config(json.dumps(bad))
    assert any("kind" in v for v in e.value.violations)


def test_malformed_json_reports_line():
    with pytest.raises(cli.ConfigError) as e:
        cli.parse_config('{"command": "v",\n "seed": }')
    assert "line 2" in e.value.violations[0]


def test_v_command(tmp_path, capsys):
    out = tmp_path / "r.json"
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(ID_LINF2))
    assert cli.main(["v", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["result"]["value"]["lo"] == rep["result"]["value"]["hi"] == 1.0
    assert rep["result"]["witnesses"]


def test_counterexample_cli(capsys):
    assert cli.main(["counterexample", "--kind=2dim", "--n=5"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert all(rep["result"]["checks"].values())


def test_counterexample_precondition_exit(capsys):
    assert cli.main(["counterexample", "--kind=2dim", "--n=1"]) == cli.EXIT_USAGE


def test_hypothesis_exit_code(tmp_path):
    cfg = {"command": "correct", "corrector": "hilbert", "eps": 0.1,
           "space": {"kind": "lp", "p": 2, "dim": 2}, "operator": [[1, 0], [0, 0.3]], "x": [0.6, 0.8]}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert cli.main(["correct", "--config", str(p)]) == cli.EXIT_HYPOTHESIS


def test_assertion_exit_code(monkeypatch, capsys):
    from numradius.errors import VerificationError

    def broken(n):
        raise VerificationError("identity violated")

    monkeypatch.setattr(cli.pb, "counterexample_2dim", broken)
    assert cli.main(["counterexample", "--kind=2dim", "--n=5"]) == cli.EXIT_ASSERTION


def test_roundtrip_and_hash(tmp_path):
    cfg = cli.parse_config(ID_LINF2)
    res, rows = cli.run_experiment(cfg)
    rep = cli.build_report(cfg, res, 1.5)
    text = cli.emit_report(rep, rows, "json", str(tmp_path / "a.json"))
    back = json.loads(text)
    assert back == rep
    body = {k: v for k, v in back.items() if k != "meta"}
    assert cli.content_hash(body) == back["meta"]["sha256"]
    # timing does not enter the hash
    assert cli.build_report(cfg, res, 99.0)["meta"]["sha256"] == rep["meta"]["sha256"]


def test_csv_rows_equal_trials(tmp_path):
    cfg = cli.parse_config({"command": "probe", "probe": "eta_oo", "space": {"kind": "lp", "p": "inf", "dim": 2},
                            "operator": [[0.9, 0], [0, 1]], "eps": 0.5, "budget": 8, "seed": 0})
    res, rows = cli.run_experiment(cfg)
    text = cli.render(cli.build_report(cfg, res, 0.0), rows, "csv")
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert len(parsed) == res["trials"]


def test_unsupported_format():
    with pytest.raises(ValueError):
        cli.render({}, [], "xml")
    assert cli.main(["v", "--space", json.dumps(ID_LINF2["space"]), "--operator", "[[1,0],[0,1]]",
                     "--seed", "0", "--format", "xml"]) == cli.EXIT_USAGE


def test_same_config_byte_identical(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"command": "index", "space": {"kind": "lp", "p": 2, "dim": 2}, "seed": 3,
                             "budget": 8}))
    outs = []
    for i in range(2):
        o = tmp_path / f"o{i}.json"
        assert cli.main(["index", "--config", str(p), "--out", str(o), "--deterministic"]) == 0
        outs.append(json.loads(o.read_text()))
    for o in outs:
        del o["meta"]["execution"]
    assert outs[0] == outs[1]


def test_command_mismatch(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(ID_LINF2))
    assert cli.main(["opnorm", "--config", str(p)]) == cli.EXIT_USAGE
