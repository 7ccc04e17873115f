import csv
import json
import os
import pathlib

import pytest

from degenlab.cli import EXIT_CONFIG, EXIT_MODULE, EXIT_OK, config_hash, main, parse_config

CONFIGS = sorted((pathlib.Path(__file__).parent.parent / "configs").glob("*.toml"))

HARDY = 'kind = "hardy"\nseed = 0\n\n[params]\nprofile = "xexp"\np = 2.0\ntheta = 1.0\n'
ENDPOINT = ('kind = "euler-exact"\n\n[params]\nratios = [0.0, 0.0, 0.0]\n'
            'f = [[1.0, 2.0]]\np = 2.0\ntheta = -2.0\n')


def write(tmp_path, text, name="c.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(out):
    with open(os.path.join(out, "results.csv")) as fh:
        return list(csv.DictReader(fh))


def test_hardy_run(tmp_path, capsys):
    out = str(tmp_path / "out")
    assert main(["hardy", "--config", write(tmp_path, HARDY), "--out", out]) == EXIT_OK
    (row,) = read_csv(out)
    assert float(row["lhs"]) == pytest.approx(0.0625, abs=1e-8)
    assert float(row["rhs"]) == pytest.approx(0.25, abs=1e-8)
    assert row["holds"] == "true"
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["config_hash"] == row["config_hash"] and "timestamp" in summary
    assert json.loads(capsys.readouterr().out)["rows"] == 1


def test_theta_sweep_flags(tmp_path):
    out = str(tmp_path / "out")
    cfg = str(pathlib.Path(__file__).parent.parent / "configs" / "theta_sweep.toml")
    assert main(["run", "--config", cfg, "--out", out, "--threads", "2"]) == EXIT_OK
    assert json.load(open(os.path.join(out, "summary.json")))["blowup_flags"] == [-2.0, 0.0]


def test_zero_data_row(tmp_path):
    out = str(tmp_path / "out")
    text = 'kind = "solve-elliptic"\n\n[params]\nlam = 1.0\np = 2.0\ntheta = -1.0\n'
    assert main(["run", "--config", write(tmp_path, text), "--out", out]) == EXIT_OK
    (row,) = read_csv(out)
    assert float(row["lhs"]) == float(row["rhs"]) == float(row["ratio"]) == 0.0


def test_unknown_key(tmp_path, capsys):
    path = write(tmp_path, HARDY + "bogus = 3\n")
    assert main(["validate", path]) == EXIT_CONFIG
    (diag,) = json.loads(capsys.readouterr().out)["diagnostics"]
    assert diag["level"] == "error" and diag["line"] == 8
    assert main(["run", "--config", path]) == EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["diagnostics"][0]["line"] == 8


def test_bad_toml():
    _, diags = parse_config("kind = \n")
    assert diags[0]["field"] == "<toml>"


def test_endpoint_warns_then_fails(tmp_path, capsys):
    path = write(tmp_path, ENDPOINT)
    assert main(["validate", path]) == EXIT_OK
    (diag,) = json.loads(capsys.readouterr().out)["diagnostics"]
    assert diag["level"] == "warning" and diag["field"] == "params.theta" and diag["line"] == 7
    assert main(["run", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_MODULE
    assert json.loads(capsys.readouterr().err)["error"]


def test_kind_mismatch(tmp_path):
    assert main(["theta-sweep", "--config", write(tmp_path, HARDY)]) == EXIT_CONFIG


def test_valid_has_no_diagnostics():
    assert parse_config(HARDY)[1] == []


def test_config_hash_deterministic():
    a, _ = parse_config(HARDY)
    b, _ = parse_config("seed = 0\nkind = \"hardy\"\n[params]\ntheta = 1.0\np = 2.0\n"
                        "profile = \"xexp\"\n")
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(dict(a, seed=1))


def test_json_format_and_seed_override(tmp_path):
    out = str(tmp_path / "out")
    path = write(tmp_path, HARDY)
    assert main(["run", "--config", path, "--out", out, "--format", "json", "--seed", "7"]) == 0
    rows = json.load(open(os.path.join(out, "results.json")))
    assert rows[0]["holds"] is True
    assert json.load(open(os.path.join(out, "summary.json")))["seed"] == 7


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("DEGENLAB_THREADS", "many")
    assert main(["run", "--config", write(tmp_path, HARDY), "--out", str(tmp_path)]) == \
        EXIT_CONFIG
    monkeypatch.setenv("DEGENLAB_THREADS", "2")
    assert main(["run", "--config", write(tmp_path, HARDY), "--out", str(tmp_path)]) == EXIT_OK


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs(cfg, tmp_path, capsys):
    assert main(["validate", str(cfg)]) == EXIT_OK
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "summary.json").exists()
