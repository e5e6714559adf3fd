import json
import os

import pytest
from hypothesis import given, settings, strategies as st

from symflow import __version__
from symflow import experiments as ex
from symflow.cli import main

SMALL_2D = {"group": {"name": "D_n", "n": 4}, "field": {"builtin": "omega_dihedral", "n": 4},
            "N": 64, "L": 8.0, "dt": 0.02, "t_end": 0.2, "cadence": 2}


def write(path, obj):
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.mark.parametrize("text", ["{not json", json.dumps({"group": "D_n"}), json.dumps([1, 2]),
                                  json.dumps({**SMALL_2D, "field": "no_such_field"}),
                                  json.dumps({**SMALL_2D, "N": "many"})])
def test_malformed_config_exit_2_without_artifacts(tmp_path, capsys, text):
    cfg = write(tmp_path / "run.json", text)
    out = tmp_path / "out" / "series.csv"
    assert main(["simulate2d", "--config", cfg, "--out", str(out), "--report", "--svg"]) == 2
    assert error(capsys)["error"] == "config"
    assert not (tmp_path / "out").exists()


def test_module_error_exit_1_without_artifacts(tmp_path, capsys):
    cfg = write(tmp_path / "run.json", {**SMALL_2D, "dt": 0.03})
    out = tmp_path / "series.csv"
    assert main(["simulate2d", "--config", cfg, "--out", str(out)]) == 1
    assert error(capsys)["error"] == "module"
    assert not out.exists()


def test_simulate2d_byte_identical_with_provenance(tmp_path):
    cfg = write(tmp_path / "run.json", SMALL_2D)
    outs = []
    for k in range(2):
        out = tmp_path / f"s{k}.csv"
        assert main(["simulate2d", "--config", cfg, "--out", str(out), "--report", "--svg"]) == 0
        outs.append([(tmp_path / f"s{k}{suf}").read_bytes() for suf in (".csv", ".json", ".svg")])
    assert outs[0] == outs[1]
    csv_text = outs[0][0].decode()
    assert f"# symflow_version={__version__}" in csv_text
    assert "# config_hash=" in csv_text
    header = [l for l in csv_text.splitlines() if not l.startswith("#")][0].split(",")
    assert header[:5] == ["t", "linf_u", "l2_u", "linf_w", "l2_w"]
    assert {"tail_exponent", "validity"} <= set(header)
    report = json.loads(outs[0][1])
    assert report["symflow_version"] == __version__ and len(report["config_hash"]) == 16
    assert b"config_hash" in outs[0][2]


def test_simulate3d_small(tmp_path):
    cfg = write(tmp_path / "run.json", {"group": "T_d", "field": "bar_a", "N": 16, "L": 5.0, "dt": 0.001,
                                        "t_end": 0.002, "cadence": 1, "moment_order": 2})
    out = tmp_path / "s.csv"
    assert main(["simulate3d", "--config", cfg, "--out", str(out)]) == 0
    header = [l for l in out.read_text().splitlines() if not l.startswith("#")][0].split(",")
    assert {"symmetry_drift", "divergence", "moment_011_3"} <= set(header)


def test_report_and_plot(tmp_path):
    cfg = write(tmp_path / "run.json", SMALL_2D)
    series = tmp_path / "s.csv"
    main(["simulate2d", "--config", cfg, "--out", str(series)])
    rep = tmp_path / "r.json"
    assert main(["report", "--series", str(series), "--group", "D_n", "--n", "4", "--t-min", "0",
                 "--out", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["result"]["dim"] == 2 and data["config_hash"]
    svg = tmp_path / "p.svg"
    assert main(["plot", "--series", str(series), "--out", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")


def test_groups_show_csv(tmp_path):
    out = tmp_path / "el.csv"
    assert main(["groups", "show", "O_h", "--out", str(out)]) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0].split(",") == ["index"] + [f"p{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)] + ["det"]
    assert len(rows) == 49
    assert main(["groups", "show", "Nope"]) == 2


def test_groups_list(capsys):
    assert main(["groups", "list"]) == 0
    text = capsys.readouterr().out
    assert "Y_h,3,120" in text and "D_nh,3,4n" in text


def test_field_pm_divisible_chain(tmp_path, capsys):
    p2 = tmp_path / "p2.json"
    assert main(["pm", "--builtin", "tilde_a", "--m", "2", "--out", str(p2)]) == 0
    capsys.readouterr()
    assert main(["divisible", "--input", str(p2)]) == 0
    assert json.loads(capsys.readouterr().out)["divisible"] is False
    f = tmp_path / "a.json"
    main(["field", "show", "--builtin", "bar_a"])
    f.write_text(json.dumps(json.loads(capsys.readouterr().out)["field"]))
    assert main(["field", "check", "--input", str(f), "--group", "T_d"]) == 0
    assert main(["field", "check", "--input", str(f), "--group", "O_h"]) == 3


def test_invariant_space_cli(capsys):
    assert main(["invariant-space", "--group", "Y", "--degree", "6"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["result"]["dimension"] == 2 and data["result"]["divisible_dimension"] == 1


def test_accept_presets_byte_identical(tmp_path, capsys):
    args = ["--preset", "group-audit", "--preset", "lemma3-audit", "--preset", "section5-constants"]
    for k in range(2):
        assert main(["accept", "--out", str(tmp_path / f"a{k}")] + args) == 0
    files = sorted(os.listdir(tmp_path / "a0"))
    assert files == ["group-audit.json", "lemma3-audit.json", "section5-constants.json", "summary.json"]
    for name in files:
        assert (tmp_path / "a0" / name).read_bytes() == (tmp_path / "a1" / name).read_bytes()
    lines = capsys.readouterr().out.splitlines()
    assert "criterion  4 exact Gaussian constants: pass" in lines


def test_accept_config_tree(tmp_path):
    tree = tmp_path / "configs"
    assert main(["presets", "--out", str(tree)]) == 0
    assert sorted(p[:-5] for p in os.listdir(tree)) == sorted(ex.PRESETS)
    for name in os.listdir(tree):
        if name[:-5] not in ("group-audit", "pm-divisibility"):
            os.remove(tree / name)
    assert main(["accept", "--configs", str(tree), "--out", str(tmp_path / "o")]) == 0
    res = json.loads((tmp_path / "o" / "pm-divisibility.json").read_text())
    assert res["config_hash"] == ex.PRESETS["pm-divisibility"].hash


def test_accept_malformed_tree_exit_2(tmp_path, capsys):
    tree = tmp_path / "configs"
    tree.mkdir()
    write(tree / "good.json", ex.PRESETS["group-audit"].to_dict())
    write(tree / "bad.json", {"kind": "warp-drive"})
    assert main(["accept", "--configs", str(tree), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()
    assert "bad.json" in error(capsys)["message"]


names = st.text("abcdefgh-", min_size=1, max_size=10)
values = st.one_of(st.integers(-5, 5), st.floats(-1, 1, allow_nan=False), names)


@settings(max_examples=40)
@given(st.sampled_from(ex.KINDS), st.dictionaries(names, values, max_size=5), names)
def test_experiment_config_round_trip(kind, params, name):
    c = ex.ExperimentConfig(kind, params, name)
    back = ex.ExperimentConfig.from_json(c.to_json())
    assert back == c and back.hash == c.hash


def test_experiment_config_rejects():
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig("nope")
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig.from_dict({"kind": "lemma3", "extra": 1})
