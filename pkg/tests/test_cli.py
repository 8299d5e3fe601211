import json
import os

import pytest

from formation_sim.cli import CSV_HEADER, run_cli

FAST_OVERRIDES = """\
[schedule]
path_length = 0.8
"""


def write_config(tmp_path, text, name="overrides.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(args):
    return run_cli(args)


def test_comp1_writes_all_artifacts(tmp_path):
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    out = tmp_path / "out"
    assert run(["--group", "comp1", "--config", cfg, "--out", str(out),
                "--seed", "42", "--runs", "3"]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "manifest_comp1.json",
        "summary_comp1.json",
        "trace_comp1_v0.05.csv",
        "trace_comp1_v0.1.csv",
        "trace_comp1_v0.2.csv",
    ]
    csv = (out / "trace_comp1_v0.1.csv").read_text().splitlines()
    assert csv[0] == CSV_HEADER
    first = csv[1].split(",")
    assert first[:3] == ["0", "0", "1"]
    assert first[8] in ("0", "1")
    # 3 runs x cycles x 3 slaves data rows
    n_cycles = json.loads((out / "summary_comp1.json").read_text())["configs"][1][
        "config"
    ]["total_cycles"]
    assert len(csv) == 1 + 3 * n_cycles * 3


def test_float_formatting_nine_significant_digits(tmp_path):
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    out = tmp_path / "out"
    run(["--group", "comp1", "--config", cfg, "--out", str(out), "--runs", "2"])
    rows = (out / "trace_comp1_v0.1.csv").read_text().splitlines()[1:]
    for row in rows[:50]:
        for field in row.split(",")[3:8]:
            mantissa = field.lstrip("-").split("e")[0].replace(".", "")
            assert len(mantissa.lstrip("0")) <= 9


def test_identical_invocations_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = ["--group", "comp1", "--config", cfg, "--seed", "42", "--runs", "3"]
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    for name in ("trace_comp1_v0.05.csv", "trace_comp1_v0.1.csv",
                 "trace_comp1_v0.2.csv", "summary_comp1.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    # manifests differ at most in the generated_at key
    m1 = json.loads((out1 / "manifest_comp1.json").read_text())
    m2 = json.loads((out2 / "manifest_comp1.json").read_text())
    m1.pop("generated_at")
    m2.pop("generated_at")
    assert m1 == m2


def test_parallelism_does_not_change_outputs(tmp_path):
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    out1, out2 = tmp_path / "p1", tmp_path / "p4"
    base = ["--group", "rob1", "--config", cfg, "--seed", "7", "--runs", "4"]
    assert run(base + ["--out", str(out1), "--parallelism", "1"]) == 0
    assert run(base + ["--out", str(out2), "--parallelism", "4"]) == 0
    for p in sorted(out1.iterdir()):
        if p.suffix == ".csv":
            assert p.read_bytes() == (out2 / p.name).read_bytes()


def test_rob2_summary_records_assumed_perfect_delivery(tmp_path):
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    out = tmp_path / "out"
    assert run(["--group", "rob2", "--config", cfg, "--out", str(out),
                "--runs", "2"]) == 0
    summary = json.loads((out / "summary_rob2.json").read_text())
    assert len(summary["configs"]) == 3
    for entry in summary["configs"]:
        assert entry["config"]["p_assumed"] == 1.0
    assert [e["config"]["p_true"] for e in summary["configs"]] == [0.9, 0.7, 0.5]


def test_summary_schema_keys(tmp_path):
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    out = tmp_path / "out"
    run(["--group", "comp2", "--config", cfg, "--out", str(out), "--runs", "2"])
    summary = json.loads((out / "summary_comp2.json").read_text())
    entry = summary["configs"][0]
    assert set(entry) == {
        "config",
        "max_abs_pos_err_m",
        "max_abs_ang_err_deg",
        "selected_cycles",
        "samples",
        "means",
    }
    for cyc, by_slave in entry["samples"].items():
        assert int(cyc) in entry["selected_cycles"]
        for slave, metrics in by_slave.items():
            assert len(metrics["pos_err_m"]) == 2
            assert len(metrics["ang_err_deg"]) == 2


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "[dem]\nrho_typo = 1.0\n")
    assert run(["--group", "comp1", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "rho_typo" in capsys.readouterr().err


def test_bad_config_value_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "[noise]\nenabled = maybe\n")
    assert run(["--group", "comp1", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "enabled" in capsys.readouterr().err


def test_swept_key_override_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "[schedule]\nv = 0.3\n")
    assert run(["--group", "comp1", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "v" in err and "comp1" in err


def test_missing_group_exits_2(capsys):
    assert run([]) == 2
    assert "group" in capsys.readouterr().err


def test_unwritable_out_dir_exits_3(tmp_path, capsys):
    blocker = tmp_path / "blocked"
    blocker.write_text("")  # a file where the directory should go
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    assert run(["--group", "comp1", "--config", cfg, "--out", str(blocker)]) == 3
    assert "not writable" in capsys.readouterr().err


def test_env_seed_fallback(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    out1, out2 = tmp_path / "e1", tmp_path / "e2"
    monkeypatch.setenv("FORMATION_SIM_SEED", "42")
    assert run(["--group", "comp1", "--config", cfg, "--out", str(out1),
                "--runs", "2"]) == 0
    monkeypatch.delenv("FORMATION_SIM_SEED")
    assert run(["--group", "comp1", "--config", cfg, "--out", str(out2),
                "--seed", "42", "--runs", "2"]) == 0
    assert (out1 / "trace_comp1_v0.1.csv").read_bytes() == (
        out2 / "trace_comp1_v0.1.csv"
    ).read_bytes()


def test_env_seed_invalid_exits_2(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    monkeypatch.setenv("FORMATION_SIM_SEED", "forty-two")
    assert run(["--group", "comp1", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "FORMATION_SIM_SEED" in capsys.readouterr().err


def test_flag_overrides_file_seed(tmp_path):
    cfg = write_config(tmp_path, FAST_OVERRIDES + "[run]\nseed = 1\nruns = 2\n")
    out1, out2 = tmp_path / "f1", tmp_path / "f2"
    assert run(["--group", "comp1", "--config", cfg, "--out", str(out1),
                "--seed", "42"]) == 0
    assert run(["--group", "comp1", "--config", cfg, "--out", str(out2),
                "--seed", "42"]) == 0
    m = json.loads((out1 / "manifest_comp1.json").read_text())
    assert m["seed"] == 42
    assert m["runs"] == 2


def test_custom_group_from_config_file(tmp_path):
    cfg = write_config(
        tmp_path,
        """\
[schedule]
v = 0.12
T = 0.1
path_length = 0.6
shape = straight
[link]
p_true = 0.8
[dem]
p_assumed = 0.8
[run]
runs = 2
""",
    )
    out = tmp_path / "out"
    assert run(["--config", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "summary_custom.json").read_text())
    entry = summary["configs"][0]["config"]
    assert entry["label"] == "custom"
    assert entry["v_m"] == 0.12
    assert entry["p_true"] == 0.8


def test_baseline_controller_flag(tmp_path):
    cfg = write_config(tmp_path, FAST_OVERRIDES)
    out = tmp_path / "out"
    assert run(["--group", "comp1", "--config", cfg, "--out", str(out),
                "--runs", "2", "--controller", "baseline"]) == 0
    manifest = json.loads((out / "manifest_comp1.json").read_text())
    assert manifest["controller"] == "baseline"
    assert all(c["controller"] == "baseline" for c in manifest["configs"])


def test_explicit_selected_cycles_override(tmp_path):
    cfg = write_config(
        tmp_path, FAST_OVERRIDES + "[metrics]\nselected_cycles = 10, 30\n"
    )
    out = tmp_path / "out"
    assert run(["--group", "comp2", "--config", cfg, "--out", str(out),
                "--runs", "2"]) == 0
    summary = json.loads((out / "summary_comp2.json").read_text())
    for entry in summary["configs"]:
        assert entry["selected_cycles"] == [10, 30]
        assert set(entry["samples"]) == {"10", "30"}


def test_out_of_range_selected_cycles_exits_2(tmp_path, capsys):
    cfg = write_config(
        tmp_path, FAST_OVERRIDES + "[metrics]\nselected_cycles = 100000\n"
    )
    assert run(["--group", "comp1", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "selected_cycles" in capsys.readouterr().err
