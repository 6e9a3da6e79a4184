"""CLI tests: config merging, subcommand contracts, exit semantics."""

import csv
import json
import math

import pytest

from chainlab.cli import UsageError, build_parser, load_config, main, parse_s_grid


def run_cli(*argv):
    return main(list(argv))


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_parse_s_grid():
    grid = parse_s_grid("0.04:0.12:5")
    assert len(grid) == 5
    assert abs(grid[0] - 0.04) <= 1e-15
    assert abs(grid[-1] - 0.12) <= 1e-15
    assert parse_s_grid("0.1:0.1:1") == (0.1,)
    for bad in ("0.1:0.2", "a:b:c", "0.2:0.1:3", "0.1:0.2:0"):
        with pytest.raises(UsageError):
            parse_s_grid(bad)


def test_load_config_merges_file_and_flags(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"a": 0.25, "modes": 6, "s_grid": [0.05, 0.1],
                               "xi": [[0.0, 1.0]]}))
    parser = build_parser()
    args = parser.parse_args(["chain", "--config", str(cfg), "--a", "0.5",
                              "--moments", "12"])
    config = load_config(args)
    assert config.a == 0.5          # flag wins over file
    assert config.modes == 6        # file wins over default
    assert config.max_moment == 12
    assert config.s_grid == (0.05, 0.1)
    assert config.xi == (1j,)
    assert config.a_values == (0.5,)


def test_load_config_rejects_bad_input(tmp_path):
    parser = build_parser()
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"unknown_key": 1}))
    with pytest.raises(UsageError):
        load_config(parser.parse_args(["chain", "--config", str(cfg)]))
    cfg.write_text("[1, 2]")
    with pytest.raises(UsageError):
        load_config(parser.parse_args(["chain", "--config", str(cfg)]))
    with pytest.raises(UsageError):
        load_config(parser.parse_args(["chain", "--tol", "0.5"]))
    with pytest.raises(UsageError):
        load_config(parser.parse_args(["chain", "--s-grid", "0.5:0.9:3"]))


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        run_cli("bogus")
    assert err.value.code == 2


def test_verify_disc_deterministic(tmp_path):
    out1 = tmp_path / "one"
    out2 = tmp_path / "two"
    assert run_cli("verify-disc", "--out", str(out1)) == 0
    assert run_cli("verify-disc", "--out", str(out2)) == 0
    b1 = (out1 / "verify_disc.json").read_bytes()
    assert b1 == (out2 / "verify_disc.json").read_bytes()
    doc = json.loads(b1)
    assert doc["pass"] is True
    assert doc["attachment_defect"] <= 1e-14


def test_truncation_gap_command(tmp_path):
    assert run_cli("truncation-gap", "--a", "0.5", "--out", str(tmp_path)) == 0
    doc = read_json(tmp_path / "truncation_gap.json")
    assert doc["slope"] >= 6.5
    assert doc["pass"] is True
    assert doc["surface"]["a"] == 0.5


def test_sphere_oracle_command(tmp_path):
    out1 = tmp_path / "one"
    out2 = tmp_path / "two"
    assert run_cli("sphere-oracle", "--samples", "65",
                   "--out", str(out1)) == 0
    assert run_cli("sphere-oracle", "--samples", "65",
                   "--out", str(out2)) == 0
    b1 = (out1 / "sphere_oracle.json").read_bytes()
    assert b1 == (out2 / "sphere_oracle.json").read_bytes()
    doc = json.loads(b1)
    assert doc["pass"] is True
    assert doc["max_sup_error"] <= 1e-8
    assert doc["z2_const_error"] <= 1e-12
    labels = [case["case"] for case in doc["cases"]]
    assert "vertical" in labels
    assert sum(1 for name in labels if name.startswith("random_")) == 20


def test_chain_command_writes_csv_and_summary(tmp_path):
    assert run_cli("chain", "--a", "0", "--s-grid", "0.08:0.1:2",
                   "--samples", "129", "--out", str(tmp_path)) == 0
    doc = read_json(tmp_path / "chain_scan.json")
    assert doc["pass"] is True
    assert len(doc["entries"]) == 2
    for entry in doc["entries"]:
        assert entry["error"] is None
        assert abs(entry["T_s"] - 2 * math.pi) <= 1e-9  # spherical family
        assert entry["max_H_drift"] <= 1e-10
        csv_path = tmp_path / entry["csv"]
        with open(csv_path, newline="") as fh:
            header = next(csv.reader(fh))
        assert header == ["t", "x0", "y1", "re_z2", "im_z2",
                          "p_x0", "p_y1", "p_x2", "p_y2", "H_residual"]


def test_chain_malformed_surface_exits_2(tmp_path):
    surf = tmp_path / "surface.json"
    surf.write_text("{not json")
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"surface": str(surf)}))
    assert run_cli("chain", "--config", str(cfg), "--out", str(tmp_path)) == 2
    # structurally valid JSON that is not a surface also exits 2
    surf.write_text(json.dumps({"eta": []}))
    assert run_cli("chain", "--config", str(cfg), "--out", str(tmp_path)) == 2


def test_chain_surface_json_round_trip(tmp_path):
    surf = tmp_path / "surface.json"
    surf.write_text(json.dumps({"a": 0.5, "eta": [],
                                "delta": [[4, 3, 0.05, 0.02],
                                          [3, 4, 0.05, -0.02]]}))
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"surface": str(surf)}))
    assert run_cli("chain", "--config", str(cfg), "--s-grid", "0.1:0.1:1",
                   "--samples", "129", "--out", str(tmp_path)) == 0
    doc = read_json(tmp_path / "chain_scan.json")
    assert doc["surface"]["a"] == 0.5
    assert len(doc["surface"]["delta"]) == 2


def test_asym_command(tmp_path):
    assert run_cli("asym", "--a", "0", "--samples", "257",
                   "--out", str(tmp_path)) == 0
    doc = read_json(tmp_path / "asym.json")
    assert doc["pass"] is True
    c3 = complex(doc["c3"][0], doc["c3"][1])
    assert abs(c3) <= 1e-6
    assert "period_slope" in doc
    assert len(doc["per_s"]) == 5


def test_obstruction_below_noise_floor_exits_1(tmp_path):
    # a tiny coefficient leaves every residual inside the noise floor:
    # the scan reports it and the documented thresholds fail
    assert run_cli("obstruction", "--a", "1e-6", "--samples", "256",
                   "--out", str(tmp_path)) == 1
    doc = read_json(tmp_path / "obstruction.json")
    assert doc["pass"] is False
    assert doc["warnings"]
    run = doc["runs"][0]
    assert not all(run["usable"])


def test_usage_errors_exit_2(tmp_path):
    assert run_cli("chain", "--s-grid", "0.0:0.1:3",
                   "--out", str(tmp_path)) == 2
    assert run_cli("obstruction", "--s-grid", "0.05:0.15:4",
                   "--out", str(tmp_path)) == 2  # needs >= 5 values
    assert run_cli("asym", "--s-grid", "0.05:0.15:3",
                   "--out", str(tmp_path)) == 2  # needs >= 4 values
    assert run_cli("obstruction", "--samples", "500",
                   "--out", str(tmp_path)) == 2  # not a power of two
