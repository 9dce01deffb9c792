"""CLI harness: config plumbing, command outputs, determinism, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from spheredn.cli import Resolver, config_digest, main, parse_config
from spheredn.spectral import mode_index


def write_cfg(path, text):
    path.write_text(text)
    return str(path)


# ------------------------------------------------------------ config plumbing


def test_parse_config_reads_flat_pairs(tmp_path):
    cfg = write_cfg(
        tmp_path / "c.cfg",
        "# comment line\n"
        "dim=2\n"
        "tol = 1e-10   # trailing comment\n"
        "\n"
        "s_grid=0.5,1.0\n",
    )
    raw = parse_config(cfg)
    assert raw == {"dim": "2", "tol": "1e-10", "s_grid": "0.5,1.0"}


def test_parse_config_rejects_bad_lines(tmp_path):
    cfg = write_cfg(tmp_path / "c.cfg", "dim 2\n")
    with pytest.raises(ValueError, match="KEY=VALUE"):
        parse_config(cfg)


def test_parse_config_rejects_duplicates(tmp_path):
    cfg = write_cfg(tmp_path / "c.cfg", "dim=2\ndim=3\n")
    with pytest.raises(ValueError, match="duplicate"):
        parse_config(cfg)


def test_resolver_types_defaults_and_strictness():
    res = Resolver({"dim": "3", "tol": "1e-8"})
    assert res.get_int("dim") == 3
    assert res.get_float("tol") == 1e-8
    assert res.get_floats("s_grid", (1.0, 2.0)) == (1.0, 2.0)
    res.finish()

    res = Resolver({"mystery": "1"})
    res.get_int("dim", 2)
    with pytest.raises(ValueError, match="unknown config keys"):
        res.finish()


def test_config_digest_tracks_content():
    a = config_digest({"dim": 2, "tol": 1e-8})
    b = config_digest({"dim": 2, "tol": 1e-8})
    c = config_digest({"dim": 3, "tol": 1e-8})
    assert a == b != c and len(a) == 64


# ------------------------------------------------------------------- commands


def run_cli(args):
    return main([str(a) for a in args])


def test_apply_flat_sphere_doubles_degree_two_mode(tmp_path):
    # G(0) on a degree-2 mode multiplies it by its degree: coefficient 2.
    idx = mode_index(2, 4, 2, "cos")
    cfg = write_cfg(
        tmp_path / "apply.cfg",
        f"dim=2\nh_shape=constant\nh_amplitude=0.0\nh_degree=0\n"
        f"psi_degree=4\npsi_mode={idx}\n",
    )
    out = tmp_path / "out"
    assert run_cli(["--command", "apply", "--config", cfg, "--out", out]) == 0

    header, rows = _read_csv(out / "apply.csv")
    assert header[:3] == ["mode", "degree", "coefficient"]
    table = {int(r[0]): float(r[2]) for r in rows}
    assert table[idx] == pytest.approx(2.0, abs=1e-10)
    for mode, coeff in table.items():
        if mode != idx:
            assert abs(coeff) < 1e-10

    mirror = json.loads((out / "apply.json").read_text())
    assert mirror["command"] == "apply"
    assert mirror["diagnostics"]["converged"] is True
    assert len(mirror["rows"]) == len(rows)


def test_apply_with_galerkin_oracle_column(tmp_path):
    cfg = write_cfg(
        tmp_path / "apply.cfg",
        "dim=2\nh_shape=random\nh_amplitude=0.03\nh_degree=4\n"
        "psi_degree=4\nL=10\noracle=galerkin\nseed=3\n",
    )
    out = tmp_path / "out"
    assert run_cli(["--command", "apply", "--config", cfg, "--out", out]) == 0
    header, rows = _read_csv(out / "apply.csv")
    assert header[-2:] == ["oracle_coefficient", "abs_difference"]
    diffs = [float(r[-1]) for r in rows]
    assert max(diffs) < 1e-8


def test_derivative_check_ratio_column(tmp_path):
    cfg = write_cfg(
        tmp_path / "dc.cfg",
        "dim=2\ncount=2\ndegree=4\namplitude=0.04\nM=16\n",
    )
    out = tmp_path / "out"
    assert run_cli(
        ["--command", "derivative_check", "--config", cfg, "--out", out, "--seed", 5]
    ) == 0
    header, rows = _read_csv(out / "derivative_check.csv")
    assert header == ["sample", "order", "err_coarse", "err_fine", "ratio"]
    assert len(rows) == 4  # two samples x two orders
    for r in rows:
        assert 30.0 <= float(r[4]) <= 300.0


def test_radius_emits_per_term_rows(tmp_path):
    cfg = write_cfg(
        tmp_path / "r.cfg", "dim=2\ndegree=4\namplitudes=0.02,0.04\nM=12\n"
    )
    out = tmp_path / "out"
    assert run_cli(["--command", "radius", "--config", cfg, "--out", out, "--seed", 2]) == 0
    header, rows = _read_csv(out / "radius.csv")
    assert header == ["amplitude", "m", "norm_h1", "fitted_ratio"]
    amps = {float(r[0]) for r in rows}
    assert amps == {0.02, 0.04}
    mirror = json.loads((out / "radius.json").read_text())
    assert all(rec["converged"] for rec in mirror["per_amplitude"])


def test_tame_emits_fit_and_samples(tmp_path):
    cfg = write_cfg(
        tmp_path / "t.cfg",
        "dim=2\ns_grid=0.5,2.0\ns0=1.0\ncount=4\namplitude=0.03\ndegree=6\n",
    )
    out = tmp_path / "out"
    assert run_cli(["--command", "tame", "--config", cfg, "--out", out, "--seed", 1]) == 0
    header, rows = _read_csv(out / "tame.csv")
    assert header == ["s", "C0_fit", "Cs_fit", "samples", "stability", "violations"]
    assert [float(r[0]) for r in rows] == [0.5, 2.0]
    assert all(int(r[5]) == 0 for r in rows)
    sheader, srows = _read_csv(out / "tame_samples.csv")
    assert sheader == ["sample", "s", "norm_G_s", "norm_psi_s1", "norm_psi_s01", "norm_h_s1"]
    assert len(srows) == 4 * 2


def test_norms_emits_equivalence_and_layers(tmp_path):
    cfg = write_cfg(
        tmp_path / "n.cfg", "dim=2\ncount=3\ndegree=8\nk_grid=0,1\ns_grid=0.0,1.0\n"
    )
    out = tmp_path / "out"
    assert run_cli(["--command", "norms", "--config", cfg, "--out", out, "--seed", 4]) == 0
    header, rows = _read_csv(out / "norms_equivalence.csv")
    assert header == ["field", "s", "spectral_norm", "chart_norm", "ratio"]
    ratios = [float(r[4]) for r in rows]
    assert all(v > 0.0 for v in ratios)
    lheader, lrows = _read_csv(out / "norms_layers.csv")
    assert lheader == ["field", "k", "s", "r", "seminorm"]
    assert {int(r[1]) for r in lrows} == {0, 1}


def test_witness_csv_schema_and_atlas_dump(tmp_path):
    cfg = write_cfg(tmp_path / "w.cfg", "dim=2\n")
    out = tmp_path / "out"
    assert run_cli(["--command", "witness", "--config", cfg, "--out", out, "--seed", 101]) == 0
    header, rows = _read_csv(out / "witness.csv")
    assert header[:4] == ["inequality", "parameters", "max_ratio", "sample_count"]
    assert all(int(r[header.index("passed")]) == 1 for r in rows)
    atlas = json.loads((out / "atlas.json").read_text())
    assert set(atlas) == {"dim", "delta", "centers", "rotations"}
    mirror = json.loads((out / "witness.json").read_text())
    assert mirror["trace_r_band_ok"] is True


# --------------------------------------------------------------- run contract


def test_identical_config_and_seed_reproduce_bit_identical_csv(tmp_path):
    cfg = write_cfg(
        tmp_path / "t.cfg",
        "dim=2\ns_grid=0.5,2.0\ns0=1.0\ncount=3\namplitude=0.03\ndegree=6\nseed=9\n",
    )
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["--command", "tame", "--config", cfg, "--out", out_a, "--threads", 1]) == 0
    assert run_cli(["--command", "tame", "--config", cfg, "--out", out_b, "--threads", 3]) == 0
    assert (out_a / "tame.csv").read_bytes() == (out_b / "tame.csv").read_bytes()
    assert (out_a / "tame_samples.csv").read_bytes() == (out_b / "tame_samples.csv").read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_cfg(
        tmp_path / "t.cfg",
        "dim=2\ns_grid=1.0\ns0=1.0\ncount=3\namplitude=0.03\ndegree=6\nseed=9\n",
    )
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["--command", "tame", "--config", cfg, "--out", out_a]) == 0
    assert run_cli(["--command", "tame", "--config", cfg, "--out", out_b, "--seed", 10]) == 0
    assert (out_a / "tame.csv").read_bytes() != (out_b / "tame.csv").read_bytes()


def test_config_hash_embedded_in_header_and_mirror(tmp_path):
    cfg = write_cfg(tmp_path / "w.cfg", "dim=2\nseed=101\n")
    out = tmp_path / "out"
    assert run_cli(["--command", "witness", "--config", cfg, "--out", out]) == 0
    text = (out / "witness.csv").read_text()
    line = next(l for l in text.splitlines() if l.startswith("# config_sha256="))
    digest = line.split("=", 1)[1]
    mirror = json.loads((out / "witness.json").read_text())
    assert mirror["config_sha256"] == digest and len(digest) == 64


def test_bad_config_value_exits_two(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "bad.cfg", "dim=banana\n")
    assert run_cli(["--command", "apply", "--config", cfg, "--out", tmp_path / "o"]) == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_key_exits_two(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "bad.cfg", "dim=2\nwhat_is_this=1\n")
    assert run_cli(["--command", "witness", "--config", cfg, "--out", tmp_path / "o"]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_missing_config_file_exits_two(tmp_path, capsys):
    missing = tmp_path / "nope.cfg"
    assert run_cli(["--command", "apply", "--config", missing, "--out", tmp_path / "o"]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_divergent_series_exits_three_with_partial_outputs(tmp_path, capsys):
    # amplitude far beyond the convergence radius: geometry is still valid
    # but the homogeneity series diverges
    cfg = write_cfg(
        tmp_path / "r.cfg", "dim=2\ndegree=4\namplitudes=0.02,0.5\nM=12\n"
    )
    out = tmp_path / "out"
    code = run_cli(["--command", "radius", "--config", cfg, "--out", out, "--seed", 2])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err
    assert (out / "radius.csv").exists()  # partial outputs retained
    mirror = json.loads((out / "radius.json").read_text())
    assert not all(rec["converged"] for rec in mirror["per_amplitude"])


def test_console_entry_point_runs(tmp_path):
    cfg = write_cfg(
        tmp_path / "apply.cfg",
        "dim=2\nh_shape=constant\nh_amplitude=0.0\nh_degree=0\npsi_degree=2\npsi_mode=1\n",
    )
    out = tmp_path / "out"
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "spheredn.cli",
            "--command",
            "apply",
            "--config",
            cfg,
            "--out",
            str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "apply.csv").exists()
    assert "apply:" in proc.stdout


# ----------------------------------------------------------------- csv helper


def _read_csv(path):
    import csv

    lines = [l for l in path.read_text().splitlines() if l and not l.startswith("#")]
    parsed = list(csv.reader(lines))
    return parsed[0], parsed[1:]
