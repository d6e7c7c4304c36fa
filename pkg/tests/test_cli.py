"""Config parsing, subcommand exit codes, emitted files, and determinism."""

import csv
import dataclasses
import json
import math
import os

import numpy as np
import pytest

from vasculab import cli, solver
from vasculab.config import (ExperimentConfig, config_hash, default_config,
                             load_config, parse_config, serialize_config)
from vasculab.errors import ConfigError
from vasculab.grid import Grid
from vasculab.model import canonical_model
from vasculab.solver import GaussianSpec


def small_run_config(**overrides):
    """Fast 1D setup for end-to-end subcommand tests."""
    cfg = default_config()
    changes = dict(n=64, length=50.0, dt=0.05, t_end=2.0, sample_stride=1)
    changes.update(overrides)
    return dataclasses.replace(cfg, **changes)


def write_config(tmp_path, cfg, name="run.ini"):
    path = tmp_path / name
    path.write_text(serialize_config(cfg))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ------------------------------------------------------------------- config


def test_config_roundtrip_identity():
    cfg = default_config()
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert serialize_config(again) == text
    assert config_hash(again) == config_hash(cfg)


def test_config_builds_model_and_grid():
    cfg = default_config()
    params, eq = cfg.build_model()
    assert params.mu == 1.0 and eq.phi_bar == 1.0
    g = cfg.build_grid()
    assert g == Grid(dim=1, n=256, length=200.0)
    family = cfg.build_family()
    assert family["rho"] == GaussianSpec(amplitude=0.01, width=3.0)


def test_config_lists_and_optional_keys():
    text = serialize_config(default_config())
    text = text.replace("q = 2, inf", "q = 2, 4, inf")
    text = text.replace("rho.width = 3.0",
                        "rho.width = 3.0\nrho.center = 10.0")
    cfg = parse_config(text)
    assert cfg.q_list == (2.0, 4.0, math.inf)
    assert cfg.init["rho"].center == (10.0,)
    # optional keys absent -> defaults
    lines = [ln for ln in text.splitlines()
             if not ln.startswith(("pressure.gamma", "snapshot_every"))]
    cfg = parse_config("\n".join(lines))
    assert cfg.pressure_gamma == 2.0 and cfg.snapshot_every == 0


@pytest.mark.parametrize("mangle,needle", [
    (lambda t: t.replace("n = 256\n", ""), "grid.n"),
    (lambda t: t.replace("[time]", "[tme]"), "section"),
    (lambda t: t.replace("dt = 0.05", "dt = fast"), "time.dt"),
    (lambda t: t.replace("mu = 1.0", "mu = -1.0"), "model"),
    (lambda t: t.replace("n = 256", "n = 100"), "grid"),
    (lambda t: t.replace("scheme = if_rk4", "scheme = euler"),
     "time.scheme"),
    (lambda t: t.replace("q = 2, inf", "q = 1"), "analysis.q"),
    (lambda t: t.replace("window_hi = 1000.0", "window_hi = 5.0"),
     "window"),
    (lambda t: t.replace("rho.width = 3.0", "rho.width = -1.0"),
     "init.rho.width"),
    (lambda t: t.replace("rho.width = 3.0",
                         "rho.width = 3.0\nrho.center = 1.0, 2.0"),
     "init.rho.center"),
    (lambda t: t.replace("mu = 1.0", "mu = 1.0\nzeta = 3.0"), "zeta"),
    (lambda t: t.replace("pressure.kind = quadratic",
                         "pressure.kind = tabulated"), "pressure.kind"),
])
def test_config_errors_name_the_key(mangle, needle):
    text = mangle(serialize_config(default_config()))
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "nope.ini"))


# ------------------------------------------------------------ exit plumbing


def test_usage_errors_exit_2(tmp_path):
    out = str(tmp_path / "o")
    assert cli.main([]) == 2
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["--help"]) == 0
    assert cli.main(["spectrum", "--out", out,
                     "--k-min", "2.0", "--k-max", "2.0"]) == 2
    assert cli.main(["spectrum", "--out", out,
                     "--k-min", "-1.0", "--k-max", "2.0"]) == 2
    assert cli.main(["verify", "--config", str(tmp_path / "nope.ini"),
                     "--out", out]) == 2
    assert cli.main(["lyapunov", "--out", out, "--threads", "0"]) == 2
    assert cli.main(["lyapunov", "--out", out, "--seed", "-3"]) == 2


def unstable_config_path(tmp_path, **overrides):
    # quadratic K=0.5 puts the margin at K - 1 = -0.5 for canonical constants
    cfg = small_run_config(pressure_K=0.5, **overrides)
    return write_config(tmp_path, cfg, "unstable.ini")


def test_instability_refusals_exit_3(tmp_path):
    out = str(tmp_path / "o")
    path = unstable_config_path(tmp_path)
    assert cli.main(["linear-decay", "--config", path, "--out", out]) == 3
    assert cli.main(["lyapunov", "--config", path, "--out", out]) == 3
    assert cli.main(["simulate", "--config", path, "--out", out,
                     "--compare-wave"]) == 3


def test_empty_q_list_exits_2(tmp_path):
    text = serialize_config(default_config()).replace("q = 2, inf", "q =")
    path = tmp_path / "noq.ini"
    path.write_text(text)
    assert parse_config(text).q_list == ()
    assert cli.main(["linear-decay", "--config", str(path),
                     "--out", str(tmp_path / "o")]) == 2


# ----------------------------------------------------------------- spectrum


def test_spectrum_csv_layout_and_asymptotics(tmp_path):
    out = str(tmp_path / "o")
    assert cli.main(["spectrum", "--out", out, "--k-min", "1e-3",
                     "--k-max", "10", "--n-samples", "24"]) == 0
    header, rows = read_csv(os.path.join(out, "spectrum.csv"))
    assert header == list(cli.spectral.SPECTRUM_COLUMNS
                          + cli.SPECTRUM_EXTRA_COLUMNS)
    assert len(rows) == 24
    kmags = [float(r[0]) for r in rows]
    assert kmags == sorted(kmags)
    first = rows[0]
    # tiny k: roots sit on the predictions (-sigma k^2, -b, -alpha)
    assert float(first[12]) <= 1e-9          # gap_lambda1
    assert float(first[13]) <= 0.01 and float(first[14]) <= 0.01
    assert math.isclose(float(first[9]), -float(first[0]) ** 2)


def test_spectrum_unstable_config_annotates_growth(tmp_path):
    out = str(tmp_path / "o")
    path = unstable_config_path(tmp_path)
    assert cli.main(["spectrum", "--config", path, "--out", out]) == 0
    _, rows = read_csv(os.path.join(out, "spectrum.csv"))
    tops = [max(float(r[1]), float(r[3]), float(r[5])) for r in rows]
    assert max(tops) > 0
    assert all(r[8] in ("three_real", "one_real_pair", "degenerate")
               for r in rows)


# ------------------------------------------------------------- linear decay


def test_linear_decay_rate_table(tmp_path):
    out = str(tmp_path / "o")
    assert cli.main(["linear-decay", "--out", out]) == 0
    header, rows = read_csv(os.path.join(out, "rate_table.csv"))
    assert header == list(cli.analysis.RATE_TABLE_COLUMNS)
    table = {(r[0], r[1]): r for r in rows}
    rho = table[("rho", "2")]
    assert float(rho[2]) == -0.75
    assert float(rho[4]) <= 0.05             # fitted gap
    assert float(table[("u_minus_wave", "2")][2]) == -1.75
    # q=inf: rho fitted, the others carry theory only
    assert math.isfinite(float(table[("rho", "inf")][3]))
    assert math.isnan(float(table[("u", "inf")][3]))
    assert float(table[("u", "inf")][2]) == -2.0
    curves_header, curves = read_csv(
        os.path.join(out, "linear_decay_curves.csv"))
    assert curves_header == ["t"] + list(cli.analysis.QUANTITIES)
    assert len(curves) == 33


def test_linear_decay_needs_density_profile(tmp_path):
    cfg = default_config()
    cfg.init["rho"] = GaussianSpec(amplitude=0.0, width=1.0)
    path = write_config(tmp_path, cfg)
    assert cli.main(["linear-decay", "--config", path,
                     "--out", str(tmp_path / "o")]) == 2


# ----------------------------------------------------------------- lyapunov


def test_lyapunov_report(tmp_path):
    out = str(tmp_path / "o")
    assert cli.main(["lyapunov", "--out", out, "--seed", "11"]) == 0
    header, rows = read_csv(os.path.join(out, "lyapunov.csv"))
    assert header == list(cli.lyapunov.LYAPUNOV_COLUMNS)
    ratios = [float(r[4]) for r in rows]
    assert max(ratios) <= 1.0 + 1e-8
    kmags = sorted({float(r[0]) for r in rows})
    assert kmags == [0.01, 0.1, 1.0, 10.0]
    mani = json.load(open(os.path.join(out, "manifest.json")))
    assert mani["passed"] is True
    assert any("kappa" in note for note in mani["notes"])


# ----------------------------------------------------------------- simulate


def test_simulate_zero_amplitude_skips_fits(tmp_path):
    zero = {n: GaussianSpec() for n in ("rho", "u", "phi")}
    path = write_config(tmp_path, small_run_config(init=zero))
    out = str(tmp_path / "o")
    assert cli.main(["simulate", "--config", path, "--out", out]) == 0
    assert not os.path.exists(os.path.join(out, "rate_table.csv"))
    mani = json.load(open(os.path.join(out, "manifest.json")))
    assert any("skipped" in note for note in mani["notes"])
    _, rows = read_csv(os.path.join(out, "diagnostics.csv"))
    l2 = [float(r[5]) for r in rows]
    assert max(l2) == 0.0


def test_simulate_blow_up_partial_outputs(tmp_path):
    path = unstable_config_path(
        tmp_path, t_end=200.0,
        init={"rho": GaussianSpec(amplitude=0.5, width=2.0),
              "u": GaussianSpec(), "phi": GaussianSpec()})
    out = str(tmp_path / "o")
    assert cli.main(["simulate", "--config", path, "--out", out]) == 3
    mani = json.load(open(os.path.join(out, "manifest.json")))
    assert mani["passed"] is False
    assert any("aborted" in note for note in mani["notes"])
    _, rows = read_csv(os.path.join(out, "diagnostics.csv"))
    assert 0 < len(rows)
    assert float(rows[-1][0]) < 200.0


def test_simulate_compare_wave_rates_and_snapshots(tmp_path):
    cfg = small_run_config(
        n=256, length=200.0, t_end=20.0, sample_stride=4,
        snapshot_every=200, window=(10.0, 1000.0))
    path = write_config(tmp_path, cfg)
    out = str(tmp_path / "o")
    assert cli.main(["simulate", "--config", path, "--out", out,
                     "--compare-wave"]) == 0
    header, rows = read_csv(os.path.join(out, "rate_table.csv"))
    table = {r[0]: r for r in rows}
    assert set(table) == {"rho", "u", "phi", "rho_minus_wave",
                          "u_minus_wave", "phi_minus_wave"}
    # 1D theory column follows the d/4 heat scaling
    assert float(table["rho"][2]) == -0.25
    assert float(table["u"][2]) == -0.75
    assert float(table["u_minus_wave"][2]) == -1.25
    # wave differences decay strictly faster than the states themselves
    assert float(table["rho_minus_wave"][3]) < float(table["rho"][3]) - 0.3
    snaps = sorted(os.listdir(os.path.join(out, "snapshots")))
    assert snaps == [f"state_{n:08d}.vasw" for n in (200, 400)]
    mani = json.load(open(os.path.join(out, "manifest.json")))
    walked = set()
    for root, _dirs, names in os.walk(out):
        for name in names:
            if name != "manifest.json":
                walked.add(os.path.relpath(os.path.join(root, name), out))
    assert set(mani["files"]) == walked
    assert any("boundary time 625.0" in note for note in mani["notes"])


def test_simulate_deterministic_outputs(tmp_path):
    cfg = small_run_config(n=256, length=200.0, t_end=20.0,
                           sample_stride=4, window=(10.0, 1000.0))
    path = write_config(tmp_path, cfg)
    outs = [str(tmp_path / "a"), str(tmp_path / "b")]
    for out in outs:
        assert cli.main(["simulate", "--config", path, "--out", out]) == 0
    for name in ("diagnostics.csv", "rate_table.csv"):
        blobs = [open(os.path.join(out, name), "rb").read() for out in outs]
        assert blobs[0] == blobs[1]


# ------------------------------------------------------------------- verify


def read_jsonl(path):
    return [json.loads(line) for line in open(path)]


def test_verify_defaults_all_pass(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert cli.main(["verify", "--out", out]) == 0
    lines = read_jsonl(os.path.join(out, "verify.jsonl"))
    assert {d["check"] for d in lines} == {name for name, _ in
                                           cli.VERIFY_CHECKS}
    assert all(d["status"] == "pass" for d in lines)
    printed = capsys.readouterr().out
    assert printed.count('"check"') == len(lines)


def test_verify_unstable_routes_checks(tmp_path):
    out = str(tmp_path / "o")
    path = unstable_config_path(tmp_path)
    assert cli.main(["verify", "--config", path, "--out", out]) == 0
    status = {d["check"]: d for d in
              read_jsonl(os.path.join(out, "verify.jsonl"))}
    lyap = status["lyapunov_envelope"]
    assert lyap["status"] == "skip" and "margin" in lyap["detail"]
    spec = status["spectral_stability"]
    assert spec["status"] == "pass"
    assert "growing mode present" in spec["detail"]


def test_verify_corrupted_snapshot_fails_with_offset(tmp_path):
    out = tmp_path / "o"
    out.mkdir()
    params, eq = canonical_model()
    g = Grid(dim=1, n=16, length=5.0)
    snap = out / "state_00000001.vasw"
    solver.write_snapshot(str(snap), g, solver.equilibrium_state(g, eq))
    raw = bytearray(snap.read_bytes())
    raw[9] ^= 0x55
    snap.write_bytes(bytes(raw))
    assert cli.main(["verify", "--out", str(out)]) == 4
    status = {d["check"]: d for d in read_jsonl(str(out / "verify.jsonl"))}
    bad = status["snapshot_files"]
    assert bad["status"] == "fail"
    assert "byte offset" in bad["detail"]
    mani = json.load(open(str(out / "manifest.json")))
    assert mani["passed"] is False
