"""Command-line entry points.

Subcommands
-----------
spectrum      root sweep over |k| with asymptotic predictions and gaps
linear-decay  whole-space linear decay curves and fitted rate table
lyapunov      per-mode energy envelope certification over seeded modes
simulate      nonlinear box run: diagnostics CSV, snapshots, fitted rates
verify        invariant battery with a JSON-lines report

Every subcommand writes the resolved config (config.ini) and a
manifest.json listing the emitted files into the output directory.  CSV
content is deterministic for a fixed config and seed; only the manifest
carries wall-clock timestamps.

Exit codes: 0 success, 2 usage or config error, 3 numerical failure
(blow-up, failed quadrature, step-size or stability refusal), 4
verification failure.
"""

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone

import numpy as np

from . import __version__, analysis, lyapunov, solver, spectral
from .config import (ExperimentConfig, config_hash, default_config,
                     load_config, serialize_config)
from .errors import (BlowUpError, ConfigError, DegenerateSpectrumError,
                     FitWindowError, QuadratureError, SnapshotFormatError,
                     StabilityError, StepSizeError, VasculabError)
from .grid import Grid, set_fft_workers
from .model import stability_check
from .spectral import WaveVector

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

SPECTRUM_EXTRA_COLUMNS = ("asy_lambda1", "asy_lambda2", "asy_lambda3",
                          "gap_lambda1", "gap_lambda2", "gap_lambda3")

LYAPUNOV_KMAGS = (0.01, 0.1, 1.0, 10.0)
LYAPUNOV_MODES_PER_K = 5


class UsageError(VasculabError):
    """Bad subcommand arguments (distinct from malformed config files)."""


# ----------------------------------------------------------------- manifest


class Manifest:
    """Collects emitted files and notes; serialized as manifest.json."""

    def __init__(self, command, cfg):
        self.out_dir = cfg.out_dir
        self.data = {
            "command": command,
            "config_hash": config_hash(cfg),
            "code_version": __version__,
            "started": _now(),
            "finished": None,
            "files": [],
            "passed": None,
            "notes": [],
        }

    def add_file(self, path):
        self.data["files"].append(os.path.relpath(path, self.out_dir))

    def note(self, message):
        self.data["notes"].append(message)

    def finish(self, passed):
        self.data["passed"] = bool(passed)
        self.data["finished"] = _now()
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2)
            fh.write("\n")


def _now():
    return datetime.now(timezone.utc).isoformat()


def _prepare(command, cfg):
    """Create the output directory, drop the resolved config, open a
    manifest."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = Manifest(command, cfg)
    cfg_path = os.path.join(cfg.out_dir, "config.ini")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))
    manifest.add_file(cfg_path)
    return manifest


def _write_csv(path, header, rows):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v
                             for v in row])


# ----------------------------------------------------------------- spectrum


def cmd_spectrum(cfg, args):
    k_min, k_max, n_samples = args.k_min, args.k_max, args.n_samples
    if not (0 <= k_min < k_max):
        raise UsageError(f"need 0 <= k_min < k_max, got [{k_min}, {k_max}]")
    if n_samples < 2:
        raise UsageError("need at least 2 samples")
    params, eq = cfg.build_model()
    manifest = _prepare("spectrum", cfg)
    if k_min == 0.0:
        k_min = 1e-6 * k_max
        manifest.note(f"k_min 0 replaced by {k_min!r} for log spacing")
    kmags = np.geomspace(k_min, k_max, n_samples)

    rows = []
    for dec in spectral.spectrum_sweep(params, eq, kmags):
        asy = spectral.asymptotic_roots(params, eq, dec.kmag)
        gaps = [abs(lam - pred) for lam, pred in zip(dec.roots, asy)]
        l1, l2, l3 = dec.roots
        rows.append((dec.kmag, l1.real, l1.imag, l2.real, l2.imag,
                     l3.real, l3.imag, dec.discriminant, dec.klass,
                     float(asy[0]), float(asy[1]), float(asy[2]),
                     float(gaps[0]), float(gaps[1]), float(gaps[2])))
    path = os.path.join(cfg.out_dir, "spectrum.csv")
    _write_csv(path, spectral.SPECTRUM_COLUMNS + SPECTRUM_EXTRA_COLUMNS, rows)
    manifest.add_file(path)

    margin = stability_check(params, eq).margin
    manifest.note(f"stability margin {margin!r}")
    manifest.finish(passed=True)
    return EXIT_OK


# ------------------------------------------------------------- linear decay


def _radial_profile(cfg):
    rho_spec = cfg.init.get("rho", solver.GaussianSpec())
    if rho_spec.amplitude == 0.0:
        raise ConfigError(
            "init.rho.amplitude: whole-space decay curves need a nonzero "
            "density profile")
    u_amp = cfg.init.get("u", solver.GaussianSpec()).amplitude
    phi_amp = cfg.init.get("phi", solver.GaussianSpec()).amplitude
    return analysis.RadialProfile.gaussian(
        amplitude=rho_spec.amplitude, width=rho_spec.width,
        amp_u=u_amp, amp_phi=phi_amp)


def _nan_row(quantity, q, window):
    return {"quantity": quantity, "q": q,
            "theory_exponent": analysis.theory_exponent(quantity, q),
            "fitted_exponent": math.nan, "gap": math.nan, "r2": math.nan,
            "window_lo": window[0], "window_hi": window[1]}


def cmd_linear_decay(cfg, args):
    if not cfg.q_list:
        raise UsageError("analysis.q is empty: nothing to tabulate")
    params, eq = cfg.build_model()
    margin = stability_check(params, eq).margin
    if not margin > 0:
        raise StabilityError(
            f"stability margin {margin!r} is not positive: the linearization "
            "has growing modes, so there are no decay rates to measure")
    profile = _radial_profile(cfg)
    manifest = _prepare("linear-decay", cfg)
    lo, hi = cfg.window
    window = (lo, hi)

    times = np.geomspace(lo, hi, 33)
    curves = {}
    for quantity in analysis.QUANTITIES:
        curves[quantity] = analysis.linear_decay_curve(
            params, eq, profile, times, quantity)
    path = os.path.join(cfg.out_dir, "linear_decay_curves.csv")
    _write_csv(path, ("t",) + analysis.QUANTITIES,
               [(float(t),) + tuple(float(curves[q].values[i])
                                    for q in analysis.QUANTITIES)
                for i, t in enumerate(times)])
    manifest.add_file(path)

    rows = []
    for q in cfg.q_list:
        if q == 2.0:
            for quantity in analysis.QUANTITIES:
                fit = analysis.fit_decay(curves[quantity], window)
                rows.extend(analysis.rate_table([(quantity, q, fit)]))
        elif math.isinf(q):
            env_times = np.geomspace(lo, hi, 16)
            env = analysis.linf_envelope_curve(params, eq, profile,
                                               env_times, "rho")
            env_path = os.path.join(cfg.out_dir, "linf_envelope_rho.csv")
            _write_csv(env_path, ("t", "rho"),
                       list(zip(env.times, env.values)))
            manifest.add_file(env_path)
            fit = analysis.fit_decay(env, window)
            rows.extend(analysis.rate_table([("rho", q, fit)]))
            for quantity in analysis.QUANTITIES[1:]:
                rows.append(_nan_row(quantity, q, window))
            manifest.note("q=inf fitted for rho only; other envelope rows "
                          "carry the theory exponent")
        else:
            for quantity in analysis.QUANTITIES:
                rows.append(_nan_row(quantity, q, window))
            manifest.note(f"q={q!r} not measurable by the radial-quadrature "
                          "route; theory exponents only")
    path = os.path.join(cfg.out_dir, "rate_table.csv")
    analysis.write_rate_table_csv(path, rows)
    manifest.add_file(path)
    manifest.finish(passed=True)
    return EXIT_OK


# ----------------------------------------------------------------- lyapunov


def _random_mode(rng):
    return spectral.ModeState(
        complex(*rng.normal(size=2)),
        rng.normal(size=3) + 1j * rng.normal(size=3),
        complex(*rng.normal(size=2)))


def _thin_report(rep, cap=101):
    stride = max(1, (len(rep.times) + cap - 1) // cap)
    if stride == 1:
        return rep
    return dataclasses.replace(
        rep, times=rep.times[::stride], energies=rep.energies[::stride],
        envelopes=rep.envelopes[::stride])


def cmd_lyapunov(cfg, args):
    params, eq = cfg.build_model()
    margin = stability_check(params, eq).margin
    if not margin > 0:
        raise StabilityError(
            f"stability margin {margin!r} is not positive: no per-mode "
            "energy certificate exists")
    manifest = _prepare("lyapunov", cfg)
    w = lyapunov.kappa_select(params, eq)
    manifest.note(f"kappa {w.kappa!r} lambda_hat {w.lambda_hat!r}")

    rng = np.random.default_rng(cfg.seed)
    reports = []
    worst = 0.0
    for kmag in LYAPUNOV_KMAGS:
        k = WaveVector([kmag, 0.0, 0.0])
        dt = lyapunov.suggested_dt(params, eq, kmag)
        for _ in range(LYAPUNOV_MODES_PER_K):
            rep = lyapunov.dissipation_check(params, eq, w, k,
                                             _random_mode(rng), dt=dt)
            reports.append(rep)
            worst = max(worst, rep.max_ratio)
    path = os.path.join(cfg.out_dir, "lyapunov.csv")
    # the envelope check above runs at full resolution; the CSV record is
    # thinned to keep fast-mode sweeps (tiny dt) from dominating the output
    lyapunov.write_lyapunov_csv(path, [_thin_report(rep) for rep in reports])
    manifest.add_file(path)

    ok = all(rep.ok for rep in reports)
    manifest.note(f"worst envelope ratio {worst!r}")
    manifest.finish(passed=ok)
    if not ok:
        print(f"lyapunov: envelope violated, worst ratio {worst!r}",
              file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ----------------------------------------------------------------- simulate


def _box_theory_exponent(quantity, dim):
    """L2 decay exponents at spatial dimension dim (heat scaling d/4)."""
    base = -0.25 * dim
    if quantity in ("rho", "phi"):
        return base
    if quantity in ("u", "rho_minus_wave", "phi_minus_wave"):
        return base - 0.5
    if quantity == "u_minus_wave":
        return base - 1.0
    raise ValueError(f"unknown quantity {quantity!r}")


def cmd_simulate(cfg, args):
    params, eq = cfg.build_model()
    grid = cfg.build_grid()
    try:
        state, report = solver.init_data(grid, cfg.build_family(), eq)
    except ValueError as exc:
        raise ConfigError(f"init: {exc}") from None
    manifest = _prepare("simulate", cfg)
    for name in ("rho", "u", "phi"):
        manifest.note(f"init {name}: L1 {report.l1[name]!r} "
                      f"H4 {report.h4[name]!r}")

    margin = stability_check(params, eq).margin
    kappa = 0.0
    if margin > 0:
        kappa = lyapunov.kappa_select(params, eq).kappa
    else:
        manifest.note(f"margin {margin!r} <= 0: energy transport weight "
                      "set to 0")
    if args.compare_wave and not margin > 0:
        raise StabilityError(
            f"stability margin {margin!r} is not positive: no diffusion "
            "wave to compare against")

    snapshot_dir = None
    snapshot_every = None
    if cfg.snapshot_every > 0:
        snapshot_dir = os.path.join(cfg.out_dir, "snapshots")
        os.makedirs(snapshot_dir, exist_ok=True)
        snapshot_every = cfg.snapshot_every

    result = solver.simulate(
        params, eq, grid, state, t_end=cfg.t_end, dt=cfg.dt,
        scheme=cfg.scheme, sample_stride=cfg.sample_stride, kappa=kappa,
        compare_wave=args.compare_wave, snapshot_dir=snapshot_dir,
        snapshot_every=snapshot_every)

    diag_path = os.path.join(cfg.out_dir, "diagnostics.csv")
    solver.write_diagnostics_csv(diag_path, result)
    manifest.add_file(diag_path)
    for path in result.snapshots:
        manifest.add_file(path)

    lo = cfg.window[0]
    hi = min(cfg.window[1], result.boundary_time, cfg.t_end)
    manifest.note(f"fit window [{lo!r}, {hi!r}] "
                  f"(boundary time {result.boundary_time!r})")

    if not result.completed:
        manifest.note(f"aborted: {result.abort_reason}")
        manifest.finish(passed=False)
        print(f"simulate: {result.abort_reason}; partial diagnostics in "
              f"{diag_path}", file=sys.stderr)
        return EXIT_NUMERICAL

    zero_data = all(spec.amplitude == 0.0 for spec in cfg.init.values())
    if zero_data:
        manifest.note("zero perturbation: decay fits skipped")
        manifest.finish(passed=True)
        return EXIT_OK

    series = {"rho": result.table["l2_rho"],
              "u": result.table["l2_u"],
              "phi": result.table["l2_phi"]}
    if args.compare_wave:
        for name in ("rho", "u", "phi"):
            series[f"{name}_minus_wave"] = result.wave_l2[name]

    rows = []
    for quantity, values in series.items():
        theory = _box_theory_exponent(quantity, grid.dim)
        try:
            ts = analysis.TimeSeries(result.times, values, quantity)
            fit = analysis.fit_decay(ts, (lo, hi))
        except (FitWindowError, ValueError) as exc:
            manifest.note(f"fit {quantity}: skipped ({exc})")
            continue
        rows.append({"quantity": quantity, "q": 2.0,
                     "theory_exponent": theory,
                     "fitted_exponent": fit.exponent,
                     "gap": abs(fit.exponent - theory), "r2": fit.r2,
                     "window_lo": fit.window[0], "window_hi": fit.window[1]})
    if rows:
        rate_path = os.path.join(cfg.out_dir, "rate_table.csv")
        analysis.write_rate_table_csv(rate_path, rows)
        manifest.add_file(rate_path)
    else:
        manifest.note("no decay fits succeeded")
    manifest.finish(passed=True)
    return EXIT_OK


# ------------------------------------------------------------------- verify


def _draw_params(rng):
    from .model import Equilibrium, ModelParams, PressureLaw

    vals = np.exp(rng.uniform(math.log(0.3), math.log(3.0), size=6))
    params = ModelParams(mu=vals[0], alpha=vals[1], D=vals[2],
                         a=vals[3], b=vals[4],
                         pressure=PressureLaw.quadratic(vals[5]))
    return params, Equilibrium.of(params, float(rng.uniform(0.5, 2.0)))


def _check_vieta(ctx):
    rng = np.random.default_rng(ctx["seed"])
    worst = 0.0
    for _ in range(25):
        params, eq = _draw_params(rng)
        kmag = float(np.exp(rng.uniform(math.log(0.05), math.log(5.0))))
        co = spectral.characteristic_coeffs(params, eq, kmag)
        roots = spectral.solve_cubic(co)
        scale = max(1.0, max(abs(r) for r in roots)) ** 3
        e1 = roots[0] + roots[1] + roots[2]
        e2 = (roots[0] * roots[1] + roots[0] * roots[2]
              + roots[1] * roots[2])
        e3 = roots[0] * roots[1] * roots[2]
        err = max(abs(e1 + co.c2), abs(e2 - co.c1), abs(e3 + co.c0)) / scale
        worst = max(worst, err)
    ok = worst <= 1e-8
    return ok, f"worst scaled Vieta residual {worst:.3e} (25 draws)"


def _nondegenerate_draw(rng):
    while True:
        params, eq = _draw_params(rng)
        kmag = float(np.exp(rng.uniform(math.log(0.05), math.log(5.0))))
        try:
            return params, eq, kmag, spectral.decompose(params, eq, kmag,
                                                        label=False)
        except DegenerateSpectrumError:
            continue


def _check_projection_idempotent(ctx):
    rng = np.random.default_rng(ctx["seed"] + 1)
    worst = 0.0
    for _ in range(10):
        params, eq, kmag, dec = _nondegenerate_draw(rng)
        for proj in dec.projections:
            worst = max(worst, float(np.max(np.abs(proj @ proj - proj))))
    ok = worst <= 1e-9
    return ok, f"worst |P^2 - P| entry {worst:.3e} (10 draws)"


def _check_projection_resolution(ctx):
    rng = np.random.default_rng(ctx["seed"] + 2)
    worst = 0.0
    for _ in range(10):
        params, eq, kmag, dec = _nondegenerate_draw(rng)
        total = dec.projections[0] + dec.projections[1] + dec.projections[2]
        worst = max(worst, float(np.max(np.abs(total - np.eye(3)))))
    ok = worst <= 1e-9
    return ok, f"worst |sum P - I| entry {worst:.3e} (10 draws)"


def _check_semigroup(ctx):
    rng = np.random.default_rng(ctx["seed"] + 3)
    worst = 0.0
    for _ in range(10):
        params, eq, kmag, dec = _nondegenerate_draw(rng)
        A = spectral.assemble_A(params, eq, kmag)
        t, s = rng.uniform(0.1, 1.5, size=2)
        lhs = spectral.propagator(A, dec, t + s)
        rhs = spectral.propagator(A, dec, t) @ spectral.propagator(A, dec, s)
        scale = max(1.0, float(np.max(np.abs(lhs))))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / scale)
    ok = worst <= 1e-9
    return ok, f"worst scaled semigroup defect {worst:.3e} (10 draws)"


def _check_putzer(ctx):
    rng = np.random.default_rng(ctx["seed"] + 4)
    worst = 0.0
    for _ in range(10):
        params, eq, kmag, dec = _nondegenerate_draw(rng)
        A = spectral.assemble_A(params, eq, kmag)
        t = float(rng.uniform(0.1, 2.0))
        direct = spectral.propagator(A, dec, t)
        putzer = spectral.propagator_putzer(A, dec.roots, t)
        scale = max(1.0, float(np.max(np.abs(direct))))
        worst = max(worst, float(np.max(np.abs(direct - putzer))) / scale)
    ok = worst <= 1e-9
    return ok, f"worst projection/Putzer gap {worst:.3e} (10 draws)"


def _check_spectral_stability(ctx):
    params, eq = ctx["params"], ctx["eq"]
    margin = stability_check(params, eq).margin
    kmags = np.geomspace(0.02, 20.0, 40)
    top = max(float(np.max([r.real for r in
                            spectral.decompose(params, eq, kk,
                                               label=False).roots]))
              for kk in kmags)
    if margin > 0:
        ok = top < 0
        verdict = "all real parts negative" if ok else "found a growing mode"
    elif margin < 0:
        ok = top > 0
        verdict = ("growing mode present as predicted" if ok
                   else "expected a growing mode, found none")
    else:
        return None, "margin exactly 0: classification boundary"
    return ok, f"margin {margin:.6g}, max Re lambda {top:.6g}: {verdict}"


def _check_lyapunov_envelope(ctx):
    params, eq = ctx["params"], ctx["eq"]
    margin = stability_check(params, eq).margin
    if not margin > 0:
        return None, f"margin {margin:.6g} <= 0: no certificate exists"
    w = lyapunov.kappa_select(params, eq)
    if not (w.kappa > 0 and w.lambda_hat > 0):
        return False, (f"kappa {w.kappa!r} lambda_hat {w.lambda_hat!r} "
                       "not both positive")
    rng = np.random.default_rng(ctx["seed"] + 5)
    worst = 0.0
    for kmag in (0.1, 1.0, 10.0):
        k = WaveVector([kmag, 0.0, 0.0])
        dt = lyapunov.suggested_dt(params, eq, kmag)
        for _ in range(3):
            rep = lyapunov.dissipation_check(params, eq, w, k,
                                             _random_mode(rng),
                                             horizon=10.0, dt=dt)
            worst = max(worst, rep.max_ratio)
    ok = worst <= 1.0 + 1e-8
    return ok, (f"kappa {w.kappa!r} lambda_hat {w.lambda_hat:.6g}, worst "
                f"envelope ratio {worst!r} (9 modes)")


def _verify_run(ctx, dt):
    params, eq = ctx["params"], ctx["eq"]
    grid = Grid(dim=1, n=64, length=50.0)
    family = {"rho": solver.GaussianSpec(amplitude=0.05, width=2.0),
              "u": solver.GaussianSpec(amplitude=0.02, width=2.0)}
    state, _ = solver.init_data(grid, family, eq)
    return solver.simulate(params, eq, grid, state, t_end=1.0, dt=dt,
                           sample_stride=1)


def _check_mass(ctx):
    res = _verify_run(ctx, dt=0.02)
    mass = res.table["mass"]
    drift = float(np.max(np.abs(mass - mass[0])) / abs(mass[0]))
    ok = res.completed and drift <= 1e-12
    return ok, f"relative mass drift {drift:.3e} over t in [0, 1]"


def _check_energy_identity(ctx):
    def residual(dt):
        res = _verify_run(ctx, dt)
        F = res.table["F"]
        diss = res.table["dissipation_u"] + res.table["dissipation_phi"]
        ts = res.times
        dF = (F[2:] - F[:-2]) / (ts[2:] - ts[:-2])
        return float(np.max(np.abs(dF + diss[1:-1])))

    r1, r2 = residual(0.02), residual(0.01)
    order = math.log2(r1 / r2) if r2 > 0 else math.inf
    ok = order >= 1.5
    return ok, (f"sampled residual {r1:.3e} -> {r2:.3e} under dt halving "
                f"(order {order:.2f})")


def _check_fit_exactness(ctx):
    times = np.geomspace(1.0, 200.0, 60)
    worst = 0.0
    for expo in (-0.75, -1.25, -2.0):
        ts = analysis.TimeSeries(times, 3.0 * (1.0 + times) ** expo)
        fit = analysis.fit_decay(ts, (1.0, 200.0))
        worst = max(worst, abs(fit.exponent - expo),
                    abs(fit.intercept - math.log(3.0)))
    ok = worst <= 1e-10
    return ok, f"worst recovery error {worst:.3e} on synthetic power laws"


def _check_config_roundtrip(ctx):
    from .config import parse_config

    cfg = ctx["cfg"]
    again = parse_config(serialize_config(cfg))
    ok = again == cfg and config_hash(again) == config_hash(cfg)
    return ok, f"parse(serialize(config)) identity, hash {config_hash(cfg)[:12]}"


def _check_snapshot_roundtrip(ctx):
    grid = Grid(dim=2, n=16, length=5.0)
    rng = np.random.default_rng(ctx["seed"] + 6)
    state = solver.FieldState(
        rho=1.0 + 0.1 * rng.standard_normal(grid.shape),
        u=0.1 * rng.standard_normal((grid.dim,) + grid.shape),
        phi=1.0 + 0.1 * rng.standard_normal(grid.shape), t=0.625)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "probe.vasw")
        solver.write_snapshot(path, grid, state)
        grid2, state2 = solver.read_snapshot(path)
    ok = (grid2 == grid and state2.t == state.t
          and np.array_equal(state2.rho, state.rho)
          and np.array_equal(state2.u, state.u)
          and np.array_equal(state2.phi, state.phi))
    return ok, "write/read bit-exact on a seeded 2D state"


def _check_snapshot_corruption(ctx):
    grid = Grid(dim=1, n=16, length=5.0)
    state = solver.equilibrium_state(grid, ctx["eq"])
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "probe.vasw")
        solver.write_snapshot(path, grid, state)
        raw = bytearray(open(path, "rb").read())
        raw[1] ^= 0xFF
        with open(path, "wb") as fh:
            fh.write(raw)
        try:
            solver.read_snapshot(path)
        except SnapshotFormatError as exc:
            ok = exc.offset is not None
            return ok, f"corrupted byte rejected: {exc}"
    return False, "corrupted snapshot was accepted"


def _check_snapshot_files(ctx):
    found = []
    for root, _dirs, names in os.walk(ctx["cfg"].out_dir):
        for name in sorted(names):
            if name.endswith(".vasw"):
                found.append(os.path.join(root, name))
    for path in sorted(found):
        rel = os.path.relpath(path, ctx["cfg"].out_dir)
        try:
            solver.read_snapshot(path)
        except SnapshotFormatError as exc:
            return False, f"{rel}: {exc}"
    return True, f"{len(found)} snapshot file(s) readable"


VERIFY_CHECKS = (
    ("vieta", _check_vieta),
    ("projection_idempotent", _check_projection_idempotent),
    ("projection_resolution", _check_projection_resolution),
    ("semigroup", _check_semigroup),
    ("putzer_projection_agreement", _check_putzer),
    ("spectral_stability", _check_spectral_stability),
    ("lyapunov_envelope", _check_lyapunov_envelope),
    ("mass_conservation", _check_mass),
    ("energy_identity", _check_energy_identity),
    ("fit_exactness", _check_fit_exactness),
    ("config_roundtrip", _check_config_roundtrip),
    ("snapshot_roundtrip", _check_snapshot_roundtrip),
    ("snapshot_corruption_detected", _check_snapshot_corruption),
    ("snapshot_files", _check_snapshot_files),
)


def cmd_verify(cfg, args):
    params, eq = cfg.build_model()
    ctx = {"cfg": cfg, "params": params, "eq": eq, "seed": cfg.seed}
    manifest = _prepare("verify", cfg)

    lines = []
    failed = 0
    for name, check in VERIFY_CHECKS:
        try:
            ok, detail = check(ctx)
        except Exception as exc:            # noqa: BLE001 - itemize, not abort
            ok, detail = False, f"unexpected {type(exc).__name__}: {exc}"
        status = "skip" if ok is None else ("pass" if ok else "fail")
        if status == "fail":
            failed += 1
        lines.append({"check": name, "status": status, "detail": detail})

    path = os.path.join(cfg.out_dir, "verify.jsonl")
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            text = json.dumps(line, sort_keys=True)
            fh.write(text + "\n")
            print(text)
    manifest.add_file(path)
    manifest.note(f"{failed} of {len(lines)} checks failed")
    manifest.finish(passed=failed == 0)
    return EXIT_OK if failed == 0 else EXIT_VERIFY


# --------------------------------------------------------------- dispatcher


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vasculab",
        description="Mode spectra, energy certificates, diffusion-wave "
                    "decay rates, and nonlinear runs for a chemotaxis "
                    "fluid model.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="run configuration file (default: built-in "
                             "canonical setup)")
    common.add_argument("--out", metavar="DIR",
                        help="output directory (overrides output.out_dir)")
    common.add_argument("--threads", type=int, metavar="N",
                        help="FFT worker threads")
    common.add_argument("--seed", type=int, metavar="U64",
                        help="seed override for randomized probes")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common],
                       help="sweep the linearized spectrum over |k|")
    p.add_argument("--k-min", type=float, default=1e-3)
    p.add_argument("--k-max", type=float, default=10.0)
    p.add_argument("--n-samples", type=int, default=64)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("linear-decay", parents=[common],
                       help="whole-space linear decay curves and rate table")
    p.set_defaults(func=cmd_linear_decay)

    p = sub.add_parser("lyapunov", parents=[common],
                       help="certify the per-mode energy envelope")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("simulate", parents=[common],
                       help="nonlinear box run with diagnostics and fits")
    p.add_argument("--compare-wave", action="store_true",
                   help="also track L2 distance to the diffusion wave")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common],
                       help="run the invariant battery")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.out is not None:
            cfg = dataclasses.replace(cfg, out_dir=args.out)
        if args.seed is not None:
            if args.seed < 0:
                raise UsageError("--seed must be nonnegative")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.threads is not None:
            if args.threads < 1:
                raise UsageError("--threads must be at least 1")
            set_fft_workers(args.threads)
        return args.func(cfg, args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BlowUpError, QuadratureError, StepSizeError, StabilityError,
            DegenerateSpectrumError, FitWindowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
