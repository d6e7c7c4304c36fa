"""Pseudo-spectral initial-value solver on a periodic box.

The state is carried in Fourier space as a (dim+2, n, ..., n) complex
array holding the perturbation modes (rho2, u components, phi2) around
the equilibrium (rho_bar, 0, phi_bar).  The stiff diagonal part of the
linearization (-alpha on velocity modes, -(b + D|k|^2) on potential
modes) is integrated by exact exponential factors; the remainder
(advection, pressure, chemotactic drive) is advanced explicitly by
classical RK4 on the exponentially transformed variable, or by a
two-step implicit-explicit multistep.

The density update uses the conservative flux -div(rho u), so the mean
density is preserved to rounding.  Quadratic products are dealiased by
the 2/3 rule; the rational pressure factor P'(rho)/rho is evaluated
pointwise and transformed with no extra filtering.

Reported L2/Linf diagnostics for rho and phi measure the deviation from
the instantaneous spatial mean.  On the periodic box the mean holds the
modes the domain cannot spread (it is conserved for rho and relaxes for
phi), so the fluctuation norms are the quantities that track whole-space
decay while the diffusion front stays inside the box; runs are trusted
up to the boundary-interaction time (L/8)^2/sigma.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (BlowUpError, SnapshotFormatError, StabilityError,
                     StepSizeError)
from .grid import Grid, multi_indices
from .model import potential_G, pressure_eval, stability_check

SNAP_MAGIC = b"VASW"
SNAP_VERSION = 1

DIAGNOSTIC_COLUMNS = ("t", "mass", "F", "dissipation_u", "dissipation_phi",
                      "l2_rho", "l2_u", "l2_phi", "linf_rho", "linf_u",
                      "h1_rho", "E_N", "D_N")

SCHEMES = ("if_rk4", "imex_bdf2")


@dataclass
class FieldState:
    """Physical fields (total density, velocity, total potential) at time t."""

    rho: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class GaussianSpec:
    """Isotropic Gaussian bump amplitude * exp(-|x-c|^2 / 2 width^2)."""

    amplitude: float = 0.0
    width: float = 1.0
    center: tuple | None = None

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("gaussian width must be positive")


@dataclass
class SizeReport:
    """Perturbation size per field: grid L1 and H4, plus closed-form L1."""

    l1: dict
    h4: dict
    analytic_l1: dict


def _gaussian_bump(grid, spec):
    if spec.amplitude == 0.0:
        return np.zeros(grid.shape)
    center = spec.center
    if center is None:
        center = (0.5 * grid.length,) * grid.dim
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.size != grid.dim:
        raise ValueError("bump center must have one coordinate per axis")
    r2 = np.zeros(grid.shape)
    for x, c in zip(grid.coords(), center):
        r2 = r2 + (x - c) ** 2
    return spec.amplitude * np.exp(-r2 / (2.0 * spec.width**2))


def _sobolev_norm(grid, f, order):
    spec = grid.fft(f)
    mult = grid.sobolev_multiplier(order)
    scale = grid.length**grid.dim / grid.n ** (2 * grid.dim)
    return math.sqrt(scale * float(np.sum(mult * np.abs(spec) ** 2)))


def equilibrium_state(grid, eq):
    """The constant background as a FieldState."""
    return FieldState(rho=np.full(grid.shape, eq.rho_bar),
                      u=np.zeros((grid.dim,) + grid.shape),
                      phi=np.full(grid.shape, eq.phi_bar), t=0.0)


def init_data(grid, family, eq):
    """Equilibrium plus Gaussian bumps per field; returns (state, report).

    family maps any of "rho", "u", "phi" to a GaussianSpec; the velocity
    bump is applied to every component.  The report carries grid L1 and
    H4 norms of each perturbation next to the closed-form Gaussian L1.
    """
    specs = {name: family.get(name, GaussianSpec())
             for name in ("rho", "u", "phi")}
    bumps = {name: _gaussian_bump(grid, sp) for name, sp in specs.items()}
    rho = eq.rho_bar + bumps["rho"]
    if not np.min(rho) > 0:
        raise ValueError("initial density touches vacuum")
    u = np.stack([bumps["u"]] * grid.dim).copy()
    phi = eq.phi_bar + bumps["phi"]

    l1, h4, analytic = {}, {}, {}
    gauss_mass = lambda sp: abs(sp.amplitude) * (
        math.sqrt(2.0 * math.pi) * sp.width) ** grid.dim
    l1["rho"] = grid.integrate(np.abs(bumps["rho"]))
    l1["phi"] = grid.integrate(np.abs(bumps["phi"]))
    l1["u"] = grid.integrate(np.sqrt(np.sum(u**2, axis=0)))
    analytic["rho"] = gauss_mass(specs["rho"])
    analytic["phi"] = gauss_mass(specs["phi"])
    analytic["u"] = math.sqrt(grid.dim) * gauss_mass(specs["u"])
    h4["rho"] = _sobolev_norm(grid, bumps["rho"], 4)
    h4["phi"] = _sobolev_norm(grid, bumps["phi"], 4)
    h4["u"] = math.sqrt(grid.dim) * _sobolev_norm(grid, bumps["u"], 4)
    state = FieldState(rho=rho, u=u, phi=phi, t=0.0)
    return state, SizeReport(l1=l1, h4=h4, analytic_l1=analytic)


def cfl_limit(params, state, grid):
    """Largest safe dt: half of min(h / max(|u| + c_s), 1/alpha)."""
    speed = np.sqrt(np.sum(state.u**2, axis=0))
    sound = np.sqrt(pressure_eval(params.pressure, state.rho, order=1))
    vmax = float(np.max(speed + sound))
    bound = 0.5 / params.alpha
    if vmax > 0:
        bound = min(bound, 0.5 * grid.h / vmax)
    return bound


def _mirror_conj(spec, grid_axes):
    out = spec
    for ax in grid_axes:
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return np.conj(out)


class TimeStepper:
    """Walks the Fourier-space perturbation state forward in time.

    Schemes: "if_rk4" (integrating-factor classical RK4, order 4) and
    "imex_bdf2" (implicit stiff part, explicitly extrapolated remainder,
    order 2, first step by its one-step variant).
    """

    def __init__(self, params, eq, grid, dt, scheme="if_rk4"):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; pick from {SCHEMES}")
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.params = params
        self.eq = eq
        self.grid = grid
        self.dt = float(dt)
        self.scheme = scheme
        self.kc = grid.k_components()
        self.mask = grid.dealias_mask
        nf = grid.dim + 2
        lin = np.zeros((nf,) + grid.shape)
        lin[1:1 + grid.dim] = -params.alpha
        lin[-1] = -(params.b + params.D * grid.k2)
        self.lin = lin
        self.exp_half = np.exp(0.5 * self.dt * lin)
        self.exp_full = np.exp(self.dt * lin)
        self._prev = None  # (X, N(X)) one step back, for the multistep
        self._t = 0.0

    # ------------------------------------------------------- state plumbing

    def state_to_spec(self, state):
        g = self.grid
        comps = [state.rho - self.eq.rho_bar]
        comps.extend(state.u[c] for c in range(g.dim))
        comps.append(state.phi - self.eq.phi_bar)
        return np.stack([g.fft(c) for c in comps])

    def spec_to_state(self, X, t):
        g = self.grid
        fields = [g.ifft(X[c]).real for c in range(g.dim + 2)]
        return FieldState(rho=self.eq.rho_bar + fields[0],
                          u=np.stack(fields[1:1 + g.dim]),
                          phi=self.eq.phi_bar + fields[-1], t=float(t))

    # ------------------------------------------------------------ operators

    def nonlinear(self, X):
        """Explicit remainder N(X): conservative mass flux, pressure and
        advection with 2/3-dealiased products, chemotactic drive."""
        g, p = self.grid, self.params
        Xm = X * self.mask
        rho2 = g.ifft(Xm[0]).real
        rho_tot = self.eq.rho_bar + rho2
        if not np.min(rho_tot) > 0:
            raise BlowUpError("density left the positive range", t=self._t)
        us = [g.ifft(Xm[1 + c]).real for c in range(g.dim)]

        out = np.empty_like(X)
        flux = 0.0
        for c in range(g.dim):
            flux = flux + 1j * self.kc[c] * g.fft(rho_tot * us[c])
        out[0] = -flux * self.mask

        cpress = pressure_eval(p.pressure, rho_tot, order=1) / rho_tot
        grad_rho = [g.ifft(1j * self.kc[c] * Xm[0]).real for c in range(g.dim)]
        for i in range(g.dim):
            adv = 0.0
            for j in range(g.dim):
                adv = adv + us[j] * g.ifft(1j * self.kc[j] * Xm[1 + i]).real
            phys = -cpress * grad_rho[i] - adv
            out[1 + i] = g.fft(phys) * self.mask + 1j * self.kc[i] * p.mu * X[-1]
        out[-1] = p.a * X[0]
        return out

    def advance(self, X, t):
        """One step from time t; returns the new spectrum."""
        self._t = float(t)
        if self.scheme == "if_rk4":
            Xn = self._step_ifrk4(X)
        else:
            Xn = self._step_imex(X)
        # keep the spectrum Hermitian so the fields stay real
        axes = tuple(range(1, self.grid.dim + 1))
        return 0.5 * (Xn + _mirror_conj(Xn, axes))

    def _step_ifrk4(self, X):
        dt, E, E2 = self.dt, self.exp_half, self.exp_full
        n1 = self.nonlinear(X)
        n2 = self.nonlinear(E * (X + 0.5 * dt * n1))
        n3 = self.nonlinear(E * X + 0.5 * dt * n2)
        n4 = self.nonlinear(E2 * X + dt * E * n3)
        return E2 * X + dt / 6.0 * (E2 * n1 + 2.0 * E * n2 + 2.0 * E * n3 + n4)

    def _step_imex(self, X):
        n_now = self.nonlinear(X)
        if self._prev is None:
            new = (X + self.dt * n_now) / (1.0 - self.dt * self.lin)
        else:
            Xp, Np = self._prev
            new = (2.0 * X - 0.5 * Xp + self.dt * (2.0 * n_now - Np)) \
                / (1.5 - self.dt * self.lin)
        self._prev = (X, n_now)
        return new


@dataclass
class NonlinearSources:
    """Quadratic sources of the perturbation form: g1 drives the density
    equation, g2 the velocity equation."""

    g1: np.ndarray
    g2: np.ndarray


def nonlinear_sources(params, eq, grid, state):
    """g1 = -div(rho2 u), g2 = -u.grad u - (P'(rho)/rho - P'(rho_bar)/
    rho_bar) grad rho2, with dealiased products; g1 has exactly zero mean."""
    g = grid
    mask = g.dealias_mask
    rho2 = state.rho - eq.rho_bar
    spec_r = g.fft(rho2) * mask
    rho2d = g.ifft(spec_r).real
    us = [g.ifft(g.fft(state.u[c]) * mask).real for c in range(g.dim)]
    kcs = g.k_components()
    g1 = np.zeros(g.shape)
    for c, kc in enumerate(kcs):
        g1 -= g.ifft(1j * kc * g.fft(rho2d * us[c]) * mask).real
    dp_bar = pressure_eval(params.pressure, eq.rho_bar, order=1) / eq.rho_bar
    cdiff = (pressure_eval(params.pressure, state.rho, order=1) / state.rho
             - dp_bar)
    g2 = np.empty((g.dim,) + g.shape)
    for i in range(g.dim):
        adv = np.zeros(g.shape)
        spec_ui = g.fft(state.u[i]) * mask
        for j, kc in enumerate(kcs):
            adv += us[j] * g.ifft(1j * kc * spec_ui).real
        g2[i] = -adv - cdiff * g.ifft(1j * kcs[i] * spec_r).real
    return NonlinearSources(g1=g1, g2=g2)


def rhs(params, eq, grid, state):
    """Time derivatives (drho, du, dphi) of the full system at one state."""
    stepper = TimeStepper(params, eq, grid, dt=1.0)
    stepper._t = state.t
    X = stepper.state_to_spec(state)
    total = stepper.nonlinear(X) + stepper.lin * X
    drho = grid.ifft(total[0]).real
    du = np.stack([grid.ifft(total[1 + c]).real for c in range(grid.dim)])
    dphi = grid.ifft(total[-1]).real
    return drho, du, dphi


def step(params, eq, grid, state, dt, scheme="if_rk4"):
    """Advance a physical state by one CFL-checked step."""
    limit = cfl_limit(params, state, grid)
    if dt > limit:
        raise StepSizeError(f"dt {dt} exceeds the CFL bound {limit:.6g}")
    stepper = TimeStepper(params, eq, grid, dt, scheme)
    X = stepper.state_to_spec(state)
    X = stepper.advance(X, state.t)
    return stepper.spec_to_state(X, state.t + dt)


# ------------------------------------------------------------- energy forms


def energy_EN(params, eq, grid, state, order=2, kappa=0.0):
    """Graded energy E_N and dissipation D_N of the perturbation.

    E_N sums, over derivative multi-indices |l| <= order, the pointwise
    weighted terms int P'(rho)/rho |d^l rho2|^2 + int rho |d^l u|^2
    together with the potential coupling, the potential-gradient ladder
    and the kappa transport correction (one order lower).  D_N collects
    the velocity norm, the density-gradient and potential-gradient
    ladders.  Returns (E_N, D_N).
    """
    g = grid
    p = params
    rho2 = state.rho - eq.rho_bar
    phi2 = state.phi - eq.phi_bar
    spec_r = g.fft(rho2)
    spec_p = g.fft(phi2)
    spec_u = [g.fft(state.u[c]) for c in range(g.dim)]
    crho = pressure_eval(p.pressure, state.rho, order=1) / state.rho
    scale = g.length**g.dim / g.n ** (2 * g.dim)

    e_weighted = 0.0
    d_u = 0.0
    for l in multi_indices(g.dim, order):
        fac = g.deriv_factor(l)
        dr = g.ifft(fac * spec_r).real
        u2 = 0.0
        for su in spec_u:
            u2 = u2 + g.ifft(fac * su).real ** 2
        e_weighted += g.integrate(crho * dr**2) + g.integrate(state.rho * u2)
        d_u += g.integrate(u2)

    s_n = g.sobolev_multiplier(order)
    s_low = g.sobolev_multiplier(order - 1) if order >= 1 else 0.0
    abs_p2 = np.abs(spec_p) ** 2
    cross_pr = (spec_p * np.conj(spec_r)).real
    e_flat = scale * float(np.sum(
        s_n * (-2.0 * p.mu * cross_pr + p.b * p.mu / p.a * abs_p2)
        + p.mu * p.D / p.a * s_n * g.k2 * abs_p2))
    transport = np.zeros(g.shape)
    for su, kc in zip(spec_u, g.k_components()):
        transport = transport + (su * np.conj(1j * kc * spec_r)).real
    e_kappa = kappa * scale * float(np.sum(
        s_low * transport + p.mu / (2.0 * p.a) * s_low * g.k2 * abs_p2))

    abs_u2 = np.zeros(g.shape)
    for su in spec_u:
        abs_u2 = abs_u2 + np.abs(su) ** 2
    d_n = scale * float(np.sum(s_n * abs_u2
                               + s_low * g.k2 * np.abs(spec_r) ** 2
                               + s_n * g.k2 * abs_p2))
    return e_weighted + e_flat + e_kappa, d_n


# ---------------------------------------------------------------- main loop


@dataclass
class SimulationResult:
    """Diagnostics series plus run metadata; arrays share the times axis."""

    times: np.ndarray
    table: dict
    final_state: FieldState
    completed: bool
    abort_reason: str | None
    boundary_time: float
    max_imag_leak: float
    wave_l2: dict | None = None
    snapshots: list = field(default_factory=list)


def simulate(params, eq, grid, state, t_end, dt, scheme="if_rk4",
             sample_stride=1, sobolev_order=2, kappa=0.0,
             compare_wave=False, snapshot_dir=None, snapshot_every=None):
    """Run the solver to t_end, sampling diagnostics every sample_stride
    steps; returns a SimulationResult.

    On blow-up the partial series is returned with completed=False.  With
    compare_wave=True (stable background only) the L2 distances of
    (rho, u, phi) to the diffusion-wave profile of the initial density
    perturbation are recorded at each sample.
    """
    if not np.min(state.rho) > 0:
        raise ValueError("initial density touches vacuum")
    limit = cfl_limit(params, state, grid)
    if dt > limit:
        raise StepSizeError(f"dt {dt} exceeds the CFL bound {limit:.6g}")
    coeffs = stability_check(params, eq)
    if compare_wave and not coeffs.margin > 0:
        raise StabilityError("wave comparison needs a stable background")
    boundary_time = ((grid.length / 8.0) ** 2 / coeffs.sigma
                     if coeffs.sigma > 0 else math.inf)

    stepper = TimeStepper(params, eq, grid, dt, scheme)
    X = stepper.state_to_spec(state)
    spec0_rho = X[0].copy()
    nsteps = max(1, int(round(t_end / dt)))
    scale = grid.length**grid.dim / grid.n ** (2 * grid.dim)
    vol = grid.length**grid.dim

    times = []
    table = {name: [] for name in DIAGNOSTIC_COLUMNS if name != "t"}
    wave = {"rho": [], "u": [], "phi": []} if compare_wave else None
    snapshots = []
    leak_max = 0.0

    def record(Xc, t):
        nonlocal leak_max
        g = grid
        fields = [g.ifft(Xc[c]) for c in range(g.dim + 2)]
        leak = max(float(np.max(np.abs(f.imag))) for f in fields)
        leak_max = max(leak_max, leak)
        rho2 = fields[0].real
        us = np.stack([f.real for f in fields[1:1 + g.dim]])
        phi2 = fields[-1].real
        rho_tot = eq.rho_bar + rho2
        if not np.min(rho_tot) > 0:
            raise BlowUpError("density left the positive range", t=t)
        if not np.all(np.isfinite(rho2)):
            raise BlowUpError("non-finite fields", t=t)

        u2 = np.sum(us**2, axis=0)
        grad_phi2 = 0.0
        for kc in g.k_components():
            grad_phi2 = grad_phi2 + g.ifft(1j * kc * Xc[-1]).real ** 2
        phi_t = g.ifft(-(params.b + params.D * g.k2) * Xc[-1]
                       + params.a * Xc[0]).real
        weighted_u2 = g.integrate(rho_tot * u2)
        mean_r = float(Xc[0].flat[0].real) / g.n**g.dim
        mean_p = float(Xc[-1].flat[0].real) / g.n**g.dim

        table["mass"].append(g.integrate(rho_tot))
        table["F"].append(
            0.5 / params.mu * weighted_u2
            + 1.0 / params.mu * g.integrate(potential_G(params, eq, rho_tot))
            + 0.5 / params.a * g.integrate(grad_phi2 + params.b * phi2**2)
            - g.integrate(rho2 * phi2))
        table["dissipation_u"].append(params.alpha / params.mu * weighted_u2)
        table["dissipation_phi"].append(1.0 / params.a * g.integrate(phi_t**2))
        table["l2_rho"].append(g.l2(rho2 - mean_r))
        table["l2_u"].append(g.l2(us))
        table["l2_phi"].append(g.l2(phi2 - mean_p))
        table["linf_rho"].append(g.linf(rho2 - mean_r))
        table["linf_u"].append(float(np.max(np.sqrt(u2))))
        grad_rho2 = 0.0
        for kc in g.k_components():
            grad_rho2 = grad_rho2 + g.ifft(1j * kc * Xc[0]).real ** 2
        fluct = rho2 - mean_r
        table["h1_rho"].append(
            math.sqrt(g.integrate(fluct**2) + g.integrate(grad_rho2)))
        e_n, d_n = energy_EN(
            params, eq, grid,
            FieldState(rho=rho_tot, u=us, phi=eq.phi_bar + phi2, t=t),
            order=sobolev_order, kappa=kappa)
        table["E_N"].append(e_n)
        table["D_N"].append(d_n)

        if compare_wave:
            damp = np.exp(-coeffs.sigma * g.k2 * t)
            rw = spec0_rho * damp
            wave["rho"].append(
                math.sqrt(scale * float(np.sum(np.abs(Xc[0] - rw) ** 2))))
            du2 = 0.0
            for c, kc in enumerate(g.k_components()):
                uw = -(coeffs.sigma / eq.rho_bar) * 1j * kc * rw
                du2 = du2 + np.abs(Xc[1 + c] - uw) ** 2
            wave["u"].append(math.sqrt(scale * float(np.sum(du2))))
            pw = params.a / params.b * rw
            wave["phi"].append(
                math.sqrt(scale * float(np.sum(np.abs(Xc[-1] - pw) ** 2))))
        times.append(t)

    completed = True
    abort = None
    try:
        record(X, 0.0)
        for n in range(1, nsteps + 1):
            X = stepper.advance(X, (n - 1) * dt)
            if n % sample_stride == 0 or n == nsteps:
                t = n * dt
                record(X, t)
                if snapshot_dir is not None and snapshot_every is not None \
                        and n % snapshot_every == 0:
                    path = os.path.join(snapshot_dir, f"state_{n:08d}.vasw")
                    write_snapshot(path, grid,
                                   stepper.spec_to_state(X, t))
                    snapshots.append(path)
    except BlowUpError as err:
        completed = False
        abort = str(err)

    final = stepper.spec_to_state(X, times[-1] if times else 0.0)
    out_table = {name: np.asarray(vals) for name, vals in table.items()}
    return SimulationResult(
        times=np.asarray(times), table=out_table, final_state=final,
        completed=completed, abort_reason=abort,
        boundary_time=boundary_time, max_imag_leak=leak_max,
        wave_l2=({k: np.asarray(v) for k, v in wave.items()}
                 if compare_wave else None),
        snapshots=snapshots)


def write_diagnostics_csv(path, result):
    """Diagnostics table as CSV with the documented column order."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DIAGNOSTIC_COLUMNS)
        for i, t in enumerate(result.times):
            row = [repr(float(t))]
            row.extend(repr(float(result.table[name][i]))
                       for name in DIAGNOSTIC_COLUMNS[1:])
            writer.writerow(row)


# ----------------------------------------------------------------- snapshots


def _field_names(dim):
    return ["rho"] + [f"u{c}" for c in range(dim)] + ["phi"]


def write_snapshot(path, grid, state):
    """Binary field snapshot: "VASW" header then little-endian f64 data,
    one block per field, x-fastest within each block."""
    names = _field_names(grid.dim)
    arrays = [state.rho] + [state.u[c] for c in range(grid.dim)] + [state.phi]
    with open(path, "wb") as fh:
        fh.write(SNAP_MAGIC)
        fh.write(struct.pack("<III", SNAP_VERSION, grid.dim, grid.n))
        fh.write(struct.pack("<dd", grid.length, state.t))
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        for arr in arrays:
            fh.write(np.asarray(arr, dtype="<f8").ravel(order="F").tobytes())


def read_snapshot(path):
    """Parse a snapshot written by write_snapshot; returns (grid, state).

    Corruption raises SnapshotFormatError carrying the byte offset."""
    data = open(path, "rb").read()
    off = 0

    def take(count, what):
        nonlocal off
        if off + count > len(data):
            raise SnapshotFormatError(f"truncated {what}", offset=off)
        chunk = data[off:off + count]
        off += count
        return chunk

    if take(4, "magic") != SNAP_MAGIC:
        raise SnapshotFormatError("bad magic", offset=0)
    version, dim, n = struct.unpack("<III", take(12, "version header"))
    if version != SNAP_VERSION:
        raise SnapshotFormatError(f"unsupported version {version}", offset=4)
    length, t = struct.unpack("<dd", take(16, "geometry header"))
    try:
        grid = Grid(dim=dim, n=n, length=length)
    except ValueError as err:
        raise SnapshotFormatError(str(err), offset=8)
    (count,) = struct.unpack("<I", take(4, "field count"))
    names = []
    for _ in range(count):
        table_off = off
        (nlen,) = struct.unpack("<I", take(4, "name length"))
        if nlen > 64:
            raise SnapshotFormatError("implausible name length",
                                      offset=table_off)
        names.append(take(nlen, "field name").decode("utf-8"))
    if names != _field_names(dim):
        raise SnapshotFormatError(f"unexpected field table {names}",
                                  offset=36)
    fields = []
    npts = n**dim
    for name in names:
        block_off = off
        raw = take(8 * npts, f"field data for {name}")
        arr = np.frombuffer(raw, dtype="<f8").reshape((n,) * dim, order="F")
        if not np.all(np.isfinite(arr)):
            raise SnapshotFormatError(f"non-finite values in {name}",
                                      offset=block_off)
        fields.append(arr.astype(float))
    if off != len(data):
        raise SnapshotFormatError("trailing bytes", offset=off)
    state = FieldState(rho=fields[0], u=np.stack(fields[1:1 + dim]),
                       phi=fields[-1], t=t)
    return grid, state
