"""Certified per-mode Lyapunov functional for the linearized dynamics.

For each wavevector k the quadratic energy

    E(U,k) = P'(rho_bar)/rho_bar |rho|^2 + rho_bar |u|^2
             + (mu D / a) |k|^2 |phi|^2 + (b mu / a) |phi|^2
             - 2 mu Re(phi conj(rho))
             + kappa [ Re(u . conj(i k rho)) / (1 + |k|^2)
                       + (mu / 2a) |k|^2/(1+|k|^2) |phi|^2 ]

controls |U|^2 + |k|^2 |phi|^2 from both sides when the stability margin
is positive, and decays along the linear flow like
exp(-lambda |k|^2 t / (1 + |k|^2)).

Only the longitudinal triple (rho, k.u/|k|, phi) carries the coupling;
writing the functional as a 3x3 Hermitian form M(k) on that triple (the
transverse velocity contributes rho_bar |u_perp|^2, decaying at 2 alpha)
turns certification into finite linear algebra:

    kappa:  largest dyadic 2^-j keeping M(k) positive definite and the
            decrement Q(k) = -(S* M + M S) nonnegative over a k sample,
    lambda: largest rate, found by bisection, with
            Q(k) - lambda |k|^2/(1+|k|^2) M(k) >= 0 on the sample
            (capped by the transverse rate 2 alpha).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh

from .errors import StabilityError
from .model import pressure_eval, stability_check
from .spectral import assemble_A, decompose, propagator

DEFAULT_K_SAMPLE = tuple(
    sorted(set(np.geomspace(1e-3, 10.0, 60)) | {0.01, 0.1, 1.0, 10.0}))


@dataclass(frozen=True)
class LyapunovWeights:
    """Selected coupling kappa and the certified envelope rate lambda_hat."""

    params: object
    eq: object
    kappa: float
    lambda_hat: float
    k_sample: tuple = field(default=DEFAULT_K_SAMPLE, repr=False)


@dataclass(frozen=True)
class ModeEnergy:
    """E split into the base quadratic form and the kappa coupling part."""

    value: float
    base: float
    kappa_part: float


def coupling_block(params, eq):
    """The (rho, phi) block [[P'/rho_bar, -mu], [-mu, b mu / a]].

    Positive definite exactly when the stability margin is.
    """
    dp = pressure_eval(params.pressure, eq.rho_bar, order=1)
    return np.array([[dp / eq.rho_bar, -params.mu],
                     [-params.mu, params.b * params.mu / params.a]])


def form_matrix(w, kmag):
    """Hermitian matrix of E on the longitudinal triple (rho, u_L, phi)."""
    p, eq = w.params, w.eq
    k2 = float(kmag) ** 2
    dp = pressure_eval(p.pressure, eq.rho_bar, order=1)
    cross = w.kappa * kmag / (2.0 * (1.0 + k2))
    M = np.array([
        [dp / eq.rho_bar, -1j * cross, -p.mu],
        [1j * cross, eq.rho_bar, 0.0],
        [-p.mu, 0.0,
         p.mu * p.D / p.a * k2 + p.b * p.mu / p.a
         + w.kappa * p.mu / (2.0 * p.a) * k2 / (1.0 + k2)],
    ], dtype=complex)
    return M


def _generator(params, eq, kmag):
    # longitudinal ODE matrix for (rho, u_L, phi); u_L = unit(k) . u
    dp = pressure_eval(params.pressure, eq.rho_bar, order=1)
    return np.array([
        [0.0, -1j * eq.rho_bar * kmag, 0.0],
        [-1j * dp / eq.rho_bar * kmag, -params.alpha, 1j * params.mu * kmag],
        [params.a, 0.0, -(params.b + params.D * kmag**2)],
    ], dtype=complex)


def _decrement(w, kmag):
    M = form_matrix(w, kmag)
    S = _generator(w.params, w.eq, kmag)
    return -(S.conj().T @ M + M @ S)


def _energy_arrays(w, k, rho, u, phi):
    # vectorized E over any leading axes; u carries the vector components last
    p, eq = w.params, w.eq
    k2 = k.mag**2
    dp = pressure_eval(p.pressure, eq.rho_bar, order=1)
    u2 = np.sum(np.abs(u) ** 2, axis=-1)
    base = (dp / eq.rho_bar * np.abs(rho) ** 2
            + eq.rho_bar * u2
            + p.mu * p.D / p.a * k2 * np.abs(phi) ** 2
            + p.b * p.mu / p.a * np.abs(phi) ** 2
            - 2.0 * p.mu * (phi * np.conj(rho)).real)
    transport = np.sum(u * np.conj(1j * k.vec * rho[..., None]), axis=-1).real
    kap = w.kappa * (transport / (1.0 + k2)
                     + p.mu / (2.0 * p.a) * k2 / (1.0 + k2)
                     * np.abs(phi) ** 2)
    return base + kap, base, kap


def mode_energy(w, k, m):
    """Evaluate E at one mode, straight from the defining display."""
    value, base, kap = _energy_arrays(
        w, k, np.asarray(m.rho_hat), np.asarray(m.u_hat),
        np.asarray(m.phi_hat))
    return ModeEnergy(value=float(value), base=float(base),
                      kappa_part=float(kap))


def envelope_rate(w, kmag):
    """Certified decay rate lambda_hat |k|^2 / (1 + |k|^2) at one k."""
    k2 = float(kmag) ** 2
    return w.lambda_hat * k2 / (1.0 + k2)


def _psd(H, slack):
    return eigvalsh(H)[0] >= -slack


def kappa_select(params, eq, k_sample=None):
    """Pick kappa dyadically and certify the envelope rate lambda_hat.

    Walks kappa through 1/2, 1/4, ... until both (i) M(k) is positive
    definite and (ii) the decrement Q(k) is positive semidefinite across
    the wavenumber sample; then bisects for the largest lambda with
    Q(k) >= lambda k^2/(1+k^2) M(k) there, capped by the transverse 2 alpha.
    Raises StabilityError off the stable regime.
    """
    if stability_check(params, eq).margin <= 0:
        raise StabilityError("Lyapunov certification needs margin > 0")
    ks = np.asarray(k_sample if k_sample is not None else DEFAULT_K_SAMPLE,
                    dtype=float)
    ks = ks[ks > 0]

    for j in range(1, 21):
        kappa = 0.5**j
        w = LyapunovWeights(params=params, eq=eq, kappa=kappa,
                            lambda_hat=0.0, k_sample=tuple(ks))
        mats = [form_matrix(w, kk) for kk in np.concatenate(([0.0], ks))]
        if not all(eigvalsh(M)[0] > 0 for M in mats):
            continue
        decs = [_decrement(w, kk) for kk in ks]
        slacks = [1e-12 * np.linalg.norm(Q) for Q in decs]
        dec0 = _decrement(w, 0.0)
        if not (_psd(dec0, 1e-12 * np.linalg.norm(dec0))
                and all(_psd(Q, s) for Q, s in zip(decs, slacks))):
            continue

        weights = [kk**2 / (1.0 + kk**2) for kk in ks]
        forms = [form_matrix(w, kk) for kk in ks]

        def holds(lam):
            for Q, M, wt, s in zip(decs, forms, weights, slacks):
                if lam * wt > 2.0 * params.alpha:
                    return False
                if not _psd(Q - lam * wt * M, s):
                    return False
            return True

        hi = 1.0
        while holds(hi) and hi < 1e6:
            hi *= 2.0
        lo = 0.5 * hi
        while not holds(lo) and lo > 1e-12:
            lo *= 0.5
        if not holds(lo):
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if holds(mid):
                lo = mid
            else:
                hi = mid
        return LyapunovWeights(params=params, eq=eq, kappa=kappa,
                               lambda_hat=lo, k_sample=tuple(ks))
    raise StabilityError("no dyadic kappa certified the energy form")


@dataclass
class DissipationReport:
    """Envelope check E(t) <= E(0) exp(-lambda k^2 t/(1+k^2)) along a mode."""

    kmag: float
    times: np.ndarray
    energies: np.ndarray
    envelopes: np.ndarray
    max_ratio: float
    t_worst: float
    ok: bool


def suggested_dt(params, eq, kmag, cap=0.05):
    """Largest sampling dt honoring the fastest-rate precondition."""
    dec = decompose(params, eq, kmag, label=False)
    rate_cap = max(float(np.max(np.abs(dec.roots))), params.alpha)
    return min(cap, 0.09 / rate_cap)


def dissipation_check(params, eq, w, k, m0, horizon=20.0, dt=0.05,
                      slack=1e-8):
    """Evolve one mode exactly and compare E(t) against its envelope."""
    dec = decompose(params, eq, k.mag, label=False)
    rate_cap = max(float(np.max(np.abs(dec.roots))), params.alpha)
    if dt > 0.1 / rate_cap:
        raise ValueError(f"sampling dt {dt} too coarse for rates ~{rate_cap:.3g}")
    times = np.arange(0.0, horizon + 0.5 * dt, dt)
    e0 = mode_energy(w, k, m0).value
    nu = envelope_rate(w, k.mag)
    damp = np.exp(-params.alpha * times)

    if dec.degenerate:
        A = assemble_A(params, eq, k.mag)
        props = np.stack([propagator(A, dec, t) for t in times])
    else:
        phases = np.exp(np.outer(times, dec.roots))
        props = np.tensordot(phases, np.stack(dec.projections), axes=(1, 0))

    u0 = np.asarray(m0.u_hat, dtype=complex)
    if k.mag == 0:
        v = props @ np.array([m0.rho_hat, 0.0, m0.phi_hat], dtype=complex)
        u_t = damp[:, None] * u0[None, :]
    else:
        unit = k.unit
        u_perp0 = u0 - np.dot(unit, u0) * unit
        v0 = np.array([m0.rho_hat, 1j * np.dot(k.vec, u0), m0.phi_hat])
        v = props @ v0
        u_t = (damp[:, None] * u_perp0[None, :]
               + np.outer(v[:, 1], -1j * k.vec / k.mag**2))
    energies = np.asarray(
        _energy_arrays(w, k, v[:, 0], u_t, v[:, 2])[0], dtype=float)

    envelopes = e0 * np.exp(-nu * times)
    if e0 <= 0.0:
        # zero mode: energies must stay at zero (up to roundoff)
        ratios = np.where(np.abs(energies) < 1e-300, 0.0, np.inf)
    else:
        ratios = energies / envelopes
    imax = int(np.argmax(ratios))
    max_ratio = float(ratios[imax])
    return DissipationReport(kmag=k.mag, times=times, energies=energies,
                             envelopes=envelopes, max_ratio=max_ratio,
                             t_worst=float(times[imax]),
                             ok=max_ratio <= 1.0 + slack)


LYAPUNOV_COLUMNS = ("kmag", "t", "energy", "envelope", "ratio")


def write_lyapunov_csv(path, reports):
    """Emit dissipation reports as (kmag, t, energy, envelope, ratio) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LYAPUNOV_COLUMNS)
        for rep in reports:
            for t, e, env in zip(rep.times, rep.energies, rep.envelopes):
                ratio = e / env if env > 0 else 0.0
                writer.writerow([repr(float(v))
                                 for v in (rep.kmag, t, e, env, ratio)])
