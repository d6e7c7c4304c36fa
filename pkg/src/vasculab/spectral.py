"""Per-Fourier-mode linear theory around the constant state.

For wavevector k the longitudinal variables (rho_hat, i k.u_hat, phi_hat)
obey V' = A(|k|) V with

    A = [[0,                 -rho_bar,  0        ],
         [P'(rho_bar)/rho_bar |k|^2, -alpha, -mu |k|^2],
         [a,                 0,        -b - D |k|^2]]

while the transverse velocity decays by exp(-alpha t) exactly.  The
characteristic polynomial is a real cubic

    g(lam) = lam^3 + c2 lam^2 + c1 lam + c0,

solved here in closed form (trigonometric for three real roots, Cardano
for one real plus a conjugate pair) followed by a guarded Newton polish.
The slow root behaves like -sigma |k|^2 + O(|k|^4); the other two stay
near -b and -alpha.  The matrix exponential exp(A t) is assembled from
spectral eigenprojections, with a Putzer-style divided-difference
fallback when eigenvalues collide.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateSpectrumError
from .model import pressure_eval, stability_check

# relative eigenvalue separation below which projections are refused
TOL_SEP = 1e-6
# label the slow root by proximity to -sigma k^2 up to this kmag,
# by continuation along k beyond it
LABEL_KMAG = 0.5


class WaveVector:
    """A real wavevector in 1, 2 or 3 dimensions."""

    def __init__(self, comps):
        vec = np.atleast_1d(np.asarray(comps, dtype=float))
        if vec.ndim != 1 or vec.size not in (1, 2, 3):
            raise ValueError("wavevector must have 1, 2 or 3 components")
        self.vec = vec
        self.mag = float(np.linalg.norm(vec))

    @property
    def dim(self):
        return self.vec.size

    @property
    def unit(self):
        if self.mag == 0.0:
            raise ValueError("zero wavevector has no direction")
        return self.vec / self.mag

    def __repr__(self):
        return f"WaveVector({self.vec.tolist()})"


@dataclass
class ModeState:
    """One Fourier mode of the perturbation (rho_hat, u_hat, phi_hat)."""

    rho_hat: complex
    u_hat: np.ndarray
    phi_hat: complex

    def __post_init__(self):
        self.rho_hat = complex(self.rho_hat)
        self.phi_hat = complex(self.phi_hat)
        self.u_hat = np.atleast_1d(np.asarray(self.u_hat, dtype=complex))

    def amplitude(self):
        """Euclidean size sqrt(|rho|^2 + |u|^2 + |phi|^2)."""
        return math.sqrt(abs(self.rho_hat) ** 2
                         + float(np.sum(np.abs(self.u_hat) ** 2))
                         + abs(self.phi_hat) ** 2)


@dataclass(frozen=True)
class CubicCoeffs:
    """Monic cubic g(lam) = lam^3 + c2 lam^2 + c1 lam + c0."""

    c2: float
    c1: float
    c0: float

    def eval(self, lam):
        return ((lam + self.c2) * lam + self.c1) * lam + self.c0

    def deriv(self, lam):
        return (3.0 * lam + 2.0 * self.c2) * lam + self.c1


def assemble_A(params, eq, kmag):
    """Longitudinal system matrix A(|k|) acting on (rho, ik.u, phi)."""
    k2 = float(kmag) ** 2
    dp = pressure_eval(params.pressure, eq.rho_bar, order=1)
    return np.array([
        [0.0, -eq.rho_bar, 0.0],
        [dp / eq.rho_bar * k2, -params.alpha, -params.mu * k2],
        [params.a, 0.0, -params.b - params.D * k2],
    ])


def characteristic_coeffs(params, eq, kmag):
    """Coefficients of det(lam I - A(|k|)), a real monic cubic.

    c0 = (b + D k^2) P' k^2 - a mu rho_bar k^2 is positive for k != 0
    exactly when the stability margin is, up to the D P' k^4 term.
    """
    k2 = float(kmag) ** 2
    dp = pressure_eval(params.pressure, eq.rho_bar, order=1)
    c2 = params.b + params.D * k2 + params.alpha
    c1 = (params.b * params.alpha + params.D * params.alpha * k2 + dp * k2)
    c0 = (params.b + params.D * k2) * dp * k2 \
        - params.a * params.mu * eq.rho_bar * k2
    return CubicCoeffs(c2=c2, c1=c1, c0=c0)


def discriminant(coeffs):
    """Cubic discriminant; > 0 three distinct real roots, < 0 one real root
    plus a conjugate pair, = 0 a repeated root."""
    c2, c1, c0 = coeffs.c2, coeffs.c1, coeffs.c0
    return (18.0 * c2 * c1 * c0 - 4.0 * c2**3 * c0 + c2**2 * c1**2
            - 4.0 * c1**3 - 27.0 * c0**2)


def _root_scale(coeffs):
    return max(1.0, abs(coeffs.c2), abs(coeffs.c1) ** 0.5,
               abs(coeffs.c0) ** (1.0 / 3.0))


def _polish(coeffs, lam):
    # guarded Newton; accept a step only if the residual actually drops
    for _ in range(3):
        g = coeffs.eval(lam)
        dg = coeffs.deriv(lam)
        if g == 0 or abs(dg) < 1e-30:
            break
        cand = lam - g / dg
        if abs(coeffs.eval(cand)) < abs(g):
            lam = cand
        else:
            break
    return lam


def solve_cubic(coeffs):
    """All three roots of the cubic, sorted by (real, imag) ascending.

    Closed form plus Newton polish; the residual contract
    |g(lam)| <= 1e-10 max(1, |lam|^3) is enforced.
    """
    c2 = coeffs.c2
    p = coeffs.c1 - c2**2 / 3.0
    q = 2.0 * c2**3 / 27.0 - c2 * coeffs.c1 / 3.0 + coeffs.c0
    delta = discriminant(coeffs)
    tol = 1e-13 * _root_scale(coeffs) ** 6

    if delta > tol:
        # three distinct real roots; p < 0 is guaranteed on this branch
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = min(1.0, max(-1.0, 3.0 * q / (p * m)))
        phi = math.acos(arg)
        ys = [m * math.cos((phi - 2.0 * math.pi * j) / 3.0) for j in range(3)]
    elif delta < -tol:
        # one real root via Cardano, avoiding cancellation in u
        s = math.sqrt(q**2 / 4.0 + p**3 / 27.0)
        sign = 1.0 if q >= 0 else -1.0
        u = np.cbrt(-q / 2.0 - sign * s)
        v = -p / (3.0 * u) if u != 0 else 0.0
        yr = -(u + v) / 2.0
        yi = math.sqrt(3.0) / 2.0 * (u - v)
        ys = [u + v, complex(yr, yi), complex(yr, -yi)]
    else:
        # repeated root
        if abs(p) < 1e-14 * _root_scale(coeffs) ** 2:
            y = np.cbrt(-q)
            ys = [y, y, y]
        else:
            yd = -3.0 * q / (2.0 * p)
            ys = [3.0 * q / p, yd, yd]

    roots = np.array([_polish(coeffs, y - c2 / 3.0) for y in ys],
                     dtype=complex)
    roots = roots[np.lexsort((roots.imag, roots.real))]
    bound = 1e-10 * max(1.0, float(np.max(np.abs(roots))) ** 3)
    resid = np.max(np.abs([coeffs.eval(r) for r in roots]))
    if resid > bound:
        raise ArithmeticError(
            f"cubic residual {resid:.3e} exceeds bound {bound:.3e}")
    return roots


def asymptotic_roots(params, eq, kmag):
    """Leading small-k root positions (-sigma k^2, -b, -alpha)."""
    sigma = stability_check(params, eq).sigma
    return np.array([-sigma * float(kmag) ** 2, -params.b, -params.alpha])


def _assign_by_continuity(prev, roots):
    # best of the 6 permutations of 3 roots against the previous labels
    best, best_cost = None, np.inf
    for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2),
                 (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        cost = sum(abs(roots[p] - prev[j]) for j, p in enumerate(perm))
        if cost < best_cost:
            best, best_cost = perm, cost
    return roots[list(best)]


def _label_small_k(params, eq, kmag, roots):
    sigma = stability_check(params, eq).sigma
    roots = list(roots)
    i1 = int(np.argmin([abs(r + sigma * kmag**2) for r in roots]))
    lam1 = roots.pop(i1)
    r2, r3 = roots
    if abs(r2.imag) > 1e-12 * max(1.0, abs(r2)):
        if r2.imag < r3.imag:
            r2, r3 = r3, r2          # lam2 takes the positive imaginary part
    elif abs(r3 + params.b) < abs(r2 + params.b):
        r2, r3 = r3, r2              # lam2 is the root continuing from -b
    return np.array([lam1, r2, r3], dtype=complex)


def label_roots(params, eq, kmag, roots=None):
    """Order the spectrum as (lam1, lam2, lam3).

    lam1 is the slow root near -sigma k^2 (proximity for kmag <= 0.5,
    continuation in k beyond), lam2 continues from -b, lam3 from -alpha;
    for a conjugate pair lam2 carries the positive imaginary part.
    """
    kmag = float(kmag)
    if kmag <= LABEL_KMAG:
        if roots is None:
            roots = solve_cubic(characteristic_coeffs(params, eq, kmag))
        return _label_small_k(params, eq, kmag, roots)
    nstep = max(8, int(math.ceil(math.log(kmag / LABEL_KMAG) / math.log(1.1))))
    path = np.geomspace(LABEL_KMAG, kmag, nstep + 1)
    labeled = _label_small_k(
        params, eq, LABEL_KMAG,
        solve_cubic(characteristic_coeffs(params, eq, LABEL_KMAG)))
    for kk in path[1:-1]:
        labeled = _assign_by_continuity(
            labeled, solve_cubic(characteristic_coeffs(params, eq, kk)))
    if roots is None:
        roots = solve_cubic(characteristic_coeffs(params, eq, kmag))
    return _assign_by_continuity(labeled, roots)


@dataclass
class SpectralDecomposition:
    """Labeled spectrum of A(|k|) plus eigenprojections when well separated."""

    kmag: float
    coeffs: CubicCoeffs
    roots: np.ndarray           # (lam1, lam2, lam3)
    discriminant: float
    klass: str                  # three_real | one_real_pair | degenerate
    projections: np.ndarray | None
    degenerate: bool


def eigenprojections(A, roots, tol_sep=TOL_SEP):
    """Spectral projections P_j = prod_{l!=j} (A - lam_l) / (lam_j - lam_l).

    Refuses (DegenerateSpectrumError) when the relative separation of some
    eigenvalue pair is below tol_sep.
    """
    roots = np.asarray(roots, dtype=complex)
    radius = float(np.max(np.abs(roots)))
    seps = [abs(roots[i] - roots[j]) for i in range(3) for j in range(i + 1, 3)]
    if min(seps) <= tol_sep * max(radius, 1e-300):
        raise DegenerateSpectrumError(
            f"eigenvalue separation {min(seps):.3e} below "
            f"{tol_sep:.1e} x radius {radius:.3e}")
    A = np.asarray(A, dtype=complex)
    eye = np.eye(3, dtype=complex)
    projs = np.empty((3, 3, 3), dtype=complex)
    for j in range(3):
        others = [l for l in range(3) if l != j]
        num = (A - roots[others[0]] * eye) @ (A - roots[others[1]] * eye)
        den = (roots[j] - roots[others[0]]) * (roots[j] - roots[others[1]])
        projs[j] = num / den
    return projs


def decompose(params, eq, kmag, label=True):
    """Roots, class and projections of A(|k|) at one wavenumber."""
    coeffs = characteristic_coeffs(params, eq, kmag)
    roots = solve_cubic(coeffs)
    if label:
        roots = label_roots(params, eq, kmag, roots)
    delta = discriminant(coeffs)
    radius = float(np.max(np.abs(roots)))
    seps = [abs(roots[i] - roots[j]) for i in range(3) for j in range(i + 1, 3)]
    degenerate = min(seps) <= TOL_SEP * max(radius, 1e-300)
    tol = 1e-13 * _root_scale(coeffs) ** 6
    if degenerate:
        klass = "degenerate"
    elif delta > tol:
        klass = "three_real"
    elif delta < -tol:
        klass = "one_real_pair"
    else:
        klass = "degenerate"
    A = assemble_A(params, eq, kmag)
    projections = None if degenerate else eigenprojections(A, roots)
    return SpectralDecomposition(kmag=float(kmag), coeffs=coeffs, roots=roots,
                                 discriminant=delta, klass=klass,
                                 projections=projections,
                                 degenerate=degenerate)


def propagator(A, decomp, t):
    """exp(A t) from the spectral decomposition, Putzer when degenerate."""
    if decomp.degenerate or decomp.projections is None:
        return propagator_putzer(A, decomp.roots, t)
    phases = np.exp(decomp.roots * t)
    return np.tensordot(phases, decomp.projections, axes=1)


def propagator_putzer(A, roots, t):
    """exp(A t) via divided differences of the exponential (Putzer form).

    exp(A t) = f[l1] I + f[l1,l2](A - l1) + f[l1,l2,l3](A - l1)(A - l2)
    with f(lam) = exp(lam t).  The divided differences are read off the
    first row of exp(t Z) for the bidiagonal node matrix Z, which stays
    exact through repeated eigenvalues.
    """
    roots = np.asarray(roots, dtype=complex)
    Z = np.array([[roots[0], 1.0, 0.0],
                  [0.0, roots[1], 1.0],
                  [0.0, 0.0, roots[2]]], dtype=complex)
    dd = expm(t * Z)[0]
    A = np.asarray(A, dtype=complex)
    eye = np.eye(3, dtype=complex)
    B1 = A - roots[0] * eye
    return dd[0] * eye + dd[1] * B1 + dd[2] * B1 @ (A - roots[1] * eye)


def mode_evolve_linear(params, eq, k, m0, t):
    """Exact linear evolution of one mode over time t.

    Transverse velocity decays by exp(-alpha t); the longitudinal triple
    rides exp(A(|k|) t), and u_hat is rebuilt from i k . u_hat.
    """
    if k.dim != m0.u_hat.size:
        raise ValueError("wavevector and velocity dimensions disagree")
    decomp = decompose(params, eq, k.mag, label=False)
    A = assemble_A(params, eq, k.mag)
    P = propagator(A, decomp, t)
    damp = np.exp(-params.alpha * t)
    if k.mag == 0.0:
        v = P @ np.array([m0.rho_hat, 0.0, m0.phi_hat])
        return ModeState(v[0], damp * m0.u_hat, v[2])
    d0 = 1j * complex(np.dot(k.vec, m0.u_hat))
    v = P @ np.array([m0.rho_hat, d0, m0.phi_hat])
    unit = k.unit
    u_long0 = np.dot(unit, m0.u_hat) * unit
    u_perp = m0.u_hat - u_long0
    u_t = damp * u_perp + (-1j * k.vec / k.mag**2) * v[1]
    return ModeState(v[0], u_t, v[2])


def wave_profile_mode(params, eq, kmag, rho0_hat, t):
    """First-order diffusion-wave ansatz of one mode.

    Returns (rho_tilde, longitudinal u_tilde amplitude, phi_tilde):
    the heat factor exp(-sigma k^2 t) on rho0_hat, the Darcy velocity
    -(sigma/rho_bar) i k rho_tilde along the unit wavevector, and the
    chemically balanced phi_tilde = (a/b) rho_tilde.
    """
    sigma = stability_check(params, eq).sigma
    rho_t = np.exp(-sigma * float(kmag) ** 2 * t) * rho0_hat
    u_amp = -(sigma / eq.rho_bar) * 1j * kmag * rho_t
    phi_t = params.a / params.b * rho_t
    return rho_t, u_amp, phi_t


@dataclass(frozen=True)
class ProbeConstants:
    """Calibrated (C, lam) for the error-bound envelopes below r0."""

    C: float
    lam: float
    r0: float


def _error_triple(params, eq, k, m0, t):
    mt = mode_evolve_linear(params, eq, k, m0, t)
    rho_w, u_amp, phi_w = wave_profile_mode(params, eq, k.mag, m0.rho_hat, t)
    u_w = u_amp * k.unit if k.mag > 0 else np.zeros(k.dim, dtype=complex)
    err_rho = abs(mt.rho_hat - rho_w)
    err_u = float(np.linalg.norm(mt.u_hat - u_w))
    err_phi = abs(mt.phi_hat - phi_w)
    return err_rho, err_u, err_phi


def error_bound_ratio(params, eq, k, m0, t, probe, r0=0.5):
    """Measured wave-approximation error over the two-term bound envelope.

    The envelopes are C (|k|^p exp(-lam k^2 t) + exp(-lam t)) |U0| with
    p = 1 for rho and phi, p = 2 for u.  Only valid for |k| <= r0.
    """
    if k.mag > r0:
        raise ValueError(f"error bound only calibrated for |k| <= {r0}")
    err_rho, err_u, err_phi = _error_triple(params, eq, k, m0, t)
    u0 = m0.amplitude()
    if u0 == 0.0:
        return 0.0, 0.0, 0.0
    slow = math.exp(-probe.lam * k.mag**2 * t)
    fast = math.exp(-probe.lam * t)
    b1 = probe.C * (k.mag * slow + fast) * u0
    b2 = probe.C * (k.mag**2 * slow + fast) * u0
    return err_rho / b1, err_u / b2, err_phi / b1


def probe_constants(params, eq, r0=0.5, seed=0):
    """Fit (C, lam) so the wave-error envelopes hold on a calibration grid.

    lam is half the most pessimistic decay rate seen below r0 (slow root
    curvature and fast root real parts); C is the observed supremum of
    error over envelope shape, padded by 25 percent.
    """
    kgrid = np.geomspace(r0 / 50.0, r0, 12)
    slow, fast = [], []
    for kk in kgrid:
        lams = label_roots(params, eq, kk)
        slow.append(-lams[0].real / kk**2)
        fast.append(min(-lams[1].real, -lams[2].real))
    lam = 0.5 * min(min(slow), min(fast))
    if lam <= 0:
        raise ValueError("no uniform decay below r0; unstable background?")

    rng = np.random.default_rng(seed)
    modes = [ModeState(1.0, np.zeros(3), 0.0),
             ModeState(0.0, np.array([1.0, 0, 0]), 0.0),
             ModeState(0.0, np.zeros(3), 1.0)]
    for _ in range(12):
        modes.append(ModeState(
            complex(*rng.normal(size=2)),
            rng.normal(size=3) + 1j * rng.normal(size=3),
            complex(*rng.normal(size=2))))
    tgrid = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0]
    C = 0.0
    for kk in kgrid:
        k = WaveVector([kk, 0.0, 0.0])
        for m0 in modes:
            u0 = m0.amplitude()
            for t in tgrid:
                err_rho, err_u, err_phi = _error_triple(params, eq, k, m0, t)
                s = math.exp(-lam * kk**2 * t)
                f = math.exp(-lam * t)
                C = max(C,
                        err_rho / ((kk * s + f) * u0),
                        err_u / ((kk**2 * s + f) * u0),
                        err_phi / ((kk * s + f) * u0))
    return ProbeConstants(C=1.25 * C, lam=lam, r0=r0)


SPECTRUM_COLUMNS = ("kmag", "re_lambda1", "im_lambda1", "re_lambda2",
                    "im_lambda2", "re_lambda3", "im_lambda3", "delta", "class")


def spectrum_sweep(params, eq, kmags):
    """Labeled decompositions over a set of wavenumbers, sorted ascending."""
    return [decompose(params, eq, kk) for kk in sorted(float(k) for k in kmags)]


def write_spectrum_csv(path, params, eq, kmags):
    """Emit the spectrum sweep as CSV; returns the rows written."""
    rows = []
    for dec in spectrum_sweep(params, eq, kmags):
        l1, l2, l3 = dec.roots
        rows.append((dec.kmag, l1.real, l1.imag, l2.real, l2.imag,
                     l3.real, l3.imag, dec.discriminant, dec.klass))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SPECTRUM_COLUMNS)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])
    return rows


ERROR_RATIO_COLUMNS = ("kmag", "t", "ratio_rho", "ratio_u", "ratio_phi")


def write_error_ratio_csv(path, params, eq, kmags, times, probe,
                          r0=0.5, seed=0):
    """Wave-error / envelope ratios for seeded random modes, as CSV."""
    rng = np.random.default_rng(seed)
    rows = []
    for kk in sorted(float(k) for k in kmags):
        k = WaveVector([kk, 0.0, 0.0])
        m0 = ModeState(complex(*rng.normal(size=2)),
                       rng.normal(size=3) + 1j * rng.normal(size=3),
                       complex(*rng.normal(size=2)))
        for t in times:
            rr, ru, rp = error_bound_ratio(params, eq, k, m0, t, probe, r0)
            rows.append((kk, float(t), rr, ru, rp))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ERROR_RATIO_COLUMNS)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    return rows
