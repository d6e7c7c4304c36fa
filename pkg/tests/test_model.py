import numpy as np
import pytest

from vasculab.errors import QuadratureError
from vasculab.model import (
    DerivedCoeffs,
    Equilibrium,
    ModelParams,
    PressureLaw,
    canonical_model,
    flux_q,
    potential_G,
    pressure_eval,
    stability_check,
)

from oracles import adaptive_simpson


def test_pressure_quadratic_values():
    law = PressureLaw.quadratic(2.0)
    assert pressure_eval(law, 1.0, 0) == pytest.approx(1.0)
    assert pressure_eval(law, 1.0, 1) == pytest.approx(2.0)
    assert pressure_eval(law, 1.0, 2) == pytest.approx(2.0)
    assert pressure_eval(law, 3.0, 0) == pytest.approx(9.0)


def test_pressure_power_against_symbolic_derivatives():
    import sympy

    r = sympy.symbols("r", positive=True)
    for K, gamma in [(1.5, 2.0), (2.0, 3.0), (0.7, 1.4)]:
        expr = K * r**gamma
        law = PressureLaw.power(K, gamma)
        for rho in (0.3, 1.0, 2.7):
            for order in (0, 1, 2):
                want = float(sympy.diff(expr, r, order).subs(r, rho))
                got = pressure_eval(law, rho, order)
                assert got == pytest.approx(want, rel=1e-12)


def test_pressure_rejects_nonpositive_density_and_bad_order():
    law = PressureLaw.quadratic(1.0)
    with pytest.raises(ValueError):
        pressure_eval(law, 0.0)
    with pytest.raises(ValueError):
        pressure_eval(law, -1.0, 1)
    with pytest.raises(ValueError):
        pressure_eval(law, 1.0, 3)


def test_pressure_law_validation():
    with pytest.raises(ValueError):
        PressureLaw.quadratic(0.0)
    with pytest.raises(ValueError):
        PressureLaw.power(1.0, 0.5)
    with pytest.raises(ValueError):
        PressureLaw("cubic", 1.0)


def test_pressure_vectorized():
    law = PressureLaw.power(2.0, 1.5)
    rho = np.array([0.5, 1.0, 2.0])
    got = pressure_eval(law, rho, 1)
    want = np.array([pressure_eval(law, r, 1) for r in rho])
    assert np.allclose(got, want, rtol=1e-14)


def test_model_params_validation():
    law = PressureLaw.quadratic(1.0)
    with pytest.raises(ValueError):
        ModelParams(mu=0.0, alpha=1, D=1, a=1, b=1, pressure=law)
    with pytest.raises(ValueError):
        ModelParams(mu=1, alpha=1, D=-2, a=1, b=1, pressure=law)


def test_equilibrium_phi_bar():
    params = ModelParams(mu=1, alpha=1, D=1, a=3.0, b=2.0,
                         pressure=PressureLaw.quadratic(1.0))
    eq = Equilibrium.of(params, 2.0)
    assert eq.phi_bar == pytest.approx(3.0)
    with pytest.raises(ValueError):
        Equilibrium(0.0, 0.0)


def test_canonical_margin_and_sigma():
    # all constants 1, K=2, rho_bar=1: P'(1)=2, margin = 2-1 = 1, sigma = 1
    params, eq = canonical_model()
    dc = stability_check(params, eq)
    assert dc.margin == pytest.approx(1.0)
    assert dc.sigma == pytest.approx(1.0)
    assert dc.stable


def test_stability_check_unstable_case():
    params = ModelParams(mu=1, alpha=1, D=1, a=1, b=1,
                         pressure=PressureLaw.quadratic(0.5))
    eq = Equilibrium.of(params, 1.0)
    dc = stability_check(params, eq)
    assert dc.margin == pytest.approx(-0.5)
    assert not dc.stable


def test_stability_check_rejects_inconsistent_equilibrium():
    params, _ = canonical_model()
    bad = Equilibrium(1.0, 0.7)
    with pytest.raises(ValueError):
        stability_check(params, bad)


def test_margin_monotone_in_K():
    # margin increases with the pressure stiffness at fixed everything else
    prev = -np.inf
    for K in (0.5, 1.0, 2.0, 4.0, 8.0):
        params = ModelParams(mu=1, alpha=1, D=1, a=1, b=1,
                             pressure=PressureLaw.quadratic(K))
        eq = Equilibrium.of(params, 1.0)
        m = stability_check(params, eq).margin
        assert m > prev
        prev = m


def test_sigma_identity_random_draws():
    rng = np.random.default_rng(7)
    for _ in range(200):
        mu, alpha, D, a, b, K, rho_bar = rng.uniform(0.2, 3.0, size=7)
        params = ModelParams(mu=mu, alpha=alpha, D=D, a=a, b=b,
                             pressure=PressureLaw.quadratic(K))
        eq = Equilibrium.of(params, rho_bar)
        dc = stability_check(params, eq)
        want = (b * K * rho_bar - a * mu * rho_bar) / (b * alpha)
        assert dc.margin == pytest.approx(b * K * rho_bar - a * mu * rho_bar)
        assert dc.sigma == pytest.approx(want, rel=1e-13)


def test_flux_prime_at_equilibrium_equals_sigma():
    # centered difference of q at rho_bar reproduces sigma
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(50):
        mu, alpha, D, a, b, K, rho_bar = rng.uniform(0.3, 2.5, size=7)
        gamma = rng.uniform(1.2, 3.0)
        law = PressureLaw.power(K, gamma) if rng.random() < 0.5 \
            else PressureLaw.quadratic(K)
        params = ModelParams(mu=mu, alpha=alpha, D=D, a=a, b=b, pressure=law)
        eq = Equilibrium.of(params, rho_bar)
        sigma = stability_check(params, eq).sigma
        qp = (flux_q(params, eq, rho_bar + h)
              - flux_q(params, eq, rho_bar - h)) / (2 * h)
        assert qp == pytest.approx(sigma, rel=1e-6, abs=1e-8)


def test_flux_q_canonical_value():
    params, eq = canonical_model()
    # q(rho) = (K/2 rho^2 - rho^2/2)/1 = rho^2/2 for K=2, a=mu=b=alpha=1
    assert flux_q(params, eq, 2.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        flux_q(params, eq, -1.0)


def test_potential_G_quadratic_closed_form_vs_simpson():
    params, eq = canonical_model()
    # oracle: G(rho) = int (rho - s) P'(s)/s ds, P'(s)/s = K
    for rho in (0.4, 1.0, 2.0, 3.5):
        want = adaptive_simpson(lambda s, r=rho: (r - s) * 2.0, 1.0, rho)
        assert potential_G(params, eq, rho) == pytest.approx(want, abs=1e-12)
    assert potential_G(params, eq, 2.0) == pytest.approx(1.0, abs=1e-12)


def test_potential_G_power_law_vs_simpson():
    params = ModelParams(mu=1, alpha=1, D=1, a=1, b=1,
                         pressure=PressureLaw.power(1.3, 2.5))
    eq = Equilibrium.of(params, 1.2)

    def integrand(s, r):
        return (r - s) * pressure_eval(params.pressure, s, 1) / s

    for rho in (0.5, 1.2, 2.4):
        want = adaptive_simpson(lambda s: integrand(s, rho), 1.2, rho)
        assert potential_G(params, eq, rho) == pytest.approx(want, abs=1e-9)


def test_potential_G_normalization_and_convexity():
    rng = np.random.default_rng(11)
    h = 1e-5
    for _ in range(20):
        K = rng.uniform(0.5, 3.0)
        gamma = rng.uniform(1.1, 3.0)
        params = ModelParams(mu=1, alpha=1, D=1, a=1, b=1,
                             pressure=PressureLaw.power(K, gamma))
        eq = Equilibrium.of(params, rng.uniform(0.5, 2.0))
        r0 = eq.rho_bar
        assert potential_G(params, eq, r0) == pytest.approx(0.0, abs=1e-12)
        d1 = (potential_G(params, eq, r0 + h)
              - potential_G(params, eq, r0 - h)) / (2 * h)
        assert d1 == pytest.approx(0.0, abs=1e-8)
        # G'' = P'/rho > 0 so G > 0 away from rho_bar
        assert potential_G(params, eq, r0 * 1.5) > 0
        assert potential_G(params, eq, r0 * 0.5) > 0


def test_potential_G_vectorized_matches_scalar():
    params = ModelParams(mu=1, alpha=1, D=1, a=1, b=1,
                         pressure=PressureLaw.power(2.0, 2.0))
    eq = Equilibrium.of(params, 1.0)
    rho = np.array([0.5, 1.0, 1.5])
    got = potential_G(params, eq, rho)
    want = np.array([potential_G(params, eq, float(r)) for r in rho])
    assert np.allclose(got, want, atol=1e-12)


def test_derived_coeffs_is_plain_record():
    dc = DerivedCoeffs(margin=2.0, sigma=0.5)
    assert dc.stable
    assert not DerivedCoeffs(margin=-1.0, sigma=-0.25).stable
