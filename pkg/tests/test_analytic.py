import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sint
from scipy import special

from metasinr import analytic as A
from metasinr.channel import ENVIRONMENTS, RadioParams
from metasinr.scenario import default_scenario
from metasinr.simulation import empirical_meta

NOISELESS = RadioParams(sigma2=0.0)


def classical_coverage(theta):
    s = math.sqrt(theta)
    return 1.0 / (1.0 + s * (math.pi / 2 - math.atan(1 / s)))


def tbs_only_moment(b, theta):
    # closed form for alpha = 4 without noise
    return 1.0 / special.hyp2f1(b, -0.5, 0.5, -theta)


def test_kernels():
    assert A.kernel_f1(0.0, 50.0, 4.0, 10.0) == 1.0
    assert A.kernel_f2(3, 0.0, 0.01, 50.0, 4.0, 0.2) == 1.0
    d = 80.0
    assert A.kernel_f1(1.0 / (10.0 * d**-4.0), d, 4.0, 10.0) == pytest.approx(0.5)
    s = 3.0 / (0.5 * 0.2 * d**-2.1)
    assert A.kernel_f2(3, s, 0.5, d, 2.1, 0.2) == pytest.approx(0.125)


def test_beta2():
    assert A.beta2(1) == 1.0
    assert A.beta2(3) == pytest.approx(6 ** (-1 / 3))


@pytest.mark.parametrize("m", [1, 2, 3, 4])
@pytest.mark.parametrize("b", [1, 2, 3, 5])
def test_expansion_reproduces_power(m, b):
    exp = A._expansion(np.array([float(b)]), m)
    y = np.linspace(0.0, 3.0, 7)
    base = np.exp(np.outer(exp.ks, -A.beta2(m) * m * y))  # exp(-k beta m y) per multiplier
    via = exp.coef @ np.prod(base[None, :, :] ** exp.weights[:, :, None], axis=1)
    direct = (1 - (1 - np.exp(-A.beta2(m) * m * y)) ** m) ** b
    np.testing.assert_allclose(via[0], direct, atol=1e-10)


@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
def test_tbs_only_closed_form(theta):
    assert A.moment_tbs_only(1, theta, 1e-6, NOISELESS).total == pytest.approx(classical_coverage(theta), abs=1e-9)


def test_tbs_only_reference_value():
    assert A.moment_tbs_only(1, 1.0, 1e-6, NOISELESS).total == pytest.approx(0.5602, abs=1e-3)
    assert A.moment_tbs_only(0, 1.0, 1e-6, NOISELESS).total == 1.0


@pytest.mark.parametrize("b", [2, 3, 5, 2.5])
def test_tbs_only_higher_orders(b):
    assert A.moment_tbs_only(b, 1.0, 1e-6, NOISELESS).total == pytest.approx(tbs_only_moment(b, 1.0), abs=1e-8)


def test_tbs_only_complex_order_is_conjugate_symmetric():
    a = A.moment_tbs_only(0.5 + 2j, 3.0, 1e-6, RadioParams()).total
    b = A.moment_tbs_only(0.5 - 2j, 3.0, 1e-6, RadioParams()).total
    assert a == pytest.approx(np.conj(b))


def test_noise_limited_tbs_only_oracle():
    radio, lam, theta, b = RadioParams(), 1e-6, 2.0, 2
    scale = b * theta * radio.sigma2 / radio.rho_t

    def f(u):
        x = math.sqrt(u / (math.pi * lam))
        return math.exp(-u - scale * x**radio.alpha_t)

    ref, _ = sint.quad(f, 0, np.inf, epsabs=1e-13)
    sc = default_scenario("tbs_only")
    assert A.moment_noise_limited("tbs_only", b, theta, sc).total == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("model", ["mcp", "ppp", "tbs_only"])
def test_noise_limited_without_noise(model):
    sc = default_scenario(model, sigma2=0.0)
    res = A.moment_noise_limited(model, 1, 1.0, sc)
    assert res.total == pytest.approx(1.0, abs=1e-6)
    assert sum(res.terms.values()) == pytest.approx(res.total, abs=1e-12)


@pytest.mark.parametrize("model", ["mcp", "ppp"])
@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
def test_noise_limited_dominates(model, theta):
    sc = default_scenario(model, env="urban")
    nl = A.moment_noise_limited(model, 2, theta, sc).total
    assert nl >= A.moments(sc, theta, [2])[0].total


@pytest.mark.parametrize("model", ["mcp", "ppp"])
def test_zeroth_moment(model):
    assert A.moments(default_scenario(model), 1.0, [0])[0].total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("env", sorted(ENVIRONMENTS))
@pytest.mark.parametrize("model", ["mcp", "ppp", "tbs_only"])
def test_moment_chain_and_terms(model, env):
    sc = default_scenario(model, env=env)
    for theta in (0.1, 1.0, 10.0, 100.0):
        res = A.moments(sc, theta, [1, 2, 3, 4, 5])
        m = np.array([r.total for r in res])
        assert 1.0 + 1e-9 >= m[0] and np.all(np.diff(m) <= 1e-12) and m[-1] >= 0
        assert m[1] >= m[0] ** 2 - 1e-12
        for r in res:
            assert sum(r.terms.values()) == pytest.approx(r.total, abs=1e-9)


@pytest.mark.parametrize("model", ["mcp", "ppp"])
def test_moments_nonincreasing_in_theta(model):
    sc = default_scenario(model, env="dense_urban")
    thetas = np.logspace(-2, 2, 9)
    for b in (1, 2, 3):
        vals = [A.moments(sc, t, [b])[0].total for t in thetas]
        assert np.all(np.diff(vals) <= 1e-10)


@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
def test_grounded_superposition(theta):
    sc = default_scenario("ppp").grounded()
    radio = replace(sc.radio, alpha_l=4.0, alpha_n=4.0, m_l=1, m_n=1, rho_u=sc.radio.rho_t)
    sc = replace(sc, radio=radio)
    lam = sc.deployment.tbs_density + sc.deployment.uav_density
    for b, res in zip((1, 2, 3), A.moments(sc, theta, [1, 2, 3])):
        assert res.total == pytest.approx(A.moment_tbs_only(b, theta, lam, radio).total, abs=1e-3)


def test_vanishing_uav_density():
    sc = default_scenario("ppp").with_uav_density(1e-12)
    ref = A.moment_tbs_only(1, 1.0, sc.deployment.tbs_density, sc.radio).total
    assert A.moment_ppp(1, 1.0, sc).total == pytest.approx(ref, abs=1e-3)


def test_wrong_model_rejected():
    with pytest.raises(ValueError):
        A.moment_mcp(1, 1.0, default_scenario("ppp"))


def test_fractional_order_needs_unit_fading():
    with pytest.raises(A.UnsupportedOrderError):
        A.moments(default_scenario("mcp"), 1.0, [1.5])
    with pytest.raises(A.UnsupportedOrderError):
        A.moments(default_scenario("mcp"), 1.0, [A.MAX_ORDER + 1])
    res = A.moments(default_scenario("mcp", m_l=1), 1.0, [1.5])[0]
    assert 0.0 < res.total < 1.0


@pytest.mark.parametrize("model", ["mcp", "ppp"])
def test_printed_form_differs(model):
    sc = default_scenario(model)
    rep = A.moments(sc, 1.0, [1])[0].total
    pri = A.moments(sc, 1.0, [1], typo_form="printed")[0].total
    assert 0.0 <= pri <= 1.0 and abs(pri - rep) > 1e-3
    with pytest.raises(ValueError):
        A.moments(sc, 1.0, [1], typo_form="other")


def test_beta_symmetric_example():
    assert A.beta_parameters(0.5, 0.3) == pytest.approx((2.0, 2.0))
    assert A.beta_approx_ccdf(0.5, 0.3, [0.5]).ccdf[0] == pytest.approx(0.5, abs=1e-12)


def test_beta_degenerate_step():
    c = A.beta_approx_ccdf(0.7, 0.49, [0.6, 0.8]).ccdf
    np.testing.assert_array_equal(c, [1.0, 0.0])


def test_beta_invalid_moments():
    with pytest.raises(A.MomentRegionError):
        A.beta_approx_ccdf(0.5, 0.6, [0.5])
    with pytest.raises(A.MomentRegionError):
        A.beta_approx_ccdf(0.5, 0.1, [0.5])


@st.composite
def moment_pairs(draw):
    m1 = draw(st.floats(0.01, 0.99))
    m2 = draw(st.floats(m1 * m1 + 1e-4 * m1 * (1 - m1), m1 - 1e-4 * m1 * (1 - m1)))
    return m1, m2


@given(moment_pairs())
def test_beta_mean_identity(pair):
    m1, m2 = pair
    a, b = A.beta_parameters(m1, m2)
    x = np.linspace(0.0, 1.0, 20001)
    # survival function integrates to the mean; use Simpson on the smooth interior plus exact ends
    ccdf = A.beta_approx_ccdf(m1, m2, x).ccdf
    mean = sint.simpson(ccdf, x=x)
    tol = 1e-6 if min(a, b) >= 1 else 2e-3  # endpoint singularities limit the rule
    assert mean == pytest.approx(m1, abs=tol)
    assert special.betainc(a, b, 0.3) == pytest.approx(1 - A.beta_approx_ccdf(m1, m2, [0.3]).ccdf[0], abs=1e-10)


@given(moment_pairs())
def test_beta_ccdf_monotone(pair):
    c = A.beta_approx_ccdf(*pair, np.linspace(0.001, 0.999, 200)).ccdf
    assert np.all(np.diff(c) <= 1e-12) and np.all((c >= 0) & (c <= 1))


def test_exact_vs_beta_tbs_only():
    sc = default_scenario("tbs_only")
    gamma = np.linspace(0.05, 0.95, 19)
    exact = A.exact_meta_ccdf(sc, 1.0, gamma)
    m1, m2 = (r.total for r in A.moments(sc, 1.0, [1, 2]))
    beta = A.beta_approx_ccdf(m1, m2, gamma)
    assert np.max(np.abs(exact.ccdf - beta.ccdf)) <= 0.02
    assert np.all(np.diff(exact.ccdf) <= 1e-4)


def test_exact_against_simulation_noiseless_tbs():
    sc = default_scenario("tbs_only", sigma2=0.0)
    gamma = np.linspace(0.1, 0.9, 9)
    exact = A.exact_meta_ccdf(sc, 1.0, gamma).ccdf
    emp = empirical_meta(sc, 1.0, gamma, n_realizations=1000, rng_seed=5).ccdf
    assert np.max(np.abs(exact - emp)) <= 0.02


def test_exact_near_zero_threshold():
    sc = default_scenario("tbs_only", sigma2=0.0)
    assert A.exact_meta_ccdf(sc, 1.0, [1e-3]).ccdf[0] >= 0.97


def test_exact_against_simulation_unit_fading():
    sc = default_scenario("ppp", m_l=1, m_n=1)
    exact = A.exact_meta_ccdf(sc, 1.0, [0.5]).ccdf[0]
    emp = empirical_meta(sc, 1.0, [0.5], n_realizations=1000, rng_seed=11).ccdf[0]
    assert exact == pytest.approx(emp, abs=0.03)


def test_exact_refuses_unsupported():
    with pytest.raises(A.UnsupportedModelError):
        A.exact_meta_ccdf(default_scenario("mcp"), 1.0, [0.5])
