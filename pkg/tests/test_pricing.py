import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from netoption.checks import (
    bs_call_quadrature,
    check_deltas,
    finite_difference_delta,
    random_contract,
)
from netoption.network import IncidenceMatrix
from netoption.pricing import (
    EmptyPathSet,
    McConfig,
    NetworkOptionContract,
    asian_zero_strike,
    bs_call,
    combined_stderr,
    girsanov_identity_1d,
    network_option_delta,
    network_payoff,
    price_bundle_future,
    price_network_option_direct,
    price_network_option_girsanov,
    terminal_samples,
    time_carry,
    value_network_option,
    xi_matrix,
)
from netoption.sde import GbmParams

MC = McConfig(n_samples=200_000, seed=1, chunk_size=50_000)


def single(s0=1.0, sigma=0.25, K=1.0, T1=1.0, T2=2.0, r=0.05, v=1.0):
    return NetworkOptionContract(
        (GbmParams(s0, sigma=sigma),), np.eye(1), IncidenceMatrix([[v]], ("X",)), K, T1, T2, r
    )


def deterministic(K, r=0.03):
    v = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    res = tuple(GbmParams(s, sigma=0.0) for s in (1.0, 0.5, 1.5))
    D = np.full((3, 3), 0.4)
    np.fill_diagonal(D, 1.0)
    return NetworkOptionContract(res, D, IncidenceMatrix(v, ("a", "b", "c")), K, 0.5, 1.5, r)


# ---------------------------------------------------------------- closed forms


def test_bs_call_atm_value():
    assert bs_call(10.0, 10.0, 0.0, 0.2, 1.0) == pytest.approx(0.796557, abs=5e-7)
    assert bs_call(10.0, 10.0, 0.0, 0.2, 1.0) == pytest.approx(bs_call_quadrature(10.0, 10.0, 0.0, 0.2, 1.0), abs=1e-10)


@pytest.mark.parametrize("s0,K,r,T", [(12.0, 10.0, 0.05, 1.0), (8.0, 10.0, 0.0, 2.0), (10.0, 9.0, -0.01, 0.5)])
def test_bs_call_deterministic_limit(s0, K, r, T):
    assert bs_call(s0, K, r, 0.0, T) == pytest.approx(max(s0 - K * math.exp(-r * T), 0.0), abs=1e-14)


def test_bs_call_zero_strike():
    assert bs_call(7.5, 0.0, 0.05, 0.3, 2.0) == 7.5


@given(st.floats(0.5, 2.0), st.floats(0.01, 1.0), st.floats(0.0, 0.1))
def test_bs_call_matches_quadrature(moneyness, vol, r):
    K, T = 10.0, 1.0
    s0 = moneyness * K
    assert abs(bs_call(s0, K, r, vol, T) - bs_call_quadrature(s0, K, r, vol, T)) < 1e-8


@given(st.floats(0.5, 20), st.floats(0.5, 20), st.floats(0.5, 20), st.floats(0.0, 0.8), st.floats(0.0, 3.0))
def test_bs_call_nonincreasing_in_strike(s0, k1, k2, sigma, T):
    lo, hi = sorted((k1, k2))
    assert bs_call(s0, hi, 0.02, sigma, T) <= bs_call(s0, lo, 0.02, sigma, T) + 1e-12


def test_bs_call_vectorised():
    s = np.array([8.0, 10.0, 12.0])
    out = bs_call(s, 10.0, 0.01, 0.2, 1.0)
    assert out.shape == (3,)
    assert out[1] == bs_call(10.0, 10.0, 0.01, 0.2, 1.0)


def test_asian_zero_strike_examples():
    assert asian_zero_strike(5.0, 1e-15, 2.0) == pytest.approx(10.0, rel=1e-12)
    assert asian_zero_strike(5.0, 0.0, 2.0) == 10.0
    assert asian_zero_strike(1.0, 0.1, 1.0) == pytest.approx(0.951626, abs=5e-7)
    assert asian_zero_strike(3.0, 0.05, 0.0) == 0.0


def test_time_carry_examples():
    assert time_carry(0.0, 0.5, 1.5) == 1.0
    assert time_carry(1e-13, 0.5, 1.5) == pytest.approx(1.0, rel=1e-12)
    assert time_carry(0.05, 0.0, 1.0) == pytest.approx(0.975412, abs=5e-7)
    assert time_carry(0.05, 1.0, 1.0) == 0.0


@given(st.floats(-0.2, 0.2), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_time_carry_matches_integral(r, T1, dT):
    # integral of e^{-rt} over [T1, T1 + dT] by Simpson on a fine grid
    t = np.linspace(T1, T1 + dT, 2001)
    f = np.exp(-r * t)
    h = dT / 2000
    simpson = h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())
    assert time_carry(r, T1, T1 + dT) == pytest.approx(simpson, rel=1e-10, abs=1e-14)


def test_xi_matrix():
    c = single()
    assert xi_matrix(c)[0, 0] == pytest.approx(math.exp(0.25**2))
    res = (GbmParams(1.0, sigma=0.2), GbmParams(1.0, sigma=0.2))
    D = np.array([[1.0, 0.0], [0.0, 1.0]])
    c2 = NetworkOptionContract(res, D, IncidenceMatrix(np.eye(2), ("a", "b")), 1.0, 1.0, 2.0, 0.0)
    xi = xi_matrix(c2)
    assert xi[0, 1] == 1.0
    assert xi[0, 0] == pytest.approx(1.040811, abs=5e-7)


def test_xi_symmetric():
    c = random_contract(np.random.default_rng(3))
    xi = xi_matrix(c)
    assert np.array_equal(xi, xi.T)


# ---------------------------------------------------------------- estimators


def test_direct_matches_closed_form_single_resource():
    c = single()
    est = price_network_option_direct(c, MC)
    exact = c.tc * math.exp(c.r * c.T1) * bs_call(c.s0[0], c.K, c.r, c.sigma[0], c.T1)
    assert abs(est.value - exact) <= 3 * est.stderr


def test_direct_deterministic():
    c = deterministic(K=2.0)
    forward = c.s0 * math.exp(c.r * c.T1)
    exact = c.tc * max((c.incidence.v @ forward).min() - c.K, 0.0)
    est = price_network_option_direct(c, McConfig(1000, 0))
    assert est.value == pytest.approx(exact, rel=1e-13)
    assert est.stderr < 1e-13 * exact


def test_direct_out_of_the_money_is_zero():
    est = price_network_option_direct(deterministic(K=100.0), McConfig(1000, 0))
    assert est.value == 0.0 and est.stderr == 0.0


def test_girsanov_deterministic_matches_direct():
    c = deterministic(K=2.0)
    mc = McConfig(1000, 0)
    assert price_network_option_girsanov(c, mc).value == pytest.approx(
        price_network_option_direct(c, mc).value, rel=1e-13
    )


def test_girsanov_single_resource_terms():
    c = single()
    val = value_network_option(c, MC)
    s0, K, r, sig, T = c.s0[0], c.K, c.r, c.sigma[0], c.T1
    d = (math.log(s0 / K) + (r - 0.5 * sig**2) * T) / (sig * math.sqrt(T))
    # Q[S(T1) > K] and the same event under the asset-price numeraire
    assert abs(val.q_out.value - norm.cdf(d)) <= 3 * val.q_out.stderr
    q_adj = val.q_adjusted[0]
    assert abs(q_adj.value - norm.cdf(d + sig * math.sqrt(T))) <= 3 * q_adj.stderr


def test_dual_estimator_diamond(diamond):
    val = value_network_option(diamond, MC)
    assert abs(val.direct.value - val.girsanov.value) <= 3 * combined_stderr(val.direct, val.girsanov)


@pytest.mark.parametrize("seed", range(8))
def test_dual_estimator_random(seed):
    c = random_contract(np.random.default_rng(100 + seed))
    val = value_network_option(c, MC)
    assert abs(val.direct.value - val.girsanov.value) <= 3 * combined_stderr(val.direct, val.girsanov)


def test_separate_entry_points_agree(diamond):
    mc = McConfig(50_000, 2)
    val = value_network_option(diamond, mc)
    assert price_network_option_direct(diamond, mc) == val.direct
    assert price_network_option_girsanov(diamond, mc) == val.girsanov
    assert network_option_delta(diamond, 2, mc) == val.deltas[2]


def test_direct_nonincreasing_in_strike(diamond):
    S = terminal_samples(diamond, McConfig(50_000, 4))
    payoffs = [network_payoff(replace(diamond, K=K), S) for K in (2.5, 2.9, 3.0, 3.4)]
    for lo, hi in zip(payoffs, payoffs[1:]):
        assert np.all(hi <= lo)


def test_empty_path_set():
    c = NetworkOptionContract(
        (GbmParams(1.0, sigma=0.2),), np.eye(1), IncidenceMatrix(np.zeros((0, 1)), ("X",)), 1.0, 1.0, 2.0, 0.0
    )
    for fn in (price_network_option_direct, price_network_option_girsanov, price_bundle_future):
        with pytest.raises(EmptyPathSet):
            fn(c, McConfig(10, 0))


def test_contract_validation():
    with pytest.raises(ValueError):
        single(T1=2.0, T2=1.0)
    with pytest.raises(ValueError):
        single(K=-1.0)
    with pytest.raises(ValueError):
        NetworkOptionContract(
            (GbmParams(1.0),), np.eye(1), IncidenceMatrix(np.eye(2), ("a", "b")), 1.0, 1.0, 2.0, 0.0
        )


def test_threads_do_not_change_results(diamond):
    mc = McConfig(100_000, 3, chunk_size=8192)
    a = value_network_option(diamond, mc, threads=1)
    b = value_network_option(diamond, mc, threads=8)
    assert a == b
    assert price_bundle_future(diamond, mc, 1) == price_bundle_future(diamond, mc, 4)


def test_chunking_covers_all_samples():
    assert McConfig(10, 0, 3).chunks() == [(0, 3), (1, 3), (2, 3), (3, 1)]
    assert terminal_samples(single(), McConfig(10, 0, 3)).shape == (10, 1)


# ---------------------------------------------------------------- deltas


def test_delta_deterministic_single_path():
    v = np.array([[1.0, 2.0, 0.5]])
    res = tuple(GbmParams(s, sigma=0.0) for s in (1.0, 0.5, 1.5))
    c = NetworkOptionContract(res, np.eye(3), IncidenceMatrix(v, ("a", "b", "c")), 1.0, 1.0, 3.0, 0.04)
    val = value_network_option(c, McConfig(100, 0))
    for n in range(3):
        assert val.deltas[n].value == pytest.approx(c.tc * math.exp(c.r * c.T1) * v[0, n], rel=1e-14)


def test_delta_index_error(diamond):
    with pytest.raises(IndexError):
        network_option_delta(diamond, 4, McConfig(10, 0))


def test_delta_against_finite_difference(diamond):
    val = value_network_option(diamond, MC)
    S = terminal_samples(diamond, MC)
    for n in range(diamond.N):
        fd = finite_difference_delta(diamond, n, S)
        assert abs(val.deltas[n].value - fd.value) <= 3 * combined_stderr(val.deltas[n], fd)


def test_delta_check_random_contracts():
    rng = np.random.default_rng(9)
    contracts = [(f"r{k}", random_contract(rng)) for k in range(3)]
    assert check_deltas(contracts, McConfig(100_000, 5)).passed


def test_reconstruction_identity(diamond):
    val = value_network_option(diamond, MC)
    assert abs(val.reconstruction_residual) < 1e-12 * abs(val.girsanov.value)


# ---------------------------------------------------------------- change of measure, bundle future


@pytest.mark.parametrize("ratio", [0.8, 1.0, 1.2])
def test_girsanov_identity_1d(ratio):
    K = 10.0 * ratio
    lhs, rhs = girsanov_identity_1d(10.0, 0.05, 0.2, 1.0, lambda s: (s > K).astype(float), MC)
    assert abs(lhs.value - rhs.value) <= 3 * combined_stderr(lhs, rhs)


def test_bundle_future_deterministic_is_exactly_zero():
    est = price_bundle_future(deterministic(K=2.0), McConfig(1000, 0))
    assert est.value == 0.0 and est.stderr == 0.0


def test_bundle_future_single_resource():
    est = price_bundle_future(single(), MC)
    assert abs(est.value) <= 3 * est.stderr


@pytest.mark.parametrize("seed", range(5))
def test_bundle_future_random(seed):
    est = price_bundle_future(random_contract(np.random.default_rng(200 + seed)), MC)
    assert abs(est.value) <= 3 * est.stderr
