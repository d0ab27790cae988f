import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from netoption.hedging import (
    DegenerateHedge,
    HedgeConfig,
    adjusted_sigma,
    bs_call_delta,
    hedge_trace,
    rebalance,
    simulate_hedged_portfolio,
)
from netoption.pricing import bs_call
from netoption.sde import GbmParams, MeanRevParams


def test_rebalance_by_hand():
    gamma, beta = rebalance(1.0, 0.5, [0.5], [10.0])
    assert gamma == pytest.approx(-0.2222222222222222, rel=1e-15)
    assert beta[0] == pytest.approx(0.1111111111111111, rel=1e-15)
    assert gamma * 0.5 + beta[0] * 10.0 == pytest.approx(1.0, rel=1e-15)


def test_rebalance_decoupled_option():
    gamma, beta = rebalance(2.0, 0.8, [0.0, 0.0], [3.0, 4.0])
    assert gamma == pytest.approx(2.5)
    assert np.all(beta == 0.0)


def test_rebalance_degenerate():
    with pytest.raises(DegenerateHedge):
        rebalance(1.0, 5.0, [0.5], [10.0])
    with pytest.raises(DegenerateHedge):
        rebalance(1.0, 0.0, [0.0], [10.0])


@given(
    st.floats(-10, 10),
    st.floats(0.01, 10),
    st.lists(st.floats(0, 1), min_size=1, max_size=4),
    st.data(),
)
def test_rebalance_recombines_and_neutralises(pi, f, partials, data):
    prices = data.draw(st.lists(st.floats(0.1, 20), min_size=len(partials), max_size=len(partials)))
    try:
        gamma, beta = rebalance(pi, f, partials, prices)
    except DegenerateHedge:
        return
    scale = max(abs(pi), abs(gamma * f), np.abs(beta * prices).sum(), 1e-300)
    assert abs(gamma * f + beta @ prices - pi) <= 1e-9 * scale
    # delta-neutral: gamma df/dS + beta = 0
    np.testing.assert_allclose(gamma * np.array(partials) + beta, 0.0, atol=1e-12 * max(1.0, abs(gamma)))


def test_adjusted_sigma_value():
    assert adjusted_sigma(0.3, 1.0, 0.1) == pytest.approx(0.285607, abs=5e-7)


def test_adjusted_sigma_limits():
    assert adjusted_sigma(0.3, 1.0, 1e-12) == 0.3
    assert adjusted_sigma(0.3, 0.0, 0.1) == 0.3
    assert adjusted_sigma(0.3, 1e-6, 1e-6) == pytest.approx(0.3, rel=1e-10)


@given(st.floats(0, 2), st.floats(0, 50), st.floats(1e-6, 5))
def test_adjusted_sigma_shrinks(sigma, alpha, dt):
    s = adjusted_sigma(sigma, alpha, dt)
    assert 0 <= s <= sigma


def test_adjusted_sigma_rejects():
    with pytest.raises(ValueError):
        adjusted_sigma(0.2, -1.0, 0.1)
    with pytest.raises(ValueError):
        adjusted_sigma(0.2, 1.0, 0.0)


def test_bs_call_delta_values():
    assert bs_call_delta(10.0, 10.0, 0.0, 0.2, 1.0) == pytest.approx(0.539828, abs=5e-7)
    assert bs_call_delta(30.0, 10.0, 0.0, 0.05, 0.01) == pytest.approx(1.0, abs=1e-12)
    assert bs_call_delta(11.0, 10.0, 0.05, 0.0, 1.0) == 1.0
    assert bs_call_delta(9.0, 10.0, 0.0, 0.3, 0.0) == 0.0


@given(st.floats(2, 30), st.floats(5, 15), st.floats(0, 0.1), st.floats(0.05, 0.6), st.floats(0.05, 3))
def test_bs_call_delta_finite_difference(s0, K, r, sigma, tau):
    h = 1e-6 * s0
    fd = (bs_call(s0 + h, K, r, sigma, tau) - bs_call(s0 - h, K, r, sigma, tau)) / (2 * h)
    assert abs(bs_call_delta(s0, K, r, sigma, tau) - fd) < 1e-6


# ---------------------------------------------------------------- simulation


def gbm_cfg(**kw):
    base = dict(process=GbmParams(10.0, mu=0.05, sigma=0.2), K=10.0, T=1.0, r=0.0, rebalance_dt=0.1, sim_dt=1e-2, n_paths=500, seed=0)
    base.update(kw)
    return HedgeConfig(**base)


def test_riskless_dynamics_grow_at_rate():
    cfg = HedgeConfig(GbmParams(12.0, mu=0.3, sigma=0.0), K=10.0, T=1.0, r=0.05, rebalance_dt=0.1, sim_dt=0.01, n_paths=50)
    stats = simulate_hedged_portfolio(cfg)
    expected = stats.initial_value * np.exp(cfg.r * stats.times)
    np.testing.assert_allclose(stats.mean_value, expected, rtol=1e-12)
    assert np.all(stats.std_value <= 1e-12 * stats.initial_value)
    assert stats.n_dropped == 0


def test_riskless_out_of_the_money_is_degenerate():
    # with no volatility an out-of-the-money call is worth nothing and cannot be hedged
    cfg = HedgeConfig(GbmParams(8.0, sigma=0.0), K=10.0, T=1.0, rebalance_dt=0.5, sim_dt=0.5, n_paths=5)
    with pytest.raises(DegenerateHedge):
        simulate_hedged_portfolio(cfg)


def test_self_financing_bookkeeping():
    cfg = HedgeConfig(MeanRevParams(10.0, alpha=2.0, mu=10.0, sigma=0.2), K=10.0, T=1.0, r=0.03, rebalance_dt=0.1, sim_dt=1e-3)
    for p in range(5):
        tr = hedge_trace(cfg, p)
        g, b, cash = tr.gammas[0], tr.betas[0], tr.cash[0]
        f, S, Pi = tr.option_values[0], tr.prices[0], tr.values[0]
        J = len(tr.times) - 1
        live = ~np.isnan(g[:J])
        # holdings recombine to the portfolio value right after each rebalance
        recombined = g[:J] * f[:J] + b[:J] * S[:J] + cash[:J]
        np.testing.assert_allclose(recombined[live], Pi[:J][live], rtol=1e-10)
        assert np.all(np.abs(cash[:J][live]) <= 1e-10 * np.abs(Pi[:J][live]))
        # value at the next instant comes only from price moves and cash accrual
        carry = math.exp(cfg.r * cfg.rebalance_dt)
        marked = g[:J] * f[1:] + b[:J] * S[1:] + cash[:J] * carry
        np.testing.assert_allclose(marked[live], Pi[1:][live], rtol=1e-10)


def test_trace_first_instant():
    cfg = gbm_cfg()
    tr = hedge_trace(cfg)
    f0 = bs_call(10.0, 10.0, 0.0, 0.2, 1.0)
    assert tr.values[0, 0] == pytest.approx(f0, rel=1e-14)
    assert tr.prices[0, 0] == 10.0
    assert tr.times[-1] == pytest.approx(1.0)


def test_continuous_hedge_converges():
    stds = [
        simulate_hedged_portfolio(gbm_cfg(rebalance_dt=dt, sim_dt=1e-3, n_paths=500)).terminal_std
        for dt in (0.1, 0.01, 0.001)
    ]
    assert stds[0] >= stds[1] >= stds[2]


@pytest.mark.parametrize(
    "process",
    [GbmParams(10.0, mu=0.05, sigma=0.2), MeanRevParams(10.0, alpha=2.0, mu=10.0, sigma=0.2)],
)
def test_spread_grows_over_time(process):
    stats = simulate_hedged_portfolio(gbm_cfg(process=process, n_paths=2000, sim_dt=1e-3))
    assert np.all(np.diff(stats.std_value) >= 0)


def test_adjustment_negligible_is_bit_identical():
    process = MeanRevParams(10.0, alpha=1e-10, mu=10.0, sigma=0.2)
    a = simulate_hedged_portfolio(gbm_cfg(process=process, use_adjusted_sigma=False))
    b = simulate_hedged_portfolio(gbm_cfg(process=process, use_adjusted_sigma=True))
    assert np.array_equal(a.mean_value, b.mean_value)
    assert np.array_equal(a.std_value, b.std_value)
    assert np.array_equal(a.terminal_values, b.terminal_values)


def test_hedge_sigma_uses_adjustment():
    process = MeanRevParams(10.0, alpha=2.0, mu=10.0, sigma=0.2)
    assert gbm_cfg(process=process, use_adjusted_sigma=True).hedge_sigma == adjusted_sigma(0.2, 2.0, 0.1)
    assert gbm_cfg(process=process).hedge_sigma == 0.2


def test_simulation_thread_independent():
    cfg = gbm_cfg(n_paths=2500)
    a = simulate_hedged_portfolio(cfg, threads=1)
    b = simulate_hedged_portfolio(cfg, threads=4)
    assert np.array_equal(a.terminal_values, b.terminal_values)
    assert np.array_equal(a.counts, b.counts)


def test_histogram_covers_kept_paths():
    stats = simulate_hedged_portfolio(gbm_cfg(n_paths=1000))
    assert len(stats.counts) == 50
    assert stats.counts.sum() <= stats.n_paths - stats.n_dropped
    assert stats.bin_edges[0] < stats.terminal_mean < stats.bin_edges[-1]


def test_substeps_rounded():
    cfg = gbm_cfg(rebalance_dt=0.1, sim_dt=0.03)
    assert cfg.substeps == 3


@pytest.mark.parametrize(
    "kw",
    [
        dict(sim_dt=0.2),
        dict(rebalance_dt=0.3),
        dict(T=0.0),
        dict(K=-1.0),
        dict(n_paths=0),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        gbm_cfg(**kw)
