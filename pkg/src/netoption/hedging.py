"""Hedge ratios and Monte Carlo simulation of a rebalanced option/asset portfolio.

The portfolio starts as one call option. At every rebalance instant the
whole value ``Pi`` is put into ``gamma`` options and ``beta_i`` assets so the
position is delta-neutral:

    gamma  = Pi / (f - sum_i df/dS_i * S_i)
    beta_i = -gamma * df/dS_i

so that ``gamma f + sum_i beta_i S_i = Pi``. Between rebalances the holdings
are frozen. Any residual cash (zero up to rounding right after a rebalance)
earns the risk-free rate. The hedger always values the option with
Black-Scholes at the remaining maturity, whatever the true dynamics.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import ndtr

from ._parallel import map_ordered
from .pricing import bs_call
from .rng import RngStream
from .sde import GbmParams, MeanRevParams, euler_step

log = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-12
SMALL_ALPHA_DT = 1e-8
DROP_FLAG_FRACTION = 1e-3
HIST_BINS = 50
PATH_BLOCK = 1024


class DegenerateHedge(ArithmeticError):
    """``f - sum df/dS S`` vanishes, so no finite hedge exists."""

    def __init__(self, message: str, path_index: int | None = None):
        super().__init__(message)
        self.path_index = path_index


def _degenerate(f, exposure, denominator):
    scale = np.maximum(np.abs(f), exposure)
    return np.abs(denominator) <= DEGENERATE_TOL * scale


def rebalance(pi: float, f: float, partials, prices):
    """Holdings ``(gamma, betas)`` that put all of ``pi`` into a delta-neutral position."""
    partials = np.atleast_1d(np.asarray(partials, dtype=float))
    prices = np.atleast_1d(np.asarray(prices, dtype=float))
    if partials.shape != prices.shape:
        raise ValueError("partials and prices must have the same length")
    exposure = partials * prices
    denominator = f - exposure.sum()
    if _degenerate(f, np.abs(exposure).sum(), denominator):
        raise DegenerateHedge(
            f"f - sum(df/dS * S) = {denominator:.3e} is negligible against f = {f:.3e}"
        )
    gamma = pi / denominator
    return gamma, -gamma * partials


def adjusted_sigma(sigma: float, alpha: float, dt: float) -> float:
    """Volatility for rebalancing every ``dt`` under mean reversion at rate ``alpha``.

    ``sigma * sqrt((1 - exp(-2 alpha dt)) / (2 alpha dt))``; exactly ``sigma``
    once ``alpha * dt < 1e-8``.
    """
    if sigma < 0 or alpha < 0 or not dt > 0:
        raise ValueError("need sigma >= 0, alpha >= 0, dt > 0")
    x = 2.0 * alpha * dt
    if alpha * dt < SMALL_ALPHA_DT:
        return float(sigma)
    return float(sigma * math.sqrt(-math.expm1(-x) / x))


def bs_call_delta(s0, K, r, sigma, tau):
    """``d bs_call / d s0``; a 0/1 step at ``s0 = K e^{-r tau}`` when ``sigma sqrt(tau) = 0``."""
    s0, K, sigma, tau = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (s0, K, sigma, tau))
    )
    vol = sigma * np.sqrt(tau)
    live = (vol > 0) & (K > 0)
    safe_vol = np.where(live, vol, 1.0)
    safe_K = np.where(live, K, 1.0)
    d_up = (np.log(s0 / safe_K) + (r + 0.5 * sigma**2) * tau) / safe_vol
    out = np.where(live, ndtr(d_up), (s0 > K * np.exp(-r * tau)).astype(float))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HedgeConfig:
    process: Union[GbmParams, MeanRevParams]
    K: float
    T: float
    r: float = 0.0
    rebalance_dt: float = 0.1
    sim_dt: float = 1e-3
    use_adjusted_sigma: bool = False
    n_paths: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.process, (GbmParams, MeanRevParams)):
            raise TypeError("process must be GbmParams or MeanRevParams")
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if not self.K >= 0:
            raise ValueError("K must be >= 0")
        if not 0 < self.sim_dt <= self.rebalance_dt * (1 + 1e-9):
            raise ValueError("need 0 < sim_dt <= rebalance_dt")
        ratio = self.T / self.rebalance_dt
        if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
            raise ValueError("rebalance_dt must divide T")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")

    @property
    def n_rebalances(self) -> int:
        return int(round(self.T / self.rebalance_dt))

    @property
    def substeps(self) -> int:
        """Simulation steps per rebalance interval; the step is shrunk to fit exactly."""
        return max(1, int(round(self.rebalance_dt / self.sim_dt)))

    @property
    def hedge_sigma(self) -> float:
        sigma = self.process.sigma
        if self.use_adjusted_sigma:
            alpha = getattr(self.process, "alpha", 0.0)
            return adjusted_sigma(sigma, alpha, self.rebalance_dt)
        return sigma


@dataclass(frozen=True)
class HedgeTrace:
    """Per-path state at every rebalance instant, shape (paths, n_rebalances + 1).

    Holdings at column ``j`` are those chosen at ``times[j]`` (NaN in the last
    column); values are marked before rebalancing. Dropped paths are NaN from
    the instant their hedge became degenerate.
    """

    times: np.ndarray
    prices: np.ndarray
    option_values: np.ndarray
    gammas: np.ndarray
    betas: np.ndarray
    cash: np.ndarray
    values: np.ndarray
    dropped: np.ndarray
    clamps: int


def _simulate_block(cfg: HedgeConfig, path_ids) -> HedgeTrace:
    n = len(path_ids)
    J, sub = cfg.n_rebalances, cfg.substeps
    dt_reb = cfg.T / J
    dt_sim = dt_reb / sub
    z = np.stack([RngStream(cfg.seed, int(p)).normals(J * sub) for p in path_ids]).reshape(n, J, sub)
    sigma_h, K, r, T = cfg.hedge_sigma, cfg.K, cfg.r, cfg.T
    carry = math.exp(r * dt_reb)

    shape = (n, J + 1)
    prices = np.full(shape, np.nan)
    fvals = np.full(shape, np.nan)
    gammas = np.full(shape, np.nan)
    betas = np.full(shape, np.nan)
    cash = np.full(shape, np.nan)
    values = np.full(shape, np.nan)
    dropped = np.zeros(n, dtype=bool)
    clamps = 0

    S = np.full(n, float(cfg.process.s0))
    f = np.asarray(bs_call(S, K, r, sigma_h, T), dtype=float)
    pi = f.copy()
    for j in range(J + 1):
        tau = T - j * dt_reb
        prices[:, j] = S
        fvals[:, j] = f
        values[:, j] = np.where(dropped, np.nan, pi)
        if j == J:
            break
        delta = np.asarray(bs_call_delta(S, K, r, sigma_h, tau), dtype=float)
        exposure = delta * S
        denominator = f - exposure
        dropped |= _degenerate(f, np.abs(exposure), denominator)
        with np.errstate(over="ignore", divide="ignore"):
            gamma = pi / np.where(dropped, 1.0, denominator)
        # a subnormal denominator can pass the relative test yet overflow gamma
        dropped |= ~np.isfinite(gamma)
        gamma = np.where(dropped, np.nan, gamma)
        beta = -gamma * delta
        residual = pi - gamma * f - beta * S
        gammas[:, j], betas[:, j], cash[:, j] = gamma, beta, residual
        for k in range(sub):
            S, c = euler_step(cfg.process, S, dt_sim, z[:, j, k])
            clamps += c
        f = np.asarray(bs_call(S, K, r, sigma_h, max(tau - dt_reb, 0.0)), dtype=float)
        pi = gamma * f + beta * S + residual * carry

    times = np.arange(J + 1) * dt_reb
    return HedgeTrace(times, prices, fvals, gammas, betas, cash, values, dropped, clamps)


def hedge_trace(cfg: HedgeConfig, path_index: int = 0) -> HedgeTrace:
    """Full holdings history of a single simulated path (the single-path hedge picture)."""
    return _simulate_block(cfg, [path_index])


@dataclass(frozen=True)
class HedgeStats:
    times: np.ndarray
    mean_value: np.ndarray
    std_value: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    initial_value: float
    n_paths: int
    n_dropped: int
    clamps: int
    terminal_values: np.ndarray = field(repr=False)

    @property
    def flagged(self) -> bool:
        """More than 0.1% of paths were dropped for degenerate hedges."""
        return self.n_dropped > DROP_FLAG_FRACTION * self.n_paths

    @property
    def terminal_mean(self) -> float:
        return float(self.mean_value[-1])

    @property
    def terminal_std(self) -> float:
        return float(self.std_value[-1])


def simulate_hedged_portfolio(cfg: HedgeConfig, threads: int = 1) -> HedgeStats:
    """Simulate ``n_paths`` hedged portfolios and summarise ``Pi`` at each rebalance instant.

    Path ``p`` draws from substream ``(seed, p)``; paths whose hedge becomes
    degenerate are excluded from the statistics and counted.
    """
    blocks = [
        range(start, min(start + PATH_BLOCK, cfg.n_paths))
        for start in range(0, cfg.n_paths, PATH_BLOCK)
    ]
    traces = map_ordered(lambda b: _simulate_block(cfg, b), blocks, threads)
    values = np.concatenate([t.values for t in traces])
    dropped = np.concatenate([t.dropped for t in traces])
    clamps = sum(t.clamps for t in traces)
    kept = values[~dropped]
    if kept.shape[0] == 0:
        raise DegenerateHedge("every path was dropped")
    mean = kept.mean(axis=0)
    std = kept.std(axis=0)
    terminal = kept[:, -1]
    half = 5.0 * std[-1]
    if not half > 0:
        half = max(abs(mean[-1]), 1.0) * 1e-9
    counts, edges = np.histogram(terminal, bins=HIST_BINS, range=(mean[-1] - half, mean[-1] + half))
    n_dropped = int(dropped.sum())
    stats = HedgeStats(
        times=traces[0].times,
        mean_value=mean,
        std_value=std,
        bin_edges=edges,
        counts=counts,
        initial_value=float(values[0, 0]),
        n_paths=cfg.n_paths,
        n_dropped=n_dropped,
        clamps=clamps,
        terminal_values=terminal,
    )
    if stats.flagged:
        log.warning("%d of %d paths dropped for degenerate hedges", n_dropped, cfg.n_paths)
    return stats
