"""Closed forms and Monte Carlo pricers for bundle futures and network call options.

A network call option pays ``TC * max(min_i C_i - K, 0)``, where
``C_i = sum_m v[i, m] S_m(T1)`` is the cost of path ``i`` at exercise and
``TC`` discounts the send-fee stream over ``[T1, T2]``. It is priced two ways
on one shared matrix of risk-neutral terminal samples:

* directly, by averaging the payoff;
* through the change-of-measure decomposition, where pulling ``S_m(T1)`` out
  of the expectation rescales every resource price ``S_k`` by
  ``xi[m, k] = exp(sigma_m sigma_k rho_mk T1)``. The per-resource terms of that
  decomposition are the option's deltas.

Monte Carlo work is split into chunks of ``chunk_size`` samples; chunk ``k``
draws from substream ``(seed, k)`` and chunks are combined in order, so every
estimate is bit-identical for any thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from ._parallel import map_ordered
from .network import IncidenceMatrix
from .rng import RngStream
from .sde import GbmParams, cholesky, validate_correlation

SMALL_RT = 1e-10


class EmptyPathSet(ValueError):
    """The contract has no candidate path (M = 0)."""


def norm_cdf(x):
    return ndtr(x)


def _scalar_or_array(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def bs_call(s0, K, r, sigma, T):
    """Black-Scholes call value ``e^{-rT} E^Q[max(S(T) - K, 0)]``.

    Vectorised over ``s0``, ``K``, ``sigma`` and ``T``. When ``sigma sqrt(T)``
    or ``K`` is zero the deterministic limit ``max(s0 - K e^{-rT}, 0)`` is
    returned.
    """
    s0, K, sigma, T = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (s0, K, sigma, T))
    )
    disc_K = K * np.exp(-r * T)
    vol = sigma * np.sqrt(T)
    live = (vol > 0) & (K > 0)
    safe_vol = np.where(live, vol, 1.0)
    safe_K = np.where(live, K, 1.0)
    d = (np.log(s0 / safe_K) + (r - 0.5 * sigma**2) * T) / safe_vol
    value = np.where(
        live,
        s0 * ndtr(d + safe_vol) - disc_K * ndtr(d),
        np.where(s0 > disc_K, s0 - disc_K, 0.0),
    )
    return _scalar_or_array(value)


def asian_zero_strike(s0, r, T):
    """Arithmetic-average call with zero strike, ``s0 (1 - e^{-rT}) / r``; ``s0 T`` as r -> 0."""
    if abs(r * T) < SMALL_RT:
        return s0 * T
    return s0 * -math.expm1(-r * T) / r


def time_carry(r, T1, T2):
    """TC factor ``(e^{-r T1} - e^{-r T2}) / r``; ``T2 - T1`` as r -> 0."""
    if not 0 <= T1 <= T2:
        raise ValueError(f"need 0 <= T1 <= T2, got T1={T1}, T2={T2}")
    if abs(r * T2) < SMALL_RT:
        return T2 - T1
    return math.exp(-r * T1) * -math.expm1(-r * (T2 - T1)) / r


@dataclass(frozen=True)
class NetworkOptionContract:
    """Everything needed to price the option on the cheapest of M paths over N resources.

    Only ``s0`` and ``sigma`` of each resource are used; under the pricing
    measure every drift is ``r``.
    """

    resources: tuple[GbmParams, ...]
    rho: np.ndarray
    incidence: IncidenceMatrix
    K: float
    T1: float
    T2: float
    r: float
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        resources = tuple(self.resources)
        object.__setattr__(self, "resources", resources)
        rho = validate_correlation(self.rho)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        n = len(resources)
        if n < 1:
            raise ValueError("at least one resource is required")
        if rho.shape != (n, n):
            raise ValueError(f"rho is {rho.shape}, expected ({n}, {n})")
        if self.incidence.N != n:
            raise ValueError(f"incidence has {self.incidence.N} resources, expected {n}")
        if not 0 <= self.T1 < self.T2:
            raise ValueError(f"need 0 <= T1 < T2, got T1={self.T1}, T2={self.T2}")
        if not self.K >= 0:
            raise ValueError(f"K must be >= 0, got {self.K}")
        L = cholesky(rho)
        L.setflags(write=False)
        object.__setattr__(self, "chol", L)

    @property
    def N(self) -> int:
        return len(self.resources)

    @property
    def M(self) -> int:
        return self.incidence.M

    @property
    def s0(self) -> np.ndarray:
        return np.array([p.s0 for p in self.resources])

    @property
    def sigma(self) -> np.ndarray:
        return np.array([p.sigma for p in self.resources])

    @property
    def tc(self) -> float:
        return time_carry(self.r, self.T1, self.T2)

    def with_s0(self, n: int, value: float) -> NetworkOptionContract:
        resources = list(self.resources)
        resources[n] = replace(resources[n], s0=value)
        return replace(self, resources=tuple(resources))


def xi_matrix(c: NetworkOptionContract) -> np.ndarray:
    """Change-of-measure multipliers ``exp(sigma_i sigma_m rho_im T1)``."""
    sigma = c.sigma
    return np.exp(np.outer(sigma, sigma) * c.rho * c.T1)


@dataclass(frozen=True)
class McConfig:
    n_samples: int = 10**6
    seed: int = 0
    chunk_size: int = 2**16

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")

    def chunks(self) -> list[tuple[int, int]]:
        """(stream_id, sample count) for every chunk, in reduction order."""
        full, rest = divmod(self.n_samples, self.chunk_size)
        out = [(k, self.chunk_size) for k in range(full)]
        if rest:
            out.append((full, rest))
        return out


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n_samples: int
    seed: int

    @classmethod
    def from_samples(cls, x, seed: int) -> McEstimate:
        x = np.asarray(x, dtype=float)
        n = x.size
        stderr = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(np.mean(x)), stderr, n, seed)


def combined_stderr(*estimates: McEstimate) -> float:
    return math.sqrt(sum(e.stderr**2 for e in estimates))


def _terminal_chunk(c: NetworkOptionContract, seed: int, stream_id: int, size: int):
    z = RngStream(seed, stream_id).normals((size, c.N)) @ c.chol.T
    sigma = c.sigma
    return c.s0 * np.exp((c.r - 0.5 * sigma**2) * c.T1 + sigma * math.sqrt(c.T1) * z)


def terminal_samples(c: NetworkOptionContract, mc: McConfig, threads: int = 1) -> np.ndarray:
    """Risk-neutral ``S(T1)`` samples, shape (n_samples, N), exact lognormal sampling."""
    parts = map_ordered(
        lambda ch: _terminal_chunk(c, mc.seed, *ch), mc.chunks(), threads
    )
    return np.concatenate(parts)


def network_payoff(c: NetworkOptionContract, S) -> np.ndarray:
    """Discounted per-sample payoff ``TC max(min_i C_i - K, 0)`` for terminal samples ``S``."""
    costs = np.asarray(S) @ c.incidence.v.T
    return c.tc * np.maximum(costs.min(axis=1) - c.K, 0.0)


def _cheapest(costs):
    # np.argmin returns the lowest index among ties.
    idx = np.argmin(costs, axis=1)
    return idx, costs[np.arange(costs.shape[0]), idx]


def _option_terms(c: NetworkOptionContract, S, xi, girsanov: bool):
    v = c.incidence.v
    tc = c.tc
    _, cmin = _cheapest(S @ v.T)
    out = {
        "direct": tc * np.maximum(cmin - c.K, 0.0),
        "q_out": (cmin > c.K).astype(float),
    }
    if girsanov:
        n = S.shape[0]
        # adjusted[:, m] = sum_i v[i, m] 1{i = argmin_j Chat_jm and Chat_im > K}
        adjusted = np.empty((n, c.N))
        for m in range(c.N):
            idx, chat_min = _cheapest((S * xi[m]) @ v.T)
            adjusted[:, m] = v[idx, m] * (chat_min > c.K)
        out["adjusted"] = adjusted
    return out


@dataclass(frozen=True)
class NetworkOptionValuation:
    """Both estimators and all deltas evaluated on one common sample set."""

    direct: McEstimate
    girsanov: McEstimate
    deltas: tuple[McEstimate, ...]
    q_out: McEstimate  # Q[min_j C_j > K]
    q_adjusted: tuple[McEstimate, ...]  # sum_i v_im Q[i = argmin_j Chat_jm and Chat_im > K]
    tc: float
    growth: float  # e^{r T1}
    reconstructed: float  # sum_m s_m0 delta_m - TC K Q[min C > K]

    @property
    def reconstruction_residual(self) -> float:
        return self.reconstructed - self.girsanov.value


def value_network_option(
    c: NetworkOptionContract, mc: McConfig, threads: int = 1
) -> NetworkOptionValuation:
    """Direct price, change-of-measure price and deltas on common random numbers."""
    if c.M == 0:
        raise EmptyPathSet("contract has no candidate paths")
    xi = xi_matrix(c)

    def work(chunk):
        return _option_terms(c, _terminal_chunk(c, mc.seed, *chunk), xi, girsanov=True)

    parts = map_ordered(work, mc.chunks(), threads)
    direct = np.concatenate([p["direct"] for p in parts])
    q_out = np.concatenate([p["q_out"] for p in parts])
    adjusted = np.concatenate([p["adjusted"] for p in parts])

    tc, growth, s0 = c.tc, math.exp(c.r * c.T1), c.s0
    delta_samples = (tc * growth) * adjusted
    girsanov = delta_samples @ s0 - (tc * c.K) * q_out

    seed = mc.seed
    deltas = tuple(McEstimate.from_samples(delta_samples[:, m], seed) for m in range(c.N))
    q_out_est = McEstimate.from_samples(q_out, seed)
    reconstructed = float(sum(s0[m] * deltas[m].value for m in range(c.N)) - tc * c.K * q_out_est.value)
    return NetworkOptionValuation(
        direct=McEstimate.from_samples(direct, seed),
        girsanov=McEstimate.from_samples(girsanov, seed),
        deltas=deltas,
        q_out=q_out_est,
        q_adjusted=tuple(McEstimate.from_samples(adjusted[:, m], seed) for m in range(c.N)),
        tc=tc,
        growth=growth,
        reconstructed=reconstructed,
    )


def price_network_option_direct(
    c: NetworkOptionContract, mc: McConfig, threads: int = 1
) -> McEstimate:
    """``TC E^Q[max(min_i C_i - K, 0)]`` by plain Monte Carlo."""
    if c.M == 0:
        raise EmptyPathSet("contract has no candidate paths")

    def work(chunk):
        return network_payoff(c, _terminal_chunk(c, mc.seed, *chunk))

    return McEstimate.from_samples(np.concatenate(map_ordered(work, mc.chunks(), threads)), mc.seed)


def price_network_option_girsanov(
    c: NetworkOptionContract, mc: McConfig, threads: int = 1
) -> McEstimate:
    """Price from the change-of-measure decomposition.

    ``TC e^{rT1} sum_m s_m0 sum_i v_im Q[i = argmin_j Chat_jm, Chat_im > K] - TC K Q[min_j C_j > K]``
    with ``Chat_im = sum_k v_ik xi[m, k] S_k(T1)``.
    """
    return value_network_option(c, mc, threads).girsanov


def network_option_delta(
    c: NetworkOptionContract, n: int, mc: McConfig, threads: int = 1
) -> McEstimate:
    """``d price / d s_{n,0} = TC e^{rT1} sum_i v_in Q[i = argmin_j Chat_jn, Chat_in > K]``."""
    if not 0 <= n < c.N:
        raise IndexError(f"resource index {n} out of range for N={c.N}")
    return value_network_option(c, mc, threads).deltas[n]


def _bundle_chunk(c: NetworkOptionContract, seed: int, stream_id: int, size: int):
    z = RngStream(seed, stream_id).normals((size, 2 * c.N))
    x1 = z[:, : c.N] @ c.chol.T
    x2 = z[:, c.N :] @ c.chol.T
    sigma, r = c.sigma, c.r
    hold = c.T2 - c.T1
    S1 = c.s0 * np.exp((r - 0.5 * sigma**2) * c.T1 + sigma * math.sqrt(c.T1) * x1)
    growth = np.exp((r - 0.5 * sigma**2) * hold + sigma * math.sqrt(hold) * x2)
    # A_j = S_j(T2) - e^{r (T2 - T1)} S_j(T1); vanishes exactly when sigma_j = 0
    A = S1 * (growth - np.exp(r * hold))
    idx, _ = _cheapest(S1 @ c.incidence.v.T)
    delivered = c.incidence.v[idx]
    return math.exp(-r * c.T2) * np.sum(delivered * A, axis=1)


def price_bundle_future(
    c: NetworkOptionContract, mc: McConfig, threads: int = 1
) -> McEstimate:
    """Value of buying the cheapest path's shares at T1 and reselling them at T2.

    The exact price is zero; the estimate should be statistically consistent with it.
    """
    if c.M == 0:
        raise EmptyPathSet("contract has no candidate paths")
    parts = map_ordered(lambda ch: _bundle_chunk(c, mc.seed, *ch), mc.chunks(), threads)
    return McEstimate.from_samples(np.concatenate(parts), mc.seed)


def girsanov_identity_1d(s0, r, sigma, T, g, mc: McConfig, threads: int = 1):
    """Both sides of ``E[S(T) g(S(T))] = s0 e^{rT} E[g(e^{sigma^2 T} S(T))]`` on common samples."""

    def work(chunk):
        stream_id, size = chunk
        z = RngStream(mc.seed, stream_id).normals(size)
        S = s0 * np.exp((r - 0.5 * sigma**2) * T + sigma * math.sqrt(T) * z)
        return S * g(S), s0 * math.exp(r * T) * g(math.exp(sigma**2 * T) * S)

    parts = map_ordered(work, mc.chunks(), threads)
    lhs = McEstimate.from_samples(np.concatenate([p[0] for p in parts]), mc.seed)
    rhs = McEstimate.from_samples(np.concatenate([p[1] for p in parts]), mc.seed)
    return lhs, rhs
