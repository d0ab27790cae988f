"""Executable correctness checks shared by the test suite and ``netoption selftest``.

Each check returns a :class:`CheckResult`; none of them raise on a failed
comparison. Reference values come from routes independent of the code under
test: adaptive quadrature for the call price, brute-force permutation search
for paths, arbitrary-precision arithmetic for the small-rate limits, and a
common-random-numbers finite difference of the plain payoff for the deltas.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate

from .hedging import HedgeConfig, adjusted_sigma, simulate_hedged_portfolio
from .network import IncidenceMatrix, NoPath, RouteQuery, Topology, enumerate_paths
from .pricing import (
    McConfig,
    McEstimate,
    NetworkOptionContract,
    asian_zero_strike,
    bs_call,
    combined_stderr,
    girsanov_identity_1d,
    network_payoff,
    price_bundle_future,
    terminal_samples,
    time_carry,
    value_network_option,
)
from .sde import GbmParams, MeanRevParams

SIGMAS = 3.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        name, passed, detail = fn(*args, **kwargs)
        return CheckResult(name, bool(passed), detail, time.perf_counter() - start)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------- contracts


def diamond_topology() -> Topology:
    return Topology(("A", "B", "C", "D"), (("B", "A"), ("A", "C"), ("B", "D"), ("D", "C")))


def diamond_contract(sigma=0.2, rho=0.3, K=3.0, T1=1.0, T2=2.0, r=0.05) -> NetworkOptionContract:
    """Two-path diamond from B to C; K sits at the cheapest spot cost."""
    inc = enumerate_paths(diamond_topology(), RouteQuery("B", "C"))
    s0 = (1.0, 1.2, 0.8, 1.1)
    D = np.full((4, 4), rho)
    np.fill_diagonal(D, 1.0)
    return NetworkOptionContract(
        tuple(GbmParams(s, sigma=sigma) for s in s0), D, inc, K, T1, T2, r
    )


def random_correlation(rng: np.random.Generator, n: int) -> np.ndarray:
    A = rng.normal(size=(n, n + 1))
    cov = A @ A.T + 0.5 * np.eye(n)
    d = np.sqrt(np.diag(cov))
    D = cov / np.outer(d, d)
    np.fill_diagonal(D, 1.0)
    return D


def random_contract(rng: np.random.Generator, max_n: int = 5, max_m: int = 4) -> NetworkOptionContract:
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, max_m + 1))
    v = rng.uniform(0.0, 1.0, size=(m, n)) * (rng.uniform(size=(m, n)) < 0.7)
    for i in range(m):
        if v[i].max() <= 0:
            v[i, rng.integers(n)] = 1.0
    s0 = rng.uniform(0.5, 2.0, size=n)
    sigma = rng.uniform(0.1, 0.5, size=n)
    T1 = float(rng.uniform(0.25, 2.0))
    T2 = T1 + float(rng.uniform(0.5, 2.0))
    r = float(rng.uniform(0.0, 0.1))
    forward_min = float((v @ (s0 * math.exp(r * T1))).min())
    K = forward_min * float(rng.uniform(0.7, 1.1))
    names = tuple(f"R{k}" for k in range(n))
    return NetworkOptionContract(
        tuple(GbmParams(float(a), sigma=float(b)) for a, b in zip(s0, sigma)),
        random_correlation(rng, n),
        IncidenceMatrix(v, names),
        K,
        T1,
        T2,
        r,
    )


# ---------------------------------------------------------------- oracles


def bs_call_quadrature(s0, K, r, sigma, T) -> float:
    """Discounted call payoff integrated against the standard normal density of log S(T)."""
    vol = sigma * math.sqrt(T)
    drift = (r - 0.5 * sigma**2) * T
    z_star = (math.log(K / s0) - drift) / vol

    def integrand(z):
        return (s0 * math.exp(drift + vol * z) - K) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    upper = max(z_star, 0.0) + 40.0
    value, _ = integrate.quad(integrand, z_star, upper, epsabs=1e-14, epsrel=1e-13, limit=500)
    return math.exp(-r * T) * value


def brute_force_paths(topology: Topology, src: str, dst: str, max_hops: int) -> set[tuple[str, ...]]:
    """Every ordering of every node subset that starts at src, ends at dst and walks links."""
    adjacent = {frozenset(link) for link in topology.links}
    others = [n for n in topology.nodes if n not in (src, dst)]
    if src == dst:
        return {(src,)}
    found = set()
    for k in range(len(others) + 1):
        if k + 1 > max_hops:
            break
        for middle in itertools.permutations(others, k):
            seq = (src, *middle, dst)
            if all(frozenset(pair) in adjacent for pair in zip(seq, seq[1:])):
                found.add(seq)
    return found


def nonisomorphic_graphs(n: int) -> list[tuple[tuple[int, int], ...]]:
    """One edge list per isomorphism class of simple graphs on ``n`` labelled vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    if not pairs:
        return [()]
    bit = {p: k for k, p in enumerate(pairs)}
    masks = np.arange(1 << len(pairs), dtype=np.int64)
    canonical = masks.copy()
    for perm in itertools.permutations(range(n)):
        image = np.zeros_like(masks)
        for (a, b), k in bit.items():
            target = bit[tuple(sorted((perm[a], perm[b])))]
            image |= ((masks >> k) & 1) << target
        np.minimum(canonical, image, out=canonical)
    reps = np.unique(canonical)
    return [tuple(p for p, k in bit.items() if (int(m) >> k) & 1) for m in reps]


# ---------------------------------------------------------------- checks


@_timed
def check_closed_form(r: float = 0.03, K: float = 10.0, tol: float = 1e-8):
    """Black-Scholes call vs quadrature on a 5x5 grid of moneyness and total volatility."""
    worst = 0.0
    for m in np.linspace(0.5, 2.0, 5):
        for vol in np.linspace(0.01, 1.0, 5):
            T = 1.0
            got = bs_call(m * K, K, r, vol, T)
            want = bs_call_quadrature(m * K, K, r, vol, T)
            worst = max(worst, abs(got - want))
    return "closed-form call vs quadrature", worst < tol, f"max abs error {worst:.2e} (< {tol:g})"


@_timed
def check_girsanov_1d(mc: McConfig, s0=10.0, r=0.05, sigma=0.2, T=1.0, threads: int = 1):
    """E[S g(S)] = s0 e^{rT} E[g(e^{sigma^2 T} S)] for g = 1{S > K}."""
    parts, ok = [], True
    for ratio in (0.8, 1.0, 1.2):
        K = ratio * s0
        lhs, rhs = girsanov_identity_1d(s0, r, sigma, T, lambda S, K=K: (S > K).astype(float), mc, threads)
        z = (lhs.value - rhs.value) / combined_stderr(lhs, rhs)
        ok &= abs(z) <= SIGMAS
        parts.append(f"K/s0={ratio}: z={z:+.2f}")
    return "1-D change of measure", ok, "; ".join(parts)


def _dual(c: NetworkOptionContract, mc: McConfig, threads: int):
    val = value_network_option(c, mc, threads)
    se = combined_stderr(val.direct, val.girsanov)
    diff = val.direct.value - val.girsanov.value
    if se > 0:
        z = diff / se
    else:
        z = 0.0 if abs(diff) <= 1e-12 * max(abs(val.direct.value), 1.0) else math.inf
    return val, z


@_timed
def check_dual_estimator(contracts, mc: McConfig, threads: int = 1):
    """Direct Monte Carlo and the change-of-measure decomposition agree within 3 sigma."""
    parts, ok = [], True
    for label, c in contracts:
        val, z = _dual(c, mc, threads)
        ok &= abs(z) <= SIGMAS
        parts.append(f"{label}: {val.direct.value:.6g} vs {val.girsanov.value:.6g} (z={z:+.2f})")
    return "direct vs change-of-measure price", ok, "; ".join(parts)


@_timed
def check_bundle_zero(contracts, mc: McConfig, threads: int = 1):
    """Bundle futures on the cheapest path are worth zero."""
    zs, ok = [], True
    for _, c in contracts:
        est = price_bundle_future(c, mc, threads)
        z = est.value / est.stderr if est.stderr > 0 else (0.0 if est.value == 0 else math.inf)
        ok &= abs(z) <= SIGMAS
        zs.append(z)
    return "bundle future price is zero", ok, "z = " + ", ".join(f"{z:+.2f}" for z in zs)


def finite_difference_delta(c: NetworkOptionContract, n: int, S, rel_bump: float = 1e-4) -> McEstimate:
    """Central difference of the plain payoff in s_{n,0} on fixed terminal samples."""
    h = rel_bump * c.resources[n].s0
    up, down = S.copy(), S.copy()
    # S_n(T1) is proportional to s_{n,0}
    up[:, n] *= (c.resources[n].s0 + h) / c.resources[n].s0
    down[:, n] *= (c.resources[n].s0 - h) / c.resources[n].s0
    return McEstimate.from_samples((network_payoff(c, up) - network_payoff(c, down)) / (2 * h), 0)


@_timed
def check_deltas(contracts, mc: McConfig, threads: int = 1, rel_tol: float = 1e-12):
    """Change-of-measure deltas vs finite differences, and the price reconstruction identity."""
    parts, ok = [], True
    for label, c in contracts:
        val = value_network_option(c, mc, threads)
        S = terminal_samples(c, mc, threads)
        worst = 0.0
        for n in range(c.N):
            fd = finite_difference_delta(c, n, S)
            se = combined_stderr(fd, val.deltas[n])
            diff = val.deltas[n].value - fd.value
            z = diff / se if se > 0 else (0.0 if abs(diff) < 1e-12 else math.inf)
            worst = max(worst, abs(z))
        rel = abs(val.reconstruction_residual) / max(abs(val.girsanov.value), 1e-300)
        ok &= worst <= SIGMAS and rel < rel_tol
        parts.append(f"{label}: max |z|={worst:.2f}, reconstruction rel err {rel:.1e}")
    return "deltas and price reconstruction", ok, "; ".join(parts)


@_timed
def check_small_rate_limits(tol: float = 1e-9):
    """Asian and TC values vs 50-digit evaluation, and continuity across the limit switch."""
    s0, T, T1, T2 = 5.0, 2.0, 0.5, 1.5
    worst = 0.0
    for r in (1e-14, 1e-8, 1e-3, -1e-3):
        with mpmath.workdps(50):
            R = mpmath.mpf(r)
            asian = s0 * (1 - mpmath.exp(-R * T)) / R
            tc = (mpmath.exp(-R * T1) - mpmath.exp(-R * T2)) / R
        worst = max(
            worst,
            abs(asian_zero_strike(s0, r, T) - float(asian)) / float(asian),
            abs(time_carry(r, T1, T2) - float(tc)) / float(tc),
        )
    # either side of the switch-over threshold
    for r in (0.999e-10 / T, 1.001e-10 / T):
        worst = max(worst, abs(asian_zero_strike(s0, r, T) - s0 * T) / (s0 * T))
    for r in (0.999e-10 / T2, 1.001e-10 / T2):
        worst = max(worst, abs(time_carry(r, T1, T2) - (T2 - T1)) / (T2 - T1))
    ok = worst < tol and asian_zero_strike(s0, 0.0, T) == s0 * T and time_carry(0.0, T1, T2) == T2 - T1
    return "small-rate limits", ok, f"max rel error {worst:.1e} (< {tol:g})"


@_timed
def check_adjusted_sigma(tol: float = 1e-9):
    """Adjusted volatility against 50-digit values and its two limits."""
    worst = 0.0
    for sigma, alpha, dt in ((0.3, 1.0, 0.1), (0.2, 2.0, 0.1), (0.5, 0.3, 1e-3), (0.2, 2.0, 1e-4)):
        with mpmath.workdps(50):
            x = 2 * mpmath.mpf(alpha) * mpmath.mpf(dt)
            want = float(sigma * mpmath.sqrt((1 - mpmath.exp(-x)) / x))
        worst = max(worst, abs(adjusted_sigma(sigma, alpha, dt) - want))
    rounded = round(adjusted_sigma(0.3, 1.0, 0.1), 6) == 0.285607
    limits = adjusted_sigma(0.3, 1.0, 1e-12) == 0.3 and adjusted_sigma(0.3, 0.0, 0.1) == 0.3
    ok = worst < tol and rounded and limits
    return "adjusted volatility", ok, f"max abs error {worst:.1e} (< {tol:g}); limits exact: {limits}"


@_timed
def check_path_enumeration(max_nodes: int = 6):
    """Every graph class with up to ``max_nodes`` nodes, every endpoint pair, hop limits 2 and n - 1."""
    graphs = queries = 0
    for n in range(1, max_nodes + 1):
        names = [chr(ord("A") + k) for k in range(n)]
        for edges in nonisomorphic_graphs(n):
            graphs += 1
            topo = Topology(tuple(names), tuple((names[a], names[b]) for a, b in edges))
            for src, dst in itertools.product(names, repeat=2):
                for hops in sorted({2, max(n - 1, 1)}):
                    queries += 1
                    want = brute_force_paths(topo, src, dst, hops)
                    try:
                        got = set(enumerate_paths(topo, RouteQuery(src, dst, hops)).path_labels)
                    except NoPath:
                        got = set()
                    if got != want:
                        return "path enumeration", False, f"mismatch on {edges} {src}->{dst} hops={hops}"
    diamond = enumerate_paths(diamond_topology(), RouteQuery("B", "C")).path_labels
    ok = [set(p) for p in diamond] == [{"B", "A", "C"}, {"B", "D", "C"}]
    return "path enumeration", ok, f"{graphs} graphs, {queries} queries match brute force; diamond {diamond}"


def hedge_deviation(stats) -> float:
    return (stats.terminal_mean - stats.initial_value) / stats.initial_value


@_timed
def check_continuous_hedge(n_paths: int = 1000, seed: int = 0, threads: int = 1):
    """GBM call hedged every 1e-3: terminal spread under 2% and mean within 0.5% of the riskless value."""
    cfg = HedgeConfig(GbmParams(10.0, 0.0, 0.2), K=10.0, T=1.0, r=0.0, rebalance_dt=1e-3, sim_dt=1e-3, n_paths=n_paths, seed=seed)
    stats = simulate_hedged_portfolio(cfg, threads)
    p0 = stats.initial_value
    spread = stats.terminal_std / p0
    bias = abs(stats.terminal_mean - p0 * math.exp(cfg.r * cfg.T)) / p0
    ok = spread < 0.02 and bias < 0.005
    return (
        "continuous-hedge limit",
        ok,
        f"std/Pi0={spread:.4f} (< 0.02), |mean dev|={bias:.4f} (< 0.005), dropped {stats.n_dropped}/{n_paths}",
    )


def mean_reverting_hedge(adjusted: bool, n_paths: int = 10_000, seed: int = 0, threads: int = 1):
    cfg = HedgeConfig(
        MeanRevParams(10.0, alpha=2.0, mu=10.0, sigma=0.2),
        K=10.0, T=1.0, r=0.0, rebalance_dt=0.1, sim_dt=1e-3,
        use_adjusted_sigma=adjusted, n_paths=n_paths, seed=seed,
    )
    return simulate_hedged_portfolio(cfg, threads)


@_timed
def check_interval_hedge(n_paths: int = 10_000, seed: int = 0, threads: int = 1):
    """Mean-reverting asset hedged 10 times: mean within 5%, spread growing at every instant."""
    stats = mean_reverting_hedge(False, n_paths, seed, threads)
    dev = hedge_deviation(stats)
    growing = bool(np.all(np.diff(stats.std_value) > 0))
    ok = abs(dev) <= 0.05 and growing
    return "interval-hedge deviation", ok, f"mean dev {dev:+.4f} (|.| <= 0.05), std increasing: {growing}"


@_timed
def check_adjusted_hedge_report(n_paths: int = 10_000, seed: int = 0, threads: int = 1):
    """Adjusted and unadjusted mean-reverting runs side by side; no ordering is asserted."""
    plain = mean_reverting_hedge(False, n_paths, seed, threads)
    adjusted = mean_reverting_hedge(True, n_paths, seed, threads)
    ok = np.isfinite(adjusted.terminal_mean) and np.isfinite(plain.terminal_mean)
    return (
        "adjusted vs unadjusted interval hedge",
        ok,
        f"mean dev unadjusted {hedge_deviation(plain):+.4f}, adjusted {hedge_deviation(adjusted):+.4f}",
    )


def pricing_suite(contract: NetworkOptionContract, mc: McConfig, threads: int = 1) -> list[CheckResult]:
    """The checks run by ``selftest``: closed forms, paths, and every pricing identity on ``contract``."""
    rng = np.random.default_rng(mc.seed)
    dual = [("config", contract)] + [(f"random{k}", random_contract(rng)) for k in range(5)]
    bundle = [("config", contract)] + [(f"random{k}", random_contract(rng)) for k in range(10)]
    return [
        check_closed_form(),
        check_small_rate_limits(),
        check_adjusted_sigma(),
        check_path_enumeration(),
        check_girsanov_1d(mc, threads=threads),
        check_dual_estimator(dual, mc, threads),
        check_bundle_zero(bundle, mc, threads),
        check_deltas([("config", contract)], mc, threads),
    ]
