"""Terminal spread of the hedged GBM portfolio against the rebalance interval,
next to the classical estimate for a plain delta hedge,
sqrt(pi/4) * vega * sigma / sqrt(n_rebalances), as a fraction of the option value.

    python scripts/hedge_convergence.py [--seeds 5] [--paths 1000]
"""

import argparse
import math

import numpy as np
from scipy.stats import norm

from netoption.hedging import HedgeConfig, simulate_hedged_portfolio
from netoption.pricing import bs_call
from netoption.sde import GbmParams


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--threads", type=int, default=4)
    args = p.parse_args()
    s0 = K = 10.0
    sigma, T = 0.2, 1.0
    f0 = bs_call(s0, K, 0.0, sigma, T)
    vega = s0 * math.sqrt(T) * norm.pdf(0.5 * sigma * math.sqrt(T))
    print("rebalance_dt,std_over_pi0_mean,std_over_pi0_min,std_over_pi0_max,mean_dev,dropped_frac,classical_estimate")
    for dt in (0.1, 0.01, 1e-3, 1e-4):
        spreads, devs, drops = [], [], []
        for seed in range(args.seeds):
            cfg = HedgeConfig(GbmParams(s0, 0.0, sigma), K=K, T=T, rebalance_dt=dt, sim_dt=min(dt, 1e-3), n_paths=args.paths, seed=seed)
            stats = simulate_hedged_portfolio(cfg, args.threads)
            spreads.append(stats.terminal_std / f0)
            devs.append((stats.terminal_mean - f0) / f0)
            drops.append(stats.n_dropped / stats.n_paths)
        n = round(T / dt)
        estimate = math.sqrt(math.pi / 4) * vega * sigma / math.sqrt(n) / f0
        print(
            f"{dt:g},{np.mean(spreads):.4f},{np.min(spreads):.4f},{np.max(spreads):.4f},"
            f"{np.mean(devs):+.4f},{np.mean(drops):.3f},{estimate:.4f}"
        )


if __name__ == "__main__":
    main()
