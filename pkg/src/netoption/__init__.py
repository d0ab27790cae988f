"""Monte Carlo pricing and hedging of options on network resource bundles."""

from .hedging import HedgeConfig, adjusted_sigma, hedge_trace, simulate_hedged_portfolio
from .network import IncidenceMatrix, NoPath, RouteQuery, Topology, enumerate_paths, path_costs
from .pricing import (
    McConfig,
    McEstimate,
    NetworkOptionContract,
    asian_zero_strike,
    bs_call,
    network_option_delta,
    price_bundle_future,
    price_network_option_direct,
    price_network_option_girsanov,
    time_carry,
    value_network_option,
)
from .rng import RngStream
from .sde import GbmParams, MeanRevParams, NotPositiveDefinite, OuParams, cholesky

__version__ = "0.1.0"

__all__ = [
    "GbmParams",
    "HedgeConfig",
    "IncidenceMatrix",
    "McConfig",
    "McEstimate",
    "MeanRevParams",
    "NetworkOptionContract",
    "NoPath",
    "NotPositiveDefinite",
    "OuParams",
    "RngStream",
    "RouteQuery",
    "Topology",
    "adjusted_sigma",
    "asian_zero_strike",
    "bs_call",
    "cholesky",
    "enumerate_paths",
    "hedge_trace",
    "network_option_delta",
    "path_costs",
    "price_bundle_future",
    "price_network_option_direct",
    "price_network_option_girsanov",
    "simulate_hedged_portfolio",
    "time_carry",
    "value_network_option",
]
