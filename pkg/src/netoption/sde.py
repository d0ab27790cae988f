"""Price-process models, correlated draws and path simulation.

Correlation convention: a correlation matrix ``D`` is factored as the lower
triangular ``L`` with ``L @ L.T == D`` and a correlated draw is ``x = L @ y``
for i.i.d. standard normal ``y``. Writing ``P = L.T`` gives the upper
triangular factor with ``P.T @ P == D`` used in some texts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .rng import RngStream

PIVOT_TOL = 1e-12
PRICE_FLOOR = 1e-12


class NotPositiveDefinite(ValueError):
    """Raised when a correlation matrix cannot be Cholesky factored."""


@dataclass(frozen=True)
class GbmParams:
    """Lognormal dynamics ``dS = mu S dt + sigma S dW``."""

    s0: float
    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError(f"s0 must be > 0, got {self.s0}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class MeanRevParams:
    """Mean reversion with multiplicative noise, ``dS = alpha (mu - S) dt + sigma S dW``."""

    s0: float
    alpha: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError(f"s0 must be > 0, got {self.s0}")
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class OuParams:
    """Ornstein-Uhlenbeck, ``dS = alpha (mu - S) dt + sigma dW``."""

    s0: float
    alpha: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


ProcessParams = Union[GbmParams, MeanRevParams, OuParams]


def validate_correlation(D, tol: float = 1e-12) -> np.ndarray:
    """Check shape, symmetry, unit diagonal and |rho| <= 1; return a float array.

    Positive definiteness is left to :func:`cholesky`.
    """
    D = np.array(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] == 0:
        raise ValueError(f"correlation matrix must be square and non-empty, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValueError("correlation matrix has non-finite entries")
    if np.max(np.abs(D - D.T)) > tol:
        raise ValueError("correlation matrix is not symmetric")
    if np.max(np.abs(np.diag(D) - 1.0)) > tol:
        raise ValueError("correlation matrix must have a unit diagonal")
    if np.max(np.abs(D)) > 1.0 + tol:
        raise ValueError("correlation entries must satisfy |rho| <= 1")
    return D


def cholesky(D) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == D``.

    Raises NotPositiveDefinite if a pivot falls below ``PIVOT_TOL``.
    """
    A = np.array(D, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12:
        raise ValueError("matrix is not symmetric")
    n = A.shape[0]
    L = np.zeros_like(A)
    for j in range(n):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > PIVOT_TOL:
            raise NotPositiveDefinite(f"pivot {j} is {pivot:.3e}; matrix is not positive definite")
        L[j, j] = np.sqrt(pivot)
        for i in range(j + 1, n):
            L[i, j] = (A[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def correlated_normals(L, rng: RngStream, draws: int) -> np.ndarray:
    """``draws`` rows of normals with correlation ``L @ L.T``; row k is ``L @ y_k``."""
    L = np.asarray(L, dtype=float)
    y = rng.normals((draws, L.shape[0]))
    return y @ L.T


def gbm_terminal_q(s0, r, sigma, T, z):
    """Risk-neutral lognormal terminal price ``s0 exp((r - sigma^2/2) T + sigma sqrt(T) z)``.

    Broadcasts, so ``s0``/``sigma`` may be per-resource vectors and ``z`` rows
    of :func:`correlated_normals`.
    """
    s0 = np.asarray(s0, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = s0 * np.exp((r - 0.5 * sigma**2) * T + sigma * np.sqrt(T) * np.asarray(z, dtype=float))
    return out if out.ndim else float(out)


def _coefficients(params: ProcessParams, S):
    if isinstance(params, GbmParams):
        return params.mu * S, params.sigma * S
    if isinstance(params, MeanRevParams):
        return params.alpha * (params.mu - S), params.sigma * S
    if isinstance(params, OuParams):
        return params.alpha * (params.mu - S), params.sigma * np.ones_like(S)
    raise TypeError(f"unknown process parameters {type(params).__name__}")


def euler_step(params: ProcessParams, S, dt: float, z):
    """One Euler-Maruyama step; returns (new state, number of floor clamps)."""
    drift, diffusion = _coefficients(params, S)
    S_new = S + drift * dt + diffusion * np.sqrt(dt) * z
    if isinstance(params, OuParams):
        return S_new, 0
    low = S_new < PRICE_FLOOR
    clamps = int(np.count_nonzero(low))
    if clamps:
        S_new = np.where(low, PRICE_FLOOR, S_new)
    return S_new, clamps


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    values: np.ndarray  # (steps + 1,) or (steps + 1, N)
    clamps: int = 0


def euler_path(params: ProcessParams, dt: float, steps: int, rng: RngStream) -> Trajectory:
    """Euler-Maruyama trajectory of a single process."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    z = rng.normals(steps)
    values = np.empty(steps + 1)
    values[0] = params.s0
    S = np.float64(params.s0)
    clamps = 0
    for k in range(steps):
        S, c = euler_step(params, S, dt, z[k])
        clamps += c
        values[k + 1] = S
    return Trajectory(np.arange(steps + 1) * dt, values, clamps)


def euler_paths_correlated(
    params: list[ProcessParams], L, dt: float, steps: int, rng: RngStream
) -> Trajectory:
    """Joint trajectory of N processes driven by correlated increments ``L @ y``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    L = np.asarray(L, dtype=float)
    if L.shape != (len(params), len(params)):
        raise ValueError("factor dimension does not match the number of processes")
    z = correlated_normals(L, rng, steps)
    values = np.empty((steps + 1, len(params)))
    values[0] = [p.s0 for p in params]
    clamps = 0
    for k in range(steps):
        for i, p in enumerate(params):
            values[k + 1, i], c = euler_step(p, values[k, i], dt, z[k, i])
            clamps += c
    return Trajectory(np.arange(steps + 1) * dt, values, clamps)
