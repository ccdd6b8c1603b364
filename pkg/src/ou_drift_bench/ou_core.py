"""Exact simulation of a discretely observed Ornstein-Uhlenbeck process.

The process solves dX_t = -theta X_t dt + dW_t with X_0 = 0 and is observed on the
regular grid t_i = i * delta, i = 0..n.  On that grid it is an exact AR(1) chain:

    X_{t_{i+1}} = a X_{t_i} + sqrt(s2) xi_i,   a = e^{-theta delta},
    s2 = (1 - e^{-2 theta delta}) / (2 theta),  xi_i iid standard normal.

The stationary variant starts from Z_0 ~ N(0, 1/(2 theta)) and follows the same
recursion.  When both variants share one innovation stream the coupling identity
X_{t_i} = Z_{t_i} - e^{-theta t_i} Z_0 holds pathwise, exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "Variant",
    "OuParams",
    "SamplePath",
    "transition_coefficients",
    "rho",
    "path_rng",
    "simulate_path",
    "simulate_coupled",
]

_SEED_MAX = 2**64


class Variant(enum.Enum):
    """Initial condition of a simulated path."""

    FROM_ZERO = "from-zero"
    STATIONARY = "stationary"


@dataclass(frozen=True)
class OuParams:
    """Grid parameters of one observation cell.

    Parameters
    ----------
    theta : float
        Drift parameter, strictly positive.  Experiments stay in [0.25, 4].
    delta : float
        Grid step, strictly positive.
    n : int
        Number of observation steps; the path has n + 1 points t_0..t_n.
    """

    theta: float
    delta: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and self.theta > 0.0):
            raise ValueError(f"theta must be finite and > 0, got {self.theta!r}")
        if not (math.isfinite(self.delta) and self.delta > 0.0):
            raise ValueError(f"delta must be finite and > 0, got {self.delta!r}")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")

    @property
    def horizon(self) -> float:
        """Observation horizon T = n * delta."""
        return self.n * self.delta

    def times(self) -> np.ndarray:
        """Observation grid t_i = i * delta, i = 0..n."""
        return np.arange(self.n + 1) * self.delta


@dataclass(frozen=True)
class SamplePath:
    """One simulated path together with the randomness that produced it.

    ``values[i]`` is the state at t_i, i = 0..n.  ``innovations`` holds the n
    standard-normal increments driving the AR(1) recursion; estimators that
    reconstruct the driving martingale require them.  ``z0`` is the stationary
    initial value drawn for the path (None for the from-zero variant).
    """

    params: OuParams
    variant: Variant
    values: np.ndarray
    innovations: np.ndarray | None = field(default=None, repr=False)
    z0: float | None = None
    seed: int | None = None
    stream: int | None = None

    def __post_init__(self) -> None:
        if self.values.shape != (self.params.n + 1,):
            raise ValueError(
                f"values must have shape ({self.params.n + 1},), got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("path values must all be finite")
        if self.variant is Variant.FROM_ZERO and self.values[0] != 0.0:
            raise ValueError(
                f"from-zero path must start at exactly 0, got {self.values[0]!r}"
            )
        if self.innovations is not None and self.innovations.shape != (self.params.n,):
            raise ValueError(
                f"innovations must have shape ({self.params.n},), got {self.innovations.shape}"
            )


def transition_coefficients(theta: float, delta: float) -> tuple[float, float]:
    """Exact AR(1) coefficients (a, s2) for one grid step.

    a = e^{-theta delta} and s2 = (1 - e^{-2 theta delta}) / (2 theta), the
    conditional mean factor and conditional variance of X_{t+delta} given X_t.
    s2 uses expm1 so small theta*delta does not lose precision.
    """
    if theta <= 0.0 or delta <= 0.0:
        raise ValueError("theta and delta must be > 0")
    a = math.exp(-theta * delta)
    s2 = -math.expm1(-2.0 * theta * delta) / (2.0 * theta)
    return a, s2


def rho(theta: float, t: float) -> float:
    """Stationary autocovariance rho(t) = e^{-theta |t|} / (2 theta)."""
    if theta <= 0.0:
        raise ValueError("theta must be > 0")
    return math.exp(-theta * abs(t)) / (2.0 * theta)


def path_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one (seed, stream) pair.

    Philox keyed by the 128-bit pair [seed, stream]: distinct pairs give
    independent streams, so replication i of a run seeded s draws from
    (s, i) with no coordination between workers.
    """
    if not (0 <= seed < _SEED_MAX):
        raise ValueError(f"seed must be a uint64, got {seed!r}")
    if not (0 <= stream < _SEED_MAX):
        raise ValueError(f"stream must be a uint64, got {stream!r}")
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _ar1_scan(innovations: np.ndarray, a: float, scale: float, x0: np.ndarray | float) -> np.ndarray:
    """Run x_i = a x_{i-1} + scale * xi_i along the last axis, prepending x0.

    ``innovations`` has shape (..., n); the result has shape (..., n + 1) with
    the initial state in column 0.
    """
    eta = scale * innovations
    x0_arr = np.broadcast_to(np.asarray(x0, dtype=np.float64), eta.shape[:-1])
    zi = (a * x0_arr)[..., np.newaxis]
    body, _ = lfilter([1.0], [1.0, -a], eta, axis=-1, zi=zi)
    return np.concatenate([x0_arr[..., np.newaxis], body], axis=-1)


def simulate_path(params: OuParams, variant: Variant, seed: int, stream: int = 0) -> SamplePath:
    """Simulate one path by the exact AR(1) recursion.

    Draw order is part of the determinism contract: the stationary variant
    draws Z_0 first, then the n innovations; the from-zero variant draws the
    innovations only.  Innovations are always retained on the returned path.
    """
    rng = path_rng(seed, stream)
    a, s2 = transition_coefficients(params.theta, params.delta)
    scale = math.sqrt(s2)
    if variant is Variant.STATIONARY:
        z0 = float(rng.standard_normal()) * math.sqrt(1.0 / (2.0 * params.theta))
        x0 = z0
    else:
        z0 = None
        x0 = 0.0
    xi = rng.standard_normal(params.n)
    values = _ar1_scan(xi, a, scale, x0)
    return SamplePath(
        params=params,
        variant=variant,
        values=values,
        innovations=xi,
        z0=z0,
        seed=seed,
        stream=stream,
    )


def simulate_coupled(
    params: OuParams,
    seed: int,
    stream: int = 0,
    z0: float | None = None,
) -> tuple[SamplePath, SamplePath]:
    """Simulate an (X, Z) pair driven by one innovation stream.

    X starts at 0, Z at Z_0 ~ N(0, 1/(2 theta)); both follow the same AR(1)
    recursion with identical innovations, so X_{t_i} = Z_{t_i} - e^{-theta t_i} Z_0
    holds exactly for every i.  The stream layout matches the stationary variant
    (Z_0 first, then innovations).  Pass ``z0`` to force the initial value; the
    Z_0 draw is still consumed so the innovations do not shift.
    """
    rng = path_rng(seed, stream)
    a, s2 = transition_coefficients(params.theta, params.delta)
    scale = math.sqrt(s2)
    z0_draw = float(rng.standard_normal()) * math.sqrt(1.0 / (2.0 * params.theta))
    z0_val = z0_draw if z0 is None else float(z0)
    xi = rng.standard_normal(params.n)
    x_values = _ar1_scan(xi, a, scale, 0.0)
    z_values = _ar1_scan(xi, a, scale, z0_val)
    x_path = SamplePath(
        params=params,
        variant=Variant.FROM_ZERO,
        values=x_values,
        innovations=xi,
        z0=None,
        seed=seed,
        stream=stream,
    )
    z_path = SamplePath(
        params=params,
        variant=Variant.STATIONARY,
        values=z_values,
        innovations=xi,
        z0=z0_val,
        seed=seed,
        stream=stream,
    )
    return x_path, z_path
