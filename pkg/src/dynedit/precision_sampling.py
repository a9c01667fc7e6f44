"""Floored precision sampling.

A precision ``u`` is drawn as ``u0 = min(1, eps^2 * E / L)`` with ``E ~ Exp(1)``
and ``L = ln(2/delta)``, then floored at ``tau``, the ``delta/2`` quantile of
``u0``.  The floor makes ``1/u`` a hard bound and costs at most ``delta/2`` in
failure probability.

Recovery is the plain non-negative sum.  If every input ``A~_i`` is an
``(alpha, beta*u_i)``-approximation of ``A_i`` then the sum is an
``(alpha, beta*sum(u_i))``-approximation of ``sum(A_i)``; whenever
``sum(u_i) <= 1`` (which, with ``E[u] ~ eps^2 / L``, fails only with negligible
probability for the fan-outs used by the tree) that is an
``((1+eps)*alpha, beta)``-approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArityError, ConfigError

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class PrecisionParams:
    epsilon: float
    delta: float
    tau: float

    @property
    def log_term(self) -> float:
        return math.log(2.0 / self.delta)


def make_params(epsilon: float, delta: float) -> PrecisionParams:
    """Parameters of the floored distribution; ``tau`` is the exact ``delta/2`` quantile."""
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    log_term = math.log(2.0 / delta)
    # Pr[u0 < t] = 1 - exp(-t * L / eps^2); solve for delta/2
    tau = -(epsilon * epsilon / log_term) * math.log1p(-delta / 2.0)
    return PrecisionParams(epsilon, delta, min(tau, 1.0))


def base_cdf(params: PrecisionParams, t: float) -> float:
    """``Pr[u0 <= t]`` for the unfloored variate."""
    if t >= 1.0:
        return 1.0
    if t <= 0.0:
        return 0.0
    return -math.expm1(-t * params.log_term / (params.epsilon**2))


def sample(params: PrecisionParams, rng: np.random.Generator) -> float:
    scale = params.epsilon**2 / params.log_term
    u0 = min(1.0, scale * rng.exponential())
    return max(u0, params.tau)


def sample_many(params: PrecisionParams, rng: np.random.Generator, size: int) -> np.ndarray:
    scale = params.epsilon**2 / params.log_term
    u0 = np.minimum(1.0, scale * rng.exponential(size=size))
    return np.maximum(u0, params.tau)


def expected_inverse(params: PrecisionParams) -> float:
    """``E[1/u]`` for the floored distribution, by numerical integration of the tail."""
    # E[1/u] = int_0^inf Pr[1/u > x] dx = 1 + int_1^{1/tau} Pr[u0 < 1/x] dx
    lo, hi = 1.0, 1.0 / params.tau
    xs = np.geomspace(lo, hi, 4097)
    ys = -np.expm1(-(1.0 / xs) * params.log_term / params.epsilon**2)
    return 1.0 + float(_trapezoid(ys, xs))


def recover(
    estimates: Sequence[float],
    precisions: Sequence[float],
    alpha: float,
    beta: float,
    params: PrecisionParams,
) -> float:
    """Estimate ``sum(A_i)`` from ``(alpha, beta*u_i)``-approximations ``A~_i``."""
    if len(estimates) != len(precisions):
        raise ArityError(f"{len(estimates)} estimates but {len(precisions)} precisions")
    total = 0.0
    for a in estimates:
        if a > 0:
            total += a
    return total


def recover_array(estimates: np.ndarray, precisions: np.ndarray | None = None) -> np.ndarray:
    """Column-wise ``recover`` over a ``(children, shifts)`` array."""
    if precisions is not None and len(precisions) != estimates.shape[0]:
        raise ArityError(f"{estimates.shape[0]} rows but {len(precisions)} precisions")
    return np.maximum(estimates, 0.0).sum(axis=0)
