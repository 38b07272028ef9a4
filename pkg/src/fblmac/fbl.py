"""Finite-blocklength reliability kernel.

Normal-approximation relations between SINR, coding rate, blocklength and
block error probability for a real Gaussian channel (capacity pre-log 1/2):

    eps = Q( (0.5*log2(1+gamma) - rate) / sqrt(V(gamma)/N) )

with channel dispersion V(gamma) = log2(e)^2 * (1 - (1+gamma)^-2).  All
functions accept numpy arrays transparently so grid searches can evaluate
them in bulk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

LOG2E = math.log2(math.e)

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class FblParams:
    """Blocklength and tail clamps shared by every error computation.

    The clamps keep stream error products away from exact 0/1 so that
    composed success probabilities stay representable; the special cases
    of `stream_error_prob` (no signal, or nothing to decode) still return
    exact 0 and 1.
    """

    blocklength: int
    q_tail_floor: float = 1e-300
    q_tail_ceil: float = 1.0 - 1e-16

    def __post_init__(self) -> None:
        if int(self.blocklength) != self.blocklength or self.blocklength < 1:
            raise ValueError("blocklength must be a positive integer")
        if not 0.0 < self.q_tail_floor < self.q_tail_ceil < 1.0:
            raise ValueError("tail clamps must satisfy 0 < floor < ceil < 1")


# ============================================================
# Gaussian tail
# ============================================================


def q_function(x):
    """Gaussian tail probability Q(x) = P(Z > x), via erfc for tail accuracy."""
    return 0.5 * special.erfc(x / _SQRT2)


def normal_pdf(x):
    """Standard normal density, used for tangents of Q."""
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


def q_inverse(p: float) -> float:
    """Solve q_function(x) = p for a scalar p in (0, 1).

    Safeguarded Newton iteration on Q itself (bisection fallback keeps the
    bracket valid when the density underflows in the far tail).
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0, 1)")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -q_inverse(1.0 - p)

    lo, hi = 0.0, 40.0  # Q(40) underflows below any representable p
    x = min(math.sqrt(max(-2.0 * math.log(2.0 * p), 0.0)), hi)  # Chernoff start
    for _ in range(200):
        q = float(q_function(x))
        if abs(q - p) <= 1e-14 * p:
            return x
        if q > p:
            lo = x
        else:
            hi = x
        pdf = float(normal_pdf(x))
        x_new = x + (q - p) / pdf if pdf > 0.0 else math.inf
        x = x_new if lo < x_new < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-13 * max(1.0, lo):
            break
    return x


# ============================================================
# Dispersion, rate and error probability
# ============================================================


def dispersion(gamma):
    """Channel dispersion V(gamma) in bits^2 per channel use."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("SINR must be nonnegative")
    v = LOG2E**2 * (1.0 - (1.0 + g) ** -2)
    return float(v) if np.ndim(gamma) == 0 else v


def fbl_rate(gamma, params: FblParams, eps: float):
    """Largest rate supported at SINR `gamma` with error `eps` at blocklength N.

    May be negative for tiny SINR and strict targets; callers clamp when a
    nonnegative rate is required.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly inside (0, 1)")
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("SINR must be nonnegative")
    r = 0.5 * np.log2(1.0 + g) - np.sqrt(dispersion(g) / params.blocklength) * q_inverse(eps)
    return float(r) if np.ndim(gamma) == 0 else r


def stream_error_prob(gamma, rate, params: FblParams):
    """Block error probability of one stream decoded at SINR `gamma`.

    Special cases: zero rate at zero SINR cannot fail (0.0); positive rate
    at zero SINR always fails (1.0).  Everything else is the normal
    approximation, clamped into [q_tail_floor, q_tail_ceil].
    """
    g = np.asarray(gamma, dtype=float)
    r = np.asarray(rate, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("SINR must be nonnegative")
    if np.any(r < 0.0):
        raise ValueError("rate must be nonnegative")
    v = LOG2E**2 * (1.0 - (1.0 + g) ** -2)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = (0.5 * np.log2(1.0 + g) - r) * np.sqrt(params.blocklength / v)
    eps = np.clip(q_function(arg), params.q_tail_floor, params.q_tail_ceil)
    eps = np.where(g == 0.0, np.where(r > 0.0, 1.0, 0.0), eps)
    if np.ndim(gamma) == 0 and np.ndim(rate) == 0:
        return float(eps)
    return eps
