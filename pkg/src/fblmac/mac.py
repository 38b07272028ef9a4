"""Two-user uplink multiple-access model with successive interference cancellation.

A scheme maps target rates and transmit powers to an ordered decoding chain of
streams.  `rsma1`/`rsma2` split user 1's (resp. user 2's) message into two
streams carrying `beta*r` and `(1-beta)*r`; `noma1`/`noma2` decode the unsplit
messages in the two possible orders.  Each stream in the chain is decoded
against the interference of all later streams only, and a user's message is
received iff every stream up to and including its last own stream decodes.

Power fields are role based: `p_split_1`/`p_split_2` belong to the split
user's two streams (for NOMA, user 1's single stream uses their sum) and
`p_other` to the remaining user.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fbl import FblParams, stream_error_prob


class Scheme(str, Enum):
    RSMA1 = "rsma1"
    RSMA2 = "rsma2"
    NOMA1 = "noma1"
    NOMA2 = "noma2"

    @property
    def is_rsma(self) -> bool:
        return self in (Scheme.RSMA1, Scheme.RSMA2)


class DecodeOrder(str, Enum):
    """Position of the unsplit user's stream relative to the two split streams."""

    INTERLEAVED = "interleaved"  # split, other, split
    SPLITS_FIRST = "splits-first"  # split, split, other
    OTHER_FIRST = "other-first"  # other, split, split


@dataclass(frozen=True)
class ChannelState:
    """Static channel gains |h|^2 and receiver noise variance."""

    gain1: float
    gain2: float
    noise_var: float

    def __post_init__(self) -> None:
        if self.gain1 < 0.0 or self.gain2 < 0.0:
            raise ValueError("channel gains must be nonnegative")
        if not self.noise_var > 0.0:
            raise ValueError("noise variance must be positive")


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers with a per-user budget.

    Fields may hold numpy arrays for vectorized grid evaluation; validation
    then applies elementwise.
    """

    p_split_1: float
    p_split_2: float
    p_other: float
    budget: float

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.p_split_1) < 0.0) or np.any(np.asarray(self.p_split_2) < 0.0) or np.any(np.asarray(self.p_other) < 0.0):
            raise ValueError("powers must be nonnegative")
        if not self.budget > 0.0:
            raise ValueError("budget must be positive")
        tol = 1e-12 * self.budget
        if np.any(np.asarray(self.p_split_1) + np.asarray(self.p_split_2) > self.budget + tol):
            raise ValueError("split user exceeds power budget")
        if np.any(np.asarray(self.p_other) > self.budget + tol):
            raise ValueError("other user exceeds power budget")


@dataclass(frozen=True)
class RateTarget:
    """Per-user target rates and the split factor of the split user's rate."""

    r1: float
    r2: float
    beta: float = 0.5

    def __post_init__(self) -> None:
        if self.r1 < 0.0 or self.r2 < 0.0:
            raise ValueError("target rates must be nonnegative")
        if not np.all((np.asarray(self.beta) >= 0.0) & (np.asarray(self.beta) <= 1.0)):
            raise ValueError("beta must lie in [0, 1]")


@dataclass(frozen=True)
class Stream:
    """One decoding step: owner user, transmit power, channel gain, stream rate."""

    owner: int
    power: float
    gain: float
    rate: float


Chain = tuple[Stream, ...]


@dataclass(frozen=True)
class StreamSpec:
    """Chain structure without powers: owner, gain, rate and the power field name."""

    owner: int
    gain: float
    rate: float
    power_field: str


@dataclass(frozen=True)
class ErrorBreakdown:
    """Per-stream error probabilities and the composed per-user errors."""

    per_stream: tuple
    user1: float
    user2: float


@dataclass(frozen=True)
class EvalResult:
    """Evaluation record: chain, SINRs, errors, throughputs and weighted error."""

    chain: Chain
    sinrs: tuple
    breakdown: ErrorBreakdown
    t1: float
    t2: float
    t_sum: float
    tp: float


# ============================================================
# Chain construction
# ============================================================


def stream_layout(scheme: Scheme, order: DecodeOrder, ch: ChannelState, rt: RateTarget) -> tuple[StreamSpec, ...]:
    """Decode-order stream structure of a scheme, before null-stream dropping."""
    scheme = Scheme(scheme)
    if scheme.is_rsma:
        order = DecodeOrder(order)
        if scheme is Scheme.RSMA1:
            split_user, split_gain, split_rate = 1, ch.gain1, rt.r1
            other_user, other_gain, other_rate = 2, ch.gain2, rt.r2
        else:
            split_user, split_gain, split_rate = 2, ch.gain2, rt.r2
            other_user, other_gain, other_rate = 1, ch.gain1, rt.r1
        first = StreamSpec(split_user, split_gain, rt.beta * split_rate, "p_split_1")
        second = StreamSpec(split_user, split_gain, (1.0 - rt.beta) * split_rate, "p_split_2")
        other = StreamSpec(other_user, other_gain, other_rate, "p_other")
        if order is DecodeOrder.INTERLEAVED:
            return (first, other, second)
        if order is DecodeOrder.SPLITS_FIRST:
            return (first, second, other)
        return (other, first, second)
    # NOMA: user 1 transmits on the split fields, user 2 on p_other.
    one = StreamSpec(1, ch.gain1, rt.r1, "p_split_1")
    two = StreamSpec(2, ch.gain2, rt.r2, "p_other")
    return (one, two) if scheme is Scheme.NOMA1 else (two, one)


def _spec_power(spec: StreamSpec, pw: PowerAllocation, scheme: Scheme):
    power = getattr(pw, spec.power_field)
    if not scheme.is_rsma and spec.power_field == "p_split_1":
        power = power + pw.p_split_2
    return power


def make_chain(scheme: Scheme, order: DecodeOrder, ch: ChannelState, pw: PowerAllocation, rt: RateTarget) -> Chain:
    """Build the decoding chain, dropping streams with zero power and zero rate."""
    streams = []
    for spec in stream_layout(scheme, order, ch, rt):
        power = _spec_power(spec, pw, Scheme(scheme))
        null = np.ndim(power) == 0 and np.ndim(spec.rate) == 0 and power == 0.0 and spec.rate == 0.0
        if not null:
            streams.append(Stream(spec.owner, power, spec.gain, spec.rate))
    return tuple(streams)


# ============================================================
# SINRs, error composition, throughput
# ============================================================


def chain_sinrs(chain: Chain, ch: ChannelState) -> tuple:
    """SINR of each stream against the received power of all later streams."""
    interference = 0.0
    sinrs = [0.0] * len(chain)
    for m in range(len(chain) - 1, -1, -1):
        received = chain[m].power * chain[m].gain
        sinrs[m] = received / (interference + ch.noise_var)
        interference = interference + received
    return tuple(sinrs)


def compose_user_errors(chain: Chain, stream_eps) -> ErrorBreakdown:
    """Compose per-stream errors into per-user message error probabilities.

    User u fails iff any stream up to its last rate-carrying own stream
    fails; zero-rate streams hold no part of a message.  A user carrying no
    positive-rate stream never fails.  The prefix failure probability is
    accumulated as fail + (1 - fail) * eps rather than 1 - prod(1 - eps),
    so errors far below machine epsilon survive the composition.
    """
    if len(stream_eps) != len(chain):
        raise ValueError("one error probability per chain entry required")
    user_eps = {1: 0.0, 2: 0.0}
    fail_prefix = 0.0
    for stream, eps in zip(chain, stream_eps):
        fail_prefix = fail_prefix + (1.0 - fail_prefix) * eps
        carries = np.asarray(stream.rate) > 0.0
        if np.ndim(carries) == 0:
            if carries:
                user_eps[stream.owner] = fail_prefix
        else:
            user_eps[stream.owner] = np.where(carries, fail_prefix, user_eps[stream.owner])
    return ErrorBreakdown(tuple(stream_eps), user_eps[1], user_eps[2])


def evaluate(
    scheme: Scheme,
    order: DecodeOrder,
    ch: ChannelState,
    pw: PowerAllocation,
    rt: RateTarget,
    params: FblParams,
) -> EvalResult:
    """Throughput and error probabilities of a scheme at fixed powers and rates."""
    chain = make_chain(scheme, order, ch, pw, rt)
    sinrs = chain_sinrs(chain, ch)
    eps = tuple(stream_error_prob(g, s.rate, params) for g, s in zip(sinrs, chain))
    breakdown = compose_user_errors(chain, eps)
    t1 = rt.r1 * (1.0 - breakdown.user1)
    t2 = rt.r2 * (1.0 - breakdown.user2)
    tp = rt.r1 * breakdown.user1 + rt.r2 * breakdown.user2
    return EvalResult(chain, sinrs, breakdown, t1, t2, t1 + t2, tp)


def tp_identity_check(rt: RateTarget, breakdown: ErrorBreakdown) -> tuple[float, float]:
    """Both sides of the weighted-error rewrite for a user-1-split interleaved chain.

    Returns (r1*eps1 + r2*eps2, closed-form rewrite in the three stream errors);
    the two agree to rounding for any valid breakdown.
    """
    if len(breakdown.per_stream) != 3:
        raise ValueError("identity applies to a three-stream chain")
    ea, eb, ec = breakdown.per_stream
    lhs = rt.r1 * breakdown.user1 + rt.r2 * breakdown.user2
    rhs = (rt.r1 + rt.r2) * (ea + eb - ea * eb) + rt.r1 * ec * (1.0 - ea) * (1.0 - eb)
    return lhs, rhs
