"""Linearized subproblem construction for successive convex approximation.

Each outer iteration minimizes an auxiliary bound ``t`` on the rate-weighted
error probability of a decoding chain.  Products of per-stream error
variables, the error-versus-SINR curve and the SINR definitions are all
replaced by first-order expansions around a reference point; every expansion
is exact at the reference, so the reference itself (with its true weighted
error) stays feasible for the linear program it generates.

Variable layout with M live streams: ``[P_0..P_{M-1}, rho_0..rho_{M-1},
theta_0..theta_{M-1}, t]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .fbl import LOG2E, FblParams, dispersion, normal_pdf, q_function
from .mac import ChannelState, RateTarget, StreamSpec
from .simplex import LinearProgram


class InfeasibleTargetError(ValueError):
    """No power allocation can reach the requested target rates."""


@dataclass(frozen=True)
class BilinearCoeffs:
    """First-order expansion of a*b around a reference: ca*a + cb*b + const."""

    ca: float
    cb: float
    const: float

    def value(self, a: float, b: float) -> float:
        return self.ca * a + self.cb * b + self.const


@dataclass(frozen=True)
class TrilinearCoeffs:
    """First-order expansion of a*b*c around a reference."""

    ca: float
    cb: float
    cc: float
    const: float

    def value(self, a: float, b: float, c: float) -> float:
        return self.ca * a + self.cb * b + self.cc * c + self.const


@dataclass(frozen=True)
class QTangent:
    """Tangent to the stream error probability as a function of its SINR."""

    value: float
    slope: float

    def at(self, rho: float) -> float:
        return self.value + self.slope * rho


def linearize_bilinear(a_ref: float, b_ref: float) -> BilinearCoeffs:
    return BilinearCoeffs(ca=b_ref, cb=a_ref, const=-a_ref * b_ref)


def linearize_trilinear(a_ref: float, b_ref: float, c_ref: float) -> TrilinearCoeffs:
    return TrilinearCoeffs(
        ca=b_ref * c_ref,
        cb=a_ref * c_ref,
        cc=a_ref * b_ref,
        const=-2.0 * a_ref * b_ref * c_ref,
    )


def sinr_floor(rate: float) -> float:
    """SINR at which the channel capacity term equals the stream rate."""
    if rate < 0.0:
        raise ValueError("rate must be nonnegative")
    return math.pow(2.0, 2.0 * rate) - 1.0


def linearize_q(rho_ref: float, rate: float, params: FblParams) -> QTangent:
    """Tangent to rho -> Q((C(rho) - r) * sqrt(N / V(rho))) at the reference.

    Valid on the branch where the capacity term is at least the rate; there
    the composition is convex in rho, so the tangent never overestimates it.
    """
    if not rho_ref > 0.0:
        raise ValueError("reference SINR must be positive")
    n = params.blocklength
    margin = 0.5 * math.log2(1.0 + rho_ref) - rate
    if margin < 0.0:
        if margin < -1e-9 * max(1.0, rate):
            raise ValueError("reference SINR lies below the rate floor")
        margin = 0.0
    v = dispersion(rho_ref)
    scale = math.sqrt(n / v)
    s = margin * scale
    c_prime = LOG2E / (2.0 * (1.0 + rho_ref))
    v_prime = 2.0 * LOG2E * LOG2E / (1.0 + rho_ref) ** 3
    ds = c_prime * scale - margin * math.sqrt(n) * v_prime / (2.0 * v ** 1.5)
    return QTangent(value=q_function(s), slope=-normal_pdf(s) * ds)


@dataclass(frozen=True)
class SubproblemPoint:
    """Reference for the expansions: powers, SINRs, stream errors and bound."""

    powers: tuple[float, ...]
    sinrs: tuple[float, ...]
    stream_eps: tuple[float, ...]
    t: float


def live_streams(specs: tuple[StreamSpec, ...]) -> tuple[StreamSpec, ...]:
    """Streams that carry rate; zero-rate streams hold no power when optimizing."""
    return tuple(s for s in specs if s.rate > 0.0)


def decode_sets(specs: tuple[StreamSpec, ...]) -> dict[int, tuple[int, ...]]:
    """Per user, the chain prefix that must decode for its message to arrive."""
    sets: dict[int, tuple[int, ...]] = {}
    for user in (1, 2):
        owned = [i for i, s in enumerate(specs) if s.owner == user]
        if owned:
            sets[user] = tuple(range(owned[-1] + 1))
    return sets


def weighted_error_terms(specs: tuple[StreamSpec, ...], rt: RateTarget) -> dict[tuple[int, ...], float]:
    """Multilinear expansion of sum_u r_u * (1 - prod_{m in S_u} (1 - eps_m)).

    Keys are stream index subsets, values their signed coefficients; the
    weighted error equals the sum of coefficient times product of errors.
    """
    sets = decode_sets(specs)
    weights = {1: rt.r1, 2: rt.r2}
    terms: dict[tuple[int, ...], float] = {}
    for size in range(1, len(specs) + 1):
        for subset in combinations(range(len(specs)), size):
            coef = sum(weights[u] for u, prefix in sets.items() if set(subset) <= set(prefix))
            if coef != 0.0:
                terms[subset] = float((-1) ** (size + 1)) * coef
    return terms


def check_targets(specs: tuple[StreamSpec, ...], ch: ChannelState, budget: float) -> None:
    """Reject targets no allocation can meet even without interference."""
    for spec in specs:
        ceiling = budget * spec.gain / ch.noise_var
        floor = sinr_floor(spec.rate)
        if floor > ceiling * (1.0 + 1e-12):
            raise InfeasibleTargetError(
                f"stream rate {spec.rate:.6g} needs SINR {floor:.6g}, "
                f"above the interference-free limit {ceiling:.6g}"
            )


def build_subproblem(
    specs: tuple[StreamSpec, ...],
    rt: RateTarget,
    ch: ChannelState,
    budget: float,
    params: FblParams,
    ref: SubproblemPoint,
) -> LinearProgram:
    """Linear program of one inner iteration around a reference point."""
    m = len(specs)
    if m == 0:
        raise ValueError("no live streams to optimize")
    if not len(ref.powers) == len(ref.sinrs) == len(ref.stream_eps) == m:
        raise ValueError("reference point size does not match the chain")
    check_targets(specs, ch, budget)
    n_cols = 3 * m + 1
    t_col = 3 * m

    def p_col(i: int) -> int:
        return i

    def rho_col(i: int) -> int:
        return m + i

    def th_col(i: int) -> int:
        return 2 * m + i

    rows: list[np.ndarray] = []
    rhs: list[float] = []

    # weighted-error surrogate: expansion of the multilinear terms <= t
    surrogate = np.zeros(n_cols)
    constant = 0.0
    for subset, coef in weighted_error_terms(specs, rt).items():
        if len(subset) == 1:
            surrogate[th_col(subset[0])] += coef
        elif len(subset) == 2:
            i, j = subset
            bl = linearize_bilinear(ref.stream_eps[i], ref.stream_eps[j])
            surrogate[th_col(i)] += coef * bl.ca
            surrogate[th_col(j)] += coef * bl.cb
            constant += coef * bl.const
        else:
            i, j, k = subset
            tl = linearize_trilinear(ref.stream_eps[i], ref.stream_eps[j], ref.stream_eps[k])
            surrogate[th_col(i)] += coef * tl.ca
            surrogate[th_col(j)] += coef * tl.cb
            surrogate[th_col(k)] += coef * tl.cc
            constant += coef * tl.const
    surrogate[t_col] = -1.0
    rows.append(surrogate)
    rhs.append(-constant)

    # per-stream error tangents: theta_i at least the tangent at rho_ref_i
    for i, spec in enumerate(specs):
        qt = linearize_q(ref.sinrs[i], spec.rate, params)
        row = np.zeros(n_cols)
        row[rho_col(i)] = qt.slope
        row[th_col(i)] = -1.0
        rows.append(row)
        rhs.append(qt.slope * ref.sinrs[i] - qt.value)

    # SINR consistency: rho_i no larger than the SINR the powers produce
    for i, spec in enumerate(specs):
        row = np.zeros(n_cols)
        if i == m - 1:
            row[rho_col(i)] = ch.noise_var
            row[p_col(i)] = -spec.gain
            rows.append(row)
            rhs.append(0.0)
        else:
            for j in range(i + 1, m):
                row[p_col(j)] = specs[j].gain
            row[p_col(i)] = -spec.gain / ref.sinrs[i]
            row[rho_col(i)] = ref.powers[i] * spec.gain / ref.sinrs[i] ** 2
            rows.append(row)
            rhs.append(ref.powers[i] * spec.gain / ref.sinrs[i] - ch.noise_var)

    # per-user power budgets
    for user in (1, 2):
        owned = [i for i, s in enumerate(specs) if s.owner == user]
        if owned:
            row = np.zeros(n_cols)
            for i in owned:
                row[p_col(i)] = 1.0
            rows.append(row)
            rhs.append(budget)

    bounds: list[tuple[float | None, float | None]] = []
    bounds.extend((0.0, None) for _ in range(m))
    bounds.extend((sinr_floor(spec.rate), None) for spec in specs)
    bounds.extend((0.0, 1.0) for _ in range(m))
    bounds.append((None, None))

    cost = np.zeros(n_cols)
    cost[t_col] = 1.0
    return LinearProgram(c=cost, a_ub=np.array(rows), b_ub=np.array(rhs), bounds=tuple(bounds))


def unpack_solution(x: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Split an LP solution vector into powers, SINRs, errors and the bound."""
    return x[:m].copy(), x[m : 2 * m].copy(), x[2 * m : 3 * m].copy(), float(x[3 * m])
