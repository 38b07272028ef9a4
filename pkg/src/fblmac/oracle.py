"""Brute-force grid search over powers and rate split.

Independent of the SCA path: evaluates the exact chain model on a dense
lattice and keeps the maximum sum throughput.  Used to validate the
optimizer and to produce reference numbers.  Points are ordered
lexicographically as (P_split_1, P_split_2, P_other, beta); ties resolve to
the smallest point in that order regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fbl import FblParams
from .mac import ChannelState, DecodeOrder, ErrorBreakdown, PowerAllocation, RateTarget, Scheme, evaluate


class GridTooLargeError(ValueError):
    """The requested lattice exceeds the evaluation cap."""


@dataclass(frozen=True)
class GridSpec:
    """Lattice resolution: points per power axis, rate-split points, eval cap."""

    power_points: int = 41
    beta_points: int = 21
    scale: str = "linear"
    max_evals: int = 2_000_000

    def __post_init__(self) -> None:
        if self.power_points < 2 or self.beta_points < 2:
            raise ValueError("grids need at least two points per axis")
        if self.scale != "linear":
            raise ValueError("only linear axis scaling is supported")
        if self.max_evals < 1:
            raise ValueError("evaluation cap must be positive")


@dataclass(frozen=True)
class OracleResult:
    """Best grid point found, with its exact evaluation attached."""

    scheme: Scheme
    order: DecodeOrder
    beta: float | None
    allocation: PowerAllocation
    t_sum: float
    weighted_error: float
    breakdown: ErrorBreakdown
    evaluations: int


def _pick(
    scheme: Scheme,
    order: DecodeOrder,
    ch: ChannelState,
    rt: RateTarget,
    params: FblParams,
    budget: float,
    p11: np.ndarray,
    p12: np.ndarray,
    p2: np.ndarray,
    beta: np.ndarray | None,
    evaluations: int,
    objective: str = "throughput",
) -> OracleResult:
    """Evaluate a batch of points (already in lexicographic order) and reduce.

    objective "throughput" keeps the maximum sum throughput, "reliability"
    the minimum worse-user error; ties resolve to the first (smallest) point.
    """
    rt_eval = rt if beta is None else RateTarget(rt.r1, rt.r2, beta)
    pw = PowerAllocation(p11, p12, p2, budget)
    res = evaluate(scheme, order, ch, pw, rt_eval, params)
    t_sum = np.broadcast_to(np.asarray(res.t_sum, dtype=float), p11.shape)
    if objective == "reliability":
        worst = np.maximum(
            np.broadcast_to(np.asarray(res.breakdown.user1, dtype=float), p11.shape),
            np.broadcast_to(np.asarray(res.breakdown.user2, dtype=float), p11.shape),
        )
        i = int(np.argmin(worst))
    else:
        i = int(np.argmax(t_sum))

    def at(x) -> float:
        arr = np.asarray(x, dtype=float)
        return float(arr[i]) if arr.ndim else float(arr)

    breakdown = ErrorBreakdown(
        tuple(at(e) for e in res.breakdown.per_stream),
        at(res.breakdown.user1),
        at(res.breakdown.user2),
    )
    return OracleResult(
        scheme=scheme,
        order=order,
        beta=None if beta is None else float(beta[i]),
        allocation=PowerAllocation(float(p11[i]), float(p12[i]), float(p2[i]), budget),
        t_sum=float(t_sum[i]),
        weighted_error=at(res.tp),
        breakdown=breakdown,
        evaluations=evaluations,
    )


def _lattice(
    scheme: Scheme,
    budget: float,
    grid: GridSpec,
    p11_axis: np.ndarray,
    p12_axis: np.ndarray,
    p2_axis: np.ndarray,
    beta_axis: np.ndarray | None,
):
    """Flat point arrays in lexicographic order, respecting the power simplex."""
    if scheme.is_rsma:
        pair1, pair2 = np.meshgrid(p11_axis, p12_axis, indexing="ij")
        keep = (pair1 + pair2) <= budget * (1.0 + 1e-12)
        pair1, pair2 = pair1[keep], pair2[keep]
        count = pair1.size * p2_axis.size * (beta_axis.size if beta_axis is not None else 1)
        if count > grid.max_evals:
            raise GridTooLargeError(f"{count} evaluations exceed the cap of {grid.max_evals}")
        idx = np.arange(pair1.size)
        if beta_axis is None:
            raise ValueError("split schemes require a rate-split axis")
        mesh_i, mesh_p2, mesh_b = np.meshgrid(idx, p2_axis, beta_axis, indexing="ij")
        flat_i = mesh_i.ravel()
        return pair1[flat_i], pair2[flat_i], mesh_p2.ravel(), mesh_b.ravel(), count
    count = p11_axis.size * p2_axis.size
    if count > grid.max_evals:
        raise GridTooLargeError(f"{count} evaluations exceed the cap of {grid.max_evals}")
    mesh_p1, mesh_p2 = np.meshgrid(p11_axis, p2_axis, indexing="ij")
    zero = np.zeros(count)
    return mesh_p1.ravel(), zero, mesh_p2.ravel(), None, count


def grid_optimize(
    scheme: Scheme,
    order: DecodeOrder,
    ch: ChannelState,
    rt: RateTarget,
    budget: float,
    params: FblParams,
    grid: GridSpec = GridSpec(),
) -> OracleResult:
    """Exhaustive search for the maximum sum throughput on the default lattice.

    Split schemes search the power simplex of the split user, the other
    user's power axis and the rate-split factor; unsplit schemes collapse to
    the two power axes.
    """
    scheme = Scheme(scheme)
    order = DecodeOrder(order)
    ax = np.linspace(0.0, budget, grid.power_points)
    beta_axis = np.linspace(0.0, 1.0, grid.beta_points) if scheme.is_rsma else None
    p11, p12, p2, beta, count = _lattice(scheme, budget, grid, ax, ax, ax, beta_axis)
    return _pick(scheme, order, ch, rt, params, budget, p11, p12, p2, beta, count)


def grid_min_max_error(
    scheme: Scheme,
    order: DecodeOrder,
    ch: ChannelState,
    rt: RateTarget,
    budget: float,
    params: FblParams,
    grid: GridSpec = GridSpec(),
) -> OracleResult:
    """Lattice point with the smallest worse-user error probability.

    An existence certificate for reliability thresholds: the returned point
    is evaluated exactly, so its errors are achievable by construction.
    """
    scheme = Scheme(scheme)
    order = DecodeOrder(order)
    ax = np.linspace(0.0, budget, grid.power_points)
    beta_axis = np.linspace(0.0, 1.0, grid.beta_points) if scheme.is_rsma else None
    p11, p12, p2, beta, count = _lattice(scheme, budget, grid, ax, ax, ax, beta_axis)
    return _pick(scheme, order, ch, rt, params, budget, p11, p12, p2, beta, count,
                 objective="reliability")


def _centered_axis(center: float, half_width: float, lo: float, hi: float, points: int) -> np.ndarray:
    return np.linspace(max(lo, center - half_width), min(hi, center + half_width), points)


def refine(
    ch: ChannelState,
    rt: RateTarget,
    budget: float,
    params: FblParams,
    grid: GridSpec,
    best: OracleResult,
    radius: float | None = None,
    levels: int = 1,
) -> OracleResult:
    """Local lattice refinement around the incumbent, halving the span per level.

    The radius is a fraction of each axis range; the default is one coarse
    grid step.  The incumbent is kept on ties, so the objective never
    decreases.
    """
    if levels < 0:
        raise ValueError("levels must be nonnegative")
    fraction = 1.0 / (grid.power_points - 1) if radius is None else radius
    if fraction <= 0.0:
        raise ValueError("radius must be positive")
    incumbent = best
    for _ in range(levels):
        alloc = incumbent.allocation
        half = fraction * budget
        ax11 = _centered_axis(float(np.asarray(alloc.p_split_1)), half, 0.0, budget, grid.power_points)
        ax12 = _centered_axis(float(np.asarray(alloc.p_split_2)), half, 0.0, budget, grid.power_points)
        ax2 = _centered_axis(float(np.asarray(alloc.p_other)), half, 0.0, budget, grid.power_points)
        if incumbent.beta is None:
            beta_axis = None
        else:
            beta_axis = _centered_axis(incumbent.beta, fraction, 0.0, 1.0, grid.beta_points)
        p11, p12, p2, beta, count = _lattice(incumbent.scheme, budget, grid, ax11, ax12, ax2, beta_axis)
        local = _pick(
            incumbent.scheme,
            incumbent.order,
            ch,
            rt,
            params,
            budget,
            p11,
            p12,
            p2,
            beta,
            incumbent.evaluations + count,
        )
        if local.t_sum > incumbent.t_sum:
            incumbent = local
        else:
            incumbent = OracleResult(
                scheme=incumbent.scheme,
                order=incumbent.order,
                beta=incumbent.beta,
                allocation=incumbent.allocation,
                t_sum=incumbent.t_sum,
                weighted_error=incumbent.weighted_error,
                breakdown=incumbent.breakdown,
                evaluations=incumbent.evaluations + count,
            )
        fraction *= 0.5
    return incumbent
