"""Experiment sweeps built on the optimizer.

Three studies: sum throughput over target-rate circles, two-point time
sharing between the plain SIC orders, and error-constrained rate regions
found by bisection along polar rays.  All outputs are plain records in a
deterministic order so downstream CSV emission is byte-reproducible.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .fbl import FblParams
from .mac import ChannelState, DecodeOrder, PowerAllocation, RateTarget, Scheme
from .oracle import GridSpec, grid_min_max_error
from .sca import InfeasibleTargetError, OptimizeResult, ScaConfig, optimize_scheme

# fallback lattice for frontier probes when the iterative optimizer stalls
RESCUE_GRID = GridSpec(power_points=21, beta_points=11)


@dataclass(frozen=True)
class CirclePolicy:
    """Target rate pairs on circles: radii times (cos a, sin a) per angle."""

    radii: tuple[float, ...] = (0.8, 1.2, 1.4)
    angles_deg: tuple[float, ...] = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0)

    def __post_init__(self) -> None:
        if not self.radii or any(r <= 0.0 for r in self.radii):
            raise ValueError("radii must be positive")
        if not self.angles_deg or any(a < 0.0 or a > 90.0 for a in self.angles_deg):
            raise ValueError("angles must lie in [0, 90] degrees")


@dataclass(frozen=True)
class RegionSpec:
    """Frontier search policy: error threshold, ray count, radial tolerance."""

    eps_threshold: float = 1e-3
    angle_count: int = 19
    radius_tolerance: float = 1e-3

    def __post_init__(self) -> None:
        if not 0.0 < self.eps_threshold < 1.0:
            raise ValueError("eps_threshold must lie in (0, 1)")
        if self.angle_count < 2:
            raise ValueError("angle_count must be at least 2")
        if not self.radius_tolerance > 0.0:
            raise ValueError("radius_tolerance must be positive")


@dataclass(frozen=True)
class SweepResult:
    """One optimized grid cell; infeasible cells keep NaN metrics."""

    scheme: Scheme
    order: DecodeOrder
    blocklength: int
    r1: float
    r2: float
    beta: float | None
    allocation: PowerAllocation | None
    eps1: float
    eps2: float
    t1: float
    t2: float
    t_sum: float
    status: str


@dataclass(frozen=True)
class FrontierPoint:
    angle_deg: float
    radius: float
    r1: float
    r2: float


@dataclass(frozen=True)
class TimeShareResult:
    """Best two-point mixture: fraction alpha on pair A, 1-alpha on pair B."""

    alpha: float
    rate_a: tuple[float, float]
    rate_b: tuple[float, float]
    t_a: float
    t_b: float
    t_sum: float


def rate_pair(radius: float, angle_deg: float) -> tuple[float, float]:
    """Polar target pair with exact axis and diagonal values."""
    if angle_deg == 0.0:
        return radius, 0.0
    if angle_deg == 90.0:
        return 0.0, radius
    if angle_deg == 45.0:
        half = math.sqrt(0.5)
        return radius * half, radius * half
    a = math.radians(angle_deg)
    return radius * math.cos(a), radius * math.sin(a)


def capacity_caps(ch: ChannelState, budget: float) -> tuple[float, float, float]:
    """Pentagon bounds: per-user and sum capacity terms at full power."""
    c1 = 0.5 * math.log2(1.0 + budget * ch.gain1 / ch.noise_var)
    c2 = 0.5 * math.log2(1.0 + budget * ch.gain2 / ch.noise_var)
    csum = 0.5 * math.log2(1.0 + budget * (ch.gain1 + ch.gain2) / ch.noise_var)
    return c1, c2, csum


def pentagon_radius(angle_deg: float, caps: tuple[float, float, float]) -> float:
    """Distance from the origin to the pentagon boundary along a polar ray."""
    c1, c2, csum = caps
    u1, u2 = rate_pair(1.0, angle_deg)
    bounds = [csum / (u1 + u2)]
    if u1 > 0.0:
        bounds.append(c1 / u1)
    if u2 > 0.0:
        bounds.append(c2 / u2)
    return min(bounds)


# ============================================================
# Throughput over rate circles
# ============================================================


def _sweep_cell(args) -> SweepResult:
    scheme, order, blocklength, radius, angle, ch, budget, cfg = args
    r1, r2 = rate_pair(radius, angle)
    rt = RateTarget(r1, r2)
    nan = float("nan")
    try:
        res = optimize_scheme(scheme, order, ch, rt, budget, FblParams(blocklength), cfg)
    except InfeasibleTargetError:
        return SweepResult(scheme, order, blocklength, r1, r2, None, None,
                           nan, nan, nan, nan, nan, "infeasible")
    best = res.best
    eps1, eps2 = best.breakdown.user1, best.breakdown.user2
    return SweepResult(scheme, order, blocklength, r1, r2, best.beta, best.allocation,
                       eps1, eps2, r1 * (1.0 - eps1), r2 * (1.0 - eps2), best.t_sum, best.status)


def throughput_sweep(
    schemes: tuple[Scheme, ...],
    order: DecodeOrder,
    circle: CirclePolicy,
    blocklengths: tuple[int, ...],
    ch: ChannelState,
    budget: float,
    cfg: ScaConfig,
    jobs: int = 1,
) -> list[SweepResult]:
    """Optimize every (scheme, N, radius, angle) cell, in that row order.

    Infeasible cells are kept with a status flag.  With jobs > 1 the cells
    run in a process pool; results are collected in submission order, so the
    output is identical to a sequential run.
    """
    if not schemes:
        raise ValueError("at least one scheme required")
    cells = [
        (Scheme(s), DecodeOrder(order), n, radius, angle, ch, budget, cfg)
        for s in schemes
        for n in blocklengths
        for radius in circle.radii
        for angle in circle.angles_deg
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_cell, cells))
    return [_sweep_cell(cell) for cell in cells]


# ============================================================
# Two-point time sharing between the plain SIC orders
# ============================================================


def time_sharing_throughput(
    target: tuple[float, float],
    blocklength: int,
    ch: ChannelState,
    budget: float,
    cfg: ScaConfig,
    alpha_points: int = 51,
    endpoint_points: int = 13,
) -> TimeShareResult:
    """Best mixture alpha*T(A) + (1-alpha)*T(B) with alpha*rA + (1-alpha)*rB = target.

    Point A transmits with one SIC order and point B with the other, powers
    optimized independently.  A rate pairs run over a fixed grid up to each
    user's capacity term, plus the target itself and the two single-user
    pairs carrying the full rate sum; B pairs follow from the mixture
    identity.  Ties keep the smallest (alpha, A) candidate.
    """
    if target[0] < 0.0 or target[1] < 0.0:
        raise ValueError("target rates must be nonnegative")
    if alpha_points < 2 or endpoint_points < 2:
        raise ValueError("grids need at least two points")
    params = FblParams(blocklength)
    cache: dict[tuple[Scheme, float, float], float | None] = {}

    def t_of(scheme: Scheme, pair: tuple[float, float]) -> float | None:
        key = (scheme, pair[0], pair[1])
        if key not in cache:
            try:
                res = optimize_scheme(scheme, DecodeOrder.INTERLEAVED, ch,
                                      RateTarget(pair[0], pair[1]), budget, params, cfg)
                cache[key] = res.best.t_sum
            except InfeasibleTargetError:
                cache[key] = None
        return cache[key]

    c1, c2, _ = capacity_caps(ch, budget)
    axis1 = [c1 * i / (endpoint_points - 1) for i in range(endpoint_points)]
    axis2 = [c2 * i / (endpoint_points - 1) for i in range(endpoint_points)]
    total = target[0] + target[1]
    # the single-user pairs make the one-at-a-time mixture reachable at the
    # alpha that reproduces the target
    extra = {(target[0], target[1]), (total, 0.0), (0.0, total)}
    pairs = sorted({(a1, a2) for a1 in axis1 for a2 in axis2} | extra)

    best: TimeShareResult | None = None
    for i in range(alpha_points):
        alpha = i / (alpha_points - 1)
        if alpha == 0.0 or alpha == 1.0:
            scheme = Scheme.NOMA1 if alpha == 1.0 else Scheme.NOMA2
            t_end = t_of(scheme, target)
            if t_end is None:
                continue
            if alpha == 1.0:
                cand = TimeShareResult(1.0, target, (0.0, 0.0), t_end, 0.0, t_end)
            else:
                cand = TimeShareResult(0.0, (0.0, 0.0), target, 0.0, t_end, t_end)
            if best is None or cand.t_sum > best.t_sum:
                best = cand
            continue
        for rate_a in pairs:
            rb1 = (target[0] - alpha * rate_a[0]) / (1.0 - alpha)
            rb2 = (target[1] - alpha * rate_a[1]) / (1.0 - alpha)
            if rb1 < 0.0 or rb2 < 0.0:
                continue
            t_a = t_of(Scheme.NOMA1, rate_a)
            if t_a is None:
                continue
            t_b = t_of(Scheme.NOMA2, (rb1, rb2))
            if t_b is None:
                continue
            mix = alpha * t_a + (1.0 - alpha) * t_b
            if best is None or mix > best.t_sum:
                best = TimeShareResult(alpha, rate_a, (rb1, rb2), t_a, t_b, mix)
    if best is None:
        raise InfeasibleTargetError("no mixture of the two SIC orders meets the target")
    return best


# ============================================================
# Error-constrained rate region by radial bisection
# ============================================================


def _radius_feasible(
    scheme: Scheme,
    order: DecodeOrder,
    radius: float,
    angle: float,
    ch: ChannelState,
    budget: float,
    params: FblParams,
    cfg: ScaConfig,
    threshold: float,
) -> bool:
    """True iff some optimized candidate keeps both user errors at or below the threshold.

    The iterative optimizer can stall on lopsided targets, so a negative
    verdict is double-checked against an exact lattice scan; any point it
    finds is a constructive feasibility certificate.
    """
    if radius == 0.0:
        return True
    r1, r2 = rate_pair(radius, angle)
    rt = RateTarget(r1, r2)
    try:
        res = optimize_scheme(scheme, order, ch, rt, budget, params, cfg, stop_at_eps=threshold)
    except InfeasibleTargetError:
        # no allocation meets the SINR floors, so every point has a stream
        # error above one half
        return False
    if any(
        c.feasible and max(c.breakdown.user1, c.breakdown.user2) <= threshold
        for c in res.candidates
    ):
        return True
    probe = grid_min_max_error(scheme, order, ch, rt, budget, params, RESCUE_GRID)
    return max(probe.breakdown.user1, probe.breakdown.user2) <= threshold


def _region_angle(args) -> FrontierPoint:
    scheme, order, angle, region, blocklength, ch, budget, cfg = args
    params = FblParams(blocklength)
    caps = capacity_caps(ch, budget)
    lo, hi = 0.0, pentagon_radius(angle, caps)
    if _radius_feasible(scheme, order, hi, angle, ch, budget, params, cfg, region.eps_threshold):
        lo = hi
    while hi - lo > region.radius_tolerance:
        mid = 0.5 * (lo + hi)
        if _radius_feasible(scheme, order, mid, angle, ch, budget, params, cfg, region.eps_threshold):
            lo = mid
        else:
            hi = mid
    r1, r2 = rate_pair(lo, angle)
    return FrontierPoint(angle, lo, r1, r2)


def rate_region(
    scheme: Scheme,
    order: DecodeOrder,
    region: RegionSpec,
    blocklength: int,
    ch: ChannelState,
    budget: float,
    cfg: ScaConfig,
    jobs: int = 1,
) -> list[FrontierPoint]:
    """Largest reliable rate pair along each polar ray, by bisection.

    Rays stay inside the full-power capacity pentagon, so every frontier
    point does too.  Zero radius is always feasible, making the result well
    defined at every angle.
    """
    scheme = Scheme(scheme)
    order = DecodeOrder(order)
    step = 90.0 / (region.angle_count - 1)
    tasks = [
        (scheme, order, i * step, region, blocklength, ch, budget, cfg)
        for i in range(region.angle_count)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_region_angle, tasks))
    return [_region_angle(task) for task in tasks]
