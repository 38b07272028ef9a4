"""Successive convex approximation for throughput-optimal power allocation.

The driver repeatedly builds the linearized subproblem around a reference
point, solves it, and re-anchors the expansion at the solution.  Two
safeguards keep the process honest: every iterate is re-evaluated with the
exact chain model, and it replaces the incumbent only if its true
rate-weighted error improves; the reported bound sequence is clamped to be
nonincreasing so a loosening surrogate can only terminate, never regress,
the result.  The rate-split factor is optimized by exhaustive grid search,
whose endpoints reproduce the unsplit schemes exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .fbl import FblParams, stream_error_prob
from .mac import (
    ChannelState,
    DecodeOrder,
    ErrorBreakdown,
    PowerAllocation,
    RateTarget,
    Scheme,
    Stream,
    chain_sinrs,
    compose_user_errors,
    stream_layout,
)
from .simplex import OPTIMAL, solve_lp
from .subproblem import (
    InfeasibleTargetError,
    StreamSpec,
    SubproblemPoint,
    build_subproblem,
    check_targets,
    live_streams,
    sinr_floor,
    unpack_solution,
)

CONVERGED = "converged"
MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class ScaConfig:
    """Loop controls: bound tolerance, iteration cap, rate-split increment."""

    tol: float = 1e-5
    max_iters: int = 100
    beta_step: float = 0.02

    def __post_init__(self) -> None:
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0.0 < self.beta_step < 1.0:
            raise ValueError("beta_step must lie strictly between 0 and 1")


@dataclass(frozen=True)
class ScaStep:
    """One iteration: clamped bound, raw LP iterate, its true weighted error."""

    t: float
    point: SubproblemPoint
    true_tp: float
    accepted: bool


@dataclass(frozen=True)
class ScaResult:
    """Outcome of one SCA run; the point holds exact SINRs and stream errors."""

    status: str
    point: SubproblemPoint
    weighted_error: float
    breakdown: ErrorBreakdown
    steps: tuple[ScaStep, ...]


@dataclass(frozen=True)
class BetaCandidate:
    """One rate-split candidate; beta is None for the unsplit schemes."""

    beta: float | None
    feasible: bool
    weighted_error: float
    t_sum: float
    allocation: PowerAllocation | None
    breakdown: ErrorBreakdown | None
    status: str
    iterations: int


@dataclass(frozen=True)
class OptimizeResult:
    """Best candidate of a scheme with the full search and trace behind it."""

    scheme: Scheme
    order: DecodeOrder
    rate: RateTarget
    best: BetaCandidate
    sca: ScaResult
    candidates: tuple[BetaCandidate, ...]


def _chain_at(specs: tuple[StreamSpec, ...], powers) -> tuple[Stream, ...]:
    return tuple(Stream(s.owner, float(p), s.gain, s.rate) for s, p in zip(specs, powers))


def _true_state(specs, powers, rt: RateTarget, ch: ChannelState, params: FblParams):
    """Exact SINRs, stream errors, per-user errors and weighted error."""
    chain = _chain_at(specs, powers)
    sinrs = chain_sinrs(chain, ch)
    eps = tuple(stream_error_prob(g, s.rate, params) for g, s in zip(sinrs, chain))
    breakdown = compose_user_errors(chain, eps)
    tp = rt.r1 * breakdown.user1 + rt.r2 * breakdown.user2
    return sinrs, eps, breakdown, tp


def _clip_budget(specs, powers: np.ndarray, budget: float) -> tuple[float, ...]:
    """Remove solver-tolerance budget overshoot by per-user rescaling."""
    out = np.array(powers, dtype=float)
    out[out < 0.0] = 0.0
    for user in (1, 2):
        owned = [i for i, s in enumerate(specs) if s.owner == user]
        total = float(sum(out[i] for i in owned))
        if total > budget:
            if total > budget * (1.0 + 1e-7):
                raise RuntimeError("subproblem solution violates the power budget")
            for i in owned:
                out[i] *= budget / total
    return tuple(float(p) for p in out)


def initialize(specs: tuple[StreamSpec, ...], ch: ChannelState, budget: float, params: FblParams) -> SubproblemPoint:
    """Reference point to start from: full-budget equal split per user.

    When an equal split leaves some stream under its rate floor, fall back to
    the minimum-power point that puts every stream exactly on its floor,
    solved backwards through the interference chain; if even that exceeds a
    budget the targets are infeasible.
    """
    counts = Counter(s.owner for s in specs)
    powers = tuple(budget / counts[s.owner] for s in specs)
    chain = _chain_at(specs, powers)
    sinrs = chain_sinrs(chain, ch)
    floors = [sinr_floor(s.rate) for s in specs]
    if any(g < f for g, f in zip(sinrs, floors)):
        check_targets(specs, ch, budget)
        m = len(specs)
        received = [0.0] * m
        for i in range(m - 1, -1, -1):
            received[i] = floors[i] * (ch.noise_var + sum(received[i + 1 :]))
        powers = tuple(received[i] / specs[i].gain for i in range(m))
        for user in (1, 2):
            spent = sum(p for p, s in zip(powers, specs) if s.owner == user)
            if spent > budget * (1.0 + 1e-12):
                raise InfeasibleTargetError(
                    f"user {user} needs power {spent:.6g} to reach the rate floors, budget is {budget:.6g}"
                )
        chain = _chain_at(specs, powers)
        sinrs = chain_sinrs(chain, ch)
    eps = tuple(stream_error_prob(g, s.rate, params) for g, s in zip(sinrs, chain))
    return SubproblemPoint(powers, sinrs, eps, 0.0)


def run_sca(
    specs: tuple[StreamSpec, ...],
    rt: RateTarget,
    ch: ChannelState,
    budget: float,
    params: FblParams,
    cfg: ScaConfig,
) -> ScaResult:
    """Iterate linearized subproblems from the initial point until the bound settles."""
    if not specs:
        empty = ErrorBreakdown((), 0.0, 0.0)
        return ScaResult(CONVERGED, SubproblemPoint((), (), (), 0.0), 0.0, empty, ())
    m = len(specs)
    floors = np.array([sinr_floor(s.rate) for s in specs])
    ref = initialize(specs, ch, budget, params)
    inc_powers = ref.powers
    _, _, inc_breakdown, inc_tp = _true_state(specs, inc_powers, rt, ch, params)

    steps: list[ScaStep] = []
    status = MAX_ITERS
    t_bound: float | None = None
    prev_obj: float | None = None
    for n in range(1, cfg.max_iters + 1):
        lp = build_subproblem(specs, rt, ch, budget, params, ref)
        sol = solve_lp(lp)
        if sol.status != OPTIMAL:
            raise RuntimeError(f"subproblem solver reported {sol.status}")
        _, rho_star, theta_star, t_star = unpack_solution(sol.x, m)
        full = _clip_budget(specs, sol.x[:m], budget)

        # full LP steps can overshoot the linearization's validity; damp the
        # step toward the incumbent until the true objective stops regressing
        accepted = False
        powers, true_tp = full, None
        for lam in (1.0, 0.5, 0.25, 0.125, 0.0625, 2.0**-5, 2.0**-6, 2.0**-7, 2.0**-8, 2.0**-10):
            trial = full if lam == 1.0 else tuple(
                (1.0 - lam) * pi + lam * pf for pi, pf in zip(inc_powers, full)
            )
            sinrs, _, breakdown, tp = _true_state(specs, trial, rt, ch, params)
            if lam == 1.0:
                powers, true_tp = trial, tp
            if tp <= inc_tp and bool(np.all(np.asarray(sinrs) >= floors - 1e-9)):
                accepted = True
                powers, true_tp = trial, tp
                inc_powers, inc_tp, inc_breakdown = trial, tp, breakdown
                # project the next reference onto a physically consistent point:
                # never claim more SINR than the accepted powers produce
                rho_ref = np.clip(np.minimum(rho_star, np.asarray(sinrs)), floors, None)
                theta_ref = tuple(stream_error_prob(float(r), s.rate, params) for r, s in zip(rho_ref, specs))
                ref = SubproblemPoint(trial, tuple(float(r) for r in rho_ref), theta_ref, float(t_star))
                break

        t_bound = float(t_star) if t_bound is None else min(t_bound, float(t_star))
        iterate = SubproblemPoint(powers, tuple(float(r) for r in rho_star), tuple(float(v) for v in theta_star), float(t_star))
        steps.append(ScaStep(t=t_bound, point=iterate, true_tp=true_tp, accepted=accepted))
        # progress is measured on the safeguarded objective: the LP bound
        # collapses toward zero well before the iterates settle, so its
        # increments say nothing about solution quality
        if prev_obj is not None and abs(inc_tp - prev_obj) <= cfg.tol:
            status = CONVERGED
            break
        prev_obj = inc_tp

    sinrs, eps, breakdown, tp = _true_state(specs, inc_powers, rt, ch, params)
    final = SubproblemPoint(inc_powers, sinrs, eps, tp)
    return ScaResult(status, final, tp, breakdown, tuple(steps))


def beta_grid(step: float) -> tuple[float, ...]:
    """Rate-split candidates {0, step, 2*step, ...} with 1 always included."""
    count = math.floor(1.0 / step + 1e-9)
    grid = [min(i * step, 1.0) for i in range(count + 1)]
    if 1.0 - grid[-1] <= 1e-12:
        grid[-1] = 1.0
    else:
        grid.append(1.0)
    return tuple(grid)


def allocation_from_powers(specs, powers, budget: float) -> PowerAllocation:
    """Map per-stream powers back onto the named power fields."""
    fields = {"p_split_1": 0.0, "p_split_2": 0.0, "p_other": 0.0}
    for spec, p in zip(specs, powers):
        fields[spec.power_field] += float(p)
    return PowerAllocation(budget=budget, **fields)


def _candidate(beta: float | None, res: ScaResult, rt: RateTarget, specs, budget: float) -> BetaCandidate:
    t_sum = rt.r1 * (1.0 - res.breakdown.user1) + rt.r2 * (1.0 - res.breakdown.user2)
    return BetaCandidate(
        beta=beta,
        feasible=True,
        weighted_error=res.weighted_error,
        t_sum=t_sum,
        allocation=allocation_from_powers(specs, res.point.powers, budget),
        breakdown=res.breakdown,
        status=res.status,
        iterations=len(res.steps),
    )


def optimize_beta(
    scheme: Scheme,
    order: DecodeOrder,
    ch: ChannelState,
    rt: RateTarget,
    budget: float,
    params: FblParams,
    cfg: ScaConfig,
    stop_at_eps: float | None = None,
) -> OptimizeResult:
    """Exhaustive search over the rate split, each candidate solved by SCA.

    Ties in weighted error keep the smaller split.  With stop_at_eps set the
    search returns the first candidate whose worse per-user error is at or
    below the threshold, which is all a feasibility probe needs.
    """
    scheme = Scheme(scheme)
    order = DecodeOrder(order)
    best: BetaCandidate | None = None
    best_sca: ScaResult | None = None
    candidates: list[BetaCandidate] = []
    for beta in beta_grid(cfg.beta_step):
        rtb = RateTarget(rt.r1, rt.r2, beta)
        specs = live_streams(stream_layout(scheme, order, ch, rtb))
        try:
            res = run_sca(specs, rtb, ch, budget, params, cfg)
        except InfeasibleTargetError:
            candidates.append(
                BetaCandidate(beta, False, math.inf, math.nan, None, None, "infeasible", 0)
            )
            continue
        cand = _candidate(beta, res, rtb, specs, budget)
        candidates.append(cand)
        if best is None or cand.weighted_error < best.weighted_error:
            best, best_sca = cand, res
        if stop_at_eps is not None and max(res.breakdown.user1, res.breakdown.user2) <= stop_at_eps:
            break
    if best is None or best_sca is None:
        raise InfeasibleTargetError("every rate-split candidate is infeasible")
    chosen = RateTarget(rt.r1, rt.r2, best.beta if best.beta is not None else rt.beta)
    return OptimizeResult(scheme, order, chosen, best, best_sca, tuple(candidates))


def optimize_scheme(
    scheme: Scheme,
    order: DecodeOrder,
    ch: ChannelState,
    rt: RateTarget,
    budget: float,
    params: FblParams,
    cfg: ScaConfig,
    stop_at_eps: float | None = None,
) -> OptimizeResult:
    """Optimize a scheme: rate-split search when split, single SCA run when not."""
    scheme = Scheme(scheme)
    order = DecodeOrder(order)
    if scheme.is_rsma:
        return optimize_beta(scheme, order, ch, rt, budget, params, cfg, stop_at_eps)
    specs = live_streams(stream_layout(scheme, order, ch, rt))
    res = run_sca(specs, rt, ch, budget, params, cfg)
    cand = _candidate(None, res, rt, specs, budget)
    return OptimizeResult(scheme, order, rt, cand, res, (cand,))
