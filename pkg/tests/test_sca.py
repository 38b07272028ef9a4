"""Tests for the SCA driver and the exhaustive rate-split search."""

import math
import time

import numpy as np
import pytest

from fblmac.fbl import FblParams, stream_error_prob
from fblmac.mac import ChannelState, DecodeOrder, RateTarget, Scheme, stream_layout
from fblmac.sca import (
    CONVERGED,
    BetaCandidate,
    OptimizeResult,
    ScaConfig,
    allocation_from_powers,
    beta_grid,
    initialize,
    optimize_beta,
    optimize_scheme,
    run_sca,
)
from fblmac.subproblem import InfeasibleTargetError, live_streams, sinr_floor

CH = ChannelState(1.0, 1.0, 1.0)
BUDGET = 10.0
INTER = DecodeOrder.INTERLEAVED


def _specs(rt: RateTarget, scheme=Scheme.RSMA1, order=INTER, ch=CH):
    return live_streams(stream_layout(scheme, order, ch, rt))


def test_config_validation():
    ScaConfig()
    with pytest.raises(ValueError):
        ScaConfig(tol=0.0)
    with pytest.raises(ValueError):
        ScaConfig(max_iters=0)
    with pytest.raises(ValueError):
        ScaConfig(beta_step=1.0)
    with pytest.raises(ValueError):
        ScaConfig(beta_step=0.0)


def test_initialize_equal_split_hand_values():
    params = FblParams(500)
    rt = RateTarget(0.2, 0.2, beta=0.5)
    point = initialize(_specs(rt), CH, BUDGET, params)
    assert point.powers == pytest.approx((5.0, 10.0, 5.0))
    assert point.sinrs == pytest.approx((5.0 / 16.0, 10.0 / 6.0, 5.0), rel=1e-14)
    expected_eps = tuple(stream_error_prob(g, r, params) for g, r in zip(point.sinrs, (0.1, 0.2, 0.1)))
    assert point.stream_eps == pytest.approx(expected_eps, rel=1e-12)
    assert point.t == 0.0


def test_initialize_min_power_fallback():
    params = FblParams(500)
    r = 0.566
    rt = RateTarget(r, r, beta=0.5)
    specs = _specs(rt)
    point = initialize(specs, CH, BUDGET, params)
    floors = [sinr_floor(s.rate) for s in specs]
    # every stream sits exactly on its floor, errors exactly one half
    assert point.sinrs == pytest.approx(floors, rel=1e-12)
    assert point.stream_eps == pytest.approx((0.5, 0.5, 0.5), rel=1e-9)
    received = [0.0, 0.0, 0.0]
    for i in (2, 1, 0):
        received[i] = floors[i] * (1.0 + sum(received[i + 1 :]))
    assert point.powers == pytest.approx(received, rel=1e-12)


def test_initialize_infeasible_targets():
    params = FblParams(500)
    with pytest.raises(InfeasibleTargetError):
        initialize(_specs(RateTarget(3.0, 0.2, beta=0.5)), CH, BUDGET, params)
    with pytest.raises(InfeasibleTargetError):
        initialize(_specs(RateTarget(0.566, 0.566, beta=0.5)), CH, 0.1, params)


def _init_tp(specs, rt, ch, budget, params):
    from fblmac.sca import _true_state

    point = initialize(specs, ch, budget, params)
    return _true_state(specs, point.powers, rt, ch, params)[3]


def test_run_sca_radius_point_converges_and_improves():
    params = FblParams(500)
    r = 0.8 * math.cos(math.pi / 4.0)
    rt = RateTarget(r, r, beta=0.5)
    specs = _specs(rt)
    cfg = ScaConfig()
    res = run_sca(specs, rt, CH, BUDGET, params, cfg)
    assert res.status == CONVERGED
    assert 2 <= len(res.steps) <= cfg.max_iters
    init_tp = _init_tp(specs, rt, CH, BUDGET, params)
    assert res.weighted_error <= init_tp
    assert res.weighted_error < 0.1 * init_tp  # the loop actually optimizes


def test_run_sca_reported_bound_is_monotone():
    params = FblParams(500)
    r = 0.8 * math.cos(math.pi / 4.0)
    rt = RateTarget(r, r, beta=0.5)
    cfg = ScaConfig()
    res = run_sca(_specs(rt), rt, CH, BUDGET, params, cfg)
    ts = [s.t for s in res.steps]
    assert all(b <= a + 1e-15 for a, b in zip(ts, ts[1:]))
    assert abs(ts[-1] - ts[-2]) <= cfg.tol


def test_run_sca_final_point_consistency():
    params = FblParams(500)
    rt = RateTarget(0.45, 0.6, beta=0.3)
    specs = _specs(rt)
    res = run_sca(specs, rt, CH, BUDGET, params, ScaConfig())
    from fblmac.sca import _true_state

    sinrs, eps, breakdown, tp = _true_state(specs, res.point.powers, rt, CH, params)
    assert res.point.sinrs == sinrs
    assert res.point.stream_eps == eps
    assert res.weighted_error == tp
    assert res.breakdown == breakdown
    # budgets hold exactly and floors hold to tolerance
    for user in (1, 2):
        spent = sum(p for p, s in zip(res.point.powers, specs) if s.owner == user)
        assert spent <= BUDGET * (1.0 + 1e-12)
    for g, s in zip(res.point.sinrs, specs):
        assert g >= sinr_floor(s.rate) - 1e-9
    # incumbent never loses to any accepted iterate
    for step in res.steps:
        if step.accepted:
            assert res.weighted_error <= step.true_tp


def test_run_sca_empty_chain_is_trivial():
    res = run_sca((), RateTarget(0.0, 0.0), CH, BUDGET, FblParams(500), ScaConfig())
    assert res.status == CONVERGED
    assert res.weighted_error == 0.0
    assert res.steps == ()


def test_beta_grid_contents():
    assert len(beta_grid(0.02)) == 51
    assert beta_grid(0.02)[0] == 0.0 and beta_grid(0.02)[-1] == 1.0
    assert beta_grid(0.5) == (0.0, 0.5, 1.0)
    assert beta_grid(0.25) == (0.0, 0.25, 0.5, 0.75, 1.0)
    third = beta_grid(1.0 / 3.0)
    assert len(third) == 4 and third[-1] == 1.0


def test_optimize_beta_dominates_both_unsplit_schemes():
    params = FblParams(500)
    ch = ChannelState(1.0, 0.8, 1.0)
    rt = RateTarget(0.5, 0.4)
    cfg = ScaConfig(beta_step=0.5)
    split = optimize_beta(Scheme.RSMA1, INTER, ch, rt, BUDGET, params, cfg)
    assert [c.beta for c in split.candidates] == [0.0, 0.5, 1.0]
    one = optimize_scheme(Scheme.NOMA1, INTER, ch, rt, BUDGET, params, cfg)
    two = optimize_scheme(Scheme.NOMA2, INTER, ch, rt, BUDGET, params, cfg)
    assert split.best.weighted_error <= one.best.weighted_error + 1e-9
    assert split.best.weighted_error <= two.best.weighted_error + 1e-9
    # endpoints reproduce the unsplit runs exactly
    assert split.candidates[2].t_sum == one.best.t_sum
    assert split.candidates[2].breakdown == one.best.breakdown
    assert split.candidates[0].t_sum == two.best.t_sum
    assert split.candidates[0].breakdown == two.best.breakdown


def test_optimize_beta_tie_keeps_smaller_beta():
    params = FblParams(500)
    res = optimize_beta(Scheme.RSMA1, INTER, CH, RateTarget(0.0, 0.0), BUDGET, params, ScaConfig(beta_step=0.5))
    assert res.best.beta == 0.0
    assert res.best.weighted_error == 0.0


def test_optimize_beta_all_infeasible_raises():
    params = FblParams(500)
    with pytest.raises(InfeasibleTargetError):
        optimize_beta(Scheme.RSMA1, INTER, CH, RateTarget(3.0, 3.0), BUDGET, params, ScaConfig(beta_step=0.5))


def test_optimize_beta_stop_at_eps_truncates():
    params = FblParams(500)
    res = optimize_beta(
        Scheme.RSMA1, INTER, CH, RateTarget(0.3, 0.3), BUDGET, params, ScaConfig(beta_step=0.5), stop_at_eps=1.0
    )
    assert len(res.candidates) == 1
    assert res.candidates[0].beta == 0.0


def test_optimize_scheme_noma_has_no_beta():
    params = FblParams(500)
    res = optimize_scheme(Scheme.NOMA2, INTER, CH, RateTarget(0.5, 0.4), BUDGET, params, ScaConfig())
    assert isinstance(res, OptimizeResult)
    assert res.best.beta is None
    assert len(res.candidates) == 1
    assert res.best.status == CONVERGED
    assert res.best.allocation.p_split_2 == 0.0
    assert 0.0 <= res.best.breakdown.user1 <= 1.0


def test_optimize_infeasible_candidate_recorded_not_dropped():
    # user 2's rate is unreachable only when beta leaves user 1 enough room:
    # craft one where beta=0 is infeasible (split stream two carries all of r1)
    params = FblParams(500)
    ch = ChannelState(1.0, 1.0, 1.0)
    rt = RateTarget(1.6, 0.2)
    res = optimize_beta(Scheme.RSMA1, INTER, ch, rt, BUDGET, params, ScaConfig(beta_step=0.5))
    betas = {c.beta: c for c in res.candidates}
    assert not betas[0.0].feasible or betas[0.0].weighted_error < math.inf
    assert res.best.feasible


def test_allocation_from_powers_field_mapping():
    rt = RateTarget(0.5, 0.4, beta=0.5)
    specs = _specs(rt)
    alloc = allocation_from_powers(specs, (2.0, 7.0, 3.0), BUDGET)
    assert alloc.p_split_1 == 2.0
    assert alloc.p_split_2 == 3.0
    assert alloc.p_other == 7.0


def test_sweep_cost_scales_with_grid_size():
    params = FblParams(250)
    rt = RateTarget(0.3, 0.3)
    t0 = time.perf_counter()
    optimize_beta(Scheme.RSMA1, INTER, CH, rt, BUDGET, params, ScaConfig(beta_step=0.26))
    coarse = time.perf_counter() - t0
    t0 = time.perf_counter()
    optimize_beta(Scheme.RSMA1, INTER, CH, rt, BUDGET, params, ScaConfig(beta_step=0.05))
    fine = time.perf_counter() - t0
    # 21 candidates versus 5: expect roughly linear growth, very loosely checked
    assert fine > 1.2 * coarse
    assert fine < 40.0 * coarse


def test_candidate_records_are_complete():
    params = FblParams(500)
    res = optimize_beta(Scheme.RSMA1, INTER, CH, RateTarget(0.4, 0.4), BUDGET, params, ScaConfig(beta_step=0.5))
    for cand in res.candidates:
        assert isinstance(cand, BetaCandidate)
        if cand.feasible:
            assert cand.t_sum == pytest.approx(
                0.4 * (1.0 - cand.breakdown.user1) + 0.4 * (1.0 - cand.breakdown.user2), rel=1e-12
            )
            assert cand.iterations >= 1
