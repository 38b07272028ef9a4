"""HTTP facade over the core library.

Every computation the command-line tool performs goes through these
endpoints, so remote deployments and the in-process default behave
identically.  Requests carry linear power budgets; infeasible targets are
ordinary 200 responses with an ``infeasible`` status, while numerical
failures surface as 500s.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from .explorer import (
    CirclePolicy,
    RegionSpec,
    rate_region,
    throughput_sweep,
    time_sharing_throughput,
)
from .fbl import FblParams
from .mac import ChannelState, DecodeOrder, PowerAllocation, RateTarget, Scheme, evaluate
from .oracle import GridSpec, OracleResult, grid_optimize, refine
from .sca import InfeasibleTargetError, OptimizeResult, ScaConfig, optimize_scheme


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChannelModel(StrictModel):
    gain1: float = Field(ge=0.0)
    gain2: float = Field(ge=0.0)
    noise_var: float = Field(gt=0.0)

    def to_state(self) -> ChannelState:
        return ChannelState(self.gain1, self.gain2, self.noise_var)


class ScaModel(StrictModel):
    tol: float = 1e-5
    max_iters: int = 100
    beta_step: float = 0.02

    def to_config(self) -> ScaConfig:
        return ScaConfig(self.tol, self.max_iters, self.beta_step)


class GridModel(StrictModel):
    power_points: int = 41
    beta_points: int = 21
    scale: str = "linear"
    max_evals: int = 2_000_000

    def to_spec(self) -> GridSpec:
        return GridSpec(self.power_points, self.beta_points, self.scale, self.max_evals)


class AllocationModel(StrictModel):
    p_split_1: float = Field(ge=0.0)
    p_split_2: float = Field(ge=0.0)
    p_other: float = Field(ge=0.0)


class EvaluateRequest(StrictModel):
    channel: ChannelModel
    scheme: Scheme
    order: DecodeOrder = DecodeOrder.INTERLEAVED
    blocklength: int = Field(ge=1)
    budget: float = Field(gt=0.0, description="linear power budget per user")
    allocation: AllocationModel
    r1: float = Field(ge=0.0)
    r2: float = Field(ge=0.0)
    beta: float = Field(default=0.5, ge=0.0, le=1.0)


class EvaluateResponse(StrictModel):
    sinrs: list[float]
    stream_errors: list[float]
    eps1: float
    eps2: float
    t1: float
    t2: float
    t_sum: float
    weighted_error: float


class OptimizeRequest(StrictModel):
    channel: ChannelModel
    scheme: Scheme
    order: DecodeOrder = DecodeOrder.INTERLEAVED
    blocklength: int = Field(ge=1)
    budget: float = Field(gt=0.0)
    r1: float = Field(ge=0.0)
    r2: float = Field(ge=0.0)
    sca: ScaModel = ScaModel()
    include_trace: bool = False


class TraceStep(StrictModel):
    iteration: int
    t: float
    true_tp: float
    accepted: bool
    powers: list[float]
    rhos: list[float]
    thetas: list[float]


class OptimizeResponse(StrictModel):
    scheme: Scheme
    order: DecodeOrder
    status: str
    beta: float | None = None
    p_split_1: float | None = None
    p_split_2: float | None = None
    p_other: float | None = None
    eps1: float | None = None
    eps2: float | None = None
    t1: float | None = None
    t2: float | None = None
    t_sum: float | None = None
    weighted_error: float | None = None
    iterations: int = 0
    candidates: int = 0
    trace: list[TraceStep] | None = None


class OracleRequest(StrictModel):
    channel: ChannelModel
    scheme: Scheme
    order: DecodeOrder = DecodeOrder.INTERLEAVED
    blocklength: int = Field(ge=1)
    budget: float = Field(gt=0.0)
    r1: float = Field(ge=0.0)
    r2: float = Field(ge=0.0)
    grid: GridModel = GridModel()
    refine_levels: int = Field(default=1, ge=0)
    sca: ScaModel = ScaModel()


class OracleSide(StrictModel):
    beta: float | None
    p_split_1: float
    p_split_2: float
    p_other: float
    eps1: float
    eps2: float
    t_sum: float
    weighted_error: float
    evaluations: int


class OracleResponse(StrictModel):
    scheme: Scheme
    order: DecodeOrder
    oracle: OracleSide
    sca: OptimizeResponse
    gap: float | None
    grid_points: int
    refine_levels: int


class SweepRequest(StrictModel):
    channel: ChannelModel
    schemes: list[Scheme] = Field(min_length=1)
    order: DecodeOrder = DecodeOrder.INTERLEAVED
    blocklengths: list[int] = Field(min_length=1)
    budget: float = Field(gt=0.0)
    radii: list[float] = Field(min_length=1)
    angles_deg: list[float] = Field(min_length=1)
    sca: ScaModel = ScaModel()
    jobs: int = Field(default=1, ge=1)


class SweepRow(StrictModel):
    scheme: Scheme
    order: DecodeOrder
    blocklength: int
    r1: float
    r2: float
    beta: float | None
    p_split_1: float | None
    p_split_2: float | None
    p_other: float | None
    eps1: float | None
    eps2: float | None
    t1: float | None
    t2: float | None
    t_sum: float | None
    status: str


class SweepResponse(StrictModel):
    rows: list[SweepRow]


class RegionRequest(StrictModel):
    channel: ChannelModel
    schemes: list[Scheme] = Field(min_length=1)
    order: DecodeOrder = DecodeOrder.INTERLEAVED
    blocklengths: list[int] = Field(min_length=1)
    budget: float = Field(gt=0.0)
    eps_threshold: float = 1e-3
    angle_count: int = 19
    radius_tolerance: float = 1e-3
    sca: ScaModel = ScaModel()
    jobs: int = Field(default=1, ge=1)


class RegionRow(StrictModel):
    scheme: Scheme
    order: DecodeOrder
    blocklength: int
    angle_deg: float
    radius: float
    r1: float
    r2: float


class RegionResponse(StrictModel):
    points: list[RegionRow]


class TimeShareRequest(StrictModel):
    channel: ChannelModel
    blocklength: int = Field(ge=1)
    budget: float = Field(gt=0.0)
    r1: float = Field(ge=0.0)
    r2: float = Field(ge=0.0)
    sca: ScaModel = ScaModel()
    alpha_points: int = Field(default=51, ge=2)
    endpoint_points: int = Field(default=13, ge=2)


class TimeShareResponse(StrictModel):
    status: str
    alpha: float | None = None
    rate_a: tuple[float, float] | None = None
    rate_b: tuple[float, float] | None = None
    t_a: float | None = None
    t_b: float | None = None
    t_sum: float | None = None


def _none_if_nan(value: float) -> float | None:
    return None if math.isnan(value) else value


def _optimize_response(res: OptimizeResult, include_trace: bool) -> OptimizeResponse:
    best = res.best
    alloc = best.allocation
    trace = None
    if include_trace:
        trace = [
            TraceStep(
                iteration=i,
                t=step.t,
                true_tp=step.true_tp,
                accepted=step.accepted,
                powers=list(step.point.powers),
                rhos=list(step.point.sinrs),
                thetas=list(step.point.stream_eps),
            )
            for i, step in enumerate(res.sca.steps, start=1)
        ]
    return OptimizeResponse(
        scheme=res.scheme,
        order=res.order,
        status=best.status,
        beta=best.beta,
        p_split_1=alloc.p_split_1,
        p_split_2=alloc.p_split_2,
        p_other=alloc.p_other,
        eps1=best.breakdown.user1,
        eps2=best.breakdown.user2,
        t1=res.rate.r1 * (1.0 - best.breakdown.user1),
        t2=res.rate.r2 * (1.0 - best.breakdown.user2),
        t_sum=best.t_sum,
        weighted_error=best.weighted_error,
        iterations=best.iterations,
        candidates=len(res.candidates),
        trace=trace,
    )


def _infeasible_optimize(scheme: Scheme, order: DecodeOrder) -> OptimizeResponse:
    return OptimizeResponse(scheme=scheme, order=order, status="infeasible")


def _oracle_side(res: OracleResult) -> OracleSide:
    return OracleSide(
        beta=res.beta,
        p_split_1=res.allocation.p_split_1,
        p_split_2=res.allocation.p_split_2,
        p_other=res.allocation.p_other,
        eps1=res.breakdown.user1,
        eps2=res.breakdown.user2,
        t_sum=res.t_sum,
        weighted_error=res.weighted_error,
        evaluations=res.evaluations,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="fblmac", version="0.1.0")

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/evaluate")
    def run_evaluate(req: EvaluateRequest) -> EvaluateResponse:
        try:
            pw = PowerAllocation(
                req.allocation.p_split_1,
                req.allocation.p_split_2,
                req.allocation.p_other,
                budget=req.budget,
            )
            res = evaluate(
                req.scheme,
                req.order,
                req.channel.to_state(),
                pw,
                RateTarget(req.r1, req.r2, req.beta),
                FblParams(req.blocklength),
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return EvaluateResponse(
            sinrs=[float(g) for g in res.sinrs],
            stream_errors=[float(e) for e in res.breakdown.per_stream],
            eps1=res.breakdown.user1,
            eps2=res.breakdown.user2,
            t1=res.t1,
            t2=res.t2,
            t_sum=res.t_sum,
            weighted_error=res.tp,
        )

    @app.post("/optimize")
    def run_optimize(req: OptimizeRequest) -> OptimizeResponse:
        try:
            res = optimize_scheme(
                req.scheme,
                req.order,
                req.channel.to_state(),
                RateTarget(req.r1, req.r2),
                req.budget,
                FblParams(req.blocklength),
                req.sca.to_config(),
            )
        except InfeasibleTargetError:
            return _infeasible_optimize(req.scheme, req.order)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except RuntimeError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return _optimize_response(res, req.include_trace)

    @app.post("/oracle")
    def run_oracle(req: OracleRequest) -> OracleResponse:
        ch = req.channel.to_state()
        rt = RateTarget(req.r1, req.r2)
        params = FblParams(req.blocklength)
        grid = req.grid.to_spec()
        try:
            coarse = grid_optimize(req.scheme, req.order, ch, rt, req.budget, params, grid)
            best = refine(ch, rt, req.budget, params, grid, coarse, levels=req.refine_levels)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        try:
            sca_res = _optimize_response(
                optimize_scheme(req.scheme, req.order, ch, rt, req.budget, params, req.sca.to_config()),
                include_trace=False,
            )
        except InfeasibleTargetError:
            sca_res = _infeasible_optimize(req.scheme, req.order)
        except RuntimeError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        gap = None if sca_res.t_sum is None else abs(best.t_sum - sca_res.t_sum)
        return OracleResponse(
            scheme=req.scheme,
            order=req.order,
            oracle=_oracle_side(best),
            sca=sca_res,
            gap=gap,
            grid_points=best.evaluations,
            refine_levels=req.refine_levels,
        )

    @app.post("/throughput-sweep")
    def run_sweep(req: SweepRequest) -> SweepResponse:
        try:
            rows = throughput_sweep(
                tuple(req.schemes),
                req.order,
                CirclePolicy(tuple(req.radii), tuple(req.angles_deg)),
                tuple(req.blocklengths),
                req.channel.to_state(),
                req.budget,
                req.sca.to_config(),
                jobs=req.jobs,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except RuntimeError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        out = []
        for row in rows:
            alloc = row.allocation
            out.append(
                SweepRow(
                    scheme=row.scheme,
                    order=row.order,
                    blocklength=row.blocklength,
                    r1=row.r1,
                    r2=row.r2,
                    beta=row.beta,
                    p_split_1=None if alloc is None else alloc.p_split_1,
                    p_split_2=None if alloc is None else alloc.p_split_2,
                    p_other=None if alloc is None else alloc.p_other,
                    eps1=_none_if_nan(row.eps1),
                    eps2=_none_if_nan(row.eps2),
                    t1=_none_if_nan(row.t1),
                    t2=_none_if_nan(row.t2),
                    t_sum=_none_if_nan(row.t_sum),
                    status=row.status,
                )
            )
        return SweepResponse(rows=out)

    @app.post("/region")
    def run_region(req: RegionRequest) -> RegionResponse:
        try:
            spec = RegionSpec(req.eps_threshold, req.angle_count, req.radius_tolerance)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        points = []
        try:
            for scheme in req.schemes:
                for n in req.blocklengths:
                    for p in rate_region(
                        scheme,
                        req.order,
                        spec,
                        n,
                        req.channel.to_state(),
                        req.budget,
                        req.sca.to_config(),
                        jobs=req.jobs,
                    ):
                        points.append(
                            RegionRow(
                                scheme=scheme,
                                order=req.order,
                                blocklength=n,
                                angle_deg=p.angle_deg,
                                radius=p.radius,
                                r1=p.r1,
                                r2=p.r2,
                            )
                        )
        except RuntimeError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return RegionResponse(points=points)

    @app.post("/time-share")
    def run_time_share(req: TimeShareRequest) -> TimeShareResponse:
        try:
            res = time_sharing_throughput(
                (req.r1, req.r2),
                req.blocklength,
                req.channel.to_state(),
                req.budget,
                req.sca.to_config(),
                alpha_points=req.alpha_points,
                endpoint_points=req.endpoint_points,
            )
        except InfeasibleTargetError:
            return TimeShareResponse(status="infeasible")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except RuntimeError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return TimeShareResponse(
            status="ok",
            alpha=res.alpha,
            rate_a=res.rate_a,
            rate_b=res.rate_b,
            t_a=res.t_a,
            t_b=res.t_b,
            t_sum=res.t_sum,
        )

    return app
