"""Command-line front end.

Subcommands assemble requests from a scenario config, send them to the HTTP
service (an in-process instance by default, a remote one with ``--server``)
and render the responses as CSV files or terminal reports.  All CSV output
uses 12 significant digits, '.' as the decimal separator and LF line
endings, and is byte-identical across reruns of the same configuration.

Exit codes: 0 success, 2 configuration error, 3 infeasible target, 4
numerical failure inside the solver or a failed service call.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path

import httpx

from .config import ConfigError, ScenarioConfig, default_config_path, load_config
from .service import create_app

THROUGHPUT_HEADER = "scheme,order,N,r1,r2,beta,P11,P12,P2,eps1,eps2,T1,T2,Tsum,status"
REGION_HEADER = "scheme,order,N,angle_deg,r1,r2"
TRACE_HEADER = "iteration,t,true_tp,powers,rhos,thetas"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


class ServiceFailure(Exception):
    """A request that did not produce a usable response."""


def _num(value: float | None) -> str:
    return "nan" if value is None else format(float(value), ".12g")


def _opt(value: float | None) -> str:
    return "" if value is None else format(float(value), ".12g")


def _vector(values: list[float]) -> str:
    return " ".join(format(float(v), ".12g") for v in values)


def _detail(body) -> str:
    if isinstance(body, dict) and "detail" in body:
        detail = body["detail"]
        if isinstance(detail, str):
            return detail
        if isinstance(detail, list):
            parts = []
            for item in detail:
                loc = ".".join(str(p) for p in item.get("loc", ()) if p != "body")
                parts.append(f"{loc}: {item.get('msg', 'invalid')}" if loc else item.get("msg", "invalid"))
            return "; ".join(parts)
    return str(body)


def _post(server: str | None, path: str, payload: dict) -> dict:
    async def go() -> tuple[int, object]:
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=None) as client:
                resp = await client.post(path, json=payload)
                return resp.status_code, resp.json()
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://fblmac", timeout=None) as client:
            resp = await client.post(path, json=payload)
            return resp.status_code, resp.json()

    status, body = asyncio.run(go())
    if status == 422:
        raise ConfigError(_detail(body))
    if status != 200:
        raise ServiceFailure(_detail(body))
    return body


def _channel_payload(cfg: ScenarioConfig) -> dict:
    return {
        "gain1": cfg.channel.gain1,
        "gain2": cfg.channel.gain2,
        "noise_var": cfg.channel.noise_var,
    }


def _sca_payload(cfg: ScenarioConfig) -> dict:
    return {"tol": cfg.sca.tol, "max_iters": cfg.sca.max_iters, "beta_step": cfg.sca.beta_step}


def _write(path: Path, lines: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_throughput(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    body = _post(
        args.server,
        "/throughput-sweep",
        {
            "channel": _channel_payload(cfg),
            "schemes": [s.value for s in cfg.schemes],
            "order": cfg.order.value,
            "blocklengths": list(cfg.blocklengths),
            "budget": cfg.budget_linear,
            "radii": list(cfg.circle.radii),
            "angles_deg": list(cfg.circle.angles_deg),
            "sca": _sca_payload(cfg),
            "jobs": args.jobs,
        },
    )
    out_dir = Path(args.out or cfg.out_dir)
    written = 0
    for scheme in cfg.schemes:
        for n in cfg.blocklengths:
            lines = [THROUGHPUT_HEADER]
            for row in body["rows"]:
                if row["scheme"] != scheme.value or row["blocklength"] != n:
                    continue
                lines.append(
                    ",".join(
                        [
                            row["scheme"],
                            row["order"],
                            str(n),
                            _num(row["r1"]),
                            _num(row["r2"]),
                            _opt(row["beta"]),
                            _num(row["p_split_1"]),
                            _num(row["p_split_2"]),
                            _num(row["p_other"]),
                            _num(row["eps1"]),
                            _num(row["eps2"]),
                            _num(row["t1"]),
                            _num(row["t2"]),
                            _num(row["t_sum"]),
                            row["status"],
                        ]
                    )
                )
            _write(out_dir / f"throughput_{scheme.value}_{n}.csv", lines)
            written += 1
    print(f"wrote {written} files to {out_dir}")
    return EXIT_OK


def cmd_region(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    body = _post(
        args.server,
        "/region",
        {
            "channel": _channel_payload(cfg),
            "schemes": [s.value for s in cfg.region_schemes],
            "order": cfg.order.value,
            "blocklengths": list(cfg.region_blocklengths),
            "budget": cfg.budget_linear,
            "eps_threshold": cfg.region.eps_threshold,
            "angle_count": cfg.region.angle_count,
            "radius_tolerance": cfg.region.radius_tolerance,
            "sca": _sca_payload(cfg),
            "jobs": args.jobs,
        },
    )
    out_dir = Path(args.out or cfg.out_dir)
    written = 0
    for scheme in cfg.region_schemes:
        for n in cfg.region_blocklengths:
            lines = [REGION_HEADER]
            for point in body["points"]:
                if point["scheme"] != scheme.value or point["blocklength"] != n:
                    continue
                lines.append(
                    ",".join(
                        [
                            point["scheme"],
                            point["order"],
                            str(n),
                            _num(point["angle_deg"]),
                            _num(point["r1"]),
                            _num(point["r2"]),
                        ]
                    )
                )
            _write(out_dir / f"region_{scheme.value}_{n}.csv", lines)
            written += 1
    print(f"wrote {written} files to {out_dir}")
    return EXIT_OK


def _single_target_payload(cfg: ScenarioConfig, args: argparse.Namespace) -> dict:
    scheme = args.scheme or cfg.schemes[0].value
    blocklength = args.blocklength or cfg.blocklengths[0]
    return {
        "channel": _channel_payload(cfg),
        "scheme": scheme,
        "order": cfg.order.value,
        "blocklength": blocklength,
        "budget": cfg.budget_linear,
        "r1": args.r1,
        "r2": args.r2,
        "sca": _sca_payload(cfg),
    }


def _print_allocation(body: dict) -> None:
    print(f"  beta: {'-' if body['beta'] is None else format(body['beta'], '.6g')}")
    print(
        "  powers: P11={} P12={} P2={}".format(
            format(body["p_split_1"], ".6g"),
            format(body["p_split_2"], ".6g"),
            format(body["p_other"], ".6g"),
        )
    )
    print(f"  errors: eps1={body['eps1']:.6g} eps2={body['eps2']:.6g}")
    print(f"  throughput: T1={body['t1']:.6g} T2={body['t2']:.6g} Tsum={body['t_sum']:.6g}")


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    payload = _single_target_payload(cfg, args)
    payload["include_trace"] = bool(args.trace)
    body = _post(args.server, "/optimize", payload)
    print(
        f"{body['scheme']} {body['order']} N={payload['blocklength']} "
        f"target r1={args.r1:.6g} r2={args.r2:.6g}"
    )
    if body["status"] == "infeasible":
        print("target infeasible: no power allocation reaches the rate floors")
        return EXIT_INFEASIBLE
    print(f"  status: {body['status']} after {body['iterations']} iterations "
          f"({body['candidates']} split candidates)")
    _print_allocation(body)
    if args.trace:
        lines = [TRACE_HEADER]
        for step in body["trace"]:
            lines.append(
                ",".join(
                    [
                        str(step["iteration"]),
                        _num(step["t"]),
                        _num(step["true_tp"]),
                        _vector(step["powers"]),
                        _vector(step["rhos"]),
                        _vector(step["thetas"]),
                    ]
                )
            )
        _write(Path(args.trace), lines)
        print(f"  trace: {args.trace}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    payload = _single_target_payload(cfg, args)
    payload["grid"] = {
        "power_points": cfg.grid.power_points,
        "beta_points": cfg.grid.beta_points,
        "scale": cfg.grid.scale,
        "max_evals": cfg.grid.max_evals,
    }
    payload["refine_levels"] = args.refine_levels
    body = _post(args.server, "/oracle", payload)
    oracle = body["oracle"]
    sca = body["sca"]
    print(
        f"{body['scheme']} {body['order']} N={payload['blocklength']} "
        f"target r1={args.r1:.6g} r2={args.r2:.6g}"
    )
    print(f"  grid: {oracle['evaluations']} evaluations "
          f"({cfg.grid.power_points} power points, {cfg.grid.beta_points} beta points, "
          f"{body['refine_levels']} refinement levels)")

    def side(label: str, beta, p11, p12, p2, eps1, eps2, t_sum) -> None:
        beta_text = "-" if beta is None else format(beta, ".6g")
        print(
            f"  {label:<8} beta={beta_text} P11={p11:.6g} P12={p12:.6g} P2={p2:.6g} "
            f"eps1={eps1:.6g} eps2={eps2:.6g} Tsum={t_sum:.6g}"
        )

    side("oracle", oracle["beta"], oracle["p_split_1"], oracle["p_split_2"],
         oracle["p_other"], oracle["eps1"], oracle["eps2"], oracle["t_sum"])
    if sca["status"] == "infeasible":
        print("  sca      target infeasible")
        return EXIT_INFEASIBLE
    side("sca", sca["beta"], sca["p_split_1"], sca["p_split_2"],
         sca["p_other"], sca["eps1"], sca["eps2"], sca["t_sum"])
    print(f"  gap: |Tsum(oracle) - Tsum(sca)| = {body['gap']:.6g}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fblmac",
        description="Finite-blocklength throughput and rate regions for two-user uplink rate splitting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=str(default_config_path()),
                       help="scenario configuration file (INI)")
        p.add_argument("--server", default=None,
                       help="base URL of a running service; default runs in process")

    p = sub.add_parser("throughput", help="optimize every configured rate circle cell to CSV")
    common(p)
    p.add_argument("--out", default=None, help="output directory (default from config)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_throughput)

    p = sub.add_parser("region", help="trace reliable-rate frontiers to CSV")
    common(p)
    p.add_argument("--out", default=None, help="output directory (default from config)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("optimize", help="optimize one target rate pair and report the result")
    common(p)
    p.add_argument("r1", type=float, help="user-1 target rate, bits per channel use")
    p.add_argument("r2", type=float, help="user-2 target rate, bits per channel use")
    p.add_argument("--scheme", default=None, help="scheme to run (default: first configured)")
    p.add_argument("--blocklength", type=int, default=None,
                   help="blocklength N (default: first configured)")
    p.add_argument("--trace", default=None, help="write per-iteration CSV to this path")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("oracle", help="compare the optimizer against exhaustive grid search")
    common(p)
    p.add_argument("r1", type=float)
    p.add_argument("r2", type=float)
    p.add_argument("--scheme", default=None, help="scheme to run (default: first configured)")
    p.add_argument("--blocklength", type=int, default=None,
                   help="blocklength N (default: first configured)")
    p.add_argument("--refine-levels", type=int, default=1,
                   help="local grid refinement passes around the incumbent")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ServiceFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except httpx.HTTPError as exc:
        print(f"service request failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
