"""Scenario configuration: INI files mapped onto validated domain objects.

One flat file drives every command.  Powers are written in dB and converted
to linear exactly once, at load; everything downstream works in linear units.
Errors carry the file path and line number of the offending entry.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .explorer import CirclePolicy, RegionSpec
from .mac import ChannelState, DecodeOrder, Scheme
from .oracle import GridSpec
from .sca import ScaConfig


@dataclass(frozen=True)
class TimeShareSpec:
    """Grid sizes for the two-point mixture search."""

    alpha_points: int = 51
    endpoint_points: int = 13

    def __post_init__(self) -> None:
        if self.alpha_points < 2 or self.endpoint_points < 2:
            raise ValueError("time-share grids need at least two points")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a command needs, validated and in linear units."""

    channel: ChannelState
    budget_db: float
    budget_linear: float
    schemes: tuple[Scheme, ...]
    order: DecodeOrder
    blocklengths: tuple[int, ...]
    circle: CirclePolicy
    region_schemes: tuple[Scheme, ...]
    region: RegionSpec
    region_blocklengths: tuple[int, ...]
    timeshare: TimeShareSpec
    sca: ScaConfig
    grid: GridSpec
    out_dir: str
    seed: int


class ConfigError(Exception):
    """Configuration problem, annotated with its source location."""

    def __init__(self, message: str, origin: str | None = None, lineno: int | None = None):
        self.message = message
        self.origin = origin
        self.lineno = lineno
        where = origin or ""
        if lineno is not None:
            where = f"{where}:{lineno}"
        super().__init__(f"{where}: {message}" if where else message)


_SCHEMA: dict[str, tuple[str, ...]] = {
    "channel": ("gain1", "gain2", "noise_var"),
    "power": ("budget_db",),
    "experiment": ("schemes", "order", "blocklengths", "radii", "angles_deg"),
    "region": ("schemes", "blocklengths", "eps_threshold", "angle_count", "radius_tolerance"),
    "timeshare": ("alpha_points", "endpoint_points"),
    "sca": ("tol", "max_iters", "beta_step"),
    "oracle": ("power_points", "beta_points", "scale", "max_evals"),
    "output": ("directory", "seed"),
}


def _line_index(text: str) -> tuple[dict[str, int], dict[tuple[str, str], int]]:
    """Line numbers of section headers and keys, for error messages."""
    sections: dict[str, int] = {}
    keys: dict[tuple[str, str], int] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        header = re.match(r"\[(.+?)\]", line)
        if header:
            current = header.group(1)
            sections.setdefault(current, lineno)
            continue
        key = re.match(r"([^=:\s][^=:]*?)\s*[=:]", line)
        if key and current is not None:
            keys.setdefault((current, key.group(1).strip().lower()), lineno)
    return sections, keys


def default_config_path() -> Path:
    """Shipped configuration reproducing the reference experiment grid."""
    return Path(str(resources.files("fblmac").joinpath("data/default.ini")))


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from exc
    return loads_config(text, origin=str(path))


def loads_config(text: str, origin: str = "<config>") -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        if lineno is None and getattr(exc, "errors", None):
            lineno = exc.errors[0][0]
        raise ConfigError(exc.message.split("\n")[0], origin, lineno) from exc

    section_lines, key_lines = _line_index(text)

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", origin, section_lines.get(section))
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"[{section}] unknown key '{key}'", origin, key_lines.get((section, key))
                )
    for section in _SCHEMA:
        if not parser.has_section(section):
            raise ConfigError(f"missing section [{section}]", origin)

    def raw(section: str, key: str) -> str:
        if not parser.has_option(section, key):
            raise ConfigError(f"[{section}] missing key '{key}'", origin, section_lines.get(section))
        return parser.get(section, key)

    def value(section: str, key: str, convert, what: str):
        text_value = raw(section, key)
        try:
            return convert(text_value)
        except ValueError as exc:
            raise ConfigError(
                f"[{section}] {key}: expected {what}: {exc}",
                origin,
                key_lines.get((section, key)),
            ) from exc

    def build(section: str, factory, **kwargs):
        try:
            return factory(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}", origin, section_lines.get(section)) from exc

    def floats(s: str) -> tuple[float, ...]:
        return tuple(float(tok) for tok in s.split())

    def ints(s: str) -> tuple[int, ...]:
        return tuple(int(tok) for tok in s.split())

    def schemes(s: str) -> tuple[Scheme, ...]:
        parsed = tuple(Scheme(tok) for tok in s.split())
        if not parsed:
            raise ValueError("needs at least one scheme")
        return parsed

    channel = build(
        "channel",
        ChannelState,
        gain1=value("channel", "gain1", float, "a number"),
        gain2=value("channel", "gain2", float, "a number"),
        noise_var=value("channel", "noise_var", float, "a number"),
    )
    budget_db = value("power", "budget_db", float, "a number")
    circle = build(
        "experiment",
        CirclePolicy,
        radii=value("experiment", "radii", floats, "a list of numbers"),
        angles_deg=value("experiment", "angles_deg", floats, "a list of numbers"),
    )
    blocklengths = value("experiment", "blocklengths", ints, "a list of integers")
    if not blocklengths or any(n < 1 for n in blocklengths):
        raise ConfigError(
            "[experiment] blocklengths must be positive integers",
            origin,
            key_lines.get(("experiment", "blocklengths")),
        )
    region_blocklengths = value("region", "blocklengths", ints, "a list of integers")
    if not region_blocklengths or any(n < 1 for n in region_blocklengths):
        raise ConfigError(
            "[region] blocklengths must be positive integers",
            origin,
            key_lines.get(("region", "blocklengths")),
        )
    region = build(
        "region",
        RegionSpec,
        eps_threshold=value("region", "eps_threshold", float, "a number"),
        angle_count=value("region", "angle_count", int, "an integer"),
        radius_tolerance=value("region", "radius_tolerance", float, "a number"),
    )
    timeshare = build(
        "timeshare",
        TimeShareSpec,
        alpha_points=value("timeshare", "alpha_points", int, "an integer"),
        endpoint_points=value("timeshare", "endpoint_points", int, "an integer"),
    )
    sca = build(
        "sca",
        ScaConfig,
        tol=value("sca", "tol", float, "a number"),
        max_iters=value("sca", "max_iters", int, "an integer"),
        beta_step=value("sca", "beta_step", float, "a number"),
    )
    grid = build(
        "oracle",
        GridSpec,
        power_points=value("oracle", "power_points", int, "an integer"),
        beta_points=value("oracle", "beta_points", int, "an integer"),
        scale=raw("oracle", "scale").strip(),
        max_evals=value("oracle", "max_evals", int, "an integer"),
    )
    return ScenarioConfig(
        channel=channel,
        budget_db=budget_db,
        budget_linear=10.0 ** (budget_db / 10.0),
        schemes=value("experiment", "schemes", schemes, "scheme names"),
        order=value("experiment", "order", DecodeOrder, "a decode order"),
        blocklengths=blocklengths,
        circle=circle,
        region_schemes=value("region", "schemes", schemes, "scheme names"),
        region=region,
        region_blocklengths=region_blocklengths,
        timeshare=timeshare,
        sca=sca,
        grid=grid,
        out_dir=raw("output", "directory").strip(),
        seed=value("output", "seed", int, "an integer"),
    )


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text form; loading it back reproduces the same config."""

    def num(v: float) -> str:
        return repr(float(v))

    def seq(values, fmt) -> str:
        return " ".join(fmt(v) for v in values)

    lines = [
        "[channel]",
        f"gain1 = {num(cfg.channel.gain1)}",
        f"gain2 = {num(cfg.channel.gain2)}",
        f"noise_var = {num(cfg.channel.noise_var)}",
        "",
        "[power]",
        f"budget_db = {num(cfg.budget_db)}",
        "",
        "[experiment]",
        f"schemes = {seq(cfg.schemes, lambda s: s.value)}",
        f"order = {cfg.order.value}",
        f"blocklengths = {seq(cfg.blocklengths, str)}",
        f"radii = {seq(cfg.circle.radii, num)}",
        f"angles_deg = {seq(cfg.circle.angles_deg, num)}",
        "",
        "[region]",
        f"schemes = {seq(cfg.region_schemes, lambda s: s.value)}",
        f"blocklengths = {seq(cfg.region_blocklengths, str)}",
        f"eps_threshold = {num(cfg.region.eps_threshold)}",
        f"angle_count = {cfg.region.angle_count}",
        f"radius_tolerance = {num(cfg.region.radius_tolerance)}",
        "",
        "[timeshare]",
        f"alpha_points = {cfg.timeshare.alpha_points}",
        f"endpoint_points = {cfg.timeshare.endpoint_points}",
        "",
        "[sca]",
        f"tol = {num(cfg.sca.tol)}",
        f"max_iters = {cfg.sca.max_iters}",
        f"beta_step = {num(cfg.sca.beta_step)}",
        "",
        "[oracle]",
        f"power_points = {cfg.grid.power_points}",
        f"beta_points = {cfg.grid.beta_points}",
        f"scale = {cfg.grid.scale}",
        f"max_evals = {cfg.grid.max_evals}",
        "",
        "[output]",
        f"directory = {cfg.out_dir}",
        f"seed = {cfg.seed}",
    ]
    return "\n".join(lines) + "\n"
