"""Network configuration files.

INI syntax (read with :mod:`configparser`)::

    [network]
    schema_version = 1
    target = 0.05          ; rejection target per care level
    h2_scv = 2.0           ; scv for H2 entries that give none

    [simulation]
    horizon = 100000       ; days
    warmup = 1000          ; days
    reps = 30
    seed = 2008

    [unit UCLH]
    level = L32            ; L1, L1_ITU or L32
    cots = 17, 12, 8       ; c1[, c2[, c3]]
    stream1.arrival = M 0.58        ; <family> <mean days> [scv]
    stream1.los = M 11.51
    stream2.arrival = M 0.24
    stream2.los = M 5.83
    ; stream2.back_transfer = 30.0  ; optional mean gap between back transfers

Families are ``M``, ``E2`` and ``H2``. Back transfers, when given, are merged
into the arrival stream by adding rates; the family and scv of the arrival
entry are kept. Every unit section is ``[unit <name>]`` and names must be
unique. Errors name the file, line and offending field.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .distributions import DEFAULT_H2_SCV, Family, from_mean_scv
from .errors import LossNetError, ParseError, ValidationError
from .network import Level, Stream, UnitModel
from .simulator import DEFAULT_HORIZON, DEFAULT_REPS, DEFAULT_WARMUP

__all__ = [
    "SCHEMA_VERSION",
    "DistSpec",
    "StreamSpec",
    "UnitSpec",
    "SimulationSettings",
    "NetworkConfig",
    "parse_config",
    "parse_config_text",
    "dump_config",
    "bundled_config_path",
]

SCHEMA_VERSION = 1
_DEFAULT_SCV = {Family.EXPONENTIAL: 1.0, Family.ERLANG2: 0.5}


@dataclass(frozen=True)
class DistSpec:
    """A distribution entry as written: family, mean, optional scv."""

    family: Family
    mean: float
    scv: float | None = None

    def resolve(self, h2_scv: float = DEFAULT_H2_SCV):
        scv = self.scv
        if scv is None:
            scv = h2_scv if self.family is Family.HYPER2 else _DEFAULT_SCV[self.family]
        return from_mean_scv(self.mean, scv, self.family)

    def text(self) -> str:
        out = f"{self.family.value} {self.mean!r}"
        return out if self.scv is None else f"{out} {self.scv!r}"


@dataclass(frozen=True)
class StreamSpec:
    arrival: DistSpec
    los: DistSpec
    back_transfer: float | None = None


@dataclass(frozen=True)
class UnitSpec:
    name: str
    level: Level
    cots: tuple[int, int, int]
    streams: tuple[StreamSpec, ...]

    def build(self, h2_scv: float = DEFAULT_H2_SCV) -> UnitModel:
        streams = []
        for s in self.streams:
            arrival = s.arrival
            if s.back_transfer is not None:
                merged = 1.0 / (1.0 / arrival.mean + 1.0 / s.back_transfer)
                arrival = DistSpec(arrival.family, merged, arrival.scv)
            streams.append(Stream(arrival.resolve(h2_scv), s.los.resolve(h2_scv)))
        return UnitModel(self.name, self.level, self.cots, streams)


@dataclass(frozen=True)
class SimulationSettings:
    horizon: float = DEFAULT_HORIZON
    warmup: float = DEFAULT_WARMUP
    reps: int = DEFAULT_REPS
    seed: int = 0


@dataclass(frozen=True)
class NetworkConfig:
    units: tuple[UnitSpec, ...]
    target: float = 0.05
    h2_scv: float = DEFAULT_H2_SCV
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    schema_version: int = SCHEMA_VERSION

    def models(self, h2_scv: float | None = None) -> list[UnitModel]:
        scv = self.h2_scv if h2_scv is None else h2_scv
        return [u.build(scv) for u in self.units]

    def unit_names(self) -> list[str]:
        return [u.name for u in self.units]


def bundled_config_path() -> Path:
    """Path of the bundled North Central London network configuration."""
    return Path(str(resources.files("lossnet") / "data" / "nclpn.cfg"))


_SECTION_RE = re.compile(r"^\s*\[(?P<name>[^\]]+)\]")
_KEY_RE = re.compile(r"^(?P<key>[^\s=:;#][^=:]*?)\s*[=:]")


def _line_index(text: str):
    """Map sections and ``(section, key)`` pairs to 1-based line numbers."""
    sections, keys = {}, {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(raw)
        if m:
            current = m.group("name").strip()
            sections.setdefault(current, lineno)
            continue
        m = _KEY_RE.match(raw)
        if m and current is not None:
            keys.setdefault((current, m.group("key").strip().lower()), lineno)
    return sections, keys


class _Reader:
    def __init__(self, text: str, source: str):
        self.source = source
        self.sections, self.keys = _line_index(text)

    def fail(self, section, key, message):
        line = self.keys.get((section, key)) if key else None
        if line is None:
            line = self.sections.get(section)
        where = f"[{section}]" + (f" {key}" if key else "")
        return ValidationError(f"{where}: {message}", line=line, path=self.source)

    def number(self, parser, section, key, default, kind=float, check=None, rule=""):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            value = kind(raw)
        except ValueError:
            raise self.fail(section, key, f"expected {kind.__name__}, got {raw!r}") from None
        if kind is float and not math.isfinite(value):
            raise self.fail(section, key, f"must be finite, got {raw!r}")
        if check is not None and not check(value):
            raise self.fail(section, key, f"{rule}, got {raw!r}")
        return value

    def dist(self, parser, section, key) -> DistSpec:
        if not parser.has_option(section, key):
            raise self.fail(section, None, f"missing {key}")
        parts = parser.get(section, key).split()
        if len(parts) not in (2, 3):
            raise self.fail(section, key, "expected '<family> <mean> [scv]'")
        try:
            family = Family.parse(parts[0])
        except ValueError as exc:
            raise self.fail(section, key, str(exc)) from None
        try:
            mean = float(parts[1])
            scv = float(parts[2]) if len(parts) == 3 else None
        except ValueError:
            raise self.fail(section, key, "mean and scv must be numbers") from None
        if not (mean > 0 and math.isfinite(mean)):
            raise self.fail(section, key, f"mean must be positive, got {parts[1]}")
        spec = DistSpec(family, mean, scv)
        if scv is not None:
            try:
                spec.resolve()
            except LossNetError as exc:
                raise self.fail(section, key, str(exc)) from None
        return spec


_NETWORK_KEYS = {"schema_version", "target", "h2_scv"}
_SIM_KEYS = {"horizon", "warmup", "reps", "seed"}


def parse_config_text(text: str, source: str = "<string>") -> NetworkConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ParseError
        Malformed INI syntax.
    ValidationError
        Well-formed text that breaks a schema rule; the message names the
        section and key.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateSectionError as exc:
        raise ParseError(f"duplicate section [{exc.section}] (unit names must be unique)",
                         line=exc.lineno, path=source) from None
    except configparser.DuplicateOptionError as exc:
        raise ParseError(f"duplicate key {exc.option!r} in [{exc.section}]", line=exc.lineno, path=source) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("content before the first [section]", line=exc.lineno, path=source) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", line=line, path=source) from None
    reader = _Reader(text, source)

    for section in parser.sections():
        if section not in ("network", "simulation") and not section.startswith("unit "):
            raise reader.fail(section, None, "unknown section; expected [network], [simulation] or [unit <name>]")

    if not parser.has_section("network"):
        raise ValidationError("missing [network] section", path=source)
    for key in parser.options("network"):
        if key not in _NETWORK_KEYS:
            raise reader.fail("network", key, "unknown key")
    version = reader.number(parser, "network", "schema_version", None, int)
    if version != SCHEMA_VERSION:
        raise reader.fail("network", "schema_version", f"unsupported schema_version {version}; expected {SCHEMA_VERSION}")
    target = reader.number(parser, "network", "target", 0.05, float, lambda x: 0 < x <= 1, "must lie in (0, 1]")
    h2_scv = reader.number(parser, "network", "h2_scv", DEFAULT_H2_SCV, float, lambda x: x > 1, "must exceed 1")

    sim = SimulationSettings()
    if parser.has_section("simulation"):
        for key in parser.options("simulation"):
            if key not in _SIM_KEYS:
                raise reader.fail("simulation", key, "unknown key")
        horizon = reader.number(parser, "simulation", "horizon", sim.horizon, float, lambda x: x > 0, "must be positive")
        warmup = reader.number(parser, "simulation", "warmup", sim.warmup, float,
                               lambda x: 0 <= x < horizon, "must satisfy 0 <= warmup < horizon")
        reps = reader.number(parser, "simulation", "reps", sim.reps, int, lambda x: x >= 1, "must be at least 1")
        seed = reader.number(parser, "simulation", "seed", sim.seed, int, lambda x: x >= 0, "must be non-negative")
        sim = SimulationSettings(horizon, warmup, reps, seed)

    units = []
    for section in parser.sections():
        if not section.startswith("unit "):
            continue
        units.append(_parse_unit(parser, reader, section))
    if not units:
        raise ValidationError("no units: add at least one [unit <name>] section", path=source)
    return NetworkConfig(tuple(units), target, h2_scv, sim, version)


def _parse_unit(parser, reader, section) -> UnitSpec:
    name = section[len("unit "):].strip()
    if not name:
        raise reader.fail(section, None, "unit name is empty")
    if not parser.has_option(section, "level"):
        raise reader.fail(section, None, "missing level")
    try:
        level = Level(parser.get(section, "level").strip().upper())
    except ValueError:
        raise reader.fail(section, "level", "level must be L1, L1_ITU or L32") from None
    n = level.n_streams
    allowed = {"level", "cots"} | {f"stream{k}.{f}" for k in range(1, n + 1) for f in ("arrival", "los", "back_transfer")}
    for key in parser.options(section):
        if key not in allowed:
            raise reader.fail(section, key, f"unknown key for a {level.value} unit")

    if not parser.has_option(section, "cots"):
        raise reader.fail(section, None, "missing cots")
    try:
        counts = [int(x) for x in parser.get(section, "cots").split(",")]
    except ValueError:
        raise reader.fail(section, "cots", "cots must be comma-separated integers") from None
    expected = {Level.L1: 1, Level.L1_ITU: 2, Level.L32: 3}[level]
    if len(counts) != expected:
        raise reader.fail(section, "cots", f"a {level.value} unit takes {expected} cot count(s), got {len(counts)}")
    minimum = [1, 1, 0][:expected]
    if any(c < m for c, m in zip(counts, minimum)):
        raise reader.fail(section, "cots", f"cot counts below the minimum {minimum}")
    cots = tuple(counts + [0] * (3 - expected))

    streams = []
    for k in range(1, n + 1):
        arrival = reader.dist(parser, section, f"stream{k}.arrival")
        los = reader.dist(parser, section, f"stream{k}.los")
        back = reader.number(parser, section, f"stream{k}.back_transfer", None, float, lambda x: x > 0,
                             "must be a positive mean inter-arrival time")
        streams.append(StreamSpec(arrival, los, back))
    return UnitSpec(name, level, cots, tuple(streams))


def parse_config(path) -> NetworkConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc.strerror}", path=str(path)) from None
    return parse_config_text(text, source=str(path))


def dump_config(config: NetworkConfig) -> str:
    """Serialise ``config`` so that :func:`parse_config_text` returns an equal object."""
    sim = config.simulation
    lines = [
        "[network]",
        f"schema_version = {config.schema_version}",
        f"target = {config.target!r}",
        f"h2_scv = {config.h2_scv!r}",
        "",
        "[simulation]",
        f"horizon = {sim.horizon!r}",
        f"warmup = {sim.warmup!r}",
        f"reps = {sim.reps}",
        f"seed = {sim.seed}",
    ]
    for unit in config.units:
        used = {Level.L1: 1, Level.L1_ITU: 2, Level.L32: 3}[unit.level]
        lines += [
            "",
            f"[unit {unit.name}]",
            f"level = {unit.level.value}",
            "cots = " + ", ".join(str(c) for c in unit.cots[:used]),
        ]
        for k, s in enumerate(unit.streams, start=1):
            lines.append(f"stream{k}.arrival = {s.arrival.text()}")
            lines.append(f"stream{k}.los = {s.los.text()}")
            if s.back_transfer is not None:
                lines.append(f"stream{k}.back_transfer = {s.back_transfer!r}")
    return "\n".join(lines) + "\n"
