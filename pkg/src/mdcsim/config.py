"""Scenario configuration: defaults, a sectioned key = value format, and validation.

File format::

    # comment
    [channel]
    m_low = 0.1
    m_high = 1.0

Keys are addressed as ``section.key`` for ``--set`` overrides.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .workload import MB, WorkloadParams


class ConfigError(ValueError):
    """Raised for unparseable or invalid configuration input."""


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_int(text: str) -> int:
    t = text.strip().replace("_", "")
    try:
        return int(t)
    except ValueError:
        f = float(t)
        if not f.is_integer():
            raise ValueError(f"not an integer: {text!r}") from None
        return int(f)


def parse_range(text: str) -> tuple[int, ...]:
    """``start:stop:step`` (inclusive stop) or a comma-separated list of integers."""
    t = text.strip()
    if ":" in t:
        parts = t.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected start:stop:step, got {text!r}")
        start, stop, step = (parse_int(p) for p in parts)
        if start < 1 or step < 1 or stop < start:
            raise ValueError(f"empty or invalid range {text!r} (need start>=1, step>=1, stop>=start)")
        return tuple(range(start, stop + 1, step))
    values = tuple(parse_int(p) for p in t.split(",") if p.strip())
    if not values:
        raise ValueError("empty capacity list")
    return values


def _fmt_range(values: tuple[int, ...]) -> str:
    return ",".join(str(v) for v in values)


@dataclass(frozen=True)
class SimulationConfig:
    # simulation
    seed: int = 1
    slots: int = 10_000
    handler_enabled: bool = True
    sweep_capacities: tuple = tuple(range(100, 1001, 100))
    iterations: int = 10
    # devices
    device_count: int = 5
    interfaces_per_device: int = 2
    residual_resource: float = 1e9
    # channel
    m_low: float = 0.1
    m_high: float = 1.0
    omega: float = 1.0
    k: float = 1.0
    reference_gain: float = 1.0
    # queueing
    aggregate_capacity: int = 500
    threshold_fraction: float = 0.75
    initial_ssthresh: int = 16
    failure_m: float = 0.15
    failure_window: int = 3
    # workload
    lam: float = 0.6
    size_min: int = 1 * MB
    size_max: int = 4 * MB
    deadline_min: int = 50
    deadline_max: int = 200
    payload_unit: int = 65536
    consumers: int = 20
    unregistered_fraction: float = 0.05
    # policy
    friend_mode: bool = False
    friend_fraction: float = 1.0
    improvement_basis: str = "with"

    @property
    def interface_count(self) -> int:
        return self.device_count * self.interfaces_per_device

    @property
    def workload(self) -> WorkloadParams:
        return WorkloadParams(
            lam=self.lam,
            size_min=self.size_min,
            size_max=self.size_max,
            deadline_min=self.deadline_min,
            deadline_max=self.deadline_max,
            payload_unit=self.payload_unit,
            consumers=self.consumers,
            unregistered_fraction=self.unregistered_fraction,
        )

    def per_queue_capacities(self, aggregate: int | None = None) -> list[int]:
        """Split the aggregate buffer evenly; the remainder goes to the lowest interface ids."""
        total = self.aggregate_capacity if aggregate is None else aggregate
        n = self.interface_count
        base, extra = divmod(total, n)
        return [base + (1 if i < extra else 0) for i in range(n)]

    def replace(self, **changes: Any) -> "SimulationConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class _Key:
    attr: str
    parse: Callable[[str], Any]
    check: Callable[[Any], bool]
    constraint: str
    fmt: Callable[[Any], str] = field(default=repr)


def _pos(v):
    return v > 0


_KEYS: dict[str, _Key] = {
    "simulation.seed": _Key("seed", parse_int, lambda v: 0 <= v < 2**64, "0 <= seed < 2^64", str),
    "simulation.slots": _Key("slots", parse_int, lambda v: v >= 0, ">= 0", str),
    "simulation.handler_enabled": _Key("handler_enabled", parse_bool, lambda v: True, "boolean", lambda v: str(v).lower()),
    "simulation.sweep_capacities": _Key("sweep_capacities", parse_range, lambda v: all(c >= 1 for c in v), "capacities >= 1", _fmt_range),
    "simulation.iterations": _Key("iterations", parse_int, lambda v: v >= 1, ">= 1", str),
    "devices.count": _Key("device_count", parse_int, lambda v: v >= 1, ">= 1", str),
    "devices.interfaces": _Key("interfaces_per_device", parse_int, lambda v: v >= 1, ">= 1", str),
    "devices.residual_resource": _Key("residual_resource", float, lambda v: v >= 0, ">= 0"),
    "channel.m_low": _Key("m_low", float, _pos, "> 0"),
    "channel.m_high": _Key("m_high", float, _pos, "> 0"),
    "channel.omega": _Key("omega", float, _pos, "> 0"),
    "channel.k": _Key("k", float, _pos, "> 0"),
    "channel.reference_gain": _Key("reference_gain", float, _pos, "> 0"),
    "queueing.aggregate_capacity": _Key("aggregate_capacity", parse_int, lambda v: v >= 1, ">= 1", str),
    "queueing.threshold_fraction": _Key("threshold_fraction", float, lambda v: 0 < v <= 1, "in (0, 1]"),
    "queueing.initial_ssthresh": _Key("initial_ssthresh", parse_int, lambda v: v >= 1, ">= 1", str),
    "queueing.failure_m": _Key("failure_m", float, lambda v: v >= 0, ">= 0"),
    "queueing.failure_window": _Key("failure_window", parse_int, lambda v: v >= 1, ">= 1", str),
    "workload.lambda": _Key("lam", float, _pos, "> 0"),
    "workload.size_min": _Key("size_min", parse_int, _pos, "> 0", str),
    "workload.size_max": _Key("size_max", parse_int, _pos, "> 0", str),
    "workload.deadline_min": _Key("deadline_min", parse_int, lambda v: v >= 1, ">= 1", str),
    "workload.deadline_max": _Key("deadline_max", parse_int, lambda v: v >= 1, ">= 1", str),
    "workload.payload_unit": _Key("payload_unit", parse_int, _pos, "> 0", str),
    "workload.consumers": _Key("consumers", parse_int, lambda v: v >= 1, ">= 1", str),
    "workload.unregistered_fraction": _Key("unregistered_fraction", float, lambda v: 0 <= v <= 1, "in [0, 1]"),
    "policy.friend_mode": _Key("friend_mode", parse_bool, lambda v: True, "boolean", lambda v: str(v).lower()),
    "policy.friend_fraction": _Key("friend_fraction", float, lambda v: 0 <= v <= 1, "in [0, 1]"),
    "policy.improvement_basis": _Key("improvement_basis", str.strip, lambda v: v in ("with", "without"), "one of with|without", str),
}

SECTIONS = ("simulation", "devices", "channel", "queueing", "workload", "policy")
KEYS = tuple(_KEYS)


def _parse_value(key: str, raw: str, where: str) -> tuple[str, Any]:
    spec = _KEYS.get(key)
    if spec is None:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        value = spec.parse(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: cannot parse {key} = {raw.strip()!r}: {exc}") from None
    return spec.attr, value


def validate(config: SimulationConfig) -> SimulationConfig:
    """Check every field constraint plus the cross-field invariants."""
    for key, spec in _KEYS.items():
        value = getattr(config, spec.attr)
        if not spec.check(value):
            raise ConfigError(f"invalid {key} = {value!r}: must be {spec.constraint}")
    if config.m_low > config.m_high:
        raise ConfigError(f"invalid channel.m_low = {config.m_low!r}: must be <= channel.m_high ({config.m_high!r})")
    if config.size_min > config.size_max:
        raise ConfigError(f"invalid workload.size_min = {config.size_min!r}: must be <= workload.size_max")
    if config.deadline_min > config.deadline_max:
        raise ConfigError(f"invalid workload.deadline_min = {config.deadline_min!r}: must be <= workload.deadline_max")
    caps = (config.aggregate_capacity, *config.sweep_capacities)
    if min(caps) < config.interface_count:
        raise ConfigError(
            f"invalid queueing.aggregate_capacity = {min(caps)!r}: must be >= interface count "
            f"({config.interface_count}) so every queue holds at least one packet"
        )
    return config


def parse_config(text: str = "", overrides: Iterable[str] = (), base: SimulationConfig | None = None) -> SimulationConfig:
    """Parse a configuration document, apply ``section.key=value`` overrides, validate."""
    values: dict[str, Any] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {stripped!r}")
            section = stripped[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {stripped!r}")
        name, raw = stripped.split("=", 1)
        name = name.strip()
        if section is None:
            raise ConfigError(f"line {lineno}: key {name!r} appears before any [section]")
        attr, value = _parse_value(f"{section}.{name}", raw, f"line {lineno}")
        values[attr] = value
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected section.key=value")
        key, raw = item.split("=", 1)
        attr, value = _parse_value(key.strip(), raw, f"override {item!r}")
        values[attr] = value
    config = dataclasses.replace(base or SimulationConfig(), **values)
    return validate(config)


def scenario_path(name: str) -> str:
    """Path of a bundled scenario (``high_fading``, ``sub_1mb``)."""
    from importlib.resources import files

    stem = name[:-4] if name.endswith(".ini") else name
    ref = files("mdcsim") / "scenarios" / f"{stem}.ini"
    if not ref.is_file():
        raise ConfigError(f"no such file or bundled scenario: {name!r}")
    return str(ref)


def load_config(path=None, overrides: Iterable[str] = ()) -> SimulationConfig:
    """Read ``path`` (a file, or the name of a bundled scenario) and apply overrides."""
    text = ""
    if path is not None:
        if not os.path.exists(path) and os.sep not in str(path):
            path = scenario_path(str(path))
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_config(text, overrides)


def dump_config(config: SimulationConfig) -> list[str]:
    """Fully resolved ``section.key = value`` lines, in a stable order."""
    return [f"{key} = {spec.fmt(getattr(config, spec.attr))}" for key, spec in _KEYS.items()]


def render_config(config: SimulationConfig) -> str:
    """Serialize ``config`` back into the sectioned file format."""
    out = []
    current = None
    for key, spec in _KEYS.items():
        section, name = key.split(".", 1)
        if section != current:
            if out:
                out.append("")
            out.append(f"[{section}]")
            current = section
        out.append(f"{name} = {spec.fmt(getattr(config, spec.attr))}")
    return "\n".join(out) + "\n"
