"""Scenario files: JSON in, validated :class:`ScenarioConfig` out, and back.

Lengths are strings with an explicit unit (``"5 ft"``, ``"1.524 m"``) and are
stored in meters; times are plain numbers of seconds.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

from .attack import (ATTACK_KINDS, AttackConfig, FloodingConfig, SybilConfig,
                     WormholeConfig)
from .energy import BatteryModel
from .ids import IdsConfig
from .mote import MAX_PAYLOAD
from .radio import PRESETS, EnvironmentProfile, Position, RadioSpec, format_length, parse_length


class ConfigError(ValueError):
    """Invalid scenario; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class GridConfig:
    rows: int = 2
    cols: int = 4
    spacing: float = 5 * 0.3048
    origin: Position = Position(0.0, 0.0)
    count: int | None = None

    @property
    def capacity(self) -> int:
        return self.rows * self.cols

    @property
    def size(self) -> int:
        return self.capacity if self.count is None else self.count

    def positions(self) -> list[tuple[int, Position]]:
        out = []
        for i in range(self.size):
            r, c = divmod(i, self.cols)
            out.append((i + 1, Position(self.origin.x + c * self.spacing,
                                        self.origin.y + r * self.spacing)))
        return out

    def centroid(self) -> Position:
        # Of the full grid, so truncation does not move the anchor.
        return Position(self.origin.x + (self.cols - 1) * self.spacing / 2,
                        self.origin.y + (self.rows - 1) * self.spacing / 2)


@dataclass
class NodeConfig:
    id: int
    position: Position
    claimed_position: Position | None = None


@dataclass
class AnchorConfig:
    id: int | None = None
    position: Position | None = None


@dataclass
class TrafficConfig:
    mode: str = "broadcast"
    period: float = 4.0
    jitter: float = 2.0
    payload: int = 16
    beacon_period: float = 10.0
    beacon_jitter: float = 1.0
    beacon_payload: int = 12
    pairs: dict[int, int] | None = None


@dataclass
class RadioConfig:
    tx_power: float = 0.0
    rx_sensitivity: float = -90.0
    channel_check_rate: int = 8
    channel_check_ticks: int = 20

    def spec(self) -> RadioSpec:
        return RadioSpec(self.tx_power, self.rx_sensitivity)


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    duration: float = 600.0
    seed: int = 1
    grid: GridConfig = field(default_factory=GridConfig)
    nodes: list[NodeConfig] = field(default_factory=list)
    anchor: AnchorConfig = field(default_factory=AnchorConfig)
    border_router: int | None = None
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    environment: EnvironmentProfile = PRESETS["lab"]
    radio: RadioConfig = field(default_factory=RadioConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    ids: IdsConfig = field(default_factory=IdsConfig)
    powertrace_interval: float = 10.0
    battery: BatteryModel = field(default_factory=BatteryModel)

    # -- derived topology ---------------------------------------------------
    def node_table(self) -> list[NodeConfig]:
        """Every physical node except the anchor, in id order."""
        table = [NodeConfig(i, p) for i, p in self.grid.positions()]
        table.extend(self.nodes)
        return sorted(table, key=lambda n: n.id)

    def all_ids(self) -> list[int]:
        return sorted([n.id for n in self.node_table()] + [self.anchor.id])

    def positions(self) -> dict[int, Position]:
        pos = {n.id: n.position for n in self.node_table()}
        pos[self.anchor.id] = self.anchor.position
        return pos

    def central_node(self) -> int:
        c = self.grid.centroid()
        grid = self.grid.positions()
        return min(grid, key=lambda ip: (math.hypot(ip[1].x - c.x, ip[1].y - c.y), ip[0]))[0]

    def unicast_pairs(self) -> dict[int, int]:
        if self.traffic.pairs is not None:
            return dict(self.traffic.pairs)
        ids = [n.id for n in self.node_table()]
        return {a: ids[(i + 1) % len(ids)] for i, a in enumerate(ids)}


# -- parsing helpers ----------------------------------------------------------

def _length(value: Any, path: str) -> float:
    try:
        return parse_length(value)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _position(value: Any, path: str) -> Position:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(path, "position must be a two-element list of lengths")
    try:
        return Position(_length(value[0], f"{path}[0]"), _length(value[1], f"{path}[1]"))
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(path, str(e)) from None


def _number(value: Any, path: str, *, integer: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and not float(value).is_integer():
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return int(value) if integer else float(value)


def _section(data: dict, key: str, path: str) -> dict:
    value = data.get(key, {})
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}{key}", "expected an object")
    return value


def _check_keys(data: dict, allowed: set[str], path: str) -> None:
    for k in data:
        if k not in allowed:
            raise ConfigError(f"{path}{k}", "unknown field")


def _build(cls, data: dict, path: str, spec: dict[str, Any]):
    """Fill dataclass ``cls`` from ``data`` using per-field converters in ``spec``."""
    _check_keys(data, set(spec), path)
    kwargs = {}
    for key, conv in spec.items():
        if key in data:
            kwargs[key] = conv(data[key], f"{path}{key}")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(path.rstrip(".") or "<root>", str(e)) from None


def _opt(conv):
    return lambda v, p: None if v is None else conv(v, p)


def _int(v, p):
    return _number(v, p, integer=True)


def _bool(v, p):
    if not isinstance(v, bool):
        raise ConfigError(p, f"expected true/false, got {v!r}")
    return v


def _str(v, p):
    if not isinstance(v, str):
        raise ConfigError(p, f"expected a string, got {v!r}")
    return v


def _environment(value: Any, path: str) -> EnvironmentProfile:
    if isinstance(value, str):
        if value not in PRESETS:
            raise ConfigError(path, f"unknown environment preset {value!r}; "
                              f"choose from {sorted(PRESETS)}")
        return PRESETS[value]
    if not isinstance(value, dict):
        raise ConfigError(path, "expected a preset name or an environment object")
    base = value.get("preset")
    fields_ = {}
    if base is not None:
        env = _environment(base, f"{path}.preset")
        fields_ = dict(name=env.name, path_loss_exponent=env.path_loss_exponent,
                       reference_loss=env.reference_loss, shadowing_sigma=env.shadowing_sigma,
                       noise_floor=env.noise_floor, retransmission_bias=env.retransmission_bias)
    rest = {k: v for k, v in value.items() if k != "preset"}
    _check_keys(rest, {"name", "path_loss_exponent", "reference_loss", "shadowing_sigma",
                       "noise_floor", "retransmission_bias"}, f"{path}.")
    for k, v in rest.items():
        fields_[k] = _str(v, f"{path}.{k}") if k == "name" else _number(v, f"{path}.{k}")
    fields_.setdefault("name", "custom")
    missing = {"path_loss_exponent", "reference_loss", "shadowing_sigma"} - set(fields_)
    if missing:
        raise ConfigError(f"{path}.{sorted(missing)[0]}", "required for an inline environment")
    try:
        return EnvironmentProfile(**fields_)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _pairs(value: Any, path: str) -> dict[int, int]:
    if not isinstance(value, dict):
        raise ConfigError(path, "expected an object mapping sender id to peer id")
    out = {}
    for k, v in value.items():
        try:
            src = int(k)
        except ValueError:
            raise ConfigError(f"{path}.{k}", "sender id must be an integer") from None
        out[src] = _int(v, f"{path}.{k}")
    return out


def _id_list(value: Any, path: str) -> list[int]:
    if not isinstance(value, list):
        raise ConfigError(path, "expected a list of node ids")
    return [_int(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _position_list(value: Any, path: str) -> list[Position]:
    if not isinstance(value, list):
        raise ConfigError(path, "expected a list of positions")
    return [_position(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _offset(value: Any, path: str) -> tuple[float, float]:
    p = _position(value, path)
    return (p.x, p.y)


def _nodes(value: Any, path: str) -> list[NodeConfig]:
    if not isinstance(value, list):
        raise ConfigError(path, "expected a list of nodes")
    out = []
    for i, item in enumerate(value):
        p = f"{path}[{i}]."
        if not isinstance(item, dict):
            raise ConfigError(p.rstrip("."), "expected an object")
        for req in ("id", "position"):
            if req not in item:
                raise ConfigError(f"{p}{req}", "required")
        out.append(_build(NodeConfig, item, p, {
            "id": _int, "position": _position, "claimed_position": _opt(_position)}))
    return out


def _attack(data: dict, path: str) -> AttackConfig:
    _check_keys(data, {"kind", "attackers", "wormhole", "sybil", "flooding"}, path)
    kind = _str(data.get("kind", "none"), f"{path}kind")
    if kind not in ATTACK_KINDS:
        raise ConfigError(f"{path}kind", f"unknown attack kind {kind!r}; choose from {ATTACK_KINDS}")
    wormhole = _build(WormholeConfig, _section(data, "wormhole", path), f"{path}wormhole.", {
        "endpoint_a": _opt(_int), "endpoint_b": _opt(_int)})
    sybil = _build(SybilConfig, _section(data, "sybil", path), f"{path}sybil.", {
        "fake_count": _int, "fake_ids": _opt(_id_list),
        "forged_positions": _opt(_position_list), "forge_margin": _length})
    flooding = _build(FloodingConfig, _section(data, "flooding", path), f"{path}flooding.", {
        "period": _number, "payload": _int, "spoof_offset": _offset})
    attackers = _id_list(data["attackers"], f"{path}attackers") if data.get("attackers") else []
    return AttackConfig(kind, attackers, wormhole, sybil, flooding)


def from_dict(data: dict) -> ScenarioConfig:
    """Parse and validate a scenario document."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "scenario must be a JSON object")
    _check_keys(data, {"name", "duration", "seed", "grid", "nodes", "anchor", "border_router",
                       "traffic", "environment", "radio", "attack", "ids",
                       "powertrace_interval", "battery"}, "")
    cfg = ScenarioConfig()
    if "name" in data:
        cfg.name = _str(data["name"], "name")
    if "duration" in data:
        cfg.duration = _number(data["duration"], "duration")
    if "seed" in data:
        cfg.seed = _int(data["seed"], "seed")
    if "powertrace_interval" in data:
        cfg.powertrace_interval = _number(data["powertrace_interval"], "powertrace_interval")
    cfg.grid = _build(GridConfig, _section(data, "grid", ""), "grid.", {
        "rows": _int, "cols": _int, "spacing": _length, "origin": _position,
        "count": _opt(_int)})
    cfg.nodes = _nodes(data.get("nodes") or [], "nodes")
    cfg.anchor = _build(AnchorConfig, _section(data, "anchor", ""), "anchor.", {
        "id": _opt(_int), "position": _opt(_position)})
    if data.get("border_router") is not None:
        cfg.border_router = _int(data["border_router"], "border_router")
    cfg.traffic = _build(TrafficConfig, _section(data, "traffic", ""), "traffic.", {
        "mode": _str, "period": _number, "jitter": _number, "payload": _int,
        "beacon_period": _number, "beacon_jitter": _number, "beacon_payload": _int,
        "pairs": _opt(_pairs)})
    if "environment" in data:
        cfg.environment = _environment(data["environment"], "environment")
    cfg.radio = _build(RadioConfig, _section(data, "radio", ""), "radio.", {
        "tx_power": _number, "rx_sensitivity": _number, "channel_check_rate": _int,
        "channel_check_ticks": _int})
    cfg.attack = _attack(_section(data, "attack", ""), "attack.")
    ids_data = dict(_section(data, "ids", ""))
    cfg.ids = _build(IdsConfig, ids_data, "ids.", {
        "enabled": _bool, "epsilon": _length, "rounds": _int, "threshold": _number,
        "round_period": _number, "monitor_6br": _bool, "cpu_cost_per_round": _int,
        "rx_listen_per_round": _int})
    cfg.battery = _build(BatteryModel, _section(data, "battery", ""), "battery.", {
        "capacity_mah": _number, "voltage": _number})
    return validate(cfg)


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check cross-field invariants and fill topology-dependent defaults."""
    cfg = copy.deepcopy(cfg)
    if not cfg.duration > 0:
        raise ConfigError("duration", "must be positive")
    if not cfg.powertrace_interval > 0:
        raise ConfigError("powertrace_interval", "must be positive")
    if cfg.duration < 2 * cfg.powertrace_interval:
        raise ConfigError("duration", "must be at least twice powertrace_interval")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    g = cfg.grid
    if g.rows < 1 or g.cols < 1:
        raise ConfigError("grid", "rows and cols must be >= 1")
    if not g.spacing > 0:
        raise ConfigError("grid.spacing", "must be positive")
    if g.count is not None and not 0 <= g.count <= g.capacity:
        raise ConfigError("grid.count", f"must be between 0 and grid capacity {g.capacity}")
    if g.size < 2:
        raise ConfigError("grid", "need at least two grid nodes")
    if cfg.anchor.id is None:
        cfg.anchor.id = g.capacity + 1
    if cfg.anchor.position is None:
        cfg.anchor.position = g.centroid()
    table = cfg.node_table()
    ids = [n.id for n in table] + [cfg.anchor.id]
    if len(set(ids)) != len(ids):
        raise ConfigError("nodes", "node ids must be unique (grid ids are 1..rows*cols)")
    positions = [n.position for n in table] + [cfg.anchor.position]
    if len(set(positions)) != len(positions):
        raise ConfigError("nodes", "two nodes share a position")
    known = set(ids)
    if cfg.border_router is not None and cfg.border_router not in known:
        raise ConfigError("border_router", f"unknown node id {cfg.border_router}")

    t = cfg.traffic
    if t.mode not in ("broadcast", "unicast"):
        raise ConfigError("traffic.mode", f"must be 'broadcast' or 'unicast', got {t.mode!r}")
    for key in ("period", "beacon_period"):
        if not getattr(t, key) > 0:
            raise ConfigError(f"traffic.{key}", "must be positive")
    for key in ("jitter", "beacon_jitter"):
        if getattr(t, key) < 0:
            raise ConfigError(f"traffic.{key}", "must be >= 0")
    for key in ("payload", "beacon_payload"):
        if not 1 <= getattr(t, key) <= MAX_PAYLOAD:
            raise ConfigError(f"traffic.{key}", f"must be in [1, {MAX_PAYLOAD}]")
    if t.pairs is not None:
        app_ids = {n.id for n in table}
        for src, dst in sorted(t.pairs.items()):
            if src not in app_ids:
                raise ConfigError(f"traffic.pairs.{src}", "unknown sender id")
            if dst not in known:
                raise ConfigError(f"traffic.pairs.{src}", f"unknown peer id {dst}")
            if dst == src:
                raise ConfigError(f"traffic.pairs.{src}", "a node cannot be its own peer")

    if cfg.radio.channel_check_rate < 0 or cfg.radio.channel_check_ticks < 0:
        raise ConfigError("radio", "channel check parameters must be >= 0")
    try:
        cfg.radio.spec()
    except ValueError as e:
        raise ConfigError("radio", str(e)) from None

    _validate_attack(cfg, known)
    return cfg


def _validate_attack(cfg: ScenarioConfig, known: set[int]) -> None:
    a = cfg.attack
    if a.kind == "none":
        return
    if a.kind == "wormhole":
        w = a.wormhole
        if w.endpoint_a is None or w.endpoint_b is None:
            raise ConfigError("attack.wormhole", "a wormhole needs exactly two endpoints")
        if w.endpoint_a == w.endpoint_b:
            raise ConfigError("attack.wormhole", "endpoints must be distinct")
        for key in ("endpoint_a", "endpoint_b"):
            if getattr(w, key) not in known:
                raise ConfigError(f"attack.wormhole.{key}", f"unknown node id {getattr(w, key)}")
        if not a.attackers:
            a.attackers = [w.endpoint_a, w.endpoint_b]
    elif not a.attackers:
        a.attackers = [cfg.central_node()]
    for i, nid in enumerate(a.attackers):
        if nid not in known:
            raise ConfigError(f"attack.attackers[{i}]", f"unknown node id {nid}")
        if nid == cfg.anchor.id:
            raise ConfigError(f"attack.attackers[{i}]", "the anchor cannot be an attacker")
    if a.kind == "sybil":
        s = a.sybil
        if s.fake_count < 1:
            raise ConfigError("attack.sybil.fake_count", "must be >= 1")
        if s.forge_margin < 0:
            raise ConfigError("attack.sybil.forge_margin", "must be >= 0")
        if s.fake_ids is None:
            start = max(known) + 1
            s.fake_ids = list(range(start, start + s.fake_count))
        if len(s.fake_ids) != s.fake_count:
            raise ConfigError("attack.sybil.fake_ids", "length must equal fake_count")
        if len(set(s.fake_ids)) != len(s.fake_ids):
            raise ConfigError("attack.sybil.fake_ids", "fake ids must be unique")
        clash = sorted(set(s.fake_ids) & known)
        if clash:
            raise ConfigError("attack.sybil.fake_ids", f"collide with real node ids {clash}")
        if s.forged_positions is not None and len(s.forged_positions) != s.fake_count:
            raise ConfigError("attack.sybil.forged_positions", "length must equal fake_count")
    if a.kind == "flooding":
        f = a.flooding
        if not f.period > 0:
            raise ConfigError("attack.flooding.period", "must be positive")
        if not 1 <= f.payload <= MAX_PAYLOAD:
            raise ConfigError("attack.flooding.payload", f"must be in [1, {MAX_PAYLOAD}]")


# -- serialization ------------------------------------------------------------

def _pos_out(p: Position) -> list[str]:
    return [format_length(p.x), format_length(p.y)]


def to_dict(cfg: ScenarioConfig) -> dict:
    env = cfg.environment
    if PRESETS.get(env.name) == env:
        env_out: Any = env.name
    else:
        env_out = dict(name=env.name, path_loss_exponent=env.path_loss_exponent,
                       reference_loss=env.reference_loss, shadowing_sigma=env.shadowing_sigma,
                       noise_floor=env.noise_floor, retransmission_bias=env.retransmission_bias)
    a = cfg.attack
    t = cfg.traffic
    grid = {"rows": cfg.grid.rows, "cols": cfg.grid.cols,
            "spacing": format_length(cfg.grid.spacing), "origin": _pos_out(cfg.grid.origin)}
    if cfg.grid.count is not None:
        grid["count"] = cfg.grid.count
    nodes = []
    for n in cfg.nodes:
        item: dict[str, Any] = {"id": n.id, "position": _pos_out(n.position)}
        if n.claimed_position is not None:
            item["claimed_position"] = _pos_out(n.claimed_position)
        nodes.append(item)
    return {
        "name": cfg.name,
        "duration": cfg.duration,
        "seed": cfg.seed,
        "grid": grid,
        "nodes": nodes,
        "anchor": {"id": cfg.anchor.id,
                   "position": None if cfg.anchor.position is None else _pos_out(cfg.anchor.position)},
        "border_router": cfg.border_router,
        "traffic": {"mode": t.mode, "period": t.period, "jitter": t.jitter, "payload": t.payload,
                    "beacon_period": t.beacon_period, "beacon_jitter": t.beacon_jitter,
                    "beacon_payload": t.beacon_payload,
                    "pairs": None if t.pairs is None else {str(k): v for k, v in sorted(t.pairs.items())}},
        "environment": env_out,
        "radio": {"tx_power": cfg.radio.tx_power, "rx_sensitivity": cfg.radio.rx_sensitivity,
                  "channel_check_rate": cfg.radio.channel_check_rate,
                  "channel_check_ticks": cfg.radio.channel_check_ticks},
        "attack": {
            "kind": a.kind,
            "attackers": list(a.attackers),
            "wormhole": {"endpoint_a": a.wormhole.endpoint_a, "endpoint_b": a.wormhole.endpoint_b},
            "sybil": {"fake_count": a.sybil.fake_count, "fake_ids": a.sybil.fake_ids,
                      "forged_positions": None if a.sybil.forged_positions is None
                      else [_pos_out(p) for p in a.sybil.forged_positions],
                      "forge_margin": format_length(a.sybil.forge_margin)},
            "flooding": {"period": a.flooding.period, "payload": a.flooding.payload,
                         "spoof_offset": [format_length(v) for v in a.flooding.spoof_offset]},
        },
        "ids": {"enabled": cfg.ids.enabled, "epsilon": format_length(cfg.ids.epsilon),
                "rounds": cfg.ids.rounds, "threshold": cfg.ids.threshold,
                "round_period": cfg.ids.round_period, "monitor_6br": cfg.ids.monitor_6br,
                "cpu_cost_per_round": cfg.ids.cpu_cost_per_round,
                "rx_listen_per_round": cfg.ids.rx_listen_per_round},
        "powertrace_interval": cfg.powertrace_interval,
        "battery": {"capacity_mah": cfg.battery.capacity_mah, "voltage": cfg.battery.voltage},
    }


def dumps(cfg: ScenarioConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2) + "\n"


def bundled_scenarios() -> list[str]:
    root = resources.files("motesim") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load a scenario file, or a bundled scenario by name (e.g. ``"paper-grid"``)."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    elif str(path) in bundled_scenarios():
        text = (resources.files("motesim") / "scenarios" / f"{path}.json").read_text()
    else:
        raise ConfigError("<file>", f"no such scenario file or bundled scenario: {path}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"JSON parse error at line {e.lineno} column {e.colno}: {e.msg}") from None
    return from_dict(data)


def with_overrides(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    """Shallow-replace top-level fields and re-validate."""
    return validate(replace(copy.deepcopy(cfg), **changes))
