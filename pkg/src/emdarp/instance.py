"""Domain types, instance file schema, and travel-cost derivation.

An instance is a declarative description of one routing problem: customer
requests, vehicle agents, charging stations, final depots, the cost model,
the battery model, and the variant configuration.  Everything downstream
(graph expansion, model building, solving, validation) consumes the frozen
:class:`Instance` produced here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace


class InstanceError(ValueError):
    """Base error for malformed or invalid instance documents."""

    def __init__(self, path: str, message: str):
        self.field_path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class ParseError(InstanceError):
    """The document is not syntactically well-formed."""


class ValidationError(InstanceError):
    """The document parses but violates an instance invariant."""


TW_PICKUP = "pickup"
TW_DELIVERY = "delivery"

TIME_UNIT_SECONDS = {"seconds": 1.0, "minutes": 60.0, "hours": 3600.0}


@dataclass(frozen=True)
class Request:
    id: int
    pickup_pos: tuple[float, float] | None
    delivery_pos: tuple[float, float] | None
    passengers: int
    equipment: int
    service_time: float
    tw_kind: str  # TW_PICKUP or TW_DELIVERY
    tw_lo: float
    tw_hi: float
    priority: float = 1.0
    force_accept: bool = False


@dataclass(frozen=True)
class Agent:
    id: int
    start_pos: tuple[float, float] | None
    initial_delay: float
    cap_passengers: int
    cap_equipment: int
    conversion: float
    max_duration: float
    station_service_time: float
    soc_min: float
    soc_init: float
    soc_target: float
    terminal_hub: int | None = None

    @property
    def combined_cap(self) -> float:
        """Seat budget with every equipment slot converted to seats."""
        return self.cap_passengers + self.conversion * self.cap_equipment


@dataclass(frozen=True)
class BatteryModel:
    alpha0: float
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    beta3: float


@dataclass(frozen=True)
class Station:
    id: int
    pos: tuple[float, float] | None
    earliest_available: float = 0.0


@dataclass(frozen=True)
class ObjectiveWeights:
    epsilon: float = 1e-3
    zeta: float = 1.0
    eta: float = 1e4
    big_m_override: float | None = None


@dataclass(frozen=True)
class Instance:
    requests: tuple[Request, ...]
    agents: tuple[Agent, ...]
    stations: tuple[Station, ...]
    final_depots: tuple[tuple[float, float] | None, ...]
    duplicate_visits: int
    cost_mode: str  # "euclidean" | "matrix"
    cost_matrix: tuple[tuple[float, ...], ...] | None
    battery: BatteryModel
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    selective: bool = True
    open_vrp: bool = False
    time_unit: str = "minutes"
    open_vrp_soc_to_hub: bool = True
    integer_loads: bool = True

    @property
    def n_requests(self) -> int:
        return len(self.requests)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_stations(self) -> int:
        return len(self.stations)


# --- base node bookkeeping -------------------------------------------------
#
# Every positioned entity owns one "base" node.  The expanded routing graph
# later clones station nodes per allowed visit; clones share the base node of
# their station.  Base ordering (frozen, documented in the README):
# agent starts, pickups, deliveries, stations, final depots.


def base_node_count(inst: Instance) -> int:
    return inst.n_agents + 2 * inst.n_requests + inst.n_stations + len(inst.final_depots)


def base_positions(inst: Instance) -> list[tuple[float, float] | None]:
    pos: list[tuple[float, float] | None] = [a.start_pos for a in inst.agents]
    pos += [r.pickup_pos for r in inst.requests]
    pos += [r.delivery_pos for r in inst.requests]
    pos += [s.pos for s in inst.stations]
    pos += list(inst.final_depots)
    return pos


def derive_costs(inst: Instance):
    """Return the base-node travel-time function ``(i, j) -> time``.

    Euclidean mode: straight-line distance at 1 m/s, converted to the
    instance time unit.  Matrix mode: the matrix entry verbatim.  The
    diagonal is always zero.
    """
    n = base_node_count(inst)
    if inst.cost_mode == "matrix":
        matrix = inst.cost_matrix
        if matrix is None or len(matrix) != n or any(len(row) != n for row in matrix):
            got = 0 if matrix is None else len(matrix)
            raise ValidationError(
                "costs.matrix", f"matrix must be {n}x{n} (base node count), got {got} rows"
            )

        def cost(i: int, j: int) -> float:
            return 0.0 if i == j else matrix[i][j]

        return cost

    positions = base_positions(inst)
    for idx, p in enumerate(positions):
        if p is None:
            raise ValidationError(
                f"base node {idx}", "missing coordinates (required in euclidean cost mode)"
            )
    scale = TIME_UNIT_SECONDS[inst.time_unit]

    def cost(i: int, j: int) -> float:
        if i == j:
            return 0.0
        (x0, y0), (x1, y1) = positions[i], positions[j]
        return math.hypot(x1 - x0, y1 - y0) / scale

    return cost


# --- invariant validation ----------------------------------------------------


def validate_instance(inst: Instance) -> None:
    """Check every instance invariant; raise ValidationError naming the field."""
    for idx, r in enumerate(inst.requests):
        where = f"requests[{idx}]"
        if r.passengers < 1:
            raise ValidationError(f"{where}.passengers", "must be >= 1")
        if r.equipment < 0:
            raise ValidationError(f"{where}.equipment", "must be >= 0")
        if r.service_time < 0:
            raise ValidationError(f"{where}.service_time", "must be >= 0")
        if r.tw_kind not in (TW_PICKUP, TW_DELIVERY):
            raise ValidationError(f"{where}.tw_kind", f"must be pickup or delivery, got {r.tw_kind!r}")
        if not r.tw_hi > r.tw_lo:
            raise ValidationError(f"{where}.tw_hi", f"time window upper bound {r.tw_hi} must exceed lower bound {r.tw_lo}")
        if r.tw_lo < 0:
            raise ValidationError(f"{where}.tw_lo", "must be >= 0")
        if r.priority < 1:
            raise ValidationError(f"{where}.priority", "must be >= 1")

    for idx, a in enumerate(inst.agents):
        where = f"agents[{idx}]"
        if a.initial_delay < 0:
            raise ValidationError(f"{where}.initial_delay", "must be >= 0")
        if a.cap_passengers < 1:
            raise ValidationError(f"{where}.cap_passengers", "must be >= 1")
        if a.cap_equipment < 1:
            raise ValidationError(f"{where}.cap_equipment", "must be >= 1")
        if a.conversion < 1:
            raise ValidationError(f"{where}.conversion", "must be >= 1")
        if a.max_duration < 0:
            raise ValidationError(f"{where}.max_duration", "must be >= 0")
        if a.station_service_time < 0:
            raise ValidationError(f"{where}.station_service_time", "must be >= 0")
        if not 0 < a.soc_min <= 1:
            raise ValidationError(f"{where}.soc_min", "must be in (0, 1]")
        if not a.soc_min <= a.soc_init <= 1:
            raise ValidationError(f"{where}.soc_init", f"must be in [soc_min={a.soc_min}, 1]")
        if not a.soc_min <= a.soc_target <= 1:
            raise ValidationError(f"{where}.soc_target", f"must be in [soc_min={a.soc_min}, 1]")
        if not math.isfinite(a.combined_cap):
            raise ValidationError(f"{where}.conversion", "combined capacity bound must be finite")
        if a.terminal_hub is not None and not 0 <= a.terminal_hub < len(inst.final_depots):
            raise ValidationError(f"{where}.terminal_hub", f"depot index {a.terminal_hub} out of range")

    b = inst.battery
    for name in ("alpha0", "alpha1", "alpha2", "beta1", "beta2", "beta3"):
        if getattr(b, name) <= 0:
            raise ValidationError(f"battery.{name}", "must be strictly positive")
    if not b.beta3 < b.beta2 < b.beta1:
        raise ValidationError("battery", "charging rates must strictly decrease (beta1 > beta2 > beta3)")

    for idx, s in enumerate(inst.stations):
        if s.earliest_available < 0:
            raise ValidationError(f"stations[{idx}].earliest_available", "must be >= 0")

    if inst.duplicate_visits < 0:
        raise ValidationError("config.duplicate_visits", "must be >= 0")
    if not inst.open_vrp and not inst.final_depots:
        raise ValidationError("depots", "closed-VRP instances need at least one final depot")

    w = inst.weights
    if not 0 < w.epsilon < w.zeta < w.eta:
        raise ValidationError("config.weights", f"need 0 < epsilon < zeta < eta, got ({w.epsilon}, {w.zeta}, {w.eta})")
    if w.big_m_override is not None and w.big_m_override <= 0:
        raise ValidationError("config.weights.big_m", "must be positive")

    if inst.time_unit not in TIME_UNIT_SECONDS:
        raise ValidationError("meta.time_unit", f"unknown time unit {inst.time_unit!r}")

    if inst.cost_mode == "matrix":
        n = base_node_count(inst)
        m = inst.cost_matrix
        if m is None or len(m) != n or any(len(row) != n for row in m):
            got = 0 if m is None else len(m)
            raise ValidationError("costs.matrix", f"matrix must be {n}x{n} (base node count), got {got} rows")
        for i in range(n):
            for j in range(n):
                if i == j and m[i][j] != 0:
                    raise ValidationError(f"costs.matrix[{i}][{j}]", "diagonal entries must be 0")
                if i != j and not m[i][j] > 0:
                    raise ValidationError(f"costs.matrix[{i}][{j}]", "off-diagonal entries must be > 0")
    elif inst.cost_mode == "euclidean":
        derive_costs(inst)  # raises on missing coordinates
    else:
        raise ValidationError("costs.mode", f"must be 'euclidean' or 'matrix', got {inst.cost_mode!r}")


# --- document schema ---------------------------------------------------------

_TOP_KEYS = {"meta", "requests", "agents", "stations", "depots", "costs", "battery", "config"}
_META_KEYS = {"time_unit"}
_REQUEST_KEYS = {
    "id", "pickup", "delivery", "passengers", "equipment", "service_time",
    "tw_kind", "tw_lo", "tw_hi", "priority", "force_accept",
}
_AGENT_KEYS = {
    "id", "start", "initial_delay", "cap_passengers", "cap_equipment", "conversion",
    "max_duration", "station_service_time", "soc_min", "soc_init", "soc_target",
    "terminal_hub",
}
_STATION_KEYS = {"id", "pos", "earliest_available"}
_COSTS_KEYS = {"mode", "matrix"}
_BATTERY_KEYS = {"alpha0", "alpha1", "alpha2", "beta1", "beta2", "beta3"}
_CONFIG_KEYS = {
    "duplicate_visits", "selective", "open_vrp", "weights",
    "open_vrp_soc_to_hub", "integer_loads",
}
_WEIGHT_KEYS = {"epsilon", "zeta", "eta", "big_m"}


def _check_keys(doc: dict, allowed: set, where: str, required: set | None = None) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ParseError(where, f"unknown keys: {sorted(unknown)}")
    if required:
        missing = required - set(doc)
        if missing:
            raise ParseError(where, f"missing keys: {sorted(missing)}")


def _point(value, where: str) -> tuple[float, float] | None:
    if value is None:
        return None
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ParseError(where, f"expected [x, y] coordinates, got {value!r}")
    return (float(value[0]), float(value[1]))


def instance_from_dict(doc: dict) -> Instance:
    """Build and validate an Instance from a schema document."""
    if not isinstance(doc, dict):
        raise ParseError("$", "top-level document must be an object")
    _check_keys(doc, _TOP_KEYS, "$", required={"requests", "agents", "battery", "config"})

    meta = doc.get("meta", {})
    _check_keys(meta, _META_KEYS, "meta")
    time_unit = meta.get("time_unit", "minutes")

    requests = []
    for idx, rd in enumerate(doc.get("requests", [])):
        where = f"requests[{idx}]"
        _check_keys(rd, _REQUEST_KEYS, where,
                    required={"passengers", "tw_kind", "tw_lo", "tw_hi"})
        requests.append(Request(
            id=int(rd.get("id", idx)),
            pickup_pos=_point(rd.get("pickup"), f"{where}.pickup"),
            delivery_pos=_point(rd.get("delivery"), f"{where}.delivery"),
            passengers=int(rd["passengers"]),
            equipment=int(rd.get("equipment", 0)),
            service_time=float(rd.get("service_time", 0.0)),
            tw_kind=str(rd["tw_kind"]),
            tw_lo=float(rd["tw_lo"]),
            tw_hi=float(rd["tw_hi"]),
            priority=float(rd.get("priority", 1.0)),
            force_accept=bool(rd.get("force_accept", False)),
        ))

    agents = []
    for idx, ad in enumerate(doc.get("agents", [])):
        where = f"agents[{idx}]"
        _check_keys(ad, _AGENT_KEYS, where, required={"cap_passengers", "cap_equipment"})
        agents.append(Agent(
            id=int(ad.get("id", idx)),
            start_pos=_point(ad.get("start"), f"{where}.start"),
            initial_delay=float(ad.get("initial_delay", 0.0)),
            cap_passengers=int(ad["cap_passengers"]),
            cap_equipment=int(ad["cap_equipment"]),
            conversion=float(ad.get("conversion", 1.0)),
            max_duration=float(ad.get("max_duration", math.inf)),
            station_service_time=float(ad.get("station_service_time", 0.0)),
            soc_min=float(ad.get("soc_min", 0.25)),
            soc_init=float(ad.get("soc_init", 1.0)),
            soc_target=float(ad.get("soc_target", 0.85)),
            terminal_hub=(None if ad.get("terminal_hub") is None else int(ad["terminal_hub"])),
        ))

    stations = []
    for idx, sd in enumerate(doc.get("stations", [])):
        where = f"stations[{idx}]"
        _check_keys(sd, _STATION_KEYS, where)
        stations.append(Station(
            id=int(sd.get("id", idx)),
            pos=_point(sd.get("pos"), f"{where}.pos"),
            earliest_available=float(sd.get("earliest_available", 0.0)),
        ))

    depots = tuple(_point(p, f"depots[{i}]") for i, p in enumerate(doc.get("depots", [])))

    costs = doc.get("costs", {"mode": "euclidean"})
    _check_keys(costs, _COSTS_KEYS, "costs", required={"mode"})
    matrix = None
    if costs.get("matrix") is not None:
        matrix = tuple(tuple(float(v) for v in row) for row in costs["matrix"])

    bat = doc["battery"]
    _check_keys(bat, _BATTERY_KEYS, "battery", required=_BATTERY_KEYS)
    battery = BatteryModel(**{k: float(bat[k]) for k in _BATTERY_KEYS})

    cfg = doc["config"]
    _check_keys(cfg, _CONFIG_KEYS, "config", required={"duplicate_visits"})
    wd = cfg.get("weights", {})
    _check_keys(wd, _WEIGHT_KEYS, "config.weights")
    weights = ObjectiveWeights(
        epsilon=float(wd.get("epsilon", 1e-3)),
        zeta=float(wd.get("zeta", 1.0)),
        eta=float(wd.get("eta", 1e4)),
        big_m_override=(None if wd.get("big_m") is None else float(wd["big_m"])),
    )

    inst = Instance(
        requests=tuple(requests),
        agents=tuple(agents),
        stations=tuple(stations),
        final_depots=depots,
        duplicate_visits=int(cfg["duplicate_visits"]),
        cost_mode=str(costs["mode"]),
        cost_matrix=matrix,
        battery=battery,
        weights=weights,
        selective=bool(cfg.get("selective", True)),
        open_vrp=bool(cfg.get("open_vrp", False)),
        time_unit=str(time_unit),
        open_vrp_soc_to_hub=bool(cfg.get("open_vrp_soc_to_hub", True)),
        integer_loads=bool(cfg.get("integer_loads", True)),
    )
    validate_instance(inst)
    return inst


def instance_to_dict(inst: Instance) -> dict:
    """Inverse of :func:`instance_from_dict` (stable key order)."""
    doc = {
        "meta": {"time_unit": inst.time_unit},
        "requests": [
            {
                "id": r.id,
                "pickup": list(r.pickup_pos) if r.pickup_pos else None,
                "delivery": list(r.delivery_pos) if r.delivery_pos else None,
                "passengers": r.passengers,
                "equipment": r.equipment,
                "service_time": r.service_time,
                "tw_kind": r.tw_kind,
                "tw_lo": r.tw_lo,
                "tw_hi": r.tw_hi,
                "priority": r.priority,
                "force_accept": r.force_accept,
            }
            for r in inst.requests
        ],
        "agents": [
            {
                "id": a.id,
                "start": list(a.start_pos) if a.start_pos else None,
                "initial_delay": a.initial_delay,
                "cap_passengers": a.cap_passengers,
                "cap_equipment": a.cap_equipment,
                "conversion": a.conversion,
                "max_duration": a.max_duration,
                "station_service_time": a.station_service_time,
                "soc_min": a.soc_min,
                "soc_init": a.soc_init,
                "soc_target": a.soc_target,
                "terminal_hub": a.terminal_hub,
            }
            for a in inst.agents
        ],
        "stations": [
            {"id": s.id, "pos": list(s.pos) if s.pos else None, "earliest_available": s.earliest_available}
            for s in inst.stations
        ],
        "depots": [list(p) if p else None for p in inst.final_depots],
        "costs": {"mode": inst.cost_mode},
        "battery": {
            "alpha0": inst.battery.alpha0,
            "alpha1": inst.battery.alpha1,
            "alpha2": inst.battery.alpha2,
            "beta1": inst.battery.beta1,
            "beta2": inst.battery.beta2,
            "beta3": inst.battery.beta3,
        },
        "config": {
            "duplicate_visits": inst.duplicate_visits,
            "selective": inst.selective,
            "open_vrp": inst.open_vrp,
            "open_vrp_soc_to_hub": inst.open_vrp_soc_to_hub,
            "integer_loads": inst.integer_loads,
            "weights": {
                "epsilon": inst.weights.epsilon,
                "zeta": inst.weights.zeta,
                "eta": inst.weights.eta,
                "big_m": inst.weights.big_m_override,
            },
        },
    }
    if inst.cost_mode == "matrix":
        doc["costs"]["matrix"] = [list(row) for row in inst.cost_matrix]
    return doc


def load_instance(path) -> Instance:
    """Load, parse, and validate an instance document from *path*."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), f"malformed document: {exc}") from exc
    return instance_from_dict(doc)


def save_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2)
        fh.write("\n")
