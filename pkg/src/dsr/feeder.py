"""Multi-phase distribution feeder data model.

Feeders are read from a JSON document (see ``parse_feeder``). Electrical
network quantities (voltages, impedances, thermal limits) are per-unit;
demand, generator ratings and battery quantities are in kW / kvar / kWh and
are converted to per-unit on the model's ``base_kva`` where needed.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Sequence


class Phase(enum.Enum):
    a = "a"
    b = "b"
    c = "c"

    @property
    def ordinal(self) -> int:
        return _ORDINAL[self]

    def __lt__(self, other: "Phase") -> bool:
        return self.ordinal < other.ordinal


_ORDINAL = {Phase.a: 0, Phase.b: 1, Phase.c: 2}


class FeederError(ValueError):
    """Base class for feeder input errors."""


class FeederSyntaxError(FeederError):
    def __init__(self, msg: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(msg + where)


class DanglingReferenceError(FeederError):
    def __init__(self, kind: str, ref: str, owner: str):
        self.ref = ref
        super().__init__(f"{owner} references unknown {kind} {ref!r}")


class DuplicateIdError(FeederError):
    def __init__(self, kind: str, ident: str):
        self.ident = ident
        super().__init__(f"duplicate {kind} id {ident!r}")


class DimensionError(FeederError):
    pass


@dataclass(frozen=True)
class Bus:
    id: str
    phases: tuple[Phase, ...]
    vmin: tuple[float, ...]
    vmax: tuple[float, ...]

    def vbounds(self, phase: Phase) -> tuple[float, float]:
        i = self.phases.index(phase)
        return self.vmin[i], self.vmax[i]


@dataclass(frozen=True)
class LineParams:
    id: str
    from_bus: str
    to_bus: str
    phases: tuple[Phase, ...]
    # row-major, ordered by ``phases``
    impedance: tuple[tuple[complex, ...], ...]
    thermal_limit: tuple[float, ...]
    is_switch: bool = False
    dispatchable: bool = False
    initial_state: str = "closed"
    angle_limits: tuple[float, float] = (-math.pi / 6, math.pi / 6)

    @property
    def initially_closed(self) -> bool:
        return self.initial_state == "closed"

    def z(self, phi: Phase, psi: Phase) -> complex:
        return self.impedance[self.phases.index(phi)][self.phases.index(psi)]


@dataclass(frozen=True)
class LoadSpec:
    id: str
    bus: str
    phases: tuple[Phase, ...]
    # one profile per phase; a length-1 profile is broadcast over the horizon
    demand: tuple[tuple[complex, ...], ...]
    priority: float = 1.0


@dataclass(frozen=True)
class DgSpec:
    id: str
    bus: str
    phases: tuple[Phase, ...]
    # per-phase (p + jq) box bounds in kW / kvar
    smin: tuple[complex, ...]
    smax: tuple[complex, ...]
    grid_forming_capable: bool = False
    kind: str = "generator"


@dataclass(frozen=True)
class BatterySpec:
    dg_id: str
    energy_cap: float
    initial_energy: float
    charge_rate_bounds: tuple[float, float]
    loss_segments: tuple[tuple[float, float], ...] = ((1.0, 0.0),)


@dataclass(frozen=True)
class Horizon:
    n_steps: int = 1
    dt: float = 1.0


@dataclass(frozen=True)
class FeederModel:
    """Immutable feeder. Lookup tables are derived on construction."""

    buses: tuple[Bus, ...]
    lines: tuple[LineParams, ...] = ()
    loads: tuple[LoadSpec, ...] = ()
    dgs: tuple[DgSpec, ...] = ()
    batteries: tuple[BatterySpec, ...] = ()
    horizon: Horizon = Horizon()
    base_kva: float = 1000.0
    base_kv: float = 1.0
    name: str = ""

    bus_by_id: Mapping[str, Bus] = field(init=False, repr=False, compare=False)
    line_by_id: Mapping[str, LineParams] = field(init=False, repr=False, compare=False)
    load_by_id: Mapping[str, LoadSpec] = field(init=False, repr=False, compare=False)
    dg_by_id: Mapping[str, DgSpec] = field(init=False, repr=False, compare=False)
    battery_by_dg: Mapping[str, BatterySpec] = field(init=False, repr=False, compare=False)
    lines_out: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    lines_in: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    dgs_at: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    loads_at: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        def index(items, key="id"):
            return MappingProxyType({getattr(x, key): x for x in items})

        object.__setattr__(self, "bus_by_id", index(self.buses))
        object.__setattr__(self, "line_by_id", index(self.lines))
        object.__setattr__(self, "load_by_id", index(self.loads))
        object.__setattr__(self, "dg_by_id", index(self.dgs))
        object.__setattr__(self, "battery_by_dg", index(self.batteries, "dg_id"))

        out: dict[str, list[str]] = {b.id: [] for b in self.buses}
        inn: dict[str, list[str]] = {b.id: [] for b in self.buses}
        for ln in self.lines:
            out.setdefault(ln.from_bus, []).append(ln.id)
            inn.setdefault(ln.to_bus, []).append(ln.id)
        dgs: dict[str, list[str]] = {b.id: [] for b in self.buses}
        for d in self.dgs:
            dgs.setdefault(d.bus, []).append(d.id)
        lds: dict[str, list[str]] = {b.id: [] for b in self.buses}
        for ld in self.loads:
            lds.setdefault(ld.bus, []).append(ld.id)
        freeze = lambda m: MappingProxyType({k: tuple(v) for k, v in m.items()})  # noqa: E731
        object.__setattr__(self, "lines_out", freeze(out))
        object.__setattr__(self, "lines_in", freeze(inn))
        object.__setattr__(self, "dgs_at", freeze(dgs))
        object.__setattr__(self, "loads_at", freeze(lds))

    @property
    def switches(self) -> tuple[LineParams, ...]:
        return tuple(ln for ln in self.lines if ln.is_switch)

    def demand(self, load_id: str, phase: Phase, t: int) -> complex:
        return demand_at(self, load_id, phase, t)


def demand_at(model: FeederModel, load_id: str, phase: Phase | str, t: int) -> complex:
    """Demand of a load on one phase at timestep ``t`` (kW + j kvar)."""
    try:
        load = model.load_by_id[load_id]
    except KeyError:
        raise KeyError(f"unknown load {load_id!r}") from None
    phase = Phase(phase) if isinstance(phase, str) else phase
    if phase not in load.phases:
        raise IndexError(f"load {load_id!r} has no phase {phase.value}")
    if not 0 <= t < model.horizon.n_steps:
        raise IndexError(f"timestep {t} outside horizon of {model.horizon.n_steps} steps")
    profile = load.demand[load.phases.index(phase)]
    return profile[0] if len(profile) == 1 else profile[t]


# --------------------------------------------------------------------------
# Parsing


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _complex(x: Any, where: str) -> complex:
    if _is_number(x):
        return complex(float(x), 0.0)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(_is_number(v) for v in x):
        return complex(float(x[0]), float(x[1]))
    raise FeederSyntaxError(f"{where}: expected [re, im] pair, got {x!r}")


def _phases(raw: Any, where: str) -> tuple[Phase, ...]:
    if isinstance(raw, str):
        raw = list(raw)
    try:
        phases = tuple(Phase(p) for p in raw)
    except (ValueError, TypeError):
        raise FeederSyntaxError(f"{where}: invalid phase list {raw!r}") from None
    if len(set(phases)) != len(phases):
        raise FeederSyntaxError(f"{where}: repeated phase in {raw!r}")
    return phases


def _per_phase(raw: Any, n: int, where: str, conv) -> tuple:
    """Broadcast a scalar (or a single [re, im] pair) over ``n`` phases.

    A float field given as a list, or a complex field given as a list of
    pairs, is taken per phase and must have length ``n``.
    """
    per_phase = isinstance(raw, (list, tuple)) and (conv is float or (raw and not _is_number(raw[0])))
    if per_phase:
        if len(raw) != n:
            raise DimensionError(f"{where}: expected {n} per-phase values, got {len(raw)}")
        return tuple(conv(v) for v in raw)
    return tuple(conv(raw) for _ in range(n))


def _profile(raw: Any, n_steps: int, where: str) -> tuple[complex, ...]:
    if _is_number(raw) or (isinstance(raw, (list, tuple)) and len(raw) == 2 and all(_is_number(v) for v in raw)):
        return (_complex(raw, where),)
    if isinstance(raw, (list, tuple)):
        prof = tuple(_complex(v, where) for v in raw)
        if len(prof) not in (1, n_steps):
            raise DimensionError(f"{where}: profile length {len(prof)} does not match horizon {n_steps}")
        return prof
    raise FeederSyntaxError(f"{where}: invalid demand {raw!r}")


def _demand(raw: Any, n_phases: int, n_steps: int, where: str) -> tuple[tuple[complex, ...], ...]:
    # a single pair or number applies to every phase
    if _is_number(raw) or (isinstance(raw, (list, tuple)) and len(raw) == 2 and all(_is_number(v) for v in raw)):
        return tuple(_profile(raw, n_steps, where) for _ in range(n_phases))
    if not isinstance(raw, (list, tuple)) or len(raw) != n_phases:
        raise DimensionError(f"{where}: expected one demand entry per phase ({n_phases})")
    return tuple(_profile(v, n_steps, where) for v in raw)


def _require(obj: Mapping, key: str, where: str) -> Any:
    try:
        return obj[key]
    except (KeyError, TypeError):
        raise FeederSyntaxError(f"{where}: missing field {key!r}") from None


def _unique(items: Iterable[Any], kind: str) -> None:
    seen: set[str] = set()
    for x in items:
        ident = x.id if hasattr(x, "id") else x.dg_id
        if ident in seen:
            raise DuplicateIdError(kind, ident)
        seen.add(ident)


def parse_feeder(text: str) -> FeederModel:
    """Parse feeder-file contents into a cross-linked ``FeederModel``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FeederSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise FeederSyntaxError("feeder file must contain a JSON object")
    return feeder_from_dict(doc)


def feeder_from_dict(doc: Mapping[str, Any]) -> FeederModel:
    hz = doc.get("horizon", {})
    horizon = Horizon(int(hz.get("n_steps", 1)), float(hz.get("dt_hours", 1.0)))
    T = horizon.n_steps

    buses = []
    for i, b in enumerate(doc.get("buses", [])):
        where = f"buses[{i}]"
        ph = _phases(_require(b, "phases", where), where)
        buses.append(
            Bus(
                id=str(_require(b, "id", where)),
                phases=ph,
                vmin=_per_phase(b.get("vmin", 0.9), len(ph), where + ".vmin", float),
                vmax=_per_phase(b.get("vmax", 1.1), len(ph), where + ".vmax", float),
            )
        )
    _unique(buses, "bus")
    bus_ids = {b.id for b in buses}

    lines = []
    for i, ln in enumerate(doc.get("lines", [])):
        where = f"lines[{i}]"
        lid = str(_require(ln, "id", where))
        ph = _phases(_require(ln, "phases", where), where)
        zraw = _require(ln, "impedance", where)
        if not isinstance(zraw, list) or len(zraw) != len(ph) or any(
            not isinstance(row, list) or len(row) != len(ph) for row in zraw
        ):
            raise DimensionError(f"line {lid!r}: impedance must be {len(ph)}x{len(ph)} over its phases")
        z = tuple(tuple(_complex(v, f"line {lid!r} impedance") for v in row) for row in zraw)
        sw = ln.get("switch")
        fb, tb = str(_require(ln, "from", where)), str(_require(ln, "to", where))
        for ref in (fb, tb):
            if ref not in bus_ids:
                raise DanglingReferenceError("bus", ref, f"line {lid!r}")
        lines.append(
            LineParams(
                id=lid,
                from_bus=fb,
                to_bus=tb,
                phases=ph,
                impedance=z,
                thermal_limit=_per_phase(ln.get("thermal_limit", 1.0), len(ph), where, float),
                is_switch=sw is not None,
                dispatchable=bool(sw.get("dispatchable", True)) if sw else False,
                initial_state=str(sw.get("state", "open")) if sw else "closed",
                angle_limits=tuple(float(v) for v in ln.get("angle_limits", (-math.pi / 6, math.pi / 6))),
            )
        )
    _unique(lines, "line")

    loads = []
    for i, ld in enumerate(doc.get("loads", [])):
        where = f"loads[{i}]"
        lid = str(_require(ld, "id", where))
        bus = str(_require(ld, "bus", where))
        if bus not in bus_ids:
            raise DanglingReferenceError("bus", bus, f"load {lid!r}")
        ph = _phases(_require(ld, "phases", where), where)
        loads.append(
            LoadSpec(
                id=lid,
                bus=bus,
                phases=ph,
                demand=_demand(_require(ld, "demand", where), len(ph), T, f"load {lid!r}"),
                priority=float(ld.get("priority", 1.0)),
            )
        )
    _unique(loads, "load")

    dgs = []
    for i, g in enumerate(doc.get("generators", [])):
        where = f"generators[{i}]"
        gid = str(_require(g, "id", where))
        bus = str(_require(g, "bus", where))
        if bus not in bus_ids:
            raise DanglingReferenceError("bus", bus, f"generator {gid!r}")
        ph = _phases(_require(g, "phases", where), where)
        conv = lambda v: _complex(v, f"generator {gid!r}")  # noqa: E731
        dgs.append(
            DgSpec(
                id=gid,
                bus=bus,
                phases=ph,
                smin=_per_phase(g.get("smin", [0.0, 0.0]), len(ph), where, conv),
                smax=_per_phase(_require(g, "smax", where), len(ph), where, conv),
                grid_forming_capable=bool(g.get("grid_forming", False)),
                kind=str(g.get("kind", "generator")),
            )
        )
    _unique(dgs, "generator")
    dg_ids = {d.id for d in dgs}

    batteries = []
    for i, bt in enumerate(doc.get("batteries", [])):
        where = f"batteries[{i}]"
        dg = str(_require(bt, "dg", where))
        if dg not in dg_ids:
            raise DanglingReferenceError("generator", dg, f"battery {where}")
        lo, hi = _require(bt, "charge_rate_bounds_kw", where)
        batteries.append(
            BatterySpec(
                dg_id=dg,
                energy_cap=float(_require(bt, "energy_cap_kwh", where)),
                initial_energy=float(bt.get("initial_energy_kwh", 0.0)),
                charge_rate_bounds=(float(lo), float(hi)),
                loss_segments=tuple((float(a), float(b)) for a, b in bt.get("loss_segments", [[1.0, 0.0]])),
            )
        )
    _unique(batteries, "battery")

    return FeederModel(
        buses=tuple(buses),
        lines=tuple(lines),
        loads=tuple(loads),
        dgs=tuple(dgs),
        batteries=tuple(batteries),
        horizon=horizon,
        base_kva=float(doc.get("base_kva", 1000.0)),
        base_kv=float(doc.get("base_kv", 1.0)),
        name=str(doc.get("name", "")),
    )


def _pair(c: complex) -> list[float]:
    return [c.real, c.imag]


def feeder_to_dict(model: FeederModel) -> dict[str, Any]:
    """Canonical (fully expanded) JSON form; ``parse_feeder`` inverts it."""
    ph = lambda phases: [p.value for p in phases]  # noqa: E731
    lines = []
    for ln in model.lines:
        d: dict[str, Any] = {
            "id": ln.id,
            "from": ln.from_bus,
            "to": ln.to_bus,
            "phases": ph(ln.phases),
            "impedance": [[_pair(v) for v in row] for row in ln.impedance],
            "thermal_limit": list(ln.thermal_limit),
            "angle_limits": list(ln.angle_limits),
        }
        if ln.is_switch:
            d["switch"] = {"dispatchable": ln.dispatchable, "state": ln.initial_state}
        lines.append(d)
    return {
        "name": model.name,
        "base_kva": model.base_kva,
        "base_kv": model.base_kv,
        "horizon": {"n_steps": model.horizon.n_steps, "dt_hours": model.horizon.dt},
        "buses": [
            {"id": b.id, "phases": ph(b.phases), "vmin": list(b.vmin), "vmax": list(b.vmax)} for b in model.buses
        ],
        "lines": lines,
        "loads": [
            {
                "id": ld.id,
                "bus": ld.bus,
                "phases": ph(ld.phases),
                "demand": [[_pair(v) for v in prof] for prof in ld.demand],
                "priority": ld.priority,
            }
            for ld in model.loads
        ],
        "generators": [
            {
                "id": g.id,
                "bus": g.bus,
                "phases": ph(g.phases),
                "smin": [_pair(v) for v in g.smin],
                "smax": [_pair(v) for v in g.smax],
                "grid_forming": g.grid_forming_capable,
                "kind": g.kind,
            }
            for g in model.dgs
        ],
        "batteries": [
            {
                "dg": bt.dg_id,
                "energy_cap_kwh": bt.energy_cap,
                "initial_energy_kwh": bt.initial_energy,
                "charge_rate_bounds_kw": list(bt.charge_rate_bounds),
                "loss_segments": [list(s) for s in bt.loss_segments],
            }
            for bt in model.batteries
        ],
    }


def serialize_feeder(model: FeederModel) -> str:
    return json.dumps(feeder_to_dict(model), indent=2)


def load_feeder(path) -> FeederModel:
    with open(path, encoding="utf-8") as fh:
        return parse_feeder(fh.read())


# --------------------------------------------------------------------------
# Semantic validation


@dataclass(frozen=True)
class Violation:
    object_id: str
    rule: str
    message: str = ""


def _check_phases_subset(out: list[Violation], oid: str, phases: Sequence[Phase], bus: Bus | None) -> None:
    if not phases:
        out.append(Violation(oid, "phases-nonempty", "no phases declared"))
    if bus is not None and not set(phases) <= set(bus.phases):
        out.append(Violation(oid, "phases-subset-of-bus", f"phases not all present at bus {bus.id!r}"))


def validate_feeder(model: FeederModel) -> list[Violation]:
    """Return every invariant violation; an empty list means the model is sound."""
    out: list[Violation] = []
    seen: dict[str, set[str]] = {}
    for kind, items in (("bus", model.buses), ("line", model.lines), ("load", model.loads), ("dg", model.dgs)):
        ids = seen.setdefault(kind, set())
        for x in items:
            if x.id in ids:
                out.append(Violation(x.id, f"unique-{kind}-id"))
            ids.add(x.id)

    hz = model.horizon
    if hz.n_steps < 1:
        out.append(Violation("horizon", "n_steps>=1"))
    if not hz.dt > 0:
        out.append(Violation("horizon", "dt>0"))
    if not model.base_kva > 0:
        out.append(Violation("base_kva", "base_kva>0"))

    for b in model.buses:
        if not b.phases:
            out.append(Violation(b.id, "phases-nonempty"))
        if len(b.vmin) != len(b.phases) or len(b.vmax) != len(b.phases):
            out.append(Violation(b.id, "voltage-bounds-per-phase"))
            continue
        for lo, hi in zip(b.vmin, b.vmax):
            if not 0 < lo:
                out.append(Violation(b.id, "vmin>0", f"vmin={lo}"))
            if lo > hi:
                out.append(Violation(b.id, "vmin<=vmax", f"vmin={lo} > vmax={hi}"))

    for ln in model.lines:
        fb, tb = model.bus_by_id.get(ln.from_bus), model.bus_by_id.get(ln.to_bus)
        if fb is None or tb is None:
            out.append(Violation(ln.id, "bus-reference"))
        if ln.from_bus == ln.to_bus:
            out.append(Violation(ln.id, "from!=to"))
        if not ln.phases:
            out.append(Violation(ln.id, "phases-nonempty"))
        for bus in (fb, tb):
            if bus is not None and not set(ln.phases) <= set(bus.phases):
                out.append(Violation(ln.id, "phases-subset-of-bus", f"bus {bus.id!r}"))
        n = len(ln.phases)
        if len(ln.impedance) != n or any(len(r) != n for r in ln.impedance):
            out.append(Violation(ln.id, "impedance-square"))
        if len(ln.thermal_limit) != n or any(not s > 0 for s in ln.thermal_limit):
            out.append(Violation(ln.id, "thermal_limit>0"))
        if ln.is_switch and ln.initial_state not in ("open", "closed"):
            out.append(Violation(ln.id, "switch-state", ln.initial_state))

    T = hz.n_steps
    for ld in model.loads:
        bus = model.bus_by_id.get(ld.bus)
        if bus is None:
            out.append(Violation(ld.id, "bus-reference"))
        _check_phases_subset(out, ld.id, ld.phases, bus)
        if len(ld.demand) != len(ld.phases):
            out.append(Violation(ld.id, "demand-per-phase"))
        for prof in ld.demand:
            if len(prof) not in (1, T):
                out.append(Violation(ld.id, "demand-profile-length"))
            if any(s.real < 0 for s in prof):
                out.append(Violation(ld.id, "demand>=0"))
        if ld.priority < 0:
            out.append(Violation(ld.id, "priority>=0"))

    for g in model.dgs:
        bus = model.bus_by_id.get(g.bus)
        if bus is None:
            out.append(Violation(g.id, "bus-reference"))
        _check_phases_subset(out, g.id, g.phases, bus)
        if len(g.smin) != len(g.phases) or len(g.smax) != len(g.phases):
            out.append(Violation(g.id, "dg-bounds-per-phase"))
        for lo, hi in zip(g.smin, g.smax):
            if lo.real > hi.real or lo.imag > hi.imag:
                out.append(Violation(g.id, "smin<=smax"))
        if g.kind not in ("generator", "pv", "battery"):
            out.append(Violation(g.id, "dg-kind", g.kind))
        if g.kind == "battery" and g.id not in model.battery_by_dg:
            out.append(Violation(g.id, "battery-spec-present"))

    for bt in model.batteries:
        g = model.dg_by_id.get(bt.dg_id)
        if g is None:
            out.append(Violation(bt.dg_id, "battery-dg-reference"))
        elif g.kind != "battery":
            out.append(Violation(bt.dg_id, "battery-dg-kind"))
        if not 0 <= bt.initial_energy <= bt.energy_cap:
            out.append(Violation(bt.dg_id, "0<=initial_energy<=energy_cap"))
        if bt.charge_rate_bounds[0] > bt.charge_rate_bounds[1]:
            out.append(Violation(bt.dg_id, "charge-rate-bounds"))
        if not bt.loss_segments:
            out.append(Violation(bt.dg_id, "loss-segments-nonempty"))
    return out
