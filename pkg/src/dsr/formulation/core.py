from __future__ import annotations

import enum
import math
import re
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from ..blocks import BlockGraph, BlockPartition, build_block_graph
from ..feeder import FeederModel, Phase
from ..milp import MilpModel, Sense, VariableSpec, VarKind

GROUPS = (
    "power_balance",
    "voltage_drop",
    "limits",
    "switching",
    "storage",
    "radiality",
    "shedding",
    "gfm_coloring",
    "operational",
)


class BuildError(ValueError):
    pass


class FormulationKind(str, enum.Enum):
    traditional = "traditional"
    block = "block"
    block_gfm = "block_gfm"

    @classmethod
    def parse(cls, s: "str | FormulationKind") -> "FormulationKind":
        if isinstance(s, FormulationKind):
            return s
        try:
            return cls(s.replace("-", "_").replace("+", "_"))
        except ValueError:
            raise BuildError(f"unknown formulation kind {s!r}") from None

    @property
    def is_block(self) -> bool:
        return self is not FormulationKind.traditional

    @property
    def cli_name(self) -> str:
        return self.value.replace("_", "-")


@dataclass(frozen=True)
class FormulationOptions:
    switch_closures_per_step: int | None = 1
    monotone_restoration: bool = True
    # None: per line, max vmax^2 - min vmin^2 over both endpoints
    big_m_voltage: float | None = None
    thermal_polygon_sides: int = 8
    enforce_radiality: bool = True

    def __post_init__(self):
        if self.switch_closures_per_step is not None and self.switch_closures_per_step < 0:
            raise BuildError("switch_closures_per_step must be >= 0")
        if self.thermal_polygon_sides not in (4, 8, 16):
            raise BuildError("thermal_polygon_sides must be one of 4, 8, 16")


Key = tuple[str, str, "str | None", int]

_UNSAFE = re.compile(r"[^A-Za-z0-9_]")


class VarIndex:
    """Maps (symbol, object, phase, t) onto model variable ids."""

    def __init__(self, kind: str = "block") -> None:
        self.kind = kind
        self._ids: dict[Key, int] = {}
        self._keys: dict[int, Key] = {}

    def add(self, key: Key, vid: int) -> None:
        self._ids[key] = vid
        self._keys[vid] = key

    def __contains__(self, key: Key) -> bool:
        return key in self._ids

    def __getitem__(self, key: Key) -> int:
        return self._ids[key]

    def get(self, symbol: str, obj: str, phase: "Phase | str | None" = None, t: int = 0) -> int | None:
        ph = phase.value if isinstance(phase, Phase) else phase
        return self._ids.get((symbol, obj, ph, t))

    def key_of(self, vid: int) -> Key:
        return self._keys[vid]

    def items(self) -> Iterator[tuple[Key, int]]:
        return iter(self._ids.items())

    def symbols(self) -> set[str]:
        return {k[0] for k in self._ids}

    def count(self, symbol: str) -> int:
        return sum(1 for k in self._ids if k[0] == symbol)

    def sidecar(self, model: MilpModel) -> dict:
        names = {model.variables[vid].name: [s, o, p, t] for (s, o, p, t), vid in self._ids.items()}
        return {"kind": self.kind, "variables": names}

    @classmethod
    def from_sidecar(cls, data: dict, model: MilpModel) -> "VarIndex":
        idx = cls(data["kind"])
        for name, (s, o, p, t) in data["variables"].items():
            idx.add((s, o, p, int(t)), model.var_id(name))
        return idx


@dataclass
class GroupCount:
    constraints: int = 0
    variables: int = 0
    binaries: int = 0


@dataclass
class ConstraintGroupReport:
    groups: dict[str, GroupCount] = field(default_factory=lambda: {g: GroupCount() for g in GROUPS})

    @property
    def n_constraints(self) -> int:
        return sum(g.constraints for g in self.groups.values())

    @property
    def n_variables(self) -> int:
        return sum(g.variables for g in self.groups.values())

    @property
    def n_binaries(self) -> int:
        return sum(g.binaries for g in self.groups.values())

    def as_dict(self) -> dict[str, dict[str, int]]:
        return {k: vars(v).copy() for k, v in self.groups.items()}


class DsrBuilder:
    """Mutable state shared by the constraint emitters while building one model."""

    def __init__(
        self,
        feeder: FeederModel,
        partition: BlockPartition,
        kind: FormulationKind,
        opts: FormulationOptions,
    ) -> None:
        self.feeder = feeder
        self.partition = partition
        self.graph: BlockGraph = build_block_graph(partition, feeder)
        self.kind = kind
        self.opts = opts
        self.milp = MilpModel(f"{feeder.name or 'feeder'}_{kind.value}")
        self.index = VarIndex(kind.value)
        self.report = ConstraintGroupReport()
        self._group = "power_balance"
        self._names: set[str] = set()

    @property
    def base(self) -> float:
        return self.feeder.base_kva

    @property
    def steps(self) -> range:
        return range(self.feeder.horizon.n_steps)

    @contextmanager
    def group(self, name: str):
        prev, self._group = self._group, name
        try:
            yield
        finally:
            self._group = prev

    def _name(self, parts: Iterable[object]) -> str:
        name = "_".join(_UNSAFE.sub("_", str(p)) for p in parts if p is not None and p != "")
        base, n = name, 1
        while name in self._names:
            n += 1
            name = f"{base}_{n}"
        self._names.add(name)
        return name

    def var(
        self,
        symbol: str,
        obj: str,
        phase: "Phase | None" = None,
        t: int = 0,
        *,
        binary: bool = False,
        lower: float = 0.0,
        upper: float = math.inf,
    ) -> int:
        ph = phase.value if phase is not None else None
        name = self._name((symbol, obj, ph, f"t{t}"))
        kind = VarKind.binary if binary else VarKind.continuous
        if binary:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        vid = self.milp.add_variable(VariableSpec(name, kind, lower, upper))
        self.index.add((symbol, obj, ph, t), vid)
        g = self.report.groups[self._group]
        g.variables += 1
        g.binaries += int(binary)
        return vid

    def v(self, symbol: str, obj: str, phase: "Phase | None" = None, t: int = 0) -> int:
        return self.index[(symbol, obj, phase.value if phase is not None else None, t)]

    def has(self, symbol: str, obj: str, phase: "Phase | None" = None, t: int = 0) -> bool:
        return (symbol, obj, phase.value if phase is not None else None, t) in self.index

    def con(self, label: str, terms: Iterable[tuple[float, int]], sense: str, rhs: float, *parts: object) -> None:
        name = self._name((label, *parts))
        self.milp.add_constraint(name, terms, Sense(sense), rhs)
        self.report.groups[self._group].constraints += 1

    # frequently used lookups
    def z_of_load(self, load_id: str, t: int) -> int:
        if self.kind.is_block:
            return self.v("z", f"blk{self.partition.block_of_load(self.feeder, load_id)}", None, t)
        return self.v("z", load_id, None, t)

    def gamma(self, switch_id: str, t: int) -> int:
        return self.v("gamma", switch_id, None, t)
