"""Restoration plan: the per-timestep operating decisions of a solution.

Powers are kW / kvar, energies kWh, squared voltages per-unit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any


@dataclass
class PlanStep:
    switches: dict[str, int] = field(default_factory=dict)
    block_energized: dict[int, bool] = field(default_factory=dict)
    load_served: dict[str, dict[str, complex]] = field(default_factory=dict)
    # raw grid-forming mode decision, and the subset in energized blocks
    gfm_mode: dict[str, int] = field(default_factory=dict)
    gfm_active: dict[str, int] = field(default_factory=dict)
    dg_dispatch: dict[str, dict[str, complex]] = field(default_factory=dict)
    battery_energy: dict[str, float] = field(default_factory=dict)
    battery_rate: dict[str, float] = field(default_factory=dict)
    line_flow: dict[str, dict[str, complex]] = field(default_factory=dict)
    voltage_sq: dict[str, dict[str, float]] = field(default_factory=dict)

    def served_kw(self, load_id: str) -> float:
        return sum(s.real for s in self.load_served.get(load_id, {}).values())


@dataclass
class RestorationPlan:
    case: str
    kind: str
    dt: float
    steps: list[PlanStep]
    objective: float | None = None

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict[str, Any]:
        def enc(x):
            if isinstance(x, complex):
                return [x.real, x.imag]
            if isinstance(x, dict):
                return {str(k): enc(v) for k, v in x.items()}
            return x

        return {
            "case": self.case,
            "kind": self.kind,
            "dt": self.dt,
            "objective": self.objective,
            "steps": [{k: enc(v) for k, v in asdict(s).items()} for s in self.steps],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RestorationPlan":
        def cplx(m):
            return {k: {ph: complex(*v) for ph, v in inner.items()} for k, inner in m.items()}

        steps = []
        for s in d["steps"]:
            steps.append(
                PlanStep(
                    switches={k: int(v) for k, v in s["switches"].items()},
                    block_energized={int(k): bool(v) for k, v in s["block_energized"].items()},
                    load_served=cplx(s["load_served"]),
                    gfm_mode={k: int(v) for k, v in s["gfm_mode"].items()},
                    gfm_active={k: int(v) for k, v in s["gfm_active"].items()},
                    dg_dispatch=cplx(s["dg_dispatch"]),
                    battery_energy={k: float(v) for k, v in s["battery_energy"].items()},
                    battery_rate={k: float(v) for k, v in s["battery_rate"].items()},
                    line_flow=cplx(s["line_flow"]),
                    voltage_sq={k: {ph: float(v) for ph, v in inner.items()} for k, inner in s["voltage_sq"].items()},
                )
            )
        return cls(d["case"], d["kind"], float(d["dt"]), steps, d.get("objective"))

    @classmethod
    def from_json(cls, text: str) -> "RestorationPlan":
        return cls.from_dict(json.loads(text))
