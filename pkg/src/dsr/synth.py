"""Random feeders for property tests and oracle comparisons."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .feeder import FeederModel, feeder_from_dict

PHASES = ("a", "b", "c")


@dataclass(frozen=True)
class SynthConfig:
    n_buses: int = 8
    n_switches: int = 3
    # extra switches between random bus pairs, possibly forming loops
    n_ties: int = 0
    n_loads: int = 4
    n_dgs: int = 2
    n_steps: int = 1
    three_phase: bool = False
    battery: bool = False
    gfm_fraction: float = 0.5
    dispatchable_fraction: float = 1.0
    closed_fraction: float = 0.0


def _impedance(rng: random.Random, phases: list[str]) -> list:
    n = len(phases)
    r, x = rng.uniform(0.002, 0.01), rng.uniform(0.004, 0.02)
    return [
        [[r, x] if i == j else [0.3 * r, 0.4 * x] for j in range(n)]
        for i in range(n)
    ]


def random_feeder_dict(rng: random.Random, cfg: SynthConfig = SynthConfig(), name: str = "synth") -> dict:
    n = max(2, cfg.n_buses)
    buses = [f"n{i}" for i in range(n)]
    parent = {buses[i]: buses[rng.randrange(i)] for i in range(1, n)}
    phases = {buses[0]: list(PHASES) if cfg.three_phase else ["a"]}
    for b in buses[1:]:
        up = phases[parent[b]]
        if cfg.three_phase and len(up) > 1 and rng.random() < 0.3:
            phases[b] = sorted(rng.sample(up, rng.randint(1, len(up))))
        else:
            phases[b] = list(up)

    tree_edges = [(parent[b], b) for b in buses[1:]]
    n_sw = min(cfg.n_switches, len(tree_edges))
    switch_edges = set(rng.sample(range(len(tree_edges)), n_sw))
    lines = []
    for i, (a, b) in enumerate(tree_edges):
        ph = phases[b]
        ln = {
            "id": f"L{i}",
            "from": a,
            "to": b,
            "phases": ph,
            "impedance": _impedance(rng, ph),
            "thermal_limit": round(rng.uniform(0.05, 0.5), 3),
        }
        if i in switch_edges:
            ln["id"] = f"S{i}"
            ln["switch"] = {
                "dispatchable": rng.random() < cfg.dispatchable_fraction,
                "state": "closed" if rng.random() < cfg.closed_fraction else "open",
            }
        lines.append(ln)
    def shared(b1: str, b2: str) -> list[str]:
        return [p for p in phases[b1] if p in phases[b2]]

    for j in range(cfg.n_ties):
        pairs = [(a, b) for a in buses for b in buses if a < b and shared(a, b)]
        a, b = rng.choice(pairs)
        ph = shared(a, b)
        lines.append({
            "id": f"T{j}",
            "from": a,
            "to": b,
            "phases": ph,
            "impedance": _impedance(rng, ph),
            "thermal_limit": round(rng.uniform(0.05, 0.5), 3),
            "switch": {"dispatchable": rng.random() < cfg.dispatchable_fraction, "state": "open"},
        })

    loads = []
    for j in range(cfg.n_loads):
        b = rng.choice(buses[1:] if n > 1 else buses)
        ph = sorted(rng.sample(phases[b], rng.randint(1, len(phases[b]))))
        prof = [[[round(rng.uniform(2, 30), 2), round(rng.uniform(0, 8), 2)] for _ in ph] for _ in range(cfg.n_steps)]
        loads.append({
            "id": f"D{j}",
            "bus": b,
            "phases": ph,
            "demand": [[p[k] for p in prof] for k in range(len(ph))],
            "priority": rng.choice([1.0, 1.0, 2.0, 0.5]),
        })

    gens, batteries = [], []
    for j in range(cfg.n_dgs):
        b = rng.choice(buses)
        ph = phases[b]
        cap = rng.uniform(5, 50)
        gens.append({
            "id": f"G{j}",
            "bus": b,
            "phases": ph,
            "smin": [0.0, -cap],
            "smax": [cap, cap],
            "grid_forming": j == 0 or rng.random() < cfg.gfm_fraction,
            "kind": "generator",
        })
    if cfg.battery and gens:
        g = gens[0]
        g["kind"] = "battery"
        cap = g["smax"][0] * len(g["phases"])
        batteries.append({
            "dg": g["id"],
            "energy_cap_kwh": round(cap * cfg.n_steps, 2),
            "initial_energy_kwh": round(cap * cfg.n_steps * rng.uniform(0.2, 0.8), 2),
            "charge_rate_bounds_kw": [-cap, cap],
            "loss_segments": [[1.0, 0.0], [0.95, 0.02 * cap]],
        })

    return {
        "name": name,
        "base_kva": 1000.0,
        "base_kv": 4.16,
        "horizon": {"n_steps": cfg.n_steps, "dt_hours": 1.0},
        "buses": [{"id": b, "phases": phases[b], "vmin": 0.9, "vmax": 1.1} for b in buses],
        "lines": lines,
        "loads": loads,
        "generators": gens,
        "batteries": batteries,
    }


def random_feeder(rng: random.Random, cfg: SynthConfig = SynthConfig(), name: str = "synth") -> FeederModel:
    return feeder_from_dict(random_feeder_dict(rng, cfg, name))
