"""Generate the bundled ieee13-analogue feeder.

25 buses, 7 switches, 7 sources, 8 one-hour steps. The IEEE-13 backbone
is split into blocks by switches, and two microgrid laterals hang off it
through switches that also close two loops. Of the sources, three can
form a grid, and DG capacity is well below demand, so some blocks can
only be partially served.

    python3 scripts/make_ieee13_analogue.py [out.json]
"""

import json
import random
import sys
from pathlib import Path

ABC = ["a", "b", "c"]

BUSES = {
    "sourcebus": ABC, "650": ABC, "632": ABC, "633": ABC, "634": ABC,
    "645": ["b", "c"], "646": ["b", "c"], "670": ABC, "671": ABC, "680": ABC,
    "684": ["a", "c"], "611": ["c"], "652": ["a"], "692": ABC, "675": ABC,
    **{str(b): ABC for b in range(701, 711)},
}

LINES = [
    ("650", "632"), ("632", "633"), ("633", "634"), ("632", "645"), ("645", "646"),
    ("670", "671"), ("671", "680"), ("671", "684"), ("684", "611"), ("684", "652"),
    ("692", "675"),
    ("701", "702"), ("702", "703"), ("703", "704"), ("704", "705"),
    ("706", "707"), ("707", "708"), ("708", "709"), ("709", "710"),
]

SWITCHES = [
    ("sourcebus", "650"), ("632", "670"), ("671", "692"), ("633", "701"),
    ("675", "706"), ("705", "710"), ("684", "703"),
]

# id, bus, grid-forming capable, per-phase kW rating
SOURCES = [
    ("gfm_634", "634", True, 45.0),
    ("pv_645", "645", False, 30.0),
    ("bess_675", "675", True, 40.0),
    ("pv_680", "680", False, 25.0),
    ("dg_652", "652", False, 40.0),
    ("gfm_703", "703", True, 35.0),
    ("pv_708", "708", False, 35.0),
]

PROFILE = [1.0, 0.95, 0.9, 0.92, 1.0, 1.05, 1.1, 1.05]
NO_LOAD = {"sourcebus", "650"}

# per-phase kW range of the loads at each bus: the backbone blocks and the
# 701 lateral outgrow their local DG, the other two fit within it
LOAD_KW = {
    **dict.fromkeys(["632", "633", "634", "645", "646"], (9.0, 20.0)),
    **dict.fromkeys(["670", "671", "680", "684", "611", "652"], (3.0, 8.0)),
    **dict.fromkeys(["692", "675"], (5.0, 12.0)),
    **{str(b): (8.0, 14.0) for b in range(701, 706)},
    **{str(b): (3.0, 6.5) for b in range(706, 711)},
}


def shared(a, b):
    return [p for p in BUSES[a] if p in BUSES[b]]


def impedance(rng, phases, scale=1.0):
    r, x = rng.uniform(0.003, 0.008) * scale, rng.uniform(0.006, 0.015) * scale
    return [
        [[round(r, 6), round(x, 6)] if i == j else [round(0.35 * r, 6), round(0.45 * x, 6)] for j in range(len(phases))]
        for i in range(len(phases))
    ]


def build(seed=13):
    rng = random.Random(seed)
    lines = []
    for a, b in LINES:
        ph = shared(a, b)
        lines.append({"id": f"{a}_{b}", "from": a, "to": b, "phases": ph,
                      "impedance": impedance(rng, ph), "thermal_limit": 0.6})
    for a, b in SWITCHES:
        ph = shared(a, b)
        lines.append({"id": f"sw_{a}_{b}", "from": a, "to": b, "phases": ph,
                      "impedance": impedance(rng, ph, 0.2), "thermal_limit": 0.6,
                      "switch": {"dispatchable": True, "state": "open"}})
    loads = []
    for bus, phases in BUSES.items():
        if bus in NO_LOAD:
            continue
        for ph in phases:
            p = round(rng.uniform(*LOAD_KW[bus]), 1)
            q = round(p * rng.uniform(0.2, 0.45), 1)
            loads.append({
                "id": f"{bus}{ph}", "bus": bus, "phases": [ph],
                "demand": [[[round(p * f, 3), round(q * f, 3)] for f in PROFILE]],
                "priority": 2.0 if bus in ("671", "675", "703") else 1.0,
            })
    gens = []
    for gid, bus, gfm, kw in SOURCES:
        gens.append({
            "id": gid, "bus": bus, "phases": BUSES[bus],
            "smin": [0.0 if not gid.startswith("bess") else -kw, -0.6 * kw],
            "smax": [kw, 0.6 * kw],
            "grid_forming": gfm,
            "kind": "battery" if gid.startswith("bess") else ("pv" if gid.startswith("pv") else "generator"),
        })
    total = 3 * 40.0
    batteries = [{
        "dg": "bess_675", "energy_cap_kwh": 8 * total, "initial_energy_kwh": 6 * total,
        "charge_rate_bounds_kw": [-total, total],
        "loss_segments": [[1.0, 0.0], [0.96, 0.02 * total]],
    }]
    return {
        "name": "ieee13_analogue",
        "base_kva": 1000.0,
        "base_kv": 4.16,
        "horizon": {"n_steps": len(PROFILE), "dt_hours": 1.0},
        "buses": [{"id": b, "phases": ph, "vmin": 0.9, "vmax": 1.05} for b, ph in BUSES.items()],
        "lines": lines,
        "loads": loads,
        "generators": gens,
        "batteries": batteries,
    }


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "src/dsr/data/ieee13_analogue.json"
    out.write_text(json.dumps(build(), indent=1) + "\n")
    print(f"wrote {out}")
