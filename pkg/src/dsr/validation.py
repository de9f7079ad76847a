"""Independent checks of restoration plans, and a brute-force optimum.

Nothing here reuses the formulation's constraint code: energization is
re-derived from topology, voltage drops are recomputed with complex
arithmetic, and the oracle enumerates discrete decisions explicitly and
only asks the solver for fixed-topology dispatch LPs.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .blocks import BlockGraph, BlockPartition, build_block_graph, energized_islands, islands_of
from .feeder import FeederModel
from .milp import MilpModel, SolveStatus, VariableSpec
from .plan import PlanStep, RestorationPlan
from .solver import SolverConfig, solve

KINDS = ("traditional", "block", "block_gfm")


@dataclass(frozen=True)
class CheckRecord:
    check: str
    obj: str
    t: int
    passed: bool
    residual: float = 0.0


@dataclass
class ValidationReport:
    records: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self, check: str | None = None) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed and (check is None or r.check == check)]

    def add(self, check: str, obj: str, t: int, ok: bool, residual: float = 0.0) -> None:
        self.records.append(CheckRecord(check, str(obj), t, bool(ok), float(residual)))

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_records": len(self.records),
            "failures": [vars(r) for r in self.failures()],
        }


def delivered_energy(plan: RestorationPlan, model: FeederModel) -> tuple[float, float]:
    """(priority-weighted, unweighted) served active energy in MWh."""
    w = u = 0.0
    for st in plan.steps:
        for lid, served in st.load_served.items():
            p = sum(s.real for s in served.values())
            u += plan.dt * p
            w += plan.dt * p * model.load_by_id[lid].priority
    return w / 1000.0, u / 1000.0


def _fully_served(model: FeederModel, lid: str, st: PlanStep, t: int, tol_kw: float) -> bool:
    ld = model.load_by_id[lid]
    return all(abs(st.load_served[lid][ph.value] - model.demand(lid, ph, t)) <= tol_kw for ph in ld.phases)


def _shed(st: PlanStep, lid: str, tol_kw: float) -> bool:
    return all(abs(s) <= tol_kw for s in st.load_served[lid].values())


def partially_energized_blocks(
    model: FeederModel, partition: BlockPartition, plan: RestorationPlan, tol_kw: float = 1e-6
) -> list[tuple[int, int]]:
    """(block, t) pairs where a block serves some loads but sheds others."""
    out = []
    for t, st in enumerate(plan.steps):
        for blk in partition.blocks:
            active = [l for l in blk.loads if any(model.demand(l, ph, t) != 0 for ph in model.load_by_id[l].phases)]
            served = [l for l in active if not _shed(st, l, tol_kw)]
            if served and len(served) < len(active):
                out.append((blk.id, t))
    return out


def closed_switch_cycles(graph: BlockGraph, model: FeederModel, switches: dict[str, int]) -> list[str]:
    """Closed switches that close a loop in the block graph."""
    parent = list(range(len(graph.blocks)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    bad = []
    for k, (a, b) in graph.switch_edges.items():
        if not switches.get(k, 0):
            continue
        if k in graph.degenerate:
            if model.line_by_id[k].dispatchable:
                bad.append(k)
            continue
        ra, rb = find(a), find(b)
        if ra == rb:
            bad.append(k)
        else:
            parent[ra] = rb
    return bad


def _drop(line, flows: dict[str, complex], base: float) -> dict[str, float]:
    """Squared-voltage drop per phase from the three-phase linearized model."""
    rot = cmath.exp(-2j * math.pi / 3)
    out = {}
    for i, phi in enumerate(line.phases):
        acc = 0j
        for j, psi in enumerate(line.phases):
            g = rot ** (phi.ordinal - psi.ordinal)
            acc += g * line.impedance[i][j].conjugate() * flows[psi.value] / base
        out[phi.value] = 2.0 * acc.real
    return out


def check_plan(
    model: FeederModel,
    partition: BlockPartition,
    plan: RestorationPlan,
    tol: float = 1e-5,
    *,
    closures_per_step: int | None = 1,
    monotone: bool = True,
    polygon_sides: int = 8,
    radiality: bool = True,
) -> ValidationReport:
    """Check every timestep of ``plan`` against the restoration semantics.

    Power residuals are compared in per-unit of ``model.base_kva``.
    """
    rep = ValidationReport()
    base = model.base_kva
    tol_kw = tol * base
    graph = build_block_graph(partition, model)
    kind = plan.kind
    slack = 1.0 / math.cos(math.pi / polygon_sides)

    if plan.n_steps != model.horizon.n_steps:
        rep.add("horizon", "plan", -1, False, abs(plan.n_steps - model.horizon.n_steps))
        return rep
    partial = partially_energized_blocks(model, partition, plan, tol_kw) if kind != "traditional" else []

    for t, st in enumerate(plan.steps):
        # (1) bus balance and open-switch flows
        for bus in model.buses:
            for ph in bus.phases:
                r = 0j
                for d in model.dgs_at[bus.id]:
                    r += st.dg_dispatch[d].get(ph.value, 0j)
                for lid in model.loads_at[bus.id]:
                    r -= st.load_served[lid].get(ph.value, 0j)
                for k in model.lines_out[bus.id]:
                    r -= st.line_flow[k].get(ph.value, 0j)
                for k in model.lines_in[bus.id]:
                    r += st.line_flow[k].get(ph.value, 0j)
                res = max(abs(r.real), abs(r.imag)) / base
                rep.add("power_balance", f"{bus.id}.{ph.value}", t, res <= tol, res)
        for sw in model.switches:
            if not st.switches[sw.id]:
                res = max(abs(s) for s in st.line_flow[sw.id].values()) / base
                rep.add("open_switch_flow", sw.id, t, res <= tol, res)

        # (2) engineering limits
        for bus in model.buses:
            for ph, lo, hi in zip(bus.phases, bus.vmin, bus.vmax):
                w = st.voltage_sq[bus.id][ph.value]
                res = max(0.0, lo * lo - w, w - hi * hi)
                rep.add("voltage_limit", f"{bus.id}.{ph.value}", t, res <= tol, res)
        for ln in model.lines:
            for ph, s in zip(ln.phases, ln.thermal_limit):
                mag = abs(st.line_flow[ln.id][ph.value]) / base
                res = max(0.0, mag - s * slack)
                rep.add("thermal_limit", f"{ln.id}.{ph.value}", t, res <= tol, res)
            closed = (not ln.is_switch) or st.switches[ln.id]
            if closed:
                drop = _drop(ln, st.line_flow[ln.id], base)
                for ph in ln.phases:
                    wi, wj = st.voltage_sq[ln.from_bus][ph.value], st.voltage_sq[ln.to_bus][ph.value]
                    res = abs(wj - (wi - drop[ph.value]))
                    rep.add("voltage_drop", f"{ln.id}.{ph.value}", t, res <= tol, res)
        for d in model.dgs:
            for ph, lo, hi in zip(d.phases, d.smin, d.smax):
                s = st.dg_dispatch[d.id][ph.value]
                if kind != "traditional":
                    # zero is always admissible; energized limits are checked by block_service
                    lo, hi = complex(min(lo.real, 0), min(lo.imag, 0)), complex(max(hi.real, 0), max(hi.imag, 0))
                    if st.block_energized.get(graph.dg_block[d.id]):
                        lo, hi = d.smin[d.phases.index(ph)], d.smax[d.phases.index(ph)]
                res = max(0.0, lo.real - s.real, s.real - hi.real, lo.imag - s.imag, s.imag - hi.imag) / base
                rep.add("dg_limit", f"{d.id}.{ph.value}", t, res <= tol, res)
        for ld in model.loads:
            for ph in ld.phases:
                dem, s = model.demand(ld.id, ph, t), st.load_served[ld.id][ph.value]
                res = max(0.0, s.real - dem.real, -s.real) / base
                rep.add("load_limit", f"{ld.id}.{ph.value}", t, res <= tol, res)

        # (3) storage
        for bt in model.batteries:
            e = st.battery_energy[bt.dg_id]
            prev = bt.initial_energy if t == 0 else plan.steps[t - 1].battery_energy[bt.dg_id]
            rate = st.battery_rate[bt.dg_id]
            res = abs(e - (prev - rate * plan.dt)) / base
            rep.add("battery_recursion", bt.dg_id, t, res <= tol, res)
            res = max(0.0, -e, e - bt.energy_cap) / base
            rep.add("battery_capacity", bt.dg_id, t, res <= tol, res)
            lo, hi = bt.charge_rate_bounds
            res = max(0.0, lo - rate, rate - hi) / base
            rep.add("battery_rate", bt.dg_id, t, res <= tol, res)
            out = sum(s.real for s in st.dg_dispatch[bt.dg_id].values())
            res = max(0.0, max(out - (l * rate + c) for l, c in bt.loss_segments)) / base
            rep.add("battery_loss", bt.dg_id, t, res <= tol, res)

        # (4) radiality
        if radiality:
            cyc = closed_switch_cycles(graph, model, st.switches)
            rep.add("radiality", "network", t, not cyc, len(cyc))

        islands = islands_of(graph, st.switches)
        # (5) block semantics
        if kind != "traditional":
            for blk in partition.blocks:
                on = st.block_energized[blk.id]
                for lid in blk.loads:
                    ok = _fully_served(model, lid, st, t, tol_kw) if on else _shed(st, lid, tol_kw)
                    rep.add("block_service", lid, t, ok)
                if not on:
                    out = max((abs(s) for d in blk.dgs for s in st.dg_dispatch[d].values()), default=0.0) / base
                    rep.add("deenergized_dg_output", f"blk{blk.id}", t, out <= tol, out)
            for blk, tt in partial:
                if tt == t:
                    rep.add("partial_block", f"blk{blk}", t, False)
            for i, isl in enumerate(islands):
                states = {st.block_energized[b] for b in isl}
                rep.add("island_uniform", f"island{i}", t, len(states) == 1)
            if kind == "block":
                for i, isl in enumerate(islands):
                    if any(st.block_energized[b] for b in isl):
                        load = sum(st.served_kw(l) for b in isl for l in graph.blocks[b].loads)
                        has_src = any(graph.blocks[b].dgs for b in isl)
                        rep.add("reachability", f"island{i}", t, has_src or load <= tol_kw)
            else:
                state = energized_islands(graph, st.switches, st.gfm_active)
                for blk in partition.blocks:
                    rep.add("reachability", f"blk{blk.id}", t, state.energized[blk.id] == st.block_energized[blk.id])
                # (6) grid-former requirement
                for i, isl in enumerate(state.islands):
                    if any(st.block_energized[b] for b in isl):
                        rep.add("gfm_count", f"island{i}", t, state.gfm_count[i] == 1, state.gfm_count[i])
                    else:
                        out = max(
                            (abs(s) for b in isl for d in graph.blocks[b].dgs for s in st.dg_dispatch[d].values()),
                            default=0.0,
                        ) / base
                        rep.add("unformed_island_output", f"island{i}", t, out <= tol, out)
                for d, on in st.gfm_active.items():
                    if on:
                        rep.add("gfm_capable", d, t, model.dg_by_id[d].grid_forming_capable)

        # (7) operational rules
        if closures_per_step is not None:
            n = 0
            for sw in model.switches:
                was = (1 if sw.initially_closed else 0) if t == 0 else plan.steps[t - 1].switches[sw.id]
                if not sw.dispatchable:
                    rep.add("fixed_switch", sw.id, t, st.switches[sw.id] == (1 if sw.initially_closed else 0))
                elif st.switches[sw.id] and not was:
                    n += 1
            rep.add("closure_budget", "network", t, n <= closures_per_step, n)
        if monotone and t > 0:
            prev = plan.steps[t - 1]
            if kind != "traditional":
                for blk in partition.blocks:
                    ok = st.block_energized[blk.id] or not prev.block_energized[blk.id]
                    rep.add("monotone", f"blk{blk.id}", t, ok)
            else:
                for ld in model.loads:
                    ok = not (_shed(st, ld.id, tol_kw) and not _shed(prev, ld.id, tol_kw))
                    rep.add("monotone", ld.id, t, ok)
    return rep


# --------------------------------------------------------------------------
# Brute-force optimum


class GuardExceeded(ValueError):
    pass


@dataclass
class OracleResult:
    objective: float
    plan: RestorationPlan | None
    n_configurations: int
    n_lp_solves: int = 0


@dataclass(frozen=True)
class _Choice:
    """Discrete decisions for one timestep."""

    switches: tuple[tuple[str, int], ...]
    energized: frozenset  # block ids (block kinds) or load ids (traditional)
    weight: float
    n_gfm: int = 1


def _radial_switch_states(model: FeederModel, graph: BlockGraph) -> list[dict[str, int]]:
    disp = [sw.id for sw in model.switches if sw.dispatchable]
    fixed = {sw.id: int(sw.initially_closed) for sw in model.switches if not sw.dispatchable}
    out = []
    for bits in itertools.product((0, 1), repeat=len(disp)):
        st = dict(fixed)
        st.update(zip(disp, bits))
        if not closed_switch_cycles(graph, model, st):
            out.append(st)
    return out


def _energization_choices(model, graph, kind, sw_state, t, weights) -> Iterator[_Choice]:
    key = tuple(sorted(sw_state.items()))
    if kind == "traditional":
        loads = [ld.id for ld in model.loads]
        for bits in itertools.product((0, 1), repeat=len(loads)):
            on = frozenset(l for l, b in zip(loads, bits) if b)
            yield _Choice(key, on, sum(weights[(l, t)] for l in on))
        return
    islands = islands_of(graph, sw_state)
    for bits in itertools.product((0, 1), repeat=len(islands)):
        blocks: set[int] = set()
        n_gfm = 1
        ok = True
        for isl, b in zip(islands, bits):
            if not b:
                continue
            if kind == "block_gfm":
                formers = sum(
                    1 for blk in isl for d in graph.blocks[blk].dgs if model.dg_by_id[d].grid_forming_capable
                )
                if formers == 0:
                    ok = False
                    break
                n_gfm *= formers
            blocks |= isl
        if not ok:
            continue
        w = sum(weights[(l, t)] for blk in blocks for l in graph.blocks[blk].loads)
        yield _Choice(key, frozenset(blocks), w, n_gfm)


def _closures(prev: dict[str, int], cur: dict[str, int], model: FeederModel) -> int:
    return sum(1 for sw in model.switches if sw.dispatchable and cur[sw.id] and not prev[sw.id])


def _dispatch_lp(
    model: FeederModel,
    graph: BlockGraph,
    kind: str,
    choices: Sequence[_Choice],
    t0: int,
    polygon_sides: int,
    energy0: dict[str, float],
) -> tuple[MilpModel, dict]:
    """Feasibility LP for fixed switch states and energization over
    consecutive timesteps starting at ``t0``."""
    base = model.base_kva
    lp = MilpModel(f"oracle_t{t0}_{len(choices)}")
    ids: dict = {}
    n = [0]

    def var(key, lo, hi):
        ids[key] = lp.add_variable(VariableSpec(f"v{n[0]}", "continuous", lo, hi))
        n[0] += 1
        return ids[key]

    def con(terms, sense, rhs):
        lp.add_constraint(f"c{len(lp.constraints)}", terms, sense, rhs)

    dirs = [(math.cos(2 * math.pi * m / polygon_sides), math.sin(2 * math.pi * m / polygon_sides)) for m in range(polygon_sides)]
    for off, ch in enumerate(choices):
        t = t0 + off
        sw = dict(ch.switches)
        for bus in model.buses:
            for ph, lo, hi in zip(bus.phases, bus.vmin, bus.vmax):
                var(("w", bus.id, ph.value, t), lo * lo, hi * hi)
        live = [ln for ln in model.lines if not ln.is_switch or sw[ln.id]]
        for ln in live:
            for ph, s in zip(ln.phases, ln.thermal_limit):
                p = var(("p", ln.id, ph.value, t), -s, s)
                q = var(("q", ln.id, ph.value, t), -s, s)
                for c, sn in dirs:
                    con([(c, p), (sn, q)], "<=", s)
        for d in model.dgs:
            if kind == "traditional":
                on = True
            else:
                on = graph.dg_block[d.id] in ch.energized
            for ph, lo, hi in zip(d.phases, d.smin, d.smax):
                if on:
                    var(("pg", d.id, ph.value, t), lo.real / base, hi.real / base)
                    var(("qg", d.id, ph.value, t), lo.imag / base, hi.imag / base)
                else:
                    var(("pg", d.id, ph.value, t), 0.0, 0.0)
                    var(("qg", d.id, ph.value, t), 0.0, 0.0)
        for bus in model.buses:
            for ph in bus.phases:
                for part, sym, gsym in ((0, "p", "pg"), (1, "q", "qg")):
                    terms, rhs = [], 0.0
                    for d in model.dgs_at[bus.id]:
                        if ph in model.dg_by_id[d].phases:
                            terms.append((1.0, ids[(gsym, d, ph.value, t)]))
                    for ln in live:
                        if ph not in ln.phases:
                            continue
                        if ln.from_bus == bus.id:
                            terms.append((-1.0, ids[(sym, ln.id, ph.value, t)]))
                        if ln.to_bus == bus.id:
                            terms.append((1.0, ids[(sym, ln.id, ph.value, t)]))
                    for lid in model.loads_at[bus.id]:
                        ld = model.load_by_id[lid]
                        if ph not in ld.phases:
                            continue
                        served = lid in ch.energized if kind == "traditional" else graph_block_of(model, graph, ld.bus) in ch.energized
                        if served:
                            dem = model.demand(lid, ph, t)
                            rhs += (dem.real if part == 0 else dem.imag) / base
                    con(terms, "=", rhs)
        rot = cmath.exp(-2j * math.pi / 3)
        for ln in live:
            for i, phi in enumerate(ln.phases):
                terms = [(1.0, ids[("w", ln.to_bus, phi.value, t)]), (-1.0, ids[("w", ln.from_bus, phi.value, t)])]
                for j, psi in enumerate(ln.phases):
                    h = rot ** (phi.ordinal - psi.ordinal) * ln.impedance[i][j].conjugate()
                    # 2 Re(h (p + jq)) = 2 Re(h) p - 2 Im(h) q
                    terms.append((2 * h.real, ids[("p", ln.id, psi.value, t)]))
                    terms.append((-2 * h.imag, ids[("q", ln.id, psi.value, t)]))
                con(terms, "=", 0.0)
        for bt in model.batteries:
            lo, hi = (r / base for r in bt.charge_rate_bounds)
            e = var(("psi", bt.dg_id, None, t), 0.0, bt.energy_cap / base)
            r = var(("prate", bt.dg_id, None, t), lo, hi)
            if off == 0:
                con([(1.0, e), (model.horizon.dt, r)], "=", energy0[bt.dg_id] / base)
            else:
                con([(1.0, e), (model.horizon.dt, r), (-1.0, ids[("psi", bt.dg_id, None, t - 1)])], "=", 0.0)
            dg = model.dg_by_id[bt.dg_id]
            out = [(1.0, ids[("pg", dg.id, ph.value, t)]) for ph in dg.phases]
            segs = [(l, c / base) for l, c in bt.loss_segments]
            for l, c in segs:
                con(out + [(-l, r)], "<=", c)
            floor = max(0.0, *(x - min(l * x + c for l, c in segs) for x in (lo, hi)))
            con(out + [(-1.0, r)], ">=", -floor)
    return lp, ids


def graph_block_of(model: FeederModel, graph: BlockGraph, bus: str) -> int:
    for blk in graph.blocks:
        if bus in blk.buses:
            return blk.id
    raise KeyError(bus)


def brute_force_optimum(
    model: FeederModel,
    partition: BlockPartition,
    kind: str,
    *,
    max_switches: int = 8,
    max_steps: int = 2,
    closures_per_step: int | None = 1,
    monotone: bool = True,
    polygon_sides: int = 8,
    solver: SolverConfig | None = None,
    max_configurations: int = 2_000_000,
) -> OracleResult:
    """Exhaustively enumerate discrete restoration decisions and return the
    best objective whose fixed-topology dispatch LP is feasible."""
    kind = kind.replace("-", "_")
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    n_disp = sum(1 for sw in model.switches if sw.dispatchable)
    if len(model.switches) > max_switches or n_disp > max_switches:
        raise GuardExceeded(f"{len(model.switches)} switches exceed guard of {max_switches}")
    if model.horizon.n_steps > max_steps:
        raise GuardExceeded(f"{model.horizon.n_steps} steps exceed guard of {max_steps}")
    solver = solver or SolverConfig(rel_gap=0.0, time_limit_s=60)
    graph = build_block_graph(partition, model)
    weights = {}
    for ld in model.loads:
        for t in range(model.horizon.n_steps):
            weights[(ld.id, t)] = ld.priority * model.horizon.dt * sum(model.demand(ld.id, ph, t).real for ph in ld.phases)

    states = _radial_switch_states(model, graph)
    per_step = [
        [(st, ch) for st in states for ch in _energization_choices(model, graph, kind, st, t, weights)]
        for t in range(model.horizon.n_steps)
    ]
    init = {sw.id: int(sw.initially_closed) for sw in model.switches}

    sequences: list[tuple[float, tuple[_Choice, ...]]] = []
    count = 0

    def extend(t, prev_state, prev_on, acc, weight, mult):
        nonlocal count
        if t == model.horizon.n_steps:
            count += mult
            if count > max_configurations:
                raise GuardExceeded(f"more than {max_configurations} configurations")
            sequences.append((weight, tuple(acc)))
            return
        for st, ch in per_step[t]:
            if closures_per_step is not None and _closures(prev_state, st, model) > closures_per_step:
                continue
            if monotone and prev_on is not None and not prev_on <= ch.energized:
                continue
            acc.append(ch)
            extend(t + 1, st, ch.energized, acc, weight + ch.weight, mult * ch.n_gfm)
            acc.pop()

    extend(0, init, None, [], 0.0, 1)
    sequences.sort(key=lambda s: -s[0])

    coupled = bool(model.batteries)
    cache: dict = {}
    solves = 0

    def feasible(seq):
        nonlocal solves
        if coupled:
            key = ("all", seq)
            if key not in cache:
                lp, ids = _dispatch_lp(model, graph, kind, seq, 0, polygon_sides, {b.dg_id: b.initial_energy for b in model.batteries})
                asg, _ = solve(lp, solver)
                solves += 1
                cache[key] = (asg, ids, lp) if asg.status is SolveStatus.optimal else None
            return [cache[key]] if cache[key] else None
        parts = []
        for t, ch in enumerate(seq):
            key = (t, ch)
            if key not in cache:
                lp, ids = _dispatch_lp(model, graph, kind, (ch,), t, polygon_sides, {})
                asg, _ = solve(lp, solver)
                solves += 1
                cache[key] = (asg, ids, lp) if asg.status is SolveStatus.optimal else None
            if cache[key] is None:
                return None
            parts.append(cache[key])
        return parts

    for weight, seq in sequences:
        parts = feasible(seq)
        if parts is not None:
            plan = _oracle_plan(model, graph, kind, seq, parts)
            return OracleResult(weight, plan, count, solves)
    return OracleResult(0.0, None, count, solves)


def _oracle_plan(model, graph, kind, seq, parts) -> RestorationPlan:
    base = model.base_kva
    vals: dict = {}
    for asg, ids, _lp in parts:
        for key, vid in ids.items():
            vals[key] = asg.value(vid)
    steps = []
    for t, ch in enumerate(seq):
        st = PlanStep()
        st.switches = dict(ch.switches)
        for ld in model.loads:
            on = ld.id in ch.energized if kind == "traditional" else graph_block_of(model, graph, ld.bus) in ch.energized
            st.load_served[ld.id] = {ph.value: (model.demand(ld.id, ph, t) if on else 0j) for ph in ld.phases}
        for blk in graph.blocks:
            if kind == "traditional":
                st.block_energized[blk.id] = any(l in ch.energized for l in blk.loads)
            else:
                st.block_energized[blk.id] = blk.id in ch.energized
        for d in model.dgs:
            st.dg_dispatch[d.id] = {
                ph.value: complex(vals[("pg", d.id, ph.value, t)], vals[("qg", d.id, ph.value, t)]) * base
                for ph in d.phases
            }
        if kind == "block_gfm":
            # first capable DG of every energized island forms the grid
            for isl in islands_of(graph, st.switches):
                chosen = None
                if any(b in ch.energized for b in isl):
                    for b in sorted(isl):
                        for d in graph.blocks[b].dgs:
                            if chosen is None and model.dg_by_id[d].grid_forming_capable:
                                chosen = d
                for b in isl:
                    for d in graph.blocks[b].dgs:
                        if model.dg_by_id[d].grid_forming_capable:
                            st.gfm_mode[d] = st.gfm_active[d] = int(d == chosen)
        for bt in model.batteries:
            st.battery_energy[bt.dg_id] = vals[("psi", bt.dg_id, None, t)] * base
            st.battery_rate[bt.dg_id] = vals[("prate", bt.dg_id, None, t)] * base
        for ln in model.lines:
            st.line_flow[ln.id] = {
                ph.value: complex(vals.get(("p", ln.id, ph.value, t), 0.0), vals.get(("q", ln.id, ph.value, t), 0.0)) * base
                for ph in ln.phases
            }
        for bus in model.buses:
            st.voltage_sq[bus.id] = {ph.value: vals[("w", bus.id, ph.value, t)] for ph in bus.phases}
        steps.append(st)
    obj = sum(ch.weight for ch in seq)
    return RestorationPlan(model.name, kind, model.horizon.dt, steps, obj)
