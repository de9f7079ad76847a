"""Switch variables, radiality, and the switching operational rules."""

from __future__ import annotations

from .core import DsrBuilder


def add_switch_variables(b: DsrBuilder, t: int) -> None:
    with b.group("switching"):
        for sw in b.feeder.switches:
            if sw.dispatchable:
                b.var("gamma", sw.id, None, t, binary=True)
            else:
                s = 1.0 if sw.initially_closed else 0.0
                b.var("gamma", sw.id, None, t, binary=True, lower=s, upper=s)


def _components(n_blocks: int, edges: dict[str, tuple[int, int]]) -> list[list[int]]:
    adj: dict[int, set[int]] = {i: set() for i in range(n_blocks)}
    for a, c in edges.values():
        adj[a].add(c)
        adj[c].add(a)
    seen, comps = set(), []
    for s in range(n_blocks):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


def add_radiality_constraints(b: DsrBuilder, t: int) -> None:
    """Virtual switch states omega must form a spanning tree of each connected
    component of the block graph; closed switches are a subset of omega.

    Connectivity of omega is certified by a single-commodity flow: the lowest
    block of each component ships one unit to every other block of the
    component over edges of capacity |Z| * omega.
    """
    graph = b.graph
    switches = list(graph.switch_edges)
    if not switches:
        return
    nz = len(graph.blocks)
    coupling = graph.coupling_edges
    with b.group("radiality"):
        for k in switches:
            om = b.var("omega", k, None, t, binary=True)
            b.con("radsub", [(1.0, b.gamma(k, t)), (-1.0, om)], "<=", 0.0, k, f"t{t}")
            if k in graph.degenerate and b.feeder.line_by_id[k].dispatchable:
                # closing an intra-block switch always closes a loop
                b.con("raddeg", [(1.0, om)], "<=", 0.0, k, f"t{t}")
        for k in coupling:
            om = b.v("omega", k, None, t)
            fl = b.var("radflow", k, None, t, lower=-nz, upper=nz)
            b.con("radcapub", [(1.0, fl), (-nz, om)], "<=", 0.0, k, f"t{t}")
            b.con("radcaplb", [(1.0, fl), (nz, om)], ">=", 0.0, k, f"t{t}")
        for ci, comp in enumerate(_components(nz, coupling)):
            if len(comp) < 2:
                continue
            members = set(comp)
            edges = [k for k, (a, c) in coupling.items() if a in members]
            b.con("radtree", [(1.0, b.v("omega", k, None, t)) for k in edges], "=", len(comp) - 1, f"c{ci}", f"t{t}")
            for blk in comp[1:]:
                terms = []
                for k in edges:
                    a, c = coupling[k]
                    if c == blk:
                        terms.append((1.0, b.v("radflow", k, None, t)))
                    if a == blk:
                        terms.append((-1.0, b.v("radflow", k, None, t)))
                b.con("radbal", terms, "=", 1.0, f"blk{blk}", f"t{t}")


def add_operational_constraints(b: DsrBuilder, t: int) -> None:
    budget = b.opts.switch_closures_per_step
    with b.group("operational"):
        if budget is not None:
            closures = []
            for sw in b.feeder.switches:
                if not sw.dispatchable:
                    continue
                c = b.var("close", sw.id, None, t, lower=0.0, upper=1.0)
                g = b.gamma(sw.id, t)
                if t == 0:
                    init = 1.0 if sw.initially_closed else 0.0
                    b.con("closeind", [(1.0, c), (-1.0, g)], ">=", -init, sw.id, f"t{t}")
                else:
                    b.con("closeind", [(1.0, c), (-1.0, g), (1.0, b.gamma(sw.id, t - 1))], ">=", 0.0, sw.id, f"t{t}")
                closures.append((1.0, c))
            if closures:
                b.con("closebudget", closures, "<=", float(budget), f"t{t}")
        if b.opts.monotone_restoration and t > 0:
            for (sym, obj, ph, tt), vid in list(b.index.items()):
                if sym == "z" and tt == t:
                    b.con("monotone", [(1.0, vid), (-1.0, b.v("z", obj, None, t - 1))], ">=", 0.0, obj, f"t{t}")
