"""Grid-forming inverter requirement as a switch-coloring model.

Every closed switch of an energized island carries the color of the one
block in that island whose DG runs in grid-forming mode. A multi-commodity
flow per color, with a virtual edge from the color's block to every other
block, rules out colors leaking into islands the block cannot reach.
"""

from __future__ import annotations

from itertools import combinations

from .core import DsrBuilder
from .power import gate_dg_output


def _y(b: DsrBuilder, k: str, color: int, t: int) -> int:
    return b.v("y", f"{k}_c{color}", None, t)


def add_gfm_coloring_constraints(b: DsrBuilder, t: int) -> None:
    f, graph = b.feeder, b.graph
    blocks = [blk.id for blk in graph.blocks]
    nz = len(blocks)
    edges = graph.coupling_edges
    incident = {z: graph.incident(z) for z in blocks}
    capable = {z: [d for d in graph.blocks[z].dgs if f.dg_by_id[d].grid_forming_capable] for z in blocks}

    with b.group("gfm_coloring"):
        for z in blocks:
            for d in capable[z]:
                b.var("x", d, None, t, binary=True)
        for k in edges:
            for c in blocks:
                b.var("y", f"{k}_c{c}", None, t, binary=True)
        for k in edges:
            for c in blocks:
                b.var("f", f"{k}_c{c}", None, t, lower=-nz, upper=nz)
        for c in blocks:
            for a, e in graph.virtual_edges:
                b.var("ups", f"c{c}_{a}_{e}", None, t, lower=0.0, upper=1.0)

        X = {z: [(1.0, b.v("x", d, None, t)) for d in capable[z]] for z in blocks}
        gam = {k: b.gamma(k, t) for k in edges}

        # a switch carries at most one color, and only when closed
        for k in edges:
            b.con("color1", [(1.0, _y(b, k, c, t)) for c in blocks] + [(-1.0, gam[k])], "<=", 0.0, k, f"t{t}")

        for z in blocks:
            # isolated capable block must form its own grid; never two formers
            if capable[z]:
                b.con("gfmmax", X[z], "<=", 1.0, f"blk{z}", f"t{t}")
                b.con("gfmiso", X[z] + [(1.0, gam[k]) for k in incident[z]], ">=", 1.0, f"blk{z}", f"t{t}")
            for k in incident[z]:
                y = _y(b, k, z, t)
                b.con("nbrcolorlb", X[z] + [(-1.0, y), (-1.0, gam[k])], ">=", -1.0, f"blk{z}", k, f"t{t}")
                b.con("nbrcolorub", X[z] + [(-1.0, y), (1.0, gam[k])], "<=", 1.0, f"blk{z}", k, f"t{t}")
                b.con("colorsrc", [(1.0, y)] + [(-c, v) for c, v in X[z]], "<=", 0.0, f"blk{z}", k, f"t{t}")
            # closed switches meeting at a block share every color
            for k1, k2 in combinations(incident[z], 2):
                for c in blocks:
                    y1, y2 = _y(b, k1, c, t), _y(b, k2, c, t)
                    g1, g2 = gam[k1], gam[k2]
                    b.con("couple", [(1.0, y2), (-1.0, y1), (1.0, g1), (1.0, g2)], "<=", 2.0, f"blk{z}", k1, k2, f"c{c}", f"t{t}")
                    b.con("couple", [(1.0, y1), (-1.0, y2), (1.0, g1), (1.0, g2)], "<=", 2.0, f"blk{z}", k2, k1, f"c{c}", f"t{t}")

        for k in edges:
            for c in blocks:
                fl = b.v("f", f"{k}_c{c}", None, t)
                b.con("cflowub", [(1.0, fl), (-nz, gam[k])], "<=", 0.0, k, f"c{c}", f"t{t}")
                b.con("cflowlb", [(1.0, fl), (nz, gam[k])], ">=", 0.0, k, f"c{c}", f"t{t}")

        def net_out(blk: int, c: int) -> list[tuple[float, int]]:
            terms = []
            for k in incident[blk]:
                a, e = edges[k]
                fl = b.v("f", f"{k}_c{c}", None, t)
                if a == blk:
                    terms.append((1.0, fl))
                if e == blk:
                    terms.append((-1.0, fl))
            return terms

        for c in blocks:
            ups = {e: b.v("ups", f"c{c}_{c}_{e}", None, t) for e in blocks if e != c}
            b.con("csource", net_out(c, c) + [(1.0, u) for u in ups.values()], "=", float(nz - 1), f"c{c}", f"t{t}")
            for e, u in ups.items():
                b.con("csink", net_out(e, c) + [(-1.0, u)], "=", -1.0, f"c{c}", f"blk{e}", f"t{t}")
                for k in incident[e]:
                    b.con("cunused", [(1.0, _y(b, k, c, t)), (1.0, u)], "<=", 1.0, f"c{c}", f"blk{e}", k, f"t{t}")

        for z in blocks:
            any_color = [(1.0, _y(b, k, c, t)) for k in incident[z] for c in blocks]
            closed = [(1.0, gam[k]) for k in incident[z]]
            for d in graph.blocks[z].dgs:
                gate_dg_output(b, d, t, closed + X[z], "gfollow", exact=False)
                gate_dg_output(b, d, t, any_color + X[z], "gcolor", exact=False)
            # a block is energized only through a grid-former, local or colored
            b.con("zgfm", [(1.0, b.v("z", f"blk{z}", None, t))] + [(-c, v) for c, v in any_color + X[z]], "<=", 0.0, f"blk{z}", f"t{t}")
