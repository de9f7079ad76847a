"""Energization variables, block coupling and the restoration objective."""

from __future__ import annotations

from ..feeder import FeederModel
from .core import DsrBuilder
from .power import gate_dg_output


def add_shedding_variables(b: DsrBuilder, t: int) -> None:
    with b.group("shedding"):
        if b.kind.is_block:
            for blk in b.partition.blocks:
                b.var("z", f"blk{blk.id}", None, t, binary=True)
        else:
            for ld in b.feeder.loads:
                b.var("z", ld.id, None, t, binary=True)


def add_shedding_constraints(b: DsrBuilder, t: int) -> None:
    """Block kinds: DG output implies block energized, and blocks joined by a
    closed switch share one energization state (two-sided coupling)."""
    if not b.kind.is_block:
        return
    with b.group("shedding"):
        for d in b.feeder.dgs:
            z = b.v("z", f"blk{b.graph.dg_block[d.id]}", None, t)
            gate_dg_output(b, d.id, t, [(1.0, z)], "dgz")
        for k, (a, c) in b.graph.coupling_edges.items():
            za, zc, g = b.v("z", f"blk{a}", None, t), b.v("z", f"blk{c}", None, t), b.gamma(k, t)
            b.con("zcouplb", [(1.0, za), (-1.0, zc), (-1.0, g)], ">=", -1.0, k, f"t{t}")
            b.con("zcoupub", [(1.0, za), (-1.0, zc), (1.0, g)], "<=", 1.0, k, f"t{t}")


def load_energy_weights(model: FeederModel) -> dict[tuple[str, int], float]:
    """kappa * dt * sum over phases of active demand (kWh), per (load, t)."""
    dt = model.horizon.dt
    out = {}
    for ld in model.loads:
        for t in range(model.horizon.n_steps):
            p = sum(model.demand(ld.id, ph, t).real for ph in ld.phases)
            out[(ld.id, t)] = ld.priority * dt * p
    return out


def objective_coefficients(b: DsrBuilder) -> list[tuple[float, int]]:
    """Served active energy, weighted by load priority, placed on the
    energization binaries (served = z * demand is substituted)."""
    acc: dict[int, float] = {}
    for (lid, t), w in load_energy_weights(b.feeder).items():
        vid = b.z_of_load(lid, t)
        acc[vid] = acc.get(vid, 0.0) + w
    if b.kind.is_block:
        # blocks without load still appear, with coefficient 0
        for blk in b.partition.blocks:
            for t in b.steps:
                acc.setdefault(b.v("z", f"blk{blk.id}", None, t), 0.0)
    return [(c, v) for v, c in acc.items()]

