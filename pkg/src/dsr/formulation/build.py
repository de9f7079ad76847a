from __future__ import annotations

import logging

from ..blocks import BlockPartition
from ..feeder import FeederModel
from ..milp import MilpModel
from .core import (
    BuildError,
    ConstraintGroupReport,
    DsrBuilder,
    FormulationKind,
    FormulationOptions,
    VarIndex,
)
from .gfm import add_gfm_coloring_constraints
from .loads import add_shedding_constraints, add_shedding_variables, objective_coefficients
from .power import (
    add_lindistflow_constraints,
    add_network_variables,
    add_power_balance,
    add_storage,
    add_thermal_limits,
)
from .topology import add_operational_constraints, add_radiality_constraints, add_switch_variables

log = logging.getLogger(__name__)


def build_dsr(
    model: FeederModel,
    partition: BlockPartition,
    kind: FormulationKind | str = FormulationKind.block,
    opts: FormulationOptions | None = None,
) -> tuple[MilpModel, VarIndex, ConstraintGroupReport]:
    """Assemble the multi-period restoration MILP for one formulation kind."""
    kind = FormulationKind.parse(kind)
    opts = opts or FormulationOptions()
    if set(partition.block_of_bus) != set(model.bus_by_id):
        raise BuildError("partition does not cover the feeder's buses")
    b = DsrBuilder(model, partition, kind, opts)
    if kind is FormulationKind.block_gfm and not any(d.grid_forming_capable for d in model.dgs) and model.loads:
        log.warning("block_gfm on a feeder without grid-forming-capable DGs: every block will be shed")

    for t in b.steps:
        add_switch_variables(b, t)
        add_network_variables(b, t)
        add_shedding_variables(b, t)
        add_power_balance(b, t)
        for ln in model.lines:
            add_lindistflow_constraints(b, ln, t)
        add_thermal_limits(b, t)
        add_storage(b, t)
        if opts.enforce_radiality:
            add_radiality_constraints(b, t)
        add_shedding_constraints(b, t)
        if kind is FormulationKind.block_gfm:
            add_gfm_coloring_constraints(b, t)
        add_operational_constraints(b, t)

    b.milp.set_objective(objective_coefficients(b))
    log.info(
        "built %s: %d binaries, %d continuous, %d constraints",
        b.milp.name,
        b.milp.binary_count,
        b.milp.continuous_count,
        len(b.milp.constraints),
    )
    return b.milp, b.index, b.report


def closed_form_binary_count(
    model: FeederModel,
    partition: BlockPartition,
    kind: FormulationKind | str = FormulationKind.block,
    enforce_radiality: bool = True,
) -> int:
    """Binary count predicted from feeder sizes alone.

    Per step: gamma and omega per switch, z per block (or per load for
    ``traditional``), and for ``block_gfm`` one color per coupling switch and
    block plus one mode binary per grid-forming-capable DG.
    """
    kind = FormulationKind.parse(kind)
    n_sw = len(model.switches)
    per_step = n_sw * (2 if enforce_radiality and n_sw else 1)
    per_step += len(partition) if kind.is_block else len(model.loads)
    if kind is FormulationKind.block_gfm:
        n_coupling = sum(1 for ln in model.switches if partition.block_of_bus[ln.from_bus] != partition.block_of_bus[ln.to_bus])
        per_step += n_coupling * len(partition) + sum(d.grid_forming_capable for d in model.dgs)
    return per_step * model.horizon.n_steps
