"""Run records, comparison tables and one-line diagrams."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

from .blocks import BlockPartition
from .feeder import FeederModel
from .plan import RestorationPlan
from .validation import delivered_energy


@dataclass
class RunRecord:
    case: str
    kind: str
    binary_count: int
    continuous_count: int
    solve_time_s: float
    objective: float | None
    gap: float | None
    loads_shed_total: int
    blocks_shed_total: int
    delivered_mwh: float


HEADERS = (
    ("case", "case"),
    ("bin. vars.", "binary_count"),
    ("cont. vars.", "continuous_count"),
    ("solve time (s)", "solve_time_s"),
    ("obj.", "objective"),
    ("opt. gap (%)", "gap"),
    ("# load shed", "loads_shed_total"),
    ("# bl. shed", "blocks_shed_total"),
    ("P_d (MWh)", "delivered_mwh"),
)


def shed_counts(model: FeederModel, plan: RestorationPlan) -> tuple[int, int]:
    """(load, t) pairs with zero service and (block, t) pairs left dark."""
    loads = blocks = 0
    for st in plan.steps:
        loads += sum(1 for ld in model.loads if all(abs(s) == 0 for s in st.load_served[ld.id].values()))
        blocks += sum(1 for on in st.block_energized.values() if not on)
    return loads, blocks


def make_record(
    model: FeederModel,
    plan: RestorationPlan,
    *,
    binary_count: int,
    continuous_count: int,
    solve_time_s: float,
    gap: float | None,
    case: str | None = None,
) -> RunRecord:
    loads, blocks = shed_counts(model, plan)
    _, unweighted = delivered_energy(plan, model)
    return RunRecord(
        case=case if case is not None else plan.case,
        kind=plan.kind,
        binary_count=binary_count,
        continuous_count=continuous_count,
        solve_time_s=solve_time_s,
        objective=plan.objective,
        gap=gap,
        loads_shed_total=loads,
        blocks_shed_total=blocks,
        delivered_mwh=unweighted,
    )


def _cell(rec: RunRecord, attr: str) -> str:
    v = getattr(rec, attr)
    if attr == "case":
        return f"{rec.case or '<unnamed>'} {rec.kind.replace('_', '+')}"
    if v is None:
        return "-"
    if attr == "gap":
        return f"{100 * v:.1f}"
    if attr == "solve_time_s":
        return f"{v:.3g}"
    if attr == "objective":
        return f"{v:.1f}"
    if attr == "delivered_mwh":
        return f"{v:.3f}"
    return str(v)


def emit_stats_table(records: list[RunRecord]) -> str:
    """Aligned text table, one row per record, a rule between cases."""
    rows = [[_cell(r, a) for _, a in HEADERS] for r in records]
    heads = [h for h, _ in HEADERS]
    width = [max(len(x) for x in col) for col in zip(heads, *rows)]

    def line(cells):
        first = cells[0].ljust(width[0])
        return "  ".join([first] + [c.rjust(w) for c, w in zip(cells[1:], width[1:])])

    rule = "-" * len(line(heads))
    out = [rule.replace("-", "="), line(heads), rule.replace("-", "=")]
    for i, (rec, row) in enumerate(zip(records, rows)):
        if i and rec.case != records[i - 1].case:
            out.append(rule)
        out.append(line(row))
    out.append(rule.replace("-", "="))
    return "\n".join(out) + "\n"


def emit_stats_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=[f.name for f in fields(RunRecord)], lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(asdict(r))
    return buf.getvalue()


def read_stats_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


GREEN, RED = "#2e9d4a", "#d23c3c"


def _q(s: str) -> str:
    return '"' + str(s).replace('"', r"\"") + '"'


def emit_dot(model: FeederModel, partition: BlockPartition, plan: RestorationPlan, t: int) -> str:
    """Graphviz one-line diagram of timestep ``t``."""
    if not 0 <= t < plan.n_steps:
        raise IndexError(f"timestep {t} outside plan horizon {plan.n_steps}")
    st = plan.steps[t]
    out = [f"graph {_q(f'{model.name or plan.case}_t{t}')} {{", "  node [fontsize=10];"]
    for blk in partition.blocks:
        color = GREEN if st.block_energized.get(blk.id) else RED
        out.append(f"  subgraph cluster_blk{blk.id} {{")
        out.append(f'    label={_q(f"block {blk.id}")}; style=filled; color={_q(color)}; fillcolor={_q(color + "33")};')
        for bus in sorted(blk.buses):
            out.append(f"    {_q(bus)} [shape=point, width=0.12];")
        for lid in blk.loads:
            served = any(abs(s) > 0 for s in st.load_served[lid].values())
            out.append(f"    {_q('load:' + lid)} [label={_q(lid)}, shape=invtriangle, color={_q(GREEN if served else RED)}];")
        for d in blk.dgs:
            gfm = bool(st.gfm_active.get(d))
            label = f"{d}\\nGFM" if gfm else d
            extra = ", peripheries=2, style=bold" if gfm else ""
            out.append(f"    {_q('dg:' + d)} [label={_q(label)}, shape=circle{extra}];")
        out.append("  }")
    for ld in model.loads:
        out.append(f"  {_q(ld.bus)} -- {_q('load:' + ld.id)};")
    for d in model.dgs:
        out.append(f"  {_q(d.bus)} -- {_q('dg:' + d.id)};")
    for ln in model.lines:
        if ln.is_switch:
            closed = bool(st.switches.get(ln.id))
            style = "solid" if closed else "dashed"
            out.append(f"  {_q(ln.from_bus)} -- {_q(ln.to_bus)} [label={_q(ln.id)}, style={style}, penwidth=2];")
        else:
            out.append(f"  {_q(ln.from_bus)} -- {_q(ln.to_bus)};")
    out.append("}")
    return "\n".join(out) + "\n"
