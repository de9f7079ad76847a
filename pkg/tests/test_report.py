import copy
import re

import pytest

from dsr.plan import RestorationPlan
from dsr.report import (
    GREEN,
    RED,
    RunRecord,
    emit_dot,
    emit_stats_csv,
    emit_stats_table,
    make_record,
    read_stats_csv,
    shed_counts,
)
from dsr.validation import delivered_energy

from conftest import solve_plan


def rec(case="ieee13", kind="block", **kw):
    base = dict(
        binary_count=160, continuous_count=900, solve_time_s=2.5, objective=4165.3, gap=0.0,
        loads_shed_total=12, blocks_shed_total=3, delivered_mwh=3.664,
    )
    base.update(kw)
    return RunRecord(case=case, kind=kind, **base)


@pytest.fixture(scope="module")
def block_plan(tri):
    m, p = tri
    plan, _, _ = solve_plan(m, p, "block")
    return plan


def test_table_rows_and_rules():
    recs = [rec(kind="traditional"), rec(), rec(kind="block_gfm"), rec(case="other")]
    text = emit_stats_table(recs)
    lines = text.splitlines()
    assert lines[0].startswith("=") and lines[-1].startswith("=")
    assert "bin. vars." in lines[1] and "P_d (MWh)" in lines[1]
    body = lines[3:-1]
    assert sum(ln.startswith("-") for ln in body) == 1
    assert any(ln.startswith("ieee13 block+gfm") for ln in body)
    assert len({len(ln) for ln in lines}) == 1


def test_table_single_and_unnamed():
    text = emit_stats_table([rec(case="", objective=None, gap=None)])
    row = text.splitlines()[3]
    assert row.startswith("<unnamed> block")
    assert " - " in row + " "


def test_csv_agrees_with_records():
    recs = [rec(kind="traditional", delivered_mwh=3.973), rec()]
    rows = read_stats_csv(emit_stats_csv(recs))
    assert [r["kind"] for r in rows] == ["traditional", "block"]
    assert float(rows[0]["delivered_mwh"]) == 3.973
    assert int(rows[1]["binary_count"]) == 160
    table = emit_stats_table(recs)
    for r in rows:
        assert f"{float(r['delivered_mwh']):.3f}" in table


def test_record_from_plan(tri, block_plan):
    m, _ = tri
    r = make_record(m, block_plan, binary_count=7, continuous_count=13, solve_time_s=0.1, gap=0.0)
    assert r.delivered_mwh == delivered_energy(block_plan, m)[1]
    assert (r.loads_shed_total, r.blocks_shed_total) == shed_counts(m, block_plan) == (1, 1)
    assert r.case == "tri_block" and r.kind == "block"


def test_dot_mixed(tri, block_plan):
    m, p = tri
    dot = emit_dot(m, p, block_plan, 0)
    assert dot.startswith("graph ") and dot.rstrip().endswith("}")
    assert dot.count("subgraph cluster_blk") == 3
    # the source block shares the island with B; only C is dark
    fills = re.findall(r'subgraph (cluster_blk\d) \{\n    label="[^"]*"; style=filled; color="([^"]+)"', dot)
    assert dict(fills) == {"cluster_blk0": GREEN, "cluster_blk1": GREEN, "cluster_blk2": RED}
    assert re.search(r'"A" -- "B" \[label="S1", style=solid', dot)
    assert re.search(r'"B" -- "C" \[label="S2", style=dashed', dot)


def test_dot_all_green_and_all_red(tri, block_plan):
    m, p = tri
    lit = copy.deepcopy(block_plan)
    st = lit.steps[0]
    st.switches = {"S1": 1, "S2": 1}
    st.block_energized = {0: True, 1: True, 2: True}
    st.gfm_active = {"G1": 1}
    dot = emit_dot(m, p, lit, 0)
    assert dot.count(f'color="{GREEN}"; fillcolor') == 3
    assert dot.count("style=solid") == 2
    assert "GFM" in dot and "peripheries=2" in dot

    dark = copy.deepcopy(block_plan)
    st = dark.steps[0]
    st.switches = {"S1": 0, "S2": 0}
    st.block_energized = {0: False, 1: False, 2: False}
    st.load_served = {k: {ph: 0j for ph in v} for k, v in st.load_served.items()}
    dot = emit_dot(m, p, dark, 0)
    assert dot.count(f'color="{RED}"; fillcolor') == 3
    assert dot.count("style=dashed") == 2 and "style=solid" not in dot
    assert "GFM" not in dot


def test_dot_rejects_bad_step(tri, block_plan):
    m, p = tri
    with pytest.raises(IndexError):
        emit_dot(m, p, block_plan, 1)


def test_plan_json_round_trip(block_plan):
    again = RestorationPlan.from_json(block_plan.to_json())
    assert again == block_plan
