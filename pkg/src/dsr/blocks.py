"""Load blocks, the switch graph between them, and island energization.

A load block is a connected component of the feeder once every switch is
open. Switches become the edges of the block graph; a switch whose two
endpoints fall in the same block is kept but flagged degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .feeder import FeederModel


@dataclass(frozen=True)
class LoadBlock:
    id: int
    buses: frozenset[str]
    loads: tuple[str, ...] = ()
    dgs: tuple[str, ...] = ()
    has_gfm_capable: bool = False

    @property
    def label(self) -> str:
        return "{" + ",".join(sorted(self.buses)) + "}"


@dataclass(frozen=True)
class BlockPartition:
    blocks: tuple[LoadBlock, ...]
    block_of_bus: Mapping[str, int]

    def __len__(self) -> int:
        return len(self.blocks)

    def block_of_load(self, model: FeederModel, load_id: str) -> int:
        return self.block_of_bus[model.load_by_id[load_id].bus]

    def block_of_dg(self, model: FeederModel, dg_id: str) -> int:
        return self.block_of_bus[model.dg_by_id[dg_id].bus]


@dataclass(frozen=True)
class BlockGraph:
    blocks: tuple[LoadBlock, ...]
    # switch id -> (block of from-bus, block of to-bus)
    switch_edges: Mapping[str, tuple[int, int]]
    degenerate: frozenset[str]
    virtual_edges: tuple[tuple[int, int], ...]
    dg_block: Mapping[str, int] = field(default_factory=dict)

    @property
    def coupling_edges(self) -> dict[str, tuple[int, int]]:
        """Switch edges joining two distinct blocks."""
        return {k: e for k, e in self.switch_edges.items() if k not in self.degenerate}

    def incident(self, block: int) -> tuple[str, ...]:
        """Non-degenerate switches touching ``block`` (the set Gamma_zeta)."""
        return tuple(k for k, (a, b) in self.switch_edges.items() if k not in self.degenerate and block in (a, b))


def compute_load_blocks(model: FeederModel) -> BlockPartition:
    adj: dict[str, list[str]] = {b.id: [] for b in model.buses}
    for ln in model.lines:
        if not ln.is_switch:
            adj[ln.from_bus].append(ln.to_bus)
            adj[ln.to_bus].append(ln.from_bus)

    comps: list[set[str]] = []
    seen: set[str] = set()
    for start in adj:
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    comps.sort(key=min)

    block_of_bus = {bus: i for i, comp in enumerate(comps) for bus in comp}
    blocks = []
    for i, comp in enumerate(comps):
        loads = tuple(ld.id for ld in model.loads if ld.bus in comp)
        dgs = tuple(d.id for d in model.dgs if d.bus in comp)
        gfm = any(model.dg_by_id[d].grid_forming_capable for d in dgs)
        blocks.append(LoadBlock(i, frozenset(comp), loads, dgs, gfm))
    return BlockPartition(tuple(blocks), block_of_bus)


def build_block_graph(partition: BlockPartition, model: FeederModel) -> BlockGraph:
    edges: dict[str, tuple[int, int]] = {}
    degenerate = set()
    for sw in model.switches:
        a, b = partition.block_of_bus[sw.from_bus], partition.block_of_bus[sw.to_bus]
        edges[sw.id] = (a, b)
        if a == b:
            degenerate.add(sw.id)
    n = len(partition.blocks)
    virtual = tuple((a, b) for a in range(n) for b in range(n) if a != b)
    dg_block = {d.id: partition.block_of_bus[d.bus] for d in model.dgs}
    return BlockGraph(partition.blocks, edges, frozenset(degenerate), virtual, dg_block)


@dataclass(frozen=True)
class IslandState:
    islands: tuple[frozenset[int], ...]
    energized: Mapping[int, bool]
    gfm_count: tuple[int, ...]
    island_of_block: Mapping[int, int]


def islands_of(block_graph: BlockGraph, switch_states: Mapping[str, int]) -> list[frozenset[int]]:
    """Connected components of blocks under the closed switches."""
    parent = list(range(len(block_graph.blocks)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for k, (a, b) in block_graph.switch_edges.items():
        if switch_states.get(k, 0) >= 0.5:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, set[int]] = {}
    for i in range(len(parent)):
        groups.setdefault(find(i), set()).add(i)
    return [frozenset(g) for _, g in sorted(groups.items())]


def energized_islands(
    block_graph: BlockGraph,
    switch_states: Mapping[str, int],
    gfm_active: Mapping[str, int],
) -> IslandState:
    """Islands under ``switch_states``; an island is energized iff it holds
    exactly one active grid-former. Other counts are reported, not rejected."""
    islands = islands_of(block_graph, switch_states)
    island_of_block = {b: i for i, isl in enumerate(islands) for b in isl}
    counts = [0] * len(islands)
    for dg, on in gfm_active.items():
        if on >= 0.5:
            counts[island_of_block[block_graph.dg_block[dg]]] += 1
    energized = {b: counts[island_of_block[b]] == 1 for b in island_of_block}
    return IslandState(tuple(islands), energized, tuple(counts), island_of_block)
