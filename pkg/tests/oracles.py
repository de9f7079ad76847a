"""Reference computations shared by tests, written without the package's
graph or formulation code."""

import cmath
import math

import numpy as np


def union_find_blocks(bus_ids, lines):
    """Components over non-switch lines as a set of frozensets."""
    parent = {b: b for b in bus_ids}

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for ln in lines:
        if not ln.is_switch:
            ra, rb = find(ln.from_bus), find(ln.to_bus)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for b in bus_ids:
        groups.setdefault(find(b), set()).add(b)
    return {frozenset(g) for g in groups.values()}


def drop_matrices(z, ordinals):
    """M_P and M_Q by explicit loops over phase pairs."""
    n = len(ordinals)
    mp, mq = np.zeros((n, n)), np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            g = cmath.rect(1.0, -2 * math.pi / 3 * (ordinals[i] - ordinals[j]))
            h = g * complex(z[i][j]).conjugate()
            mp[i, j] = 2 * h.real
            mq[i, j] = -2 * h.imag
    return mp, mq
