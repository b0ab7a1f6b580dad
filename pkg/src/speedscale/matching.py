"""Minimum-cost bipartite matching by successive shortest augmenting paths.

Sizes here are tiny (one left vertex per job), so shortest paths in the
residual graph use plain Bellman-Ford relaxation; processing left vertices in
index order keeps the result deterministic.
"""

from __future__ import annotations

import math

from .errors import ContractViolationError


def min_cost_saturating_matching(
    n_left: int, n_right: int, edges: list[tuple[int, int, float]]
) -> tuple[list[int], float]:
    """Match every left vertex at minimum total cost.

    edges: (left, right, cost) triples, parallel edges allowed.  Returns
    (edge index chosen per left vertex, total cost).  Raises
    ContractViolationError when no saturating matching exists.
    """
    adj: list[list[int]] = [[] for _ in range(n_left)]
    for idx, (u, v, _) in enumerate(edges):
        if not (0 <= u < n_left and 0 <= v < n_right):
            raise ContractViolationError(f"edge {idx} out of range")
        adj[u].append(idx)
    match_l = [-1] * n_left  # chosen edge per left vertex
    match_r = [-1] * n_right

    for src in range(n_left):
        dist_l = [math.inf] * n_left
        dist_r = [math.inf] * n_right
        into_r = [-1] * n_right  # forward edge used to reach each right vertex
        dist_l[src] = 0.0
        for _ in range(n_left + n_right + 1):
            changed = False
            for u in range(n_left):
                if not math.isfinite(dist_l[u]):
                    continue
                for idx in adj[u]:
                    _, v, c = edges[idx]
                    if match_l[u] == idx:
                        continue
                    if dist_l[u] + c < dist_r[v] - 1e-12:
                        dist_r[v] = dist_l[u] + c
                        into_r[v] = idx
                        changed = True
            for v in range(n_right):
                idx = match_r[v]
                if idx < 0 or not math.isfinite(dist_r[v]):
                    continue
                u, _, c = edges[idx]
                if dist_r[v] - c < dist_l[u] - 1e-12:
                    dist_l[u] = dist_r[v] - c
                    changed = True
            if not changed:
                break
        target, best = -1, math.inf
        for v in range(n_right):
            if match_r[v] < 0 and dist_r[v] < best - 1e-12:
                target, best = v, dist_r[v]
        if target < 0:
            raise ContractViolationError(
                f"no saturating matching: left vertex {src} cannot be matched"
            )
        v = target
        while True:
            idx = into_r[v]
            u = edges[idx][0]
            previous = match_l[u]
            match_l[u] = idx
            match_r[v] = idx
            if u == src:
                break
            v = edges[previous][1]
    total = sum(edges[idx][2] for idx in match_l)
    return match_l, total
