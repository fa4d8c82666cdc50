"""Slow reference implementations used by tests and acceptance runs.

Nothing here is clever on purpose: walk counts come from explicit
enumeration, gradients from central differences, and edit distances from
exhaustive search over node bijections.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError, ResourceError
from .graph import AttributedGraph, is_one_hot

MAX_WALK_NODES = 8
MAX_WALK_STEPS = 5
MAX_GED_NODES = 8
_INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class WalkCountTable:
    """``counts[i - 1]`` = number of label-matching walk pairs with ``i`` edges."""

    counts: tuple[int, ...]

    def __getitem__(self, i: int) -> int:
        return self.counts[i - 1]

    def __len__(self):
        return len(self.counts)


def _label_walks(g: AttributedGraph, length: int) -> Counter:
    labels = [int(x) for x in g.labels()]
    nbrs = [np.flatnonzero(row).tolist() for row in g.adjacency]
    walks: Counter = Counter()

    def extend(v, seq):
        if len(seq) == length + 1:
            walks[tuple(seq)] += 1
            return
        for u in nbrs[v]:
            seq.append(labels[u])
            extend(u, seq)
            seq.pop()

    for v in range(g.n):
        extend(v, [labels[v]])
    return walks


def enumerate_common_walks(G: AttributedGraph, H: AttributedGraph, t: int) -> WalkCountTable:
    """Count walk pairs with identical label sequences, by brute force."""
    for name, g in (("G", G), ("H", H)):
        if not is_one_hot(g.features):
            raise DomainError(f"{name} must carry one-hot labels")
        if not np.all((g.adjacency == 0) | (g.adjacency == 1)):
            raise DomainError(f"{name} must have a binary adjacency")
    if G.d != H.d:
        raise DomainError("label alphabets differ")
    if max(G.n, H.n) > MAX_WALK_NODES or t > MAX_WALK_STEPS:
        raise ResourceError(
            f"walk enumeration limited to n, m <= {MAX_WALK_NODES} and t <= {MAX_WALK_STEPS}"
        )
    counts = []
    for i in range(1, t + 1):
        wg, wh = _label_walks(G, i), _label_walks(H, i)
        c = sum(cnt * wh[seq] for seq, cnt in wg.items())
        if c > _INT64_MAX:
            raise ResourceError("walk count overflows 64-bit integers")
        counts.append(c)
    return WalkCountTable(tuple(counts))


def finite_difference_gradient(
    loss: Callable[..., float],
    params,
    h: float = 1e-5,
):
    """Central-difference gradient of a scalar ``loss``.

    ``params`` is either one array (``loss(array)``) or a mapping of named
    arrays (``loss(mapping)``); the result mirrors that structure.
    """
    if h <= 0:
        raise DomainError("finite-difference step must be positive")
    single = not isinstance(params, Mapping)
    named = {"_": params} if single else dict(params)
    named = {k: np.array(v, dtype=np.float64) for k, v in named.items()}

    def call():
        value = loss(named["_"] if single else named)
        value = float(value)
        if not np.isfinite(value):
            raise ArithmeticError(f"loss is not finite: {value}")
        return value

    grads = {}
    for key, arr in named.items():
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = call()
            flat[idx] = orig - h
            down = call()
            flat[idx] = orig
            gflat[idx] = (up - down) / (2 * h)
        grads[key] = g
    return grads["_"] if single else grads


@dataclass(frozen=True)
class GedCostModel:
    """Edge edit costs are ``|w_learned - w_truth|`` with weights in [0, 1]
    (fill ``1 - w``, remove ``w``); relabeling a node costs ``label_cost``."""

    with_labels: bool = True
    label_cost: float = 1.0


def brute_force_ged(G1: AttributedGraph, G2: AttributedGraph, cost_model: GedCostModel = GedCostModel()) -> float:
    """Exact edit distance between equal-sized graphs, no node insertions.

    ``G1`` is usually the learned (weighted) graph and ``G2`` the ground
    truth; both adjacencies must lie in ``[0, 1]``.  Search is a depth-first
    enumeration of bijections with pruning on the partial cost.
    """
    n = G1.n
    if G2.n != n:
        raise DomainError(f"graph sizes differ: {G1.n} vs {G2.n}")
    if n > MAX_GED_NODES:
        raise DomainError(f"exact GED is limited to {MAX_GED_NODES} nodes")
    for name, g in (("G1", G1), ("G2", G2)):
        if np.any(g.adjacency > 1.0):
            raise DomainError(f"{name} edge weights must lie in [0, 1]")
    if n == 0:
        return 0.0
    A1, A2 = G1.adjacency, G2.adjacency
    if cost_model.with_labels:
        if G1.d != G2.d:
            raise DomainError("label alphabets differ")
        l1, l2 = G1.labels(), G2.labels()
        relabel = cost_model.label_cost * (l1[:, None] != l2[None, :])
    else:
        relabel = np.zeros((n, n))

    # G2 node j is mapped to G1 node perm[j]
    best = [float(np.abs(A1 - A2).sum() / 2 + np.trace(relabel))]
    perm: list[int] = []
    used = [False] * n

    def search(j: int, cost: float):
        if cost >= best[0]:
            return
        if j == n:
            best[0] = cost
            return
        for u in range(n):
            if used[u]:
                continue
            step = relabel[u, j]
            for jj in range(j):
                step += abs(A1[u, perm[jj]] - A2[j, jj])
            used[u] = True
            perm.append(u)
            search(j + 1, cost + step)
            perm.pop()
            used[u] = False

    search(0, 0.0)
    return float(best[0])
