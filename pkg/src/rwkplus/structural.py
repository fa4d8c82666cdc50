"""Structural colors: node features from a fixed, randomly initialized
graph-attention network.

The network weights are drawn once from ``seed`` and never trained.  Each
round computes single-head additive attention over the closed neighborhood
(node plus neighbors), averages the projected rows with those weights, and
applies ``tanh`` between rounds.  The final round is mapped through a
row-wise softmax so the appended columns behave like soft node identifiers
in ``[0, 1]``.

Extra node features are appended after the existing columns; train with
``feature_blocks=(d, extra)`` and the softmax feature map so the hidden
graph holds a separate distribution over each block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .graph import AttributedGraph


@dataclass(frozen=True)
class StructuralColorConfig:
    layers: int = 2
    out_dim: int = 8
    seed: int = 0
    attention_heads: int = 1
    # seeded per-node-index input columns; breaks the symmetry of regular
    # unlabeled graphs, where message passing alone gives every node one color
    random_inputs: int = 0
    temperature: float = 1.0
    # z-score each output column over the graph's nodes before the softmax
    standardize: bool = False

    def __post_init__(self):
        if self.layers < 1:
            raise DomainError("structural colors need at least one layer")
        if self.out_dim < 1:
            raise DomainError("structural colors need out_dim >= 1")
        if self.attention_heads < 1:
            raise DomainError("need at least one attention head")
        if self.random_inputs < 0:
            raise DomainError("random_inputs must be nonnegative")
        if not self.temperature > 0:
            raise DomainError("temperature must be positive")

    def to_dict(self) -> dict:
        return dict(vars(self))


def _leaky_relu(x, slope=0.2):
    return np.where(x > 0, x, slope * x)


def _weights(scc: StructuralColorConfig, d_in: int):
    rng = np.random.default_rng(np.random.SeedSequence([scc.seed, d_in]))
    layers = []
    width = d_in
    for _ in range(scc.layers):
        heads = []
        for _ in range(scc.attention_heads):
            W = rng.uniform(-1.0, 1.0, size=(width, scc.out_dim))
            a_src = rng.uniform(-1.0, 1.0, size=scc.out_dim)
            a_dst = rng.uniform(-1.0, 1.0, size=scc.out_dim)
            heads.append((W, a_src, a_dst))
        layers.append(heads)
        width = scc.out_dim
    return layers


def _node_inputs(n: int, scc: StructuralColorConfig) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([scc.seed, 0x5C]))
    # drawn for a fixed maximum size so node i's row does not depend on n
    rows = max(n, 64)
    return rng.uniform(0.0, 1.0, size=(rows, scc.random_inputs))[:n]


def attention_propagate(A: np.ndarray, H: np.ndarray, W, a_src, a_dst) -> np.ndarray:
    h = H @ W
    e = _leaky_relu((h @ a_src)[:, None] + (h @ a_dst)[None, :])
    mask = (A > 0) | np.eye(len(A), dtype=bool)
    e = np.where(mask, e, -np.inf)
    e = e - e.max(axis=1, keepdims=True)
    alpha = np.exp(e)
    alpha /= alpha.sum(axis=1, keepdims=True)
    return alpha @ h


def augment_features(G: AttributedGraph, extra: np.ndarray) -> AttributedGraph:
    return AttributedGraph(G.adjacency, np.hstack([G.features, extra]))


def identity_features(G: AttributedGraph) -> AttributedGraph:
    """One-hot node identifiers; only meaningful across same-sized, aligned graphs."""
    return augment_features(G, np.eye(G.n))


def structural_colors(G: AttributedGraph, scc: StructuralColorConfig) -> AttributedGraph:
    """Return ``G`` with ``scc.out_dim`` structural-color columns added."""
    H = G.features
    if scc.random_inputs:
        H = np.hstack([H, _node_inputs(G.n, scc)])
    for li, heads in enumerate(_weights(scc, H.shape[1])):
        H = np.mean([attention_propagate(G.adjacency, H, *head) for head in heads], axis=0)
        if li < scc.layers - 1:
            H = np.tanh(H)
    if scc.standardize:
        H = (H - H.mean(axis=0)) / (H.std(axis=0) + 1e-12)
    Z = H / scc.temperature
    Z = np.exp(Z - Z.max(axis=1, keepdims=True))
    colors = Z / Z.sum(axis=1, keepdims=True)
    return augment_features(G, colors)
