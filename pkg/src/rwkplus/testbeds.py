"""Synthetic pattern-mining testbeds and the evaluators that score learned patterns.

Label palette (one-hot column order): red=0, blue=1, green=2, purple=3.
Each testbed uses the shortest palette prefix that covers its colors.

Fixture layouts:

* bipartite -- complete bipartite graph, left side red, right side blue.
* triangle chain -- triangles colored red-red-blue (P1) or
  purple-purple-green (P2), vertices ordered (double, single, double).  With
  ``join="shared"`` consecutive triangles of the same kind share a vertex
  (the last of one is the first of the next); a P1/P2 boundary cannot share
  a vertex without mixing the color sets, so it is joined by a bridge edge
  instead.  ``join="bridge"`` always uses bridge edges.
* tailed triangle -- triangle (red, red, green) with a blue tail on the
  green node.
* ring -- 6-cycle labeled red, blue, red, green, red, blue (no two
  neighbors share a color).
* 3-regular -- unlabeled triangular prism.
* 2-regular labeled -- 6-cycle labeled red, red, blue, red, green, green
  (no nontrivial label-preserving automorphism).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError, ResourceError
from .graph import AttributedGraph, GraphDatabase
from .learn import HiddenGraph
from .oracle import MAX_GED_NODES, GedCostModel, brute_force_ged

PALETTE = ("red", "blue", "green", "purple")
RED, BLUE, GREEN, PURPLE = range(4)
MAX_PATTERN_NODES = 8


class TestbedKind(str, enum.Enum):
    BIPARTITE = "bipartite"
    TRIANGLE_CHAIN = "triangle-chain"
    TAILED_TRIANGLE = "tailed-triangle"
    RING = "ring"
    REGULAR3 = "regular3"
    REGULAR2_LABELED = "regular2-labeled"

    __test__ = False


@dataclass(frozen=True)
class TestbedSpec:
    kind: TestbedKind
    count: int = 100
    seed: int = 0
    side_range: tuple[int, int] = (5, 7)
    chain_range: tuple[int, int] = (3, 5)
    p1_probability: float = 0.6
    join: str = "shared"

    __test__ = False

    def __post_init__(self):
        object.__setattr__(self, "kind", TestbedKind(self.kind))
        if self.count < 1:
            raise DomainError("testbed count must be >= 1")
        for name in ("side_range", "chain_range"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise DomainError(f"{name} must be a nonempty range of positive integers")
        if not 0.0 <= self.p1_probability <= 1.0:
            raise DomainError("p1_probability must lie in [0, 1]")
        if self.join not in ("shared", "bridge"):
            raise DomainError(f"unknown chain join {self.join!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "count": self.count,
            "seed": self.seed,
            "side_range": list(self.side_range),
            "chain_range": list(self.chain_range),
            "p1_probability": self.p1_probability,
            "join": self.join,
        }


@dataclass(frozen=True)
class GroundTruthPattern:
    names: tuple[str, ...]
    patterns: tuple[AttributedGraph, ...]
    label_columns: int

    def __len__(self):
        return len(self.patterns)


def _labeled(n, edges, labels, ncolors):
    return AttributedGraph.from_edges(n, edges, labels, PALETTE[:ncolors])


def butterfly() -> AttributedGraph:
    return _labeled(4, [(0, 2), (0, 3), (1, 2), (1, 3)], [RED, RED, BLUE, BLUE], 2)


def star(center: int) -> AttributedGraph:
    leaf = BLUE if center == RED else RED
    return _labeled(4, [(0, 1), (0, 2), (0, 3)], [center, leaf, leaf, leaf], 2)


def triangle(labels) -> AttributedGraph:
    return _labeled(3, [(0, 1), (0, 2), (1, 2)], labels, 4)


P1 = (RED, RED, BLUE)
P2 = (PURPLE, PURPLE, GREEN)


def tailed_triangle() -> AttributedGraph:
    return _labeled(4, [(0, 1), (0, 2), (1, 2), (2, 3)], [RED, RED, GREEN, BLUE], 3)


def _cycle(n):
    return [(i, (i + 1) % n) for i in range(n)]


def ring() -> AttributedGraph:
    return _labeled(6, _cycle(6), [RED, BLUE, RED, GREEN, RED, BLUE], 3)


def regular3() -> AttributedGraph:
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)]
    return AttributedGraph.from_edges(6, edges)


def regular2_labeled() -> AttributedGraph:
    return _labeled(6, _cycle(6), [RED, RED, BLUE, RED, GREEN, GREEN], 3)


def ground_truth(kind: TestbedKind) -> GroundTruthPattern:
    kind = TestbedKind(kind)
    if kind is TestbedKind.BIPARTITE:
        return GroundTruthPattern(
            ("butterfly", "star-red-center", "star-blue-center"),
            (butterfly(), star(RED), star(BLUE)),
            2,
        )
    if kind is TestbedKind.TRIANGLE_CHAIN:
        return GroundTruthPattern(("P1", "P2"), (triangle(P1), triangle(P2)), 4)
    fixed = {
        TestbedKind.TAILED_TRIANGLE: ("tailed-triangle", tailed_triangle, 3),
        TestbedKind.RING: ("ring", ring, 3),
        TestbedKind.REGULAR3: ("3-regular", regular3, 1),
        TestbedKind.REGULAR2_LABELED: ("2-regular", regular2_labeled, 3),
    }
    name, make, cols = fixed[kind]
    return GroundTruthPattern((name,), (make(),), cols)


def complete_bipartite(a: int, b: int) -> AttributedGraph:
    edges = [(i, a + j) for i in range(a) for j in range(b)]
    return _labeled(a + b, edges, [RED] * a + [BLUE] * b, 2)


def triangle_chain(kinds, join: str = "shared") -> AttributedGraph:
    """Chain of triangles; ``kinds`` is a sequence of booleans (True = P1)."""
    edges, labels = [], []
    prev_last, prev_kind = None, None
    for is_p1 in kinds:
        double, single = (P1[0], P1[2]) if is_p1 else (P2[0], P2[2])
        if join == "shared" and prev_kind is not None and bool(is_p1) == prev_kind:
            first = prev_last
        else:
            first = len(labels)
            labels.append(double)
            if prev_last is not None:
                edges.append((prev_last, first))
        mid, last = len(labels), len(labels) + 1
        labels += [single, double]
        edges += [(first, mid), (first, last), (mid, last)]
        prev_last, prev_kind = last, bool(is_p1)
    return _labeled(len(labels), edges, labels, 4)


def generate(spec: TestbedSpec) -> tuple[GraphDatabase, GroundTruthPattern]:
    """Build the database for ``spec``; deterministic in ``spec.seed``."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    kind = spec.kind
    if kind is TestbedKind.BIPARTITE:
        lo, hi = spec.side_range
        sides = rng.integers(lo, hi + 1, size=(spec.count, 2))
        graphs = [complete_bipartite(int(a), int(b)) for a, b in sides]
    elif kind is TestbedKind.TRIANGLE_CHAIN:
        lo, hi = spec.chain_range
        graphs = []
        for _ in range(spec.count):
            c = int(rng.integers(lo, hi + 1))
            graphs.append(triangle_chain(rng.random(c) < spec.p1_probability, spec.join))
    else:
        g = ground_truth(kind).patterns[0]
        graphs = [g] * spec.count
    return GraphDatabase(tuple(graphs)), ground_truth(kind)


# ------------------------------------------------------------- evaluation


def binarize_hidden(
    h: HiddenGraph | AttributedGraph,
    target_edge_count: int | None = None,
    label_columns: int | None = None,
    label_names: tuple[str, ...] | None = None,
) -> AttributedGraph:
    """Keep the ``target_edge_count`` heaviest edges and argmax labels.

    Edges are ranked by weight (for a hidden graph, by the pre-sigmoid
    value, which orders identically but does not saturate); ties go to the
    lexicographically smaller ``(i, j)``.  Labels take the argmax over the
    first ``label_columns`` feature columns, lowest index on ties.  Without
    a target, edges with weight >= 0.5 are kept.
    """
    if isinstance(h, HiddenGraph):
        score = h.symmetric_raw()
        weight = h.adjacency
        feats = np.asarray(h.raw_features)
    else:
        score = weight = h.adjacency
        feats = h.features
    m = weight.shape[0]
    iu, ju = np.triu_indices(m, 1)
    if target_edge_count is None:
        keep = [(i, j) for i, j in zip(iu, ju) if weight[i, j] >= 0.5]
    else:
        if not 0 <= target_edge_count <= len(iu):
            raise DomainError(f"cannot keep {target_edge_count} edges of a {m}-node graph")
        order = sorted(range(len(iu)), key=lambda p: (-score[iu[p], ju[p]], iu[p], ju[p]))
        keep = [(int(iu[p]), int(ju[p])) for p in order[:target_edge_count]]
    cols = feats.shape[1] if label_columns is None else label_columns
    labels = np.argmax(feats[:, :cols], axis=1)
    names = label_names if label_names is not None else tuple(PALETTE[:cols]) if cols <= 4 else None
    return AttributedGraph.from_edges(m, keep, labels.tolist(), names, num_labels=cols)


def _signature(g: AttributedGraph):
    deg = (g.adjacency > 0).sum(axis=1)
    return list(zip(g.labels().tolist(), deg.tolist()))


def is_isomorphic(G1: AttributedGraph, G2: AttributedGraph) -> bool:
    """Label-preserving isomorphism of binary graphs by pruned permutation search."""
    n = G1.n
    if n != G2.n or G1.num_edges != G2.num_edges:
        return False
    if max(n, 0) > MAX_PATTERN_NODES:
        raise ResourceError(f"isomorphism search is limited to {MAX_PATTERN_NODES} nodes")
    s1, s2 = _signature(G1), _signature(G2)
    if sorted(s1) != sorted(s2):
        return False
    A1, A2 = G1.adjacency > 0, G2.adjacency > 0
    perm: list[int] = []
    used = [False] * n

    def extend(j):
        if j == n:
            return True
        for u in range(n):
            if used[u] or s1[u] != s2[j]:
                continue
            if any(A1[u, perm[jj]] != A2[j, jj] for jj in range(j)):
                continue
            used[u] = True
            perm.append(u)
            if extend(j + 1):
                return True
            perm.pop()
            used[u] = False
        return False

    return extend(0)


@dataclass(frozen=True)
class AccuracyReport:
    names: tuple[str, ...]
    matches: np.ndarray  # (restarts, patterns) booleans

    @property
    def per_pattern(self) -> dict[str, float]:
        return {n: float(self.matches[:, i].mean()) for i, n in enumerate(self.names)}

    @property
    def any(self) -> float:
        return float(self.matches.any(axis=1).mean())

    @property
    def joint(self) -> float:
        return float(self.matches.all(axis=1).mean())

    def to_dict(self) -> dict:
        return {
            "restarts": int(self.matches.shape[0]),
            "per_pattern": self.per_pattern,
            "any": self.any,
            "joint": self.joint,
        }


def restart_matches(hidden: list[HiddenGraph | AttributedGraph], patterns: GroundTruthPattern) -> np.ndarray:
    out = np.zeros(len(patterns), dtype=bool)
    for p, pat in enumerate(patterns.patterns):
        if pat.n > MAX_PATTERN_NODES:
            raise ResourceError(f"pattern {patterns.names[p]} has more than {MAX_PATTERN_NODES} nodes")
        for h in hidden:
            m = h.m if isinstance(h, HiddenGraph) else h.n
            if m != pat.n:
                continue
            b = binarize_hidden(h, pat.num_edges, patterns.label_columns)
            if is_isomorphic(b, pat):
                out[p] = True
                break
    return out


def matching_accuracy(learned: list[list[HiddenGraph | AttributedGraph]], patterns: GroundTruthPattern) -> AccuracyReport:
    """Fraction of restarts whose hidden graphs reproduce each pattern.

    ``learned[r]`` holds the hidden graphs of restart ``r``.  ``joint`` is the
    fraction of restarts that match every pattern; ``any`` at least one.
    """
    rows = [restart_matches(h, patterns) for h in learned]
    return AccuracyReport(patterns.names, np.array(rows, dtype=bool).reshape(len(rows), len(patterns)))


def normalized_learned_graph(h: HiddenGraph | AttributedGraph, label_columns: int) -> AttributedGraph:
    """Min-max scale edge weights to [0, 1]; labels from the label columns.

    Constant weights are left unchanged (clipped to [0, 1]).
    """
    if isinstance(h, HiddenGraph):
        W, F = h.adjacency, np.asarray(h.raw_features)
    else:
        W, F = h.adjacency, h.features
    m = W.shape[0]
    iu = np.triu_indices(m, 1)
    w = W[iu]
    lo, hi = (w.min(), w.max()) if w.size else (0.0, 0.0)
    W = (W - lo) / (hi - lo) if hi > lo else np.clip(W, 0.0, 1.0)
    W = W * (1.0 - np.eye(m))
    labels = np.argmax(F[:, :label_columns], axis=1)
    X = np.zeros((m, label_columns))
    X[np.arange(m), labels] = 1.0
    return AttributedGraph(W, X)


@dataclass(frozen=True)
class GedReport:
    values: np.ndarray
    with_labels: bool

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values, ddof=1)) if len(self.values) > 1 else 0.0

    def to_dict(self) -> dict:
        return {"values": self.values.tolist(), "mean": self.mean, "std": self.std, "with_labels": self.with_labels}


def ged_eval(
    learned: list[HiddenGraph | AttributedGraph],
    ground: AttributedGraph,
    with_labels: bool,
    label_columns: int | None = None,
) -> GedReport:
    """Exact GED of each restart's hidden graph to the ground truth."""
    cols = ground.d if label_columns is None else label_columns
    truth = AttributedGraph(ground.adjacency, ground.features[:, :cols])
    values = []
    for h in learned:
        m = h.m if isinstance(h, HiddenGraph) else h.n
        if m != ground.n:
            raise DomainError(f"hidden graph has {m} nodes, ground truth {ground.n}")
        if m > MAX_GED_NODES:
            raise DomainError(f"exact GED is limited to {MAX_GED_NODES} nodes")
        values.append(brute_force_ged(normalized_learned_graph(h, cols), truth, GedCostModel(with_labels)))
    return GedReport(np.array(values), with_labels)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    pvalue: float
    test: str

    __test__ = False


def paired_ttest(a, b) -> TestResult:
    """Paired t-test of two seed-paired samples; Welch's test when the
    variances differ by more than 10x."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.shape != b.shape or a.size < 2:
        raise DomainError("paired test needs two equal-length samples of size >= 2")
    va, vb = np.var(a, ddof=1), np.var(b, ddof=1)
    lo, hi = min(va, vb), max(va, vb)
    if hi > 10 * lo and lo > 0:
        r = stats.ttest_ind(a, b, equal_var=False)
        return TestResult(float(r.statistic), float(r.pvalue), "welch")
    diff = a - b
    if np.all(diff == diff[0]):
        p = 1.0 if diff[0] == 0 else 0.0
        return TestResult(0.0 if diff[0] == 0 else float(np.sign(diff[0]) * np.inf), p, "paired")
    r = stats.ttest_rel(a, b)
    return TestResult(float(r.statistic), float(r.pvalue), "paired")


def graph_to_dot(g: AttributedGraph, name: str = "hidden", label_names=None) -> str:
    """Graphviz text; ``penwidth = 1 + 4 * weight`` so edge strength stays visible."""
    names = label_names or g.label_names
    labels = g.labels()
    lines = [f"graph {json_id(name)} {{", "  node [style=filled, fontcolor=white];"]
    for i in range(g.n):
        color = names[labels[i]] if names and labels[i] < len(names) else "gray"
        lines.append(f"  {i} [fillcolor={color}];")
    W = g.adjacency
    for i, j in zip(*np.triu_indices(g.n, 1)):
        if W[i, j] > 0:
            lines.append(f"  {i} -- {j} [weight={W[i, j]:.4g}, penwidth={1 + 4 * W[i, j]:.3g}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def json_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'
