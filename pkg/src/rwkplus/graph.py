"""Graph containers, product-graph constructions and the JSON file format.

Node pairs of a product graph are always ordered u-major: pair ``(u, v)`` with
``u`` in G and ``v`` in H sits at index ``u * m + v``.  This is the order of
``np.kron(A_G, A_H)`` and of ``(X_G @ X_H.T).ravel()``, so the color-matching
vector and the Kronecker adjacency line up without any reshuffling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import DomainError, ResourceError, ValidationError

#: default cap on the number of dense entries of an explicit product adjacency
PRODUCT_SIZE_CAP = 10**6


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def is_one_hot(X: np.ndarray) -> bool:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] == 0:
        return False
    binary = np.all((X == 0.0) | (X == 1.0))
    return bool(binary and np.all(X.sum(axis=1) == 1.0))


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """Undirected node-attributed graph.

    ``adjacency`` is a symmetric nonnegative ``n x n`` matrix with an empty
    diagonal; ``features`` holds one row per node.  When ``label_names`` is
    given the features must be one-hot and column ``j`` is label ``label_names[j]``.
    """

    adjacency: np.ndarray
    features: np.ndarray
    label_names: tuple[str, ...] | None = None
    _edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = _frozen(self.adjacency)
        X = _frozen(self.features)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValidationError(f"adjacency must be square, got shape {A.shape}", "adjacency")
        n = A.shape[0]
        if X.ndim != 2 or X.shape[0] != n:
            raise ValidationError(f"features must have {n} rows, got shape {X.shape}", "features")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(X)):
            raise ValidationError("non-finite entry", "adjacency")
        if not np.array_equal(A, A.T):
            i, j = np.argwhere(A != A.T)[0]
            raise ValidationError("adjacency is not symmetric", f"adjacency[{i}][{j}]")
        if np.any(np.diag(A) != 0.0):
            i = int(np.flatnonzero(np.diag(A))[0])
            raise ValidationError("self-loops are not allowed", f"adjacency[{i}][{i}]")
        if np.any(A < 0):
            i, j = np.argwhere(A < 0)[0]
            raise ValidationError("negative edge weight", f"adjacency[{i}][{j}]")
        labels = self.label_names
        if labels is not None:
            labels = tuple(str(s) for s in labels)
            if len(labels) != X.shape[1]:
                raise ValidationError(
                    f"{len(labels)} label names for {X.shape[1]} feature columns", "labels"
                )
            if n and not is_one_hot(X):
                raise ValidationError("labeled graph needs one-hot feature rows", "features")
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "label_names", labels)
        iu, ju = np.nonzero(np.triu(A))
        edges = np.stack([iu, ju], axis=1) if iu.size else np.zeros((0, 2), dtype=np.intp)
        edges.setflags(write=False)
        object.__setattr__(self, "_edges", edges)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def edges(self) -> np.ndarray:
        """Undirected edge list ``(i, j)`` with ``i < j``, shape ``(e, 2)``."""
        return self._edges

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    @property
    def is_labeled(self) -> bool:
        return is_one_hot(self.features)

    def labels(self) -> np.ndarray:
        """Integer label per node (argmax of the feature row)."""
        return np.argmax(self.features, axis=1)

    def with_features(self, features, label_names=None) -> "AttributedGraph":
        return AttributedGraph(self.adjacency, features, label_names)

    def __eq__(self, other):
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        return (
            np.array_equal(self.adjacency, other.adjacency)
            and np.array_equal(self.features, other.features)
            and self.label_names == other.label_names
        )

    __hash__ = None

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        labels: Sequence[int] | None = None,
        label_names: Sequence[str] | None = None,
        num_labels: int | None = None,
    ) -> "AttributedGraph":
        """Build a binary graph from an edge list and optional integer labels.

        Without ``labels`` every node gets the single constant feature 1.
        """
        A = np.zeros((n, n))
        for i, j in edges:
            if i == j:
                raise ValidationError("self-loops are not allowed", "edges")
            A[i, j] = A[j, i] = 1.0
        if labels is None:
            return cls(A, np.ones((n, 1)))
        k = num_labels if num_labels is not None else (
            len(label_names) if label_names is not None else max(labels) + 1
        )
        X = np.zeros((n, k))
        X[np.arange(n), list(labels)] = 1.0
        names = tuple(label_names) if label_names is not None else tuple(str(i) for i in range(k))
        return cls(A, X, names)


@dataclass(frozen=True, eq=False)
class GraphDatabase:
    graphs: tuple[AttributedGraph, ...]

    def __post_init__(self):
        graphs = tuple(self.graphs)
        if not graphs:
            raise ValidationError("graph database is empty", "graphs")
        d = graphs[0].d
        for i, g in enumerate(graphs):
            if g.d != d:
                raise ValidationError(f"feature dimension {g.d} != {d}", f"graphs[{i}].d")
        object.__setattr__(self, "graphs", graphs)

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]

    def __eq__(self, other):
        if not isinstance(other, GraphDatabase):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self, other))

    __hash__ = None

    @property
    def d(self) -> int:
        return self.graphs[0].d

    def map_features(self, fn) -> "GraphDatabase":
        return GraphDatabase(tuple(fn(g) for g in self.graphs))

    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        """Stack into zero-padded arrays ``A (B, N, N)`` and ``X (B, N, d)``.

        Padding nodes have no edges and zero features, so they contribute
        nothing to any kernel in this package.
        """
        N = max(g.n for g in self.graphs)
        B = len(self.graphs)
        A = np.zeros((B, N, N))
        X = np.zeros((B, N, self.d))
        for b, g in enumerate(self.graphs):
            A[b, : g.n, : g.n] = g.adjacency
            X[b, : g.n] = g.features
        return A, X


@dataclass(frozen=True, eq=False)
class ProductGraph:
    adjacency: np.ndarray
    node_pairs: np.ndarray
    empty_mask: np.ndarray

    @property
    def size(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency)))


def _pairs(n: int, m: int) -> np.ndarray:
    u, v = np.divmod(np.arange(n * m), m)
    return np.stack([u, v], axis=1)


def check_product_size(n: int, m: int, cap: int = PRODUCT_SIZE_CAP) -> None:
    if (n * m) ** 2 > cap:
        raise ResourceError(
            f"explicit product graph needs {(n * m) ** 2} entries (> cap {cap}); "
            "use the iterative kernel (rwk_plus_fast) instead"
        )


def kronecker_adjacency(G: AttributedGraph, H: AttributedGraph, cap: int = PRODUCT_SIZE_CAP) -> ProductGraph:
    """Adjacency of the Kronecker product graph on all node pairs."""
    check_product_size(G.n, H.n, cap)
    A = np.kron(G.adjacency, H.adjacency)
    return ProductGraph(A, _pairs(G.n, H.n), np.zeros(G.n * H.n, dtype=bool))


def match_vector(G: AttributedGraph, H: AttributedGraph) -> np.ndarray:
    """``s = vec(X_H X_G^T)``: feature similarity of every node pair, u-major."""
    if G.d != H.d:
        raise DomainError(f"feature dimensions differ: {G.d} vs {H.d}")
    return (G.features @ H.features.T).ravel()


def direct_product(G: AttributedGraph, H: AttributedGraph, cap: int = PRODUCT_SIZE_CAP) -> ProductGraph:
    """Label-matching direct product, padded with isolated "empty" pairs.

    Keeps the Kronecker node set so that the result equals
    ``diag(s) (A_G kron A_H) diag(s)`` entrywise.
    """
    for name, g in (("G", G), ("H", H)):
        if not is_one_hot(g.features):
            raise DomainError(f"direct product needs one-hot labels; {name} is not labeled")
    kron = kronecker_adjacency(G, H, cap)
    s = match_vector(G, H)
    A = np.outer(s, s) * kron.adjacency
    return ProductGraph(A, kron.node_pairs, s == 0.0)


def degree_normalize(A) -> np.ndarray:
    """``D^-1/2 A D^-1/2``; isolated nodes keep all-zero rows."""
    A = np.asarray(A, dtype=np.float64)
    deg = A.sum(axis=-1)
    with np.errstate(divide="ignore"):
        r = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    return A * (r[..., :, None] * r[..., None, :])


# --------------------------------------------------------------------- JSON


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValidationError(f"cannot serialize non-finite value {x!r}")
    if x == 0.0 and math.copysign(1.0, x) < 0:
        return "-0.0"  # "-0" would load back as the integer 0 and lose the sign
    return f"{x:.17g}"


def dumps_canonical(obj) -> str:
    """Deterministic JSON: sorted keys, compact separators, floats at 17 digits."""
    if isinstance(obj, dict):
        items = (json.dumps(str(k)) + ":" + dumps_canonical(v) for k, v in sorted(obj.items()))
        return "{" + ",".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps_canonical(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return dumps_canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def graph_to_dict(g: AttributedGraph) -> dict:
    doc = {
        "n": g.n,
        "d": g.d,
        "adjacency": [[float(x) for x in row] for row in g.adjacency],
        "features": [[float(x) for x in row] for row in g.features],
    }
    if g.label_names is not None:
        doc["labels"] = list(g.label_names)
    return doc


def _matrix(doc, key: str, rows: int, cols: int, path: str) -> np.ndarray:
    if key not in doc:
        raise ValidationError("missing field", f"{path}.{key}")
    value = doc[key]
    if not isinstance(value, list) or len(value) != rows:
        raise ValidationError(f"expected {rows} rows", f"{path}.{key}")
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            raise ValidationError(f"expected {cols} columns", f"{path}.{key}[{i}]")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ValidationError("expected a number", f"{path}.{key}[{i}][{j}]")
    return np.array(value, dtype=np.float64).reshape(rows, cols)


def graph_from_dict(doc, path: str = "$") -> AttributedGraph:
    if not isinstance(doc, dict):
        raise ValidationError("expected an object", path)
    for key in ("n", "d"):
        if not isinstance(doc.get(key), int) or isinstance(doc.get(key), bool) or doc[key] < 0:
            raise ValidationError("expected a nonnegative integer", f"{path}.{key}")
    n, d = doc["n"], doc["d"]
    A = _matrix(doc, "adjacency", n, n, path)
    X = _matrix(doc, "features", n, d, path)
    labels = doc.get("labels")
    if labels is not None and (
        not isinstance(labels, list) or not all(isinstance(s, str) for s in labels)
    ):
        raise ValidationError("expected a list of strings", f"{path}.labels")
    try:
        return AttributedGraph(A, X, labels)
    except ValidationError as exc:
        raise ValidationError(str(exc).split(": ", 1)[-1], f"{path}.{exc.path}") from None


def database_to_dict(db: GraphDatabase) -> dict:
    return {"graphs": [graph_to_dict(g) for g in db]}


def database_from_dict(doc) -> GraphDatabase:
    if not isinstance(doc, dict) or not isinstance(doc.get("graphs"), list):
        raise ValidationError("expected an object with a 'graphs' list", "$.graphs")
    graphs = tuple(graph_from_dict(g, f"$.graphs[{i}]") for i, g in enumerate(doc["graphs"]))
    return GraphDatabase(graphs)


def _read(source) -> object:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc.msg} at line {exc.lineno}", "$") from None


def _write(text: str, target) -> None:
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text, encoding="utf-8")


def load_graph(source: str | Path | IO[str]) -> AttributedGraph:
    return graph_from_dict(_read(source))


def save_graph(g: AttributedGraph, target: str | Path | IO[str]) -> None:
    _write(dumps_canonical(graph_to_dict(g)) + "\n", target)


def load_database(source: str | Path | IO[str]) -> GraphDatabase:
    return database_from_dict(_read(source))


def save_database(db: GraphDatabase, target: str | Path | IO[str]) -> None:
    _write(dumps_canonical(database_to_dict(db)) + "\n", target)
