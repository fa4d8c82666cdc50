"""Wall-clock benchmarks for the kernel paths and the training epoch.

Timings are the minimum over ``repeats`` calls of ``time.perf_counter``
differences; they are inherently machine dependent and are excluded from
the bit-for-bit reproducibility guarantees of the other outputs.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import stats

from .errors import DomainError
from .graph import AttributedGraph, GraphDatabase
from .kernels import KERNELS, KernelConfig
from .learn import Objective, TrainConfig, init_params


@dataclass(frozen=True)
class BenchRow:
    n: int
    m: int
    t: int
    variant: str
    edges: int
    seconds: float
    speedup: float  # naive time over this row's time, 1.0 when no naive row


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


def random_labeled_graph(n: int, num_labels: int, rng: np.random.Generator, p: float | None = None) -> AttributedGraph:
    """Erdos-Renyi graph with uniform random labels; default p keeps mean degree near 4."""
    p = min(1.0, 4.0 / max(n - 1, 1)) if p is None else p
    upper = np.triu(rng.random((n, n)) < p, 1)
    A = (upper | upper.T).astype(float)
    X = np.eye(num_labels)[rng.integers(0, num_labels, size=n)]
    return AttributedGraph(A, X)


def _time(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return float(best)


def kernel_complexity_bench(
    sizes,
    variants=("plus-naive", "plus-fast"),
    num_labels: int = 3,
    repeats: int = 3,
    seed: int = 0,
) -> list[BenchRow]:
    """Time each kernel variant on seeded random graph pairs.

    ``sizes`` is an iterable of ``(n, m, t)``; the input graph has ``n``
    nodes, the hidden graph ``m``.
    """
    for v in variants:
        if v not in KERNELS:
            raise DomainError(f"unknown kernel variant {v!r}")
    rows = []
    for n, m, t in sizes:
        if t < 1:
            raise DomainError("t must be >= 1")
        rng = np.random.default_rng(np.random.SeedSequence([seed, n, m]))
        G = random_labeled_graph(n, num_labels, rng)
        H = random_labeled_graph(m, num_labels, rng, p=0.5)
        cfg = KernelConfig(t=t)
        times = {v: _time(lambda v=v: KERNELS[v](G, H, cfg), repeats) for v in variants}
        naive = times.get("plus-naive")
        for v in variants:
            speedup = naive / times[v] if naive is not None and times[v] > 0 else 1.0
            rows.append(BenchRow(n, m, t, v, G.num_edges, times[v], speedup))
    return rows


def linear_fit(x, y) -> LinearFit:
    r = stats.linregress(np.asarray(x, float), np.asarray(y, float))
    return LinearFit(float(r.slope), float(r.intercept), float(r.rvalue**2))


def random_database(count: int, n_range=(15, 25), num_labels: int = 3, seed: int = 0) -> GraphDatabase:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xDB]))
    sizes = rng.integers(n_range[0], n_range[1] + 1, size=count)
    return GraphDatabase(tuple(random_labeled_graph(int(n), num_labels, rng) for n in sizes))


def epoch_seconds(db: GraphDatabase, cfg: TrainConfig, repeats: int = 3) -> float:
    """Time of one full-batch forward + backward pass of the training objective."""
    obj = Objective(db, cfg)
    params = init_params(cfg, db.d)

    def epoch():
        obj.forward(params)
        obj.backward()

    epoch()  # warm-up
    return _time(epoch, repeats)


def epoch_scaling(db: GraphDatabase, base: TrainConfig, ts=(1, 2, 3, 4, 5, 6, 7, 8), ks=(1, 2, 4, 8, 16), repeats: int = 3):
    """Per-epoch time as ``t`` varies (k fixed) and as ``k`` varies (t fixed).

    Returns ``(t_rows, k_rows)`` of ``(value, seconds)`` pairs.
    """
    t_rows = [(t, epoch_seconds(db, replace(base, kernel_cfg=replace(base.kernel_cfg, t=t, lambdas=None)), repeats)) for t in ts]
    k_rows = [(k, epoch_seconds(db, replace(base, k=k), repeats)) for k in ks]
    return t_rows, k_rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    names = list(BenchRow.__dataclass_fields__)
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for r in rows:
        d = asdict(r)
        d["seconds"] = f"{r.seconds:.6g}"
        d["speedup"] = f"{r.speedup:.4g}"
        w.writerow(d)
    return buf.getvalue()
