"""Acceptance criteria 1-9.

Each test records a one-line PASS/FAIL summary that is printed at the end of
the pytest run.  Training criteria run the named experiment profiles at desk
scale (50 restarts, seed 0).
"""

import filecmp
import time
from dataclasses import replace

import numpy as np

from rwkplus import cli
from rwkplus.bench import epoch_scaling, kernel_complexity_bench, linear_fit, random_database
from rwkplus.graph import GraphDatabase
from rwkplus.kernels import KernelConfig, StepNormState, rwk_labeled, rwk_plus_fast, rwk_plus_naive, rwk_rwnn, rwk_rwnn_efficient
from rwkplus.experiments import evaluate, get_profile, run
from rwkplus.learn import HiddenGraph, TrainConfig, backward, objective
from rwkplus.oracle import enumerate_common_walks, finite_difference_gradient
from rwkplus.rwkconv import RwkConvLayer, rwkconv_backward, rwkconv_forward
from rwkplus.testbeds import paired_ttest

from conftest import ACCEPTANCE_LINES, random_graph

_cache: dict = {}


def record(n, ok, detail):
    ACCEPTANCE_LINES[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"


def profile_report(name):
    if name not in _cache:
        prof = get_profile(name)
        start = time.perf_counter()
        result = run(prof)
        _cache[name] = (evaluate(prof, result), time.perf_counter() - start)
    return _cache[name]


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))) if a.size else 0.0


# ------------------------------------------------------------- criterion 1


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        d = int(rng.integers(1, 4))
        G = random_graph(rng, int(rng.integers(1, 7)), d, p=float(rng.uniform(0.2, 0.8)))
        H = random_graph(rng, int(rng.integers(1, 7)), d, p=float(rng.uniform(0.2, 0.8)))
        t = int(rng.integers(1, 5))
        cfg = KernelConfig(t=t)
        oracle = np.array(enumerate_common_walks(G, H, t).counts)
        labeled = rwk_labeled(G, H, cfg).per_step
        naive = rwk_plus_naive(G, H, cfg).per_step
        if not (np.array_equal(labeled, oracle) and np.array_equal(naive, oracle)):
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    record(1, ok, f"200 labeled pairs, {mismatches} mismatches, {elapsed:.1f}s")
    assert ok


# ------------------------------------------------------------- criterion 2


def test_criterion_2_reformulation_equivalence():
    rng = np.random.default_rng(7)
    plus_err = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 6))
        G = random_graph(rng, int(rng.integers(1, 21)), d, labeled=bool(rng.integers(0, 2)), weighted=True)
        H = random_graph(rng, int(rng.integers(1, 7)), d, labeled=False, weighted=True)
        cfg = KernelConfig(t=int(rng.integers(1, 7)))
        plus_err = max(plus_err, rel_err(rwk_plus_fast(G, H, cfg).per_step, rwk_plus_naive(G, H, cfg).per_step))
    rwnn_err = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 6))
        G = random_graph(rng, int(rng.integers(1, 21)), d, labeled=False, weighted=True)
        H = random_graph(rng, int(rng.integers(1, 7)), d, labeled=False, weighted=True)
        cfg = KernelConfig(t=int(rng.integers(1, 7)))
        rwnn_err = max(rwnn_err, rel_err(rwk_rwnn_efficient(G, H, cfg).per_step, rwk_rwnn(G, H, cfg).per_step))
    ok = plus_err <= 1e-8 and rwnn_err <= 1e-10
    record(2, ok, f"fast vs naive max rel err {plus_err:.2e}, rwnn factorized vs explicit {rwnn_err:.2e}")
    assert ok


# ------------------------------------------------------------- criterion 3


def rel_err_scaled(got, want):
    return float(np.abs(got - want).max() / max(np.abs(want).max(), 1e-12))


def _loss_gradient_error(seed, method, norm):
    rng = np.random.default_rng(seed)
    db = GraphDatabase(tuple(random_graph(rng, int(rng.integers(3, 7)), 2) for _ in range(5)))
    t, k = 3, 2
    cfg = TrainConfig(
        k=k, m=3, kernel_cfg=KernelConfig(t=t, normalization=norm), method=method,
        diversity_weight=0.5, sparsity_weight=0.2, sparsity_on_features=True, feature_map="softmax",
    )
    sn = None
    if norm == "stepnorm":
        sn = StepNormState.create(t=t, k=k)
        sn.gamma, sn.beta = rng.uniform(0.5, 1.5, t), rng.uniform(-0.5, 0.5, t)
    params = {"A": rng.normal(size=(k, 3, 3)), "F": rng.normal(size=(k, 3, 2))}
    if sn is not None:
        params["gamma"], params["beta"] = sn.gamma.copy(), sn.beta.copy()

    def build(p):
        hs = [HiddenGraph(p["A"][i], p["F"][i], "softmax") for i in range(k)]
        s = None if sn is None else replace(sn, gamma=p["gamma"], beta=p["beta"])
        return hs, s

    want = finite_difference_gradient(lambda p: objective(db, build(p)[0], cfg, build(p)[1])[0], params)
    got = backward(db, build(params)[0], cfg, build(params)[1])
    pairs = [(got.d_raw_adjacency, want["A"]), (got.d_raw_features, want["F"])]
    if sn is not None:
        pairs += [(got.d_gamma, want["gamma"]), (got.d_beta, want["beta"])]
    return max(rel_err_scaled(g, w) for g, w in pairs)


def test_criterion_3_gradients():
    loss_err = max(
        _loss_gradient_error(seed, method, norm)
        for seed in range(3)
        for method in ("plus", "rwnn")
        for norm in ("stepnorm", "degree")
    )
    conv_err = 0.0
    for seed in range(3):
        rng = np.random.default_rng(100 + seed)
        layer = RwkConvLayer.create(m=4, d_in=2, t=3, seed=seed)
        layer.weight = layer.weight + 0.1 * rng.normal(size=layer.weight.shape)
        U = np.triu(rng.random((6, 6)) < 0.5, 1).astype(float)
        A = U + U.T
        X = rng.normal(size=(6, 2))
        out, cache = rwkconv_forward(X, A, layer)
        W = rng.normal(size=out.shape)
        got = rwkconv_backward(cache, W)

        def loss(p):
            lay = RwkConvLayer(p["features"], p["theta"], p["weight"], p["bias"], 3)
            return float((rwkconv_forward(p["X"], A, lay)[0] * W).sum())

        params = {**layer.param_dict(), "X": X}
        want = finite_difference_gradient(loss, params)
        conv_err = max(conv_err, max(rel_err_scaled(got[k], want[k]) for k in params))
    ok = loss_err <= 1e-4 and conv_err <= 1e-4
    record(3, ok, f"full loss max rel err {loss_err:.2e}, rwkconv {conv_err:.2e}")
    assert ok


# ------------------------------------------------------------- criterion 4


def test_criterion_4_task_1_1():
    plus, t_plus = profile_report("task1-1/plus-last-t2")
    rwnn_last, t_last = profile_report("task1-1/rwnn-last-t2")
    rwnn_sum, t_sum = profile_report("task1-1/rwnn-sum-t3")
    elapsed = t_plus + t_last + t_sum
    ok = plus.any >= 0.9 and rwnn_last.any <= 0.1 and rwnn_sum.any >= 0.9 and elapsed <= 600
    record(4, ok, f"accuracy RWK+ last t=2 {plus.any:.0%}, RWNN last t=2 {rwnn_last.any:.0%}, "
                  f"RWNN sum t=3 {rwnn_sum.any:.0%} ({elapsed:.0f}s)")
    assert ok


# ------------------------------------------------------------- criterion 5


def test_criterion_5_task_1_2():
    plain, t1 = profile_report("task1-2/plus-k4")
    div, t2 = profile_report("task1-2/plus-k4-div")
    rwnn, t3 = profile_report("task1-2/rwnn-k4")
    elapsed = t1 + t2 + t3
    ok = div.joint > plain.joint and rwnn.joint == 0.0 and elapsed <= 1200
    record(5, ok, f"Both accuracy with diversity {div.joint:.0%} vs without {plain.joint:.0%}, "
                  f"RWNN {rwnn.joint:.0%} ({elapsed:.0f}s)")
    assert ok


# ------------------------------------------------------------- criterion 6


def test_criterion_6_task_2_1():
    parts, ok = [], True
    for kind in ("tailed-triangle", "ring"):
        for t in (2, 4, 6):
            plus, _ = profile_report(f"task2-1/{kind}/plus-t{t}")
            rwnn, _ = profile_report(f"task2-1/{kind}/rwnn-t{t}")
            test = paired_ttest(plus.values, rwnn.values)
            good = plus.mean < rwnn.mean and test.pvalue < 0.05
            ok &= good
            parts.append(f"{kind} t={t} {plus.mean:.2f} vs {rwnn.mean:.2f} p={test.pvalue:.1g}")
    record(6, ok, "labeled GED RWK+ vs RWNN: " + "; ".join(parts))
    assert ok


# ------------------------------------------------------------- criterion 7


def test_criterion_7_task_2_2():
    reg3 = {name: profile_report(f"task2-2/regular3/{name}")[0] for name in
            ("rwnn-none", "rwnn-identity", "rwnn-sc", "plus-identity", "plus-sc")}
    best_rwnn = min(reg3[n].mean for n in ("rwnn-none", "rwnn-identity", "rwnn-sc"))
    identity = reg3["plus-identity"].mean
    sc = reg3["plus-sc"].mean
    none2, _ = profile_report("task2-2/regular2/plus-none")
    sc2, _ = profile_report("task2-2/regular2/plus-sc")
    test = paired_ttest(sc2.values, none2.values)
    checks = {
        "identity beats RWNN": identity < best_rwnn,
        "SC within 10% of identity": sc <= 1.1 * identity,
        "SC lowers 2-regular GED": sc2.mean < none2.mean and test.pvalue < 0.05,
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    record(7, ok, f"3-regular structure GED identity {identity:.2f}, SC {sc:.2f}, best RWNN {best_rwnn:.2f}; "
                  f"2-regular labeled GED SC {sc2.mean:.2f} vs none {none2.mean:.2f} p={test.pvalue:.1g}"
                  + (f"; failed: {', '.join(failed)}" if failed else ""))
    assert ok


# ------------------------------------------------------------- criterion 8


def test_criterion_8_scalability():
    rows = kernel_complexity_bench([(100, 6, 2), (150, 6, 2)], repeats=3, seed=0)
    speedups = [r.speedup for r in rows if r.variant == "plus-fast"]
    db = random_database(50, seed=0)
    base = TrainConfig(k=1, m=6, kernel_cfg=KernelConfig(t=2))
    t_rows, k_rows = epoch_scaling(db, base, repeats=5)
    ft, fk = linear_fit(*zip(*t_rows)), linear_fit(*zip(*k_rows))
    ok = min(speedups) > 1.0 and ft.r2 >= 0.9 and fk.r2 >= 0.9
    record(8, ok, f"fast/naive speedup at n=100,150: {speedups[0]:.0f}x, {speedups[1]:.0f}x; "
                  f"epoch time linear fit R^2 vs t {ft.r2:.3f}, vs k {fk.r2:.3f}")
    assert ok


# ------------------------------------------------------------- criterion 9


def _pipeline(root):
    steps = [
        ["generate", "--kind", "bipartite", "--count", "20", "--seed", "3", "--out", str(root / "gen")],
        ["train", "--db", str(root / "gen" / "database.json"), "--k", "1", "--m", "4", "--t", "2", "--mode", "last",
         "--lr", "1e-5", "--restarts", "4", "--epochs", "15", "--seed", "3", "--norm", "stepnorm", "--out", str(root / "run")],
        ["eval", str(root / "run"), "--truth", str(root / "gen" / "ground_truth.json")],
        ["train", "--profile", "task2-2/regular2/plus-sc", "--restarts", "3", "--epochs", "5", "--out", str(root / "prof")],
        ["eval", str(root / "prof")],
        ["export-dot", str(root / "run" / "state.json"), "--edges", "4", "--label-columns", "2", "--out", str(root / "dot" / "h.dot"), "--png"],
    ]
    for argv in steps:
        assert cli.main(argv) == 0, argv


def _tree_identical(a, b):
    cmp = filecmp.dircmp(a, b)
    files = [f for f in cmp.common_files]
    _, mismatch, errors = filecmp.cmpfiles(a, b, files, shallow=False)
    if cmp.left_only or cmp.right_only or mismatch or errors:
        return False, mismatch + cmp.left_only + cmp.right_only
    for sub in cmp.common_dirs:
        same, bad = _tree_identical(a / sub, b / sub)
        if not same:
            return False, bad
    return True, []


def test_criterion_9_determinism(tmp_path, capsys):
    for name in ("first", "second"):
        _pipeline(tmp_path / name)
    capsys.readouterr()
    same, bad = _tree_identical(tmp_path / "first", tmp_path / "second")
    count = sum(1 for p in (tmp_path / "first").rglob("*") if p.is_file())
    record(9, same, f"{count} artifacts from generate/train/eval/export-dot compared byte for byte"
                    + (f"; differing: {bad}" if bad else ""))
    assert same
