"""Command-line interface: ``rwkplus <command> ...``.

Exit codes: 0 success, 2 usage or validation error, 3 numeric failure,
4 resource guard.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import logging
import os
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .bench import epoch_scaling, kernel_complexity_bench, linear_fit, random_database, rows_to_csv
from .errors import DomainError, ResourceError, TrainingError, ValidationError
from .experiments import PROFILES, evaluate, get_profile, prepare, summarize
from .graph import GraphDatabase, dumps_canonical, load_database, load_graph, save_database
from .kernels import KERNELS, KernelConfig
from .learn import TrainConfig, TrainResult, train
from .testbeds import (
    PALETTE,
    GedReport,
    GroundTruthPattern,
    TestbedKind,
    TestbedSpec,
    binarize_hidden,
    generate,
    ged_eval,
    graph_to_dot,
    matching_accuracy,
    normalized_learned_graph,
    paired_ttest,
)

log = logging.getLogger("rwkplus")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_RESOURCE = 0, 2, 3, 4


# ------------------------------------------------------------------ helpers


def _git_hash() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 else "unknown"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _write_json(path: Path, doc) -> Path:
    return _write(path, dumps_canonical(doc) + "\n")


def write_manifest(out: Path, command: str, seed, config: dict) -> Path:
    """Provenance record; no timestamps or absolute paths, so reruns match byte for byte."""
    digest = hashlib.sha256(dumps_canonical(config).encode()).hexdigest()
    doc = {
        "command": command,
        "version": __version__,
        "git": _git_hash(),
        "seed": seed,
        "config": config,
        "config_digest": digest,
    }
    return _write_json(out / "manifest.json", doc)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() and abs(x) < 2**53 else f"{x:.10g}"


@contextlib.contextmanager
def thread_limit(n: int | None):
    if not n:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=n):
        yield


# ----------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    spec = TestbedSpec(args.kind, count=args.count, seed=args.seed, join=args.join)
    db, truth = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_database(db, out / "database.json")
    save_database(GraphDatabase(truth.patterns), out / "ground_truth.json")
    write_manifest(out, "generate", args.seed, {"testbed": spec.to_dict(), "patterns": list(truth.names)})
    print(f"wrote {len(db)} graphs to {out / 'database.json'}")
    return EXIT_OK


# -------------------------------------------------------------------- train


def _train_config_from_args(args) -> TrainConfig:
    kc = KernelConfig(t=args.t, objective_mode=args.mode, normalization=args.norm)
    return TrainConfig(
        k=args.k,
        m=args.m,
        kernel_cfg=kc,
        method=args.method,
        lr=args.lr,
        momentum=args.momentum,
        epochs=args.epochs or 300,
        diversity_weight=args.diversity,
        sparsity_weight=args.sparsity,
        sparsity_on_features=args.sparsity_features,
        seed=args.seed if args.seed is not None else 0,
        restarts=args.restarts or 1,
        feature_map=args.feature_map,
    )


def _loss_csv(trace: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch"] + [f"restart_{r}" for r in range(trace.shape[0])] + ["mean"])
    for e in range(trace.shape[1]):
        col = trace[:, e]
        w.writerow([e] + [f"{v:.17g}" for v in col] + [f"{col.mean():.17g}"])
    return buf.getvalue()


def _save_run(out: Path, result: TrainResult, run_config: dict) -> None:
    _write_json(out / "state.json", result.checkpoint())
    for r in range(result.params.raw_adjacency.shape[0]):
        _write_json(out / "checkpoints" / f"restart-{r:03d}.json", result.checkpoint(r))
    _write(out / "loss.csv", _loss_csv(result.loss_trace))
    plotting.loss_curves(result.loss_trace, out / "loss.png")
    write_manifest(out, "train", result.cfg.seed, run_config)


def cmd_train(args) -> int:
    out = Path(args.out)
    if args.profile:
        profile = get_profile(args.profile)
        db, _, cfg = prepare(profile)
        if args.restarts:
            cfg = replace(cfg, restarts=args.restarts)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.epochs:
            cfg = replace(cfg, epochs=args.epochs)
        source = {"profile": profile.name}
    elif args.db:
        db = load_database(args.db)
        cfg = _train_config_from_args(args)
        source = {"database_sha256": hashlib.sha256(Path(args.db).read_bytes()).hexdigest()}
    else:
        raise ValidationError("train needs --profile or --db", "train")

    resume = None
    if args.resume:
        resume = TrainResult.from_checkpoint(json.loads(Path(args.resume).read_text(encoding="utf-8")))
        total = resume.epoch + args.more_epochs if args.more_epochs else resume.cfg.epochs
        cfg = replace(resume.cfg, epochs=total)
        resume = replace(resume, cfg=cfg)
        result = train(db, cfg, resume=resume)
    else:
        result = train(db, cfg)
    run_config = {**source, "train": result.cfg.to_dict(), "epochs_done": result.epoch}
    _save_run(out, result, run_config)
    print(f"trained {result.params.raw_adjacency.shape[0]} restarts for {result.epoch} epochs; "
          f"final mean loss {result.loss_trace[:, -1].mean():.6g}")
    return EXIT_OK


# --------------------------------------------------------------------- eval


def _load_run(run: Path):
    manifest = json.loads((run / "manifest.json").read_text(encoding="utf-8"))
    result = TrainResult.from_checkpoint(json.loads((run / "state.json").read_text(encoding="utf-8")))
    return manifest, result


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    line = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    return "\n".join([line(header), line(["-" * w for w in widths])] + [line(r) for r in rows]) + "\n"


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _evaluate_run(run: Path, args):
    manifest, result = _load_run(run)
    name = manifest["config"].get("profile")
    if name and not args.truth:
        return name, evaluate(get_profile(name), result)
    if not args.truth:
        raise ValidationError("runs trained from --db need --truth", "eval")
    patterns = load_database(args.truth)
    m = result.params.raw_adjacency.shape[2]
    if any(p.n != m for p in patterns):
        raise ValidationError(f"hidden graphs have {m} nodes but the ground truth has {[p.n for p in patterns]}", "truth")
    if args.mode == "accuracy":
        gt = GroundTruthPattern(tuple(f"pattern-{i}" for i in range(len(patterns))), patterns.graphs, patterns.d)
        return run.name, matching_accuracy(result.restarts, gt)
    truth = patterns[0]
    learned = [h[0] for h in result.restarts]
    return run.name, ged_eval(learned, truth, args.with_labels, label_columns=truth.d)


def cmd_eval(args) -> int:
    runs = [Path(r) for r in args.run]
    out = Path(args.out) if args.out else runs[0]
    reports = [_evaluate_run(r, args) for r in runs]
    kinds = {type(rep) for _, rep in reports}
    if len(kinds) > 1:
        raise ValidationError("cannot mix accuracy and GED runs in one report", "run")
    if isinstance(reports[0][1], GedReport):
        base = reports[0][1]
        header = ["run", "GED", "p-value vs first", "test"]
        rows = []
        for name, rep in reports:
            if rep is base:
                rows.append([name, f"{rep.mean:.2f} ± {rep.std:.2f}", "-", "-"])
            else:
                tt = paired_ttest(base.values, rep.values)
                rows.append([name, f"{rep.mean:.2f} ± {rep.std:.2f}", f"{tt.pvalue:.2g}", tt.test])
        plotting.ged_boxes({n: r.values for n, r in reports}, out / "ged.png")
    else:
        cols = list(reports[0][1].names)
        header = ["run"] + [f"{c} Acc." for c in cols] + ["Any Acc.", "Both Acc."]
        rows = [
            [name] + [f"{100 * rep.per_pattern[c]:.0f}%" for c in cols] + [f"{100 * rep.any:.0f}%", f"{100 * rep.joint:.0f}%"]
            for name, rep in reports
        ]
        plotting.accuracy_bars({n: {**r.per_pattern, "any": r.any, "both": r.joint} for n, r in reports}, out / "accuracy.png")
    text = _table(header, rows)
    _write(out / "report.txt", text)
    _write(out / "report.csv", _rows_csv(header, rows))
    _write_json(out / "report.json", {name: summarize(rep) for name, rep in reports})
    sys.stdout.write(text)
    return EXIT_OK


# ------------------------------------------------------------------- kernel


def cmd_kernel(args) -> int:
    G, H = load_graph(args.graph_a), load_graph(args.graph_b)
    cfg = KernelConfig(t=args.t, objective_mode=args.mode, normalization=args.norm)
    variants = list(KERNELS) if args.variant == "all" else [args.variant]
    for v in variants:
        scores = KERNELS[v](G, H, cfg)
        text = " ".join(_fmt(x) for x in scores.per_step)
        print(f"{v}: {text}" if len(variants) > 1 else text)
    return EXIT_OK


# -------------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    out = Path(args.out)
    sizes = [(n, m, t) for n in args.n for m in args.m for t in args.t]
    rows = kernel_complexity_bench(sizes, args.variants.split(","), repeats=args.repeats, seed=args.seed)
    _write(out / "bench.csv", rows_to_csv(rows))
    plotting.bench_runtime(rows, out / "bench.png")
    sys.stdout.write(rows_to_csv(rows))
    if args.epoch_scaling:
        db = random_database(args.db_size, seed=args.seed)
        base = TrainConfig(k=1, m=6, kernel_cfg=KernelConfig(t=2), seed=args.seed)
        t_rows, k_rows = epoch_scaling(db, base, repeats=args.repeats)
        ft, fk = linear_fit(*zip(*t_rows)), linear_fit(*zip(*k_rows))
        buf = ["axis,value,seconds"] + [f"t,{v},{s:.6g}" for v, s in t_rows] + [f"k,{v},{s:.6g}" for v, s in k_rows]
        _write(out / "epoch_scaling.csv", "\n".join(buf) + "\n")
        _write_json(out / "epoch_fit.json", {"t": vars(ft), "k": vars(fk)})
        plotting.epoch_scaling(t_rows, k_rows, out / "epoch_scaling.png")
        print(f"epoch time vs t: R^2 = {ft.r2:.3f}; vs k: R^2 = {fk.r2:.3f}")
    write_manifest(out, "bench", args.seed, {"sizes": sizes, "variants": args.variants, "repeats": args.repeats})
    return EXIT_OK


# --------------------------------------------------------------- export-dot


def cmd_export_dot(args) -> int:
    doc = json.loads(Path(args.source).read_text(encoding="utf-8"))
    if doc.get("format") == "rwkplus-checkpoint/1":
        result = TrainResult.from_checkpoint(doc)
        R, k = result.params.raw_adjacency.shape[:2]
        if not (0 <= args.restart < R and 0 <= args.hidden < k):
            raise ValidationError(f"checkpoint has {R} restarts of {k} hidden graphs", "restart")
        h = result.hidden(args.restart)[args.hidden]
        cols = args.label_columns
        if args.edges is not None:
            g = binarize_hidden(h, args.edges, cols)
        else:
            g = normalized_learned_graph(h, cols or h.d)
        name = f"restart{args.restart}_hidden{args.hidden}"
    else:
        g = load_graph(args.source)
        if args.edges is not None:
            g = binarize_hidden(g, args.edges, args.label_columns)
        name = Path(args.source).stem
    names = g.label_names or (PALETTE[: g.d] if g.d <= len(PALETTE) else None)
    text = graph_to_dot(g, name, names)
    if args.out:
        _write(Path(args.out), text)
        if args.png:
            plotting.hidden_graph(g, Path(args.out).with_suffix(".png"), names)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- profiles


def cmd_profiles(args) -> int:
    for name, p in PROFILES.items():
        c = p.train
        print(f"{name:36s} {p.testbed.kind.value:17s} {c.method:4s} t={c.kernel_cfg.t} "
              f"{c.kernel_cfg.objective_mode.value:4s} k={c.k} m={c.m} extra={p.extra}")
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwkplus", description="Color-matching random walk kernels and hidden-graph pattern mining.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=None, help="cap BLAS threads (default: $RWK_THREADS or 1)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic testbed database")
    g.add_argument("--kind", required=True, choices=[k.value for k in TestbedKind])
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--join", choices=["shared", "bridge"], default="shared", help="triangle-chain joining rule")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="learn hidden graphs")
    src = t.add_mutually_exclusive_group()
    src.add_argument("--profile", help="named experiment profile (see `rwkplus profiles`)")
    src.add_argument("--db", help="graph database JSON")
    t.add_argument("--out", required=True)
    t.add_argument("--resume", help="state.json of an earlier run")
    t.add_argument("--more-epochs", type=int, default=None, help="epochs to add when resuming")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--restarts", type=int, default=None)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--k", type=int, default=1)
    t.add_argument("--m", type=int, default=4)
    t.add_argument("--t", type=int, default=2)
    t.add_argument("--mode", choices=["sum", "last"], default="sum")
    t.add_argument("--norm", choices=["none", "stepnorm", "degree"], default="degree")
    t.add_argument("--method", choices=["plus", "rwnn"], default="plus")
    t.add_argument("--lr", type=float, default=1e-4)
    t.add_argument("--momentum", type=float, default=0.9)
    t.add_argument("--diversity", type=float, default=0.0)
    t.add_argument("--sparsity", type=float, default=0.0)
    t.add_argument("--sparsity-features", action="store_true")
    t.add_argument("--feature-map", choices=["sigmoid", "softmax", "identity"], default="softmax")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score trained runs (accuracy or GED tables)")
    e.add_argument("run", nargs="+", help="run directories written by `train`")
    e.add_argument("--truth", help="ground-truth database JSON (runs trained from --db)")
    e.add_argument("--mode", choices=["accuracy", "ged"], default="accuracy")
    e.add_argument("--no-labels", dest="with_labels", action="store_false", help="structure-only GED")
    e.add_argument("--out", help="report directory (default: first run)")
    e.set_defaults(func=cmd_eval)

    k = sub.add_parser("kernel", help="per-step kernel scores of two graphs")
    k.add_argument("graph_a")
    k.add_argument("graph_b")
    k.add_argument("--variant", choices=[*KERNELS, "all"], default="plus-fast")
    k.add_argument("--t", type=int, default=2)
    k.add_argument("--mode", choices=["sum", "last"], default="sum")
    k.add_argument("--norm", choices=["none", "degree"], default="none")
    k.set_defaults(func=cmd_kernel)

    b = sub.add_parser("bench", help="time kernel variants and training epochs")
    b.add_argument("--n", type=_int_list, default=[25, 50, 100, 150])
    b.add_argument("--m", type=_int_list, default=[6])
    b.add_argument("--t", type=_int_list, default=[2])
    b.add_argument("--variants", default="plus-naive,plus-fast")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--epoch-scaling", action="store_true", help="also time training epochs vs t and k")
    b.add_argument("--db-size", type=int, default=50)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("export-dot", help="Graphviz export of a hidden or input graph")
    d.add_argument("source", help="checkpoint JSON or graph JSON")
    d.add_argument("--restart", type=int, default=0)
    d.add_argument("--hidden", type=int, default=0)
    d.add_argument("--edges", type=int, default=None, help="keep this many heaviest edges")
    d.add_argument("--label-columns", type=int, default=None)
    d.add_argument("--out")
    d.add_argument("--png", action="store_true", help="also render a PNG next to the DOT file")
    d.set_defaults(func=cmd_export_dot)

    pr = sub.add_parser("profiles", help="list experiment profiles")
    pr.set_defaults(func=cmd_profiles)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads or int(os.environ.get("RWK_THREADS", "1") or 1)
    try:
        with thread_limit(threads):
            return args.func(args)
    except ResourceError as exc:
        print(f"rwkplus: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (TrainingError, ArithmeticError, FloatingPointError) as exc:
        print(f"rwkplus: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, DomainError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"rwkplus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
