"""Learnable hidden graphs trained to maximize kernel similarity with a database.

Training is vectorized over independent random restarts: every parameter
array carries a leading restart axis ``R`` followed by the hidden-graph axis
``k``.  Restart ``r`` is initialized from ``SeedSequence(seed).spawn(...)[r]``,
so its starting point does not depend on how many restarts run alongside it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .errors import DomainError, RwkError, TrainingError
from .graph import AttributedGraph, GraphDatabase, dumps_canonical
from .kernels import (
    KernelConfig,
    Normalization,
    StepNormState,
    StepScores,
    plus_backward,
    plus_forward,
    rwnn_backward,
    rwnn_forward,
)
from .structural import StructuralColorConfig, structural_colors

log = logging.getLogger(__name__)

KERNEL_METHODS = ("plus", "rwnn")


FEATURE_MAPS = ("sigmoid", "softmax", "identity")


def sigmoid(x):
    return special.expit(x)


def _offdiag(m: int) -> np.ndarray:
    return 1.0 - np.eye(m)


def _blocks(d: int, blocks) -> list[slice]:
    if not blocks:
        return [slice(0, d)]
    edges = np.cumsum([0, *blocks])
    if edges[-1] != d:
        raise DomainError(f"feature blocks {tuple(blocks)} do not cover {d} feature columns")
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def map_features(F: np.ndarray, feature_map: str, blocks=None) -> np.ndarray:
    """Realize raw features; ``softmax`` normalizes each column block separately."""
    if feature_map == "sigmoid":
        return special.expit(F)
    if feature_map == "softmax":
        X = np.empty_like(F, dtype=float)
        for sl in _blocks(F.shape[-1], blocks):
            X[..., sl] = special.softmax(F[..., sl], axis=-1)
        return X
    return np.array(F, dtype=float, copy=True)


def map_features_backward(X: np.ndarray, gX: np.ndarray, feature_map: str, blocks=None) -> np.ndarray:
    if feature_map == "sigmoid":
        return gX * X * (1.0 - X)
    if feature_map == "softmax":
        out = np.empty_like(gX)
        for sl in _blocks(X.shape[-1], blocks):
            x, g = X[..., sl], gX[..., sl]
            out[..., sl] = x * (g - (g * x).sum(axis=-1, keepdims=True))
        return out
    # identity features are frozen inputs, not trained
    return np.zeros_like(gX)


@dataclass
class HiddenGraph:
    """One learnable pattern.

    Realized adjacency is ``sigmoid((R + R^T) / 2)`` with the diagonal zeroed;
    realized features are ``sigmoid(F)``, a row-wise softmax of ``F`` when
    ``feature_map == "softmax"`` (each node spreads one unit of mass over
    the colors), or ``F`` itself when ``feature_map == "identity"`` (frozen,
    externally supplied features).  ``feature_blocks`` splits the columns
    into groups (e.g. labels, then extra colors) that are softmaxed apart.
    """

    raw_adjacency: np.ndarray
    raw_features: np.ndarray
    feature_map: str = "sigmoid"
    feature_blocks: tuple[int, ...] | None = None

    @property
    def m(self) -> int:
        return self.raw_adjacency.shape[0]

    @property
    def d(self) -> int:
        return self.raw_features.shape[1]

    def symmetric_raw(self) -> np.ndarray:
        R = np.asarray(self.raw_adjacency)
        return (R + R.T) / 2

    @property
    def adjacency(self) -> np.ndarray:
        return sigmoid(self.symmetric_raw()) * _offdiag(self.m)

    @property
    def features(self) -> np.ndarray:
        return map_features(np.asarray(self.raw_features), self.feature_map, self.feature_blocks)

    def realize(self) -> AttributedGraph:
        return AttributedGraph(self.adjacency, self.features)

    def to_dict(self) -> dict:
        return {
            "raw_adjacency": np.asarray(self.raw_adjacency).tolist(),
            "raw_features": np.asarray(self.raw_features).tolist(),
            "feature_map": self.feature_map,
            "feature_blocks": None if self.feature_blocks is None else list(self.feature_blocks),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HiddenGraph":
        blocks = doc.get("feature_blocks")
        return cls(
            np.array(doc["raw_adjacency"], dtype=float),
            np.array(doc["raw_features"], dtype=float),
            doc.get("feature_map", "sigmoid"),
            None if blocks is None else tuple(int(b) for b in blocks),
        )


@dataclass(frozen=True)
class TrainConfig:
    k: int = 1
    m: int = 4
    kernel_cfg: KernelConfig = field(default_factory=KernelConfig)
    method: str = "plus"
    lr: float = 0.01
    momentum: float = 0.9
    epochs: int = 300
    diversity_weight: float = 0.0
    sparsity_weight: float = 0.0
    sparsity_on_features: bool = False
    seed: int = 0
    restarts: int = 1
    adjacency_init: tuple[float, float] = (-1.0, 1.0)
    feature_init: tuple[float, float] = (0.0, 1.0)
    feature_map: str = "sigmoid"
    feature_blocks: tuple[int, ...] | None = None
    step_norm_momentum: float = 0.1

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("need at least one hidden graph (k >= 1)")
        if self.m < 1:
            raise DomainError("hidden graphs need at least one node")
        if not self.lr > 0:
            raise DomainError("learning rate must be positive")
        if self.epochs < 1:
            raise DomainError("epochs must be >= 1")
        if self.restarts < 1:
            raise DomainError("restarts must be >= 1")
        if self.diversity_weight < 0 or self.sparsity_weight < 0:
            raise DomainError("regularizer weights must be nonnegative")
        if not 0 <= self.momentum < 1:
            raise DomainError("momentum must lie in [0, 1)")
        if self.method not in KERNEL_METHODS:
            raise DomainError(f"unknown kernel method {self.method!r}; expected one of {KERNEL_METHODS}")
        if self.feature_map not in FEATURE_MAPS:
            raise DomainError(f"unknown feature map {self.feature_map!r}")
        if self.feature_blocks is not None:
            object.__setattr__(self, "feature_blocks", tuple(int(b) for b in self.feature_blocks))
            if not self.feature_blocks or min(self.feature_blocks) < 1:
                raise DomainError("feature blocks must be positive column counts")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "kernel_cfg": self.kernel_cfg.to_dict(),
            "method": self.method,
            "lr": self.lr,
            "momentum": self.momentum,
            "epochs": self.epochs,
            "diversity_weight": self.diversity_weight,
            "sparsity_weight": self.sparsity_weight,
            "sparsity_on_features": self.sparsity_on_features,
            "seed": self.seed,
            "restarts": self.restarts,
            "adjacency_init": list(self.adjacency_init),
            "feature_init": list(self.feature_init),
            "feature_map": self.feature_map,
            "feature_blocks": None if self.feature_blocks is None else list(self.feature_blocks),
            "step_norm_momentum": self.step_norm_momentum,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        doc = dict(doc)
        if "kernel_cfg" in doc:
            doc["kernel_cfg"] = KernelConfig.from_dict(doc["kernel_cfg"])
        for key in ("adjacency_init", "feature_init"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)


@dataclass
class Params:
    """Raw parameters of ``R`` restarts x ``k`` hidden graphs."""

    raw_adjacency: np.ndarray  # (R, k, m, m)
    raw_features: np.ndarray  # (R, k, m, d)
    gamma: np.ndarray | None = None  # (R, t) StepNorm scale
    beta: np.ndarray | None = None  # (R, t) StepNorm shift

    NAMES = ("raw_adjacency", "raw_features", "gamma", "beta")

    def items(self):
        for name in self.NAMES:
            value = getattr(self, name)
            if value is not None:
                yield name, value

    def copy(self) -> "Params":
        return Params(**{k: (None if v is None else np.array(v, copy=True)) for k, v in vars(self).items()})

    def hidden_graphs(self, restart: int, feature_map: str = "sigmoid", feature_blocks=None) -> list[HiddenGraph]:
        return [
            HiddenGraph(self.raw_adjacency[restart, i].copy(), self.raw_features[restart, i].copy(), feature_map, feature_blocks)
            for i in range(self.raw_adjacency.shape[1])
        ]

    @classmethod
    def from_hidden(cls, hidden: list[HiddenGraph], step_norm: StepNormState | None = None) -> "Params":
        p = cls(
            np.stack([h.raw_adjacency for h in hidden])[None].astype(float),
            np.stack([h.raw_features for h in hidden])[None].astype(float),
        )
        if step_norm is not None:
            p.gamma = np.array(step_norm.gamma, dtype=float).reshape(1, -1)
            p.beta = np.array(step_norm.beta, dtype=float).reshape(1, -1)
        return p


@dataclass
class GradientSet:
    """Gradient of the loss w.r.t. each raw parameter (same shapes)."""

    d_raw_adjacency: np.ndarray
    d_raw_features: np.ndarray
    d_gamma: np.ndarray | None = None
    d_beta: np.ndarray | None = None

    def as_params(self) -> dict[str, np.ndarray]:
        out = {"raw_adjacency": self.d_raw_adjacency, "raw_features": self.d_raw_features}
        if self.d_gamma is not None:
            out["gamma"] = self.d_gamma
            out["beta"] = self.d_beta
        return out

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.as_params().values())


def init_params(cfg: TrainConfig, d: int) -> Params:
    """Uniform random initialization, one independent stream per restart."""
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    adj, feat = [], []
    for ss in streams:
        rng = np.random.default_rng(ss)
        adj.append(rng.uniform(*cfg.adjacency_init, size=(cfg.k, cfg.m, cfg.m)))
        feat.append(rng.uniform(*cfg.feature_init, size=(cfg.k, cfg.m, d)))
    p = Params(np.stack(adj), np.stack(feat))
    if cfg.kernel_cfg.normalization is Normalization.STEP_NORM:
        p.gamma = np.ones((cfg.restarts, cfg.kernel_cfg.t))
        p.beta = np.zeros((cfg.restarts, cfg.kernel_cfg.t))
    return p


# ------------------------------------------------------------ realization


def _degree_normalize_forward(A):
    deg = A.sum(axis=-1)
    safe = np.where(deg > 0, deg, 1.0)
    r = np.where(deg > 0, safe**-0.5, 0.0)
    return A * (r[..., :, None] * r[..., None, :]), (A, r, safe, deg > 0)


def _degree_normalize_backward(cache, gB):
    A, r, safe, pos = cache
    gA = gB * (r[..., :, None] * r[..., None, :])
    # B_ij = A_ij r_i r_j ;  dL/dr_i = sum_j (gB_ij + gB_ji) A_ij r_j  (A symmetric)
    gBA = gB * A
    gr = (gBA * r[..., None, :]).sum(axis=-1) + (gBA * r[..., :, None]).sum(axis=-2)
    gdeg = np.where(pos, gr * -0.5 * safe**-1.5, 0.0)
    return gA + gdeg[..., :, None]


@dataclass
class _Realized:
    A: np.ndarray  # adjacency fed to kernels
    A_sig: np.ndarray  # sigmoid adjacency before optional normalization
    X: np.ndarray
    norm_cache: tuple | None


def _realize(params: Params, cfg: TrainConfig) -> _Realized:
    R = params.raw_adjacency
    m = R.shape[-1]
    S = (R + np.swapaxes(R, -1, -2)) / 2
    A_sig = sigmoid(S) * _offdiag(m)
    norm_cache = None
    A = A_sig
    if cfg.kernel_cfg.normalization is Normalization.DEGREE_NORMALIZE_HIDDEN:
        A, norm_cache = _degree_normalize_forward(A_sig)
    F = params.raw_features
    X = map_features(F, cfg.feature_map, cfg.feature_blocks)
    return _Realized(A, A_sig, X, norm_cache)


# --------------------------------------------------------------- objective


def _pairs(k: int) -> tuple[np.ndarray, np.ndarray]:
    I, J = np.triu_indices(k, 1)
    return I, J


class Objective:
    """Unsupervised loss over a graph database.

    ``loss = -sum_G sum_i K(G, W_i) + diversity_weight * R(W) + sparsity_weight * L1``

    where ``R`` is the mean pairwise kernel among hidden graphs and ``L1``
    sums the realized adjacency (and features when enabled).  Call
    :meth:`forward` then :meth:`backward`.
    """

    def __init__(
        self,
        db: GraphDatabase,
        cfg: TrainConfig,
        step_norm: StepNormState | None = None,
    ):
        self.cfg = cfg
        A, X = db.padded()
        self.A_G = A[None, None]  # (1, 1, B, N, N)
        self.X_G = X[None, None]
        self.d = db.d
        self.step_norm = step_norm
        if cfg.kernel_cfg.normalization is Normalization.STEP_NORM and step_norm is None:
            self.step_norm = StepNormState.create(
                cfg.kernel_cfg.t, cfg.k, (cfg.restarts,), cfg.step_norm_momentum
            )
        self._cache = None

    @property
    def _kernel(self):
        return (plus_forward, plus_backward) if self.cfg.method == "plus" else (rwnn_forward, rwnn_backward)

    def forward(self, params: Params, update_stats: bool = False) -> np.ndarray:
        """Loss per restart, shape ``(R,)``; caches intermediates."""
        cfg = self.cfg
        kc = cfg.kernel_cfg
        if params.raw_features.shape[-1] != self.d:
            raise DomainError(
                f"hidden features have {params.raw_features.shape[-1]} columns, database has {self.d}"
            )
        fwd, _ = self._kernel
        w = kc.step_weights()
        real = _realize(params, cfg)
        A_H = real.A[:, :, None]  # (R, k, 1, m, m)
        X_H = real.X[:, :, None]
        scores, kcache = fwd(self.A_G, self.X_G, A_H, X_H, kc.t, keep=True)  # (R, k, B, t)
        sn_cache = None
        used = scores
        if kc.normalization is Normalization.STEP_NORM:
            sn = self.step_norm
            if params.gamma is None:
                params.gamma, params.beta = sn.gamma, sn.beta
            sn.gamma, sn.beta = params.gamma, params.beta
            used, sn_cache = sn.forward(scores, update=update_stats)
        kernel_total = (used * w).sum(axis=(-3, -2, -1))  # (R,)

        k = cfg.k
        div = np.zeros(scores.shape[0])
        dcache = None
        if k > 1 and cfg.diversity_weight > 0:
            I, J = _pairs(k)
            dscores, dcache = fwd(real.A[:, I], real.X[:, I], real.A[:, J], real.X[:, J], kc.t, keep=True)
            div = (dscores * w).sum(axis=(-2, -1)) * (2.0 / (k * (k - 1)))
        l1 = real.A_sig.sum(axis=(-3, -2, -1))
        if cfg.sparsity_on_features:
            l1 = l1 + real.X.sum(axis=(-3, -2, -1))
        loss = -kernel_total + cfg.diversity_weight * div + cfg.sparsity_weight * l1
        self._cache = (params, real, scores, kcache, sn_cache, dcache)
        self.scores = scores
        self.normalized_scores = used
        return loss

    def backward(self) -> GradientSet:
        if self._cache is None:
            raise RwkError("backward called before forward: no cached intermediates")
        params, real, scores, kcache, sn_cache, dcache = self._cache
        cfg = self.cfg
        kc = cfg.kernel_cfg
        _, bwd = self._kernel
        w = kc.step_weights()
        R, k, m = params.raw_adjacency.shape[:3]

        g_used = np.broadcast_to(-w, scores.shape)
        d_gamma = d_beta = None
        if sn_cache is not None:
            g_scores, d_gamma, d_beta = self.step_norm.backward(sn_cache, g_used)
        else:
            g_scores = g_used
        g = bwd(kcache, g_scores)
        gA = g["A_H"][:, :, 0]
        gX = g["X_H"][:, :, 0]
        gA = np.array(gA, copy=True)
        gX = np.array(gX, copy=True)

        if dcache is not None:
            I, J = _pairs(k)
            coef = cfg.diversity_weight * 2.0 / (k * (k - 1))
            gd = bwd(dcache, np.broadcast_to(coef * w, (R, len(I), kc.t)))
            np.add.at(gA, (slice(None), I), gd["A_G"])
            np.add.at(gA, (slice(None), J), gd["A_H"])
            np.add.at(gX, (slice(None), I), gd["X_G"])
            np.add.at(gX, (slice(None), J), gd["X_H"])

        if real.norm_cache is not None:
            gA = _degree_normalize_backward(real.norm_cache, gA)
        offdiag = _offdiag(m)
        gA = gA + cfg.sparsity_weight * offdiag
        if cfg.sparsity_on_features:
            gX = gX + cfg.sparsity_weight
        gS = gA * real.A_sig * (1.0 - real.A_sig) * offdiag
        # A_sig is built from (R + R^T)/2, hence dR = (gS + gS^T)/2 for any gS
        d_adj = (gS + np.swapaxes(gS, -1, -2)) / 2
        d_feat = map_features_backward(real.X, gX, cfg.feature_map, cfg.feature_blocks)
        return GradientSet(d_adj, d_feat, d_gamma, d_beta)


def objective(
    db: GraphDatabase,
    hidden: list[HiddenGraph],
    cfg: TrainConfig,
    step_norm: StepNormState | None = None,
) -> tuple[float, list[list[StepScores]]]:
    """Scalar loss for one set of hidden graphs plus per-pair kernel scores.

    The second value is indexed ``[hidden][graph]``.
    """
    cfg = replace(cfg, k=len(hidden), m=hidden[0].m, restarts=1, feature_map=hidden[0].feature_map, feature_blocks=hidden[0].feature_blocks)
    obj = Objective(db, cfg, _single_step_norm(step_norm))
    loss = obj.forward(Params.from_hidden(hidden, step_norm))[0]
    if not np.isfinite(loss):
        raise TrainingError("loss is not finite")
    raw = obj.scores[0]
    pairs = [
        [StepScores.from_steps(raw[i, b], cfg.kernel_cfg) for b in range(len(db))]
        for i in range(len(hidden))
    ]
    return float(loss), pairs


def _single_step_norm(state: StepNormState | None) -> StepNormState | None:
    if state is None:
        return None
    return StepNormState(
        gamma=np.asarray(state.gamma).reshape(1, -1),
        beta=np.asarray(state.beta).reshape(1, -1),
        running_mean=np.asarray(state.running_mean).reshape((1,) + np.shape(state.running_mean)[-2:]),
        running_var=np.asarray(state.running_var).reshape((1,) + np.shape(state.running_var)[-2:]),
        momentum=state.momentum,
        training=state.training,
        updates=state.updates,
    )


def backward(
    db: GraphDatabase,
    hidden: list[HiddenGraph],
    cfg: TrainConfig,
    step_norm: StepNormState | None = None,
) -> GradientSet:
    """Analytic gradient of :func:`objective` for one set of hidden graphs."""
    cfg = replace(cfg, k=len(hidden), m=hidden[0].m, restarts=1, feature_map=hidden[0].feature_map, feature_blocks=hidden[0].feature_blocks)
    obj = Objective(db, cfg, _single_step_norm(step_norm))
    obj.forward(Params.from_hidden(hidden, step_norm))
    g = obj.backward()
    return GradientSet(
        g.d_raw_adjacency[0],
        g.d_raw_features[0],
        None if g.d_gamma is None else g.d_gamma[0],
        None if g.d_beta is None else g.d_beta[0],
    )


def diversity_regularizer(hidden: list[HiddenGraph], kernel_cfg: KernelConfig, method: str = "plus") -> float:
    """Mean pairwise kernel similarity among the realized hidden graphs."""
    k = len(hidden)
    if k < 2:
        return 0.0
    cfg = TrainConfig(k=k, m=hidden[0].m, kernel_cfg=kernel_cfg, method=method, feature_map=hidden[0].feature_map, feature_blocks=hidden[0].feature_blocks)
    p = Params.from_hidden(hidden)
    real = _realize(p, cfg)
    fwd = plus_forward if method == "plus" else rwnn_forward
    I, J = _pairs(k)
    s, _ = fwd(real.A[:, I], real.X[:, I], real.A[:, J], real.X[:, J], kernel_cfg.t)
    return float((s[0] @ kernel_cfg.step_weights()).sum() * 2.0 / (k * (k - 1)))


# --------------------------------------------------------------- optimizer


def sgd_step(params: Params, grads: GradientSet, velocity: dict | None, lr: float, momentum: float, epoch=None):
    """Heavy-ball SGD: ``v <- momentum * v - lr * g``; ``p <- p + v``.

    Updates ``params`` in place and returns the new velocity dict.
    """
    gp = grads.as_params()
    if not grads.all_finite():
        raise TrainingError("non-finite gradient", epoch)
    velocity = {} if velocity is None else velocity
    for name, value in params.items():
        g = gp.get(name)
        if g is None:
            continue
        v = velocity.get(name)
        v = -lr * g if v is None else momentum * v - lr * g
        velocity[name] = v
        setattr(params, name, value + v)
    return velocity


# ----------------------------------------------------------------- training


@dataclass
class TrainResult:
    params: Params
    velocity: dict
    loss_trace: np.ndarray  # (R, epochs)
    cfg: TrainConfig
    step_norm: StepNormState | None = None
    epoch: int = 0

    def hidden(self, restart: int) -> list[HiddenGraph]:
        return self.params.hidden_graphs(restart, self.cfg.feature_map, self.cfg.feature_blocks)

    @property
    def restarts(self) -> list[list[HiddenGraph]]:
        return [self.hidden(r) for r in range(self.params.raw_adjacency.shape[0])]

    def checkpoint(self, restart: int | None = None) -> dict:
        """JSON-ready state; ``restart`` selects a single restart slice."""
        sel = slice(None) if restart is None else slice(restart, restart + 1)
        doc = {
            "format": "rwkplus-checkpoint/1",
            "config": self.cfg.to_dict(),
            "seed": self.cfg.seed,
            "epoch": self.epoch,
            "restart_index": restart,
            "params": {k: v[sel].tolist() for k, v in self.params.items()},
            "velocity": {k: v[sel].tolist() for k, v in self.velocity.items()},
            "loss_trace": self.loss_trace[sel].tolist(),
        }
        if self.step_norm is not None:
            sn = self.step_norm
            doc["step_norm"] = {
                "running_mean": sn.running_mean[sel].tolist(),
                "running_var": sn.running_var[sel].tolist(),
                "momentum": sn.momentum,
                "updates": sn.updates,
            }
        return doc

    @classmethod
    def from_checkpoint(cls, doc: dict) -> "TrainResult":
        cfg = TrainConfig.from_dict(doc["config"])
        params = Params(**{k: np.array(v, dtype=float) for k, v in doc["params"].items()})
        velocity = {k: np.array(v, dtype=float) for k, v in doc["velocity"].items()}
        R = params.raw_adjacency.shape[0]
        if R != cfg.restarts:
            cfg = replace(cfg, restarts=R)
        sn = None
        if "step_norm" in doc:
            s = doc["step_norm"]
            sn = StepNormState(
                params.gamma, params.beta,
                np.array(s["running_mean"], dtype=float), np.array(s["running_var"], dtype=float),
                momentum=s["momentum"], updates=s["updates"],
            )
        trace = np.array(doc["loss_trace"], dtype=float).reshape(R, -1)
        return cls(params, velocity, trace, cfg, sn, int(doc["epoch"]))


def checkpoint_json(result: TrainResult, restart: int | None = None) -> str:
    return dumps_canonical(result.checkpoint(restart)) + "\n"


def prepare_database(db: GraphDatabase, scc: StructuralColorConfig | None) -> GraphDatabase:
    if scc is None:
        return db
    return db.map_features(lambda g: structural_colors(g, scc))


def train(
    db: GraphDatabase,
    cfg: TrainConfig,
    scc: StructuralColorConfig | None = None,
    resume: TrainResult | None = None,
    epochs: int | None = None,
) -> TrainResult:
    """Full-batch momentum SGD on the unsupervised objective.

    Runs ``cfg.restarts`` independent restarts at once.  With ``resume`` the
    run continues from that state for ``epochs`` more epochs (default: until
    ``cfg.epochs`` in total).
    """
    db = prepare_database(db, scc)
    if resume is None:
        params = init_params(cfg, db.d)
        velocity: dict = {}
        trace: list = []
        start = 0
        step_norm = None
    else:
        params = resume.params.copy()
        velocity = {k: v.copy() for k, v in resume.velocity.items()}
        trace = list(resume.loss_trace.T)
        start = resume.epoch
        step_norm = resume.step_norm
    obj = Objective(db, cfg, step_norm)
    stop = cfg.epochs if epochs is None else start + epochs
    for epoch in range(start, stop):
        loss = obj.forward(params, update_stats=True)
        if not np.all(np.isfinite(loss)):
            raise TrainingError("loss is not finite", epoch)
        grads = obj.backward()
        velocity = sgd_step(params, grads, velocity, cfg.lr, cfg.momentum, epoch)
        trace.append(loss)
        if epoch % 100 == 0:
            log.debug("epoch %d mean loss %.6g", epoch, float(np.mean(loss)))
    loss_trace = np.stack(trace, axis=1) if trace else np.zeros((cfg.restarts, 0))
    return TrainResult(params, velocity, loss_trace, cfg, obj.step_norm, stop)


def kernel_scores(db: GraphDatabase, hidden: list[HiddenGraph], cfg: TrainConfig) -> np.ndarray:
    """Raw per-step scores ``(k, B, t)`` of every hidden graph against every database graph."""
    kc = cfg.kernel_cfg
    if kc.normalization is Normalization.STEP_NORM:
        kc = replace(kc, normalization=Normalization.NONE)
    cfg = replace(cfg, k=len(hidden), m=hidden[0].m, restarts=1, kernel_cfg=kc)
    obj = Objective(db, cfg)
    obj.forward(Params.from_hidden(hidden))
    return obj.scores[0]
