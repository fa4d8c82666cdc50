"""Random walk kernels between attributed graphs.

Four variants are provided, all returning per-step scores for walks with
``i = 1..t`` edges:

* ``rwk_labeled`` -- classic common-walk count on the label-matching direct
  product graph (one-hot labels only).
* ``rwk_rwnn`` / ``rwk_rwnn_efficient`` -- the endpoint-reweighted kernel
  ``1^T (s s^T * A_kron^i) 1``, explicitly and in its ``d x d`` factorized form.
* ``rwk_plus_naive`` / ``rwk_plus_fast`` -- the color-matching kernel
  ``1^T (s s^T * A_kron)^i 1``, explicitly and by the iterative
  ``Y <- A_G Y A_H^T`` recursion that never materializes the product graph.

The array-level ``*_forward`` / ``*_backward`` functions broadcast over any
leading batch dimensions; training code uses them directly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RwkError
from .graph import (
    PRODUCT_SIZE_CAP,
    AttributedGraph,
    degree_normalize,
    direct_product,
    is_one_hot,
    kronecker_adjacency,
    match_vector,
)

STEP_NORM_EPS = 1e-5


class ObjectiveMode(str, enum.Enum):
    SUM_ALL_STEPS = "sum"
    ONLY_LAST_STEP = "last"


class Normalization(str, enum.Enum):
    NONE = "none"
    STEP_NORM = "stepnorm"
    DEGREE_NORMALIZE_HIDDEN = "degree"


@dataclass(frozen=True)
class KernelConfig:
    t: int = 2
    lambdas: tuple[float, ...] | None = None
    objective_mode: ObjectiveMode = ObjectiveMode.SUM_ALL_STEPS
    normalization: Normalization = Normalization.NONE

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 1:
            raise DomainError(f"step count t must be an integer >= 1, got {self.t}")
        lambdas = tuple(float(x) for x in self.lambdas) if self.lambdas is not None else (1.0,) * self.t
        if len(lambdas) != self.t:
            raise DomainError(f"need {self.t} step weights, got {len(lambdas)}")
        if any(x < 0 for x in lambdas):
            raise DomainError("step weights must be nonnegative")
        normalization = Normalization(self.normalization)
        if normalization is Normalization.STEP_NORM and any(x != 1.0 for x in lambdas):
            raise DomainError("StepNorm requires all step weights equal to 1")
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "objective_mode", ObjectiveMode(self.objective_mode))
        object.__setattr__(self, "normalization", normalization)

    def step_weights(self) -> np.ndarray:
        """Weight applied to each per-step score when forming the total."""
        if self.objective_mode is ObjectiveMode.ONLY_LAST_STEP:
            w = np.zeros(self.t)
            w[-1] = 1.0
            return w
        return np.asarray(self.lambdas)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "lambdas": list(self.lambdas),
            "objective_mode": self.objective_mode.value,
            "normalization": self.normalization.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KernelConfig":
        return cls(
            t=doc["t"],
            lambdas=doc.get("lambdas"),
            objective_mode=ObjectiveMode(doc.get("objective_mode", "sum")),
            normalization=Normalization(doc.get("normalization", "none")),
        )


@dataclass(frozen=True)
class StepScores:
    per_step: np.ndarray
    total: float

    @classmethod
    def from_steps(cls, per_step, cfg: KernelConfig) -> "StepScores":
        per_step = np.asarray(per_step, dtype=np.float64)
        return cls(per_step, float(per_step @ cfg.step_weights()))


# ------------------------------------------------------------ array helpers


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def _mT(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


@dataclass
class PlusCache:
    A_G: np.ndarray
    X_G: np.ndarray
    A_H: np.ndarray
    X_H: np.ndarray
    Y0: np.ndarray
    carries: list = field(default_factory=list)  # Y fed into step i (Z_{i-1})
    props: list = field(default_factory=list)  # A_G Z_{i-1} A_H^T
    steps: list = field(default_factory=list)  # Y^(i)


def plus_forward(A_G, X_G, A_H, X_H, t: int, keep: bool = False):
    """Iterative color-matching kernel.

    Returns per-step scores with shape ``broadcast(batch) + (t,)`` and, when
    ``keep`` is true, the intermediates needed by :func:`plus_backward`.
    """
    Y0 = X_G @ _mT(X_H)
    A_Ht = _mT(A_H)
    Y = Y0
    cache = PlusCache(A_G, X_G, A_H, X_H, Y0) if keep else None
    scores = []
    for _ in range(t):
        P = A_G @ Y @ A_Ht
        Yi = Y0 * P
        if keep:
            cache.carries.append(Y)
            cache.props.append(P)
            cache.steps.append(Yi)
        scores.append(Yi.sum(axis=(-2, -1)))
        Y = Y0 * Yi
    return np.stack(scores, axis=-1), cache


def plus_backward(cache: PlusCache, g_scores: np.ndarray) -> dict[str, np.ndarray]:
    """Reverse pass of :func:`plus_forward` given ``dL/dscores``."""
    if cache is None or not cache.steps:
        raise RwkError("plus_backward needs a forward cache (call plus_forward with keep=True)")
    Y0, A_G, A_H = cache.Y0, cache.A_G, cache.A_H
    t = len(cache.steps)
    gY0 = np.zeros(np.broadcast_shapes(Y0.shape, cache.steps[0].shape))
    gA_G = 0.0
    gA_H = 0.0
    g_carry = None  # dL/dZ_i
    for i in reversed(range(t)):
        c = g_scores[..., i][..., None, None]
        if g_carry is None:
            gYi = np.broadcast_to(c, gY0.shape)
        else:
            gYi = c + Y0 * g_carry
            gY0 = gY0 + cache.steps[i] * g_carry
        gY0 = gY0 + cache.props[i] * gYi
        gP = Y0 * gYi
        Z = cache.carries[i]
        AZ = A_G @ Z
        gA_G = gA_G + gP @ A_H @ _mT(Z)
        gA_H = gA_H + _mT(gP) @ AZ
        g_carry = _mT(A_G) @ gP @ A_H
    gY0 = gY0 + g_carry
    return {
        "A_G": unbroadcast(gA_G, np.shape(A_G)),
        "A_H": unbroadcast(gA_H, np.shape(A_H)),
        "X_G": unbroadcast(gY0 @ cache.X_H, np.shape(cache.X_G)),
        "X_H": unbroadcast(_mT(gY0) @ cache.X_G, np.shape(cache.X_H)),
    }


@dataclass
class RwnnCache:
    A_G: np.ndarray
    X_G: np.ndarray
    A_H: np.ndarray
    X_H: np.ndarray
    G_pows: list  # A_G^i X_G, i = 0..t
    H_pows: list
    MG: list  # X_G^T A_G^i X_G, i = 1..t
    MH: list


def rwnn_forward(A_G, X_G, A_H, X_H, t: int, keep: bool = False):
    """Endpoint-reweighted kernel in factorized form, steps ``1..t``.

    ``score_i = sum((X_G^T A_G^i X_G) * (X_H^T A_H^i X_H))``.
    """
    G_pows, H_pows, MG, MH, scores = [X_G], [X_H], [], [], []
    for _ in range(t):
        G_pows.append(A_G @ G_pows[-1])
        H_pows.append(A_H @ H_pows[-1])
        mg = _mT(X_G) @ G_pows[-1]
        mh = _mT(X_H) @ H_pows[-1]
        MG.append(mg)
        MH.append(mh)
        scores.append((mg * mh).sum(axis=(-2, -1)))
    cache = RwnnCache(A_G, X_G, A_H, X_H, G_pows, H_pows, MG, MH) if keep else None
    return np.stack(scores, axis=-1), cache


def _power_grads(A, X, C, i: int):
    """Gradients of ``sum(C * (X^T A^i X))`` w.r.t. ``A`` and ``X``.

    With ``Q_s = (A^T)^s X`` and ``P_s = A^s X``:
    ``dA = sum_r Q_r C P_(i-1-r)^T`` and ``dX = P_i C^T + Q_i C``.
    """
    AT = _mT(A)
    Q, P = [X], [X]
    for _ in range(i):
        Q.append(AT @ Q[-1])
        P.append(A @ P[-1])
    gA = 0.0
    for r in range(i):
        gA = gA + Q[r] @ C @ _mT(P[i - 1 - r])
    gX = P[i] @ _mT(C) + Q[i] @ C
    return gA, gX


def rwnn_backward(cache: RwnnCache, g_scores: np.ndarray) -> dict[str, np.ndarray]:
    if cache is None:
        raise RwkError("rwnn_backward needs a forward cache (call rwnn_forward with keep=True)")
    t = len(cache.MG)
    gA_G = gA_H = gX_G = gX_H = 0.0
    for i in range(1, t + 1):
        c = g_scores[..., i - 1][..., None, None]
        CG = c * cache.MH[i - 1]  # coefficient of MG
        CH = c * cache.MG[i - 1]
        ga, gx = _power_grads(cache.A_G, cache.X_G, CG, i)
        gA_G, gX_G = gA_G + ga, gX_G + gx
        ga, gx = _power_grads(cache.A_H, cache.X_H, CH, i)
        gA_H, gX_H = gA_H + ga, gX_H + gx
    return {
        "A_G": unbroadcast(np.asarray(gA_G), np.shape(cache.A_G)),
        "A_H": unbroadcast(np.asarray(gA_H), np.shape(cache.A_H)),
        "X_G": unbroadcast(np.asarray(gX_G), np.shape(cache.X_G)),
        "X_H": unbroadcast(np.asarray(gX_H), np.shape(cache.X_H)),
    }


# ----------------------------------------------------------- graph wrappers


def _hidden_adjacency(H: AttributedGraph, cfg: KernelConfig) -> np.ndarray:
    if cfg.normalization is Normalization.DEGREE_NORMALIZE_HIDDEN:
        return degree_normalize(H.adjacency)
    return H.adjacency


def _check_dims(G: AttributedGraph, H: AttributedGraph) -> None:
    if G.d != H.d:
        raise DomainError(f"feature dimensions differ: {G.d} vs {H.d}")


def _require_labels(G: AttributedGraph, H: AttributedGraph) -> None:
    for name, g in (("G", G), ("H", H)):
        if not is_one_hot(g.features):
            raise DomainError(f"labeled kernel needs one-hot labels; {name} is not labeled")


def _walk_sums(M: np.ndarray, start: np.ndarray, t: int, end: np.ndarray | None = None) -> np.ndarray:
    """``end^T M^i start`` for ``i = 1..t`` by repeated mat-vec products."""
    end = start if end is None else end
    v = start
    out = np.empty(t, dtype=np.result_type(M, start))
    for i in range(t):
        v = M @ v
        out[i] = end @ v
    return out


def rwk_labeled(G: AttributedGraph, H: AttributedGraph, cfg: KernelConfig) -> StepScores:
    """Common-walk counts ``1^T A_{GxH}^i 1`` on the direct product graph.

    Integer-valued adjacencies are evaluated in int64 so the counts are exact.
    """
    _require_labels(G, H)
    _check_dims(G, H)
    if cfg.normalization is Normalization.DEGREE_NORMALIZE_HIDDEN:
        H = AttributedGraph(_hidden_adjacency(H, cfg), H.features, H.label_names)
    P = direct_product(G, H).adjacency
    if np.all(P == np.round(P)):
        counts = _walk_sums(P.astype(np.int64), np.ones(P.shape[0], dtype=np.int64), cfg.t)
    else:
        counts = _walk_sums(P, np.ones(P.shape[0]), cfg.t)
    return StepScores.from_steps(counts, cfg)


def rwk_rwnn(G: AttributedGraph, H: AttributedGraph, cfg: KernelConfig) -> StepScores:
    """``1^T (s s^T * A_kron^i) 1 = s^T A_kron^i s`` with an explicit Kronecker matrix."""
    _check_dims(G, H)
    A_H = _hidden_adjacency(H, cfg)
    K = kronecker_adjacency(G, AttributedGraph(A_H, H.features), PRODUCT_SIZE_CAP).adjacency
    s = match_vector(G, H)
    return StepScores.from_steps(_walk_sums(K, s, cfg.t), cfg)


def rwk_rwnn_efficient(G: AttributedGraph, H: AttributedGraph, cfg: KernelConfig) -> StepScores:
    _check_dims(G, H)
    scores, _ = rwnn_forward(G.adjacency, G.features, _hidden_adjacency(H, cfg), H.features, cfg.t)
    return StepScores.from_steps(scores, cfg)


def rwk_plus_naive(
    G: AttributedGraph, H: AttributedGraph, cfg: KernelConfig, cap: int = PRODUCT_SIZE_CAP
) -> StepScores:
    """``1^T (s s^T * A_kron)^i 1`` on the explicit product matrix.

    Raises :class:`ResourceError` when the product exceeds ``cap`` entries.
    """
    _check_dims(G, H)
    A_H = _hidden_adjacency(H, cfg)
    K = kronecker_adjacency(G, AttributedGraph(A_H, H.features), cap).adjacency
    s = match_vector(G, H)
    M = np.outer(s, s) * K
    ones = np.ones(M.shape[0])
    return StepScores.from_steps(_walk_sums(M, ones, cfg.t), cfg)


def rwk_plus_fast(
    G: AttributedGraph,
    H: AttributedGraph,
    cfg: KernelConfig,
    step_norm: "StepNormState | None" = None,
) -> StepScores:
    """Iterative color-matching kernel, ``O(e m + n m^2)`` per step.

    With ``cfg.normalization == STEP_NORM`` and an evaluation-mode
    ``step_norm`` state, the per-step scores are normalized with the running
    statistics of hidden graph 0; without a state the raw scores are returned.
    """
    _check_dims(G, H)
    scores, _ = plus_forward(G.adjacency, G.features, _hidden_adjacency(H, cfg), H.features, cfg.t)
    if cfg.normalization is Normalization.STEP_NORM and step_norm is not None:
        out, _ = step_norm.forward(scores[None, None, :])
        scores = out[0, 0]
    return StepScores.from_steps(scores, cfg)


KERNELS = {
    "labeled": rwk_labeled,
    "rwnn": rwk_rwnn,
    "rwnn-efficient": rwk_rwnn_efficient,
    "plus-naive": rwk_plus_naive,
    "plus-fast": rwk_plus_fast,
}


# ---------------------------------------------------------------- StepNorm


@dataclass
class StepNormState:
    """Learnable per-step score normalization.

    Scores of one step are standardized over the batch of input graphs
    (separately per hidden graph), then mapped through
    ``sigmoid(gamma_l * z + beta_l)``.  ``gamma`` and ``beta`` are shared by
    all hidden graphs; running statistics are kept per (hidden graph, step).
    Arrays may carry extra leading dimensions for independent restarts:
    ``gamma``/``beta`` have shape ``lead + (t,)`` and the running statistics
    ``lead + (k, t)``.
    """

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    training: bool = True
    updates: int = 0

    @classmethod
    def create(cls, t: int, k: int = 1, lead: tuple[int, ...] = (), momentum: float = 0.1) -> "StepNormState":
        if not 0.0 < momentum < 1.0:
            raise DomainError("StepNorm momentum must lie in (0, 1)")
        return cls(
            gamma=np.ones(lead + (t,)),
            beta=np.zeros(lead + (t,)),
            running_mean=np.zeros(lead + (k, t)),
            running_var=np.ones(lead + (k, t)),
            momentum=momentum,
        )

    def forward(self, scores: np.ndarray, update: bool = True):
        """Normalize ``scores`` of shape ``lead + (k, B, t)``.

        Returns the normalized scores and a cache for :meth:`backward`.
        """
        gamma = self.gamma[..., None, None, :]
        beta = self.beta[..., None, None, :]
        if self.training:
            B = scores.shape[-2]
            if B == 0:
                raise DomainError("StepNorm needs a nonempty batch in training mode")
            mean = scores.mean(axis=-2, keepdims=True)
            var = scores.var(axis=-2, keepdims=True)
            if update:
                m = self.momentum
                unbiased = var[..., 0, :] * (B / (B - 1) if B > 1 else 1.0)
                self.running_mean = (1 - m) * self.running_mean + m * mean[..., 0, :]
                self.running_var = (1 - m) * self.running_var + m * unbiased
                self.updates += 1
        else:
            if self.updates == 0:
                raise RwkError("StepNorm running statistics are uninitialized; run a training step first")
            mean = self.running_mean[..., :, None, :]
            var = self.running_var[..., :, None, :]
        inv = 1.0 / np.sqrt(var + STEP_NORM_EPS)
        z = (scores - mean) * inv
        out = 1.0 / (1.0 + np.exp(-(gamma * z + beta)))
        return out, (z, inv, out, self.training)

    def backward(self, cache, g_out: np.ndarray):
        """Gradients w.r.t. the raw scores, ``gamma`` and ``beta``."""
        z, inv, out, training = cache
        gu = g_out * out * (1.0 - out)
        g_gamma = (gu * z).sum(axis=(-3, -2))
        g_beta = gu.sum(axis=(-3, -2))
        gz = gu * self.gamma[..., None, None, :]
        if training:
            gx = inv * (gz - gz.mean(axis=-2, keepdims=True) - z * (gz * z).mean(axis=-2, keepdims=True))
        else:
            gx = gz * inv
        return gx, g_gamma, g_beta

    def eval(self) -> "StepNormState":
        self.training = False
        return self

    def train(self) -> "StepNormState":
        self.training = True
        return self

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma.tolist(),
            "beta": self.beta.tolist(),
            "running_mean": self.running_mean.tolist(),
            "running_var": self.running_var.tolist(),
            "momentum": self.momentum,
            "training": self.training,
            "updates": self.updates,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StepNormState":
        return cls(
            gamma=np.array(doc["gamma"], dtype=float),
            beta=np.array(doc["beta"], dtype=float),
            running_mean=np.array(doc["running_mean"], dtype=float),
            running_var=np.array(doc["running_var"], dtype=float),
            momentum=float(doc["momentum"]),
            training=bool(doc["training"]),
            updates=int(doc["updates"]),
        )


def step_norm_apply(state: StepNormState, step: int, batch, hidden: int = 0, update: bool = True) -> np.ndarray:
    """Normalize the scores of one step (1-based) for one hidden graph.

    ``batch`` holds that step's score for every input graph in the batch.
    Only the selected step's running statistics are touched.
    """
    batch = np.asarray(batch, dtype=np.float64).ravel()
    t = state.gamma.shape[-1]
    if not 1 <= step <= t:
        raise DomainError(f"step must lie in [1, {t}], got {step}")
    l, k = step - 1, hidden
    g, b = state.gamma[..., l], state.beta[..., l]
    if state.training:
        if batch.size == 0:
            raise DomainError("StepNorm needs a nonempty batch in training mode")
        mean, var = batch.mean(), batch.var()
        if update:
            m = state.momentum
            n = batch.size
            state.running_mean[..., k, l] = (1 - m) * state.running_mean[..., k, l] + m * mean
            state.running_var[..., k, l] = (1 - m) * state.running_var[..., k, l] + m * var * (
                n / (n - 1) if n > 1 else 1.0
            )
            state.updates += 1
    else:
        if state.updates == 0:
            raise RwkError("StepNorm running statistics are uninitialized; run a training step first")
        mean, var = state.running_mean[..., k, l], state.running_var[..., k, l]
    z = (batch - mean) / np.sqrt(var + STEP_NORM_EPS)
    return 1.0 / (1.0 + np.exp(-(g * z + b)))
