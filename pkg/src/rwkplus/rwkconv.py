"""RWK+Conv: the color-matching walk recursion as a node-level neural layer.

The hidden graph becomes a set of layer parameters.  Its features ``X_H``
are used directly; its adjacency comes from a parameter vector ``theta``
(length ``m*m``) passed through one affine map, reshaped, symmetrized and
squashed with a sigmoid (diagonal zeroed).  The similarity seed is
``Y0 = sigmoid(X X_H^T)`` so every entry lies in (0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, RwkError


@dataclass
class RwkConvLayer:
    features: np.ndarray  # X_H, (m, d_in)
    theta: np.ndarray  # (m*m,)
    weight: np.ndarray  # affine map, (m*m, m*m)
    bias: np.ndarray  # (m*m,)
    t: int = 2
    lambdas: np.ndarray | None = None  # None: output the last step only
    squash: bool = True  # False feeds the raw X X_H^T (kernel cross-check)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float).ravel()
        self.weight = np.asarray(self.weight, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float).ravel()
        m = self.m
        mm = m * m
        if self.theta.shape != (mm,) or self.bias.shape != (mm,) or self.weight.shape != (mm, mm):
            raise DomainError(f"adjacency parameters must have sizes {mm}, ({mm}, {mm}), {mm}")
        if self.t < 1:
            raise DomainError("t must be >= 1")
        if self.lambdas is not None:
            self.lambdas = np.asarray(self.lambdas, dtype=float)
            if self.lambdas.shape != (self.t,):
                raise DomainError(f"lambdas must have length t={self.t}")

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def d_in(self) -> int:
        return self.features.shape[1]

    @classmethod
    def create(cls, m: int, d_in: int, t: int = 2, seed: int = 0, lambdas=None, squash: bool = True) -> "RwkConvLayer":
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        mm = m * m
        return cls(
            features=rng.uniform(0.0, 1.0, size=(m, d_in)),
            theta=rng.uniform(-1.0, 1.0, size=mm),
            weight=np.eye(mm),
            bias=np.zeros(mm),
            t=t,
            lambdas=lambdas,
            squash=squash,
        )

    def _pre_adjacency(self) -> np.ndarray:
        M = (self.weight @ self.theta + self.bias).reshape(self.m, self.m)
        return (M + M.T) / 2

    def adjacency(self) -> np.ndarray:
        return special.expit(self._pre_adjacency()) * (1.0 - np.eye(self.m))

    def param_dict(self) -> dict[str, np.ndarray]:
        return {"features": self.features, "theta": self.theta, "weight": self.weight, "bias": self.bias}

    def to_dict(self) -> dict:
        return {
            "format": "rwkplus-rwkconv/1",
            "features": self.features.tolist(),
            "theta": self.theta.tolist(),
            "weight": self.weight.tolist(),
            "bias": self.bias.tolist(),
            "t": self.t,
            "lambdas": None if self.lambdas is None else self.lambdas.tolist(),
            "squash": self.squash,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RwkConvLayer":
        return cls(
            np.array(doc["features"], dtype=float),
            np.array(doc["theta"], dtype=float),
            np.array(doc["weight"], dtype=float),
            np.array(doc["bias"], dtype=float),
            int(doc["t"]),
            None if doc.get("lambdas") is None else np.array(doc["lambdas"], dtype=float),
            bool(doc.get("squash", True)),
        )


@dataclass
class ConvCache:
    X: np.ndarray
    A: np.ndarray
    A_H: np.ndarray
    Y0: np.ndarray
    carries: list  # input to each propagation, C_0 = Y0
    props: list  # P_i = A C_{i-1} A_H^T
    steps: list  # Y^(i) = Y0 * P_i
    pool: bool
    layer: RwkConvLayer


def _check_inputs(X, A, layer):
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    if X.ndim != 2 or X.shape[1] != layer.d_in:
        raise DomainError(f"input features must be (n, {layer.d_in}), got {X.shape}")
    n = X.shape[0]
    if A.shape != (n, n):
        raise DomainError(f"adjacency must be ({n}, {n}), got {A.shape}")
    if not np.allclose(A, A.T):
        raise DomainError("adjacency must be symmetric")
    return X, A


def rwkconv_forward(X, A, layer: RwkConvLayer, pool: bool = False) -> tuple[np.ndarray, ConvCache]:
    """Node outputs ``(n, m)``, or their column sums ``(m,)`` when ``pool``."""
    X, A = _check_inputs(X, A, layer)
    A_H = layer.adjacency()
    Z = X @ layer.features.T
    Y0 = special.expit(Z) if layer.squash else Z
    carries, props, steps = [Y0], [], []
    for _ in range(layer.t):
        P = A @ carries[-1] @ A_H.T
        Yi = Y0 * P
        props.append(P)
        steps.append(Yi)
        carries.append(Y0 * Yi)
    carries.pop()
    if layer.lambdas is None:
        out = steps[-1]
    else:
        out = sum(l * Y for l, Y in zip(layer.lambdas, steps))
    if pool:
        out = out.sum(axis=0)
    return out, ConvCache(X, A, A_H, Y0, carries, props, steps, pool, layer)


def rwkconv_backward(cache: ConvCache | None, g_out) -> dict[str, np.ndarray]:
    """Gradients for the layer parameters and the input features ``X``."""
    if cache is None:
        raise RwkError("rwkconv_backward needs the cache from rwkconv_forward")
    layer = cache.layer
    n, m = cache.Y0.shape
    g_out = np.asarray(g_out, dtype=float)
    if cache.pool:
        g_out = np.broadcast_to(g_out, (n, m))
    if layer.lambdas is None:
        g_steps = [np.zeros((n, m))] * (layer.t - 1) + [g_out]
    else:
        g_steps = [l * g_out for l in layer.lambdas]

    Y0, A, A_H = cache.Y0, cache.A, cache.A_H
    gY0 = np.zeros_like(Y0)
    gA_H = np.zeros_like(A_H)
    g_carry = np.zeros_like(Y0)  # dL/dC_i, flowing back from step i+1
    for i in range(layer.t - 1, -1, -1):
        Yi, P, C = cache.steps[i], cache.props[i], cache.carries[i]
        gY = g_steps[i] + Y0 * g_carry
        gY0 += g_carry * Yi + gY * P
        gP = gY * Y0
        AC = A @ C
        gA_H += gP.T @ AC
        g_carry = A.T @ gP @ A_H
    gY0 += g_carry  # C_0 is Y0 itself

    gZ = gY0 * Y0 * (1.0 - Y0) if layer.squash else gY0
    gX = gZ @ layer.features
    g_features = gZ.T @ cache.X

    S = layer._pre_adjacency()
    sig = special.expit(S)
    gS = gA_H * sig * (1.0 - sig) * (1.0 - np.eye(m))
    gvec = ((gS + gS.T) / 2).ravel()
    return {
        "features": g_features,
        "theta": layer.weight.T @ gvec,
        "weight": np.outer(gvec, layer.theta),
        "bias": gvec,
        "X": gX,
    }
