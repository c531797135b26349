"""Fully-connected ReLU networks with a scalar linear output.

Layer ``l`` (1-based, ``l = 1..L``) maps ``x^{l-1}`` to ``h^l = W^l x^{l-1} + b^l``;
hidden layers apply ReLU, the output layer ``L`` is linear and has width 1.
Weights use the standard parametrization: ``W^l_ij ~ N(0, sigma_w^2 / n_{l-1})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIT_NORM_TOL = 1e-12


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    """Depth, widths ``(n_0, ..., n_{L-1})`` and initialization variances.

    The output width ``n_L = 1`` is implicit.
    """

    depth: int
    widths: tuple[int, ...]
    sigma_w_sq: float = 2.0
    sigma_b_sq: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.depth < 1:
            raise ConfigurationError(f"depth must be >= 1, got {self.depth}")
        if len(self.widths) != self.depth:
            raise ConfigurationError(
                f"expected {self.depth} widths (n_0..n_{{L-1}}), got {len(self.widths)}"
            )
        if any(w < 1 for w in self.widths):
            raise ConfigurationError(f"all widths must be >= 1, got {self.widths}")
        if not self.sigma_w_sq > 0:
            raise ConfigurationError("sigma_w_sq must be positive")
        if self.sigma_b_sq < 0:
            raise ConfigurationError("sigma_b_sq must be non-negative")

    @classmethod
    def constant(cls, depth: int, width: int, n0: int | None = None, **kw) -> "NetworkConfig":
        """Constant hidden width ``width`` with input dimension ``n0`` (default ``width``)."""
        n0 = width if n0 is None else n0
        return cls(depth, (n0,) + (width,) * (depth - 1), **kw)

    @property
    def a(self) -> float:
        return self.sigma_w_sq / 2.0

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        outs = list(self.widths[1:]) + [1]
        return list(zip(outs, self.widths))


@dataclass(frozen=True)
class Parameters:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "biases", tuple(self.biases))
        if len(self.weights) != len(self.biases):
            raise ConfigurationError("weights and biases must have the same length")
        for l, (W, b) in enumerate(zip(self.weights, self.biases), start=1):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ConfigurationError(f"layer {l}: W {W.shape} incompatible with b {b.shape}")
            if l > 1 and W.shape[1] != self.weights[l - 2].shape[0]:
                raise ConfigurationError(f"layer {l}: input size does not match layer {l - 1}")
        if self.weights[-1].shape[0] != 1:
            raise ConfigurationError("output layer must have width 1")

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    def flat(self) -> np.ndarray:
        """All parameters as one vector, layer by layer (W^l row-major, then b^l)."""
        parts = []
        for W, b in zip(self.weights, self.biases):
            parts.append(W.ravel())
            parts.append(b)
        return np.concatenate(parts)


@dataclass(frozen=True)
class ForwardTrace:
    """``preacts[l-1] = h^l`` and ``acts[l-1] = x^{l-1}`` for ``l = 1..L``.

    ``acts[0]`` is the input; ``preacts[-1]`` is the (length-1) output pre-activation.
    """

    acts: tuple[np.ndarray, ...]
    preacts: tuple[np.ndarray, ...]

    @property
    def x0(self) -> np.ndarray:
        return self.acts[0]

    @property
    def output(self) -> float:
        return float(self.preacts[-1][0])


@dataclass(frozen=True)
class BackwardTrace:
    """``deltas[l-1] = delta^l = df/dh^l`` for ``l = 1..L``; ``deltas[-1] == [1.0]``."""

    deltas: tuple[np.ndarray, ...] = field(default_factory=tuple)


def init_network(config: NetworkConfig, seed: int) -> Parameters:
    """Draw i.i.d. Gaussian parameters; bit-identical for equal ``(config, seed)``."""
    if not isinstance(config, NetworkConfig):
        raise ConfigurationError("config must be a NetworkConfig")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    sb = np.sqrt(config.sigma_b_sq)
    for n_out, n_in in config.layer_shapes:
        W = rng.standard_normal((n_out, n_in))
        W *= np.sqrt(config.sigma_w_sq / n_in)
        weights.append(W)
        if config.sigma_b_sq == 0.0:
            biases.append(np.zeros(n_out))
        else:
            biases.append(sb * rng.standard_normal(n_out))
    return Parameters(tuple(weights), tuple(biases))


def _check_input(params: Parameters, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.input_dim,):
        raise ValueError(f"input must have shape ({params.input_dim},), got {x.shape}")
    norm = np.linalg.norm(x)
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"input must be unit-norm (|x| = {norm!r})")
    return x


def forward(params: Parameters, x: np.ndarray, *, check_norm: bool = True) -> ForwardTrace:
    if check_norm:
        x = _check_input(params, x)
    else:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (params.input_dim,):
            raise ValueError(f"input must have shape ({params.input_dim},), got {x.shape}")
    acts = [x]
    preacts = []
    L = params.depth
    for l, (W, b) in enumerate(zip(params.weights, params.biases), start=1):
        h = W @ acts[-1] + b
        preacts.append(h)
        if l < L:
            acts.append(np.maximum(h, 0.0))
    return ForwardTrace(tuple(acts), tuple(preacts))


def backward(params: Parameters, trace: ForwardTrace) -> BackwardTrace:
    """Backpropagate ``delta^l = phi'(h^l) * (W^{l+1})^T delta^{l+1}`` with ``phi'(0) = 0``."""
    L = params.depth
    if len(trace.preacts) != L:
        raise ValueError("trace does not match parameter depth")
    deltas = [None] * L
    deltas[L - 1] = np.ones(1)
    for l in range(L - 1, 0, -1):
        gate = trace.preacts[l - 1] > 0.0
        back = params.weights[l].T @ deltas[l]
        if back.shape != gate.shape:
            raise ValueError("trace does not match parameter shapes")
        deltas[l - 1] = np.where(gate, back, 0.0)
    return BackwardTrace(tuple(deltas))


def gradients(params: Parameters, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """``(df/dW^l, df/db^l)`` for every layer."""
    fw = forward(params, x)
    bw = backward(params, fw)
    gw = [np.outer(d, a) for d, a in zip(bw.deltas, fw.acts)]
    return gw, list(bw.deltas)


def gd_step(params: Parameters, x: np.ndarray, y: float, eta: float) -> Parameters:
    """One gradient-descent step on ``0.5 * (f(x) - y)^2``; returns new parameters."""
    if not eta > 0:
        raise ValueError(f"learning rate must be positive, got {eta}")
    fw = forward(params, x)
    bw = backward(params, fw)
    scale = eta * (fw.output - y)
    weights = tuple(W - scale * np.outer(d, a) for W, d, a in zip(params.weights, bw.deltas, fw.acts))
    biases = tuple(b - scale * d for b, d in zip(params.biases, bw.deltas))
    return Parameters(weights, biases)


def predict(params: Parameters, X: np.ndarray) -> np.ndarray:
    """Outputs for a batch of inputs stacked as rows of ``X`` (no norm check)."""
    A = np.asarray(X, dtype=np.float64)
    L = params.depth
    for l, (W, b) in enumerate(zip(params.weights, params.biases), start=1):
        H = A @ W.T + b
        A = np.maximum(H, 0.0) if l < L else H
    return A[:, 0]


def mse_gradients(
    params: Parameters, X: np.ndarray, Y: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss ``mean(0.5 (f(x_i) - y_i)^2)`` over the batch and its parameter gradients."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.input_dim or Y.shape != (X.shape[0],):
        raise ValueError("X must be (n, n0) and Y must be (n,)")
    L = params.depth
    acts = [X]
    pre = []
    for l, (W, b) in enumerate(zip(params.weights, params.biases), start=1):
        H = acts[-1] @ W.T + b
        pre.append(H)
        if l < L:
            acts.append(np.maximum(H, 0.0))
    resid = pre[-1][:, 0] - Y
    n = X.shape[0]
    loss = 0.5 * float(resid @ resid) / n
    D = resid[:, None] / n  # dLoss/dh^L per sample
    gw = [None] * L
    gb = [None] * L
    for l in range(L, 0, -1):
        gw[l - 1] = D.T @ acts[l - 1]
        gb[l - 1] = D.sum(axis=0)
        if l > 1:
            D = np.where(pre[l - 2] > 0.0, D @ params.weights[l - 1], 0.0)
    return loss, gw, gb


def gd_step_batch(params: Parameters, X: np.ndarray, Y: np.ndarray, eta: float) -> tuple[Parameters, float]:
    """One full-batch GD step on the mean squared loss; returns new parameters and the pre-step loss."""
    if not eta > 0:
        raise ValueError(f"learning rate must be positive, got {eta}")
    loss, gw, gb = mse_gradients(params, X, Y)
    weights = tuple(W - eta * g for W, g in zip(params.weights, gw))
    biases = tuple(b - eta * g for b, g in zip(params.biases, gb))
    return Parameters(weights, biases), loss
