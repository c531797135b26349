"""Empirical neural tangent kernel of :mod:`ntklab.network` models.

The fast path uses the layerwise identity

    Theta(x, x~) = sum_l <delta^l, delta~^l> <x^{l-1}, x~^{l-1}> + sum_l <delta^l, delta~^l>,

which follows from ``df/dW^l = delta^l (x^{l-1})^T`` and ``df/db^l = delta^l``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ntklab.network import BackwardTrace, ForwardTrace, Parameters, backward, forward, gradients


@dataclass(frozen=True)
class NtkBreakdown:
    theta_w: float
    theta_b: float
    theta: float

    @classmethod
    def from_parts(cls, theta_w: float, theta_b: float) -> "NtkBreakdown":
        return cls(float(theta_w), float(theta_b), float(theta_w + theta_b))


def _traces(params: Parameters, x) -> tuple[ForwardTrace, BackwardTrace]:
    fw = forward(params, x)
    return fw, backward(params, fw)


def ntk_from_traces(
    fa: ForwardTrace, ba: BackwardTrace, fb: ForwardTrace, bb: BackwardTrace
) -> NtkBreakdown:
    theta_w = 0.0
    theta_b = 0.0
    for da, db, xa, xb in zip(ba.deltas, bb.deltas, fa.acts, fb.acts):
        dd = float(da @ db)
        theta_w += dd * float(xa @ xb)
        theta_b += dd
    return NtkBreakdown.from_parts(theta_w, theta_b)


def _canonical(x: np.ndarray, x_tilde: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    x_tilde = np.ascontiguousarray(x_tilde, dtype=np.float64)
    if x_tilde.tobytes() < x.tobytes():
        return x_tilde, x
    return x, x_tilde


def ntk_pair_fast(params: Parameters, x, x_tilde) -> NtkBreakdown:
    """NTK of one input pair from per-layer inner products, ``O(sum_l n_l)`` after the passes."""
    x, x_tilde = _canonical(x, x_tilde)
    fa, ba = _traces(params, x)
    if np.array_equal(x, x_tilde):
        return ntk_from_traces(fa, ba, fa, ba)
    fb, bb = _traces(params, x_tilde)
    return ntk_from_traces(fa, ba, fb, bb)


def ntk_pair_direct(params: Parameters, x, x_tilde) -> NtkBreakdown:
    """Brute-force NTK: explicit dot product over every parameter gradient."""
    x, x_tilde = _canonical(x, x_tilde)
    gw_a, gb_a = gradients(params, x)
    gw_b, gb_b = gradients(params, x_tilde)
    theta_w = sum(float(np.sum(ga * gb)) for ga, gb in zip(gw_a, gw_b))
    theta_b = sum(float(np.sum(ga * gb)) for ga, gb in zip(gb_a, gb_b))
    return NtkBreakdown.from_parts(theta_w, theta_b)


def ntk_gram(params: Parameters, dataset: Sequence[np.ndarray]) -> np.ndarray:
    """Full NTK Gram matrix; one forward/backward pass per sample."""
    if len(dataset) == 0:
        raise ValueError("dataset must not be empty")
    traces = [_traces(params, x) for x in dataset]
    n = len(traces)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = ntk_from_traces(*traces[i], *traces[j]).theta
    return G


def rescale_ntk(b: NtkBreakdown, alpha: float) -> NtkBreakdown:
    """NTK of the output-rescaled model ``alpha * f``."""
    s = alpha * alpha
    return NtkBreakdown(b.theta_w * s, b.theta_b * s, b.theta * s)


@dataclass(frozen=True)
class LayerRatios:
    """Squared-norm ratios between consecutive layers, ``l = 1..L-1``.

    ``n_x[l-1] = |x^l|^2 / |x^{l-1}|^2`` and ``n_delta[l-1] = |delta^l|^2 / |delta^{l+1}|^2``.
    Entries with a zero denominator are NaN and flagged in the masks.
    """

    n_x: np.ndarray
    n_delta: np.ndarray
    x_undefined: np.ndarray
    delta_undefined: np.ndarray

    @property
    def any_undefined(self) -> bool:
        return bool(self.x_undefined.any() or self.delta_undefined.any())


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    bad = den == 0.0
    out = np.full(num.shape, np.nan)
    np.divide(num, den, out=out, where=~bad)
    return out, bad


def layer_ratios(fw: ForwardTrace, bw: BackwardTrace) -> LayerRatios:
    xs = np.array([float(a @ a) for a in fw.acts])  # |x^0|^2 .. |x^{L-1}|^2
    ds = np.array([float(d @ d) for d in bw.deltas])  # |delta^1|^2 .. |delta^L|^2
    n_x, x_bad = _safe_ratio(xs[1:], xs[:-1])
    n_d, d_bad = _safe_ratio(ds[:-1], ds[1:])
    return LayerRatios(n_x, n_d, x_bad, d_bad)


@dataclass(frozen=True)
class StructureMetrics:
    theta_d: float
    theta_c: float
    theta_n: float

    @property
    def class_gap(self) -> float:
        """``(theta_c - theta_n) / theta_d``: zero for a label-agnostic kernel."""
        return (self.theta_c - self.theta_n) / self.theta_d


def structure_metrics(gram: np.ndarray, labels: Sequence) -> StructureMetrics:
    """Mean diagonal, within-class off-diagonal and cross-class kernel values.

    The class averages are taken per class first and then averaged over classes.
    """
    G = np.asarray(gram, dtype=np.float64)
    labels = np.asarray(labels)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError("gram must be square")
    if labels.shape != (G.shape[0],):
        raise ValueError("labels must have one entry per row of gram")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise ValueError("cross-class mean undefined: need at least two classes")
    within = []
    across = []
    for k in classes:
        inside = labels == k
        m = int(inside.sum())
        if m < 2:
            raise ValueError(f"class {k!r} has fewer than 2 members; within-class mean undefined")
        block = G[np.ix_(inside, inside)]
        within.append((block.sum() - np.trace(block)) / (m * (m - 1)))
        across.append(G[np.ix_(inside, ~inside)].sum() / (m * (len(labels) - m)))
    return StructureMetrics(float(np.mean(np.diag(G))), float(np.mean(within)), float(np.mean(across)))


@dataclass(frozen=True)
class StepChange:
    """Diagonal NTK before a gradient step and its exact increment."""

    theta: float
    delta_theta: float

    @property
    def relative(self) -> float:
        return abs(self.delta_theta) / self.theta


def _relu_increment(h: np.ndarray, dh: np.ndarray) -> np.ndarray:
    # relu(h + dh) - relu(h) without cancellation where the sign does not flip
    out = np.where(h > 0.0, dh, 0.0)
    flip = (h > 0.0) != (h + dh > 0.0)
    if flip.any():
        out[flip] = np.maximum(h[flip] + dh[flip], 0.0) - np.maximum(h[flip], 0.0)
    return out


def _gated_increment(gate_old, gate_new, back_old, d_back):
    # gate_new * (back_old + d_back) - gate_old * back_old
    out = np.where(gate_new, d_back, 0.0)
    on = gate_new & ~gate_old
    out[on] = back_old[on] + d_back[on]
    off = gate_old & ~gate_new
    out[off] = -back_old[off]
    return out


def ntk_step_change(params: Parameters, x, y: float, eta: float) -> StepChange:
    """``Theta(x, x)`` and its change after one GD step on ``0.5 (f(x) - y)^2``.

    The increment is propagated layer by layer (``dh``, ``dx``, ``d delta``)
    instead of subtracting two independently computed kernels, so relative
    changes far below machine epsilon are still resolved. ``eta = 0`` yields
    an increment of exactly zero.
    """
    if eta < 0:
        raise ValueError("learning rate must be non-negative")
    fw, bw = _traces(params, x)
    L = params.depth
    acts, pre, deltas = fw.acts, fw.preacts, bw.deltas
    c = -eta * (fw.output - y)  # dW^l = c delta^l x^{l-1}^T, db^l = c delta^l

    # forward increments
    d_acts = [np.zeros_like(acts[0])]
    d_pre = []
    for l in range(1, L + 1):
        W = params.weights[l - 1]
        x_old, dx = acts[l - 1], d_acts[l - 1]
        dW_x = c * deltas[l - 1] * (x_old @ (x_old + dx))
        dh = dW_x + W @ dx + c * deltas[l - 1]
        d_pre.append(dh)
        if l < L:
            d_acts.append(_relu_increment(pre[l - 1], dh))

    # backward increments; d_delta^L = 0
    d_deltas = [None] * L
    d_deltas[L - 1] = np.zeros(1)
    for l in range(L - 1, 0, -1):
        W_next = params.weights[l]
        d_next = deltas[l]
        dd_next = d_deltas[l]
        new_next = d_next + dd_next
        back_old = W_next.T @ d_next
        # (dW^{l+1})^T delta'^{l+1} = c x^l (delta^{l+1} . delta'^{l+1})
        d_back = W_next.T @ dd_next + c * acts[l] * (d_next @ new_next)
        h = pre[l - 1]
        d_deltas[l - 1] = _gated_increment(h > 0.0, h + d_pre[l - 1] > 0.0, back_old, d_back)

    theta = 0.0
    d_theta = 0.0
    for l in range(1, L + 1):
        d, dd = deltas[l - 1], d_deltas[l - 1]
        a, da = acts[l - 1], d_acts[l - 1]
        nd = float(d @ d)
        na = float(a @ a)
        d_nd = float(dd @ (2.0 * d + dd))
        d_na = float(da @ (2.0 * a + da))
        theta += nd * (na + 1.0)
        d_theta += d_nd * (na + d_na + 1.0) + nd * d_na
    return StepChange(theta, d_theta)
