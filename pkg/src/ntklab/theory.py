"""Closed-form predictions for the NTK of deep ReLU networks at initialization.

All functions are pure and work in float64. The moment formulas accept
arbitrary width schedules; the limiting dispersion formulas assume constant
hidden width and are parametrized by the depth-to-width ratio ``lam = L / M``
and the input ratio ``alpha0 = n0 / M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ntklab.network import NetworkConfig

Phase = Literal["ordered", "eoc", "chaotic"]

EOC_TOL = 1e-12


def phase_of(sigma_w_sq: float) -> Phase:
    """Classify an initialization by ``a = sigma_w_sq / 2`` against 1."""
    if not sigma_w_sq > 0:
        raise ValueError(f"sigma_w_sq must be positive, got {sigma_w_sq}")
    a = sigma_w_sq / 2.0
    if abs(a - 1.0) <= EOC_TOL:
        return "eoc"
    return "ordered" if a < 1.0 else "chaotic"


@dataclass(frozen=True)
class PhasePoint:
    sigma_w_sq: float
    lam: float
    alpha0: float = 1.0

    def __post_init__(self):
        if not self.sigma_w_sq > 0:
            raise ValueError("sigma_w_sq must be positive")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")

    @property
    def a(self) -> float:
        return self.sigma_w_sq / 2.0

    @property
    def phase(self) -> Phase:
        return phase_of(self.sigma_w_sq)


@dataclass(frozen=True)
class MomentSet:
    e_theta_w: float
    e_theta_b: float
    e_theta_w_sq: float
    e_theta_b_sq: float
    e_theta_wb: float

    @property
    def e_theta(self) -> float:
        return self.e_theta_w + self.e_theta_b

    @property
    def e_theta_sq(self) -> float:
        return self.e_theta_w_sq + 2.0 * self.e_theta_wb + self.e_theta_b_sq

    @property
    def dispersion(self) -> float:
        return self.e_theta_sq / self.e_theta**2


# ---------------------------------------------------------------------------
# infinite-depth-and-width limits


def chaotic_limit(lam: float) -> float:
    # expm1 keeps the small-lam cancellation in 1 - (1 - e^{-4 lam}) / (4 lam) tame
    inner = 1.0 + math.expm1(-4.0 * lam) / (4.0 * lam)
    return math.exp(5.0 * lam) / (2.0 * lam) * inner


def eoc_limit(lam: float, alpha0: float) -> float:
    e5 = math.exp(5.0 * lam)
    e1 = math.exp(lam)
    a0 = alpha0
    inner = (
        e5 * (1.0 / (2.0 * lam) + (2.0 * a0 * a0 - 8.0 * a0) / (25.0 * lam * lam))
        + (e1 - e5) * (1.0 - 4.0 * a0) / (8.0 * lam * lam)
        + 2.0 * a0 / (5.0 * lam) * ((4.0 - a0) / (5.0 * lam) - 1.0 - a0)
    )
    return inner / (1.0 + a0) ** 2


def eoc_limit_regrouped(lam: float, alpha0: float) -> float:
    """Same quantity as :func:`eoc_limit`, collected by powers of ``1/lam``.

    Kept as an algebraic cross-check of the primary grouping.
    """
    e5 = math.exp(5.0 * lam)
    e1 = math.exp(lam)
    a0 = alpha0
    inner = (
        e5 * (0.5 + (16.0 * a0 * a0 + 36.0 * a0 - 25.0) / (200.0 * lam))
        + e1 * (1.0 - 4.0 * a0) / (8.0 * lam)
        + 2.0 * a0 * (4.0 - a0) / (25.0 * lam)
        - 2.0 * a0 * (1.0 + a0) / 5.0
    )
    return inner / ((1.0 + a0) ** 2 * lam)


def dispersion_limit(p: PhasePoint) -> float:
    """Limit of ``E[Theta^2(x,x)] / E[Theta(x,x)]^2`` as ``L, M -> inf`` with ``L/M = lam``."""
    phase = p.phase
    if phase == "ordered":
        return 1.0
    if phase == "chaotic":
        return chaotic_limit(p.lam)
    return eoc_limit(p.lam, p.alpha0)


# ---------------------------------------------------------------------------
# finite-size moments


def _check_theory_config(config: NetworkConfig) -> None:
    if config.sigma_b_sq != 0.0:
        raise ValueError("moment formulas assume zero biases (sigma_b_sq == 0)")


def _hidden_products(widths: Sequence[int], factor: float) -> np.ndarray:
    """Prefix products ``P[k] = prod_{j=1}^{k-1} (1 + factor / n_j)`` for k = 1..L.

    ``P`` is indexed so that ``prod_{j=i}^{k-1} = P[k] / P[i]``; entry 0 unused.
    """
    L = len(widths)
    out = np.ones(L + 1)
    for k in range(2, L + 1):
        out[k] = out[k - 1] * (1.0 + factor / widths[k - 1])
    return out


def _log_scale(config: NetworkConfig) -> float:
    """Log of the common factor ``a^{L-1}`` pulled out of the moments when ``a > 1``.

    First moments carry it once and second moments twice; dividing it out keeps
    deep chaotic networks finite. For ``a <= 1`` every power of ``a`` that
    appears is at most 1 and no rescaling is needed.
    """
    a = config.a
    return (config.depth - 1) * math.log(a) if a > 1.0 else 0.0


def _scaled_first(config: NetworkConfig, log_s: float) -> tuple[float, float]:
    L = config.depth
    n = config.widths
    a = config.a
    log_a = math.log(a)
    e_w = math.exp((L - 1) * log_a - log_s) * sum(n[l - 1] / n[0] for l in range(1, L + 1))
    if abs(a - 1.0) <= EOC_TOL:
        e_b = float(L)
    elif a > 1.0:
        # (a^L - 1) / (a - 1) divided by a^{L-1}
        e_b = (a - math.exp((1 - L) * log_a)) / (a - 1.0)
    else:
        e_b = (1.0 - a**L) / (1.0 - a) * math.exp(-log_s)
    return e_w, e_b


def expected_moments(config: NetworkConfig) -> tuple[float, float]:
    """First moments ``(E[Theta_W(x,x)], E[Theta_b(x,x)])`` for a unit-norm input."""
    _check_theory_config(config)
    log_s = _log_scale(config)
    e_w, e_b = _scaled_first(config, log_s)
    scale = _checked_exp(log_s)
    return e_w * scale, e_b * scale


def _checked_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        raise OverflowError(
            "moment exceeds the float64 range; use dispersion_finite, which works with scaled moments"
        ) from None


def _scaled_second(config: NetworkConfig) -> MomentSet:
    """All five moments divided by ``s`` (first) and ``s^2`` (second), ``s`` from :func:`_log_scale`."""
    _check_theory_config(config)
    log_s = _log_scale(config)
    e_w, e_b = _scaled_first(config, log_s)
    L = config.depth
    n = [float(w) for w in config.widths]
    log_a = math.log(config.a)
    # X(i, j) = xp[j] / xp[i], C(i, j) = cp[j] / cp[i]
    xp = _hidden_products(config.widths, 5.0)
    cp = _hidden_products(config.widths, 1.0)
    rel = [n[l - 1] / n[0] for l in range(1, L + 1)]  # rel[l-1] = n_{l-1} / n0

    def apow(k: float) -> float:
        # a^k / s^2 for the second moments; exponents are <= 0 after scaling when a > 1
        return math.exp(k * log_a - 2.0 * log_s)

    w_diag = sum(r * r for r in rel)
    w_cross = 0.0
    b_diag = 0.0
    b_cross = 0.0
    wb_diag = 0.0
    wb_cross = 0.0
    for l1 in range(1, L + 1):
        x_l1 = xp[L] / xp[l1]
        b_diag += x_l1 * apow(2 * (L - l1))
        wb_diag += rel[l1 - 1] * x_l1 * apow(2 * L - l1 - 1)
        for l2 in range(l1 + 1, L + 1):
            c12 = cp[l2] / cp[l1]
            x12 = xp[l2] / xp[l1]
            x2L = xp[L] / xp[l2]
            w_cross += rel[l2 - 1] * rel[l1 - 1] * c12 / x12
            b_cross += x2L * apow(2 * L - l1 - l2)
            wb_cross += x2L * (
                rel[l2 - 1] * c12 * apow(2 * L - l1 - 1)
                + rel[l1 - 1] * apow(2 * L - l2 - 1)
            )
    e_w_sq = apow(2 * (L - 1)) * xp[L] * (w_diag + 2.0 * w_cross)
    e_b_sq = b_diag + 2.0 * b_cross
    e_wb = wb_diag + wb_cross
    return MomentSet(e_w, e_b, e_w_sq, e_b_sq, e_wb)


def second_moments(config: NetworkConfig) -> MomentSet:
    """First and second moments of ``Theta_W`` and ``Theta_b`` for a unit-norm input.

    The unspecified ``O(M^{-3/2})`` corrections inside the per-layer factors
    ``1 + 5/n_k`` and ``1 + 1/n_k`` are dropped.

    Raises
    ------
    OverflowError
        If a moment itself exceeds the float64 range (very deep chaotic networks).
    """
    m = _scaled_second(config)
    log_s = _log_scale(config)
    s1 = _checked_exp(log_s)
    s2 = _checked_exp(2.0 * log_s)
    return MomentSet(
        m.e_theta_w * s1, m.e_theta_b * s1, m.e_theta_w_sq * s2, m.e_theta_b_sq * s2, m.e_theta_wb * s2
    )


def dispersion_finite(config: NetworkConfig) -> float:
    """Finite-width prediction of ``E[Theta^2(x,x)] / E[Theta(x,x)]^2``; not clamped.

    Evaluated on the scaled moments, so it stays finite where the moments overflow.
    """
    return _scaled_second(config).dispersion


# ---------------------------------------------------------------------------
# correlation maps and the ordered-phase off-diagonal estimate


def _check_unit_interval(t: float) -> None:
    if not -1.0 <= t <= 1.0:
        raise ValueError(f"argument must lie in [-1, 1], got {t}")


def g_map(t: float) -> float:
    """Probability-like factor ``(pi/2 + arcsin t) / pi`` for two ReLU gates with correlation t."""
    _check_unit_interval(t)
    return (0.5 * math.pi + math.asin(t)) / math.pi


def r_map(t: float) -> float:
    """Cosine of ReLU activations given the cosine ``t`` of their pre-activations."""
    _check_unit_interval(t)
    return (math.sqrt(max(0.0, 1.0 - t * t)) + 0.5 * math.pi * t + t * math.asin(t)) / math.pi


def rho_sequence(rho0: float, k: int) -> list[float]:
    """``[rho0, r(rho0), ..., r^k(rho0)]``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    _check_unit_interval(rho0)
    seq = [float(rho0)]
    for _ in range(k):
        # r maps [-1, 1] into [0, 1]; clip guards round-off right at 1
        seq.append(min(1.0, r_map(seq[-1])))
    return seq


def nondiag_lower_bound(rho0: float, L: int, a: float) -> float:
    """Ordered-phase estimate of ``E[Theta(x, x~)] / E[Theta(x, x)]``.

    Weighted average over layers ``l`` of ``prod_{k=l}^{L-1} g(rho_{k-1})``
    with weights ``a^{L-l}``, where ``rho_0`` is the input cosine.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if not a > 0:
        raise ValueError("a must be positive")
    _check_unit_interval(rho0)
    rho = rho_sequence(rho0, max(L - 2, 0))
    gates = [g_map(rho[k - 1]) for k in range(1, L)]  # gates[k-1] = g(rho_{k-1})
    num = 0.0
    den = 0.0
    prod = 1.0
    # accumulate from l = L downwards so the product grows one factor at a time
    for l in range(L, 0, -1):
        if l < L:
            prod *= gates[l - 1]
        w = a ** (L - l)
        num += w * prod
        den += w
    return num / den
