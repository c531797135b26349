"""Estimators for the dispersion ratio ``mu_2 / mu_1^2`` of Monte-Carlo NTK draws.

For i.i.d. draws ``theta_1..theta_N`` the leave-one-out statistic

    ((S1 - theta_i)^2 - (S2 - theta_i^2)) / ((N - 1)(N - 2))

is an unbiased estimate of ``mu_1^2`` that is independent of ``theta_i``.
Dividing ``theta_i^2`` by it removes the leading small-sample bias of the
plug-in ratio, although ``E[1/D] > 1/E[D]`` leaves a positive residual bias of
order ``4 cv^2 / N`` (``cv`` the coefficient of variation). The estimators
below average those terms with different prefactors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

Normalization = Literal["mean", "printed"]


class DegenerateSampleError(ValueError):
    """A leave-one-out squared-mean estimate is not positive."""


@dataclass(frozen=True)
class Sample:
    values: np.ndarray

    def __init__(self, values: Sequence[float]):
        arr = np.array(values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n


def _as_values(s) -> np.ndarray:
    return s.values if isinstance(s, Sample) else np.asarray(s, dtype=np.float64).ravel()


def loo_mean_sq(values: np.ndarray) -> np.ndarray:
    """Leave-one-out unbiased estimates of ``mu_1^2``, in O(N) from running totals."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    s1 = v.sum()
    s2 = np.dot(v, v)
    return ((s1 - v) ** 2 - (s2 - v * v)) / ((n - 1) * (n - 2))


def loo_mean_sq_naive(values: np.ndarray) -> np.ndarray:
    """O(N^2) reference for :func:`loo_mean_sq`: explicit sum over ordered pairs ``j != k``."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    out = np.empty(n)
    for i in range(n):
        rest = np.delete(v, i)
        acc = 0.0
        for j in range(rest.size):
            for k in range(rest.size):
                if j != k:
                    acc += rest[j] * rest[k]
        out[i] = acc / ((n - 1) * (n - 2))
    return out


def dispersion_estimator(s, normalization: Normalization = "mean") -> float:
    """Bias-corrected estimate of ``E[theta^2] / E[theta]^2``.

    Parameters
    ----------
    s : Sample or array_like
        At least three i.i.d. draws.
    normalization : {"mean", "printed"}
        ``"mean"`` averages the ``N`` leave-one-out terms (prefactor ``1/N``)
        and returns exactly 1 on a constant sample.
        ``"printed"`` uses the prefactor ``1/(N-2)``, which inflates the
        ``"mean"`` value by the factor ``N/(N-2)``.

    Raises
    ------
    ValueError
        If fewer than three values are given.
    DegenerateSampleError
        If any leave-one-out estimate of ``mu_1^2`` is not positive.
    """
    v = _as_values(s)
    n = v.size
    if n < 3:
        raise ValueError(f"dispersion estimator needs at least 3 values, got {n}")
    if normalization not in ("mean", "printed"):
        raise ValueError(f"unknown normalization {normalization!r}")
    if v[0] > 0.0 and np.all(v == v[0]):
        # zero spread: every leave-one-out term is exactly 1 in exact arithmetic
        return 1.0 if normalization == "mean" else n / (n - 2)
    den = loo_mean_sq(v)
    if np.any(den <= 0.0):
        bad = int(np.argmin(den))
        raise DegenerateSampleError(
            f"leave-one-out squared-mean estimate is {den[bad]!r} at index {bad}"
        )
    total = float(np.sum(v * v / den))
    return total / n if normalization == "mean" else total / (n - 2)


def naive_dispersion(s) -> float:
    """Plug-in ratio ``mean(theta^2) / mean(theta)^2`` (biased)."""
    v = _as_values(s)
    if v.size < 1:
        raise ValueError("empty sample")
    m1 = v.mean()
    if m1 == 0.0:
        raise DegenerateSampleError("sample mean is zero")
    return float(np.mean(v * v) / (m1 * m1))


def ratio_of_means(pairs: np.ndarray) -> float:
    """:func:`mean_ratio_estimator` on an ``(n, 2)`` array of (numerator, denominator) rows."""
    return mean_ratio_estimator(pairs[:, 0], pairs[:, 1])


def mean_ratio_estimator(numerator, denominator) -> float:
    """Ratio of sample means of seed-paired draws, ``sum(num) / sum(den)``."""
    num = _as_values(numerator)
    den = _as_values(denominator)
    if num.size != den.size:
        raise ValueError("numerator and denominator samples must be paired (equal length)")
    d = float(den.sum())
    if d == 0.0:
        raise ZeroDivisionError("denominator sample sums to zero")
    return float(num.sum()) / d


class BootstrapFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class BootstrapResult:
    se: float
    b: int
    skipped: int


MAX_SKIP_FRACTION = 0.1


def bootstrap(
    s,
    b: int = 1000,
    seed: int = 0,
    statistic: Callable[[np.ndarray], float] = dispersion_estimator,
) -> BootstrapResult:
    """Bootstrap standard error of ``statistic`` with resamples of the full sample size.

    ``s`` may be two-dimensional, in which case rows are resampled together
    (paired draws). Resamples on which the statistic raises
    :class:`DegenerateSampleError` are skipped; more than 10% skips raise
    :class:`BootstrapFailure`.
    """
    v = s.values if isinstance(s, Sample) else np.asarray(s, dtype=np.float64)
    n = len(v)
    if n < 3:
        raise ValueError("bootstrap needs at least 3 values")
    if b < 2:
        raise ValueError("bootstrap needs at least 2 resamples")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(b, n))
    stats = []
    skipped = 0
    for row in idx:
        try:
            stats.append(statistic(v[row]))
        except (DegenerateSampleError, ZeroDivisionError):
            skipped += 1
    if skipped > MAX_SKIP_FRACTION * b:
        raise BootstrapFailure(f"{skipped} of {b} bootstrap resamples were degenerate")
    return BootstrapResult(float(np.std(stats, ddof=1)), b, skipped)


def bootstrap_se(s, b: int = 1000, seed: int = 0) -> float:
    """Bootstrap standard error of :func:`dispersion_estimator`."""
    return bootstrap(s, b, seed).se


@dataclass(frozen=True)
class DispersionEstimate:
    r_hat: float
    bootstrap_se: float
    n: int
    b: int
    skipped: int = 0


def estimate_dispersion(s, b: int = 1000, seed: int = 0) -> DispersionEstimate:
    v = _as_values(s)
    r = dispersion_estimator(v)
    boot = bootstrap(v, b, seed)
    return DispersionEstimate(r, boot.se, int(v.size), b, boot.skipped)
