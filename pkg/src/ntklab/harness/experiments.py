"""Monte-Carlo sweeps comparing sampled NTK statistics with the closed-form predictions.

Every sweep enumerates its grid cells in a fixed order, evaluates each cell
independently (optionally in worker processes) and returns the rows sorted by
cell index. All randomness is derived from ``(master seed, cell, sample)`` so a
cell's result does not depend on which other cells run or in what order.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ntklab.harness.config import SweepConfig
from ntklab.harness.inputs import WidthSchedule, gen_pair_with_cosine, gen_unit_input, width_schedule
from ntklab.harness.seeding import STREAM_DATA, bootstrap_seed, derive_seed, input_seed, sample_seed
from ntklab.network import NetworkConfig, backward, forward, gd_step_batch, init_network, predict
from ntklab.ntk import ntk_from_traces, ntk_gram, ntk_pair_fast, ntk_step_change, structure_metrics
from ntklab.stats import (
    BootstrapFailure,
    DegenerateSampleError,
    bootstrap,
    dispersion_estimator,
    mean_ratio_estimator,
    ratio_of_means,
)
from ntklab.theory import (
    PhasePoint,
    dispersion_finite,
    dispersion_limit,
    expected_moments,
    nondiag_lower_bound,
    phase_of,
)


@dataclass
class SweepResult:
    kind: str
    config: SweepConfig
    columns: tuple[str, ...]
    rows: list[dict[str, Any]]
    notes: list[str] = field(default_factory=list)

    def column(self, name: str) -> list[Any]:
        return [r[name] for r in self.rows]

    def where(self, **match: Any) -> list[dict[str, Any]]:
        return [r for r in self.rows if all(r[k] == v for k, v in match.items())]


def _run_cells(fn: Callable, tasks: Sequence[tuple], workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _nan() -> float:
    return float("nan")


# ---------------------------------------------------------------------------
# dispersion of the diagonal NTK


DISPERSION_COLUMNS = (
    "cell", "sigma_w_sq", "L", "M", "n0", "alpha0", "lambda", "r_hat", "bootstrap_se",
    "theory_limit", "theory_finite", "n", "seed", "status",
)


def sample_diagonal_ntk(net: NetworkConfig, x: np.ndarray, master: int, cell: int, n: int) -> np.ndarray:
    """``Theta(x, x)`` for ``n`` independent initializations of ``net``."""
    return np.array(
        [ntk_pair_fast(init_network(net, sample_seed(master, cell, s)), x, x).theta for s in range(n)]
    )


def _dispersion_cell(cfg: SweepConfig, cell: int, sw: float, L: int) -> dict[str, Any]:
    net = NetworkConfig.constant(L, cfg.width, n0=cfg.n0, sigma_w_sq=sw)
    x = gen_unit_input(cfg.n0, input_seed(cfg.seed, cell))
    thetas = sample_diagonal_ntk(net, x, cfg.seed, cell, cfg.samples)
    lam = L / cfg.width
    alpha0 = cfg.n0 / cfg.width
    row = dict(
        cell=cell, sigma_w_sq=sw, L=L, M=cfg.width, n0=cfg.n0, alpha0=alpha0,
        theory_limit=dispersion_limit(PhasePoint(sw, lam, alpha0)),
        theory_finite=dispersion_finite(net), n=cfg.samples, seed=cfg.seed,
    )
    row["lambda"] = lam
    try:
        row["r_hat"] = dispersion_estimator(thetas)
        row["bootstrap_se"] = bootstrap(thetas, cfg.bootstrap, bootstrap_seed(cfg.seed, cell)).se
        row["status"] = "ok"
    except (DegenerateSampleError, BootstrapFailure) as exc:
        row.update(r_hat=_nan(), bootstrap_se=_nan(), status=f"degenerate: {exc}")
    return row


def run_dispersion_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Dispersion ``E[Theta^2] / E[Theta]^2`` of ``Theta(x, x)`` per (sigma_w_sq, L) cell."""
    _expect(cfg, "dispersion")
    tasks = [(cfg, i, sw, L) for i, (sw, L) in enumerate(itertools.product(cfg.sigma_w_sq, cfg.depths))]
    rows = _run_cells(_dispersion_cell, tasks, workers)
    return SweepResult("dispersion", cfg, DISPERSION_COLUMNS, rows)


# ---------------------------------------------------------------------------
# off-diagonal to diagonal ratio


NONDIAG_COLUMNS = (
    "cell", "sigma_w_sq", "L", "M", "n0", "rho0", "ratio", "ratio_se", "bound",
    "offdiag_r_hat", "offdiag_se", "n", "seed", "status",
)


def _nondiag_cell(cfg: SweepConfig, cell: int, sw: float, L: int, rho: float) -> dict[str, Any]:
    net = NetworkConfig.constant(L, cfg.width, n0=cfg.n0, sigma_w_sq=sw)
    x, xt = gen_pair_with_cosine(cfg.n0, rho, input_seed(cfg.seed, cell))
    pairs = np.empty((cfg.samples, 2))
    for s in range(cfg.samples):
        params = init_network(net, sample_seed(cfg.seed, cell, s))
        fa = forward(params, x)
        ba = backward(params, fa)
        fb = forward(params, xt)
        bb = backward(params, fb)
        if xt.tobytes() < x.tobytes():
            off = ntk_from_traces(fb, bb, fa, ba).theta
        else:
            off = ntk_from_traces(fa, ba, fb, bb).theta
        pairs[s] = off, ntk_from_traces(fa, ba, fa, ba).theta
    bseed = bootstrap_seed(cfg.seed, cell)
    row = dict(
        cell=cell, sigma_w_sq=sw, L=L, M=cfg.width, n0=cfg.n0, rho0=rho,
        ratio=mean_ratio_estimator(pairs[:, 0], pairs[:, 1]),
        ratio_se=bootstrap(pairs, cfg.bootstrap, bseed, ratio_of_means).se,
        bound=nondiag_lower_bound(rho, L, sw / 2.0), n=cfg.samples, seed=cfg.seed, status="ok",
    )
    try:
        row["offdiag_r_hat"] = dispersion_estimator(pairs[:, 0])
        row["offdiag_se"] = bootstrap(pairs[:, 0], cfg.bootstrap, bseed).se
    except (DegenerateSampleError, BootstrapFailure) as exc:
        row.update(offdiag_r_hat=_nan(), offdiag_se=_nan(), status=f"offdiag degenerate: {exc}")
    return row


def run_nondiag_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Ratio ``E[Theta(x, x~)] / E[Theta(x, x)]`` per (sigma_w_sq, L, rho0) cell."""
    _expect(cfg, "nondiag")
    grid = itertools.product(cfg.sigma_w_sq, cfg.depths, cfg.cosines)
    tasks = [(cfg, i, sw, L, rho) for i, (sw, L, rho) in enumerate(grid)]
    rows = _run_cells(_nondiag_cell, tasks, workers)
    return SweepResult("nondiag", cfg, NONDIAG_COLUMNS, rows)


# ---------------------------------------------------------------------------
# NTK change in one gradient step


GD_COLUMNS = (
    "cell", "sigma_w_sq", "L", "M", "n0", "eta", "eta_a_pow_L", "mean_rel_change",
    "bootstrap_se", "n", "seed", "status",
)


def _gd_cell(cfg: SweepConfig, cell: int, sw: float, L: int) -> dict[str, Any]:
    net = NetworkConfig.constant(L, cfg.width, n0=cfg.n0, sigma_w_sq=sw)
    x = gen_unit_input(cfg.n0, input_seed(cfg.seed, cell))
    rel = np.empty(cfg.samples)
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(cfg.samples):
            params = init_network(net, sample_seed(cfg.seed, cell, s))
            rel[s] = ntk_step_change(params, x, 0.0, cfg.eta).relative
    stability = cfg.eta * math.exp(L * math.log(net.a)) if cfg.eta > 0 else 0.0
    row = dict(
        cell=cell, sigma_w_sq=sw, L=L, M=cfg.width, n0=cfg.n0, eta=cfg.eta, eta_a_pow_L=stability,
        n=cfg.samples, seed=cfg.seed,
    )
    if not np.all(np.isfinite(rel)):
        row.update(mean_rel_change=float(np.mean(rel)), bootstrap_se=_nan(),
                   status="nonfinite: step diverged in floating point")
        return row
    row["mean_rel_change"] = float(rel.mean())
    with np.errstate(over="ignore"):
        # huge but finite changes in deep chaotic cells may overflow the spread
        row["bootstrap_se"] = bootstrap(rel, cfg.bootstrap, bootstrap_seed(cfg.seed, cell), np.mean).se
    row["status"] = "unstable: eta * a^L > 1" if stability > 1.0 else "ok"
    return row


def run_gd_step_experiment(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Mean relative change ``|dTheta| / Theta`` of ``Theta(x, x)`` after one GD step with target 0."""
    _expect(cfg, "gd_step")
    tasks = [(cfg, i, sw, L) for i, (sw, L) in enumerate(itertools.product(cfg.sigma_w_sq, cfg.depths))]
    rows = _run_cells(_gd_cell, tasks, workers)
    notes = []
    for r in rows:
        if r["eta_a_pow_L"] > 1.0:
            msg = (f"cell {r['cell']} (sigma_w_sq={r['sigma_w_sq']}, L={r['L']}): eta * a^L = "
                   f"{r['eta_a_pow_L']:.3g} > 1; the step leaves the small-step regime")
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
    return SweepResult("gd_step", cfg, GD_COLUMNS, rows, notes)


# ---------------------------------------------------------------------------
# NTK structure during training


STRUCTURE_COLUMNS = (
    "cell", "run", "sigma_w_sq", "L", "M", "epoch", "train_loss", "theta_d", "theta_c",
    "theta_n", "class_gap", "min_eig_rel", "final",
)


class TrainingDivergedError(RuntimeError):
    pass


def make_blobs(cfg: SweepConfig, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit-normalized Gaussian blobs around random unit centers, with one-vs-rest targets.

    Returns ``(X, labels, y)``: class 0 is the positive class (target +1), every
    other class has target -1.
    """
    rng = np.random.default_rng(seed)
    d = cfg.input_dim
    centers = [gen_unit_input(d, rng) for _ in range(cfg.classes)]
    X = []
    labels = []
    for k, c in enumerate(centers):
        pts = c + cfg.blob_std / math.sqrt(d) * rng.standard_normal((cfg.points_per_class, d))
        X.append(pts / np.linalg.norm(pts, axis=1, keepdims=True))
        labels += [k] * cfg.points_per_class
    labels = np.array(labels)
    y = np.where(labels == 0, 1.0, -1.0)
    return np.vstack(X), labels, y


def _snapshot(params, X, labels, y, epoch: int, final: bool) -> dict[str, Any]:
    G = ntk_gram(params, list(X))
    m = structure_metrics(G, labels)
    eig = np.linalg.eigvalsh(G)
    resid = predict(params, X) - y
    return dict(
        epoch=epoch, train_loss=0.5 * float(resid @ resid) / len(y), theta_d=m.theta_d,
        theta_c=m.theta_c, theta_n=m.theta_n, class_gap=m.class_gap,
        min_eig_rel=float(eig[0] / np.trace(G)), final=int(final),
    )


def _structure_run(cfg: SweepConfig, cell: int, sw: float, L: int, run: int) -> list[dict[str, Any]]:
    X, labels, y = make_blobs(cfg, derive_seed(cfg.seed, STREAM_DATA, cell, run))
    if len(np.unique(labels)) < 2:
        raise ValueError("structure experiment needs at least two classes")
    net = NetworkConfig.constant(L, cfg.width, n0=cfg.input_dim, sigma_w_sq=sw)
    params = init_network(net, sample_seed(cfg.seed, cell, run))
    base = dict(cell=cell, run=run, sigma_w_sq=sw, L=L, M=cfg.width)
    snaps = [_snapshot(params, X, labels, y, 0, False)]
    loss0 = snaps[0]["train_loss"]
    epoch = 0
    loss = loss0
    while epoch < cfg.max_epochs and loss >= cfg.target_loss:
        params, _ = gd_step_batch(params, X, y, cfg.eta)
        epoch += 1
        resid = predict(params, X) - y
        loss = 0.5 * float(resid @ resid) / len(y)
        if not math.isfinite(loss) or loss > 10.0 * loss0:
            raise TrainingDivergedError(
                f"cell {cell} run {run}: loss {loss:.4g} at epoch {epoch} exceeds 10x the initial "
                f"loss {loss0:.4g}; lower eta"
            )
        if epoch % cfg.snapshot_every == 0 and loss >= cfg.target_loss:
            snaps.append(_snapshot(params, X, labels, y, epoch, False))
    snaps.append(_snapshot(params, X, labels, y, epoch, True))
    return [{**base, **s} for s in snaps]


def run_structure_experiment(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Track diagonal, within-class and cross-class NTK means while training on toy blobs.

    ``samples`` independent runs (fresh data and initialization each) are made
    per (sigma_w_sq, L) cell.
    """
    _expect(cfg, "structure")
    tasks = []
    for cell, (sw, L) in enumerate(itertools.product(cfg.sigma_w_sq, cfg.depths)):
        tasks += [(cfg, cell, sw, L, run) for run in range(cfg.samples)]
    rows = [r for run_rows in _run_cells(_structure_run, tasks, workers) for r in run_rows]
    notes = ["optimizer: full-batch gradient descent on 0.5 * mean squared error (Adam not used)",
             "data: synthetic Gaussian blobs, one-vs-rest targets (class 0 -> +1, others -> -1)"]
    return SweepResult("structure", cfg, STRUCTURE_COLUMNS, rows, notes)


# ---------------------------------------------------------------------------
# closed-form tables


THEORY_COLUMNS = (
    "cell", "schedule", "sigma_w_sq", "L", "M", "n0", "alpha0", "lambda", "phase",
    "theory_limit", "theory_finite", "e_theta_w", "e_theta_b", "rho0", "nondiag_bound",
)


def theory_widths(cfg: SweepConfig, schedule: str, L: int) -> tuple[list[int], float]:
    """Widths and average-width scale for one theory cell."""
    if cfg.m1 is None:
        return [cfg.n0] + [cfg.width] * (L - 1), float(cfg.width)
    widths = width_schedule(WidthSchedule(schedule, cfg.m1, cfg.m2, L))
    return widths, (cfg.m1 + cfg.m2) / 2.0


def _theory_cell(cfg: SweepConfig, cell: int, schedule: str, sw: float, L: int) -> list[dict[str, Any]]:
    widths, m_avg = theory_widths(cfg, schedule, L)
    net = NetworkConfig(L, tuple(widths), sigma_w_sq=sw)
    lam = L / m_avg
    alpha0 = widths[0] / m_avg
    try:
        e_w, e_b = expected_moments(net)
    except OverflowError:
        e_w = e_b = float("inf")
    base = dict(
        cell=cell, schedule=schedule, sigma_w_sq=sw, L=L, M=m_avg, n0=widths[0], alpha0=alpha0,
        phase=phase_of(sw), theory_limit=dispersion_limit(PhasePoint(sw, lam, alpha0)),
        theory_finite=dispersion_finite(net), e_theta_w=e_w, e_theta_b=e_b,
    )
    base["lambda"] = lam
    if not cfg.cosines:
        return [{**base, "rho0": None, "nondiag_bound": None}]
    return [{**base, "rho0": rho, "nondiag_bound": nondiag_lower_bound(rho, L, sw / 2.0)} for rho in cfg.cosines]


def run_theory_eval(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Tabulate the closed-form predictions over schedules x sigma_w_sq x depths (x cosines)."""
    _expect(cfg, "theory_only")
    grid = itertools.product(cfg.schedules, cfg.sigma_w_sq, cfg.depths)
    tasks = [(cfg, i, sched, sw, L) for i, (sched, sw, L) in enumerate(grid)]
    rows = [r for cell_rows in _run_cells(_theory_cell, tasks, workers) for r in cell_rows]
    return SweepResult("theory_only", cfg, THEORY_COLUMNS, rows)


def _expect(cfg: SweepConfig, kind: str) -> None:
    if cfg.kind != kind:
        raise ValueError(f"expected a {kind!r} config, got {cfg.kind!r}")


RUNNERS = {
    "dispersion": run_dispersion_sweep,
    "nondiag": run_nondiag_sweep,
    "gd_step": run_gd_step_experiment,
    "structure": run_structure_experiment,
    "theory_only": run_theory_eval,
}


def run(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    return RUNNERS[cfg.kind](cfg, workers)
