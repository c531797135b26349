"""How much does one gradient step move the NTK, and how does that depend on depth?

The relative change |dTheta| / Theta after a single step is computed by
propagating exact increments through the network, so even changes far below
machine epsilon are resolved. In the ordered phase the change shrinks with
depth; in the chaotic phase it grows until the step leaves the small-step
regime (eta * a^L > 1), which the harness flags.

Run with ``python3 demos/gd_step_trend.py``.
"""

import warnings

from ntklab.harness import SweepConfig, run_gd_step_experiment


def show(eta: float) -> None:
    cfg = SweepConfig("gd_step", sigma_w_sq=(1.0, 3.0), depths=(10, 20, 40), width=60, samples=40, eta=eta, seed=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = run_gd_step_experiment(cfg)
    print(f"eta = {eta:g}")
    for r in res.rows:
        print(
            f"  sigma_w^2={r['sigma_w_sq']:g} L={r['L']:>3}  mean |dTheta|/Theta = {r['mean_rel_change']:.3e}"
            f"  eta*a^L = {r['eta_a_pow_L']:.2e}  [{r['status']}]"
        )


if __name__ == "__main__":
    show(1e-12)
    show(1e-3)
