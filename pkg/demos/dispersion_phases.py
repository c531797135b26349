"""Sample the diagonal NTK across the three initialization phases.

For each (sigma_w^2, depth) cell a few hundred networks are drawn, the
bias-corrected dispersion estimate is printed next to the finite-width
prediction and the infinite-width limit. Ordered cells stay near 1 while
chaotic cells grow quickly with depth.

Run with ``python3 demos/dispersion_phases.py`` (about a minute).
"""

from ntklab.harness import SweepConfig, run_dispersion_sweep


def main() -> None:
    cfg = SweepConfig(
        "dispersion", sigma_w_sq=(1.0, 2.0, 3.0), depths=(5, 20, 40), width=50, samples=300, bootstrap=300, seed=1
    )
    res = run_dispersion_sweep(cfg)
    print(f"{'sigma_w^2':>9} {'L':>4} {'r_hat':>9} {'+-se':>8} {'finite':>9} {'limit':>9}")
    for r in res.rows:
        print(
            f"{r['sigma_w_sq']:>9g} {r['L']:>4} {r['r_hat']:>9.4f} {r['bootstrap_se']:>8.4f} "
            f"{r['theory_finite']:>9.4f} {r['theory_limit']:>9.4f}"
        )


if __name__ == "__main__":
    main()
