"""Closed-form predictions only: no sampling.

Prints the limiting dispersion for the three phases as the depth-to-width
ratio grows, shows the edge-of-chaos value approaching the chaotic one as the
input ratio alpha0 shrinks, and compares widening and narrowing architectures
of the same average width.

Run with ``python3 demos/theory_tables.py``.
"""

from ntklab.harness.inputs import WidthSchedule, width_schedule
from ntklab.network import NetworkConfig
from ntklab.theory import PhasePoint, chaotic_limit, dispersion_finite, dispersion_limit, eoc_limit


def main() -> None:
    print("limit of E[Theta^2] / E[Theta]^2")
    print(f"{'lambda':>7} {'ordered':>9} {'eoc':>9} {'chaotic':>9}")
    for lam in (0.1, 0.25, 0.5, 1.0):
        vals = [dispersion_limit(PhasePoint(sw, lam)) for sw in (1.0, 2.0, 3.0)]
        print(f"{lam:>7g} " + " ".join(f"{v:>9.4f}" for v in vals))

    print("\nedge of chaos vs chaotic at lambda = 1")
    for a0 in (2.0, 1.0, 0.3, 0.1, 0.01):
        print(f"  alpha0={a0:<5g} eoc={eoc_limit(1.0, a0):8.3f}  chaotic={chaotic_limit(1.0):8.3f}")

    print("\nwidening vs narrowing (widths 100 -> 500), finite-width prediction")
    for sw in (1.0, 2.0, 3.0):
        for L in (30, 150):
            out = []
            for kind in ("ramp_up", "constant", "ramp_down"):
                widths = width_schedule(WidthSchedule(kind, 100, 500, L))
                out.append(dispersion_finite(NetworkConfig(L, tuple(widths), sigma_w_sq=sw)))
            print(f"  sigma_w^2={sw:g} L={L:>3}: up={out[0]:.4f} const={out[1]:.4f} down={out[2]:.4f}")


if __name__ == "__main__":
    main()
