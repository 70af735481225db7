"""Constitutive models and their hypothesis validator.

Prints the validator verdict for every registered material, then shows how
pathological parameter choices are caught: an unbounded thermal-expansion
coupling and a two-phase model whose heat capacity degenerates.
"""

import numpy as np

from thermokv import materials, oracles


def main():
    print("== registered materials ==")
    for name in sorted(materials.registry):
        m = materials.registry[name]()
        rep = materials.validate_hypotheses(m)
        print(f"  {name:22s} {'pass' if rep.passed else 'FAIL'}")

    print("\n== derivative spot check (neo-Hookean thermal) ==")
    m = materials.neo_hookean_thermal()
    F = np.array([[1.1, 0.2], [0.0, 0.9]])
    rep = oracles.fd_gradient_check(lambda Fv: float(m.gamma(Fv, 0.8)), F,
                                    m.gamma_F(F, 0.8))
    print(f"  gamma_F observed order {rep.observed_order:.2f} "
          f"(abs err {rep.abs_err:.1e})")

    print("\n== pathological parameters are rejected ==")
    bad = materials.neo_hookean_thermal(
        alpha_fn=materials.unbounded_alpha(0.5), K_e=2.0)
    rep = materials.validate_hypotheses(
        bad, sample_box=materials.SampleBox(theta_range=(0.05, 100.0)))
    print(f"  unbounded expansion -> coupling_growth "
          f"{'pass' if rep['coupling_growth'].passed else 'FAIL'}, "
          f"worst sample {rep['coupling_growth'].worst_sample}")

    sma = materials.sma_two_phase(c0=1e-4)
    rep = materials.validate_hypotheses(
        sma, sample_box=materials.SampleBox(theta_range=(0.5, 1.5),
                                            strain=0.4), n_samples=2000)
    print(f"  tiny c0 two-phase   -> heat_capacity "
          f"{'pass' if rep['heat_capacity'].passed else 'FAIL'}, "
          f"worst sample {rep['heat_capacity'].worst_sample}")


if __name__ == "__main__":
    main()
