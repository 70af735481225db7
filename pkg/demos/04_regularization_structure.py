"""The regularization layer: cut-off, damped sources, parabolic transport.

Shows the smoothstep cut-off pi_lambda at its corner cases, the bitwise
inactivity of the regularized stress in the safe region, the first-order
approach of the eps-damped heat sources to their undamped values, and the
monotone effect of the parabolic transport smoothing.
"""

import numpy as np

from thermokv import materials, regularization, transport

TP = 2.0 * np.pi


def main():
    lam = 0.1
    print("== cut-off corner cases (lambda = 0.1) ==")
    for label, F in [("identity", np.eye(2)),
                     ("small det", np.diag([0.2, 0.2])),
                     ("large |F|", np.diag([20.0, 20.0])),
                     ("singular", np.array([[1.0, 0.0], [1.0, 0.0]]))]:
        print(f"  {label:10s} pi_lambda = {regularization.pi_lambda(F, lam)}")

    print("\n== bitwise inactivity in the safe region ==")
    m = materials.neo_hookean_thermal()
    rp = regularization.RegularizationParams()
    rng = np.random.default_rng(0)
    F = np.eye(2) + 0.1 * rng.standard_normal((50, 2, 2))
    th = rng.uniform(0.5, 1.5, 50)
    T_reg = regularization.regularized_stress(m, rp, F, th)
    T = materials.cauchy_stress(m, F, th)
    print(f"  regularized stress identical to plain stress: "
          f"{np.array_equal(T_reg, T)}")

    print("\n== eps-damped heat sources, first-order trend ==")
    diss = rng.uniform(0.5, 2.0, 64)
    hyper = rng.uniform(0.1, 1.0, 64)
    e_n = rng.uniform(0.5, 1.5, 64)
    ge_n = rng.uniform(0.5, 1.5, 64)
    base = regularization.damped_heat_source(
        regularization.RegularizationParams(epsilon=0.0), diss, hyper, e_n, ge_n)
    for eps in (1e-1, 1e-2, 1e-3):
        rp_e = regularization.RegularizationParams(epsilon=eps)
        dev = np.max(np.abs(regularization.damped_heat_source(
            rp_e, diss, hyper, e_n, ge_n) - base))
        print(f"  eps = {eps:5g}  max deviation {dev:.3e}")

    print("\n== parabolic transport smoothing ==")
    grid = transport.UniformGrid((32, 32), (1.0, 1.0))
    pts = grid.nodes()
    z0 = 1.0 + 0.3 * np.sin(TP * pts[..., 0]) * np.cos(TP * pts[..., 1])
    def vg(x, t):
        z = np.zeros(x.shape[:-1] + (2, 2))
        z[..., 0, 1] = 0.2 * TP * np.cos(TP * x[..., 1])
        z[..., 1, 0] = 0.2 * TP * np.cos(TP * x[..., 0])
        return z

    vel = transport.ClosedFormVelocity(
        lambda x, t: 0.2 * np.stack([np.sin(TP * x[..., 1]),
                                     np.sin(TP * x[..., 0])], -1),
        vg, steady=True)
    f = transport.TransportField(grid, z0, "density")
    base = transport.advect(f, vel, 1e-2)
    for eps in (1e-2, 1e-3, 1e-4):
        out = transport.parabolic_regularized_advect(f, vel, 1e-2, eps, r=3.0)
        print(f"  eps = {eps:5g}  deviation from unsmoothed step "
              f"{np.max(np.abs(out.values - base.values)):.3e}")


if __name__ == "__main__":
    main()
