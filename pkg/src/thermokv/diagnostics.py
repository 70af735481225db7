"""Energy/entropy bookkeeping: the per-step ledger, time-integrated balance
residuals, and the entropy-monotonicity check for isolated runs.

The dissipation entries reuse the exact quadrature and integrands of the
weak-form assembly, so the mechanical and heat ledgers see the same Joule
heating to round-off.
"""

from dataclasses import dataclass, field

import numpy as np

from . import materials, regularization, tensors
from .errors import NotIsolated

#: ledger column order used by the CSV writer (after the leading time column)
LEDGER_FIELDS = ("kinetic", "stored", "heat", "diss_bulk", "diss_boundary",
                 "power_gravity", "power_traction", "power_adiabatic",
                 "flux_heat_boundary", "entropy_total", "entropy_production",
                 "residual_mech", "residual_total")


@dataclass
class EnergyLedger:
    t: float
    kinetic: float
    stored: float
    heat: float
    diss_bulk: float
    diss_boundary: float
    power_gravity: float
    power_traction: float
    power_adiabatic: float
    flux_heat_boundary: float
    entropy_total: float
    entropy_production: float
    residual_mech: float = 0.0
    residual_total: float = 0.0
    extra: dict = field(default_factory=dict)

    def row(self):
        return [self.t] + [getattr(self, name) for name in LEDGER_FIELDS]


def compute_ledger(state, scenario, disc=None, theta_floor=1e-10):
    """Evaluate every ledger entry from the current state (one quadrature pass)."""
    disc = disc or scenario.discretization()
    sc = scenario
    m, rp = sc.material, sc.rp
    qf = disc.quad_state(state.v_coeffs, state.theta_coeffs,
                         state.rho.values.reshape(-1),
                         state.F.values.reshape(-1, 2, 2), state.t)
    w = disc.z_space.quad.weights
    J = tensors.det(qf.F)
    kinetic = float(np.sum(w * qf.rho * np.sum(qf.v ** 2, axis=-1)) * 0.5)
    stored = float(np.sum(w * np.asarray(m.phi(qf.F)) / J))
    heat = float(np.sum(w * materials.enthalpy(m, qf.F, qf.theta)))

    D = m.dissipation(qf.F, qf.theta, qf.e)
    diss_pt = tensors.ddot(D, qf.e)
    ge_norm = np.sqrt(np.sum(qf.grad_e ** 2, axis=(-3, -2, -1)))
    hyper_pt = rp.nu * ge_norm ** rp.p
    diss_bulk = float(np.sum(w * (diss_pt + hyper_pt)))

    gF = m.gamma_F(qf.F, qf.theta)
    coup = np.einsum("qij,qkj->qik", gF, qf.F) / J[:, None, None]
    power_adiabatic = float(np.sum(w * tensors.ddot(coup, qf.e)))

    power_gravity = 0.0
    if sc.loads.g is not None:
        gq = np.asarray(sc.loads.g(disc.z_space.quad.nodes, state.t), dtype=float)
        dl = regularization.det_lambda(qf.F, rp.lam)
        power_gravity = float(np.sum(
            w * np.sqrt(qf.rho_R * qf.rho / dl) * np.sum(gq * qf.v, axis=-1)))

    diss_boundary = power_traction = flux_heat_boundary = 0.0
    if qf.v_b is not None:
        bw = disc.z_space.quad.b_weights
        diss_boundary = float(np.sum(bw * rp.nu_flat * np.sum(qf.v_b ** 2, axis=-1)))
        if sc.loads.f is not None:
            fq = np.asarray(sc.loads.f(disc.z_space.quad.b_nodes,
                                       disc.z_space.quad.b_normals, state.t),
                            dtype=float)
            power_traction = float(np.sum(bw * np.sum(fq * qf.v_b, axis=-1)))
        if sc.loads.h is not None:
            h_val = np.asarray(sc.loads.h(qf.theta_b), dtype=float)
            flux_heat_boundary = float(np.sum(bw * h_val))

    entropy_total = float(np.sum(w * materials.entropy_density(m, qf.F, qf.theta)))
    e_norm = tensors.frobenius(qf.e)
    damped = regularization.damped_heat_source(rp, diss_pt, hyper_pt, e_norm,
                                               ge_norm)
    kap = m.kappa(qf.F, qf.theta)
    gth2 = np.sum(qf.grad_theta ** 2, axis=-1)
    ok = qf.theta > theta_floor
    prod = np.zeros_like(qf.theta)
    prod[ok] = damped[ok] / qf.theta[ok] + kap[ok] * gth2[ok] / qf.theta[ok] ** 2
    entropy_production = float(np.sum(w * prod))

    pi = regularization.pi_lambda(qf.F, rp.lam)
    extra = dict(min_theta=float(np.min(qf.theta)), min_detF=float(np.min(J)),
                 cutoff_active_nodes=int(np.sum(pi < 1.0)),
                 entropy_skipped_nodes=int(np.sum(~ok)))
    return EnergyLedger(state.t, kinetic, stored, heat, diss_bulk, diss_boundary,
                        power_gravity, power_traction, power_adiabatic,
                        flux_heat_boundary, entropy_total, entropy_production,
                        extra=extra)


def balance_residuals(ledgers, times):
    """Time-integrated balance defects (trapezoidal accumulation).

    Mechanical: d/dt [kinetic + stored] + diss_bulk + diss_boundary
                = power_gravity + power_traction - power_adiabatic.
    Total:      d/dt [kinetic + stored + heat]
                = power_gravity + power_traction + flux_heat_boundary
                  - diss_boundary / 2   (half the wall friction re-enters
                  as heat when the damping is off).
    Returns (residual_mech, residual_total) arrays aligned with `times`.
    """
    t = np.asarray(times, dtype=float)
    get = lambda name: np.array([getattr(l, name) for l in ledgers])
    e_mech = get("kinetic") + get("stored")
    e_tot = e_mech + get("heat")
    rate_mech = (get("power_gravity") + get("power_traction")
                 - get("power_adiabatic") - get("diss_bulk")
                 - get("diss_boundary"))
    rate_tot = (get("power_gravity") + get("power_traction")
                + get("flux_heat_boundary") - 0.5 * get("diss_boundary"))
    int_mech = _cumtrapz(rate_mech, t)
    int_tot = _cumtrapz(rate_tot, t)
    return (e_mech - e_mech[0] - int_mech, e_tot - e_tot[0] - int_tot)


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def attach_balance_residuals(ledgers, times):
    rm, rt = balance_residuals(ledgers, times)
    for led, a, b in zip(ledgers, rm, rt):
        led.residual_mech = float(a)
        led.residual_total = float(b)


@dataclass
class ClausiusDuhemReport:
    passed: bool
    worst_increment: float
    increments: np.ndarray

    def summary(self):
        verdict = "ok" if self.passed else "VIOLATED"
        return (f"entropy monotonicity {verdict}: worst increment "
                f"{self.worst_increment:.3e} over {len(self.increments)} steps")


def clausius_duhem_check(ledgers, rel_tol=1e-8):
    """Entropy must not decrease along an isolated run.

    Raises NotIsolated when the run exchanged heat through the boundary
    (nonzero flux entries), since monotone total entropy is only guaranteed
    for the isolated system.
    """
    flux = np.array([l.flux_heat_boundary for l in ledgers])
    if np.any(flux != 0.0):
        raise NotIsolated("boundary heat flux active; total entropy need not "
                          "be monotone")
    S = np.array([l.entropy_total for l in ledgers])
    inc = np.diff(S)
    scale = np.maximum(np.abs(S[:-1]), 1.0)
    worst = float(np.min(inc / scale)) if inc.size else 0.0
    passed = bool(np.all(inc >= -rel_tol * scale))
    return ClausiusDuhemReport(passed, worst, inc)
