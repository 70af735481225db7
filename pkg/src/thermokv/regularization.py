"""Cut-off and damping operators that keep the stress bounded and the heat
sources integrable: the C^1 cut-off pi_lambda in (det F, |F|), the clamped
determinant, the regularized stress, damped dissipative heat sources, and
the mollified boundary/initial temperature data.

The |F|-factor of the cut-off is the *decreasing* smoothstep
1 - (3t^2 - 2t^3) with t = lam*|F| - 1, so that the middle branch
interpolates the two constant branches (1 for |F| <= 1/lam, 0 for
|F| >= 2/lam).
"""

from dataclasses import dataclass

import numpy as np

from . import tensors


@dataclass(frozen=True)
class RegularizationParams:
    lam: float = 0.05        # cut-off scale, in (0, 1)
    epsilon: float = 0.0     # heat-source damping; 0 = undamped
    nu: float = 1e-4         # bulk hyperviscosity
    nu_flat: float = 1.0     # boundary viscosity
    p: float = 3.0           # hyper-stress exponent
    q: float = 3.0           # dissipation exponent
    d: int = 2

    def __post_init__(self):
        if not (0.0 < self.lam < 1.0):
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")
        if min(self.p, self.q) <= self.d:
            raise ValueError(f"min(p, q) = {min(self.p, self.q)} must exceed d = {self.d}")


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return 3.0 * u * u - 2.0 * u ** 3


def pi_lambda(F, lam):
    """C^1 cut-off: 1 where det F >= lam and |F| <= 1/lam, 0 where
    det F <= lam/2 or |F| >= 2/lam, smoothstep product in between."""
    F = np.asarray(F, dtype=float)
    J = tensors.det(F)
    n = tensors.frobenius(F)
    s_det = _smoothstep((2.0 * J - lam) / lam)          # 0 at lam/2, 1 at lam
    s_frob = 1.0 - _smoothstep(lam * n - 1.0)           # 1 at 1/lam, 0 at 2/lam
    return s_det * s_frob


def _smoothstep_d(u):
    """Derivative of the clipped smoothstep with respect to u."""
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 6.0 * np.clip(u, 0.0, 1.0) * (1.0 - np.clip(u, 0.0, 1.0)), 0.0)


def pi_lambda_F(F, lam):
    """Gradient of pi_lambda with respect to F (matrix of the same shape)."""
    F = np.asarray(F, dtype=float)
    J = tensors.det(F)
    n = tensors.frobenius(F)
    u = (2.0 * J - lam) / lam
    t = lam * n - 1.0
    s_det = _smoothstep(u)
    s_frob = 1.0 - _smoothstep(t)
    ds_det = _smoothstep_d(u) * (2.0 / lam)             # d/d(det F)
    ds_frob = -_smoothstep_d(t) * lam                   # d/d|F|
    C = tensors.cof(F)
    safe_n = np.where(n > 0.0, n, 1.0)
    dn = F / safe_n[..., None, None]                    # d|F|/dF
    return (ds_det * s_frob)[..., None, None] * C + (s_det * ds_frob)[..., None, None] * dn


def det_lambda(F, lam):
    """Clamped determinant det_lam(F) = clip(det F, lam/2, 2/lam)."""
    return np.clip(tensors.det(np.asarray(F, dtype=float)), 0.5 * lam, 2.0 / lam)


def regularized_stress(m, rp, F, theta):
    """T_{lam,eps}(F, theta) = ([pi phi]'(F) + pi(F) gamma_F/(1+eps|theta|)) F^T/det F.

    Bounded and defined for every F; returns zero where the cut-off fully
    closes (det F <= lam/2 or |F| >= 2/lam).  Where the cut-off is fully open
    and eps = 0 this is *bitwise* identical to materials.cauchy_stress.
    """
    from . import materials

    F = np.asarray(F, dtype=float)
    theta = np.asarray(theta, dtype=float)
    pi = pi_lambda(F, rp.lam)
    if rp.epsilon == 0.0 and np.all(pi == 1.0):
        return materials.cauchy_stress(m, F, theta)

    d = F.shape[-1]
    lead = np.broadcast(tensors.det(F), theta).shape
    Fb = np.broadcast_to(F, lead + (d, d)).reshape(-1, d, d)
    thb = np.broadcast_to(theta, lead).reshape(-1)
    pib = np.broadcast_to(pi, lead).reshape(-1)
    T = np.zeros((Fb.shape[0], d, d))
    active = pib > 0.0
    if np.any(active):
        Fa, tha, pia = Fb[active], thb[active], pib[active]
        Ja = tensors.det(Fa)
        # [pi_lam phi]'(F) = phi * pi' + pi * phi'
        dpi = pi_lambda_F(Fa, rp.lam)
        psi_F = (np.asarray(m.phi(Fa))[..., None, None] * dpi
                 + pia[..., None, None] * m.phi_F(Fa)
                 + pia[..., None, None] * m.gamma_F(Fa, tha)
                 / (1.0 + rp.epsilon * np.abs(tha))[..., None, None])
        T[active] = np.einsum("...ij,...kj->...ik", psi_F, Fa) / Ja[..., None, None]
    return T.reshape(lead + (d, d)) if lead else T[0]


def damped_heat_source(rp, diss_power, hyper_power, e_norm, grad_e_norm):
    """(D:e + nu|grad e|^p) / (1 + eps|e|^q + eps|grad e|^p)."""
    num = np.asarray(diss_power) + np.asarray(hyper_power)
    if rp.epsilon == 0.0:
        return num
    den = (1.0 + rp.epsilon * np.asarray(e_norm) ** rp.q
           + rp.epsilon * np.asarray(grad_e_norm) ** rp.p)
    return num / den


def regularized_boundary_flux(rp, h_value, v_boundary):
    """h_eps(theta) + nu_flat |v|^2 / (2 + eps|v|^2) heat inflow density."""
    h = np.asarray(h_value, dtype=float)
    v2 = np.sum(np.asarray(v_boundary, dtype=float) ** 2, axis=-1)
    h_eps = h / (1.0 + rp.epsilon * np.abs(h))
    return h_eps + rp.nu_flat * v2 / (2.0 + rp.epsilon * v2)


def mollified_initial_temperature(theta0_field, epsilon):
    """theta_{0,eps} = theta0 / (1 + eps*theta0); rejects negative data."""
    from .errors import NegativeInitialTemperature

    th = np.asarray(theta0_field, dtype=float)
    if np.any(th < 0.0):
        raise NegativeInitialTemperature(
            f"theta0 must be >= 0 everywhere (min {np.min(th):.3e})")
    return th / (1.0 + epsilon * th)
