"""Constitutive layer: free energy psi(F, theta) = phi(F) + gamma(F, theta).

A MaterialModel carries the stored energy, the thermal part gamma with all
analytic derivatives, Fourier conductivity, and the dissipation law.  Every
callable is vectorized: F of shape (..., d, d) with theta broadcasting
against the leading axes.

Below absolute zero the thermal part is replaced by the smooth extension
gamma = -theta*ln(-theta), which makes the enthalpy map w = theta/det F
there (monotone through zero) while gamma_F vanishes; conductivity and
dissipation are mirrored in theta.  This is a transient guard for the time
stepper, not a physical regime.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import tensors
from .errors import NonInvertibleDeformation, NonMonotoneEnthalpy

_TINY = 1e-300


@dataclass(frozen=True)
class ScalarFunc:
    """A scalar function of one variable with analytic first/second derivative."""

    f: Callable
    df: Callable
    d2f: Callable


@dataclass(frozen=True)
class StoredEnergy:
    """A stored energy density phi(F) with its derivative phi_F."""

    phi: Callable
    phi_F: Callable


@dataclass(frozen=True)
class MaterialModel:
    name: str
    phi: Callable
    phi_F: Callable
    gamma: Callable
    gamma_F: Callable
    gamma_theta: Callable
    gamma_thetatheta: Callable
    gamma_Ftheta: Callable
    kappa: Callable
    dissipation: Callable
    q_exponent: float
    delta: float
    params: dict = field(default_factory=dict)


@dataclass
class ThermalState:
    """Heat part of internal energy (per actual volume) and temperature."""

    w: float
    theta: float


# ---------------------------------------------------------------------------
# helper scalar functions


def bounded_alpha(alpha_max=0.05, theta_scale=1.0):
    """Thermal-expansion coefficient alpha(theta) = a*theta^2/(s^2+theta^2).

    Bounded, smooth, alpha(0) = 0, convex near zero.
    """
    a, s = float(alpha_max), float(theta_scale)

    def f(t):
        return a * t * t / (s * s + t * t)

    def df(t):
        return 2.0 * a * s * s * t / (s * s + t * t) ** 2

    def d2f(t):
        return 2.0 * a * s * s * (s * s - 3.0 * t * t) / (s * s + t * t) ** 3

    return ScalarFunc(f, df, d2f)


def unbounded_alpha(coeff=0.1):
    """alpha(theta) = c*theta^2: unbounded growth, used to exercise the
    coupling-stress growth check (which it must fail)."""
    c = float(coeff)
    return ScalarFunc(lambda t: c * t * t, lambda t: 2.0 * c * t, lambda t: 2.0 * c + 0.0 * t)


def zero_alpha():
    z = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return ScalarFunc(z, z, z)


def logistic_ramp(theta_transition=1.0, width=0.25):
    """Smooth ramp in [0, 1) with value exactly 0 at theta = 0.

    lam(theta) = (sigma(x) - sigma(x0)) / (1 - sigma(x0)) with
    x = (theta - theta_t)/width.
    """
    tt, s = float(theta_transition), float(width)
    x0 = -tt / s
    sig0 = 1.0 / (1.0 + np.exp(-x0))
    scale = 1.0 / (1.0 - sig0)

    def sig(x):
        return 1.0 / (1.0 + np.exp(-x))

    def f(t):
        return (sig((t - tt) / s) - sig0) * scale

    def df(t):
        z = sig((t - tt) / s)
        return z * (1.0 - z) / s * scale

    def d2f(t):
        z = sig((t - tt) / s)
        return z * (1.0 - z) * (1.0 - 2.0 * z) / (s * s) * scale

    return ScalarFunc(f, df, d2f)


def quadratic_volumetric(K_e=1.0):
    """v(J) = K/2 (J-1)^2 for the volumetric phase-transition model."""
    K = float(K_e)
    return ScalarFunc(lambda J: 0.5 * K * (J - 1.0) ** 2,
                      lambda J: K * (J - 1.0),
                      lambda J: K + 0.0 * J)


def neo_hookean_stored(K_e=1.0, G_e=1.0, d=2):
    """Compressible neo-Hookean stored energy as a StoredEnergy pair."""
    K, G = float(K_e), float(G_e)

    def phi(F):
        J = tensors.det(F)
        I1 = np.sum(np.asarray(F) ** 2, axis=(-2, -1))
        return 0.5 * K * (J - 1.0) ** 2 + 0.5 * G * (I1 * J ** (-2.0 / d) - d)

    def phi_F(F):
        F = np.asarray(F)
        J = tensors.det(F)[..., None, None]
        C = tensors.cof(F)
        I1 = np.sum(F ** 2, axis=(-2, -1))[..., None, None]
        return K * (J - 1.0) * C + G * (F * J ** (-2.0 / d)
                                        - (I1 / d) * J ** (-2.0 / d - 1.0) * C)

    return StoredEnergy(phi, phi_F)


def default_dissipation(mu1=0.5, mu_q=0.5, q=3.0):
    """Two-term law D = mu1*e + mu_q*|e|^(q-2)*e with its (3.6e)-style delta."""
    m1, mq, qq = float(mu1), float(mu_q), float(q)

    def D(F, theta, e):
        e = np.asarray(e, dtype=float)
        en = tensors.frobenius(e)[..., None, None]
        return m1 * e + mq * en ** (qq - 2.0) * e

    delta = min(m1, mq, 1.0 / (m1 + mq))
    return D, qq, delta


def constant_kappa(kappa0=1.0):
    k0 = float(kappa0)

    def kappa(F, theta):
        J = tensors.det(F)
        return np.broadcast_to(k0, np.broadcast(J, np.asarray(theta, dtype=float)).shape).copy()

    return kappa


# ---------------------------------------------------------------------------
# negative-temperature extension wrapper


def _extend_thermal(gamma_p, gamma_F_p, gamma_th_p, gamma_thth_p, gamma_Fth_p):
    """Glue the physical (theta > 0) thermal family to the sub-zero guard
    branch gamma = -theta*ln(-theta) (so that w = theta/det F there)."""

    def split(theta):
        theta = np.asarray(theta, dtype=float)
        pos_mask = theta > 0
        neg_mask = theta < 0
        safe_pos = np.where(pos_mask, theta, _TINY)
        safe_neg = np.where(neg_mask, theta, -1.0)
        return theta, pos_mask, neg_mask, safe_pos, safe_neg

    def gamma(F, theta):
        theta, pos, neg, sp, sn = split(theta)
        gp = gamma_p(F, sp)
        gn = -sn * np.log(-sn)
        return np.where(pos, gp, np.where(neg, gn, 0.0))

    def gamma_F(F, theta):
        theta, pos, neg, sp, sn = split(theta)
        gp = gamma_F_p(F, sp)
        return np.where(pos[..., None, None], gp, 0.0)

    def gamma_theta(F, theta):
        theta, pos, neg, sp, sn = split(theta)
        gp = gamma_th_p(F, sp)
        gn = -np.log(-sn) - 1.0
        return np.where(pos, gp, np.where(neg, gn, gp))

    def gamma_thetatheta(F, theta):
        theta, pos, neg, sp, sn = split(theta)
        gp = gamma_thth_p(F, sp)
        gn = -1.0 / sn
        return np.where(pos, gp, np.where(neg, gn, gp))

    def gamma_Ftheta(F, theta):
        theta, pos, neg, sp, sn = split(theta)
        gp = gamma_Fth_p(F, sp)
        return np.where(pos[..., None, None], gp, 0.0)

    return gamma, gamma_F, gamma_theta, gamma_thetatheta, gamma_Ftheta


def _mirror_theta(fn):
    """Mirror a (F, theta, ...) callable about theta = 0."""

    def wrapped(F, theta, *rest):
        return fn(F, np.abs(np.asarray(theta, dtype=float)), *rest)

    return wrapped


# ---------------------------------------------------------------------------
# built-in model constructors


def neo_hookean_thermal(K_e=1.0, G_e=1.0, c0=1.0, alpha_fn=None, *,
                        kappa0=1.0, mu1=0.5, mu_q=0.5, q=3.0, d=2,
                        alpha_max=0.05, alpha_theta_scale=1.0):
    """Neo-Hookean solid with additive volumetric thermal expansion:
    gamma = c0*theta*(1-ln theta) - K_e*alpha(theta)*det F.
    """
    if alpha_fn is None:
        alpha_fn = bounded_alpha(alpha_max, alpha_theta_scale)
    K, c = float(K_e), float(c0)
    stored = neo_hookean_stored(K_e, G_e, d)
    al = alpha_fn

    def gamma_p(F, t):
        J = tensors.det(F)
        return c * t * (1.0 - np.log(t)) - K * al.f(t) * J

    def gamma_F_p(F, t):
        C = tensors.cof(F)
        return -K * np.asarray(al.f(t))[..., None, None] * C

    def gamma_th_p(F, t):
        J = tensors.det(F)
        return -c * np.log(t) - K * al.df(t) * J

    def gamma_thth_p(F, t):
        J = tensors.det(F)
        return -c / t - K * al.d2f(t) * J

    def gamma_Fth_p(F, t):
        C = tensors.cof(F)
        return -K * np.asarray(al.df(t))[..., None, None] * C

    D, qq, delta = default_dissipation(mu1, mu_q, q)
    g, gF, gt, gtt, gFt = _extend_thermal(gamma_p, gamma_F_p, gamma_th_p,
                                          gamma_thth_p, gamma_Fth_p)
    return MaterialModel(
        name="neo_hookean_thermal", phi=stored.phi, phi_F=stored.phi_F,
        gamma=g, gamma_F=gF, gamma_theta=gt, gamma_thetatheta=gtt,
        gamma_Ftheta=gFt, kappa=_mirror_theta(constant_kappa(kappa0)),
        dissipation=_mirror_theta(D), q_exponent=qq, delta=delta,
        params=dict(K_e=K_e, G_e=G_e, c0=c0, kappa0=kappa0, mu1=mu1,
                    mu_q=mu_q, q=q, d=d))


def neo_hookean_multiplicative(K_e=1.0, G_e=1.0, c0=1.0, alpha_fn=None, *,
                               kappa0=1.0, mu1=0.5, mu_q=0.5, q=3.0, d=2,
                               alpha_max=0.05, alpha_theta_scale=1.0):
    """Thermal expansion through a multiplicative split of the volumetric
    response: the volumetric energy K/2 (det F/(1+alpha)^d - 1)^2 replaces
    K/2 (det F - 1)^2 at temperature theta, so the coupling stress is
    proportional to the identity.
    """
    if alpha_fn is None:
        alpha_fn = bounded_alpha(alpha_max, alpha_theta_scale)
    K, c = float(K_e), float(c0)
    stored = neo_hookean_stored(K_e, G_e, d)
    al = alpha_fn

    def beta(t):
        return (1.0 + al.f(t)) ** (-float(d))

    def beta_d(t):
        return -d * (1.0 + al.f(t)) ** (-float(d) - 1.0) * al.df(t)

    def beta_dd(t):
        a, da, dda = al.f(t), al.df(t), al.d2f(t)
        return (d * (d + 1.0) * (1.0 + a) ** (-float(d) - 2.0) * da * da
                - d * (1.0 + a) ** (-float(d) - 1.0) * dda)

    def gamma_p(F, t):
        J = tensors.det(F)
        return (c * t * (1.0 - np.log(t))
                + 0.5 * K * (J * beta(t) - 1.0) ** 2 - 0.5 * K * (J - 1.0) ** 2)

    def gamma_F_p(F, t):
        J = tensors.det(F)
        C = tensors.cof(F)
        b = beta(t)
        coef = K * ((J * b - 1.0) * b - (J - 1.0))
        return np.asarray(coef)[..., None, None] * C

    def gamma_th_p(F, t):
        J = tensors.det(F)
        return -c * np.log(t) + K * (J * beta(t) - 1.0) * J * beta_d(t)

    def gamma_thth_p(F, t):
        J = tensors.det(F)
        bd = beta_d(t)
        return (-c / t + K * (J * bd) ** 2
                + K * (J * beta(t) - 1.0) * J * beta_dd(t))

    def gamma_Fth_p(F, t):
        J = tensors.det(F)
        C = tensors.cof(F)
        coef = K * beta_d(t) * (2.0 * J * beta(t) - 1.0)
        return np.asarray(coef)[..., None, None] * C

    D, qq, delta = default_dissipation(mu1, mu_q, q)
    g, gF, gt, gtt, gFt = _extend_thermal(gamma_p, gamma_F_p, gamma_th_p,
                                          gamma_thth_p, gamma_Fth_p)
    return MaterialModel(
        name="neo_hookean_multiplicative", phi=stored.phi, phi_F=stored.phi_F,
        gamma=g, gamma_F=gF, gamma_theta=gt, gamma_thetatheta=gtt,
        gamma_Ftheta=gFt, kappa=_mirror_theta(constant_kappa(kappa0)),
        dissipation=_mirror_theta(D), q_exponent=qq, delta=delta,
        params=dict(K_e=K_e, G_e=G_e, c0=c0, kappa0=kappa0, mu1=mu1,
                    mu_q=mu_q, q=q, d=d))


def sma_two_phase(phi_A=None, phi_M=None, c0=60.0, lambda_fn=None, *,
                  kappa0=1.0, mu1=0.5, mu_q=0.5, q=3.0, d=2):
    """Two-phase shape-memory solid: austenite reference energy phi_A with a
    temperature-driven volume-fraction blend towards the martensite energy,
    gamma = lam(theta)*(phi_M - phi_A) + c0*theta*(1 - ln theta).

    Heat-capacity positivity needs c0 large against theta*lam''*(phi_M-phi_A).
    """
    if phi_A is None:
        phi_A = neo_hookean_stored(1.0, 1.0, d)
    if phi_M is None:
        phi_M = neo_hookean_stored(1.5, 0.8, d)
    if lambda_fn is None:
        lambda_fn = logistic_ramp()
    c = float(c0)
    lam = lambda_fn

    def phi_MA(F):
        return phi_M.phi(F) - phi_A.phi(F)

    def phi_MA_F(F):
        return phi_M.phi_F(F) - phi_A.phi_F(F)

    def gamma_p(F, t):
        return np.asarray(lam.f(t)) * phi_MA(F) + c * t * (1.0 - np.log(t))

    def gamma_F_p(F, t):
        return np.asarray(lam.f(t))[..., None, None] * phi_MA_F(F)

    def gamma_th_p(F, t):
        return np.asarray(lam.df(t)) * phi_MA(F) - c * np.log(t)

    def gamma_thth_p(F, t):
        return np.asarray(lam.d2f(t)) * phi_MA(F) - c / t

    def gamma_Fth_p(F, t):
        return np.asarray(lam.df(t))[..., None, None] * phi_MA_F(F)

    D, qq, delta = default_dissipation(mu1, mu_q, q)
    g, gF, gt, gtt, gFt = _extend_thermal(gamma_p, gamma_F_p, gamma_th_p,
                                          gamma_thth_p, gamma_Fth_p)
    return MaterialModel(
        name="sma_two_phase", phi=phi_A.phi, phi_F=phi_A.phi_F,
        gamma=g, gamma_F=gF, gamma_theta=gt, gamma_thetatheta=gtt,
        gamma_Ftheta=gFt, kappa=_mirror_theta(constant_kappa(kappa0)),
        dissipation=_mirror_theta(D), q_exponent=qq, delta=delta,
        params=dict(c0=c0, kappa0=kappa0, mu1=mu1, mu_q=mu_q, q=q, d=d))


def volumetric_pt(v_fn=None, G_e=1.0, phi_theta_fn=None, *,
                  kappa0=1.0, mu1=0.5, mu_q=0.5, q=3.0, d=2, c0=1.0):
    """Volumetric phase transition: psi = v(det F) + shear + phi_theta(theta),
    so gamma is F-independent and the coupling stress vanishes identically.
    """
    if v_fn is None:
        v_fn = quadratic_volumetric()
    if phi_theta_fn is None:
        c = float(c0)
        phi_theta_fn = ScalarFunc(lambda t: c * t * (1.0 - np.log(t)),
                                  lambda t: -c * np.log(t),
                                  lambda t: -c / t)
    G = float(G_e)
    pt = phi_theta_fn
    # normalize so gamma(F, 0) = 0 even if phi_theta(0) != 0
    pt0 = float(pt.f(_TINY))

    def phi(F):
        F = np.asarray(F)
        J = tensors.det(F)
        I1 = np.sum(F ** 2, axis=(-2, -1))
        return v_fn.f(J) + 0.5 * G * (I1 * J ** (-2.0 / d) - d)

    def phi_F(F):
        F = np.asarray(F)
        Js = tensors.det(F)
        J = Js[..., None, None]
        C = tensors.cof(F)
        I1 = np.sum(F ** 2, axis=(-2, -1))[..., None, None]
        return (np.asarray(v_fn.df(Js))[..., None, None] * C
                + G * (F * J ** (-2.0 / d) - (I1 / d) * J ** (-2.0 / d - 1.0) * C))

    def gamma_p(F, t):
        J = tensors.det(F)
        return (pt.f(t) - pt0) + 0.0 * J

    def gamma_F_p(F, t):
        return np.zeros(np.broadcast(tensors.det(F), np.asarray(t, dtype=float)).shape
                        + np.asarray(F).shape[-2:])

    def gamma_th_p(F, t):
        J = tensors.det(F)
        return pt.df(t) + 0.0 * J

    def gamma_thth_p(F, t):
        J = tensors.det(F)
        return pt.d2f(t) + 0.0 * J

    gamma_Fth_p = gamma_F_p

    D, qq, delta = default_dissipation(mu1, mu_q, q)
    g, gF, gt, gtt, gFt = _extend_thermal(gamma_p, gamma_F_p, gamma_th_p,
                                          gamma_thth_p, gamma_Fth_p)
    return MaterialModel(
        name="volumetric_pt", phi=phi, phi_F=phi_F,
        gamma=g, gamma_F=gF, gamma_theta=gt, gamma_thetatheta=gtt,
        gamma_Ftheta=gFt, kappa=_mirror_theta(constant_kappa(kappa0)),
        dissipation=_mirror_theta(D), q_exponent=qq, delta=delta,
        params=dict(G_e=G_e, c0=c0, kappa0=kappa0, mu1=mu1, mu_q=mu_q, q=q, d=d))


registry = {
    "neo_hookean_thermal": neo_hookean_thermal,
    "neo_hookean_multiplicative": neo_hookean_multiplicative,
    "sma_two_phase": sma_two_phase,
    "volumetric_pt": volumetric_pt,
}


# ---------------------------------------------------------------------------
# constitutive evaluations


def _check_det(F):
    J = tensors.det(F)
    if np.any(J <= 0.0):
        raise NonInvertibleDeformation(f"det F <= 0 (min {np.min(J):.3e})")
    return J


def free_energy(m, F, theta):
    return m.phi(F) + m.gamma(F, theta)


def cauchy_stress(m, F, theta):
    """Actual Cauchy stress T = psi_F(F, theta) F^T / det F."""
    J = _check_det(F)
    psi_F = m.phi_F(F) + m.gamma_F(F, theta)
    return np.einsum("...ij,...kj->...ik", psi_F, np.asarray(F)) / J[..., None, None]


def coupling_stress(m, F, theta):
    """Thermal coupling part gamma_F F^T / det F of the Cauchy stress."""
    J = _check_det(F)
    gF = m.gamma_F(F, theta)
    return np.einsum("...ij,...kj->...ik", gF, np.asarray(F)) / J[..., None, None]


def entropy_density(m, F, theta):
    """Actual entropy eta = -psi_theta / det F."""
    J = _check_det(F)
    return -m.gamma_theta(F, theta) / J


def enthalpy(m, F, theta):
    """Heat part of the actual internal energy w = (gamma - theta*gamma_theta)/det F."""
    J = _check_det(F)
    theta = np.asarray(theta, dtype=float)
    g = m.gamma(F, theta)
    gt = m.gamma_theta(F, theta)
    return np.where(theta == 0.0, 0.0, g - theta * gt) / J


def heat_capacity(m, F, theta):
    """c(F, theta) = -theta * psi_thetatheta / det F = d(enthalpy)/d(theta)."""
    J = _check_det(F)
    theta = np.asarray(theta, dtype=float)
    return -theta * m.gamma_thetatheta(F, theta) / J


def enthalpy_F(m, F, theta):
    """Partial derivative of omega(F, theta) with respect to F (at fixed theta)."""
    J = _check_det(F)
    theta = np.asarray(theta, dtype=float)
    gF = m.gamma_F(F, theta)
    gFt = m.gamma_Ftheta(F, theta)
    w = enthalpy(m, F, theta)
    Finv_T = tensors.cof(F) / J[..., None, None]  # (F^{-1})^T = cof F / det F
    return (gF - theta[..., None, None] * gFt) / J[..., None, None] - w[..., None, None] * Finv_T


def dissipative_stress(m, F, theta, e):
    return m.dissipation(F, theta, e)


def invert_enthalpy(m, F, w, atol=1e-12, max_iter=200):
    """Invert the monotone enthalpy map: theta with omega(F, theta) = w."""
    w = float(w)
    J = float(tensors.det(np.asarray(F, dtype=float)))
    if J <= 0.0:
        raise NonInvertibleDeformation(f"det F = {J:.3e}")
    if w == 0.0:
        return 0.0
    if w < 0.0:
        # guard branch: omega = theta / det F
        return w * J

    def om(t):
        return float(enthalpy(m, F, t))

    def cap(t):
        return float(heat_capacity(m, F, t))

    # expand a bracket [lo, hi] with om(hi) >= w
    lo, hi = 0.0, 1.0
    prev = om(hi)
    n_expand = 0
    while prev < w:
        lo, hi = hi, 2.0 * hi
        cur = om(hi)
        if cur <= prev:
            raise NonMonotoneEnthalpy(
                f"omega(F, .) not increasing near theta={hi:.3e}")
        prev = cur
        n_expand += 1
        if n_expand > 200:
            raise NonMonotoneEnthalpy("could not bracket the enthalpy inverse")

    theta = 0.5 * (lo + hi)
    tol = atol * max(1.0, abs(w))
    for _ in range(max_iter):
        r = om(theta) - w
        if abs(r) <= tol:
            return theta
        if r > 0.0:
            hi = theta
        else:
            lo = theta
        c = cap(theta)
        if c <= 0.0:
            raise NonMonotoneEnthalpy(
                f"heat capacity {c:.3e} <= 0 at theta={theta:.3e} inside bracket")
        step = theta - r / c
        theta = step if lo < step < hi else 0.5 * (lo + hi)
    return theta


# ---------------------------------------------------------------------------
# hypothesis validator


@dataclass
class HypothesisCheck:
    name: str
    passed: bool
    margin: float
    worst_sample: dict


@dataclass
class HypothesisReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self):
        lines = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            lines.append(f"[{tag}] {c.name}: margin={c.margin:.3e} worst={c.worst_sample}")
        return "\n".join(lines)


@dataclass(frozen=True)
class SampleBox:
    """Compact sampling region for validate_hypotheses."""

    det_range: tuple = (0.5, 2.0)
    theta_range: tuple = (0.05, 2.0)
    strain: float = 0.3
    d: int = 2

    @property
    def empty(self):
        return (self.det_range[1] <= self.det_range[0]
                or self.theta_range[1] <= self.theta_range[0])


def _sample_states(box, n, rng):
    d = box.d
    A = np.eye(d) + box.strain * rng.standard_normal((n, d, d))
    J = tensors.det(A)
    # reflect any orientation-reversing samples, then rescale to the target det
    A[J < 0, 0, :] *= -1.0
    J = np.abs(J)
    J = np.maximum(J, 1e-3)
    target = rng.uniform(box.det_range[0], box.det_range[1], size=n)
    F = A * (target / J)[:, None, None] ** (1.0 / d)
    theta = rng.uniform(box.theta_range[0], box.theta_range[1], size=n)
    return F, theta


def validate_hypotheses(m, sample_box=None, n_samples=500, delta=1e-3, seed=0):
    """Sampled verification of the structural hypotheses on (F, theta).

    Checks: (i) the difference quotient of gamma_theta is <= -delta/det F
    (heat-capacity condition); (ii) the coupling stress obeys the growth
    bound C(1 + (phi+theta)/det F) with C fitted on the lower temperature
    range and verified on the upper decile; (iii) dissipation monotonicity
    and growth; (iv) frame indifference of psi; (v) Cauchy-stress symmetry.
    Failures are report entries, never exceptions.
    """
    if sample_box is None:
        sample_box = SampleBox()
    rng = np.random.default_rng(seed)
    F, theta = _sample_states(sample_box, n_samples, rng)
    J = tensors.det(F)
    checks = []

    # (i) heat capacity: (gamma_th(F,t1)-gamma_th(F,t2))/(t1-t2) <= -delta/det F
    t1 = theta
    t2 = np.clip(theta + rng.uniform(-0.2, 0.2, size=n_samples) * theta,
                 sample_box.theta_range[0], sample_box.theta_range[1])
    t2 = np.where(np.abs(t2 - t1) < 1e-6, t1 * 1.01, t2)
    quot = (m.gamma_theta(F, t1) - m.gamma_theta(F, t2)) / (t1 - t2)
    excess = quot + delta / J  # must be <= 0
    i_worst = int(np.argmax(excess))
    checks.append(HypothesisCheck(
        name="heat_capacity", passed=bool(np.max(excess) <= 1e-10),
        margin=float(np.max(excess)),
        worst_sample=dict(detF=float(J[i_worst]), theta=float(t1[i_worst]),
                          quotient=float(quot[i_worst]))))

    # (ii) coupling-stress growth: the ratio |gamma_F F^T/det F| over
    # 1 + (phi + theta)/det F must stay bounded in theta.  Compare the top
    # geometric band [t_hi/2, t_hi] against [t_hi/4, t_hi/2]: a bounded
    # (saturating) coupling keeps the band maxima comparable, while an
    # unbounded one roughly doubles per octave (threshold 1.9).
    cs = coupling_stress(m, F, theta)
    num = tensors.frobenius(cs)
    den = 1.0 + (m.phi(F) + theta) / J
    ratio = num / den
    t_hi = sample_box.theta_range[1]
    band_lo = (theta >= 0.25 * t_hi) & (theta < 0.5 * t_hi)
    band_hi = theta >= 0.5 * t_hi
    C_fit = float(np.max(ratio[band_lo])) if np.any(band_lo) else 0.0
    tail = float(np.max(ratio[band_hi])) if np.any(band_hi) else 0.0
    growth_ok = tail <= max(1.9 * C_fit, 1e-12)
    i_worst = int(np.argmax(ratio))
    checks.append(HypothesisCheck(
        name="coupling_growth", passed=bool(growth_ok),
        margin=float(tail - 1.9 * C_fit),
        worst_sample=dict(C_fitted=C_fit, tail_ratio=tail,
                          theta=float(theta[i_worst]), detF=float(J[i_worst]))))

    # (iii) dissipation monotonicity and growth
    e1 = rng.standard_normal((n_samples, sample_box.d, sample_box.d)) * 0.3
    e1 = tensors.sym_grad(e1)
    e2 = tensors.sym_grad(rng.standard_normal((n_samples, sample_box.d, sample_box.d)) * 0.3)
    D1 = m.dissipation(F, theta, e1)
    D2 = m.dissipation(F, theta, e2)
    de = e1 - e2
    mono = tensors.ddot(D1 - D2, de) - m.delta * tensors.frobenius(de) ** m.q_exponent
    zero_ok = np.max(tensors.frobenius(m.dissipation(F, theta, np.zeros_like(e1)))) <= 1e-14
    growth = tensors.frobenius(D1) - (1.0 + tensors.frobenius(e1) ** (m.q_exponent - 1.0)) / m.delta
    worst = float(min(np.min(mono), -np.max(growth), 0.0 if zero_ok else -1.0))
    i_worst = int(np.argmin(mono))
    checks.append(HypothesisCheck(
        name="dissipation", passed=bool(np.min(mono) >= -1e-12
                                        and np.max(growth) <= 1e-12 and zero_ok),
        margin=worst,
        worst_sample=dict(mono=float(np.min(mono)), growth=float(np.max(growth)),
                          idx=i_worst)))

    # (iv) frame indifference of psi
    n_rot = min(50, n_samples)
    rel = 0.0
    worst_rot = {}
    for i in range(n_rot):
        Q = tensors.random_rotation(seed + 1000 + i, sample_box.d)
        a = free_energy(m, Q @ F[i], theta[i])
        b = free_energy(m, F[i], theta[i])
        r = abs(a - b) / max(abs(b), 1.0)
        if r > rel:
            rel, worst_rot = r, dict(idx=i, rel=float(r))
    checks.append(HypothesisCheck(
        name="frame_indifference", passed=bool(rel <= 1e-10), margin=float(rel),
        worst_sample=worst_rot))

    # (v) stress symmetry
    T = cauchy_stress(m, F, theta)
    asym = tensors.frobenius(T - tensors.transpose(T))
    scale = np.maximum(tensors.frobenius(T), 1e-30)
    rel_asym = asym / scale
    i_worst = int(np.argmax(rel_asym))
    checks.append(HypothesisCheck(
        name="stress_symmetry", passed=bool(np.max(rel_asym) <= 1e-10),
        margin=float(np.max(rel_asym)),
        worst_sample=dict(detF=float(J[i_worst]), theta=float(theta[i_worst]))))

    return HypothesisReport(checks=checks)
