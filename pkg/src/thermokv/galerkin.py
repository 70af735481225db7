"""Trigonometric Galerkin spaces on a 2-D rectangle/torus and weak-form assembly.

Velocity space V_k: tensor-product trig polynomials; in SlipRectangle mode
the component-wise sine/cosine mix makes v.n = 0 on the boundary exact.
Temperature space Z_k: full Fourier basis (Periodic) or cosine basis
(SlipRectangle, flux-compatible).  All basis functions are globally C^oo, so
second derivatives (needed by the hyper-stress term) are available pointwise.

Quadrature: uniform tensor grid on the torus (the Gauss-exact rule for trig
polynomials) or tensor Gauss-Legendre on the rectangle, plus Gauss-Legendre
edge rules for boundary integrals.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import regularization, tensors
from .errors import QuadratureUnderResolved, SingularGram, UnsupportedDomain


@dataclass(frozen=True)
class Domain:
    lengths: tuple = (1.0, 1.0)

    def __post_init__(self):
        if len(self.lengths) != 2 or min(self.lengths) <= 0:
            raise UnsupportedDomain("only 2-D rectangles with positive side lengths")


@dataclass(frozen=True)
class BasisFn:
    """One tensor-product basis function fx(x)*fy(y), optionally vector-valued
    in component `comp` (None for scalar spaces)."""

    kx: str      # "one" | "cos" | "sin"
    wx: float
    ky: str
    wy: float
    comp: int | None = None


def _factor(kind, w, x, deriv):
    if kind == "one":
        return np.ones_like(x) if deriv == 0 else np.zeros_like(x)
    if kind == "cos":
        if deriv == 0:
            return np.cos(w * x)
        if deriv == 1:
            return -w * np.sin(w * x)
        return -w * w * np.cos(w * x)
    if kind == "sin":
        if deriv == 0:
            return np.sin(w * x)
        if deriv == 1:
            return w * np.cos(w * x)
        return -w * w * np.sin(w * x)
    raise ValueError(kind)


def _scalar_factors_periodic(k, L):
    out = [("one", 0.0)]
    for m in range(1, k + 1):
        w = 2.0 * np.pi * m / L
        out.append(("cos", w))
        out.append(("sin", w))
    return out


@dataclass
class Quadrature:
    nodes: np.ndarray        # (nq, 2)
    weights: np.ndarray      # (nq,)
    b_nodes: np.ndarray      # (nbq, 2) boundary nodes (empty in Periodic mode)
    b_weights: np.ndarray
    b_normals: np.ndarray    # (nbq, 2) outward normals


def _build_quadrature(bc_mode, domain, n_axis):
    Lx, Ly = domain.lengths
    if bc_mode == "Periodic":
        x = np.arange(n_axis) * (Lx / n_axis)
        y = np.arange(n_axis) * (Ly / n_axis)
        X, Y = np.meshgrid(x, y, indexing="ij")
        nodes = np.stack([X.ravel(), Y.ravel()], axis=-1)
        w = np.full(nodes.shape[0], (Lx / n_axis) * (Ly / n_axis))
        empty = np.zeros((0, 2))
        return Quadrature(nodes, w, empty, np.zeros(0), empty)
    if bc_mode != "SlipRectangle":
        raise UnsupportedDomain(f"unknown bc_mode {bc_mode}")
    xg, wg = np.polynomial.legendre.leggauss(n_axis)
    x = 0.5 * Lx * (xg + 1.0)
    y = 0.5 * Ly * (xg + 1.0)
    wx = 0.5 * Lx * wg
    wy = 0.5 * Ly * wg
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = np.outer(wx, wy)
    nodes = np.stack([X.ravel(), Y.ravel()], axis=-1)
    # boundary: four edges with 1-D Gauss rules
    bn, bw, bnorm = [], [], []
    for xe, nrm in ((0.0, (-1.0, 0.0)), (Lx, (1.0, 0.0))):
        bn.append(np.stack([np.full_like(y, xe), y], axis=-1))
        bw.append(wy)
        bnorm.append(np.tile(nrm, (len(y), 1)))
    for ye, nrm in ((0.0, (0.0, -1.0)), (Ly, (0.0, 1.0))):
        bn.append(np.stack([x, np.full_like(x, ye)], axis=-1))
        bw.append(wx)
        bnorm.append(np.tile(nrm, (len(x), 1)))
    return Quadrature(nodes, W.ravel(), np.concatenate(bn), np.concatenate(bw),
                      np.concatenate(bnorm))


class GalerkinSpace:
    """A finite trig basis with tabulated values/derivatives at quadrature."""

    def __init__(self, k, bc_mode, domain, basis, quad, kind):
        self.k = k
        self.bc_mode = bc_mode
        self.domain = domain
        self.basis = basis
        self.quad = quad
        self.kind = kind  # "velocity" | "scalar"
        self.n_basis = len(basis)
        tabs = self.tables_at(quad.nodes)
        for key, val in tabs.items():
            setattr(self, key, val)
        if quad.b_nodes.shape[0]:
            btabs = self.tables_at(quad.b_nodes, boundary=True)
            self.B_V = btabs.get("V")
            self.B_Phi = btabs.get("Phi")
        else:
            self.B_V = self.B_Phi = None
        # unweighted L2 Gram (near-diagonal for trig bases) and its factor
        if kind == "velocity":
            G = np.einsum("iqc,jqc,q->ij", self.V, self.V, quad.weights, optimize=True)
        else:
            G = np.einsum("iq,jq,q->ij", self.Phi, self.Phi, quad.weights, optimize=True)
        self.gram = G
        try:
            self.gram_cho = cho_factor(G)
        except np.linalg.LinAlgError as exc:
            raise SingularGram(str(exc)) from exc

    # -- evaluation ---------------------------------------------------------

    def _scalar_parts(self, bf, x, y, need_second):
        fx0 = _factor(bf.kx, bf.wx, x, 0)
        fy0 = _factor(bf.ky, bf.wy, y, 0)
        fx1 = _factor(bf.kx, bf.wx, x, 1)
        fy1 = _factor(bf.ky, bf.wy, y, 1)
        parts = dict(u=fx0 * fy0, ux=fx1 * fy0, uy=fx0 * fy1)
        if need_second:
            fx2 = _factor(bf.kx, bf.wx, x, 2)
            fy2 = _factor(bf.ky, bf.wy, y, 2)
            parts.update(uxx=fx2 * fy0, uxy=fx1 * fy1, uyy=fx0 * fy2)
        return parts

    def tables_at(self, points, boundary=False):
        """Basis tables at an arbitrary (n, 2) point set.

        Scalar spaces: Phi (nb, n), GPhi (nb, n, 2).  Velocity spaces:
        V (nb, n, 2), G (nb, n, 2, 2) = grad, E (sym grad), GE (nb, n, 2, 2, 2)
        with GE[i, q, a, b, g] = d_g e(v_i)_ab.  Boundary tables skip the
        derivative blocks.
        """
        pts = np.asarray(points, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        n = x.shape[0]
        nb = self.n_basis
        if self.kind == "scalar":
            Phi = np.empty((nb, n))
            GPhi = np.empty((nb, n, 2)) if not boundary else None
            for i, bf in enumerate(self.basis):
                p = self._scalar_parts(bf, x, y, need_second=False)
                Phi[i] = p["u"]
                if not boundary:
                    GPhi[i, :, 0] = p["ux"]
                    GPhi[i, :, 1] = p["uy"]
            return {"Phi": Phi} if boundary else {"Phi": Phi, "GPhi": GPhi}
        V = np.zeros((nb, n, 2))
        if boundary:
            for i, bf in enumerate(self.basis):
                p = self._scalar_parts(bf, x, y, need_second=False)
                V[i, :, bf.comp] = p["u"]
            return {"V": V}
        G = np.zeros((nb, n, 2, 2))
        E = np.zeros((nb, n, 2, 2))
        GE = np.zeros((nb, n, 2, 2, 2))
        for i, bf in enumerate(self.basis):
            p = self._scalar_parts(bf, x, y, need_second=True)
            c = bf.comp
            V[i, :, c] = p["u"]
            G[i, :, c, 0] = p["ux"]
            G[i, :, c, 1] = p["uy"]
            dd = {(0, 0): p["uxx"], (0, 1): p["uxy"], (1, 0): p["uxy"], (1, 1): p["uyy"]}
            du = {0: p["ux"], 1: p["uy"]}
            for a in range(2):
                for b in range(2):
                    E[i, :, a, b] = 0.5 * ((a == c) * du[b] + (b == c) * du[a])
                    for g in range(2):
                        GE[i, :, a, b, g] = 0.5 * ((a == c) * dd[(g, b)]
                                                   + (b == c) * dd[(g, a)])
        return {"V": V, "G": G, "E": E, "GE": GE}

    def eval_coeffs(self, coeffs, tables=None):
        """Field values at quadrature nodes (or at custom tables)."""
        t = tables if tables is not None else self.__dict__
        if self.kind == "velocity":
            return np.einsum("i,iqc->qc", coeffs, t["V"])
        return np.einsum("i,iq->q", coeffs, t["Phi"])


def build_velocity_space(k, bc_mode, domain, quad_points=None):
    """V_k: C^oo vector basis; in SlipRectangle mode v.n = 0 exactly."""
    if k < 1:
        raise ValueError("k must be >= 1")
    Lx, Ly = domain.lengths
    basis = []
    if bc_mode == "Periodic":
        fx = _scalar_factors_periodic(k, Lx)
        fy = _scalar_factors_periodic(k, Ly)
        for comp in range(2):
            for kx, wx in fx:
                for ky, wy in fy:
                    basis.append(BasisFn(kx, wx, ky, wy, comp))
        nq = quad_points or max(4 * k + 4, 16)
    elif bc_mode == "SlipRectangle":
        for m in range(1, k + 1):
            for n_mode in range(0, k + 1):
                ky, wy = ("one", 0.0) if n_mode == 0 else ("cos", np.pi * n_mode / Ly)
                basis.append(BasisFn("sin", np.pi * m / Lx, ky, wy, 0))
        for m in range(0, k + 1):
            for n_mode in range(1, k + 1):
                kx, wx = ("one", 0.0) if m == 0 else ("cos", np.pi * m / Lx)
                basis.append(BasisFn(kx, wx, "sin", np.pi * n_mode / Ly, 1))
        nq = quad_points or max(4 * k + 8, 24)
    else:
        raise UnsupportedDomain(f"unknown bc_mode {bc_mode}")
    quad = _build_quadrature(bc_mode, domain, nq)
    return GalerkinSpace(k, bc_mode, domain, basis, quad, "velocity")


def build_temperature_space(k, bc_mode, domain, quad_points=None):
    """Z_k: full Fourier basis (Periodic) or cosine basis (SlipRectangle)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    Lx, Ly = domain.lengths
    basis = []
    if bc_mode == "Periodic":
        fx = _scalar_factors_periodic(k, Lx)
        fy = _scalar_factors_periodic(k, Ly)
        for kx, wx in fx:
            for ky, wy in fy:
                basis.append(BasisFn(kx, wx, ky, wy, None))
        nq = quad_points or max(4 * k + 4, 16)
    elif bc_mode == "SlipRectangle":
        for m in range(0, k + 1):
            for n_mode in range(0, k + 1):
                kx, wx = ("one", 0.0) if m == 0 else ("cos", np.pi * m / Lx)
                ky, wy = ("one", 0.0) if n_mode == 0 else ("cos", np.pi * n_mode / Ly)
                basis.append(BasisFn(kx, wx, ky, wy, None))
        nq = quad_points or max(4 * k + 8, 24)
    else:
        raise UnsupportedDomain(f"unknown bc_mode {bc_mode}")
    quad = _build_quadrature(bc_mode, domain, nq)
    return GalerkinSpace(k, bc_mode, domain, basis, quad, "scalar")


def project(values_at_quadrature, space):
    """L2 projection: Gram-solve of the moment vector."""
    vals = np.asarray(values_at_quadrature, dtype=float)
    w = space.quad.weights
    if space.kind == "velocity":
        rhs = np.einsum("iqc,qc,q->i", space.V, vals, w, optimize=True)
    else:
        rhs = np.einsum("iq,q,q->i", space.Phi, vals, w, optimize=True)
    return cho_solve(space.gram_cho, rhs)


# ---------------------------------------------------------------------------
# weak-form assembly


@dataclass
class QuadFields:
    """State evaluated at the volume (and boundary) quadrature nodes."""

    v: np.ndarray            # (nq, 2)
    grad_v: np.ndarray       # (nq, 2, 2)
    e: np.ndarray            # (nq, 2, 2)
    grad_e: np.ndarray       # (nq, 2, 2, 2)
    theta: np.ndarray        # (nq,)
    grad_theta: np.ndarray   # (nq, 2)
    rho: np.ndarray          # (nq,)
    F: np.ndarray            # (nq, 2, 2)
    rho_R: np.ndarray        # (nq,)
    t: float = 0.0
    v_b: np.ndarray = None       # boundary values (nbq, 2)
    theta_b: np.ndarray = None   # (nbq,)
    Fdot: np.ndarray = None      # (nq, 2, 2) transport rate, for the heat eq.


@dataclass
class Loads:
    """External loads: gravity g(x, t), tangential traction f(x, n, t),
    and the boundary heat-flux law h(theta)."""

    g: object = None
    f: object = None
    h: object = None


def eval_table(coeffs, tab):
    """Contract coefficients (nb,) with a basis table (nb, q, ...) via BLAS."""
    nb = tab.shape[0]
    return (coeffs @ tab.reshape(nb, -1)).reshape(tab.shape[1:])


def weighted_contraction(tab, field, w):
    """int field : basis_i for every i: tab (nb, q, ...), field (q, ...), w (q,)."""
    nb = tab.shape[0]
    fw = field * w.reshape((-1,) + (1,) * (field.ndim - 1))
    return tab.reshape(nb, -1) @ fw.reshape(-1)


def hyper_stress(rp, grad_e):
    """nu |grad e|^(p-2) grad e, vectorized over leading axes."""
    ge = np.asarray(grad_e, dtype=float)
    norm = np.sqrt(np.sum(ge * ge, axis=(-3, -2, -1)))
    return rp.nu * norm[..., None, None, None] ** (rp.p - 2.0) * ge


def quadrature_refinement_check(space, qf, rp, tol=1e-6):
    """Two-level estimate of the quadrature error in the p-power integral.

    Compares the hyper-dissipation integral on the configured rule against a
    refined rule built from the same coefficients; raises
    QuadratureUnderResolved when the relative difference exceeds tol.
    Callers pass the velocity coefficients through qf._coeffs (set by
    dynamics); a missing attribute makes this a no-op.
    """
    coeffs = getattr(qf, "_coeffs", None)
    if coeffs is None:
        return
    fine = _refined(space)
    ge_f = np.einsum("i,iqabg->qabg", coeffs, fine.GE)
    base = float(np.sum(np.sum(qf.grad_e ** 2, axis=(1, 2, 3)) ** (rp.p / 2.0)
                        * space.quad.weights))
    ref = float(np.sum(np.sum(ge_f ** 2, axis=(1, 2, 3)) ** (rp.p / 2.0)
                       * fine.quad.weights))
    scale = max(abs(ref), 1e-30)
    if abs(base - ref) > tol * scale:
        raise QuadratureUnderResolved(
            f"p-power quadrature error {abs(base - ref) / scale:.3e} > {tol:.1e}")


_REFINED_CACHE = {}


def _refined(space):
    key = (id(space),)
    if key not in _REFINED_CACHE:
        nq = int(round(np.sqrt(space.quad.nodes.shape[0])))
        build = build_velocity_space if space.kind == "velocity" else build_temperature_space
        _REFINED_CACHE[key] = build(space.k, space.bc_mode, space.domain,
                                    quad_points=2 * nq)
    return _REFINED_CACHE[key]


def assemble_momentum_residual(qf, v_space, material, rp, loads=None,
                               check_quadrature=False):
    """Weak momentum residual per test function (sign: RHS of M_rho dv/dt).

    r_i = -int (T_{lam,eps} + D) : e(v_i) - int H(grad e) ::: grad e(v_i)
          - int rho ((v.grad)v) . v_i + int sqrt(rho_R rho / det_lam F) g . v_i
          + bnd int (f - nu_flat v) . v_i
    """
    w = v_space.quad.weights
    T = regularization.regularized_stress(material, rp, qf.F, qf.theta)
    D = material.dissipation(qf.F, qf.theta, qf.e)
    H = hyper_stress(rp, qf.grad_e)
    conv = qf.rho[:, None] * np.einsum("qa,qba->qb", qf.v, qf.grad_v)
    r = -weighted_contraction(v_space.E, T + D, w)
    r -= weighted_contraction(v_space.GE, H, w)
    r -= weighted_contraction(v_space.V, conv, w)
    if loads is not None and loads.g is not None:
        gq = np.asarray(loads.g(v_space.quad.nodes, qf.t), dtype=float)
        dl = regularization.det_lambda(qf.F, rp.lam)
        load = np.sqrt(qf.rho_R * qf.rho / dl)[:, None] * gq
        r += weighted_contraction(v_space.V, load, w)
    if v_space.B_V is not None and qf.v_b is not None:
        bw = v_space.quad.b_weights
        trac = -rp.nu_flat * qf.v_b
        if loads is not None and loads.f is not None:
            fq = np.asarray(loads.f(v_space.quad.b_nodes,
                                    v_space.quad.b_normals, qf.t), dtype=float)
            trac = trac + fq
        r += weighted_contraction(v_space.B_V, trac, bw)
    if check_quadrature:
        quadrature_refinement_check(v_space, qf, rp)
    return r


def assemble_heat_residual(qf, z_space, material, rp, loads=None):
    """Weak heat (enthalpy-form) residual per test function theta_j:

    r_j = int (w v - kappa grad theta) . grad theta_j
          + int [damped(D:e + nu|grad e|^p) + pi_lam gamma_F F^T : e /
                 ((1+eps|theta|) det F)] theta_j
          + bnd int (h_eps(theta) + nu_flat |v|^2/(2+eps|v|^2)) theta_j
    """
    from . import materials as mat

    w = z_space.quad.weights
    wfield = mat.enthalpy(material, qf.F, qf.theta)
    kap = material.kappa(qf.F, qf.theta)
    flux = wfield[:, None] * qf.v - kap[:, None] * qf.grad_theta
    r = weighted_contraction(z_space.GPhi, flux, w)
    src = heat_source_density(qf, material, rp)
    r += weighted_contraction(z_space.Phi, src, w)
    if z_space.B_Phi is not None and qf.theta_b is not None:
        h_val = (np.asarray(loads.h(qf.theta_b), dtype=float)
                 if loads is not None and loads.h is not None
                 else np.zeros_like(qf.theta_b))
        bflux = regularization.regularized_boundary_flux(rp, h_val, qf.v_b)
        r += weighted_contraction(z_space.B_Phi, bflux, z_space.quad.b_weights)
    return r


def heat_source_density(qf, material, rp):
    """Pointwise heat source: damped dissipation plus the adiabatic coupling.

    The same expression feeds the heat assembly and the energy ledger, so the
    Joule-consistency identity holds by construction (identical quadrature,
    identical integrand).
    """
    D = material.dissipation(qf.F, qf.theta, qf.e)
    diss = tensors.ddot(D, qf.e)
    ge_norm = np.sqrt(np.sum(qf.grad_e ** 2, axis=(-3, -2, -1)))
    hyper = rp.nu * ge_norm ** rp.p
    e_norm = tensors.frobenius(qf.e)
    damped = regularization.damped_heat_source(rp, diss, hyper, e_norm, ge_norm)
    pi = regularization.pi_lambda(qf.F, rp.lam)
    J = tensors.det(qf.F)
    gF = material.gamma_F(qf.F, qf.theta)
    coup = np.einsum("qij,qkj->qik", gF, qf.F) / J[:, None, None]
    adiab = pi * tensors.ddot(coup, qf.e) / (1.0 + rp.epsilon * np.abs(qf.theta))
    return damped + adiab
