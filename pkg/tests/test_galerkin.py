import numpy as np
import pytest

from thermokv import galerkin, materials, oracles, regularization, tensors
from thermokv.errors import UnsupportedDomain

DOM = galerkin.Domain((1.0, 1.0))


def test_domain_validation():
    with pytest.raises(UnsupportedDomain):
        galerkin.Domain((0.0, 1.0))
    with pytest.raises(UnsupportedDomain):
        galerkin.Domain((1.0, -2.0))


@pytest.mark.parametrize("bc", ["Periodic", "SlipRectangle"])
def test_projection_reproduces_basis(bc):
    sp = galerkin.build_velocity_space(2, bc, DOM)
    rng = np.random.default_rng(0)
    coeffs = rng.standard_normal(sp.n_basis)
    vals = sp.eval_coeffs(coeffs)
    back = galerkin.project(vals, sp)
    assert np.allclose(back, coeffs, atol=1e-10)


@pytest.mark.parametrize("bc", ["Periodic", "SlipRectangle"])
def test_temperature_projection_roundtrip(bc):
    sp = galerkin.build_temperature_space(3, bc, DOM)
    rng = np.random.default_rng(1)
    coeffs = rng.standard_normal(sp.n_basis)
    back = galerkin.project(sp.eval_coeffs(coeffs), sp)
    assert np.allclose(back, coeffs, atol=1e-10)


def test_slip_velocity_normal_component_vanishes():
    sp = galerkin.build_velocity_space(3, "SlipRectangle", DOM)
    rng = np.random.default_rng(2)
    coeffs = rng.standard_normal(sp.n_basis)
    vb = np.einsum("i,iqc->qc", coeffs, sp.B_V)
    vn = np.sum(vb * sp.quad.b_normals, axis=-1)
    assert np.max(np.abs(vn)) < 1e-12


def test_velocity_tables_derivative_consistency():
    # G and E tables must agree with finite differences of V
    sp = galerkin.build_velocity_space(2, "Periodic", DOM)
    rng = np.random.default_rng(3)
    pts = rng.uniform(0.0, 1.0, (5, 2))
    h = 1e-6
    tabs = sp.tables_at(pts)
    for g_axis in range(2):
        dp = np.zeros(2)
        dp[g_axis] = h
        Vp = sp.tables_at(pts + dp)["V"]
        Vm = sp.tables_at(pts - dp)["V"]
        fd = (Vp - Vm) / (2.0 * h)
        assert np.max(np.abs(fd - tabs["G"][..., g_axis])) < 1e-5
    E = tabs["E"]
    assert np.allclose(E, 0.5 * (tabs["G"] + np.swapaxes(tabs["G"], -1, -2)))


def test_quadrature_weights_sum_to_area():
    for bc in ("Periodic", "SlipRectangle"):
        sp = galerkin.build_temperature_space(2, bc, DOM)
        assert np.isclose(np.sum(sp.quad.weights), 1.0, rtol=1e-12)
    sp = galerkin.build_temperature_space(2, "SlipRectangle", galerkin.Domain((2.0, 0.5)))
    assert np.isclose(np.sum(sp.quad.weights), 1.0, rtol=1e-12)
    # boundary rule measures the perimeter
    assert np.isclose(np.sum(sp.quad.b_weights), 2 * (2.0 + 0.5), rtol=1e-12)


def _quad_fields(v_space, z_space, vc, thc, rho=1.0):
    nq = v_space.quad.nodes.shape[0]
    v = np.einsum("i,iqc->qc", vc, v_space.V)
    g = np.einsum("i,iqcg->qcg", vc, v_space.G)
    ge = np.einsum("i,iqabg->qabg", vc, v_space.GE)
    theta = np.einsum("i,iq->q", thc, z_space.Phi)
    gth = np.einsum("i,iqa->qa", thc, z_space.GPhi)
    F = np.broadcast_to(np.eye(2), (nq, 2, 2)).copy()
    qf = galerkin.QuadFields(v=v, grad_v=g, e=tensors.sym_grad(g), grad_e=ge,
                             theta=theta, grad_theta=gth,
                             rho=np.full(nq, rho), F=F, rho_R=np.full(nq, rho))
    if z_space.B_Phi is not None:
        qf.theta_b = np.einsum("i,iq->q", thc, z_space.B_Phi)
        qf.v_b = np.einsum("i,iqc->qc", vc, v_space.B_V)
    return qf


def test_momentum_residual_zero_at_rest_reference():
    # v = 0, F = I, theta = 0: no stress, no dissipation, no residual
    m = materials.neo_hookean_thermal()
    rp = regularization.RegularizationParams()
    v_space = galerkin.build_velocity_space(2, "Periodic", DOM)
    z_space = galerkin.build_temperature_space(2, "Periodic", DOM)
    qf = _quad_fields(v_space, z_space, np.zeros(v_space.n_basis),
                      np.zeros(z_space.n_basis))
    r = galerkin.assemble_momentum_residual(qf, v_space, m, rp)
    assert np.max(np.abs(r)) < 1e-14


def test_momentum_residual_matches_dense_quadrature():
    # the weak integral against one test function agrees with a brute-force
    # reference quadrature of the same integrand; q = p = 4 keeps every term a
    # trigonometric polynomial so both rules are exact
    m = materials.neo_hookean_thermal(q=4.0)
    rp = regularization.RegularizationParams(nu=1e-3, p=4.0, q=4.0)
    v_space = galerkin.build_velocity_space(1, "Periodic", DOM)
    z_space = galerkin.build_temperature_space(1, "Periodic", DOM)
    rng = np.random.default_rng(4)
    vc = 0.1 * rng.standard_normal(v_space.n_basis)
    thc = np.zeros(z_space.n_basis)
    thc[0] = 1.0
    qf = _quad_fields(v_space, z_space, vc, thc)
    r = galerkin.assemble_momentum_residual(qf, v_space, m, rp)

    i = 3  # arbitrary non-constant test function
    tab_cache = {}

    def integrand(x):
        tabs = tab_cache.setdefault("t", None)
        t = v_space.tables_at(x.reshape(-1, 2))
        v = np.einsum("i,iqc->qc", vc, t["V"])
        g = np.einsum("i,iqcg->qcg", vc, t["G"])
        ge = np.einsum("i,iqabg->qabg", vc, t["GE"])
        e = tensors.sym_grad(g)
        F = np.broadcast_to(np.eye(2), e.shape).copy()
        T = regularization.regularized_stress(m, rp, F, np.ones(e.shape[0]))
        D = m.dissipation(F, 1.0, e)
        H = galerkin.hyper_stress(rp, ge)
        conv = np.einsum("qa,qba->qb", v, g)
        val = (-np.einsum("qab,qab->q", T + D, t["E"][i])
               - np.einsum("qabg,qabg->q", H, t["GE"][i])
               - np.einsum("qa,qa->q", conv, t["V"][i]))
        return val.reshape(x.shape[:-1])

    ref = oracles.reference_quadrature_2d(integrand, (1.0, 1.0), n=96)
    assert np.isclose(r[i], ref, rtol=1e-10, atol=1e-12)


def test_heat_residual_uniform_dissipation_heats_mean_mode():
    # pure shear strain rate with theta = const: only the dissipation source
    # remains and it loads the constant test function with the total power
    m = materials.neo_hookean_thermal()
    rp = regularization.RegularizationParams(nu=1e-4)
    v_space = galerkin.build_velocity_space(2, "Periodic", DOM)
    z_space = galerkin.build_temperature_space(2, "Periodic", DOM)
    rng = np.random.default_rng(5)
    vc = 0.1 * rng.standard_normal(v_space.n_basis)
    thc = np.zeros(z_space.n_basis)
    thc[0] = 1.0
    qf = _quad_fields(v_space, z_space, vc, thc)
    r = galerkin.assemble_heat_residual(qf, z_space, m, rp)
    w = z_space.quad.weights
    src = galerkin.heat_source_density(qf, m, rp)
    assert np.isclose(r[0], np.sum(w * src), rtol=1e-12)
    assert r[0] > 0.0


def test_heat_source_density_nonnegative_without_coupling():
    # volumetric_pt has gamma_F = 0, so the source is pure dissipation >= 0
    m = materials.volumetric_pt()
    rp = regularization.RegularizationParams(epsilon=1e-2)
    v_space = galerkin.build_velocity_space(2, "Periodic", DOM)
    z_space = galerkin.build_temperature_space(2, "Periodic", DOM)
    rng = np.random.default_rng(6)
    vc = 0.3 * rng.standard_normal(v_space.n_basis)
    qf = _quad_fields(v_space, z_space, vc, np.zeros(z_space.n_basis))
    src = galerkin.heat_source_density(qf, m, rp)
    assert np.all(src >= 0.0)


def test_quadrature_refinement_check_passes_resolved():
    v_space = galerkin.build_velocity_space(2, "Periodic", DOM)
    z_space = galerkin.build_temperature_space(2, "Periodic", DOM)
    vc = 0.05 * np.random.default_rng(7).standard_normal(v_space.n_basis)
    qf = _quad_fields(v_space, z_space, vc, np.zeros(z_space.n_basis))
    qf._coeffs = vc
    rp = regularization.RegularizationParams()
    galerkin.quadrature_refinement_check(v_space, qf, rp, tol=1e-4)
