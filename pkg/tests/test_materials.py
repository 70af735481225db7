import numpy as np
import pytest

from thermokv import materials, oracles, tensors
from thermokv.errors import NonInvertibleDeformation, NonMonotoneEnthalpy

ALL_MATERIALS = sorted(materials.registry)


def _states(seed, n=20):
    rng = np.random.default_rng(seed)
    F = np.eye(2) + 0.25 * rng.standard_normal((n, 2, 2))
    F = F[tensors.det(F) > 0.3]
    theta = rng.uniform(0.1, 2.0, size=F.shape[0])
    return F, theta


@pytest.mark.parametrize("name", ALL_MATERIALS)
def test_gamma_vanishes_at_zero_temperature(name):
    m = materials.registry[name]()
    F, _ = _states(0)
    assert np.allclose(m.gamma(F, np.zeros(F.shape[0])), 0.0, atol=1e-12)


@pytest.mark.parametrize("name", ALL_MATERIALS)
def test_gamma_F_fd(name):
    m = materials.registry[name]()
    F, theta = _states(1, 6)
    for Fi, ti in zip(F, theta):
        rep = oracles.fd_gradient_check(
            lambda X, ti=ti: float(m.gamma(X, ti)), Fi, m.gamma_F(Fi, ti))
        assert rep.passed, (name, rep.observed_order)


@pytest.mark.parametrize("name", ALL_MATERIALS)
def test_gamma_theta_fd(name):
    m = materials.registry[name]()
    F, theta = _states(2, 6)
    for Fi, ti in zip(F, theta):
        rep = oracles.fd_gradient_check(
            lambda t, Fi=Fi: float(m.gamma(Fi, t.item())), np.array([ti]),
            np.array([float(m.gamma_theta(Fi, ti))]))
        assert rep.passed, (name, rep.observed_order)


@pytest.mark.parametrize("name", ALL_MATERIALS)
def test_gamma_second_derivatives_fd(name):
    m = materials.registry[name]()
    F, theta = _states(3, 5)
    for Fi, ti in zip(F, theta):
        rep = oracles.fd_gradient_check(
            lambda t, Fi=Fi: float(m.gamma_theta(Fi, t.item())), np.array([ti]),
            np.array([float(m.gamma_thetatheta(Fi, ti))]))
        assert rep.passed, (name, "thetatheta", rep.observed_order)
        rep = oracles.fd_gradient_check(
            lambda X, ti=ti: float(m.gamma_theta(X, ti)), Fi,
            m.gamma_Ftheta(Fi, ti))
        assert rep.passed, (name, "Ftheta", rep.observed_order)


@pytest.mark.parametrize("name", ALL_MATERIALS)
def test_phi_F_fd(name):
    m = materials.registry[name]()
    F, _ = _states(4, 6)
    for Fi in F:
        rep = oracles.fd_gradient_check(lambda X: float(m.phi(X)), Fi,
                                        m.phi_F(Fi))
        assert rep.passed, (name, rep.observed_order)


@pytest.mark.parametrize("name", ALL_MATERIALS)
def test_stress_symmetry_and_frame_indifference(name):
    m = materials.registry[name]()
    F, theta = _states(5, 10)
    T = materials.cauchy_stress(m, F, theta)
    scale = np.maximum(tensors.frobenius(T), 1.0)
    assert np.max(tensors.frobenius(T - np.swapaxes(T, -1, -2)) / scale) < 1e-10
    for i in range(5):
        Q = tensors.random_rotation(100 + i, 2)
        a = materials.free_energy(m, Q @ F[i], theta[i])
        b = materials.free_energy(m, F[i], theta[i])
        assert abs(a - b) <= 1e-10 * max(abs(b), 1.0)


def test_negative_theta_guard_branch():
    # below zero the thermal free energy extends to -theta*ln(-theta), so the
    # enthalpy is theta/det F and the heat capacity 1/det F: both keep the
    # enthalpy map monotone through zero
    m = materials.neo_hookean_thermal()
    F = 1.3 * np.eye(2)
    J = float(tensors.det(F))
    for th in (-0.5, -0.01):
        assert np.isclose(float(materials.enthalpy(m, F, th)), th / J, atol=1e-12)
        assert np.isclose(float(materials.heat_capacity(m, F, th)), 1.0 / J,
                          atol=1e-12)
        assert np.allclose(m.gamma_F(F, th), 0.0)
    assert np.isclose(float(materials.enthalpy(m, F, 0.0)), 0.0)


@pytest.mark.parametrize("name", ALL_MATERIALS)
def test_invert_enthalpy_roundtrip(name):
    m = materials.registry[name]()
    F = np.eye(2) * 1.1
    for th in (0.3, 1.0, 1.7, -0.4, 0.0):
        w = float(materials.enthalpy(m, F, th))
        back = materials.invert_enthalpy(m, F, w)
        assert abs(back - th) < 1e-8, (name, th, back)


def test_invert_enthalpy_nonmonotone_raises():
    # a gamma with positive curvature in theta makes omega decrease
    m = materials.neo_hookean_thermal()
    bad = materials.MaterialModel(
        name="bad", phi=m.phi, phi_F=m.phi_F,
        gamma=lambda F, t: -np.asarray(t, dtype=float) ** 2,
        gamma_F=m.gamma_F, gamma_theta=lambda F, t: -2.0 * np.asarray(t, dtype=float),
        gamma_thetatheta=lambda F, t: -2.0 * np.ones_like(np.asarray(t, dtype=float)),
        gamma_Ftheta=m.gamma_Ftheta, kappa=m.kappa, dissipation=m.dissipation,
        q_exponent=m.q_exponent, delta=m.delta, params={})
    # omega = (gamma - t gamma_t)/J = t^2/J is monotone for t>0... flip sign
    worse = materials.MaterialModel(
        name="worse", phi=m.phi, phi_F=m.phi_F,
        gamma=lambda F, t: np.asarray(t, dtype=float) ** 2,
        gamma_F=bad.gamma_F, gamma_theta=lambda F, t: 2.0 * np.asarray(t, dtype=float),
        gamma_thetatheta=lambda F, t: 2.0 * np.ones_like(np.asarray(t, dtype=float)),
        gamma_Ftheta=bad.gamma_Ftheta, kappa=m.kappa, dissipation=m.dissipation,
        q_exponent=m.q_exponent, delta=m.delta, params={})
    with pytest.raises(NonMonotoneEnthalpy):
        materials.invert_enthalpy(worse, np.eye(2), 0.5)


def test_cauchy_stress_rejects_noninvertible():
    m = materials.neo_hookean_thermal()
    with pytest.raises(NonInvertibleDeformation):
        materials.cauchy_stress(m, np.zeros((2, 2)), 1.0)


def test_dissipation_zero_at_zero_strain_rate():
    for name in ALL_MATERIALS:
        m = materials.registry[name]()
        D = m.dissipation(np.eye(2), 1.0, np.zeros((2, 2)))
        assert np.allclose(D, 0.0)


def test_stress_free_reference_state():
    m = materials.neo_hookean_thermal()
    T = materials.cauchy_stress(m, np.eye(2), 0.0)
    assert np.allclose(T, 0.0, atol=1e-12)


class TestHypothesisValidator:
    def test_neo_hookean_bounded_alpha_passes(self):
        rep = materials.validate_hypotheses(materials.neo_hookean_thermal())
        assert rep.passed, rep.summary()

    def test_all_registry_defaults_pass(self):
        for name in ALL_MATERIALS:
            rep = materials.validate_hypotheses(materials.registry[name]())
            assert rep.passed, (name, rep.summary())

    def test_unbounded_alpha_fails_coupling_growth(self):
        m = materials.neo_hookean_thermal(
            alpha_fn=materials.unbounded_alpha(0.5), K_e=2.0)
        box = materials.SampleBox(theta_range=(0.05, 100.0))
        rep = materials.validate_hypotheses(m, sample_box=box)
        check = rep["coupling_growth"]
        assert not check.passed
        assert check.worst_sample  # failing sample reported

    def test_sma_small_c0_fails_heat_capacity(self):
        m = materials.sma_two_phase(c0=1e-4)
        box = materials.SampleBox(det_range=(0.5, 2.0), theta_range=(0.5, 1.5),
                                  strain=0.4)
        rep = materials.validate_hypotheses(m, sample_box=box, n_samples=2000)
        check = rep["heat_capacity"]
        assert not check.passed
        assert "theta" in check.worst_sample

    def test_sma_default_c0_passes(self):
        rep = materials.validate_hypotheses(materials.sma_two_phase())
        assert rep["heat_capacity"].passed, rep.summary()
