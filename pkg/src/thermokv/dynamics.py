"""Coupled time integration of the semi-discrete system: Galerkin momentum
and heat ODEs plus collocation transport of density and deformation gradient.

The semi-discrete structure: velocity coefficients obey the rho-weighted
Gram system M_rho dv/dt = momentum residual, temperature coefficients obey
the heat-capacity-weighted system M_c dtheta/dt = heat residual minus the
enthalpy-transport correction, while rho and F march on the collocation grid
with the same stage times.  Schemes: "rk4" (default), "euler", and "imex1"
(backward-Euler treatment of hyperviscosity and conduction via a lagged
Newton Jacobian).
"""

import time as _time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse.linalg import LinearOperator, cg

from . import diagnostics, galerkin, materials, regularization, tensors, transport
from .errors import (DegenerateHeatCapacity, InvalidState, SingularMass,
                     StepRejected)


@dataclass
class State:
    v_coeffs: np.ndarray
    theta_coeffs: np.ndarray
    rho: transport.TransportField
    F: transport.TransportField
    t: float

    def copy(self):
        return State(self.v_coeffs.copy(), self.theta_coeffs.copy(),
                     self.rho.copy(), self.F.copy(), self.t)


@dataclass
class Scenario:
    material: materials.MaterialModel
    rp: regularization.RegularizationParams = field(
        default_factory=regularization.RegularizationParams)
    domain: galerkin.Domain = field(default_factory=galerkin.Domain)
    bc_mode: str = "Periodic"
    k: int = 4
    n_col: int = 32
    quad_factor: int = 2
    loads: galerkin.Loads = field(default_factory=galerkin.Loads)
    rho_R: object = 1.0            # scalar, callable(points), or array
    F0: object = None              # None = identity, callable, or array
    v0: object = None              # None = rest, callable, or coefficient array
    theta0: object = 1.0           # scalar or callable
    prescribed_velocity: object = None
    scheme: str = "rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    dt_controller: str = "fixed"   # "fixed" | "adaptive"
    rtol: float = 1e-6
    dt_min: float = 1e-8
    c_min: float = 1e-10
    theta_tol: float = 1e-10
    ledger_every: int = 1
    max_wall_time: float = None
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        self._disc = None

    def discretization(self):
        if self._disc is None:
            self._disc = Discretization(self)
        return self._disc


class WeightedGram:
    """Weight-field Gram systems M_w x = b over a Galerkin space.

    The operator is always formed with the *current* weight; a Cholesky
    factor of a reference weight serves as CG preconditioner and is rebuilt
    once the weight drifts by more than `refactor_tol` in relative L2.
    """

    def __init__(self, space, exc_cls, refactor_tol=1e-2):
        self.space = space
        self.exc = exc_cls
        self.refactor_tol = refactor_tol
        if space.kind == "velocity":
            self.A = np.ascontiguousarray(space.V.reshape(space.n_basis, -1))
            self.rep = 2
        else:
            self.A = np.ascontiguousarray(space.Phi)
            self.rep = 1
        self.wq = space.quad.weights
        self._w_ref = None
        self._cho = None

    def _full_weight(self, weight):
        w = self.wq * weight
        return np.repeat(w, self.rep) if self.rep > 1 else w

    def _refactor(self, weight):
        wf = self._full_weight(weight)
        M = (self.A * wf) @ self.A.T
        try:
            self._cho = cho_factor(M)
        except np.linalg.LinAlgError as exc:
            raise self.exc(str(exc)) from exc
        self._w_ref = weight.copy()

    def solve(self, rhs, weight):
        weight = np.asarray(weight, dtype=float)
        if np.min(weight) <= 0.0:
            raise self.exc(f"weight field degenerate (min {np.min(weight):.3e})")
        if (self._cho is None or np.linalg.norm(weight - self._w_ref)
                > self.refactor_tol * np.linalg.norm(weight)):
            self._refactor(weight)
        wf = self._full_weight(weight)
        # preconditioned iterative refinement: the Cholesky factor of a
        # nearby weight (drift < refactor_tol) contracts the residual by that
        # drift factor per sweep, so a handful of sweeps reach 1e-13
        x = cho_solve(self._cho, rhs)
        scale = max(np.linalg.norm(rhs), 1e-300)
        for _ in range(50):
            r = rhs - self.A @ (wf * (self.A.T @ x))
            if np.linalg.norm(r) <= 1e-13 * scale:
                return x
            x = x + cho_solve(self._cho, r)
        # exact dense fallback
        M = (self.A * wf) @ self.A.T
        try:
            return np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise self.exc(str(exc)) from exc


def _spectral_upsample(arr, n_out):
    """FFT zero-padding of a periodic field (n, n, ...) -> (n_out, n_out, ...).

    Exact for content strictly below the source Nyquist frequency, which the
    caller guarantees (basis modes < half the quadrature-grid resolution).
    """
    n_in = arr.shape[0]
    if n_out == n_in:
        return arr
    fh = np.fft.fft2(arr, axes=(0, 1))
    out = np.zeros((n_out, n_out) + arr.shape[2:], dtype=complex)
    k = n_in // 2
    out[:k, :k] = fh[:k, :k]
    out[:k, n_out - k:] = fh[:k, n_in - k:]
    out[n_out - k:, :k] = fh[n_in - k:, :k]
    out[n_out - k:, n_out - k:] = fh[n_in - k:, n_in - k:]
    return np.fft.ifft2(out, axes=(0, 1)).real * (n_out / n_in) ** 2


def _eval_field(spec_value, points, d_shape=()):
    """Materialize scalar/callable/array initial data at a point set."""
    n = points.shape[0]
    if spec_value is None:
        return None
    if callable(spec_value):
        out = np.asarray(spec_value(points), dtype=float)
        if out.shape != (n,) + d_shape:
            out = np.broadcast_to(out, (n,) + d_shape).astype(float)
        return out
    arr = np.asarray(spec_value, dtype=float)
    if arr.shape == (n,) + d_shape:
        return arr
    return np.broadcast_to(arr, (n,) + d_shape).astype(float).copy()


class Discretization:
    """Spaces, grids, tables, and cached Gram solvers for one scenario."""

    def __init__(self, sc):
        self.sc = sc
        periodic = sc.bc_mode == "Periodic"
        self.grid = transport.UniformGrid((sc.n_col, sc.n_col), sc.domain.lengths,
                                          periodic=periodic)
        nq_axis = max(sc.n_col // sc.quad_factor, 4)
        self.z_space = galerkin.build_temperature_space(
            sc.k, sc.bc_mode, sc.domain,
            quad_points=nq_axis if periodic else None)
        self.prescribed = sc.prescribed_velocity is not None
        # band-limited velocities on aligned periodic grids can be moved from
        # the quadrature grid to the collocation grid by FFT zero-padding
        self._upsample_ok = (periodic and sc.n_col % nq_axis == 0
                             and 2 * sc.k < nq_axis)
        if not self.prescribed:
            self.v_space = galerkin.build_velocity_space(
                sc.k, sc.bc_mode, sc.domain,
                quad_points=nq_axis if periodic else None)
            if self._upsample_ok:
                self.V_col = self.G_col = None
            else:
                col_flat = self.grid.nodes().reshape(-1, 2)
                tabs = self.v_space.tables_at(col_flat)
                self.V_col, self.G_col = tabs["V"], tabs["G"]
            self.M_rho = WeightedGram(self.v_space, SingularMass)
        else:
            self.v_space = None
            self.V_col = self.G_col = None
            self.M_rho = None
        self.M_c = WeightedGram(self.z_space, DegenerateHeatCapacity)
        # quadrature -> collocation subsampling (periodic aligned grids)
        self.col_index = None
        if periodic and sc.n_col % nq_axis == 0:
            s = sc.n_col // nq_axis
            ii, jj = np.meshgrid(np.arange(nq_axis) * s, np.arange(nq_axis) * s,
                                 indexing="ij")
            self.col_index = (ii.ravel() * sc.n_col + jj.ravel())
        nodes = (self.v_space or self.z_space).quad.nodes
        self.quad_nodes = nodes
        self.rho_R_col = _eval_field(sc.rho_R, self.grid.nodes().reshape(-1, 2))
        self.rho_R_q = self._to_quad(self.rho_R_col)

    def _to_quad(self, col_flat_field):
        """Restrict a flat collocation field to the volume quadrature nodes."""
        if self.col_index is not None:
            return col_flat_field[self.col_index]
        shaped = col_flat_field.reshape(self.grid.n + col_flat_field.shape[1:])
        return self.grid.interpolate(shaped, self.quad_nodes)

    # -- pointwise velocity data -------------------------------------------

    def _velocity_at(self, vc, points, t, want_second=False):
        sc = self.sc
        if self.prescribed:
            vel = sc.prescribed_velocity
            v = np.asarray(vel(points, t), dtype=float)
            g = np.asarray(vel.grad(points, t), dtype=float)
            ge = None
            if want_second:
                ge_fn = getattr(vel, "grad_e", None)
                if ge_fn is not None:
                    ge = np.asarray(ge_fn(points, t), dtype=float)
                else:
                    ge = self._fd_grad_e(vel, points, t)
            return v, g, ge
        sp = self.v_space
        v = galerkin.eval_table(vc, sp.V)
        g = galerkin.eval_table(vc, sp.G)
        ge = galerkin.eval_table(vc, sp.GE) if want_second else None
        return v, g, ge

    @staticmethod
    def _fd_grad_e(vel, points, t, h=1e-5):
        ge = np.empty(points.shape[:-1] + (2, 2, 2))
        for g in range(2):
            dp = np.zeros(2)
            dp[g] = h
            ep = tensors.sym_grad(np.asarray(vel.grad(points + dp, t), dtype=float))
            em = tensors.sym_grad(np.asarray(vel.grad(points - dp, t), dtype=float))
            ge[..., g] = (ep - em) / (2.0 * h)
        return ge

    # -- state assembly -----------------------------------------------------

    def quad_state(self, vc, thc, rho_col, F_col, t, Fdot_q=None, vge=None):
        sc = self.sc
        sp = self.v_space if not self.prescribed else None
        if vge is not None:
            v, g, ge = vge
        elif self.prescribed:
            v, g, ge = self._velocity_at(None, self.quad_nodes, t, want_second=True)
        else:
            v = galerkin.eval_table(vc, sp.V)
            g = galerkin.eval_table(vc, sp.G)
            ge = galerkin.eval_table(vc, sp.GE)
        e = tensors.sym_grad(g)
        theta = galerkin.eval_table(thc, self.z_space.Phi)
        gth = galerkin.eval_table(thc, self.z_space.GPhi)
        rho_q = self._to_quad(rho_col.reshape(-1))
        F_q = self._to_quad(F_col.reshape(-1, 2, 2))
        qf = galerkin.QuadFields(v=v, grad_v=g, e=e, grad_e=ge, theta=theta,
                                 grad_theta=gth, rho=rho_q, F=F_q,
                                 rho_R=self.rho_R_q, t=t, Fdot=Fdot_q)
        if self.z_space.B_Phi is not None:
            qf.theta_b = galerkin.eval_table(thc, self.z_space.B_Phi)
            if self.prescribed:
                qf.v_b = np.asarray(sc.prescribed_velocity(
                    self.z_space.quad.b_nodes, t), dtype=float)
            else:
                qf.v_b = galerkin.eval_table(vc, sp.B_V)
        qf._coeffs = None if self.prescribed else vc
        return qf

    # -- coupled right-hand side -------------------------------------------

    def rhs(self, vc, thc, rho_col, F_col, t):
        sc = self.sc
        vge = None
        if self.prescribed:
            pts = self.grid.nodes().reshape(-1, 2)
            v_col, g_col, _ = self._velocity_at(None, pts, t)
        elif self._upsample_ok:
            vge = self._velocity_at(vc, None, t, want_second=True)
            nq2 = (int(np.sqrt(vge[0].shape[0])),) * 2
            v_col = _spectral_upsample(vge[0].reshape(nq2 + (2,)), self.grid.n[0])
            g_col = _spectral_upsample(vge[1].reshape(nq2 + (2, 2)),
                                       self.grid.n[0])
        else:
            v_col = galerkin.eval_table(vc, self.V_col)
            g_col = galerkin.eval_table(vc, self.G_col)
        v_col = v_col.reshape(self.grid.n + (2,))
        g_col = g_col.reshape(self.grid.n + (2, 2))
        rho2 = rho_col.reshape(self.grid.n)
        F2 = F_col.reshape(self.grid.n + (2, 2))
        rhodot = transport.transport_rhs(rho2, "density", v_col, g_col, self.grid)
        Fdot = transport.transport_rhs(F2, "deformation_gradient", v_col, g_col,
                                       self.grid)
        Fdot_q = self._to_quad(Fdot.reshape(-1, 2, 2))
        qf = self.quad_state(vc, thc, rho_col, F_col, t, Fdot_q=Fdot_q, vge=vge)
        if np.any(tensors.det(qf.F) <= 0.0):
            raise InvalidState("det F <= 0 at a quadrature node")

        if self.prescribed:
            vdot = np.zeros(0)
        else:
            r = galerkin.assemble_momentum_residual(qf, self.v_space, sc.material,
                                                    sc.rp, sc.loads)
            vdot = self.M_rho.solve(r, qf.rho)

        c_q = materials.heat_capacity(sc.material, qf.F, qf.theta)
        if np.min(c_q) <= sc.c_min:
            i = int(np.argmin(c_q))
            raise DegenerateHeatCapacity(
                f"heat capacity {np.min(c_q):.3e} <= c_min at quadrature node",
                sample=dict(F=qf.F[i].tolist(), theta=float(qf.theta[i])))
        r_th = galerkin.assemble_heat_residual(qf, self.z_space, sc.material,
                                               sc.rp, sc.loads)
        wF = materials.enthalpy_F(sc.material, qf.F, qf.theta)
        corr = np.einsum("qab,qab->q", wF, Fdot_q)
        r_th -= galerkin.weighted_contraction(self.z_space.Phi, corr,
                                              self.z_space.quad.weights)
        thdot = self.M_c.solve(r_th, c_q)
        return vdot, thdot, rhodot.reshape(-1), Fdot.reshape(-1, 2, 2)


# ---------------------------------------------------------------------------
# stepping


def _axpy(state_tuple, rates, dt):
    vc, thc, rho, F, t = state_tuple
    return (vc + dt * rates[0], thc + dt * rates[1], rho + dt * rates[2],
            F + dt * rates[3], t + dt)


def _unpack(state):
    return (state.v_coeffs, state.theta_coeffs, state.rho.values.reshape(-1),
            state.F.values.reshape(-1, 2, 2), state.t)


def _repack(state, tup):
    vc, thc, rho, F, t = tup
    grid = state.rho.grid
    return State(vc, thc,
                 transport.TransportField(grid, rho.reshape(grid.n), "density"),
                 transport.TransportField(grid, F.reshape(grid.n + (2, 2)),
                                          "deformation_gradient"), t)


def _validate(state, sc):
    J = tensors.det(state.F.values)
    if not np.all(np.isfinite(state.v_coeffs)) or not np.all(np.isfinite(J)):
        raise InvalidState("non-finite state")
    if np.min(state.rho.values) <= 0.0:
        raise InvalidState(f"rho <= 0 (min {np.min(state.rho.values):.3e})")
    if np.min(J) <= 0.25 * sc.rp.lam:
        raise InvalidState(f"det F {np.min(J):.3e} below lambda/4 guard")
    return state


def step(state, scenario, dt, disc=None):
    """One fixed step of the configured scheme."""
    disc = disc or scenario.discretization()
    y = _unpack(state)
    scheme = scenario.scheme
    if scheme == "euler":
        k1 = disc.rhs(*y)
        out = _axpy(y, k1, dt)
    elif scheme == "rk4":
        k1 = disc.rhs(*y)
        k2 = disc.rhs(*_axpy(y, k1, 0.5 * dt))
        k3 = disc.rhs(*_axpy(y, k2, 0.5 * dt))
        k4 = disc.rhs(*_axpy(y, k3, dt))
        rates = tuple((a + 2.0 * b + 2.0 * c + d) / 6.0
                      for a, b, c, d in zip(k1, k2, k3, k4))
        out = _axpy(y, rates, dt)
    elif scheme == "imex1":
        out = _step_imex1(disc, y, dt)
    else:
        raise ValueError(f"unknown scheme {scheme}")
    return _validate(_repack(state, out), scenario)


def _step_imex1(disc, y, dt):
    """Explicit Euler on convection/transport/coupling, backward Euler on the
    hyperviscosity and conduction terms via a lagged-Jacobian Newton loop."""
    sc = disc.sc
    vc, thc, rho, F, t = y
    k = disc.rhs(*y)
    rho_new = rho + dt * k[2]
    F_new = F + dt * k[3]
    thc_new = thc + dt * k[1]

    if disc.prescribed:
        return (vc, thc_new, rho_new, F_new, t + dt)

    # implicit correction on the velocity: g(x) = x - vc - dt*Minv r(x) = 0,
    # Newton with the stiff Jacobian frozen at the predictor
    sp = disc.v_space
    qf = disc.quad_state(vc, thc, rho, F, t)
    rp = sc.rp
    w = sp.quad.weights

    def stiff_residual(x):
        ge = np.einsum("i,iqabg->qabg", x, sp.GE)
        H = galerkin.hyper_stress(rp, ge)
        return -np.einsum("qabg,iqabg,q->i", H, sp.GE, w, optimize=True)

    def nonstiff_residual(x):
        full = disc.rhs(x, thc, rho, F, t)[0]
        return full

    # Jacobian of the stiff term at the current velocity
    ge0 = np.einsum("i,iqabg->qabg", vc, sp.GE)
    norm = np.sqrt(np.sum(ge0 ** 2, axis=(1, 2, 3)))
    safe = np.where(norm > 0.0, norm, 1.0)
    a1 = rp.nu * norm ** (rp.p - 2.0)
    a2 = rp.nu * (rp.p - 2.0) * np.where(norm > 0.0, norm ** (rp.p - 4.0), 0.0)
    P = np.einsum("iqabg,qabg->iq", sp.GE, ge0 / safe[:, None, None, None])
    J_stiff = -(np.einsum("q,iqabg,jqabg,q->ij", a1, sp.GE, sp.GE, w, optimize=True)
                + np.einsum("q,iq,jq,q->ij", a2 * safe * safe, P, P, w, optimize=True))
    wf = disc.M_rho._full_weight(qf.rho)
    M = (disc.M_rho.A * wf) @ disc.M_rho.A.T
    Jac = M - dt * J_stiff

    x = vc.copy()
    for _ in range(20):
        r_total = disc.rhs(x, thc, rho, F, t)[0]
        g = M @ (x - vc) - dt * M @ r_total
        if np.linalg.norm(g) <= 1e-12 * max(1.0, np.linalg.norm(M @ vc)):
            break
        x = x - np.linalg.solve(Jac, g)
    return (x, thc_new, rho_new, F_new, t + dt)


_SCHEME_ORDER = {"euler": 1, "rk4": 4, "imex1": 1}


@dataclass
class Trajectory:
    times: list
    ledgers: list
    state: State
    summary: dict
    scenario: Scenario


def initial_state(scenario, disc=None):
    disc = disc or scenario.discretization()
    sc = scenario
    col = disc.grid.nodes().reshape(-1, 2)
    F0 = _eval_field(sc.F0, col, (2, 2))
    if F0 is None:
        F0 = np.broadcast_to(np.eye(2), (col.shape[0], 2, 2)).copy()
    J0 = tensors.det(F0)
    if np.any(J0 <= 0.0):
        raise InvalidState("initial det F <= 0")
    rho0 = disc.rho_R_col / J0  # enforce rho0 = rho_R / det F0
    if sc.v0 is None or disc.prescribed:
        vc = np.zeros(0 if disc.prescribed else disc.v_space.n_basis)
    elif callable(sc.v0):
        vals = np.asarray(sc.v0(disc.v_space.quad.nodes), dtype=float)
        vc = galerkin.project(vals, disc.v_space)
    else:
        vc = np.asarray(sc.v0, dtype=float).copy()
    th_nodes = disc.z_space.quad.nodes
    th0 = _eval_field(sc.theta0, th_nodes)
    th0 = regularization.mollified_initial_temperature(th0, sc.rp.epsilon)
    thc = galerkin.project(th0, disc.z_space)
    grid = disc.grid
    return State(vc, thc,
                 transport.TransportField(grid, rho0.reshape(grid.n), "density"),
                 transport.TransportField(grid, F0.reshape(grid.n + (2, 2)),
                                          "deformation_gradient"), 0.0)


def run(scenario, t_end=None, callbacks=None):
    """March the scenario, collecting the energy ledger each accepted step."""
    disc = scenario.discretization()
    sc = scenario
    t_end = sc.t_end if t_end is None else t_end
    state = initial_state(sc, disc)
    order = _SCHEME_ORDER[sc.scheme]
    times, ledgers = [], []
    summary = dict(min_theta=np.inf, min_detF=np.inf, cutoff_activations=0,
                   rejected_steps=0, steps=0)

    def record(st):
        led = diagnostics.compute_ledger(st, sc, disc)
        times.append(st.t)
        ledgers.append(led)
        summary["min_theta"] = min(summary["min_theta"], led.extra["min_theta"])
        summary["min_detF"] = min(summary["min_detF"], led.extra["min_detF"])
        summary["cutoff_activations"] += led.extra["cutoff_active_nodes"]
        if callbacks:
            for cb in callbacks:
                cb(st, led)

    record(state)
    if t_end <= 0.0:
        summary["max_residual_mech"] = 0.0
        summary["max_residual_total"] = 0.0
        return Trajectory(times, ledgers, state, summary, sc)

    dt = sc.dt
    t0_wall = _time.monotonic()
    n_since_ledger = 0
    while state.t < t_end - 1e-14:
        if sc.max_wall_time is not None and _time.monotonic() - t0_wall > sc.max_wall_time:
            raise TimeoutError(f"wall-clock budget {sc.max_wall_time}s exhausted")
        h = min(dt, t_end - state.t)
        if sc.dt_controller == "adaptive":
            try:
                big = step(state, sc, h, disc)
                half = step(step(state, sc, 0.5 * h, disc), sc, 0.5 * h, disc)
                err = _state_diff(big, half)
                scale = sc.rtol * max(_state_norm(half), 1.0)
                if err > scale:
                    raise StepRejected("step-doubling error too large",
                                       suggested_dt=0.5 * h)
                state = half
                dt = h * float(np.clip(0.9 * (scale / max(err, 1e-300))
                                       ** (1.0 / (order + 1.0)), 0.5, 2.0))
            except StepRejected as rej:
                summary["rejected_steps"] += 1
                dt = max(rej.suggested_dt, sc.dt_min)
                if dt <= sc.dt_min:
                    raise
                continue
        else:
            state = step(state, sc, h, disc)
        summary["steps"] += 1
        n_since_ledger += 1
        if n_since_ledger >= sc.ledger_every or state.t >= t_end - 1e-14:
            record(state)
            n_since_ledger = 0

    diagnostics.attach_balance_residuals(ledgers, times)
    summary["max_residual_mech"] = max(abs(l.residual_mech) for l in ledgers)
    summary["max_residual_total"] = max(abs(l.residual_total) for l in ledgers)
    return Trajectory(times, ledgers, state, summary, sc)


def _state_norm(st):
    return max(float(np.max(np.abs(st.v_coeffs))) if st.v_coeffs.size else 0.0,
               float(np.max(np.abs(st.theta_coeffs))),
               float(np.max(np.abs(st.rho.values))),
               float(np.max(np.abs(st.F.values))))


def _state_diff(a, b):
    out = 0.0
    if a.v_coeffs.size:
        out = max(out, float(np.max(np.abs(a.v_coeffs - b.v_coeffs))))
    out = max(out, float(np.max(np.abs(a.theta_coeffs - b.theta_coeffs))))
    out = max(out, float(np.max(np.abs(a.rho.values - b.rho.values))))
    out = max(out, float(np.max(np.abs(a.F.values - b.F.values))))
    return out


def momentum_rhs(state, scenario):
    """Velocity-coefficient derivative (solves the M_rho system)."""
    disc = scenario.discretization()
    return disc.rhs(*_unpack(state))[0]


def heat_rhs(state, scenario):
    """Temperature-coefficient derivative (solves the c-weighted system)."""
    disc = scenario.discretization()
    return disc.rhs(*_unpack(state))[1]
