"""Independent reference computations used by the test-suite.

Nothing here shares code with the production transport / Galerkin / material
paths: the only internal dependency is the `tensors` kernel module.  Oracles
favour robustness over speed (tight-tolerance adaptive ODE integration, dense
quadrature, brute-force permutation sums).
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import tensors
from .errors import InsufficientDecay


@dataclass
class OracleReport:
    computed: object
    reference: object
    abs_err: float
    rel_err: float
    tol: float
    passed: bool
    observed_order: float | None = None


def permutation_det(M):
    """Brute-force determinant as a signed permutation sum."""
    from itertools import permutations

    M = np.asarray(M)
    d = M.shape[-1]
    total = np.zeros(M.shape[:-2])
    for perm in permutations(range(d)):
        sign = 1.0
        p = list(perm)
        for i in range(d):
            for j in range(i + 1, d):
                if p[i] > p[j]:
                    sign = -sign
        term = np.ones(M.shape[:-2])
        for i in range(d):
            term = term * M[..., i, perm[i]]
        total = total + sign * term
    return total


# ---------------------------------------------------------------------------
# characteristic-flow transport references


def _bilinear_rhs(kind):
    if kind == "deformation_gradient":
        return lambda L, z: np.einsum("...ij,...jk->...ik", L, z)
    if kind == "density":
        return lambda L, z: -z * tensors.trace(L)
    if kind == "inverse_density":
        return lambda L, z: z * tensors.trace(L)
    if kind == "inverse_det":
        return lambda L, z: -z * tensors.trace(L)
    if kind == "inverse_gradient":
        return lambda L, z: -np.einsum("...ij,...jk->...ik", z, L)
    if kind == "return_map":
        return lambda L, z: np.zeros_like(z)
    raise ValueError(f"unknown transport kind: {kind}")


def characteristic_solution(kind, velocity, z0, t, points, rtol=1e-12, atol=1e-10):
    """Pointwise transport solution along backward characteristics.

    kind: one of deformation_gradient/density/inverse_density/inverse_det/
    return_map.  `velocity` must expose v(x, t) -> (..., d) and
    velocity.grad(x, t) -> (..., d, d) in closed form.  `z0` is a callable
    x -> initial values (or a constant array broadcast to all points).
    Returns z(points, t), solving dz/ds = b(grad v, z) along each
    characteristic with an adaptive high-order integrator.
    """
    points = np.asarray(points, dtype=float)
    d = points.shape[-1]
    flat = points.reshape(-1, d)
    n = flat.shape[0]
    b = _bilinear_rhs(kind)

    # pass 1: trace each node backwards to its foot at time 0
    def back_rhs(s, y):
        x = y.reshape(n, d)
        return -velocity(x, t - s).reshape(-1)

    if t == 0:
        feet = flat
    else:
        sol = solve_ivp(back_rhs, (0.0, t), flat.reshape(-1), method="DOP853",
                        rtol=rtol, atol=atol, dense_output=False)
        feet = sol.y[:, -1].reshape(n, d)

    z_init = z0(feet) if callable(z0) else np.broadcast_to(z0, (n,) + np.shape(z0)).astype(float)
    zshape = np.shape(z_init)[1:]
    zsize = int(np.prod(zshape)) if zshape else 1

    if t == 0:
        return z_init.reshape(points.shape[:-1] + zshape)

    # pass 2: advance (position, value) forward along the characteristic
    def fwd_rhs(s, y):
        x = y[: n * d].reshape(n, d)
        z = y[n * d:].reshape((n,) + zshape)
        L = velocity.grad(x, s)
        return np.concatenate([velocity(x, s).reshape(-1), b(L, z).reshape(-1)])

    y0 = np.concatenate([feet.reshape(-1), np.asarray(z_init, dtype=float).reshape(-1)])
    sol = solve_ivp(fwd_rhs, (0.0, t), y0, method="DOP853", rtol=rtol, atol=atol)
    z = sol.y[n * d:, -1].reshape((n,) + zshape)
    del zsize
    return z.reshape(points.shape[:-1] + zshape)


# ---------------------------------------------------------------------------
# derivative certification


def fd_gradient_check(f, x, analytic_grad, h_schedule=None, tol_order=1.9):
    """Certify an analytic gradient against central differences.

    Compares analytic_grad (same shape as x) with central differences of the
    scalar function f over a decreasing h schedule and fits the observed
    convergence order.  Passes when the observed order is >= tol_order, or
    when every error sits at the round-off floor (derivative exact).
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(analytic_grad, dtype=float)
    if h_schedule is None:
        h_schedule = [1e-3, 5e-4, 2.5e-4, 1.25e-4]
    scale = max(np.max(np.abs(g)), 1.0)
    errs = []
    for h in h_schedule:
        fd = np.empty_like(x).reshape(-1)
        xf = x.reshape(-1)
        for i in range(xf.size):
            xp = xf.copy()
            xm = xf.copy()
            xp[i] += h
            xm[i] -= h
            fd[i] = (f(xp.reshape(x.shape)) - f(xm.reshape(x.shape))) / (2.0 * h)
        errs.append(np.max(np.abs(fd - g.reshape(-1))))
    errs = np.asarray(errs)
    hs = np.asarray(h_schedule, dtype=float)
    floor = 5e-10 * scale
    live = errs > floor
    if live.sum() < 2:
        # agreement at round-off level everywhere: exact derivative
        return OracleReport(computed=g, reference=None, abs_err=float(errs[-1]),
                            rel_err=float(errs[-1] / scale), tol=floor, passed=True,
                            observed_order=np.inf)
    slope = np.polyfit(np.log(hs[live]), np.log(errs[live]), 1)[0]
    passed = slope >= tol_order or errs[-1] <= floor
    return OracleReport(computed=g, reference=None, abs_err=float(errs[-1]),
                        rel_err=float(errs[-1] / scale), tol=floor, passed=bool(passed),
                        observed_order=float(slope))


# ---------------------------------------------------------------------------
# integrator order


def richardson_order(step_fn, state, dt_schedule, t_end=None, norm=None):
    """Observed convergence order of a one-step integrator.

    step_fn(state, dt) -> state advances one step of size dt.  Each dt in the
    schedule is marched to the common horizon t_end (default: the largest dt)
    and compared against a reference computed at half the smallest dt; the
    least-squares slope of log error vs log dt is returned.  Raises
    InsufficientDecay when the errors plateau at round-off.
    """
    dts = sorted(float(dt) for dt in dt_schedule)[::-1]
    if t_end is None:
        t_end = dts[0]
    if norm is None:
        norm = lambda u: float(np.max(np.abs(np.asarray(u, dtype=float))))

    def integrate(dt):
        n = int(round(t_end / dt))
        u = state
        for _ in range(n):
            u = step_fn(u, t_end / n)
        return np.asarray(u, dtype=float)

    # the reference must be well below the finest schedule error; /16 keeps
    # its own bias negligible even for a first-order scheme
    ref = integrate(dts[-1] / 16.0)
    scale = max(norm(ref), 1.0)
    errs = np.array([norm(integrate(dt) - ref) for dt in dts])
    if np.all(errs <= 1e-13 * scale):
        raise InsufficientDecay("errors at round-off across the whole dt schedule")
    live = errs > 1e-13 * scale
    if live.sum() < 2:
        raise InsufficientDecay("fewer than two error samples above round-off")
    slope = np.polyfit(np.log(np.asarray(dts)[live]), np.log(errs[live]), 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# dense reference quadrature


def reference_quadrature_2d(f, lengths, n=192, periodic=True):
    """Brute-force integral of f(x) over the rectangle [0,Lx]x[0,Ly].

    Trapezoidal on a dense periodic grid (spectrally exact for smooth periodic
    integrands) or tensor Gauss-Legendre otherwise.  f maps (..., 2) -> (...).
    """
    Lx, Ly = lengths
    if periodic:
        x = np.arange(n) * (Lx / n)
        y = np.arange(n) * (Ly / n)
        X, Y = np.meshgrid(x, y, indexing="ij")
        pts = np.stack([X, Y], axis=-1)
        return float(np.sum(f(pts)) * (Lx / n) * (Ly / n))
    xg, wx = np.polynomial.legendre.leggauss(n)
    x = 0.5 * Lx * (xg + 1.0)
    y = 0.5 * Ly * (xg + 1.0)
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = np.outer(wx, wx) * (0.25 * Lx * Ly)
    pts = np.stack([X, Y], axis=-1)
    return float(np.sum(f(pts) * W))
