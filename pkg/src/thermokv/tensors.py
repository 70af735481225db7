"""Dense small-matrix kernels in d in {2, 3}.

All operations broadcast over leading axes: an argument of shape (..., d, d)
yields a result with the same leading shape.  The matrix norm used throughout
is the Frobenius norm.
"""

import numpy as np


def det(M):
    """Determinant by explicit cofactor expansion (d = 2 or 3)."""
    M = np.asarray(M)
    d = M.shape[-1]
    if d == 2:
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    if d == 3:
        return (
            M[..., 0, 0] * (M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
            - M[..., 0, 1] * (M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0])
            + M[..., 0, 2] * (M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0])
        )
    raise ValueError(f"only d in {{2, 3}} supported, got d={d}")


def cof(M):
    """Cofactor matrix: M @ cof(M).T == det(M) * I, and d(det)/dM = cof(M)."""
    M = np.asarray(M)
    d = M.shape[-1]
    C = np.empty_like(M)
    if d == 2:
        C[..., 0, 0] = M[..., 1, 1]
        C[..., 0, 1] = -M[..., 1, 0]
        C[..., 1, 0] = -M[..., 0, 1]
        C[..., 1, 1] = M[..., 0, 0]
        return C
    if d == 3:
        for i in range(3):
            for j in range(3):
                r = [a for a in range(3) if a != i]
                c = [a for a in range(3) if a != j]
                minor = (
                    M[..., r[0], c[0]] * M[..., r[1], c[1]]
                    - M[..., r[0], c[1]] * M[..., r[1], c[0]]
                )
                C[..., i, j] = (-1.0) ** (i + j) * minor
        return C
    raise ValueError(f"only d in {{2, 3}} supported, got d={d}")


def inv(M):
    """Inverse via cof(M).T / det(M)."""
    M = np.asarray(M)
    J = det(M)
    return transpose(cof(M)) / J[..., None, None]


def transpose(M):
    return np.swapaxes(np.asarray(M), -1, -2)


def trace(M):
    M = np.asarray(M)
    return np.trace(M, axis1=-2, axis2=-1) if M.ndim == 2 else np.einsum("...ii->...", M)


def frobenius(M):
    """Frobenius norm |M| = (sum M_ij^2)^(1/2), broadcast over leading axes."""
    M = np.asarray(M)
    return np.sqrt(np.sum(M * M, axis=(-2, -1)))


def sym_grad(grad_v):
    """Small strain rate e(v) = (grad v + (grad v)^T)/2."""
    g = np.asarray(grad_v)
    return 0.5 * (g + transpose(g))


def identity_like(M):
    M = np.asarray(M)
    d = M.shape[-1]
    return np.broadcast_to(np.eye(d), M.shape).copy()


def ddot(A, B):
    """Double contraction A : B = sum_ij A_ij B_ij, broadcast."""
    return np.sum(np.asarray(A) * np.asarray(B), axis=(-2, -1))


def tdot(A, B):
    """Triple contraction of two third-order tensors (..., d, d, d)."""
    return np.sum(np.asarray(A) * np.asarray(B), axis=(-3, -2, -1))


def rotation_2d(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def random_rotation(seed, d=2):
    """Deterministic random rotation: Q^T Q = I, det Q = 1."""
    rng = np.random.default_rng(seed)
    if d == 2:
        return rotation_2d(rng.uniform(0.0, 2.0 * np.pi))
    if d == 3:
        A = rng.standard_normal((3, 3))
        Q, R = np.linalg.qr(A)
        # fix the sign convention so Q is uniform on SO(3)
        Q = Q * np.sign(np.diag(R))
        if np.linalg.det(Q) < 0:
            Q[:, [0, 1]] = Q[:, [1, 0]]
        return Q
    raise ValueError(f"only d in {{2, 3}} supported, got d={d}")


# Pade(6) numerator coefficients for expm; c[j+1] = c[j]*(6-j)/((12-j)(j+1))
_PADE6 = [1.0]
for _j in range(6):
    _PADE6.append(_PADE6[-1] * (6 - _j) / ((12 - _j) * (_j + 1)))


def expm(A, max_squarings=32):
    """Matrix exponential by scaling-and-squaring with a Pade(6) approximant.

    Broadcasts over leading axes.  Needed by the transport oracles (pointwise
    solution exp(tL) for uniform velocity gradients).
    """
    A = np.asarray(A, dtype=float)
    nrm = np.max(frobenius(A)) if A.size else 0.0
    s = 0
    if nrm > 0.5:
        s = min(int(np.ceil(np.log2(nrm / 0.5))), max_squarings)
    B = A / (2.0 ** s)
    d = A.shape[-1]
    eye = np.broadcast_to(np.eye(d), B.shape)
    # split Pade(6)/Pade(6): N(B) = U + V, D(B) = -U + V with U odd, V even
    B2 = B @ B
    V = _PADE6[0] * eye + _PADE6[2] * B2 + _PADE6[4] * (B2 @ B2) + _PADE6[6] * (B2 @ B2 @ B2)
    U = B @ (_PADE6[1] * eye + _PADE6[3] * B2 + _PADE6[5] * (B2 @ B2))
    N = V + U
    D = V - U
    E = np.linalg.solve(D, N)
    for _ in range(s):
        E = E @ E
    return E
