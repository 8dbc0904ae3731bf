"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects with dtype ``complex128``; kets
are one-dimensional arrays. The Hermitian eigensolver is a cyclic complex
Jacobi iteration, which is robust for the small (at most 64 x 64) matrices
that appear here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITICITY_TOL = 1e-9
PSD_TOL = 1e-9
TRACE_TOL = 1e-9
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)


class NotHermitianError(ValueError):
    pass


class NotDensityMatrixError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class HermitianEigenDecomposition:
    """Eigenvalues sorted descending and the matching orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a 2-D complex array, rejecting ragged or empty input."""
    try:
        m = np.asarray(a, dtype=complex)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"malformed matrix: {exc}") from None
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    return m


def kron(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices, left to right."""
    if not mats:
        raise ValueError("kron needs at least one factor")
    return reduce(np.kron, (as_matrix(m) for m in mats))


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def ket_to_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, np.conj(psi))


def is_hermitian(a, tol: float = HERMITICITY_TOL) -> bool:
    m = np.asarray(a)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - dagger(m))) <= tol)


def partial_trace(rho, dims, keep) -> np.ndarray:
    """Trace out every subsystem whose index is not in ``keep``.

    Parameters
    ----------
    rho : array_like
        Square matrix on the tensor product of ``dims``.
    dims : sequence of int
        Local dimensions, subsystem 0 first (most significant).
    keep : iterable of int
        Subsystems to retain; the result orders them ascending.
    """
    rho = as_matrix(rho)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise ValueError(f"dims {dims} do not match matrix shape {rho.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    tensor = rho.reshape(dims + dims)
    # Contract traced subsystems from the highest index down so axis numbers stay valid.
    for axis in sorted(set(range(n)) - set(keep), reverse=True):
        current = tensor.ndim // 2
        tensor = np.trace(tensor, axis1=axis, axis2=axis + current)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(d_keep, d_keep)


def _check_hermitian(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"matrix is not square: {a.shape}")
    dev = float(np.max(np.abs(a - dagger(a))))
    if dev > HERMITICITY_TOL:
        raise NotHermitianError(f"matrix is not Hermitian (max deviation {dev:.3e})")


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def hermitian_eig(a) -> HermitianEigenDecomposition:
    """Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi.

    Each rotation first removes the phase of the pivot element and then
    applies a real Givens rotation, so the 2 x 2 pivot block becomes
    diagonal. Sweeps stop once the off-diagonal Frobenius norm falls below
    ``JACOBI_TOL`` relative to the matrix norm.

    Returns
    -------
    HermitianEigenDecomposition
        ``values`` sorted descending (ties keep their original index order)
        and ``vectors`` with the eigenvectors as columns.
    """
    a = as_matrix(a)
    _check_hermitian(a)
    n = a.shape[0]
    work = 0.5 * (a + dagger(a))
    vecs = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(work)))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = _off_diagonal_norm(work)
        if off <= JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = np.conj(apq) / mag
                app = work[p, p].real
                aqq = work[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                if abs(theta) > 1e150:
                    t = 0.5 / abs(theta)
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * phase * col_q
                work[:, q] = s * col_p + c * phase * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * np.conj(phase) * row_q
                work[q, :] = s * row_p + c * np.conj(phase) * row_q
                work[p, q] = work[q, p] = 0.0
                work[p, p] = app - t * mag
                work[q, q] = aqq + t * mag
                v_p = vecs[:, p].copy()
                v_q = vecs[:, q].copy()
                vecs[:, p] = c * v_p - s * phase * v_q
                vecs[:, q] = s * v_p + c * phase * v_q
    else:
        off = _off_diagonal_norm(work)
        if off > JACOBI_TOL * scale:
            raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off={off:.3e})")
    values = np.real(np.diag(work)).copy()
    order = np.argsort(-values, kind="stable")
    return HermitianEigenDecomposition(values=values[order], vectors=vecs[:, order])


def eigvalsh(a) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, descending."""
    return hermitian_eig(a).values


def check_density_matrix(rho, tol: float = PSD_TOL) -> np.ndarray:
    """Validate ``rho`` as a density matrix and return it as an array."""
    try:
        rho = as_matrix(rho)
        _check_hermitian(rho)
    except ValueError as exc:
        raise NotDensityMatrixError(str(exc)) from None
    tr = np.trace(rho)
    if abs(tr - 1.0) > max(tol, TRACE_TOL):
        raise NotDensityMatrixError(f"trace is {tr.real:.12g}, expected 1")
    low = float(np.min(np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))))
    if low < -tol:
        raise NotDensityMatrixError(f"matrix is not positive semidefinite (min eigenvalue {low:.3e})")
    return rho


def shannon_entropy(probs) -> float:
    """Shannon entropy in bits; entries within ``PSD_TOL`` below zero count as zero."""
    p = np.asarray(probs, dtype=float).reshape(-1)
    if np.any(p < -PSD_TOL):
        raise ValueError(f"negative probability {p.min():.3e}")
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def binary_entropy(p: float) -> float:
    return shannon_entropy([p, 1.0 - p])


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy ``-Tr rho log2 rho`` in bits."""
    rho = check_density_matrix(rho)
    values = hermitian_eig(rho).values
    if values[-1] < -PSD_TOL:
        raise NotDensityMatrixError(f"negative eigenvalue {values[-1]:.3e}")
    return shannon_entropy(np.clip(values, 0.0, None))


def unnormalized_entropy(op) -> float:
    """``-Tr op log2 op`` for a positive operator of arbitrary trace.

    Used for block-diagonal classical-quantum operators whose blocks carry
    outcome probabilities as their traces.
    """
    values = hermitian_eig(op).values
    if values[-1] < -PSD_TOL:
        raise NotDensityMatrixError(f"negative eigenvalue {values[-1]:.3e}")
    return shannon_entropy(np.clip(values, 0.0, None))


def purify(rho) -> np.ndarray:
    """Purification ``sum_k sqrt(p_k) |r_k> (x) |e_k>`` with the ancilla appended last."""
    rho = check_density_matrix(rho)
    dec = hermitian_eig(rho)
    d = rho.shape[0]
    weights = np.sqrt(np.clip(dec.values, 0.0, None))
    psi = np.zeros(d * d, dtype=complex)
    for k in range(d):
        if weights[k] == 0.0:
            continue
        ancilla = np.zeros(d)
        ancilla[k] = 1.0
        psi += weights[k] * np.kron(dec.vectors[:, k], ancilla)
    return psi


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix ``G G^dagger / Tr``."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Gaussian matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
