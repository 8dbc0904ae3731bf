"""Correlation matrices and the eigenvalue bound on the maximal MABK violation.

For an n-qubit state the correlation matrix ``T`` collects the full Pauli
correlators ``Tr[rho sigma_{m1} (x) ... (x) sigma_{mn}]`` (m in {X, Y, Z}),
with the first ``ceil(n/2)`` parties indexing rows and the remaining parties
indexing columns, both big-endian base 3. With ``t0 >= t1`` the two largest
eigenvalues of ``T T^T``, no rank-one projective measurement exceeds
``2 sqrt(t0 + t1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.optimize import least_squares

from .linalg import as_matrix, hermitian_eig
from .mabk import bloch, make_config, pauli_tensor

VARIANTS = ("standard", "prime", "double_prime")
# Party order (0-based) whose standard matrix equals each variant for three qubits.
_VARIANT_ORDER = {"standard": (0, 1, 2), "prime": (0, 2, 1), "double_prime": (1, 2, 0)}
WITNESS_TOL = 1e-6
DEGENERACY_TOL = 1e-9


def permute_parties(rho, n: int, order) -> np.ndarray:
    """State whose k-th qubit is qubit ``order[k]`` of ``rho``."""
    rho = as_matrix(rho)
    order = list(order)
    t = rho.reshape((2,) * (2 * n))
    t = np.transpose(t, order + [n + k for k in order])
    return t.reshape(2**n, 2**n)


@dataclass(frozen=True)
class CorrelationMatrix:
    variant: str
    matrix: np.ndarray
    n: int


def _variant_order(n: int, variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant != "standard" and n != 3:
        raise ValueError(f"variant {variant!r} is only defined for three parties")
    return _VARIANT_ORDER[variant] if n == 3 else tuple(range(n))


def correlation_matrix(rho, n: int, variant: str = "standard") -> CorrelationMatrix:
    """Correlation matrix of shape ``(3^ceil(n/2), 3^floor(n/2))``.

    ``prime`` uses parties (1, 3) for rows and party 2 for columns;
    ``double_prime`` uses (2, 3) for rows and party 1 for columns.
    """
    order = _variant_order(n, variant)
    if order != tuple(range(n)):
        rho = permute_parties(rho, n, order)
    full = pauli_tensor(rho, n)[(slice(1, 4),) * n]
    rows = 3 ** ((n + 1) // 2)
    return CorrelationMatrix(variant, full.reshape(rows, -1), n)


@dataclass(frozen=True)
class ViolationBound:
    bound: float
    t0: float
    t1: float
    tvec0: np.ndarray
    tvec1: np.ndarray
    variant: str
    n: int
    matrix: np.ndarray = field(repr=False)
    # Eigenpairs of T T^T used to allow rotations inside degenerate subspaces.
    spectrum: np.ndarray = field(repr=False, default=None)
    eigvecs: np.ndarray = field(repr=False, default=None)


def _gram_eigensystem(t: np.ndarray):
    """Eigenvalues (descending) and unit eigenvectors of ``T T^T``.

    The spectrum comes from whichever Gram matrix is smaller; row-space
    eigenvectors for nonzero eigenvalues are recovered as ``T w / sqrt(t)``.
    """
    rows, cols = t.shape
    if cols < rows:
        dec = hermitian_eig(t.T @ t)
        values = np.clip(dec.values.real, 0.0, None)
        if values[min(1, len(values) - 1)] > 1e-12:
            vecs = np.real(t @ dec.vectors.real) / np.sqrt(np.where(values > 0, values, 1.0))
            return values, vecs
    dec = hermitian_eig(t @ t.T)
    return np.clip(dec.values.real, 0.0, None), dec.vectors.real


def theorem2_bound(rho, n: int, variant: str = "standard") -> ViolationBound:
    """Upper bound ``2 sqrt(t0 + t1)`` on the maximal MABK value for rank-one measurements."""
    cm = correlation_matrix(rho, n, variant)
    values, vecs = _gram_eigensystem(cm.matrix)
    t0 = float(values[0])
    t1 = float(values[1]) if len(values) > 1 else 0.0
    tv1 = vecs[:, 1] if vecs.shape[1] > 1 else np.zeros(vecs.shape[0])
    return ViolationBound(
        bound=2.0 * math.sqrt(t0 + t1),
        t0=t0,
        t1=t1,
        tvec0=vecs[:, 0],
        tvec1=tv1,
        variant=variant,
        n=n,
        matrix=cm.matrix,
        spectrum=values,
        eigvecs=vecs,
    )


def min_theorem2_bound(rho, n: int) -> ViolationBound:
    """The smallest bound over every correlation-matrix variant available for ``n``."""
    variants = VARIANTS if n == 3 else ("standard",)
    bounds = [theorem2_bound(rho, n, v) for v in variants]
    return min(bounds, key=lambda b: b.bound)


def corollary1_bound(eigs) -> float:
    """``4 sqrt(sum_jk (rho_0jk - rho_1jk)^2)`` for ordered three-qubit eigenvalues."""
    e = np.asarray(eigs, dtype=float).reshape(8)
    if np.any(e < -1e-12) or abs(e.sum() - 1.0) > 1e-9:
        raise ValueError("eigenvalues must form a probability vector")
    if np.any(e[:4] < e[4:] - 1e-12):
        raise ValueError("expected rho_0jk >= rho_1jk for every jk")
    return 4.0 * math.sqrt(float(np.sum((e[:4] - e[4:]) ** 2)))


# --- structured vectors -------------------------------------------------


def _tensor(vectors) -> np.ndarray:
    out = np.ones(1)
    for v in vectors:
        out = np.kron(out, v)
    return out


def _split(n: int) -> tuple[int, int]:
    rows = (n + 1) // 2
    return rows, n - rows


def normalization(n: int) -> float:
    """Prefactor ``1/N_n`` of the closed-form MABK expansion."""
    return 2.0 ** -((n - 3) // 2) if n % 2 else 2.0 ** -((n - 2) // 2)


def appendix_d_vectors(n: int, directions) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Structured vectors (v0, v1, u0, u1) built from the parties' Bloch directions.

    ``directions[i][x]`` is the unit vector of party i, setting x. The row
    parties (first ``ceil(n/2)``) form v0 from even-weight strings and v1
    from odd-weight strings; the column parties form u0 and u1. With these,
    ``<M_n> = normalization(n) * (v0 . T u0 + v1 . T u1)``.
    """
    if n < 2 or len(directions) != n:
        raise ValueError(f"need Bloch directions for {n} parties")
    dirs = [(np.asarray(d0, float), np.asarray(d1, float)) for d0, d1 in directions]
    h, k = _split(n)
    row_dim, col_dim = 3**h, 3**k
    v0, v1 = np.zeros(row_dim), np.zeros(row_dim)
    u0, u1 = np.zeros(col_dim), np.zeros(col_dim)

    if n % 2:
        offset = (n - 1) // 4
    elif (n // 2) % 2 == 0:
        offset = n // 4
    else:
        offset = (n - 2) // 4
    for x in product((0, 1), repeat=h):
        w = sum(x)
        term = (-1) ** ((offset - w // 2) % 2) * _tensor(dirs[i][xi] for i, xi in enumerate(x))
        if w % 2 == 0:
            v0 += term
        else:
            v1 += term

    for y in product((0, 1), repeat=k):
        w = sum(y)
        vec = _tensor(dirs[h + i][yi] for i, yi in enumerate(y))
        if n % 2:
            target = ((n - 1) // 2) % 2
            if w % 2 == target:
                u0 += (-1) ** ((w // 2) % 2) * vec
            else:
                u1 += (-1) ** (((w + 1) // 2) % 2) * vec
        elif (n // 2) % 2 == 0:
            u0 += (-1) ** ((w // 2 + w % 2) % 2) * vec
            u1 += (-1) ** ((w // 2 + 1) % 2) * vec
        else:
            u0 += (-1) ** ((w // 2) % 2) * vec
            u1 += (-1) ** (((w + 1) // 2) % 2) * vec
    return v0, v1, u0, u1


def tightness_scales(n: int) -> tuple[float, float]:
    """Norm constants (for v, for u) in the tightness conditions."""
    if n % 2:
        return 2.0 ** ((n + 1) / 4), 2.0 ** ((n - 3) / 4)
    return 2.0 ** (n / 4), 2.0 ** (n / 4)


def structured_vector_residuals(n: int, directions) -> dict:
    """Deviations of the structured vectors from their norm and orthogonality identities.

    Keys: ``"norm_v"`` for ``|v0|^2 + |v1|^2 - c_v^2``, ``"norm_u0"`` and
    ``"norm_u1"`` for ``|u_k|^2 - c_u^2`` and ``"v0_dot_v1"``, with
    ``(c_v, c_u) = tightness_scales(n)``. The identities are exact for
    three and four parties and fail for generic settings at other sizes.
    """
    v0, v1, u0, u1 = appendix_d_vectors(n, directions)
    cv, cu = tightness_scales(n)
    return {
        "norm_v": float(v0 @ v0 + v1 @ v1 - cv * cv),
        "norm_u0": float(u0 @ u0 - cu * cu),
        "norm_u1": float(u1 @ u1 - cu * cu),
        "v0_dot_v1": float(v0 @ v1),
    }


def expectation_from_matrix(matrix: np.ndarray, n: int, directions) -> float:
    v0, v1, u0, u1 = appendix_d_vectors(n, directions)
    return normalization(n) * float(v0 @ matrix @ u0 + v1 @ matrix @ u1)


# --- tightness witness search -------------------------------------------


def _unit(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def _directions_from_params(params: np.ndarray, n: int):
    return [(_unit(params[4 * i], params[4 * i + 1]), _unit(params[4 * i + 2], params[4 * i + 3])) for i in range(n)]


def _eigen_blocks(bound: ViolationBound):
    """Orthonormal bases of the eigenspaces holding t0 and t1 (shared when degenerate)."""
    values, vecs = bound.spectrum, bound.eigvecs
    scale = max(1.0, bound.t0)
    in0 = np.abs(values - bound.t0) <= DEGENERACY_TOL * scale
    in1 = np.abs(values - bound.t1) <= DEGENERACY_TOL * scale
    return vecs[:, in0], vecs[:, in1], bool(np.any(in0 & in1))


def _target_vectors(q0, q1, basis0, basis1, shared):
    t0 = basis0 @ q0
    t0 = t0 / max(np.linalg.norm(t0), 1e-15)
    t1 = basis1 @ q1
    if shared:
        t1 = t1 - (t1 @ t0) * t0
    t1 = t1 / max(np.linalg.norm(t1), 1e-15)
    return t0, t1


def tightness_witness(bound: ViolationBound, n: int | None = None, search_budget: int = 32, seed: int = 0):
    """Search for rank-one settings that attain ``bound.bound``.

    The unknowns are the parties' Bloch directions (two angles each) and,
    inside degenerate eigenspaces, the choice of eigenvectors. The residual
    compares the structured vectors with their required values
    ``v_k = c_v sqrt(t_k/(t0+t1)) t_k_hat`` and
    ``u_k = c_u T^T t_k_hat / sqrt(t_k)``, trying both pairings of (v0, v1)
    with (t0, t1). Returns a measurement config in the original party
    order, or None if no restart reaches a residual of ``WITNESS_TOL``.
    """
    n = bound.n if n is None else n
    rng = np.random.default_rng(seed)
    matrix = bound.matrix
    order = _variant_order(n, bound.variant)

    if bound.bound <= 1e-12:
        dirs = [(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))] * n
        return _to_config(dirs, order)

    total = bound.t0 + bound.t1
    cv, cu = tightness_scales(n)
    basis0, basis1, shared = _eigen_blocks(bound)
    d0, d1 = basis0.shape[1], basis1.shape[1]
    n_angles = 4 * n

    def residual(params, swap):
        dirs = _directions_from_params(params[:n_angles], n)
        q0 = params[n_angles : n_angles + d0]
        q1 = params[n_angles + d0 :]
        that0, that1 = _target_vectors(q0, q1, basis0, basis1, shared)
        v0, v1, u0, u1 = appendix_d_vectors(n, dirs)
        if swap:
            v0, v1, u0, u1 = v1, v0, u1, u0
        parts = []
        for v, u, tk, that in ((v0, u0, bound.t0, that0), (v1, u1, bound.t1, that1)):
            parts.append(v - cv * math.sqrt(tk / total) * that)
            if tk > 1e-12:
                parts.append(u - cu * (matrix.T @ that) / math.sqrt(tk))
        return np.concatenate(parts)

    best = None
    for restart in range(search_budget):
        x0 = np.concatenate([rng.uniform(0, 2 * math.pi, n_angles), rng.normal(size=d0 + d1)])
        swap = bool(restart % 2)
        sol = least_squares(residual, x0, args=(swap,), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000)
        err = float(np.max(np.abs(sol.fun)))
        if best is None or err < best[0]:
            best = (err, sol.x)
        if err <= WITNESS_TOL:
            dirs = _directions_from_params(sol.x[:n_angles], n)
            value = expectation_from_matrix(matrix, n, dirs)
            if abs(value - bound.bound) <= WITNESS_TOL:
                return _to_config(dirs, order)
    return None


def _to_config(dirs, order):
    """Undo the party permutation of a variant: party order[k] gets dirs[k]."""
    n = len(dirs)
    placed = [None] * n
    for k, party in enumerate(order):
        placed[party] = dirs[k]
    return make_config((bloch(d0), bloch(d1)) for d0, d1 in placed)
