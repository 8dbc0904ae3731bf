"""Numerical checks of the reduction from a general state to the almost-GHZ family.

The steps are: splitting two binary measurements into qubit blocks, twirling
the state with even numbers of Z flips, fixing local z-rotation gauges, and
the real-part sign flip that leaves statistics and entropies unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .entropy import cond_entropy_pair, cond_entropy_single, outcome_vector
from .ghz import from_ghz_basis, to_ghz_basis
from .linalg import (
    I2,
    Z,
    check_density_matrix,
    kron,
    purify,
    unnormalized_entropy,
    von_neumann_entropy,
)
from .mabk import observable_matrix, in_plane

BLOCK_TOL = 1e-10
SPLIT_TOL = 1e-9
PROJECTOR_TOL = 1e-9


class SingularSystemError(ValueError):
    """The chosen u-blocks give a singular sign matrix."""


class NotBlockedError(ValueError):
    """State has coherences between different u-blocks of the GHZ basis."""


# --- two-projector block decomposition ----------------------------------------


@dataclass(frozen=True)
class Block:
    """One block: orthonormal basis columns and the four projectors restricted to it.

    ``artificial`` marks a 1 x 1 block padded with an extra dimension; its
    second basis vector lives outside the original space and is stored as zeros.
    """

    basis: np.ndarray
    restrictions: tuple  # (P0, P1, Q0, Q1), each 2 x 2
    artificial: bool


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple
    original_dim: int

    @property
    def embedding_dim(self) -> int:
        return 2 * len(self.blocks)

    @property
    def n_artificial(self) -> int:
        return sum(b.artificial for b in self.blocks)


def _check_projector_pair(a: np.ndarray, b: np.ndarray, name: str) -> None:
    dim = a.shape[0]
    for m in (a, b):
        if np.max(np.abs(m - m.conj().T)) > PROJECTOR_TOL or np.max(np.abs(m @ m - m)) > PROJECTOR_TOL:
            raise ValueError(f"{name} contains a matrix that is not a Hermitian projector")
    if np.max(np.abs(a + b - np.eye(dim))) > PROJECTOR_TOL:
        raise ValueError(f"{name} projectors do not sum to the identity")


def _range_basis(p: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(p)
    return vecs[:, vals > 0.5]


def _embedded_block(v: np.ndarray, in_p0: bool, in_q0: bool) -> Block:
    """Pad a common eigenvector into a 2 x 2 block with one artificial direction.

    ``v`` becomes the first basis vector and the artificial one the second;
    each measurement assigns ``v`` to the outcome it belongs to and the
    artificial direction to the other outcome.
    """
    e0 = np.diag([1.0, 0.0]).astype(complex)
    e1 = np.diag([0.0, 1.0]).astype(complex)
    p0, p1 = (e0, e1) if in_p0 else (e1, e0)
    q0, q1 = (e0, e1) if in_q0 else (e1, e0)
    basis = np.column_stack([v, np.zeros_like(v)])
    return Block(basis, (p0, p1, q0, q1), True)


def _restrict(basis: np.ndarray, ops) -> tuple:
    return tuple(basis.conj().T @ op @ basis for op in ops)


def block_diagonalize(p0, p1, q0, q1) -> BlockDecomposition:
    """Split the space into blocks on which both binary measurements are rank one.

    Diagonalises ``P0 Q0 P0`` on the range of P0. Each eigenvector v with
    eigenvalue strictly between 0 and 1 pairs with the normalised ``P1 Q0 v``
    to form a 2 x 2 block. Eigenvalues within ``SPLIT_TOL`` of 0 or 1 give
    1 x 1 blocks, as do the leftover directions in the range of P1; those
    are padded with an artificial dimension.
    """
    p0, p1, q0, q1 = (np.asarray(m, dtype=complex) for m in (p0, p1, q0, q1))
    _check_projector_pair(p0, p1, "P")
    _check_projector_pair(q0, q1, "Q")
    dim = p0.shape[0]
    ops = (p0, p1, q0, q1)
    blocks: list[Block] = []
    partners = []

    v0 = _range_basis(p0)
    if v0.shape[1]:
        vals, vecs = np.linalg.eigh(v0.conj().T @ q0 @ v0)
        for c, a in zip(vals, vecs.T):
            v = v0 @ a
            if SPLIT_TOL < c < 1.0 - SPLIT_TOL:
                w = p1 @ q0 @ v
                w /= np.linalg.norm(w)
                basis = np.column_stack([v, w])
                blocks.append(Block(basis, _restrict(basis, ops), False))
                partners.append(w)
            else:
                blocks.append(_embedded_block(v, True, c >= 0.5))

    v1 = _range_basis(p1)
    if v1.shape[1]:
        if partners:
            w = np.column_stack(partners)
            # the orthogonal complement of the paired directions inside range(P1)
            rest = v1 - w @ (w.conj().T @ v1)
            u, sv, _ = np.linalg.svd(rest, full_matrices=False)
            v1 = u[:, sv > 0.5]
        if v1.shape[1]:
            vals, vecs = np.linalg.eigh(v1.conj().T @ q0 @ v1)
            for c, a in zip(vals, vecs.T):
                blocks.append(_embedded_block(v1 @ a, False, c >= 0.5))

    return BlockDecomposition(tuple(blocks), dim)


def reconstruct(decomp: BlockDecomposition, op_index: int) -> np.ndarray:
    """Rebuild one of the four projectors on the original space from the blocks."""
    out = np.zeros((decomp.original_dim, decomp.original_dim), dtype=complex)
    for block in decomp.blocks:
        r = block.restrictions[op_index]
        if block.artificial:
            v = block.basis[:, 0]
            out += r[0, 0] * np.outer(v, v.conj())
        else:
            out += block.basis @ r @ block.basis.conj().T
    return out


# --- twirl and GHZ block structure -------------------------------------------


def _z_string(x) -> np.ndarray:
    return kron(*(Z if b else I2 for b in x))


def symmetrize(rho, n: int) -> np.ndarray:
    """Average of ``Z^x rho Z^x`` over all even-weight bit strings x."""
    rho = check_density_matrix(rho)
    if rho.shape != (2**n, 2**n):
        raise ValueError(f"state of shape {rho.shape} does not act on {n} qubits")
    # Z^x is diagonal, so conjugation multiplies entry (i, j) by z_i z_j
    out = np.zeros_like(rho)
    count = 0
    for x in product((0, 1), repeat=n):
        if sum(x) % 2:
            continue
        diag = np.diag(_z_string(x)).real
        out += rho * np.outer(diag, diag)
        count += 1
    return out / count


def _block_mask(n: int) -> np.ndarray:
    half = 2 ** (n - 1)
    mask = np.zeros((2 * half, 2 * half), dtype=bool)
    for u in range(half):
        mask[2 * u : 2 * u + 2, 2 * u : 2 * u + 2] = True
    return mask


def ghz_block_check(rho, n: int, tol: float = BLOCK_TOL) -> tuple[bool, float]:
    """Whether every GHZ-basis element between different u-blocks is at most ``tol``.

    Returns the verdict and the largest off-block magnitude.
    """
    m = to_ghz_basis(rho, n)
    worst = float(np.max(np.abs(m[~_block_mask(n)]), initial=0.0))
    return worst <= tol, worst


def _blocks_of(rho, n: int) -> np.ndarray:
    ok, worst = ghz_block_check(rho, n)
    if not ok:
        raise NotBlockedError(f"off-block GHZ coherence {worst:.3g}")
    return to_ghz_basis(rho, n)


def block_parameters(rho, n: int) -> dict:
    """``{u: (lambda_0u, lambda_1u, r_u, s_u)}`` for a GHZ-blocked state."""
    m = _blocks_of(rho, n)
    return {
        u: (m[2 * u, 2 * u].real, m[2 * u + 1, 2 * u + 1].real, m[2 * u, 2 * u + 1].real, m[2 * u, 2 * u + 1].imag)
        for u in range(2 ** (n - 1))
    }


# --- local z rotations ---------------------------------------------------------


def z_rotation(theta: float) -> np.ndarray:
    """``cos(theta/2) id + i sin(theta/2) Z``."""
    return math.cos(theta / 2) * I2 + 1j * math.sin(theta / 2) * Z


def apply_local_z_rotations(rho, thetas) -> np.ndarray:
    """``R(theta_1) (x) ... (x) R(theta_n)`` applied to ``rho`` by conjugation."""
    rho = np.asarray(rho, dtype=complex)
    thetas = list(thetas)
    if rho.shape != (2 ** len(thetas), 2 ** len(thetas)):
        raise ValueError(f"{len(thetas)} angles do not match a state of shape {rho.shape}")
    r = kron(*(z_rotation(t) for t in thetas))
    return r @ rho @ r.conj().T


def _u_bits(u: int, n: int) -> tuple[int, ...]:
    return tuple((u >> (n - 2 - k)) & 1 for k in range(n - 1))


def block_angle(thetas, u: int) -> float:
    """``theta_1 + sum_j (-1)^{u_j} theta_{j+1}``: the rotation seen by block u."""
    thetas = list(thetas)
    bits = _u_bits(u, len(thetas))
    return thetas[0] + sum(-t if b else t for t, b in zip(thetas[1:], bits))


def rotated_block_params(lam0: float, lam1: float, s: float, beta: float) -> tuple[float, float, float]:
    """Diagonal weights and imaginary coherence of a block after rotating it by ``beta``."""
    c, sn = math.cos(beta), math.sin(beta)
    delta = lam0 - lam1
    new0 = 0.5 * (lam0 + lam1 + delta * c + 2 * s * sn)
    new1 = 0.5 * (lam0 + lam1 - delta * c - 2 * s * sn)
    return new0, new1, s * c - 0.5 * delta * sn


def solve_rotation_angles(targets, n: int | None = None) -> np.ndarray:
    """Angles theta with ``block_angle(theta, u) = beta`` for each ``(u, beta)`` in ``targets``.

    ``u`` is an integer or a bit string. Raises ``SingularSystemError`` when
    the sign rows of the chosen blocks are linearly dependent.
    """
    targets = list(targets)
    n = len(targets) if n is None else n
    if len(targets) != n:
        raise ValueError(f"need exactly {n} constraints, got {len(targets)}")
    rows, rhs = [], []
    for u, beta in targets:
        u = int(u, 2) if isinstance(u, str) else int(u)
        rows.append([1.0] + [-1.0 if b else 1.0 for b in _u_bits(u, n)])
        rhs.append(float(beta))
    a = np.array(rows)
    if abs(np.linalg.det(a)) < 1e-9:
        raise SingularSystemError("chosen blocks give a singular sign matrix")
    return np.linalg.solve(a, np.array(rhs))


def gauge_fix(rho, n: int, blocks=None) -> tuple[np.ndarray, np.ndarray]:
    """Rotate a blocked state so the chosen blocks lose their coherence and are ordered.

    Each chosen block u is rotated by ``atan2(2 s_u, lambda_0u - lambda_1u)``,
    which clears ``s_u`` and leaves ``lambda_0u >= lambda_1u``. Returns the
    angles and the rotated state.
    """
    from .ghz import default_zero_blocks

    params = block_parameters(rho, n)
    blocks = default_zero_blocks(n) if blocks is None else blocks
    targets = []
    for u in blocks:
        lam0, lam1, _, s = params[int(u)]
        targets.append((u, math.atan2(2 * s, lam0 - lam1)))
    thetas = solve_rotation_angles(targets, n)
    return thetas, apply_local_z_rotations(rho, thetas)


# --- real-part sign flip -------------------------------------------------------


def flip_real_offdiagonals(rho_plus, n: int = 3) -> np.ndarray:
    """Negate the real part of every in-block GHZ coherence."""
    m = _blocks_of(rho_plus, n).copy()
    for u in range(2 ** (n - 1)):
        a, b = 2 * u, 2 * u + 1
        m[a, b] = -m[a, b].real + 1j * m[a, b].imag
        m[b, a] = np.conj(m[a, b])
    return from_ghz_basis(m, n)


def statistics(rho, n: int, angles) -> np.ndarray:
    """Joint outcome distribution, shape ``(2,)*n``, for one in-plane setting per party."""
    rho = np.asarray(rho, dtype=complex)
    angles = list(angles)
    if rho.shape != (2**n, 2**n) or len(angles) != n:
        raise ValueError("state and angle list do not match n parties")
    out = np.zeros((2,) * n)
    for outcome in product((0, 1), repeat=n):
        proj = kron(*(0.5 * (I2 + (-1) ** a * observable_matrix(in_plane(phi))) for phi, a in zip(angles, outcome)))
        out[outcome] = np.real(np.trace(proj @ rho))
    return out


def strict_subset_marginals(probs: np.ndarray) -> dict:
    """Correlator ``<prod_{i in P} A_i>`` for every nonempty strict subset P."""
    n = probs.ndim
    signs = np.array([1.0, -1.0])
    out = {}
    for size in range(1, n):
        for subset in product(range(n), repeat=size):
            if list(subset) != sorted(set(subset)):
                continue
            weight = np.ones(probs.shape)
            for i in subset:
                shape = [1] * n
                shape[i] = 2
                weight = weight * signs.reshape(shape)
            out[subset] = float(np.sum(weight * probs))
    return out


# --- entropy under the twirl --------------------------------------------------


@dataclass(frozen=True)
class NonIncreaseReport:
    trials: int
    violations: int
    worst_margin: float
    values: tuple  # (angle, H before, H after) per trial


def entropy_nonincrease_check(rho, trials: int = 10, seed: int = 0, tol: float = 1e-8) -> NonIncreaseReport:
    """Compare H(X|E) of ``rho`` and of its twirl at ``trials`` random in-plane angles for Alice."""
    rho = check_density_matrix(rho)
    n = int(round(math.log2(rho.shape[0])))
    twirled = symmetrize(rho, n)
    rng = np.random.default_rng(seed)
    values = []
    worst = math.inf
    violations = 0
    for _ in range(trials):
        phi = float(rng.uniform(0.0, 2.0 * math.pi))
        before = cond_entropy_single(rho, phi)
        after = cond_entropy_single(twirled, phi)
        margin = before - after
        worst = min(worst, margin)
        violations += margin < -tol
        values.append((phi, before, after))
    return NonIncreaseReport(trials, violations, worst, tuple(values))


@dataclass(frozen=True)
class FlaggedPurificationReport:
    h_original: float  # H(X|E) of rho
    h_branches: tuple  # H(X|E) of each flipped state
    h_flag: float  # H(X|E T), the flag kept classical
    h_total: float  # H(X|E T T'), from the materialised purification
    h_twirled: float  # H(X|E) of the twirled state with a fresh purification


def flagged_purification_check(rho, phi: float) -> FlaggedPurificationReport:
    """Build the four-branch flagged purification of the three-qubit twirl explicitly.

    The pure state is ``(1/2) sum_t |phi_t>_{ABCE} |t>_T |t>_T'`` where
    ``phi_t`` purifies ``Z^x_t rho Z^x_t`` for the four even-weight x_t.
    """
    rho = check_density_matrix(rho)
    if rho.shape != (8, 8):
        raise ValueError("the flagged construction is implemented for three qubits")
    flips = [x for x in product((0, 1), repeat=3) if sum(x) % 2 == 0]
    psi = purify(rho).reshape(8, 8)  # (ABC, E)
    branches = [_z_string(x) @ psi for x in flips]

    h_branches = tuple(cond_entropy_single(_z_string(x) @ rho @ _z_string(x), phi) for x in flips)

    # |Phi> over (ABC, E, T, T')
    big = np.zeros((8, 8, 4, 4), dtype=complex)
    for t, b in enumerate(branches):
        big[:, :, t, t] = 0.5 * b
    big = big.reshape(2, 4, 8 * 16)  # (A, BC, E T T')

    def side_state(vec_a):
        # unnormalised state of E T T' given Alice's projection
        proj = np.tensordot(vec_a.conj(), big, axes=([0], [0]))  # (BC, ETT')
        return proj.T @ proj.conj()

    joint = sum(unnormalized_entropy(side_state(outcome_vector(phi, a))) for a in (0, 1))
    full = big.reshape(8, 128)
    eve = full.T @ full.conj()
    h_total = joint - von_neumann_entropy(eve)

    h_flag = float(np.mean(h_branches))
    h_twirled = cond_entropy_single(symmetrize(rho, 3), phi)
    return FlaggedPurificationReport(cond_entropy_single(rho, phi), h_branches, h_flag, h_total, h_twirled)


def pair_statistics_agree(rho_plus, rho_minus, n: int, angle_sets) -> float:
    """Largest difference between the joint distributions of two states over several angle sets."""
    return max(float(np.max(np.abs(statistics(rho_plus, n, a) - statistics(rho_minus, n, a)))) for a in angle_sets)


def pm_entropies(rho_plus, rho_minus, phi_x: float, phi_y: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """``(H(X|E), H(XY|E))`` for the two states."""
    return (
        (cond_entropy_single(rho_plus, phi_x), cond_entropy_pair(rho_plus, phi_x, phi_y)),
        (cond_entropy_single(rho_minus, phi_x), cond_entropy_pair(rho_minus, phi_x, phi_y)),
    )
