"""GHZ basis and the almost-GHZ-diagonal state family.

Label conventions
-----------------
A GHZ basis vector ``|psi_{sigma,u}> = (|0>|u> + (-1)^sigma |1>|u_bar>)/sqrt(2)``
is labelled by a phase bit ``sigma`` and a bit string ``u`` of length n-1.
Flat label indices put ``sigma`` in the most significant position,
``index = sigma * 2**(n-1) + int(u)``, so eight three-qubit eigenvalues are
stored as ``rho[4*i + 2*j + k]``.

Matrices written *in the GHZ basis* instead use block order: basis vector
``2*int(u) + sigma``. Each ``u`` then owns a contiguous 2 x 2 block
``[[lambda_0u, r_u + i s_u], [r_u - i s_u, lambda_1u]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, dagger

STATE_TOL = 1e-9


def bits(value: int, width: int) -> tuple[int, ...]:
    """Big-endian bit tuple of ``value``."""
    return tuple((value >> (width - 1 - k)) & 1 for k in range(width))


def bits_to_int(b) -> int:
    out = 0
    for bit in b:
        out = (out << 1) | int(bit)
    return out


@dataclass(frozen=True)
class GhzLabel:
    sigma: int
    u: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.u) + 1

    def index(self) -> int:
        return self.sigma * 2 ** len(self.u) + bits_to_int(self.u)

    def block_index(self) -> int:
        return 2 * bits_to_int(self.u) + self.sigma


def ghz_labels(n: int) -> list[GhzLabel]:
    """All 2**n labels, sigma most significant, u big-endian."""
    if n < 2:
        raise ValueError("GHZ basis needs at least two qubits")
    return [GhzLabel(sigma, bits(u, n - 1)) for sigma in (0, 1) for u in range(2 ** (n - 1))]


def ghz_basis_vector(n: int, sigma: int, u) -> np.ndarray:
    u = tuple(int(b) for b in u)
    if n < 2 or len(u) != n - 1:
        raise ValueError(f"u must have length n-1 = {n - 1}, got {len(u)}")
    if sigma not in (0, 1) or any(b not in (0, 1) for b in u):
        raise ValueError("labels are bits")
    dim = 2**n
    vec = np.zeros(dim, dtype=complex)
    low = bits_to_int(u)
    high = 2 ** (n - 1) + bits_to_int(1 - b for b in u)
    vec[low] = 1 / math.sqrt(2)
    vec[high] = (-1) ** sigma / math.sqrt(2)
    return vec


def ghz_basis_matrix(n: int) -> np.ndarray:
    """Unitary whose column ``2*int(u) + sigma`` is ``|psi_{sigma,u}>``."""
    half = 2 ** (n - 1)
    cols = [ghz_basis_vector(n, sigma, bits(u, n - 1)) for u in range(half) for sigma in (0, 1)]
    return np.column_stack(cols)


def to_ghz_basis(rho, n: int) -> np.ndarray:
    """Matrix elements of ``rho`` in the GHZ basis (block order)."""
    u = ghz_basis_matrix(n)
    return dagger(u) @ as_matrix(rho) @ u


def from_ghz_basis(m, n: int) -> np.ndarray:
    u = ghz_basis_matrix(n)
    return u @ as_matrix(m) @ dagger(u)


def ghz_projector(n: int = 3) -> np.ndarray:
    psi = ghz_basis_vector(n, 0, (0,) * (n - 1))
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class AlmostGhzState:
    """GHZ-diagonal state with purely imaginary coherences inside each u-block.

    ``lambdas[sigma, int(u)]`` are the diagonal weights and ``s[int(u)]`` the
    imaginary parts of the in-block coherence ``<psi_{0u}|rho|psi_{1u}> = i s_u``.
    """

    n_parties: int
    lambdas: np.ndarray
    s: np.ndarray = field(default=None)

    def __post_init__(self):
        n = int(self.n_parties)
        if n < 2:
            raise ValueError("need at least two parties")
        half = 2 ** (n - 1)
        lam = np.array(self.lambdas, dtype=float).reshape(2, half)
        s = np.zeros(half) if self.s is None else np.array(self.s, dtype=float).reshape(half)
        if np.any(lam < -STATE_TOL):
            raise ValueError("weights must be nonnegative")
        if abs(lam.sum() - 1.0) > STATE_TOL:
            raise ValueError(f"weights sum to {lam.sum():.12g}, expected 1")
        bad = s**2 - lam[0] * lam[1]
        if np.any(bad > STATE_TOL):
            raise ValueError(f"block {int(np.argmax(bad))} is not positive semidefinite")
        lam.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "n_parties", n)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "s", s)

    @classmethod
    def from_weights(cls, n: int, weights: dict, s: dict | None = None) -> "AlmostGhzState":
        """Build from ``{(sigma, "u-bits"): weight}`` and ``{"u-bits": s}`` maps."""
        half = 2 ** (n - 1)
        lam = np.zeros((2, half))
        for (sigma, u), w in weights.items():
            lam[int(sigma), _u_index(u, n)] = w
        svec = np.zeros(half)
        for u, val in (s or {}).items():
            svec[_u_index(u, n)] = val
        return cls(n, lam, svec)

    def weight(self, sigma: int, u) -> float:
        return float(self.lambdas[sigma, _u_index(u, self.n_parties)])

    def ghz_matrix(self) -> np.ndarray:
        """The state written in the GHZ basis, block order."""
        half = 2 ** (self.n_parties - 1)
        m = np.zeros((2 * half, 2 * half), dtype=complex)
        for u in range(half):
            a, b = 2 * u, 2 * u + 1
            m[a, a] = self.lambdas[0, u]
            m[b, b] = self.lambdas[1, u]
            m[a, b] = 1j * self.s[u]
            m[b, a] = -1j * self.s[u]
        return m


def _u_index(u, n: int) -> int:
    if isinstance(u, str):
        u = tuple(int(ch) for ch in u)
    elif isinstance(u, int):
        return u
    if len(u) != n - 1:
        raise ValueError(f"u must have length {n - 1}")
    return bits_to_int(u)


def to_density_matrix(state: AlmostGhzState) -> np.ndarray:
    """Computational-basis density matrix of an almost-GHZ state."""
    return from_ghz_basis(state.ghz_matrix(), state.n_parties)


def default_zero_blocks(n: int) -> list[int]:
    """Blocks whose coherence is removed in the normal form: u = 0...0 and every single-bit u.

    Their sign rows ``(1, (-1)^u_1, ..., (-1)^u_{n-1})`` are linearly
    independent, so local z rotations can clear all n coherences at once.
    For three parties this is {00, 01, 10}, leaving only u = 11 coherent;
    for two parties every block is diagonal.
    """
    return [0] + [1 << k for k in range(n - 2, -1, -1)]


def is_normal_form(state: AlmostGhzState, zero_blocks=None, tol: float = STATE_TOL) -> bool:
    """True when the chosen blocks carry no coherence and have ordered diagonals."""
    zero_blocks = default_zero_blocks(state.n_parties) if zero_blocks is None else list(zero_blocks)
    for u in zero_blocks:
        u = _u_index(u, state.n_parties)
        if abs(state.s[u]) > tol or state.lambdas[0, u] < state.lambdas[1, u] - tol:
            return False
    return True


def _require_three(state: AlmostGhzState) -> None:
    if state.n_parties != 3:
        raise ValueError(f"expected a three-party state, got {state.n_parties}")


def block_eigenvalues(lam0: float, lam1: float, s: float) -> tuple[float, float]:
    """Eigenvalues of ``[[lam0, i s], [-i s, lam1]]``, larger first."""
    root = math.sqrt((lam0 - lam1) ** 2 + 4 * s * s)
    return 0.5 * (lam0 + lam1 + root), 0.5 * (lam0 + lam1 - root)


def eigvals_almost_ghz3(state: AlmostGhzState) -> np.ndarray:
    """Eigenvalues ``rho_ijk`` at flat index ``4i + 2j + k``.

    Only the u = 11 block may carry a coherence; its two eigenvalues are
    the roots of the 2 x 2 block, the larger one assigned to i = 0. A block
    without coherence is already diagonal and keeps its labels.
    """
    _require_three(state)
    eigs = np.concatenate([state.lambdas[0], state.lambdas[1]]).astype(float)
    if np.any(np.abs(state.s[:3]) > STATE_TOL):
        raise ValueError("only the u=11 block may carry a coherence")
    if state.s[3] != 0.0:
        eigs[3], eigs[7] = block_eigenvalues(state.lambdas[0, 3], state.lambdas[1, 3], state.s[3])
    return eigs


def t_parameter(lambda011: float, lambda111: float, s: float) -> float:
    """Mixing angle of the u = 11 eigenvectors, in [-pi/2, pi/2].

    The angle satisfies ``tan t = 2 s / (lambda011 - lambda111 + root)``.
    Without coherence the block is already diagonal and t = 0, matching
    the label-preserving eigenvalues of ``eigvals_almost_ghz3``.
    """
    if s == 0.0:
        return 0.0
    root = math.sqrt((lambda011 - lambda111) ** 2 + 4 * s * s)
    return math.atan2(2 * s, lambda011 - lambda111 + root)


def eigvecs_almost_ghz3(state: AlmostGhzState) -> np.ndarray:
    """Eigenvectors as columns, in the same flat order as ``eigvals_almost_ghz3``."""
    _require_three(state)
    t = t_parameter(state.lambdas[0, 3], state.lambdas[1, 3], state.s[3])
    return _eigvecs_from_t(t)


def _eigvecs_from_t(t: float) -> np.ndarray:
    cols = []
    for label in ghz_labels(3):
        cols.append(ghz_basis_vector(3, label.sigma, label.u))
    vecs = np.column_stack(cols)
    psi011 = ghz_basis_vector(3, 0, (1, 1))
    psi111 = ghz_basis_vector(3, 1, (1, 1))
    vecs[:, 3] = math.cos(t) * psi011 - 1j * math.sin(t) * psi111
    vecs[:, 7] = math.cos(t) * psi111 - 1j * math.sin(t) * psi011
    return vecs


def state_from_spectrum(eigs, t: float) -> AlmostGhzState:
    """Three-party state with eigenvalues ``eigs`` (flat ``4i+2j+k``) and mixing angle ``t``.

    Inverse of the eigen-decomposition: the u = 11 block is rebuilt from its
    eigenvalues and the eigenvectors ``cos t |psi_011> - i sin t |psi_111>``
    and ``cos t |psi_111> - i sin t |psi_011>``.
    """
    eigs = np.asarray(eigs, dtype=float).reshape(8)
    c, sn = math.cos(t), math.sin(t)
    lam = np.array([eigs[:4], eigs[4:]], dtype=float)
    r0, r1 = eigs[3], eigs[7]
    lam[0, 3] = r0 * c * c + r1 * sn * sn
    lam[1, 3] = r0 * sn * sn + r1 * c * c
    s = np.zeros(4)
    s[3] = (r0 - r1) * sn * c
    return AlmostGhzState(3, lam, s)


def tau_state(nu: float, n: int = 3) -> AlmostGhzState:
    """``nu |psi_{0,0..0}><.| + (1 - nu) |psi_{0,1..1}><.|``."""
    half = 2 ** (n - 1)
    lam = np.zeros((2, half))
    lam[0, 0] = nu
    lam[0, half - 1] += 1.0 - nu
    return AlmostGhzState(n, lam)


def random_almost_ghz(n: int, rng: np.random.Generator, coherent_blocks=None, diagonal: bool = False) -> AlmostGhzState:
    """Random state of the family; by default only blocks outside the normal-form zero set get a coherence."""
    half = 2 ** (n - 1)
    lam = rng.dirichlet(np.ones(2 * half)).reshape(2, half)
    s = np.zeros(half)
    if not diagonal:
        if coherent_blocks is None:
            coherent_blocks = [u for u in range(half) if u not in default_zero_blocks(n)]
        for u in coherent_blocks:
            s[u] = rng.uniform(-1.0, 1.0) * math.sqrt(lam[0, u] * lam[1, u])
    return AlmostGhzState(n, lam, s)


def almost_ghz_from_density(rho, n: int, tol: float = 1e-9) -> AlmostGhzState | None:
    """Recognise ``rho`` as a member of the family, or return None.

    Requires vanishing coherences between different u-blocks and purely
    imaginary in-block coherences.
    """
    m = to_ghz_basis(rho, n)
    half = 2 ** (n - 1)
    mask = np.zeros_like(m, dtype=bool)
    for u in range(half):
        mask[2 * u : 2 * u + 2, 2 * u : 2 * u + 2] = True
    if np.max(np.abs(m[~mask]), initial=0.0) > tol:
        return None
    lam = np.zeros((2, half))
    s = np.zeros(half)
    for u in range(half):
        a, b = 2 * u, 2 * u + 1
        if abs(m[a, b].real) > tol:
            return None
        lam[0, u] = m[a, a].real
        lam[1, u] = m[b, b].real
        s[u] = m[a, b].imag
    lam = np.clip(lam, 0.0, None)
    try:
        return AlmostGhzState(n, lam / lam.sum(), s)
    except ValueError:
        return None
