"""Conditional von Neumann entropies and the analytic entropy bounds.

The adversary holds a purification of the three-qubit state. Alice (and
Bob) measure in-plane observables; outcome ``a`` of the observable at angle
``phi`` corresponds to ``(|0> + (-1)^a e^{i phi} |1>)/sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .ghz import AlmostGhzState, eigvals_almost_ghz3, t_parameter
from .linalg import (
    binary_entropy,
    check_density_matrix,
    ket_to_density,
    partial_trace,
    purify,
    shannon_entropy,
    unnormalized_entropy,
    von_neumann_entropy,
)

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class CqState:
    """Classical outcome distribution with the side system's conditional states."""

    outcome_probs: np.ndarray
    conditional_states: tuple

    def joint_entropy(self) -> float:
        """Entropy of ``sum_a p_a |a><a| (x) rho_a`` (block diagonal)."""
        return sum(
            unnormalized_entropy(p * rho) for p, rho in zip(self.outcome_probs, self.conditional_states) if p > 0
        )


def outcome_vector(phi: float, a: int) -> np.ndarray:
    return np.array([1.0, (-1) ** a * np.exp(1j * phi)]) / SQRT2


def _measured_side_blocks(rho_pe: np.ndarray, n_measured: int, angles, side_dim: int) -> list[np.ndarray]:
    """Unnormalised side-system operators ``<a|rho|a>`` for every outcome string."""
    blocks = []
    for outcome in np.ndindex(*(2,) * n_measured):
        vec = np.ones(1, dtype=complex)
        for phi, a in zip(angles, outcome):
            vec = np.kron(vec, outcome_vector(phi, a))
        proj = np.kron(vec.conj()[None, :], np.eye(side_dim))
        blocks.append(proj @ rho_pe @ proj.conj().T)
    return blocks


def _cq_from_blocks(blocks) -> CqState:
    probs = np.array([np.trace(b).real for b in blocks])
    states = tuple(b / p if p > 1e-300 else b for b, p in zip(blocks, probs))
    return CqState(probs, states)


def cq_state_single(rho, phi_x: float) -> CqState:
    """Alice's outcome together with the adversary's purifying system."""
    rho = check_density_matrix(rho)
    psi = purify(rho)
    joint = ket_to_density(psi)
    rho_ae = partial_trace(joint, [2, 2, 2, 8], {0, 3})
    return _cq_from_blocks(_measured_side_blocks(rho_ae, 1, [phi_x], 8))


def cq_state_pair(rho, phi_x: float, phi_y: float) -> CqState:
    rho = check_density_matrix(rho)
    psi = purify(rho)
    joint = ket_to_density(psi)
    rho_abe = partial_trace(joint, [2, 2, 2, 8], {0, 1, 3})
    return _cq_from_blocks(_measured_side_blocks(rho_abe, 2, [phi_x, phi_y], 8))


def _eve_entropy(rho) -> float:
    psi = purify(rho)
    rho_e = partial_trace(ket_to_density(psi), [8, 8], {1})
    return von_neumann_entropy(rho_e)


def cond_entropy_single(rho, phi_x: float) -> float:
    """``H(X|E) = H(XE) - H(E)`` for Alice's in-plane measurement at ``phi_x``."""
    cq = cq_state_single(rho, phi_x)
    return cq.joint_entropy() - _eve_entropy(rho)


def cond_entropy_pair(rho, phi_x: float, phi_y: float) -> float:
    """``H(XY|E) = H(XYE) - H(E)`` for Alice's and Bob's in-plane measurements."""
    cq = cq_state_pair(rho, phi_x, phi_y)
    return cq.joint_entropy() - _eve_entropy(rho)


def cond_entropy_pair_given_outcomes(rho, phi_x: float, phi_y: float) -> float:
    """``H(E|XY) = H(XYE) - H(XY)``."""
    cq = cq_state_pair(rho, phi_x, phi_y)
    return cq.joint_entropy() - shannon_entropy(cq.outcome_probs)


# --- fast paths ----------------------------------------------------------
# For a pure state on (measured, rest, E), the adversary's conditional state
# for outcome a has the same nonzero spectrum as <a|rho|a> on the unmeasured
# qubits. These helpers use that to avoid building the purification.


def _spectrum_entropy(values: np.ndarray) -> float:
    v = values[values > 1e-300]
    return float(-np.sum(v * np.log2(v)))


def measured_blocks(rho: np.ndarray, angles) -> np.ndarray:
    """``<a|rho|a>`` on the unmeasured qubits for each outcome string, stacked."""
    k = len(angles)
    rest = rho.shape[0] // 2**k
    t = rho.reshape(2**k, rest, 2**k, rest)
    out = []
    for outcome in np.ndindex(*(2,) * k):
        vec = np.ones(1, dtype=complex)
        for phi, a in zip(angles, outcome):
            vec = np.kron(vec, outcome_vector(phi, a))
        out.append(np.einsum("i,iajb,j->ab", vec.conj(), t, vec))
    return np.stack(out)


def fast_cond_entropy(rho: np.ndarray, angles, state_entropy: float | None = None) -> float:
    """``H(outcomes|E)`` for in-plane measurements on the leading qubits of ``rho``."""
    blocks = measured_blocks(rho, angles)
    joint = _spectrum_entropy(np.linalg.eigvalsh(blocks).reshape(-1))
    if state_entropy is None:
        state_entropy = _spectrum_entropy(np.linalg.eigvalsh(rho))
    return joint - state_entropy


# --- closed forms ---------------------------------------------------------


def _as_distribution(eigs, size: int) -> np.ndarray:
    e = np.asarray(eigs, dtype=float).reshape(-1)
    if e.size != size or np.any(e < -1e-12) or abs(e.sum() - 1.0) > 1e-9:
        raise ValueError(f"expected a probability vector of length {size}")
    return np.clip(e, 0.0, None)


def closed_form_hxe(eigs) -> float:
    """``1 - H({rho_ijk}) + H({rho_ijk + rho_i jbar kbar})`` for eigenvalues at index ``4i+2j+k``."""
    e = _as_distribution(eigs, 8)
    pairs = [e[4 * i + jk] + e[4 * i + 3 - jk] for i in (0, 1) for jk in (0, 1)]
    return 1.0 - shannon_entropy(e) + shannon_entropy(pairs)


def _clamp(m: float, low: float, high: float) -> float:
    if not math.isfinite(m) or m < low - DOMAIN_SLACK or m > high + DOMAIN_SLACK:
        raise ValueError(f"violation {m!r} outside [{low}, {high}]")
    return min(max(m, low), high)


def bound_F(m: float) -> float:
    """Lower bound on H(X|E) given a three-party MABK value m; zero below 2 sqrt(2)."""
    if not math.isfinite(m) or m < 0 or m > 4.0 + DOMAIN_SLACK:
        raise ValueError(f"violation {m!r} outside [0, 4]")
    m = min(m, 4.0)
    if m <= 2.0 * SQRT2:
        return 0.0
    return 1.0 - binary_entropy(0.5 + 0.5 * math.sqrt(m * m / 8.0 - 1.0))


def bound_F_nparty(n: int, m: float) -> float:
    """Lower bound on H(X|E) for the n-party MABK value m in [2^(n/2), 2^((n+1)/2)]."""
    if n < 2:
        raise ValueError("need at least two parties")
    m = _clamp(m, 2.0 ** (n / 2), 2.0 ** ((n + 1) / 2))
    radicand = max(0.0, m * m / 2.0**n - 1.0)
    return 1.0 - binary_entropy(0.5 + 0.5 * math.sqrt(radicand))


def tau_weight(m: float) -> float:
    """Weight nu with ``4 sqrt(nu^2 + (1-nu)^2) = m`` and nu >= 1/2."""
    m = _clamp(m, 2.0 * SQRT2, 4.0)
    return 0.5 + 0.5 * math.sqrt(max(0.0, m * m / 8.0 - 1.0))


def f_of_m(m: float) -> float:
    m = _clamp(m, 2.0, 4.0)
    return 0.25 - SQRT3 / 24.0 * math.sqrt(max(0.0, m * m - 4.0))


def bound_G(m: float) -> float:
    """Lower bound on H(XY|E) given the three-party MABK value m in [2, 4]."""
    f = f_of_m(m)
    return 2.0 - shannon_entropy([1.0 - 3.0 * f, f, f, f])


def _bound_G_slope(m: float) -> float:
    f = f_of_m(m)
    return SQRT3 / 8.0 * m / math.sqrt(m * m - 4.0) * math.log2((1.0 - 3.0 * f) / f)


@lru_cache(maxsize=None)
def _G_tangent_point() -> float:
    # G is concave just above m = 2; the envelope is the tangent from (2, 0)
    return brentq(lambda m: _bound_G_slope(m) * (m - 2.0) - bound_G(m), 2.11, 3.0, xtol=1e-15)


def bound_G_envelope(m: float) -> float:
    """Largest convex function below ``bound_G`` on [2, 4].

    ``bound_G`` is concave on (2, 2.1045), so averaging over a mixture of
    violations needs this envelope. It is the tangent line from (2, 0) up to
    m* ~ 2.1905 and ``bound_G`` itself beyond.
    """
    m = _clamp(m, 2.0, 4.0)
    m_star = _G_tangent_point()
    if m >= m_star:
        return bound_G(m)
    return bound_G(m_star) * (m - 2.0) / (m_star - 2.0)


def nu_m_pair(m: float) -> float:
    m = _clamp(m, 2.0, 4.0)
    return 0.25 + SQRT3 / 8.0 * math.sqrt(max(0.0, m * m - 4.0))


def mixing_weight(t: float) -> float:
    """``p = tan^2 t / (1 + tan^2 t)``, i.e. ``sin^2 t``."""
    return math.sin(t) ** 2


def coherence_C(eigs, p: float, phi_x: float, phi_y: float, s_sign: float = 1.0) -> complex:
    """The complex number whose modulus fixes the adversary's conditional spectrum.

    ``s_sign`` is the sign of the u = 11 coherence; the closed form is
    written for a nonnegative coherence and its last phase flips otherwise.
    """
    e = _as_distribution(eigs, 8)
    if not -1e-12 <= p <= 1 + 1e-12:
        raise ValueError(f"p={p!r} outside [0, 1]")
    p = min(max(p, 0.0), 1.0)
    d = e[:4] - e[4:]
    last = 1.0 - 2.0 * p - 2j * math.copysign(1.0, s_sign) * math.sqrt(p * (1.0 - p))
    # The measurement phases enter conjugated relative to the coherence term
    # under this package's outcome-vector and eigenvector conventions.
    return (
        d[0] * np.exp(-2j * phi_x)
        + d[1] * np.exp(2j * phi_y)
        + d[2] * np.exp(-2j * (phi_x - phi_y))
        + d[3] * last
    )


def pair_entropy_via_C(state, p: float | None, phi_x: float, phi_y: float) -> float:
    """``H(E|XY) = h((1 + |C|)/2)`` from the eigenvalues and mixing weight p.

    ``state`` is an ``AlmostGhzState`` (p may then be None and is derived
    from its mixing angle) or eight eigenvalues at index ``4i+2j+k``.
    """
    s_sign = 1.0
    if isinstance(state, AlmostGhzState):
        eigs = eigvals_almost_ghz3(state)
        t = t_parameter(state.lambdas[0, 3], state.lambdas[1, 3], state.s[3])
        if p is None:
            p = mixing_weight(t)
        s_sign = -1.0 if state.s[3] < 0 else 1.0
    else:
        eigs = state
        if p is None:
            raise ValueError("p is required when passing eigenvalues")
    c = abs(coherence_C(eigs, p, phi_x, phi_y, s_sign))
    return binary_entropy(min(1.0, 0.5 * (1.0 + c)))
