"""MABK Bell operators and two-outcome qubit observables."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .linalg import I2, PAULIS, X, Y, Z, as_matrix, kron

TWO_PI = 2.0 * math.pi


def normalize_angle(phi: float) -> float:
    """Map an angle into [0, 2 pi)."""
    out = math.fmod(float(phi), TWO_PI)
    if out < 0:
        out += TWO_PI
    return 0.0 if out >= TWO_PI else out


@dataclass(frozen=True)
class MeasurementSetting:
    """A binary observable: in-plane angle, Bloch vector, or fixed outcome (+/- identity)."""

    kind: str
    phi: float = 0.0
    vector: tuple[float, float, float] = (1.0, 0.0, 0.0)
    sign: int = 1

    def __post_init__(self):
        if self.kind == "in_plane":
            phi = normalize_angle(self.phi)
            object.__setattr__(self, "phi", phi)
            object.__setattr__(self, "vector", (math.cos(phi), math.sin(phi), 0.0))
        elif self.kind == "bloch":
            vec = tuple(float(v) for v in self.vector)
            if len(vec) != 3 or abs(math.sqrt(sum(v * v for v in vec)) - 1.0) > 1e-12:
                raise ValueError(f"Bloch vector must be a unit 3-vector, got {vec}")
            object.__setattr__(self, "vector", vec)
        elif self.kind == "fixed":
            if self.sign not in (1, -1):
                raise ValueError("fixed-outcome sign must be +1 or -1")
            object.__setattr__(self, "vector", (0.0, 0.0, 0.0))
        else:
            raise ValueError(f"unknown setting kind {self.kind!r}")

    def coefficients(self) -> np.ndarray:
        """Expansion (c_I, c_X, c_Y, c_Z) of the observable in the Pauli basis."""
        if self.kind == "fixed":
            return np.array([float(self.sign), 0.0, 0.0, 0.0])
        return np.array([0.0, *self.vector])


def in_plane(phi: float) -> MeasurementSetting:
    return MeasurementSetting("in_plane", phi=phi)


def bloch(vector) -> MeasurementSetting:
    vec = np.asarray(vector, dtype=float)
    vec = vec / np.linalg.norm(vec)
    return MeasurementSetting("bloch", vector=tuple(vec))


def fixed(sign: int = 1) -> MeasurementSetting:
    return MeasurementSetting("fixed", sign=sign)


def setting_from_coefficients(coeffs) -> MeasurementSetting:
    c = np.asarray(coeffs, dtype=float)
    if np.linalg.norm(c[1:]) > 0.5:
        return bloch(c[1:])
    return fixed(1 if c[0] >= 0 else -1)


MeasurementConfig = tuple  # tuple of (setting_0, setting_1) pairs, one per party


def make_config(pairs) -> MeasurementConfig:
    config = tuple((s0, s1) for s0, s1 in pairs)
    for pair in config:
        if len(pair) != 2 or not all(isinstance(s, MeasurementSetting) for s in pair):
            raise ValueError("each party needs exactly two MeasurementSetting objects")
    return config


def config_from_angles(angles) -> MeasurementConfig:
    """In-plane config from a flat list ``(A0, A1, B0, B1, ...)``."""
    angles = list(angles)
    if len(angles) % 2:
        raise ValueError("need two angles per party")
    return tuple((in_plane(angles[2 * i]), in_plane(angles[2 * i + 1])) for i in range(len(angles) // 2))


def swap_settings(config: MeasurementConfig) -> MeasurementConfig:
    return tuple((s1, s0) for s0, s1 in config)


def observable_matrix(setting: MeasurementSetting) -> np.ndarray:
    c = setting.coefficients()
    return c[0] * I2 + c[1] * X + c[2] * Y + c[3] * Z


def _check_config(n: int, config: MeasurementConfig) -> None:
    if n < 2:
        raise ValueError("MABK operators need at least two parties")
    if len(config) != n:
        raise ValueError(f"config has {len(config)} parties, expected {n}")


def _recursive_pair(config: MeasurementConfig):
    ops = [(observable_matrix(s0), observable_matrix(s1)) for s0, s1 in config]
    a0, a1 = ops[0]
    b0, b1 = ops[1]
    m = kron(a0, b0) + kron(a0, b1) + kron(a1, b0) - kron(a1, b1)
    mbar = kron(a1, b1) + kron(a1, b0) + kron(a0, b1) - kron(a0, b0)
    for c0, c1 in ops[2:]:
        m, mbar = (
            0.5 * (kron(m, c0) + kron(m, c1) + kron(mbar, c0) - kron(mbar, c1)),
            0.5 * (kron(mbar, c1) + kron(mbar, c0) + kron(m, c1) - kron(m, c0)),
        )
    return m, mbar


def mabk_recursive(n: int, config: MeasurementConfig) -> np.ndarray:
    """MABK operator from the CHSH-style recursion.

    ``M_2`` is the CHSH operator and
    ``M_k = (M_{k-1} (A0 + A1) + Mbar_{k-1} (A0 - A1)) / 2`` where ``Mbar``
    is ``M`` with every party's two settings exchanged.
    """
    _check_config(n, config)
    return _recursive_pair(config)[0]


def mabk_conjugate(n: int, config: MeasurementConfig) -> np.ndarray:
    """``Mbar``: the operator with both settings of every party exchanged."""
    _check_config(n, config)
    return _recursive_pair(config)[1]


@lru_cache(maxsize=None)
def mabk_terms(n: int) -> tuple[tuple[tuple[int, ...], float], ...]:
    """Closed-form expansion of ``M_n`` as ``((x_1..x_n), coefficient)`` pairs.

    The coefficient of ``A_{x_1} (x) ... (x) A_{x_n}`` depends only on the
    Hamming weight w of x:

    * n odd: nonzero only when ``w = (n-1)/2 mod 2``, with sign
      ``(-1)^(((n-1)/2 - w)/2)`` and magnitude ``2^-((n-3)/2)``;
    * n/2 even: sign ``(-1)^(n/4 - ceil(w/2))``, magnitude ``2^-((n-2)/2)``;
    * n/2 odd: sign ``(-1)^((n-2)/4 - floor(w/2))``, magnitude ``2^-((n-2)/2)``.
    """
    if n < 2:
        raise ValueError("MABK operators need at least two parties")
    terms = []
    for x in product((0, 1), repeat=n):
        w = sum(x)
        if n % 2:
            if (w - (n - 1) // 2) % 2:
                continue
            sign = (-1) ** ((((n - 1) // 2 - w) // 2) % 2)
            coeff = sign / 2 ** ((n - 3) // 2)
        elif (n // 2) % 2 == 0:
            sign = (-1) ** ((n // 4 - (w + 1) // 2) % 2)
            coeff = sign / 2 ** ((n - 2) // 2)
        else:
            sign = (-1) ** (((n - 2) // 4 - w // 2) % 2)
            coeff = sign / 2 ** ((n - 2) // 2)
        terms.append((x, float(coeff)))
    return tuple(terms)


def mabk_closed(n: int, config: MeasurementConfig) -> np.ndarray:
    """MABK operator from its closed-form expansion over setting strings."""
    _check_config(n, config)
    ops = [(observable_matrix(s0), observable_matrix(s1)) for s0, s1 in config]
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for x, coeff in mabk_terms(n):
        out += coeff * kron(*(ops[i][xi] for i, xi in enumerate(x)))
    return out


def mabk_expectation(rho, n: int, config: MeasurementConfig) -> float:
    """``Tr[M_n rho]``."""
    rho = as_matrix(rho)
    if rho.shape != (2**n, 2**n):
        raise ValueError(f"state of shape {rho.shape} does not act on {n} qubits")
    return float(np.real(np.trace(mabk_recursive(n, config) @ rho)))


def mabk_bounds(n: int) -> tuple[float, float, float]:
    """(classical, genuine-multipartite-entanglement, quantum) thresholds."""
    if n < 2:
        raise ValueError("MABK operators need at least two parties")
    return 2.0, 2.0 ** (n / 2), 2.0 ** ((n + 1) / 2)


def pauli_tensor(rho, n: int) -> np.ndarray:
    """All Pauli correlators ``Tr[rho sigma_m1 (x) ... (x) sigma_mn]``, shape ``(4,)*n``.

    Index 0 is the identity and 1, 2, 3 are X, Y, Z.
    """
    rho = as_matrix(rho)
    if rho.shape != (2**n, 2**n):
        raise ValueError(f"state of shape {rho.shape} does not act on {n} qubits")
    paulis = np.stack(PAULIS)  # (4, 2, 2), sigma[mu, row, col]
    t = rho.reshape((2,) * (2 * n))
    # Each pass contracts the leading party's (row, col) axes against
    # sigma[mu, col, row] and appends mu at the end.
    for k in range(n):
        remaining = n - k
        t = np.tensordot(t, paulis, axes=([0, remaining], [2, 1]))
    return np.real(t)


def correlator(tensor: np.ndarray, vectors) -> float:
    """Contract a Pauli tensor with one 4-vector per party."""
    out = tensor
    for vec in vectors:
        out = np.tensordot(vec, out, axes=([0], [0]))
    return float(out)
