"""Numerical entropy minimization under a three-party MABK constraint.

Also hosts the brute-force MABK maximizer used as an oracle, the random
check that the two-level tau family minimizes H(X|E), and the enumeration
of the critical cases of the pair-entropy maximization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .entropy import SQRT2, _clamp, binary_entropy, closed_form_hxe, tau_weight
from .ghz import AlmostGhzState, eigvals_almost_ghz3, state_from_spectrum
from .linalg import check_density_matrix, shannon_entropy
from .mabk import MeasurementSetting, bloch, fixed, mabk_terms, pauli_tensor
from .violation import corollary1_bound

FEASIBILITY_TOL = 1e-6
TARGET_MARGIN = 1e-6
N_PARAMS = 15


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for the multi-start penalty search. Results depend only on these values."""

    restarts: int = 64
    seed: int = 0
    max_iterations: int = 3000
    penalty_weight_schedule: tuple = (1e2, 1e4, 1e6, 1e8)
    simplex_step: float = 0.3
    convergence_tol: float = 1e-10

    def __post_init__(self):
        if self.restarts <= 0 or self.max_iterations <= 0:
            raise ValueError("restarts and max_iterations must be positive")
        if self.simplex_step <= 0 or self.convergence_tol <= 0:
            raise ValueError("simplex_step and convergence_tol must be positive")
        weights = tuple(float(w) for w in self.penalty_weight_schedule)
        if not weights or weights[0] <= 0 or any(b <= a for a, b in zip(weights, weights[1:])):
            raise ValueError("penalty weights must be positive and strictly increasing")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "penalty_weight_schedule", weights)


@dataclass(frozen=True)
class OptimizationResult:
    value: float
    argmin_state: AlmostGhzState
    argmin_angles: tuple  # (A0, A1, B0, B1, C0, C1, t)
    achieved_violation: float
    feasible: bool
    iterations_used: int


def normalize_ordering(eigs) -> np.ndarray:
    """Put the larger of each ``(rho_0jk, rho_1jk)`` pair at i = 0."""
    e = np.asarray(eigs, dtype=float).reshape(-1)
    if e.size != 8 or np.any(e < -1e-12) or abs(e.sum() - 1.0) > 1e-9:
        raise ValueError("expected a probability vector of length 8")
    return np.concatenate([np.maximum(e[:4], e[4:]), np.minimum(e[:4], e[4:])])


# --- closed-form evaluation on the almost-GHZ family ------------------------
# Write g_u = <0u|rho|1ubar> = (lambda_0u - lambda_1u)/2 - i s_u and
# m_u = (lambda_0u + lambda_1u)/2. In-plane correlators only see g, and the
# adversary's conditional states split into 2 x 2 blocks d +- |c|.

# MABK_3 coefficient of each setting string (x_A, x_B, x_C)
_M3_TERMS = mabk_terms(3)


def _eta(x: float) -> float:
    return -x * math.log2(x) if x > 1e-300 else 0.0


def _coherences(lam: np.ndarray, s: np.ndarray):
    g = [complex(0.5 * (lam[0, u] - lam[1, u]), -s[u]) for u in range(4)]
    mid = [0.5 * (lam[0, u] + lam[1, u]) for u in range(4)]
    return g, mid


def _cis(x: float) -> complex:
    return complex(math.cos(x), math.sin(x))


def _full_correlator(g, pa: float, pb: float, pc: float) -> float:
    """``<A_pa (x) B_pb (x) C_pc>`` for in-plane observables: ``2 Re sum_u g_u e^{i beta_u}``."""
    eb, ec = _cis(pb), _cis(pc)
    inner = eb * (g[0] * ec + g[1] * ec.conjugate()) + eb.conjugate() * (g[2] * ec + g[3] * ec.conjugate())
    return 2.0 * (_cis(pa) * inner).real


def _m3_value(g, angles) -> float:
    ea = [_cis(angles[0]), _cis(angles[1])]
    eb = [_cis(angles[2]), _cis(angles[3])]
    ec = [_cis(angles[4]), _cis(angles[5])]
    total = 0j
    for (x, y, z), coeff in _M3_TERMS:
        b, c = eb[y], ec[z]
        cb, cc = b.conjugate(), c.conjugate()
        total += coeff * ea[x] * (b * (g[0] * c + g[1] * cc) + cb * (g[2] * c + g[3] * cc))
    return 2.0 * total.real


def _joint_entropy_single(g, mid, phi: float) -> float:
    """``H(X E)`` for Alice's outcome; both outcomes give the same spectrum."""
    e, ec = complex(math.cos(phi), math.sin(phi)), complex(math.cos(phi), -math.sin(phi))
    total = 0.0
    for u, ubar in ((0, 3), (1, 2)):
        d = 0.5 * (mid[u] + mid[ubar])
        c = 0.5 * abs(e * g[u] + ec * g[ubar].conjugate())
        total += _eta(d + c) + _eta(d - c)
    return 2.0 * total


def _joint_entropy_pair(g, phi: float, chi: float) -> float:
    """``H(X Y E)`` for Alice's and Bob's outcomes; each block is 1/8 +- k."""
    def ph(x):
        return complex(math.cos(x), math.sin(x))

    k = 0.25 * abs(
        g[0] * ph(phi + chi) + g[2] * ph(phi - chi) + g[3].conjugate() * ph(chi - phi) + g[1].conjugate() * ph(-phi - chi)
    )
    return 4.0 * (_eta(0.125 + k) + _eta(0.125 - k))


def family_cond_entropy(state: AlmostGhzState, angles, state_entropy: float | None = None) -> float:
    """``H(outcomes|E)`` for in-plane measurement of one (Alice) or two (Alice, Bob) parties."""
    g, mid = _coherences(state.lambdas, state.s)
    if state_entropy is None:
        state_entropy = shannon_entropy(eigvals_almost_ghz3(state))
    if len(angles) == 1:
        return _joint_entropy_single(g, mid, angles[0]) - state_entropy
    if len(angles) == 2:
        return _joint_entropy_pair(g, angles[0], angles[1]) - state_entropy
    raise ValueError("only one or two measured parties are supported")


def family_mabk_value(state: AlmostGhzState, angles) -> float:
    """``<M_3>`` for in-plane settings ``(A0, A1, B0, B1, C0, C1)``."""
    g, _ = _coherences(state.lambdas, state.s)
    return _m3_value(g, angles)


# --- penalty search ---------------------------------------------------------


def _decode(x: np.ndarray):
    y = x[:8] ** 2
    total = y.sum()
    eigs = np.full(8, 0.125) if total <= 0 else normalize_ordering(y / total)
    t = min(max(float(x[8]), -math.pi / 2), math.pi / 2)
    angles = [float(a) for a in x[9:15]]
    return eigs, t, angles


def _fast_state(x) -> tuple[list, list, list, float, list]:
    """Plain-float version of ``_decode`` plus ``state_from_spectrum`` for the inner loop."""
    y = [v * v for v in x[:8]]
    total = sum(y) or 1.0
    hi = [max(y[k], y[k + 4]) / total for k in range(4)]
    lo = [min(y[k], y[k + 4]) / total for k in range(4)]
    t = min(max(x[8], -math.pi / 2), math.pi / 2)
    c2, s2 = math.cos(t) ** 2, math.sin(t) ** 2
    r0, r1 = hi[3], lo[3]
    g = [complex(0.5 * (hi[u] - lo[u]), 0.0) for u in range(3)]
    mid = [0.5 * (hi[u] + lo[u]) for u in range(4)]
    # u = 11 block rotated by t: lambda_0 - lambda_1 = (r0 - r1) cos 2t, s = (r0 - r1) sin t cos t
    g.append(complex(0.5 * (r0 - r1) * (c2 - s2), -(r0 - r1) * math.sin(t) * math.cos(t)))
    return g, mid, hi + lo, t, list(x[9:15])


class _Problem:
    def __init__(self, m: float, pair: bool, setting: int = 0):
        self.m = m
        self.target = min(m + TARGET_MARGIN, 4.0)
        self.pair = pair
        self.setting = setting
        self.mu = 1.0

    def evaluate(self, x):
        g, mid, eigs, _, angles = _fast_state(x.tolist() if isinstance(x, np.ndarray) else x)
        h_state = sum(_eta(v) for v in eigs)
        if self.pair:
            value = _joint_entropy_pair(g, angles[0], angles[2]) - h_state
        else:
            value = _joint_entropy_single(g, mid, angles[self.setting]) - h_state
        return value, _m3_value(g, angles)

    def __call__(self, x: np.ndarray) -> float:
        value, viol = self.evaluate(x)
        short = self.target - viol
        return value + self.mu * short * short if short > 0 else value


def _initial_point(rng: np.random.Generator) -> np.ndarray:
    x = np.empty(N_PARAMS)
    x[:8] = rng.uniform(0.0, 1.0, 8)
    x[8] = rng.uniform(-math.pi / 2, math.pi / 2)
    x[9:] = rng.uniform(0.0, 2.0 * math.pi, 6)
    return x


def _run_restart(problem: _Problem, x0: np.ndarray, cfg: OptimizerConfig):
    x = x0
    used = 0
    simplex_step = cfg.simplex_step
    for mu in cfg.penalty_weight_schedule:
        problem.mu = mu
        simplex = np.vstack([x, x + simplex_step * np.eye(N_PARAMS)])
        res = minimize(
            problem,
            x,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "maxfev": cfg.max_iterations,
                "xatol": cfg.convergence_tol,
                "fatol": cfg.convergence_tol,
                "adaptive": True,
            },
        )
        x = res.x
        used += int(res.nfev)
        # later stages only polish
        simplex_step = max(0.1 * simplex_step, 1e-3)
    return x, used


def _minimize(m: float, pair: bool, cfg: OptimizerConfig | None, setting: int = 0) -> OptimizationResult:
    cfg = cfg or OptimizerConfig()
    if not 2.0 - 1e-12 <= m <= 4.0 + 1e-12:
        raise ValueError(f"violation {m!r} outside [2, 4]")
    m = min(max(float(m), 2.0), 4.0)
    problem = _Problem(m, pair, setting)
    best = None
    for rng in (np.random.default_rng(s) for s in np.random.SeedSequence(int(cfg.seed)).spawn(cfg.restarts)):
        x, used = _run_restart(problem, _initial_point(rng), cfg)
        value, viol = problem.evaluate(x)
        feasible = viol >= m - FEASIBILITY_TOL
        key = (not feasible, value if feasible else m - viol)
        if best is None or key < best[0]:
            best = (key, x, value, viol, feasible, used)
    _, x, value, viol, feasible, used = best
    eigs, t, angles = _decode(x)
    return OptimizationResult(
        value=float(value),
        argmin_state=state_from_spectrum(eigs, t),
        argmin_angles=tuple(angles) + (t,),
        achieved_violation=float(viol),
        feasible=bool(feasible),
        iterations_used=used,
    )


def minimize_hxe(m: float, cfg: OptimizerConfig | None = None, setting: int = 0) -> OptimizationResult:
    """Smallest H(X|E) found over the almost-GHZ family with ``<M_3> >= m``.

    ``setting`` picks which of Alice's two observables produces X.
    """
    if setting not in (0, 1):
        raise ValueError("Alice has settings 0 and 1")
    return _minimize(m, pair=False, cfg=cfg, setting=setting)


def minimize_hxy(m: float, cfg: OptimizerConfig | None = None) -> OptimizationResult:
    """Smallest H(X_A0 Y_B0|E) found over the almost-GHZ family with ``<M_3> >= m``."""
    return _minimize(m, pair=True, cfg=cfg)


def lower_convex_envelope(xs, ys) -> np.ndarray:
    """Lower convex hull of the points ``(xs, ys)`` evaluated back at ``xs``.

    Numerical minima only upper-bound the true curve; any convex combination
    of feasible points is feasible for the mixed state, so the envelope is
    still an upper bound.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs)
    hull: list[int] = []
    for i in order:
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (xs[i1] - xs[i0]) * (ys[i] - ys[i0]) - (ys[i1] - ys[i0]) * (xs[i] - xs[i0])
            if cross > 0:
                break
            hull.pop()
        hull.append(i)
    return np.interp(xs, xs[hull], ys[hull])


# --- brute-force MABK maximization -------------------------------------------


@dataclass(frozen=True)
class BruteForceResult:
    value: float
    config: tuple
    restarts: int = field(default=0)

    def __iter__(self):
        yield self.value
        yield self.config


def _party_gradient(tensor, vecs, party: int, terms, n: int) -> list[np.ndarray]:
    """Linear coefficients of ``<M_n>`` in each setting vector of one party."""
    grads = [np.zeros(4), np.zeros(4)]
    for x, coeff in terms:
        out = tensor
        # contract every other party, highest index first so axes stay aligned
        for j in range(n - 1, -1, -1):
            if j != party:
                out = np.tensordot(out, vecs[j][x[j]], axes=([j], [0]))
        grads[x[party]] += coeff * out
    return grads


def _best_response(w: np.ndarray, allow_fixed: bool, current: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(w[1:]))
    best = current
    best_val = float(w @ current)
    if norm > 0 and norm > best_val:
        best, best_val = np.concatenate([[0.0], w[1:] / norm]), norm
    if allow_fixed and abs(w[0]) > best_val:
        best = np.array([math.copysign(1.0, w[0]), 0.0, 0.0, 0.0])
    return best


def _random_setting(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return np.concatenate([[0.0], v / np.linalg.norm(v)])


def _value(tensor, vecs, terms) -> float:
    total = 0.0
    for x, coeff in terms:
        out = tensor
        for j in range(len(x) - 1, -1, -1):
            out = np.tensordot(out, vecs[j][x[j]], axes=([j], [0]))
        total += coeff * float(out)
    return total


def _to_setting(vec: np.ndarray) -> MeasurementSetting:
    if np.linalg.norm(vec[1:]) < 0.5:
        return fixed(1 if vec[0] >= 0 else -1)
    return bloch(vec[1:])


def brute_force_mabk_max(rho, n: int, allow_fixed: bool = False, cfg: OptimizerConfig | None = None) -> BruteForceResult:
    """Maximize ``<M_n>`` over Bloch-sphere settings (and +-identity if allowed).

    Multi-start see-saw: ``<M_n>`` is linear in each setting's Pauli vector,
    so the best response for one setting, all others fixed, is the
    normalized gradient (or the fixed outcome matching the identity weight).
    Sweeps repeat until the value stops improving.
    """
    cfg = cfg or OptimizerConfig(restarts=16)
    rho = check_density_matrix(rho)
    tensor = pauli_tensor(rho, n)
    terms = mabk_terms(n)
    best_val, best_vecs = -math.inf, None
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(int(cfg.seed)).spawn(cfg.restarts)]
    for rng in rngs:
        vecs = [[_random_setting(rng), _random_setting(rng)] for _ in range(n)]
        if allow_fixed and rng.uniform() < 0.5:
            # start some restarts with one party on a fixed outcome
            vecs[int(rng.integers(n))][int(rng.integers(2))] = np.array([1.0, 0.0, 0.0, 0.0])
        current = _value(tensor, vecs, terms)
        for _ in range(cfg.max_iterations):
            for party in range(n):
                # a party's two settings never share a term, so both update at once
                grads = _party_gradient(tensor, vecs, party, terms, n)
                for k in (0, 1):
                    vecs[party][k] = _best_response(grads[k], allow_fixed, vecs[party][k])
            new = _value(tensor, vecs, terms)
            if new - current <= cfg.convergence_tol:
                current = max(new, current)
                break
            current = new
        if current > best_val:
            best_val, best_vecs = current, [[v.copy() for v in pair] for pair in vecs]
    config = tuple((_to_setting(a), _to_setting(b)) for a, b in best_vecs)
    return BruteForceResult(float(best_val), config, cfg.restarts)


# --- optimality of the tau family ---------------------------------------------


@dataclass(frozen=True)
class TauOptimalityReport:
    m: float
    samples: int
    violations: int
    worst_margin: float
    reference: float


def _pull_to_violation(base: np.ndarray, vertex: np.ndarray, m: float) -> np.ndarray:
    """Largest weight w on ``base`` with ``corollary1_bound(w base + (1-w) vertex) >= m``.

    The squared bound is a convex quadratic in w that is >= m^2/16 at w = 0
    and below it at w = 1, so the smaller root is the answer.
    """
    diff0 = vertex[:4] - vertex[4:]
    v = (base[:4] - base[4:]) - diff0
    a, b, c = float(v @ v), float(diff0 @ v), float(diff0 @ diff0) - m * m / 16.0
    w = (-b - math.sqrt(max(b * b - a * c, 0.0))) / a
    w = min(max(w, 0.0), 1.0)
    return w * base + (1.0 - w) * vertex


def verify_tau_optimality(m: float, samples: int = 10_000, cfg: OptimizerConfig | None = None) -> TauOptimalityReport:
    """Check ``closed_form_hxe(rho) >= 1 - h(nu_m)`` on random diagonal spectra with violation >= m.

    Each sample draws a Dirichlet spectrum, orders it, and pulls it toward
    the vertex ``rho_000 = 1`` just far enough that the eigenvalue bound
    reaches ``m``.
    """
    cfg = cfg or OptimizerConfig()
    m = _clamp(m, 2.0 * SQRT2, 4.0)
    reference = 1.0 - binary_entropy(tau_weight(m))
    rng = np.random.default_rng(np.random.SeedSequence(int(cfg.seed)))
    vertex = np.zeros(8)
    vertex[0] = 1.0
    violations = 0
    worst = math.inf
    for _ in range(samples):
        alpha = rng.uniform(0.05, 2.0)
        base = normalize_ordering(rng.dirichlet(np.full(8, alpha)))
        eigs = base if corollary1_bound(base) >= m else _pull_to_violation(base, vertex, m)
        margin = closed_form_hxe(eigs) - reference
        worst = min(worst, margin)
        if margin < -1e-9:
            violations += 1
    return TauOptimalityReport(m, samples, violations, worst, reference)


# --- critical points of the pair-entropy problem ----------------------------


@dataclass(frozen=True)
class KktResult:
    best_case: str
    distribution: tuple
    entropy: float
    candidates: dict


def _two_level(m: float, n_high: int, n_low: int):
    """``n_high`` copies of a and ``n_low`` copies of b, a >= b >= 0, on the active constraint.

    Solves ``n_high a + n_low b = 1`` and ``n_high a^2 + n_low b^2 = m^2 / 16``.
    """
    q = m * m / 16.0
    if n_low == 0:
        return (1.0 / n_high,) * n_high if abs(1.0 / n_high - q) <= 1e-12 else None
    k = n_high + n_low
    disc = n_high * n_low * (k * q - 1.0)
    if disc < -1e-12:
        return None
    a = (n_high + math.sqrt(max(disc, 0.0))) / (n_high * k)
    b = (1.0 - n_high * a) / n_low
    if b < -1e-12:
        return None
    return (a,) * n_high + (max(b, 0.0),) * n_low


# (copies of the larger value, copies of the smaller value, zeros, constraint active).
# Inactive cases a-d take one value, which must satisfy sum rho^2 >= m^2/16.
# Active cases i-x take at most two values fixed by the two equalities.
_KKT_CASES = {
    "a": (4, 0, 0, False),
    "b": (3, 0, 1, False),
    "c": (2, 0, 2, False),
    "d": (1, 0, 3, False),
    "i": (4, 0, 0, True),
    "ii": (3, 1, 0, True),
    "iii": (1, 3, 0, True),
    "iv": (2, 2, 0, True),
    "v": (3, 0, 1, True),
    "vi": (2, 1, 1, True),
    "vii": (1, 2, 1, True),
    "viii": (1, 1, 2, True),
    "ix": (2, 0, 2, True),
    "x": (1, 0, 3, True),
}


def _case_distribution(m: float, case: str):
    n_high, n_low, n_zero, active = _KKT_CASES[case]
    if active:
        dist = _two_level(m, n_high, n_low)
    else:
        dist = (1.0 / n_high,) * n_high if 1.0 / n_high >= m * m / 16.0 - 1e-12 else None
    return None if dist is None else tuple(dist) + (0.0,) * n_zero


def kkt_enumerate(m: float) -> KktResult:
    """Evaluate every critical case of ``max H(rho_0jk)`` subject to ``sum rho_0jk^2 >= m^2/16``.

    Returns the winning case label, its ordered distribution and entropy,
    plus every feasible candidate as ``{label: (distribution, entropy)}``.
    """
    m = _clamp(m, 2.0, 4.0)
    candidates = {}
    for case in _KKT_CASES:
        dist = _case_distribution(m, case)
        if dist is not None:
            candidates[case] = (dist, shannon_entropy(dist))
    best_entropy = max(h for _, h in candidates.values())
    # ties at the endpoints (uniform at m = 2, a point mass at m = 4) go to iii
    winners = [c for c, (_, h) in candidates.items() if h >= best_entropy - 1e-12]
    best_case = "iii" if "iii" in winners else winners[0]
    dist, h = candidates[best_case]
    return KktResult(best_case, dist, h, candidates)
