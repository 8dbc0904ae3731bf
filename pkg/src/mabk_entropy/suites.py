"""Invariant suites behind ``mabk-entropy verify``.

Each check returns a ``CheckResult`` holding its worst margin against the
pinned tolerance, so failures name what broke and by how much.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import entropy, ghz, mabk, optimize, reduction, violation
from .linalg import random_density_matrix


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float  # largest observed deviation (or smallest margin, see detail)
    tol: float
    detail: str = ""

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"CHECK {self.name} status={status} worst={self.worst:.3e} tol={self.tol:.1e} {self.detail}".rstrip()


def _deviation(name: str, values, tol: float, detail: str = "") -> CheckResult:
    worst = max((abs(float(v)) for v in values), default=0.0)
    return CheckResult(name, worst <= tol, worst, tol, detail)


def _random_directions(rng, n: int):
    out = []
    for _ in range(n):
        pair = []
        for _ in range(2):
            v = rng.normal(size=3)
            pair.append(v / np.linalg.norm(v))
        out.append(tuple(pair))
    return out


def _random_config(rng, n: int):
    return mabk.make_config((mabk.bloch(a), mabk.bloch(b)) for a, b in _random_directions(rng, n))


# --- reduction ------------------------------------------------------------------


def reduction_suite(trials: int = 50, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    marg, bell, block, idem, rot, gauge, stats, ent = [], [], [], [], [], [], [], []
    for _ in range(trials):
        rho = random_density_matrix(8, rng)
        sym = reduction.symmetrize(rho, 3)
        angles = rng.uniform(0, 2 * math.pi, 6)
        probs = reduction.statistics(sym, 3, angles[::2])
        marg.extend(reduction.strict_subset_marginals(probs).values())
        cfg = mabk.config_from_angles(angles)
        bell.append(mabk.mabk_expectation(rho, 3, cfg) - mabk.mabk_expectation(sym, 3, cfg))
        block.append(reduction.ghz_block_check(sym, 3)[1])
        idem.append(np.max(np.abs(reduction.symmetrize(sym, 3) - sym)))

        thetas = rng.uniform(0, 2 * math.pi, 3)
        rotated = reduction.apply_local_z_rotations(sym, thetas)
        before, after = reduction.block_parameters(sym, 3), reduction.block_parameters(rotated, 3)
        for u, (l0, l1, r, s) in before.items():
            expected = reduction.rotated_block_params(l0, l1, s, reduction.block_angle(thetas, u))
            rot.extend(np.subtract(expected, (after[u][0], after[u][1], after[u][3])))
            rot.append(r - after[u][2])

        _, fixed = reduction.gauge_fix(sym, 3)
        params = reduction.block_parameters(fixed, 3)
        for u in ghz.default_zero_blocks(3):
            gauge.append(params[u][3])
            gauge.append(min(0.0, params[u][0] - params[u][1]))

        minus = reduction.flip_real_offdiagonals(fixed)
        stats.append(reduction.pair_statistics_agree(fixed, minus, 3, [rng.uniform(0, 2 * math.pi, 3) for _ in range(4)]))
        if len(ent) < 20:
            phi_x, phi_y = rng.uniform(0, 2 * math.pi, 2)
            (hx_p, hxy_p), (hx_m, hxy_m) = reduction.pm_entropies(fixed, minus, phi_x, phi_y)
            mix = entropy.cond_entropy_single(0.5 * (fixed + minus), phi_x)
            ent.extend([hx_p - hx_m, hxy_p - hxy_m, max(0.0, mix - hx_p)])

    results = [
        _deviation("reduction.twirl_marginals", marg, 1e-10),
        _deviation("reduction.twirl_preserves_mabk", bell, 1e-10),
        _deviation("reduction.twirl_ghz_blocked", block, 1e-10),
        _deviation("reduction.twirl_idempotent", idem, 1e-12),
        _deviation("reduction.rotation_block_formula", rot, 1e-10),
        _deviation("reduction.gauge_fix", gauge, 1e-10),
        _deviation("reduction.pm_statistics", stats, 1e-10),
        _deviation("reduction.pm_entropies", ent, 1e-8),
    ]
    results.extend(_block_split_checks(rng, trials))
    results.append(_nonincrease_check(rng, max(5, trials // 5)))
    results.append(_flagged_check(rng))
    return results


def _random_projector(rng, dim: int, rank: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank)))
    return q @ q.conj().T


def _block_split_checks(rng, trials: int) -> list[CheckResult]:
    rank_err, recon_err, ortho_err = [], [], []
    for k in range(trials):
        dim = int(rng.integers(2, 7))
        p0 = _random_projector(rng, dim, int(rng.integers(0, dim + 1)))
        q0 = _random_projector(rng, dim, int(rng.integers(0, dim + 1))) if k % 5 else p0
        ops = (p0, np.eye(dim) - p0, q0, np.eye(dim) - q0)
        dec = reduction.block_diagonalize(*ops)
        for block in dec.blocks:
            for r in block.restrictions:
                vals, vecs = np.linalg.eigh(r)
                top = vecs[:, -1]
                rank_err.append(np.max(np.abs(r - np.outer(top, top.conj()))))
        real = [b.basis for b in dec.blocks if not b.artificial] + [b.basis[:, :1] for b in dec.blocks if b.artificial]
        basis = np.column_stack(real) if real else np.zeros((dim, 0))
        ortho_err.append(np.max(np.abs(basis.conj().T @ basis - np.eye(basis.shape[1]))))
        ortho_err.append(basis.shape[1] - dim)
        for idx, op in enumerate(ops):
            recon_err.append(np.max(np.abs(reduction.reconstruct(dec, idx) - op)))
    return [
        _deviation("reduction.block_split_rank_one", rank_err, 1e-9),
        _deviation("reduction.block_split_orthonormal", ortho_err, 1e-9),
        _deviation("reduction.block_split_reconstruct", recon_err, 1e-9),
    ]


def _nonincrease_check(rng, states: int) -> CheckResult:
    worst = math.inf
    for _ in range(states):
        report = reduction.entropy_nonincrease_check(random_density_matrix(8, rng), trials=2, seed=int(rng.integers(2**32)))
        worst = min(worst, report.worst_margin)
    return CheckResult("reduction.entropy_nonincrease", worst >= -1e-8, worst, 1e-8, "worst=min H(rho)-H(twirl)")


def _flagged_check(rng) -> CheckResult:
    rho = random_density_matrix(8, rng)
    rep = reduction.flagged_purification_check(rho, float(rng.uniform(0, 2 * math.pi)))
    devs = [b - rep.h_original for b in rep.h_branches]
    devs.append(rep.h_total - rep.h_twirled)
    devs.append(max(0.0, rep.h_total - rep.h_flag))
    return _deviation("reduction.flagged_purification", devs, 1e-8)


# --- appendices -------------------------------------------------------------------


def appendices_suite(trials: int = 50, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    closed, props, decomp = [], [], []
    for n in (2, 3, 4, 5):
        for _ in range(max(1, trials // 10)):
            cfg = _random_config(rng, n)
            closed.append(np.max(np.abs(mabk.mabk_closed(n, cfg) - mabk.mabk_recursive(n, cfg))))
    for _ in range(trials):
        for n in (3, 4):
            props.extend(violation.structured_vector_residuals(n, _random_directions(rng, n)).values())
        n = int(rng.integers(2, 6))
        dirs = _random_directions(rng, n)
        rho = random_density_matrix(2**n, rng)
        cfg = mabk.make_config((mabk.bloch(a), mabk.bloch(b)) for a, b in dirs)
        matrix = violation.correlation_matrix(rho, n).matrix
        decomp.append(violation.expectation_from_matrix(matrix, n, dirs) - mabk.mabk_expectation(rho, n, cfg))

    hxe, cform, eig = [], [], []
    for k in range(trials):
        diag = ghz.random_almost_ghz(3, rng, diagonal=True)
        hxe.append(entropy.closed_form_hxe(ghz.eigvals_almost_ghz3(diag)) - entropy.cond_entropy_single(ghz.to_density_matrix(diag), 0.0))
        state = ghz.random_almost_ghz(3, rng)
        rho = ghz.to_density_matrix(state)
        phi_x, phi_y = rng.uniform(0, 2 * math.pi, 2)
        cform.append(entropy.pair_entropy_via_C(state, None, phi_x, phi_y) - entropy.cond_entropy_pair_given_outcomes(rho, phi_x, phi_y))
        eig.append(np.max(np.abs(np.sort(ghz.eigvals_almost_ghz3(state)) - np.sort(np.linalg.eigvalsh(rho)))))

    tau = []
    samples = max(100, 200 * trials)
    for m in (2.9, 3.2, 3.6):
        report = optimize.verify_tau_optimality(m, samples, optimize.OptimizerConfig(seed=int(rng.integers(2**32))))
        tau.append(CheckResult(f"appendices.tau_optimal_m{m}", report.violations == 0, report.worst_margin, 1e-9, f"samples={samples} violations={report.violations}"))

    kkt = []
    wrong = 0
    for m in rng.uniform(2.0, 4.0, trials):
        res = optimize.kkt_enumerate(m)
        nu = entropy.nu_m_pair(m)
        expected = (nu,) + ((1 - nu) / 3,) * 3
        wrong += res.best_case != "iii"
        kkt.append(np.max(np.abs(np.subtract(res.distribution, expected))))
        kkt.append(res.entropy - entropy.shannon_entropy(expected))

    return [
        _deviation("appendices.closed_vs_recursive", closed, 1e-10),
        _deviation("appendices.vector_properties", props, 1e-10, "n=3,4"),
        _deviation("appendices.matrix_decomposition", decomp, 1e-10),
        _deviation("appendices.hxe_closed_form", hxe, 1e-8),
        _deviation("appendices.pair_entropy_C", cform, 1e-8),
        _deviation("appendices.eigenvalues", eig, 1e-10),
        *tau,
        CheckResult("appendices.kkt_case_iii", wrong == 0 and max(map(abs, kkt)) <= 1e-10, max(map(abs, kkt)), 1e-10, f"non_iii={wrong}"),
    ]


# --- bounds ------------------------------------------------------------------------


def bounds_suite(trials: int = 100, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    bf_cfg = optimize.OptimizerConfig(restarts=8, seed=seed)
    gaps = []
    for _ in range(trials):
        rank = int(rng.integers(1, 9))
        rho = random_density_matrix(8, rng, rank=rank)
        best = optimize.brute_force_mabk_max(rho, 3, False, bf_cfg).value
        for variant in violation.VARIANTS:
            gaps.append(max(0.0, best - violation.theorem2_bound(rho, 3, variant).bound))

    ends = [
        entropy.bound_F(2 * math.sqrt(2)),
        entropy.bound_F(4.0) - 1.0,
        entropy.bound_G(2.0),
        entropy.bound_G(4.0) - 2.0,
    ]
    nparty = [entropy.bound_F_nparty(3, m) - entropy.bound_F(m) for m in np.linspace(2 * math.sqrt(2), 4.0, 100)]

    ghz3 = ghz.ghz_projector(3)
    gb = violation.theorem2_bound(ghz3, 3)
    witness = violation.tightness_witness(gb)
    ghz_devs = [gb.bound - 4.0]
    ghz_devs.append(1.0 if witness is None else mabk.mabk_expectation(ghz3, 3, witness) - 4.0)

    bell = np.zeros(4)
    bell[0] = bell[3] = 1 / math.sqrt(2)
    fixed_state = np.kron(np.eye(2) / 2, np.outer(bell, bell))
    restricted = optimize.brute_force_mabk_max(fixed_state, 3, False, bf_cfg).value
    with_fixed = optimize.brute_force_mabk_max(fixed_state, 3, True, bf_cfg).value

    return [
        CheckResult("bounds.correlation_bound_soundness", max(gaps) <= 1e-6, max(gaps), 1e-6, f"states={trials}"),
        _deviation("bounds.entropy_endpoints", ends, 1e-12),
        _deviation("bounds.nparty_consistency", nparty, 1e-15),
        _deviation("bounds.ghz_bound_and_witness", ghz_devs, 1e-6),
        CheckResult("bounds.fixed_outcome_state_rank_one", restricted <= 2 + 1e-6, restricted, 1e-6, "value must stay <= 2"),
        _deviation("bounds.fixed_outcome_state_with_fixed", [with_fixed - 2 * math.sqrt(2)], 1e-6),
    ]


SUITES = {"reduction": reduction_suite, "appendices": appendices_suite, "bounds": bounds_suite}


def run_suite(name: str, trials: int | None = None, seed: int = 0) -> list[CheckResult]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for suite in names:
        fn = SUITES[suite]
        out.extend(fn(seed=seed) if trials is None else fn(trials=trials, seed=seed))
    return out

