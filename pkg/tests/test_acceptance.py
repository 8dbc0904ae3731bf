"""Acceptance criteria 1 to 13, one verdict line each.

Tolerances are pinned in the constants below. Criterion 8 runs the full
20-point, 64-restart sweep and takes about a quarter of an hour.
"""

import math
import time

import numpy as np

from mabk_entropy import entropy, ghz, mabk, optimize, reduction, suites, violation
from mabk_entropy.linalg import I2, random_density_matrix, random_unitary

SQRT2 = math.sqrt(2)
ENDPOINT_TOL = 1e-12
NPARTY_TOL = 1e-15
SOUNDNESS_TOL = 1e-6
REMARK_TOL = 1e-6
GHZ_BOUND_TOL = 1e-9
WITNESS_TOL = 1e-6
GME_HXE_TOL = 1e-3
TAU_HALF_TOL = 1e-8
SANDWICH_TOL = 1e-4
NUMERIC_ENDPOINT_TOL = 1e-3
CLOSED_FORM_TOL = 1e-8
EIGEN_TOL = 1e-10
MABK_TOL = 1e-10
KKT_TOL = 1e-10
REDUCTION_TOL = 1e-10
PM_TOL = 1e-8
BLOCK_TOL = 1e-9
SEED = 20240611


def _random_directions(rng, n):
    out = []
    for _ in range(n):
        a, b = rng.normal(size=(2, 3))
        out.append((a / np.linalg.norm(a), b / np.linalg.norm(b)))
    return out


def test_criterion_01_single_bound_endpoints(criterion):
    lo, hi = entropy.bound_F(2 * SQRT2), entropy.bound_F(4.0)
    reps = 10_000
    start = time.perf_counter()
    for _ in range(reps):
        entropy.bound_F(3.3)
    per_call = (time.perf_counter() - start) / reps
    ok = abs(lo) <= ENDPOINT_TOL and abs(hi - 1) <= ENDPOINT_TOL and per_call < 1e-3
    assert criterion(1, ok, f"F(2sqrt2)={lo:.3e} F(4)={hi:.15f} per_call={per_call * 1e6:.1f}us")


def test_criterion_02_pair_bound_endpoints(criterion):
    lo, hi = entropy.bound_G(2.0), entropy.bound_G(4.0)
    ok = abs(lo) <= ENDPOINT_TOL and abs(hi - 2) <= ENDPOINT_TOL
    assert criterion(2, ok, f"G(2)={lo:.3e} G(4)={hi:.15f}")


def test_criterion_03_nparty_consistency(criterion):
    worst = max(abs(entropy.bound_F_nparty(3, m) - entropy.bound_F(m)) for m in np.linspace(2 * SQRT2, 4, 100))
    assert criterion(3, worst <= NPARTY_TOL, f"max|F_3 - F|={worst:.3e} over 100 points in [2sqrt2, 4]")


def test_criterion_04_eigenvalue_bound_soundness(criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = -math.inf
    for k in range(100):
        rho = random_density_matrix(8, rng)
        found = optimize.brute_force_mabk_max(rho, 3, cfg=optimize.OptimizerConfig(restarts=16, seed=k)).value
        worst = max(worst, max(found - violation.theorem2_bound(rho, 3, v).bound for v in violation.VARIANTS))
    elapsed = time.perf_counter() - start
    ok = worst <= SOUNDNESS_TOL and elapsed < 300
    assert criterion(4, ok, f"max(brute - bound)={worst:.3e} over 100 states x 3 variants, {elapsed:.1f}s")


def test_criterion_05_fixed_outcome_example(criterion, fixed_outcome_state):
    rank_one = optimize.brute_force_mabk_max(fixed_outcome_state, 3, allow_fixed=False).value
    with_fixed = optimize.brute_force_mabk_max(fixed_outcome_state, 3, allow_fixed=True).value
    ok = rank_one <= 2 + REMARK_TOL and abs(with_fixed - 2 * SQRT2) <= REMARK_TOL
    assert criterion(5, ok, f"rank-one max={rank_one:.9f} with fixed outcomes={with_fixed:.9f}")


def test_criterion_06_ghz_quantum_bound(criterion, ghz3):
    bound = violation.theorem2_bound(ghz3, 3)
    cfg = violation.tightness_witness(bound)
    achieved = mabk.mabk_expectation(ghz3, 3, cfg) if cfg is not None else math.nan
    ok = abs(bound.bound - 4) <= GHZ_BOUND_TOL and abs(achieved - 4) <= WITNESS_TOL
    assert criterion(6, ok, f"bound={bound.bound:.12f} witness value={achieved:.12f}")


def test_criterion_07_gme_threshold(criterion):
    res = optimize.minimize_hxe(2 * SQRT2, optimize.OptimizerConfig(restarts=16, seed=SEED))
    tau = entropy.cond_entropy_single(ghz.to_density_matrix(ghz.tau_state(0.5)), 0.0)
    ok = res.feasible and res.value <= GME_HXE_TOL and abs(tau) <= TAU_HALF_TOL
    assert criterion(7, ok, f"min H(X|E) at 2sqrt2={res.value:.3e} H(X|E) of tau(1/2) at angle 0={tau:.3e}")


def test_criterion_08_numeric_sandwich(criterion):
    grid = np.sort(np.append(np.linspace(2.0, 4.0, 19), 2 * SQRT2))
    cfg = optimize.OptimizerConfig(restarts=64, seed=SEED)
    start = time.perf_counter()
    rows = []
    for m in grid:
        m = float(m)
        rows.append((m, optimize.minimize_hxe(m, cfg), optimize.minimize_hxy(m, cfg)))
    elapsed = time.perf_counter() - start
    gap_x = min(r1.value - entropy.bound_F(m) for m, r1, _ in rows)
    gap_xy = min(r2.value - entropy.bound_G(m) for m, _, r2 in rows)
    feasible = all(r1.feasible and r2.feasible for _, r1, r2 in rows)
    at_gme = next(r1.value for m, r1, _ in rows if m == 2 * SQRT2)
    end_x, end_xy = rows[-1][1].value, rows[-1][2].value
    ok = (
        feasible
        and gap_x >= -SANDWICH_TOL
        and gap_xy >= -SANDWICH_TOL
        and at_gme <= GME_HXE_TOL
        and abs(end_x - 1) <= NUMERIC_ENDPOINT_TOL
        and abs(end_xy - 2) <= NUMERIC_ENDPOINT_TOL
        and elapsed < 1800
    )
    for m, r1, r2 in rows:
        print(f"  m={m:.6f} HXE={r1.value:.6f} F={entropy.bound_F(m):.6f} HXY={r2.value:.6f} G={entropy.bound_G(m):.6f}")
    detail = (
        f"min(HXE-F)={gap_x:.3e} min(HXY-G)={gap_xy:.3e} HXE(2sqrt2)={at_gme:.3e} "
        f"HXE(4)={end_x:.6f} HXY(4)={end_xy:.6f} {elapsed:.0f}s"
    )
    assert criterion(8, ok, detail)


def test_criterion_09_closed_forms(criterion):
    rng = np.random.default_rng(SEED)
    hxe, pair, eig = [], [], []
    for _ in range(50):
        diag = ghz.random_almost_ghz(3, rng, diagonal=True)
        hxe.append(abs(entropy.closed_form_hxe(ghz.eigvals_almost_ghz3(diag)) - entropy.cond_entropy_single(ghz.to_density_matrix(diag), 0.0)))
        state = ghz.random_almost_ghz(3, rng)
        rho = ghz.to_density_matrix(state)
        phi_x, phi_y = rng.uniform(0, 2 * math.pi, size=2)
        pair.append(abs(entropy.pair_entropy_via_C(state, None, phi_x, phi_y) - entropy.cond_entropy_pair_given_outcomes(rho, phi_x, phi_y)))
        eig.append(np.max(np.abs(np.sort(ghz.eigvals_almost_ghz3(state)) - np.linalg.eigvalsh(rho))))
    ok = max(hxe) <= CLOSED_FORM_TOL and max(pair) <= CLOSED_FORM_TOL and max(eig) <= EIGEN_TOL
    assert criterion(9, ok, f"H(X|E) dev={max(hxe):.3e} H(E|XY) dev={max(pair):.3e} eigenvalue dev={max(eig):.3e}")


def test_criterion_10_mabk_operators(criterion):
    rng = np.random.default_rng(SEED)
    closed = 0.0
    for n in (2, 3, 4, 5):
        for _ in range(10):
            cfg = mabk.make_config((mabk.bloch(a), mabk.bloch(b)) for a, b in _random_directions(rng, n))
            closed = max(closed, float(np.max(np.abs(mabk.mabk_closed(n, cfg) - mabk.mabk_recursive(n, cfg)))))
    props = 0.0
    for _ in range(50):
        for n in (3, 4):
            props = max(props, *(abs(v) for v in violation.structured_vector_residuals(n, _random_directions(rng, n)).values()))
            dirs = _random_directions(rng, n)
            rho = random_density_matrix(2**n, rng)
            cfg = mabk.make_config((mabk.bloch(a), mabk.bloch(b)) for a, b in dirs)
            matrix = violation.correlation_matrix(rho, n).matrix
            props = max(props, abs(violation.expectation_from_matrix(matrix, n, dirs) - mabk.mabk_expectation(rho, n, cfg)))
    ok = closed <= MABK_TOL and props <= MABK_TOL
    assert criterion(10, ok, f"closed vs recursive={closed:.3e} structured-vector identities={props:.3e}")


def test_criterion_11_tau_optimality(criterion):
    reports = {m: optimize.verify_tau_optimality(m, samples=10_000) for m in (2.9, 3.2, 3.6)}
    ok = all(r.violations == 0 for r in reports.values())
    detail = " ".join(f"m={m}: violations={r.violations} worst_margin={r.worst_margin:.3e}" for m, r in reports.items())
    assert criterion(11, ok, detail)


def test_criterion_12_kkt(criterion):
    rng = np.random.default_rng(SEED)
    wrong, worst = 0, 0.0
    for m in rng.uniform(2, 4, size=50):
        res = optimize.kkt_enumerate(float(m))
        nu = 0.25 + math.sqrt(3) / 8 * math.sqrt(m * m - 4)
        expected = [nu] + [(1 - nu) / 3] * 3
        wrong += res.best_case != "iii"
        worst = max(worst, float(np.max(np.abs(np.subtract(res.distribution, expected)))))
        worst = max(worst, abs(res.entropy - entropy.shannon_entropy(expected)))
    assert criterion(12, wrong == 0 and worst <= KKT_TOL, f"non-(iii)={wrong} max deviation={worst:.3e}")


def test_criterion_13_reduction(criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    marg = mabk_dev = block = pm = 0.0
    for _ in range(50):
        rho = random_density_matrix(8, rng)
        twirled = reduction.symmetrize(rho, 3)
        probs = reduction.statistics(twirled, 3, rng.uniform(0, 2 * math.pi, size=3))
        marg = max(marg, *(abs(v) for v in reduction.strict_subset_marginals(probs).values()))
        cfg = mabk.config_from_angles(rng.uniform(0, 2 * math.pi, size=6))
        mabk_dev = max(mabk_dev, abs(mabk.mabk_expectation(twirled, 3, cfg) - mabk.mabk_expectation(rho, 3, cfg)))
        block = max(block, reduction.ghz_block_check(twirled, 3)[1])
    for _ in range(20):
        plus = reduction.symmetrize(random_density_matrix(8, rng), 3)
        minus = reduction.flip_real_offdiagonals(plus)
        pm = max(pm, reduction.pair_statistics_agree(plus, minus, 3, rng.uniform(0, 2 * math.pi, size=(5, 3))))
        phi_x, phi_y = rng.uniform(0, 2 * math.pi, size=2)
        (a, b), (c, d) = reduction.pm_entropies(plus, minus, phi_x, phi_y)
        pm = max(pm, abs(a - c), abs(b - d))
    block_err = 0.0
    two_by_two = True
    for _ in range(20):
        p, q = (random_density_matrix(2, rng, rank=1) for _ in range(2))
        # two qubit blocks with unrelated rank-one projectors, hidden by a random basis change
        u = random_unitary(4, rng)
        p0 = u @ (np.kron(np.diag([1.0, 0.0]), p) + np.kron(np.diag([0.0, 1.0]), I2 - q)) @ u.conj().T
        q0 = u @ (np.kron(np.diag([1.0, 0.0]), q) + np.kron(np.diag([0.0, 1.0]), p)) @ u.conj().T
        dec = reduction.block_diagonalize(p0, np.eye(4) - p0, q0, np.eye(4) - q0)
        two_by_two &= all(b.restrictions[0].shape == (2, 2) for b in dec.blocks) and dec.n_artificial == 0
        for blk in dec.blocks:
            for r in blk.restrictions:
                block_err = max(block_err, float(np.max(np.abs(r @ r - r))), abs(np.trace(r).real - 1))
    suite = suites.run_suite("reduction", seed=SEED)
    elapsed = time.perf_counter() - start
    ok = (
        all(r.passed for r in suite)
        and marg <= REDUCTION_TOL
        and mabk_dev <= REDUCTION_TOL
        and block <= REDUCTION_TOL
        and pm <= PM_TOL
        and two_by_two
        and block_err <= BLOCK_TOL
        and elapsed < 120
    )
    detail = (
        f"marginals={marg:.3e} mabk={mabk_dev:.3e} off-block={block:.3e} "
        f"plus/minus={pm:.3e} block rank-one={block_err:.3e} suite checks={len(suite)} {elapsed:.1f}s"
    )
    assert criterion(13, ok, detail)
