"""``mabk-entropy`` command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or domain error,
3 invalid state, 4 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import entropy, ghz, optimize, suites, violation
from .fileio import FIXTURES, CurveRow, StateFileError, emit_csv, read_state
from .linalg import NotDensityMatrixError, NotHermitianError, PSD_TOL

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_STATE, EXIT_IO = 0, 1, 2, 3, 4
SEED_ENV = "MABK_SEED"


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None
    return seed


def _seed(args) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    return seed


# --- bound ----------------------------------------------------------------------


def cmd_bound(args) -> int:
    try:
        if args.kind == "single":
            value = entropy.bound_F(args.m)
        elif args.kind == "pair":
            value = entropy.bound_G(args.m)
        else:
            if args.n is None:
                raise UsageError("bound nparty needs --n")
            value = entropy.bound_F_nparty(args.n, args.m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"{value:.12f}")
    return EXIT_OK


# --- mabk-max ---------------------------------------------------------------------


def _describe_setting(setting) -> str:
    if setting.kind == "fixed":
        return f"fixed({setting.sign:+d})"
    x, y, z = setting.vector
    return f"({x:+.6f},{y:+.6f},{z:+.6f})"


def cmd_mabk_max(args) -> int:
    rho = read_state(args.state, args.tol)
    dim = rho.shape[0]
    n = int(round(math.log2(dim)))
    if 2**n != dim or n < 2:
        raise NotDensityMatrixError(f"dimension {dim} is not 2^n for n >= 2")
    if args.variant == "min":
        bounds = [violation.min_theorem2_bound(rho, n)]
    elif n != 3 and args.variant != "standard":
        raise UsageError("the prime variants are defined for three parties only")
    else:
        bounds = [violation.theorem2_bound(rho, n, args.variant)]
    for b in bounds:
        print(f"theorem2_bound[{b.variant}] = {b.bound:.12f}")

    if n == 3:
        family = ghz.almost_ghz_from_density(rho, 3)
        if family is not None and np.all(np.abs(family.s[:3]) <= 1e-9):
            eigs = optimize.normalize_ordering(ghz.eigvals_almost_ghz3(family))
            print(f"corollary1_bound = {violation.corollary1_bound(eigs):.12f}")

    if args.brute_force:
        cfg = optimize.OptimizerConfig(restarts=args.restarts or 16, seed=_seed(args))
        res = optimize.brute_force_mabk_max(rho, n, args.allow_fixed, cfg)
        label = "with fixed outcomes" if args.allow_fixed else "rank-one"
        print(f"brute_force_max[{label}] = {res.value:.12f}")

    best = min(bounds, key=lambda b: b.bound)
    witness = violation.tightness_witness(best, seed=_seed(args))
    if witness is None:
        print(f"tight = no witness found (variant {best.variant})")
    else:
        print(f"tight = yes (variant {best.variant})")
        for party, (s0, s1) in zip("ABCDEFGHIJ", witness):
            print(f"  {party}0 = {_describe_setting(s0)}  {party}1 = {_describe_setting(s1)}")
    return EXIT_OK


# --- sweep ----------------------------------------------------------------------


def tau_bound_note(m: float) -> float | None:
    """Bound of the two-level state whose eigenvalue bound equals m, for m >= 2 sqrt(2)."""
    if m < 2.0 * math.sqrt(2.0):
        return None
    state = ghz.tau_state(entropy.tau_weight(m))
    return violation.theorem2_bound(ghz.to_density_matrix(state), 3).bound


def sweep_rows(m_min: float, m_max: float, steps: int, numeric: bool = False, cfg=None) -> list[CurveRow]:
    if not (2.0 <= m_min < m_max <= 4.0):
        raise UsageError("need 2 <= m_min < m_max <= 4")
    if steps < 2:
        raise UsageError("need at least two steps")
    rows = []
    for m in np.linspace(m_min, m_max, steps):
        m = float(m)
        hxe = hxy = None
        if numeric:
            r1 = optimize.minimize_hxe(m, cfg)
            r2 = optimize.minimize_hxy(m, cfg)
            hxe = r1.value if r1.feasible else None
            hxy = r2.value if r2.feasible else None
        rows.append(CurveRow(m, entropy.bound_F(m), entropy.bound_G(m), hxe, hxy, tau_bound_note(m)))
    return rows


def cmd_sweep(args) -> int:
    cfg = None
    if args.numeric:
        cfg = optimize.OptimizerConfig(restarts=args.restarts or 64, seed=_seed(args))
    rows = sweep_rows(args.m_min, args.m_max, args.steps, args.numeric, cfg)
    text = emit_csv(rows)
    if args.out is None or args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    return EXIT_OK


# --- verify ---------------------------------------------------------------------


def cmd_verify(args) -> int:
    results = suites.run_suite(args.suite, args.trials, _seed(args))
    for r in results:
        print(r.summary_line())
    failed = [r for r in results if not r.passed]
    print(f"SUMMARY suite={args.suite} checks={len(results)} failed={len(failed)}")
    return EXIT_VERIFY if failed else EXIT_OK


# --- parser ---------------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mabk-entropy", description="MABK violation and entropy bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="evaluate an analytic entropy bound")
    p.add_argument("kind", choices=("single", "pair", "nparty"))
    p.add_argument("m", type=float)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("mabk-max", help="violation bounds for a state file")
    p.add_argument("state", help=f"path to a QSTATE file or a fixture name ({', '.join(FIXTURES)})")
    p.add_argument("--variant", choices=(*violation.VARIANTS, "min"), default="min")
    p.add_argument("--allow-fixed", action="store_true")
    p.add_argument("--brute-force", action="store_true")
    p.add_argument("--restarts", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, default=PSD_TOL, help="density-matrix check tolerance")
    p.set_defaults(func=cmd_mabk_max)

    p = sub.add_parser("sweep", help="write bound curves as CSV")
    p.add_argument("m_min", type=float)
    p.add_argument("m_max", type=float)
    p.add_argument("steps", type=int)
    p.add_argument("--numeric", action="store_true")
    p.add_argument("--restarts", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("suite", choices=("reduction", "appendices", "bounds", "all"))
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=_positive_int)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StateFileError as exc:
        print(f"error: cannot parse state file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NotDensityMatrixError, NotHermitianError) as exc:
        print(f"error: invalid state: {exc}", file=sys.stderr)
        return EXIT_STATE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
