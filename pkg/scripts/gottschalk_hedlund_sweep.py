"""Sweep cyclic systems and check bounded <=> zero cycle sum <=> transfer solvable.

Prints one row per (N, potential) and a final tally.
"""

import argparse
from fractions import Fraction

import numpy as np

from cocycle_lab import TransformationSystem, boundedness_probe, solve_transfer_function
from cocycle_lab.solvers import NotACoboundary


def random_cycle(n, rng):
    perm = rng.permutation(n)
    T = [0] * n
    for i in range(n):
        T[perm[i]] = int(perm[(i + 1) % n])
    return TransformationSystem(tuple(T))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quiet", action="store_true")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    agree = total = 0
    for n in range(2, args.n_max + 1):
        sys_ = random_cycle(n, rng)
        f = [Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4))) for _ in range(n)]
        for shift in (Fraction(0), Fraction(1, n)):
            pot = list(f)
            pot[-1] += shift * n - sum(pot) if shift else -sum(pot)
            gc = boundedness_probe(sys_, pot, 0, [n, 2 * n, 4 * n, 8 * n])
            try:
                solve_transfer_function(sys_, pot)
                solved = True
            except NotACoboundary:
                solved = False
            zero = sum(pot) == 0
            ok = (gc.verdict == "bounded") == zero == solved
            agree += ok
            total += 1
            if not args.quiet:
                print(f"N={n:3d} sum={str(sum(pot)):>6} verdict={gc.verdict:<14} "
                      f"slope={gc.slope_estimate:8.4f} transfer={'ok' if solved else 'obstructed'}"
                      f"{'' if ok else '  MISMATCH'}")
    print(f"{agree}/{total} cases agree")
    return 0 if agree == total else 1


if __name__ == "__main__":
    raise SystemExit(main())
