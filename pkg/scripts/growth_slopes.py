"""Slope of K -> sup |c_f| for potentials with a given cycle mean.

Writes a CSV (mu, N, K, sup_norm) to stdout or --out.
"""

import argparse
import csv
import sys

from cocycle_lab import TransformationSystem, boundedness_probe


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mu", default="0.1,0.3,1.0")
    ap.add_argument("--n", default="10,100")
    ap.add_argument("--windows", default="10,20,40,80")
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    windows = [int(k) for k in args.windows.split(",")]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["mu", "N", "K", "sup_norm"])
    for mu in map(float, args.mu.split(",")):
        for n in map(int, args.n.split(",")):
            f = [mu * (1 + 0.5 * (-1) ** i) for i in range(n)]
            sys_ = TransformationSystem(tuple((i + 1) % n for i in range(n)))
            gc = boundedness_probe(sys_, f, 0, windows)
            for k, s in gc.sup_norm_by_window:
                w.writerow([mu, n, k, repr(s)])
            print(f"mu={mu} N={n}: {gc.verdict}, slope {gc.slope_estimate:.5f} "
                  f"(rel err {abs(gc.slope_estimate - mu) / mu:.2%})", file=sys.stderr)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
