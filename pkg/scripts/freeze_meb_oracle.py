"""Regenerate tests/data/meb_oracle.json with the grid-refinement oracle.

200 random point sets (<= 12 points, dims <= 3). Takes a couple of
minutes; the acceptance suite only reads the frozen file.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import grid_meb  # noqa: E402


def point_sets(seed, count):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, 13))
        scale = float(rng.choice([0.1, 1.0, 10.0]))
        yield rng.standard_normal((k, d)) * scale + rng.standard_normal(d)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--out", default=str(ROOT / "tests" / "data" / "meb_oracle.json"))
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    cases = []
    for P in point_sets(args.seed, args.count):
        c, r = grid_meb(P)
        cases.append({"points": P.tolist(), "center": c.tolist(), "radius": r})
    doc = {"seed": args.seed, "oracle": "nested 1-D grid refinement (n=9, 18 levels)",
           "cases": cases}
    Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {len(cases)} cases to {args.out} in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
