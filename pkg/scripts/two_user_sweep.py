"""Alpha sweep for the two-user example (U1 = -x^2 + 3x, U2 = -x^2 + 6x, price l).

Prints the per-alpha allocations and surpluses next to the reference values
commonly quoted for this example.  Those values come from an unstated cost
function, so only the ordering of the totals and minima is expected to match.
"""

import argparse
from pathlib import Path

from fairalloc.analysis import sweep_alpha
from fairalloc.experiments import parse_alphas, sweep_csv
from fairalloc.model import Scenario

HERE = Path(__file__).resolve().parent

# alpha -> (x1, x2, s1, s2)
REFERENCE = {
    "0.0": (0.187, 1.125, 0.281, 3.375),
    "0.5": (0.427, 0.911, 0.527, 3.003),
    "1.0": (0.535, 0.682, 0.668, 2.564),
    "2.0": (0.620, 0.435, 0.822, 1.867),
    "inf": (0.691, 0.204, 0.977, 0.977),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", type=Path, default=HERE.parent / "scenarios" / "two_user.json")
    ap.add_argument("--alpha", default="0,0.5,1,2,inf")
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    sc = Scenario.load(args.scenario)
    points = sweep_alpha(sc, parse_alphas(args.alpha))
    print(f"{'alpha':>6} {'x1':>8} {'x2':>8} {'s1':>8} {'s2':>8} {'total':>8} {'min':>8}"
          f"   reference (x1, x2, s1, s2)")
    for p in points:
        ref = " ".join(f"{v:.3f}" for v in REFERENCE.get(p.alpha.label(), ()))
        print(f"{p.alpha.label():>6} {p.x[0]:8.4f} {p.x[1]:8.4f} {p.s[0]:8.4f} {p.s[1]:8.4f} "
              f"{p.total_surplus:8.4f} {p.min_surplus:8.4f}   {ref}")
    if args.out:
        args.out.write_text(sweep_csv(points), encoding="utf-8")


if __name__ == "__main__":
    main()
