"""PoF and PoE as the number of users grows.

Writes the long-format CSV and a summary JSON, then prints mean PoF / PoE with
the 5th-95th percentile band for each user count and alpha.
"""

import argparse
import json
from pathlib import Path

from fairalloc.experiments import PofPoeConfig, parse_alphas, parse_ints, run_pofpoe


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-users", default="5,10,20,40")
    ap.add_argument("--alpha", default="0,0.5,1,2,inf")
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/pofpoe.csv"))
    args = ap.parse_args()

    cfg = PofPoeConfig(n_users=tuple(parse_ints(args.n_users)), trials=args.trials,
                       alphas=tuple(parse_alphas(args.alpha)), seed=args.seed,
                       workers=args.workers)
    rep = run_pofpoe(cfg)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(rep.csv(), encoding="utf-8")
    summary = rep.summary_json()
    args.out.with_name(args.out.stem + ".summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    print(f"{'N':>4} {'alpha':>6} {'PoF':>8} {'[p5, p95]':>20} {'PoE':>8} {'[p5, p95]':>20}")
    for row in summary["summary"]:
        pof, poe = row["pof"], row["poe"]
        print(f"{row['n_users']:>4} {row['alpha']:>6} {pof['mean']:8.4f} "
              f"[{pof['p5']:8.4f}, {pof['p95']:8.4f}] {poe['mean']:8.4f} "
              f"[{poe['p5']:8.4f}, {poe['p95']:8.4f}]")
    if summary["failure_count"]:
        print(f"{summary['failure_count']} trials failed; see the summary JSON")


if __name__ == "__main__":
    main()
