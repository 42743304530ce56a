"""Sequential inference cost of each selection method over a grid of passage lengths.

    python scripts/cost_table.py --lp 50 100 200 --n-ranks 8
"""

from __future__ import annotations

import argparse

from rankfleet.cost import METHODS, CostParams, estimate_cost


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lp", type=float, nargs="+", default=[50.0, 100.0, 200.0])
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--n-ranks", type=int, default=8)
    ap.add_argument("--t-llm", type=float, default=1.0)
    args = ap.parse_args()

    print("L_p\t" + "\t".join(METHODS))
    for lp in args.lp:
        p = CostParams(avg_passage_len=lp, k=args.k, n_ranks=args.n_ranks, t_llm=args.t_llm)
        print(f"{lp:g}\t" + "\t".join(f"{estimate_cost(p, m).seconds:g}" for m in METHODS))


if __name__ == "__main__":
    main()
