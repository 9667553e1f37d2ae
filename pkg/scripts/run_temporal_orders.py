"""Temporal refinement at fixed mesh: measured orders of BDF1 and BDF2.

Halves the step on the manufactured transient with the mesh held fixed
and reports the temperature step error against a small-step second-order
run on the same mesh, which cancels the spatial floor.  Expect slopes of
one and two.
"""

import argparse

from natconv.study import temporal_orders


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=160, help="mesh subdivisions")
    ap.add_argument("--dts", default="0.1,0.05,0.025")
    ap.add_argument("--policy", default="re-h2")
    args = ap.parse_args()

    dts = tuple(float(t) for t in args.dts.split(","))
    results = temporal_orders(n=args.n, dts=dts, policy=args.policy)
    for scheme, (_, errors, rates) in results.items():
        print(f"{scheme}  (n = {args.n}, policy {args.policy})")
        print("  dt          L2(theta) step error   rate")
        for dt, err, rate in zip(dts, errors, rates):
            rtxt = "--" if rate is None else f"{rate:.2f}"
            print(f"  {dt:<10.4g}  {err:.3E}              {rtxt}")


if __name__ == "__main__":
    main()
