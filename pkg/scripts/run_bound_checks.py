#!/usr/bin/env python3
"""Probability bounds next to their Monte Carlo event frequencies.

Prints each analytic bound with the observed frequency of the event it
controls, so dominance (bound above frequency for the tail bound, below for
the product lower bounds) can be read off directly.

Example:
    python3 scripts/run_bound_checks.py --n-trials 5000
"""

import argparse
import warnings

from lifshitz_lab import DisorderSpec
from lifshitz_lab.anderson import (chernoff_bound_P1, mc_chernoff_event,
                                   mc_product_event_1, mc_product_event_2,
                                   product_bound_P_eps_alpha_1,
                                   product_bound_P_eps_alpha_2)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-trials", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    n = args.n_trials

    print("empirical-mean tail bound (majorizes its event):")
    cases = [
        ("uniform, k=2, delta=0.3", DisorderSpec(), dict(k=2, delta=0.3)),
        ("uniform, k=8, delta=0.1, K=4", DisorderSpec(), dict(k=8, delta=0.1, K=4.0)),
        ("bernoulli(1/2,1), k=1, delta=0.4", DisorderSpec(law="bernoulli", p=0.5, a=1.0),
         dict(k=1, delta=0.4, truncation=1.0)),
    ]
    for label, spec, kw in cases:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            be = chernoff_bound_P1(spec, **kw)
            freq, lo, hi, _ = mc_chernoff_event(spec, n_trials=n, seed=args.seed, **kw)
        print(f"  {label:38s} bound {be.bound:10.4e}  freq {freq:8.4f} [{lo:.4f}, {hi:.4f}]")

    print("small-field product bounds (minorize their events):")
    bern = DisorderSpec(law="bernoulli", p=0.3, a=1.0)
    for eps in (0.3, 0.5):
        be = product_bound_P_eps_alpha_1(bern, eps=eps, alpha=0.5, nu=2.5, d=1)
        freq, lo, hi, _ = mc_product_event_1(bern, eps=eps, alpha=0.5, nu=2.5,
                                             d=1, n_trials=n, seed=args.seed + 1)
        print(f"  all-sites, eps={eps:.2f}                     "
              f"bound {be.bound:10.4e}  freq {freq:8.4f} [{lo:.4f}, {hi:.4f}]")
    for eps in (0.3, 0.5):
        be = product_bound_P_eps_alpha_2(DisorderSpec(), eps=eps, alpha=0.25,
                                         nu=2.5, d=1, s=1.0, C=3.5)
        freq, lo, hi, _ = mc_product_event_2(DisorderSpec(), eps=eps, alpha=0.25,
                                             nu=2.5, d=1, s=1.0, n_trials=n,
                                             seed=args.seed + 2)
        print(f"  window-sum, eps={eps:.2f}                    "
              f"bound {be.bound:10.4e}  freq {freq:8.4f} [{lo:.4f}, {hi:.4f}]")


if __name__ == "__main__":
    main()
