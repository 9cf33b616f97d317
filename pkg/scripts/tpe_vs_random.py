"""Compare the TPE sampler against pure random search on quadratic benchmarks.

For each benchmark target, both strategies get the same 20-evaluation budget
over 20 seeds; random search is the warm-up sampler run for the whole budget.
"""

import argparse
import math

import numpy as np

from ratedrivers.hpo import SearchSpace, TpeConfig, optimize


def run_benchmark(target_alpha, target_eta, budget, seeds):
    space = SearchSpace(k_min=2, k_max=2, alpha_lo=0.01, alpha_hi=5.0, eta_lo=0.01, eta_hi=5.0)

    def objective(params, seed):
        return (
            -((math.log(params.alpha) - math.log(target_alpha)) ** 2)
            - ((math.log(params.eta) - math.log(target_eta)) ** 2)
        )

    tpe_best, rnd_best = [], []
    for seed in range(seeds):
        tpe_best.append(optimize(objective, space, budget, TpeConfig(seed=seed))[0].objective)
        rnd_best.append(
            optimize(objective, space, budget, TpeConfig(seed=seed, n_startup=budget))[0].objective
        )
    return np.asarray(tpe_best), np.asarray(rnd_best)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--budget", type=int, default=20)
    parser.add_argument("--seeds", type=int, default=20)
    args = parser.parse_args()

    for ta, te in ((0.15, 0.5), (1.0, 0.1), (0.05, 2.0)):
        tpe, rnd = run_benchmark(ta, te, args.budget, args.seeds)
        wins = int(np.sum(tpe >= rnd))
        print(
            f"target ({ta}, {te}): tpe median {np.median(tpe):+.4f}  "
            f"random median {np.median(rnd):+.4f}  per-seed wins {wins}/{args.seeds}"
        )


if __name__ == "__main__":
    main()
