"""k-fold cross-validation on synthetic soil data, with per-fold summary."""

import argparse

from gatree.evaluation import cross_validate
from gatree.evolution import EvolutionConfig
from gatree.soil import GenConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--noise", type=float, default=0.0)
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--generations", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fold-workers", type=int, default=1)
    args = ap.parse_args()

    d = generate(GenConfig(n=args.n, seed=args.seed, noise_rate=args.noise))
    cfg = EvolutionConfig(generations=args.generations)
    rep = cross_validate(cfg, d, k=args.folds, seed=args.seed, fold_workers=args.fold_workers)
    print("fold,test_acc,best_size")
    for i, (a, s) in enumerate(zip(rep.per_fold_accuracy, rep.per_fold_best_size)):
        print(f"{i},{a:.4f},{s}")
    print(f"mean,{rep.mean_accuracy:.4f},{rep.mean_best_size:.2f}")


if __name__ == "__main__":
    main()
