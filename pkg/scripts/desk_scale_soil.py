"""Train on synthetic soil-texture data over several seeds and report accuracy.

    python scripts/desk_scale_soil.py --seeds 0 1 2 3 --generations 200
"""

import argparse
import time

from gatree.evolution import EvolutionConfig, accuracy, evolve
from gatree.soil import GenConfig, generate
from gatree.tree import height


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--data-seed", type=int, default=0)
    ap.add_argument("--noise", type=float, default=0.0)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3])
    ap.add_argument("--generations", type=int, default=200)
    ap.add_argument("--population", type=int, default=100)
    ap.add_argument("--mutation", type=float, default=0.01)
    ap.add_argument("--size-bias", type=float, default=1000.0)
    args = ap.parse_args()

    d = generate(GenConfig(n=args.n, seed=args.data_seed, noise_rate=args.noise))
    print("seed,train_acc,size,height,fitness,seconds")
    for seed in args.seeds:
        cfg = EvolutionConfig(
            population_size=args.population, generations=args.generations,
            mutation_prob=args.mutation, size_bias_x=args.size_bias, seed=seed,
        )
        t0 = time.perf_counter()
        best, hist = evolve(cfg, d)
        dt = time.perf_counter() - t0
        print(f"{seed},{accuracy(best, d):.4f},{best.root.size},{height(best)},"
              f"{max(h.best_fitness for h in hist):.4f},{dt:.2f}")


if __name__ == "__main__":
    main()
