"""Generational GA over decision trees.

All random decisions come from one ``random.Random`` (Mersenne Twister,
seeded with the config seed) consumed in a fixed order per offspring pair:
two parent selections, the crossover coin and the two crossover points,
then a pre-order mutation sweep of each child. Fitness evaluation makes no
random draws, so evaluating in parallel cannot change the result.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .arff import Dataset, Schema
from .tree import (
    DecisionTree,
    Internal,
    Leaf,
    MissingValueError,
    Node,
    iter_nodes,
    predict,
    random_test,
    random_tree,
    value_pool,
)


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 100
    generations: int = 100
    crossover_prob: float = 0.99
    mutation_prob: float = 0.01
    replacement_fraction: float = 0.25
    size_bias_x: float = 1000.0
    elitism: int = 1
    seed: int = 0
    max_size: Optional[int] = None  # None: 10 * attributes * classes
    workers: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError(f"population_size must be >= 2, got {self.population_size}")
        if self.generations < 0:
            raise ValueError(f"generations must be >= 0, got {self.generations}")
        for name in ("crossover_prob", "mutation_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if not 0.0 < self.replacement_fraction <= 1.0:
            raise ValueError(
                f"replacement_fraction must be in (0, 1], got {self.replacement_fraction}"
            )
        if not self.size_bias_x > 0 or not math.isfinite(self.size_bias_x):
            raise ValueError(f"size_bias_x must be a positive real, got {self.size_bias_x}")
        if not 0 <= self.elitism < self.population_size:
            raise ValueError(
                f"elitism must be in [0, population_size), got {self.elitism}"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.max_size is not None and self.max_size < 3:
            raise ValueError(f"max_size must be >= 3, got {self.max_size}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def resolved_max_size(self, schema: Schema) -> int:
        if self.max_size is not None:
            return self.max_size
        return 10 * len(schema.attributes) * schema.n_classes

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    avg_fitness: float
    best_size: int
    best_train_accuracy: float
    test_accuracy: Optional[float] = None


def accuracy(t: DecisionTree, d: Dataset) -> float:
    if len(d) == 0:
        raise ValueError("cannot measure accuracy on an empty dataset")
    return float(np.count_nonzero(predict(t, d) == d.labels)) / len(d)


def fitness_from(acc: float, tree_size: int, size_bias_x: float) -> float:
    return acc * acc * size_bias_x / (tree_size * tree_size + size_bias_x)


def fitness(t: DecisionTree, d: Dataset, size_bias_x: float) -> float:
    """``acc**2 * x / (size**2 + x)``: rewards accuracy, penalises size."""
    return fitness_from(accuracy(t, d), t.root.size, size_bias_x)


def select_parent(population: Sequence, fitnesses: Sequence[float], rng):
    """Roulette-wheel draw; uniform if every fitness is zero."""
    total = math.fsum(fitnesses)
    if total <= 0:
        return population[rng.randrange(len(population))]
    r = rng.random() * total
    acc = 0.0
    for ind, f in zip(population, fitnesses):
        acc += f
        if r < acc:
            return ind
    # r can land on total through rounding
    for ind, f in zip(reversed(population), reversed(fitnesses)):
        if f > 0:
            return ind


# --------------------------------------------------------------------------
# variation operators


def _subtree_at(root: Node, index: int) -> Node:
    for i, node in enumerate(iter_nodes(root)):
        if i == index:
            return node
    raise IndexError(index)


def _replace_at(node: Node, index: int, new: Node) -> Node:
    """Copy of ``node`` with its pre-order ``index``-th subtree set to ``new``."""
    if index == 0:
        return new
    left = node.true
    if index <= left.size:
        return Internal(node.test, _replace_at(left, index - 1, new), node.false)
    return Internal(node.test, left, _replace_at(node.false, index - 1 - left.size, new))


def crossover(
    a: DecisionTree,
    b: DecisionTree,
    rng,
    prob: float = 1.0,
    max_size: Optional[int] = None,
) -> tuple[DecisionTree, DecisionTree]:
    """Swap uniformly chosen subtrees between ``a`` and ``b`` with probability ``prob``.

    If an offspring would exceed ``max_size`` the points are redrawn once;
    if that also fails the parents are returned unchanged.
    """
    if a.fingerprint != b.fingerprint:
        raise ValueError("cannot cross trees built for different schemas")
    if rng.random() >= prob:
        return a, b
    sa, sb = a.root.size, b.root.size
    for _ in range(2):
        i, j = rng.randrange(sa), rng.randrange(sb)
        sub_a, sub_b = _subtree_at(a.root, i), _subtree_at(b.root, j)
        if max_size is None or (
            sa - sub_a.size + sub_b.size <= max_size and sb - sub_b.size + sub_a.size <= max_size
        ):
            return (
                DecisionTree(_replace_at(a.root, i, sub_b), a.schema),
                DecisionTree(_replace_at(b.root, j, sub_a), b.schema),
            )
    return a, b


def _mutate(node: Node, schema: Schema, pool, rng, p: float) -> Node:
    hit = rng.random() < p
    if isinstance(node, Leaf):
        return Leaf(rng.randrange(schema.n_classes)) if hit else node
    test = random_test(schema, pool, rng) if hit else node.test
    t = _mutate(node.true, schema, pool, rng, p)
    f = _mutate(node.false, schema, pool, rng, p)
    if not hit and t is node.true and f is node.false:
        return node
    return Internal(test, t, f)


def mutate(t: DecisionTree, schema: Schema, pool, rng, prob: float) -> DecisionTree:
    """Redraw each node's payload independently with probability ``prob``.

    A test gets a fresh attribute and value from ``pool``; a leaf a fresh
    class label. The shape of the tree never changes.
    """
    if prob <= 0:
        return t
    root = _mutate(t.root, schema, pool, rng, prob)
    return t if root is t.root else DecisionTree(root, t.schema)


# --------------------------------------------------------------------------
# main loop


def _check_complete(d: Dataset, what: str) -> None:
    X = d.matrix
    for i in d.schema.predictors:
        if np.isnan(X[:, i]).any():
            raise MissingValueError(
                f"{what} data has missing values in {d.attributes[i].name!r}"
            )
    d.labels  # raises on unlabeled rows


def evolve(
    config: EvolutionConfig,
    train: Dataset,
    test: Optional[Dataset] = None,
    progress: Optional[Callable[[GenerationStats], None]] = None,
) -> tuple[DecisionTree, list[GenerationStats]]:
    """Run the GA and return (best tree ever seen, per-generation stats).

    The history has ``generations + 1`` entries: generation 0 is the random
    initial population.
    """
    if len(train) == 0:
        raise ValueError("training set is empty")
    _check_complete(train, "training")
    if test is not None:
        if test.schema.fingerprint != train.schema.fingerprint:
            raise ValueError("test set schema differs from training schema")
        if len(test) == 0:
            test = None
        else:
            _check_complete(test, "test")

    schema = train.schema
    pool = value_pool(train)
    rng = random.Random(config.seed)
    cap = config.resolved_max_size(schema)
    n = config.population_size
    n_replace = min(math.ceil(config.replacement_fraction * n), n - config.elitism)
    x = config.size_bias_x

    executor = ThreadPoolExecutor(config.workers) if config.workers > 1 else None

    def score(trees):
        mapper = executor.map if executor is not None else map
        accs = list(mapper(lambda t: accuracy(t, train), trees))
        return [(fitness_from(a, t.root.size, x), a) for t, a in zip(trees, accs)]

    population = [random_tree(schema, pool, rng) for _ in range(n)]
    scores = score(population)
    history: list[GenerationStats] = []
    best_tree, best_fit = None, -1.0
    try:
        for gen in range(config.generations + 1):
            fits = [f for f, _ in scores]
            order = sorted(range(n), key=lambda i: -fits[i])
            top = order[0]
            if fits[top] > best_fit:
                best_tree, best_fit = population[top], fits[top]
            avg = math.fsum(fits) / n
            stats = GenerationStats(
                generation=gen,
                best_fitness=fits[top],
                avg_fitness=min(avg, fits[top]),  # rounding can push the mean past the max
                best_size=population[top].root.size,
                best_train_accuracy=scores[top][1],
                test_accuracy=None if test is None else accuracy(population[top], test),
            )
            history.append(stats)
            if progress is not None:
                progress(stats)
            if gen == config.generations:
                break

            offspring = []
            while len(offspring) < n_replace:
                p1 = select_parent(population, fits, rng)
                p2 = select_parent(population, fits, rng)
                c1, c2 = crossover(p1, p2, rng, config.crossover_prob, cap)
                offspring.append(mutate(c1, schema, pool, rng, config.mutation_prob))
                c2 = mutate(c2, schema, pool, rng, config.mutation_prob)
                if len(offspring) < n_replace:
                    offspring.append(c2)
            survivors = order[: n - n_replace]
            population = [population[i] for i in survivors] + offspring
            scores = [scores[i] for i in survivors] + score(offspring)
    finally:
        if executor is not None:
            executor.shutdown()
    return best_tree, history
