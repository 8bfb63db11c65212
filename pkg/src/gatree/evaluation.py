"""k-fold cross-validation and confusion matrices."""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .arff import Dataset
from .evolution import EvolutionConfig, GenerationStats, accuracy, evolve
from .tree import DecisionTree, predict


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: tuple[int, ...]

    def indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignment) if f == fold]

    def complement(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignment) if f != fold]


@dataclass(frozen=True)
class CvReport:
    per_fold_accuracy: tuple[float, ...]
    per_fold_best_size: tuple[int, ...]
    per_fold_history: tuple[tuple[GenerationStats, ...], ...]
    best_trees: tuple[DecisionTree, ...]

    @property
    def mean_accuracy(self) -> float:
        return math.fsum(self.per_fold_accuracy) / len(self.per_fold_accuracy)

    @property
    def mean_best_size(self) -> float:
        return math.fsum(self.per_fold_best_size) / len(self.per_fold_best_size)


def kfold_split(d: Union[Dataset, int], k: int, seed: int) -> FoldAssignment:
    """Shuffle the row indices with ``seed`` and deal them round-robin into ``k`` folds.

    ``d`` may be a dataset or a plain row count.
    """
    n = d if isinstance(d, int) else len(d)
    if not 2 <= k <= n:
        raise ValueError(f"k must be in [2, {n}], got {k}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    assignment = [0] * n
    for pos, row in enumerate(order):
        assignment[row] = pos % k
    return FoldAssignment(k, tuple(assignment))


def cross_validate(
    config: EvolutionConfig,
    d: Dataset,
    k: int = 10,
    seed: int = 0,
    fold_workers: int = 1,
) -> CvReport:
    """Evolve on k-1 folds, score the best tree on the held-out fold.

    Fold ``i`` runs with seed ``seed ^ i``. The held-out fold is also
    tracked per generation as test accuracy, which selection never sees.
    """
    folds = kfold_split(d, k, seed)

    def run(i):
        train = d.subset(folds.complement(i))
        test = d.subset(folds.indices(i))
        best, history = evolve(replace(config, seed=seed ^ i), train, test)
        return best, history, accuracy(best, test)

    if fold_workers > 1:
        with ThreadPoolExecutor(fold_workers) as pool:
            results = list(pool.map(run, range(k)))
    else:
        results = [run(i) for i in range(k)]
    return CvReport(
        per_fold_accuracy=tuple(acc for _, _, acc in results),
        per_fold_best_size=tuple(best.root.size for best, _, _ in results),
        per_fold_history=tuple(tuple(h) for _, h, _ in results),
        best_trees=tuple(best for best, _, _ in results),
    )


def confusion_matrix(t: DecisionTree, d: Dataset, n_classes: Optional[int] = None) -> np.ndarray:
    """Counts indexed ``[actual, predicted]``."""
    k = n_classes or d.schema.n_classes
    m = np.zeros((k, k), dtype=np.int64)
    np.add.at(m, (d.labels, predict(t, d)), 1)
    return m
