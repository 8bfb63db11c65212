"""Genetic-algorithm induction of binary decision trees."""

__version__ = "0.1.0"

from .arff import ArffError, AttributeSpec, Dataset, Schema, parse_arff, read_arff, write_arff
from .evaluation import CvReport, FoldAssignment, confusion_matrix, cross_validate, kfold_split
from .evolution import (
    EvolutionConfig,
    GenerationStats,
    accuracy,
    crossover,
    evolve,
    fitness,
    mutate,
    select_parent,
)
from .tree import (
    DecisionTree,
    Internal,
    Leaf,
    NodeTest,
    Rule,
    classify,
    deserialize,
    extract_rules,
    height,
    prune,
    random_tree,
    serialize,
    size,
    to_dot,
    value_pool,
)
