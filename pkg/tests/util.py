"""Generators shared by the test modules.

The random trees here are grown independently of the engine's own
constructors so they can act as a second source of test inputs.
"""

import random

from gatree.arff import AttributeSpec, Dataset, Schema
from gatree.tree import DecisionTree, Internal, Leaf, NodeTest


def make_schema(rng, n_numeric=2, n_nominal=1, n_classes=3):
    attrs = [AttributeSpec.numeric(f"x{i}") for i in range(n_numeric)]
    attrs += [
        AttributeSpec.nominal(f"n{i}", [f"v{j}" for j in range(rng.randint(2, 4))])
        for i in range(n_nominal)
    ]
    attrs.append(AttributeSpec.nominal("cls", [f"k{j}" for j in range(n_classes)]))
    return Schema(tuple(attrs), len(attrs) - 1)


def random_row(schema, rng, grid=10):
    row = []
    for a in schema.attributes:
        if a.is_numeric:
            row.append(float(rng.randrange(grid)))
        else:
            row.append(rng.randrange(len(a.values)))
    return tuple(row)


def random_dataset(schema, rng, n=50):
    return Dataset(schema, tuple(random_row(schema, rng) for _ in range(n)))


def grow(schema, rng, max_depth=4, grid=10):
    """Random tree of depth <= max_depth with tests on a small value grid."""

    def node(depth):
        if depth == 0 or rng.random() < 0.3:
            return Leaf(rng.randrange(schema.n_classes))
        attr = rng.choice(schema.predictors)
        spec = schema.attributes[attr]
        if spec.is_numeric:
            test = NodeTest(attr, float(rng.randrange(grid)))
        else:
            test = NodeTest(attr, rng.randrange(len(spec.values)), True)
        return Internal(test, node(depth - 1), node(depth - 1))

    return DecisionTree(node(max_depth), schema)


def seeded(seed):
    return random.Random(seed)
