import json
import math

import pydot
import pytest

from gatree.arff import AttributeSpec, Dataset, Schema
from gatree.tree import (
    DecisionTree,
    Internal,
    Leaf,
    MissingValueError,
    ModelFormatError,
    NodeTest,
    Rule,
    SchemaMismatchError,
    classify,
    deserialize,
    extract_rules,
    format_rules,
    height,
    iter_nodes,
    parse_rules,
    predict,
    prune,
    random_tree,
    serialize,
    size,
    to_dot,
    value_pool,
)
from util import grow, make_schema, random_dataset, random_row, seeded

SOILISH = Schema(
    (
        AttributeSpec.numeric("sand"),
        AttributeSpec.numeric("clay"),
        AttributeSpec.nominal("texture", ["c", "s", "ls"]),
    ),
    2,
)
SAND, CLAY = 0, 1
C, S, LS = 0, 1, 2


def stump(attr, value, yes, no, schema=SOILISH):
    return DecisionTree(Internal(NodeTest(attr, value), Leaf(yes), Leaf(no)), schema)


def chain(n):
    node = Leaf(C)
    for _ in range(n):
        node = Internal(NodeTest(SAND, 1.0), node, Leaf(S))
    return DecisionTree(node, SOILISH)


def complete(depth):
    def build(d):
        if d == 0:
            return Leaf(C)
        return Internal(NodeTest(CLAY, float(d)), build(d - 1), build(d - 1))

    return DecisionTree(build(depth), SOILISH)


class FixedRng:
    """Returns scripted values; fails loudly if the script runs out."""

    def __init__(self, randranges=(), randoms=()):
        self._rr = list(randranges)
        self._r = list(randoms)

    def randrange(self, n):
        v = self._rr.pop(0)
        assert 0 <= v < n
        return v

    def random(self):
        return self._r.pop(0)


# ----------------------------------------------------------------------------
# classify / size / height


def test_leaf_classifies_everything():
    t = DecisionTree(Leaf(C), SOILISH)
    assert classify(t, (1.0, 2.0, S)) == C
    assert classify(t, (None, None, S)) == C


def test_threshold_is_inclusive():
    t = stump(SAND, 54.0, C, S)
    assert classify(t, (54.0, 0.0, 0)) == C
    assert classify(t, (54.000001, 0.0, 0)) == S


def test_top_clay_split_row_with_30_clay():
    t = stump(CLAY, 34.0, C, S)
    assert classify(t, (10.0, 30.0, 0)) == C


def test_nominal_test_takes_true_branch_on_equality():
    schema = Schema((AttributeSpec.nominal("a", ["x", "y"]), AttributeSpec.nominal("k", ["p", "q"])), 1)
    t = DecisionTree(Internal(NodeTest(0, 1, True), Leaf(0), Leaf(1)), schema)
    assert classify(t, (1, 0)) == 0
    assert classify(t, (0, 0)) == 1


def test_classify_errors():
    t = stump(SAND, 54.0, C, S)
    with pytest.raises(MissingValueError):
        classify(t, (None, 1.0, 0))
    with pytest.raises(SchemaMismatchError):
        classify(t, (1.0, 0))
    # a missing value off the taken path is fine
    t2 = DecisionTree(Internal(NodeTest(SAND, 54.0), Leaf(C), stump(CLAY, 3.0, S, LS).root), SOILISH)
    assert classify(t2, (1.0, None, 0)) == C


@pytest.mark.parametrize("tree, expected", [(DecisionTree(Leaf(C), SOILISH), 1), (stump(SAND, 1.0, C, S), 3), (complete(2), 7)])
def test_size(tree, expected):
    assert size(tree) == expected
    assert sum(1 for _ in iter_nodes(tree.root)) == expected


@pytest.mark.parametrize("tree, expected", [(DecisionTree(Leaf(C), SOILISH), 0), (stump(SAND, 1.0, C, S), 1), (chain(3), 3)])
def test_height(tree, expected):
    assert height(tree) == expected


def test_size_and_height_laws_on_random_trees():
    rng = seeded(1)
    for _ in range(300):
        schema = make_schema(rng)
        t = grow(schema, rng, max_depth=6)
        n_internal = sum(isinstance(n, Internal) for n in iter_nodes(t.root))
        assert size(t) % 2 == 1
        assert size(t) == 2 * n_internal + 1
        assert height(t) <= (size(t) - 1) // 2


def test_predict_matches_row_by_row_classify():
    rng = seeded(2)
    for _ in range(100):
        schema = make_schema(rng)
        t = grow(schema, rng)
        d = random_dataset(schema, rng, 40)
        assert predict(t, d).tolist() == [classify(t, row) for row in d.instances]


# ----------------------------------------------------------------------------
# random_tree


def test_random_tree_singleton_pool():
    schema = Schema((AttributeSpec.numeric("sand"), AttributeSpec.nominal("k", ["a", "b"])), 1)
    t = random_tree(schema, {0: (54.0,)}, seeded(0))
    assert size(t) == 3
    assert t.root.test == NodeTest(0, 54.0)


def test_random_tree_is_determined_by_rng():
    t = random_tree(SOILISH, {SAND: (10.0, 20.0), CLAY: (5.0,)}, FixedRng([1, 0, 2, 0]))
    assert t == DecisionTree(Internal(NodeTest(CLAY, 5.0), Leaf(LS), Leaf(C)), SOILISH)


def test_random_tree_empty_pool():
    with pytest.raises(ValueError, match="empty value pool"):
        random_tree(SOILISH, {SAND: (), CLAY: ()}, seeded(0))


def test_random_tree_root_attribute_uniform():
    # 10^4 draws over 4 predictors; each count within 5 binomial s.d. of n/4
    schema = make_schema(seeded(3), n_numeric=3, n_nominal=1)
    d = random_dataset(schema, seeded(4), 30)
    pool = value_pool(d)
    rng = seeded(5)
    n = 10_000
    counts = {a: 0 for a in schema.predictors}
    for _ in range(n):
        counts[random_tree(schema, pool, rng).root.test.attribute] += 1
    p = 1 / len(counts)
    sd = math.sqrt(n * p * (1 - p))
    for c in counts.values():
        assert abs(c - n * p) <= 5 * sd
    chi2 = sum((c - n * p) ** 2 / (n * p) for c in counts.values())
    assert chi2 < 16.27  # chi-square, 3 dof, p = 0.001


def test_value_pool_uses_observed_values_only():
    d = Dataset(SOILISH, ((3.0, None, 0), (1.0, 2.0, 1), (3.0, 4.0, 2)))
    pool = value_pool(d)
    assert pool == {SAND: (1.0, 3.0), CLAY: (2.0, 4.0)}


# ----------------------------------------------------------------------------
# rules


def test_rules_of_leaf():
    assert extract_rules(DecisionTree(Leaf(C), SOILISH)) == [Rule((), C)]


def test_rules_of_top_split():
    t = stump(CLAY, 34.0, C, S)
    test = NodeTest(CLAY, 34.0)
    assert extract_rules(t) == [Rule(((test, True),), C), Rule(((test, False),), S)]
    assert format_rules(extract_rules(t), SOILISH) == (
        "IF clay <= 34.0 THEN c\nIF clay > 34.0 THEN s\n"
    )


def test_rules_order_is_depth_first_true_first():
    t = complete(2)
    tests = [r.conditions for r in extract_rules(t)]
    assert [[taken for _, taken in c] for c in tests] == [
        [True, True], [True, False], [False, True], [False, False]
    ]


def test_rules_partition_and_agree_with_classify():
    rng = seeded(6)
    for _ in range(100):
        schema = make_schema(rng)
        t = grow(schema, rng, max_depth=5)
        rules = extract_rules(t)
        assert len(rules) == (size(t) + 1) // 2
        for _ in range(50):
            row = random_row(schema, rng)
            matching = [r for r in rules if r.matches(row)]
            assert len(matching) == 1
            assert matching[0].label == classify(t, row)


def test_rule_text_round_trip():
    rng = seeded(7)
    schema = Schema(
        (
            AttributeSpec.numeric("sand pct"),
            AttributeSpec.nominal("it's", ["a b", "AND", "x"]),
            AttributeSpec.nominal("k", ["THEN", "y z"]),
        ),
        2,
    )
    for _ in range(50):
        t = grow(schema, rng)
        rules = extract_rules(t)
        assert parse_rules(format_rules(rules, schema), schema) == rules


# ----------------------------------------------------------------------------
# prune


def test_prune_collapses_identical_children():
    t = DecisionTree(Internal(NodeTest(SAND, 1.0), Leaf(C), Leaf(C)), SOILISH)
    rng = seeded(8)
    for _ in range(5):
        d = Dataset(SOILISH, tuple((float(rng.randrange(3)), 0.0, rng.randrange(3)) for _ in range(20)))
        assert prune(t, d).root == Leaf(C)


def test_prune_leaves_single_leaf_alone():
    t = DecisionTree(Leaf(S), SOILISH)
    d = Dataset(SOILISH, ((1.0, 1.0, C),))
    assert prune(t, d) == t


def test_prune_keeps_useful_split():
    t = stump(SAND, 5.0, C, S)
    d = Dataset(SOILISH, ((1.0, 0.0, C), (9.0, 0.0, S)))
    assert prune(t, d) == t


def test_prune_removes_useless_split():
    t = stump(SAND, 5.0, C, S)
    d = Dataset(SOILISH, ((1.0, 0.0, S), (9.0, 0.0, S), (2.0, 0.0, S)))
    assert prune(t, d).root == Leaf(S)


def test_prune_empty_set():
    with pytest.raises(ValueError, match="empty"):
        prune(stump(SAND, 5.0, C, S), Dataset(SOILISH, ()))


def _acc(t, d):
    return sum(classify(t, r) == r[d.class_index] for r in d.instances) / len(d)


def test_prune_properties_on_random_trees():
    rng = seeded(9)
    for _ in range(100):
        schema = make_schema(rng)
        t = grow(schema, rng, max_depth=6)
        d = random_dataset(schema, rng, rng.randint(1, 60))
        p = prune(t, d)
        p.validate()
        assert _acc(p, d) >= _acc(t, d)
        assert size(p) <= size(t)
        assert prune(p, d) == p


# ----------------------------------------------------------------------------
# DOT


def test_dot_single_leaf():
    g = pydot.graph_from_dot_data(to_dot(DecisionTree(Leaf(C), SOILISH)))[0]
    assert len(g.get_nodes()) - _style_nodes(g) == 1
    assert g.get_edges() == []


def _style_nodes(g):
    return sum(1 for n in g.get_nodes() if n.get_name() in ("node", "edge", "graph"))


def test_dot_three_nodes():
    text = to_dot(stump(SAND, 54.0, C, S))
    g = pydot.graph_from_dot_data(text)[0]
    assert len(g.get_nodes()) - _style_nodes(g) == 3
    edges = g.get_edges()
    assert len(edges) == 2
    assert sorted(e.get_label() for e in edges) == ['"no"', '"yes"']
    assert '"sand <= 54.0"' in text


def test_dot_parses_for_random_trees():
    rng = seeded(10)
    schema = Schema(
        (AttributeSpec.numeric('say "hi"'), AttributeSpec.nominal("n\\m", ["a'b", "c"]), AttributeSpec.nominal("k", ["x", 'q"'])),
        2,
    )
    for _ in range(100):
        t = grow(schema, rng, max_depth=5)
        graphs = pydot.graph_from_dot_data(to_dot(t))
        assert graphs is not None and len(graphs) == 1
        g = graphs[0]
        assert len(g.get_nodes()) - _style_nodes(g) == size(t)
        assert len(g.get_edges()) == size(t) - 1


# ----------------------------------------------------------------------------
# model files


def test_serialize_layout():
    doc = json.loads(serialize(stump(CLAY, 34.0, C, S)))
    assert doc["format_version"] == 1
    assert doc["class_index"] == 2
    assert doc["root"] == {
        "test": {"attr": "clay", "op": "<=", "value": 34.0},
        "true": {"leaf": "c"},
        "false": {"leaf": "s"},
    }


@pytest.mark.parametrize("tree", [DecisionTree(Leaf(LS), SOILISH), stump(CLAY, 34.0, C, S), complete(3)])
def test_serialize_round_trip(tree):
    assert deserialize(serialize(tree)) == tree


def test_serialize_round_trip_random():
    rng = seeded(11)
    for _ in range(1000):
        schema = make_schema(rng)
        t = grow(schema, rng, max_depth=5)
        text = serialize(t)
        back = deserialize(text, schema)
        assert back == t
        assert serialize(back) == text


def test_deserialize_schema_mismatch():
    text = serialize(stump(CLAY, 34.0, C, S))
    other = Schema((AttributeSpec.numeric("sand"), AttributeSpec.nominal("texture", ["c", "s"])), 1)
    with pytest.raises(SchemaMismatchError):
        deserialize(text, other)


@pytest.mark.parametrize(
    "mangle",
    [
        lambda d: "not json",
        lambda d: json.dumps({**d, "format_version": 99}),
        lambda d: json.dumps({**d, "root": {"leaf": "nope"}}),
        lambda d: json.dumps({**d, "root": {"test": {"attr": "clay", "op": "=", "value": 1}, "true": {"leaf": "c"}, "false": {"leaf": "c"}}}),
        lambda d: json.dumps({**d, "root": {"test": {"attr": "texture", "op": "=", "value": "c"}, "true": {"leaf": "c"}, "false": {"leaf": "c"}}}),
        lambda d: json.dumps({**d, "fingerprint": "0" * 16}),
        lambda d: json.dumps({k: v for k, v in d.items() if k != "root"}),
    ],
)
def test_deserialize_malformed(mangle):
    doc = json.loads(serialize(stump(CLAY, 34.0, C, S)))
    with pytest.raises(ModelFormatError):
        deserialize(mangle(doc))
