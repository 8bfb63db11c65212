"""Binary decision-tree genomes and the operations defined on them."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .arff import MISSING, Dataset, Schema, format_number, quote_name

FORMAT_VERSION = 1


class MissingValueError(ValueError):
    """A tested attribute was missing in the row being classified."""


class SchemaMismatchError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class NodeTest:
    """``row[attribute] <= value`` (numeric) or ``row[attribute] == value`` (nominal)."""

    attribute: int
    value: Union[float, int]
    nominal: bool = False

    def __post_init__(self):
        if not self.nominal and not math.isfinite(self.value):
            raise ValueError("threshold must be finite")

    def holds(self, x) -> bool:
        return x == self.value if self.nominal else x <= self.value

    def describe(self, schema: Schema, taken: bool = True) -> str:
        attr = schema.attributes[self.attribute]
        name = quote_name(attr.name)
        if self.nominal:
            op = "=" if taken else "!="
            return f"{name} {op} {quote_name(attr.values[self.value])}"
        op = "<=" if taken else ">"
        return f"{name} {op} {format_number(self.value)}"


@dataclass(frozen=True)
class Leaf:
    label: int

    size = 1
    height = 0


@dataclass(frozen=True)
class Internal:
    test: NodeTest
    true: "Node"
    false: "Node"
    size: int = field(init=False, repr=False, compare=False)
    height: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "size", 1 + self.true.size + self.false.size)
        object.__setattr__(self, "height", 1 + max(self.true.height, self.false.height))


Node = Union[Leaf, Internal]


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    schema: Schema

    @property
    def fingerprint(self) -> str:
        return self.schema.fingerprint

    def validate(self) -> None:
        """Raise ``ValueError`` unless every index in the tree fits the schema."""
        attrs = self.schema.attributes
        for node in iter_nodes(self.root):
            if isinstance(node, Leaf):
                if not 0 <= node.label < self.schema.n_classes:
                    raise ValueError(f"leaf label {node.label} out of range")
                continue
            t = node.test
            if not 0 <= t.attribute < len(attrs) or t.attribute == self.schema.class_index:
                raise ValueError(f"bad test attribute {t.attribute}")
            a = attrs[t.attribute]
            if t.nominal != a.is_nominal:
                raise ValueError(f"test kind does not match attribute {a.name!r}")
            if t.nominal and not 0 <= t.value < len(a.values):
                raise ValueError(f"category {t.value} out of range for {a.name!r}")


@dataclass(frozen=True)
class Rule:
    conditions: tuple[tuple[NodeTest, bool], ...]
    label: int

    def matches(self, row) -> bool:
        for test, taken in self.conditions:
            x = row[test.attribute]
            if x is MISSING:
                raise MissingValueError("missing value at tested attribute")
            if test.holds(x) != taken:
                return False
        return True


def iter_nodes(root: Node):
    """Pre-order traversal, true branch before false branch."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Internal):
            stack.append(node.false)
            stack.append(node.true)


def size(t: Union[DecisionTree, Node]) -> int:
    return (t.root if isinstance(t, DecisionTree) else t).size


def height(t: Union[DecisionTree, Node]) -> int:
    """Edges on the longest root-to-leaf path; a lone leaf has height 0."""
    return (t.root if isinstance(t, DecisionTree) else t).height


def _check_schema(t: DecisionTree, d: Dataset):
    if d.schema.fingerprint != t.fingerprint:
        raise SchemaMismatchError("dataset schema does not match the tree's schema")


def classify(t: DecisionTree, row: Sequence) -> int:
    if len(row) != len(t.schema.attributes):
        raise SchemaMismatchError(f"row has {len(row)} values, tree expects {len(t.schema.attributes)}")
    node = t.root
    while isinstance(node, Internal):
        x = row[node.test.attribute]
        if x is MISSING:
            raise MissingValueError(
                f"missing value for {t.schema.attributes[node.test.attribute].name!r}"
            )
        node = node.true if node.test.holds(x) else node.false
    return node.label


def _predict_into(node: Node, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    while isinstance(node, Internal):
        if idx.size == 0:
            return
        col = X[idx, node.test.attribute]
        if np.isnan(col).any():
            raise MissingValueError("missing value at tested attribute")
        mask = col == node.test.value if node.test.nominal else col <= node.test.value
        _predict_into(node.true, X, idx[mask], out)
        node, idx = node.false, idx[~mask]
    out[idx] = node.label


def predict(t: DecisionTree, d: Dataset) -> np.ndarray:
    """Vectorised :func:`classify` over every row of ``d``."""
    _check_schema(t, d)
    out = np.empty(len(d), dtype=np.int64)
    _predict_into(t.root, d.matrix, np.arange(len(d)), out)
    return out


# --------------------------------------------------------------------------
# construction


def value_pool(d: Dataset) -> dict[int, tuple]:
    """Candidate test values per predictor: observed numerics, declared categories."""
    pool = {}
    X = d.matrix
    for i in d.schema.predictors:
        a = d.attributes[i]
        if a.is_nominal:
            pool[i] = tuple(range(len(a.values)))
        else:
            col = X[:, i]
            pool[i] = tuple(float(v) for v in np.unique(col[~np.isnan(col)]))
    return pool


def random_test(schema: Schema, pool: dict[int, tuple], rng) -> NodeTest:
    predictors = schema.predictors
    if not predictors:
        raise ValueError("schema has no predictor attributes")
    attr = predictors[rng.randrange(len(predictors))]
    values = pool.get(attr, ())
    if not values:
        raise ValueError(f"empty value pool for attribute {schema.attributes[attr].name!r}")
    value = values[rng.randrange(len(values))]
    return NodeTest(attr, value, schema.attributes[attr].is_nominal)


def random_tree(schema: Schema, pool: dict[int, tuple], rng) -> DecisionTree:
    """One random test over two random leaves (size 3)."""
    test = random_test(schema, pool, rng)
    k = schema.n_classes
    return DecisionTree(Internal(test, Leaf(rng.randrange(k)), Leaf(rng.randrange(k))), schema)


# --------------------------------------------------------------------------
# rules


def extract_rules(t: DecisionTree) -> list[Rule]:
    rules = []
    stack = [(t.root, ())]
    while stack:
        node, conds = stack.pop()
        if isinstance(node, Leaf):
            rules.append(Rule(conds, node.label))
        else:
            stack.append((node.false, conds + ((node.test, False),)))
            stack.append((node.true, conds + ((node.test, True),)))
    return rules


def classify_by_rules(rules: Sequence[Rule], row) -> int:
    for rule in rules:
        if rule.matches(row):
            return rule.label
    raise ValueError("no rule matches the row")


def format_rules(rules: Sequence[Rule], schema: Schema) -> str:
    lines = []
    for rule in rules:
        if rule.conditions:
            cond = " AND ".join(test.describe(schema, taken) for test, taken in rule.conditions)
        else:
            cond = "TRUE"
        lines.append(f"IF {cond} THEN {quote_name(schema.classes[rule.label])}")
    return "\n".join(lines) + "\n"


_NAME = r"(?:'(?:[^'\\]|\\.)*'|[^\s']+)"
_COND_RE = re.compile(rf"\s*({_NAME})\s+(<=|>|!=|=)\s+({_NAME})\s*(?:AND\s+|$)")
_RULE_RE = re.compile(rf"IF\s+(.*)\s+THEN\s+({_NAME})$")


def _unquote(tok: str) -> str:
    if tok.startswith("'"):
        return re.sub(r"\\(.)", r"\1", tok[1:-1])
    return tok


def parse_rules(text: str, schema: Schema) -> list[Rule]:
    """Inverse of :func:`format_rules`."""
    rules = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        m = _RULE_RE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: not a rule: {line!r}")
        body, label = m.group(1), _unquote(m.group(2))
        conds = []
        pos = 0
        while body != "TRUE" and pos < len(body):
            cm = _COND_RE.match(body, pos)
            if not cm:
                raise ValueError(f"line {lineno}: bad condition at {body[pos:]!r}")
            pos = cm.end()
            attr = schema.index_of(_unquote(cm.group(1)))
            op, raw = cm.group(2), _unquote(cm.group(3))
            spec = schema.attributes[attr]
            if spec.is_nominal:
                conds.append((NodeTest(attr, spec.values.index(raw), True), op == "="))
            else:
                conds.append((NodeTest(attr, float(raw)), op == "<="))
        rules.append(Rule(tuple(conds), schema.classes.index(label)))
    return rules


# --------------------------------------------------------------------------
# pruning


def _majority(labels: np.ndarray, n_classes: int) -> int:
    return int(np.argmax(np.bincount(labels, minlength=n_classes)))


def _fallback_label(node: Node, n_classes: int) -> int:
    counts = np.zeros(n_classes, dtype=np.int64)
    for n in iter_nodes(node):
        if isinstance(n, Leaf):
            counts[n.label] += 1
    return int(np.argmax(counts))


def _prune(node: Node, X, y, idx, n_classes) -> tuple[Node, int]:
    """Return (pruned node, correct predictions on rows ``idx``)."""
    if isinstance(node, Leaf):
        return node, int(np.count_nonzero(y[idx] == node.label))
    col = X[idx, node.test.attribute]
    if np.isnan(col).any():
        raise MissingValueError("missing value at tested attribute")
    mask = col == node.test.value if node.test.nominal else col <= node.test.value
    t_node, t_ok = _prune(node.true, X, y, idx[mask], n_classes)
    f_node, f_ok = _prune(node.false, X, y, idx[~mask], n_classes)
    if isinstance(t_node, Leaf) and t_node == f_node:
        return t_node, t_ok + f_ok
    subtree_ok = t_ok + f_ok
    if idx.size:
        label = _majority(y[idx], n_classes)
    else:
        label = _fallback_label(node, n_classes)
    leaf_ok = int(np.count_nonzero(y[idx] == label))
    if leaf_ok >= subtree_ok:
        return Leaf(label), leaf_ok
    if t_node is node.true and f_node is node.false:
        return node, subtree_ok
    return Internal(node.test, t_node, f_node), subtree_ok


def prune(t: DecisionTree, pruning_set: Dataset) -> DecisionTree:
    """Reduced-error pruning against ``pruning_set``.

    Bottom-up, a subtree whose children are the same leaf collapses into
    that leaf; any other subtree is replaced by a leaf of its majority
    pruning-set class when that does not lower pruning-set accuracy.
    """
    if len(pruning_set) == 0:
        raise ValueError("pruning set is empty")
    _check_schema(t, pruning_set)
    root, _ = _prune(
        t.root, pruning_set.matrix, pruning_set.labels, np.arange(len(pruning_set)),
        t.schema.n_classes,
    )
    return DecisionTree(root, t.schema)


# --------------------------------------------------------------------------
# DOT export


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(t: DecisionTree, schema: Optional[Schema] = None) -> str:
    schema = schema or t.schema
    lines = ["digraph tree {", '  node [fontname="Helvetica"];']
    edges = []
    counter = 0
    stack = [(t.root, 0)]
    while stack:
        node, ident = stack.pop()
        if isinstance(node, Leaf):
            label = schema.classes[node.label]
            lines.append(f'  n{ident} [label="{_dot_escape(label)}", shape=ellipse];')
            continue
        lines.append(f'  n{ident} [label="{_dot_escape(node.test.describe(schema))}", shape=box];')
        t_id, f_id = counter + 1, counter + 2
        counter += 2
        edges.append(f'  n{ident} -> n{t_id} [label="yes"];')
        edges.append(f'  n{ident} -> n{f_id} [label="no"];')
        stack.append((node.false, f_id))
        stack.append((node.true, t_id))
    return "\n".join(lines + edges + ["}"]) + "\n"


# --------------------------------------------------------------------------
# model files


def _node_to_json(node: Node, schema: Schema):
    if isinstance(node, Leaf):
        return {"leaf": schema.classes[node.label]}
    attr = schema.attributes[node.test.attribute]
    if node.test.nominal:
        test = {"attr": attr.name, "op": "=", "value": attr.values[node.test.value]}
    else:
        test = {"attr": attr.name, "op": "<=", "value": float(node.test.value)}
    return {
        "test": test,
        "true": _node_to_json(node.true, schema),
        "false": _node_to_json(node.false, schema),
    }


def _node_from_json(obj, schema: Schema) -> Node:
    if not isinstance(obj, dict):
        raise ModelFormatError(f"node must be an object, got {type(obj).__name__}")
    if "leaf" in obj:
        try:
            return Leaf(schema.classes.index(obj["leaf"]))
        except ValueError:
            raise ModelFormatError(f"unknown class label {obj['leaf']!r}") from None
    try:
        test, t, f = obj["test"], obj["true"], obj["false"]
        attr = schema.index_of(test["attr"])
        spec = schema.attributes[attr]
        if spec.is_nominal:
            if test["op"] != "=":
                raise ModelFormatError(f"nominal test on {spec.name!r} must use '='")
            node_test = NodeTest(attr, spec.values.index(test["value"]), True)
        else:
            if test["op"] != "<=" or isinstance(test["value"], (bool, str)):
                raise ModelFormatError(f"numeric test on {spec.name!r} must be '<=' a number")
            node_test = NodeTest(attr, float(test["value"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed test node: {exc}") from None
    return Internal(node_test, _node_from_json(t, schema), _node_from_json(f, schema))


def serialize(t: DecisionTree) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "schema": t.schema.to_json(),
        "class_index": t.schema.class_index,
        "fingerprint": t.fingerprint,
        "root": _node_to_json(t.root, t.schema),
    }
    return json.dumps(doc, indent=2) + "\n"


def deserialize(text: str, schema: Optional[Schema] = None) -> DecisionTree:
    """Load a model; with ``schema`` given, its fingerprint must match."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError("model must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {doc.get('format_version')!r}")
    try:
        stored = Schema.from_json(doc["schema"], doc["class_index"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad schema in model: {exc}") from None
    if doc.get("fingerprint", stored.fingerprint) != stored.fingerprint:
        raise ModelFormatError("stored fingerprint does not match stored schema")
    if schema is not None and schema.fingerprint != stored.fingerprint:
        raise SchemaMismatchError(
            f"model fingerprint {stored.fingerprint} != data fingerprint {schema.fingerprint}"
        )
    if "root" not in doc:
        raise ModelFormatError("model has no root")
    tree = DecisionTree(_node_from_json(doc["root"], stored), stored)
    try:
        tree.validate()
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None
    return tree
