"""Reading and writing a small ARFF subset.

Supported: ``@relation``, ``@attribute`` with ``numeric``/``real`` or a
``{a,b,...}`` nominal list, ``@data`` with dense comma-separated rows,
``%`` line comments, ``?`` for missing values, case-insensitive keywords
and single-quoted names.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

import numpy as np

MISSING = None

Value = Union[float, int, None]

_SPECIAL = set(" \t,{}'\"%\\")


class ArffError(ValueError):
    """Malformed ARFF input. ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    values: Optional[tuple[str, ...]] = None  # None means numeric

    def __post_init__(self):
        if not self.name:
            raise ValueError("attribute name must be non-empty")
        if self.values is not None:
            if not self.values:
                raise ValueError(f"nominal attribute {self.name!r} has no categories")
            if len(set(self.values)) != len(self.values):
                raise ValueError(f"nominal attribute {self.name!r} has duplicate categories")

    @property
    def is_nominal(self) -> bool:
        return self.values is not None

    @property
    def is_numeric(self) -> bool:
        return self.values is None

    @classmethod
    def numeric(cls, name: str) -> "AttributeSpec":
        return cls(name)

    @classmethod
    def nominal(cls, name: str, values: Iterable[str]) -> "AttributeSpec":
        return cls(name, tuple(values))


@dataclass(frozen=True)
class Schema:
    """Ordered attributes plus the index of the (nominal) class attribute."""

    attributes: tuple[AttributeSpec, ...]
    class_index: int

    def __post_init__(self):
        if not self.attributes:
            raise ValueError("schema needs at least one attribute")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        if not 0 <= self.class_index < len(self.attributes):
            raise ValueError(f"class index {self.class_index} out of range")
        if not self.attributes[self.class_index].is_nominal:
            raise ValueError(
                f"class attribute {self.attributes[self.class_index].name!r} must be nominal"
            )

    @property
    def class_attribute(self) -> AttributeSpec:
        return self.attributes[self.class_index]

    @property
    def classes(self) -> tuple[str, ...]:
        return self.class_attribute.values

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def predictors(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.attributes)) if i != self.class_index)

    def index_of(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise KeyError(name)

    def to_json(self) -> list[dict]:
        out = []
        for a in self.attributes:
            if a.is_numeric:
                out.append({"name": a.name, "kind": "numeric"})
            else:
                out.append({"name": a.name, "kind": "nominal", "values": list(a.values)})
        return out

    @classmethod
    def from_json(cls, attrs: list[dict], class_index: int) -> "Schema":
        specs = []
        for a in attrs:
            if a["kind"] == "numeric":
                specs.append(AttributeSpec.numeric(a["name"]))
            elif a["kind"] == "nominal":
                specs.append(AttributeSpec.nominal(a["name"], a["values"]))
            else:
                raise ValueError(f"unknown attribute kind {a['kind']!r}")
        return cls(tuple(specs), class_index)

    @cached_property
    def fingerprint(self) -> str:
        blob = json.dumps([self.to_json(), self.class_index], separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Dataset:
    """Immutable table of instances over a :class:`Schema`.

    Numeric cells hold floats, nominal cells hold category indices and
    missing cells hold ``None``.
    """

    schema: Schema
    instances: tuple[tuple[Value, ...], ...] = ()
    relation: str = "data"
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if self._checked:
            return
        width = len(self.schema.attributes)
        for r, row in enumerate(self.instances):
            if len(row) != width:
                raise ValueError(f"row {r} has {len(row)} values, expected {width}")
            for a, v in zip(self.schema.attributes, row):
                if v is MISSING:
                    continue
                if a.is_numeric:
                    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                        raise ValueError(f"row {r}: {a.name} must be a finite real, got {v!r}")
                elif not isinstance(v, int) or not 0 <= v < len(a.values):
                    raise ValueError(f"row {r}: {a.name} category index {v!r} out of range")

    @property
    def attributes(self) -> tuple[AttributeSpec, ...]:
        return self.schema.attributes

    @property
    def class_index(self) -> int:
        return self.schema.class_index

    def __len__(self) -> int:
        return len(self.instances)

    @cached_property
    def matrix(self) -> np.ndarray:
        """All cells as float64, missing as NaN. Shape (rows, attributes)."""
        m = np.full((len(self.instances), len(self.attributes)), np.nan)
        for r, row in enumerate(self.instances):
            for c, v in enumerate(row):
                if v is not MISSING:
                    m[r, c] = v
        m.setflags(write=False)
        return m

    @cached_property
    def labels(self) -> np.ndarray:
        col = self.matrix[:, self.class_index]
        if np.isnan(col).any():
            raise ValueError("dataset has unlabeled rows")
        return col.astype(np.int64)

    @property
    def is_labeled(self) -> bool:
        return all(row[self.class_index] is not MISSING for row in self.instances)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        rows = tuple(self.instances[i] for i in indices)
        return Dataset(self.schema, rows, self.relation, _checked=True)


# --------------------------------------------------------------------------
# parsing


def _scan_token(line: str, pos: int, lineno: int) -> tuple[str, bool, int]:
    """Read one name/value token starting at ``pos``.

    Returns (text, was_quoted, next_pos).
    """
    n = len(line)
    if pos < n and line[pos] == "'":
        out = []
        i = pos + 1
        while i < n:
            ch = line[i]
            if ch == "\\" and i + 1 < n:
                out.append(line[i + 1])
                i += 2
                continue
            if ch == "'":
                return "".join(out), True, i + 1
            out.append(ch)
            i += 1
        raise ArffError("unterminated quoted name", lineno, pos + 1)
    i = pos
    while i < n and line[i] not in " \t,{}":
        i += 1
    if i == pos:
        raise ArffError("expected a name", lineno, pos + 1)
    return line[pos:i], False, i


def _skip_ws(line: str, pos: int) -> int:
    while pos < len(line) and line[pos] in " \t":
        pos += 1
    return pos


def _parse_attribute(line: str, pos: int, lineno: int) -> AttributeSpec:
    pos = _skip_ws(line, pos)
    name, _, pos = _scan_token(line, pos, lineno)
    pos = _skip_ws(line, pos)
    if pos >= len(line):
        raise ArffError(f"attribute {name!r} has no type", lineno, pos + 1)
    if line[pos] == "{":
        values = []
        pos += 1
        while True:
            pos = _skip_ws(line, pos)
            value, _, pos = _scan_token(line, pos, lineno)
            values.append(value)
            pos = _skip_ws(line, pos)
            if pos >= len(line):
                raise ArffError("unterminated nominal list", lineno, pos + 1)
            if line[pos] == "}":
                pos += 1
                break
            if line[pos] != ",":
                raise ArffError(f"unexpected {line[pos]!r} in nominal list", lineno, pos + 1)
            pos += 1
        if len(set(values)) != len(values):
            raise ArffError(f"duplicate category in attribute {name!r}", lineno, 1)
        spec = AttributeSpec.nominal(name, values)
    else:
        kind, _, pos = _scan_token(line, pos, lineno)
        if kind.lower() not in ("numeric", "real"):
            raise ArffError(f"unsupported attribute type {kind!r}", lineno, pos - len(kind) + 1)
        spec = AttributeSpec.numeric(name)
    pos = _skip_ws(line, pos)
    if pos < len(line):
        raise ArffError("trailing text after attribute declaration", lineno, pos + 1)
    return spec


def _parse_row(line: str, lineno: int, attributes: Sequence[AttributeSpec]) -> tuple[Value, ...]:
    values: list[Value] = []
    pos = 0
    while True:
        pos = _skip_ws(line, pos)
        col = pos + 1
        if len(values) >= len(attributes):
            raise ArffError(f"row has more than {len(attributes)} values", lineno, col)
        attr = attributes[len(values)]
        token, quoted, pos = _scan_token(line, pos, lineno)
        if token == "?" and not quoted:
            values.append(MISSING)
        elif attr.is_numeric:
            try:
                x = float(token)
            except ValueError:
                raise ArffError(f"non-numeric value {token!r} for {attr.name!r}", lineno, col) from None
            if quoted or not math.isfinite(x):
                raise ArffError(f"non-numeric value {token!r} for {attr.name!r}", lineno, col)
            values.append(x)
        else:
            try:
                values.append(attr.values.index(token))
            except ValueError:
                raise ArffError(
                    f"undeclared nominal value {token!r} for {attr.name!r}", lineno, col
                ) from None
        pos = _skip_ws(line, pos)
        if pos >= len(line):
            break
        if line[pos] != ",":
            raise ArffError(f"expected ',' but found {line[pos]!r}", lineno, pos + 1)
        pos += 1
    if len(values) != len(attributes):
        raise ArffError(f"row has {len(values)} values, expected {len(attributes)}", lineno, 1)
    return tuple(values)


def parse_arff(
    source: str,
    class_attribute: Union[int, str, None] = None,
    allow_unlabeled: bool = False,
) -> Dataset:
    """Parse ARFF text into a :class:`Dataset`.

    ``class_attribute`` selects the class by index or name; the last
    attribute is used by default. With ``allow_unlabeled`` the class column
    may contain ``?`` (used for prediction inputs).
    """
    relation = None
    attributes: list[AttributeSpec] = []
    rows: list[tuple[Value, ...]] = []
    in_data = False
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            rows.append(_parse_row(line, lineno, attributes))
            continue
        if not line.startswith("@"):
            raise ArffError(f"unexpected text {line[:20]!r} before @data", lineno, 1)
        word = line.split(None, 1)[0].lower()
        offset = raw.index(line[0]) + 1
        if word == "@relation":
            if relation is not None:
                raise ArffError("duplicate @relation", lineno, offset)
            if attributes:
                raise ArffError("@relation must precede @attribute", lineno, offset)
            pos = _skip_ws(line, len(word))
            relation, _, pos = _scan_token(line, pos, lineno)
            if _skip_ws(line, pos) < len(line):
                raise ArffError("trailing text after relation name", lineno, pos + 1)
        elif word == "@attribute":
            if relation is None:
                raise ArffError("@attribute before @relation", lineno, offset)
            spec = _parse_attribute(line, len(word), lineno)
            if any(a.name == spec.name for a in attributes):
                raise ArffError(f"duplicate attribute name {spec.name!r}", lineno, offset)
            attributes.append(spec)
        elif word == "@data":
            if line.lower() != "@data":
                raise ArffError("trailing text after @data", lineno, offset + 5)
            if relation is None:
                raise ArffError("missing @relation", lineno, offset)
            if not attributes:
                raise ArffError("no attributes declared", lineno, offset)
            in_data = True
        else:
            raise ArffError(f"unknown keyword {word!r}", lineno, offset)
    if not in_data:
        if not attributes:
            raise ArffError("no attributes declared", 0, 0)
        raise ArffError("missing @data section", 0, 0)

    if class_attribute is None:
        class_index = len(attributes) - 1
    elif isinstance(class_attribute, str):
        names = [a.name for a in attributes]
        if class_attribute not in names:
            raise ArffError(f"class attribute {class_attribute!r} not declared")
        class_index = names.index(class_attribute)
    else:
        class_index = class_attribute
        if not -len(attributes) <= class_index < len(attributes):
            raise ArffError(f"class index {class_index} out of range")
        class_index %= len(attributes)
    if not attributes[class_index].is_nominal:
        raise ArffError(f"class attribute {attributes[class_index].name!r} is not nominal")
    if not allow_unlabeled:
        for r, row in enumerate(rows):
            if row[class_index] is MISSING:
                raise ArffError(f"data row {r + 1} has a missing class value")
    schema = Schema(tuple(attributes), class_index)
    return Dataset(schema, tuple(rows), relation, _checked=True)


def read_arff(path, **kwargs) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_arff(fh.read(), **kwargs)


# --------------------------------------------------------------------------
# writing


def quote_name(name: str) -> str:
    """Single-quote ``name`` when it is not a safe bare word."""
    needs = (
        not name
        or name == "?"
        or name[0] == "@"
        or any(ch in _SPECIAL or ch.isspace() for ch in name)
    )
    if not needs:
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_number(x: float) -> str:
    # repr is the shortest string that parses back to the same double
    return repr(float(x))


def write_arff(d: Dataset, comments: Iterable[str] = ()) -> str:
    lines = [f"% {c}" for c in comments]
    lines.append(f"@relation {quote_name(d.relation)}")
    lines.append("")
    for a in d.attributes:
        if a.is_numeric:
            kind = "numeric"
        else:
            kind = "{" + ",".join(quote_name(v) for v in a.values) + "}"
        lines.append(f"@attribute {quote_name(a.name)} {kind}")
    lines.append("")
    lines.append("@data")
    for row in d.instances:
        cells = []
        for a, v in zip(d.attributes, row):
            if v is MISSING:
                cells.append("?")
            elif a.is_numeric:
                cells.append(format_number(v))
            else:
                cells.append(quote_name(a.values[v]))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
