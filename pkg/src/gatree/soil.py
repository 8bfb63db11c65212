"""Synthetic soil-texture datasets.

Sand/silt/clay compositions are sampled uniformly on the simplex and
labelled with a first-match-wins table of linear inequalities that
approximates the USDA texture triangle over eleven texture classes.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

from .arff import AttributeSpec, Dataset, Schema

# symbol -> long name, in the order the class attribute declares them
TEXTURE_CLASSES = {
    "s": "Sand",
    "sicl": "Silty Clay Loam",
    "sic": "Silty Clay",
    "c": "Clay",
    "sl": "Sandy loam",
    "cl": "Clay loam",
    "sil": "Silty Loam",
    "l": "Loam",
    "ls": "Loamy sand",
    "scl": "Sand Clay Loam",
    "sc": "Sand Clay",
}

ATTRIBUTE_NAMES = (
    "Depth", "Sand", "Silt", "Clay",
    "Sandbysilt", "Sandbyclay", "Sandbysiltclay", "TextureClass",
)

RATIO_FLOOR = 0.5
SUM_TOL = 1e-9


@dataclass(frozen=True)
class Inequality:
    sand: float
    silt: float
    clay: float
    op: str
    bound: float

    def holds(self, sand: float, silt: float, clay: float) -> bool:
        lhs = self.sand * sand + self.silt * silt + self.clay * clay
        return lhs <= self.bound if self.op == "<=" else lhs >= self.bound


@dataclass(frozen=True)
class TextureBoundaryTable:
    version: str
    rows: tuple[tuple[tuple[Inequality, ...], str], ...]

    def __post_init__(self):
        symbols = [s for _, s in self.rows]
        unknown = set(symbols) - set(TEXTURE_CLASSES)
        if unknown:
            raise ValueError(f"unknown texture symbols {sorted(unknown)}")

    @classmethod
    def from_json(cls, doc: dict) -> "TextureBoundaryTable":
        rows = []
        for entry in doc["classes"]:
            conds = []
            for a, b, c, op, bound in entry["conditions"]:
                if op not in ("<=", ">="):
                    raise ValueError(f"unsupported operator {op!r}")
                conds.append(Inequality(a, b, c, op, bound))
            rows.append((tuple(conds), entry["symbol"]))
        return cls(doc["version"], tuple(rows))


@lru_cache(maxsize=None)
def default_table() -> TextureBoundaryTable:
    text = resources.files("gatree").joinpath("data/texture_boundaries.json").read_text("utf-8")
    return TextureBoundaryTable.from_json(json.loads(text))


def classify_texture(
    sand: float, silt: float, clay: float, table: Optional[TextureBoundaryTable] = None
) -> str:
    """Texture symbol of the first table row whose inequalities all hold."""
    if min(sand, silt, clay) < 0:
        raise ValueError(f"negative fraction in ({sand}, {silt}, {clay})")
    if abs(sand + silt + clay - 100) > SUM_TOL:
        raise ValueError(f"sand+silt+clay = {sand + silt + clay}, expected 100")
    table = table or default_table()
    for conds, symbol in table.rows:
        if all(c.holds(sand, silt, clay) for c in conds):
            return symbol
    raise ValueError(f"no texture class covers ({sand}, {silt}, {clay})")


@dataclass(frozen=True)
class GenConfig:
    n: int = 500
    seed: int = 0
    noise_rate: float = 0.0
    depth_range: tuple[float, float] = (0.0, 2.0)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError(f"noise_rate must be in [0, 1), got {self.noise_rate}")
        lo, hi = self.depth_range
        if not (math.isfinite(lo) and math.isfinite(hi) and 0 <= lo < hi):
            raise ValueError(f"depth_range must satisfy 0 <= min < max, got {self.depth_range}")


def soil_schema() -> Schema:
    attrs = [AttributeSpec.numeric(name) for name in ATTRIBUTE_NAMES[:-1]]
    attrs.append(AttributeSpec.nominal(ATTRIBUTE_NAMES[-1], TEXTURE_CLASSES))
    return Schema(tuple(attrs), len(attrs) - 1)


def header_comments(cfg: GenConfig, table: TextureBoundaryTable) -> list[str]:
    return [
        "Synthetic soil texture data",
        f"n={cfg.n} seed={cfg.seed} noise_rate={cfg.noise_rate!r} "
        f"depth_range={cfg.depth_range[0]!r}..{cfg.depth_range[1]!r} table={table.version}",
        f"Ratio denominators are floored at {RATIO_FLOOR} percentage points.",
    ]


def generate(cfg: GenConfig, table: Optional[TextureBoundaryTable] = None) -> Dataset:
    table = table or default_table()
    schema = soil_schema()
    classes = schema.classes
    rng = random.Random(cfg.seed)
    lo, hi = cfg.depth_range
    rows = []
    for _ in range(cfg.n):
        depth = round(rng.uniform(lo, hi), 2)
        u, v = sorted((rng.random(), rng.random()))
        sand, cut = round(100 * u, 2), round(100 * v, 2)
        silt = round(cut - sand, 2)
        clay = round(100 - cut, 2)
        label = classify_texture(sand, silt, clay, table)
        rows.append([
            depth, sand, silt, clay,
            sand / max(silt, RATIO_FLOOR),
            sand / max(clay, RATIO_FLOOR),
            sand / max(silt + clay, RATIO_FLOOR),
            classes.index(label),
        ])
    n_noisy = round(cfg.noise_rate * cfg.n)
    for i in sorted(rng.sample(range(cfg.n), n_noisy)):
        shift = 1 + rng.randrange(len(classes) - 1)
        rows[i][-1] = (rows[i][-1] + shift) % len(classes)
    return Dataset(schema, tuple(tuple(r) for r in rows), "soil")
