"""Data distortion: additive (Y = X + e) and multiplicative (Y = X * e)
perturbation of confidential attributes with uniform noise.

Multiplicative noise is drawn around mean 1.0 so attribute means are
preserved in expectation. Each attribute gets its own seeded stream keyed
by (seed, attribute name); noise is drawn fresh per cell, in row order.
"""
from __future__ import annotations

import enum
import hashlib
import math
import random
from dataclasses import dataclass

from .errors import NegativeVariance, PlanIncomplete
from .etl import Dataset, Record, Schema


class Op(enum.Enum):
    MULT = "mult"
    ADD = "add"


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform noise on [mean - sqrt(3*var), mean + sqrt(3*var)]."""

    mean: float
    variance: float
    seed: int

    def __post_init__(self):
        if self.variance < 0:
            raise NegativeVariance(f"variance {self.variance} < 0")

    @property
    def half_width(self) -> float:
        return math.sqrt(3.0 * self.variance)


def stream_seed(seed: int, key: str) -> int:
    """Stable per-key sub-seed, independent of Python's hash randomization."""
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def draw_noise(spec: NoiseSpec, n: int) -> list[float]:
    rng = random.Random(spec.seed)
    if spec.half_width == 0.0:
        return [spec.mean] * n
    lo, hi = spec.mean - spec.half_width, spec.mean + spec.half_width
    return [rng.uniform(lo, hi) for _ in range(n)]


def perturb_additive(x: float, e: float) -> float:
    return x + e


def perturb_multiplicative(x: float, e: float) -> float:
    return x * e


@dataclass(frozen=True)
class PlanEntry:
    attr: str
    op: Op
    noise: NoiseSpec


@dataclass(frozen=True)
class PerturbPlan:
    entries: tuple[PlanEntry, ...]

    def entry_for(self, attr: str) -> PlanEntry | None:
        for e in self.entries:
            if e.attr == attr:
                return e
        return None

    @classmethod
    def build(
        cls,
        schema: Schema,
        seed: int,
        variance: float = 0.0,
        op: Op = Op.MULT,
        variances: dict[str, float] | None = None,
        ops: dict[str, Op] | None = None,
    ) -> "PerturbPlan":
        """One entry per confidential attribute, each with its own stream."""
        entries = []
        for attr in schema.confidential_attrs:
            a_op = (ops or {}).get(attr.name, op)
            a_var = (variances or {}).get(attr.name, variance)
            mean = 1.0 if a_op is Op.MULT else 0.0
            spec = NoiseSpec(mean, a_var, stream_seed(seed, attr.name))
            entries.append(PlanEntry(attr.name, a_op, spec))
        return cls(tuple(entries))


def transform_dataset(data: Dataset, plan: PerturbPlan) -> Dataset:
    """Perturb every confidential cell; categorical cells pass through."""
    names = [a.name for a in data.schema.confidential_attrs]
    entries = []
    for name in names:
        entry = plan.entry_for(name)
        if entry is None:
            raise PlanIncomplete(f"plan has no entry for attribute {name!r}")
        entries.append(entry)

    n = len(data.rows)
    columns = []
    for entry in entries:
        draws = draw_noise(entry.noise, n)
        columns.append((entry.op, draws))

    rows = []
    for i, row in enumerate(data.rows):
        conf = []
        for j, value in enumerate(row.confidential):
            op, draws = columns[j]
            if value is None:
                conf.append(None)
            elif op is Op.MULT:
                conf.append(perturb_multiplicative(value, draws[i]))
            else:
                conf.append(perturb_additive(value, draws[i]))
        rows.append(Record(tuple(conf), row.categorical))
    return Dataset(data.schema, tuple(rows), data.provenance)
