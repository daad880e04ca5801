"""Synthetic medical-style data with planted association rules.

The generator draws every record from a base distribution (uniform numeric
values over a fixed range, categorical values from fixed weights) and then,
with a per-rule probability, forces the consequent attribute of a planted
rule into its target bin. Rule strengths vary so marginal rules need more
records before mining finds them.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .etl import ConfidentialAttr, Dataset, Record, Schema
from .perturb import stream_seed

NUMERIC_LO = 50.0
NUMERIC_HI = 250.0
BINS = 4

DEFAULT_SCHEMA = Schema(
    confidential_attrs=(
        ConfidentialAttr("systolic", scale=100.0),
        ConfidentialAttr("cholesterol", scale=100.0),
        ConfidentialAttr("glucose", scale=100.0),
    ),
    categorical_attrs=("diagnosis", "smoker"),
)

_DIAGNOSES = (("hypertension", 0.35), ("diabetes", 0.35), ("healthy", 0.30))
_SMOKER = (("yes", 0.40), ("no", 0.60))


@dataclass(frozen=True)
class PlantedRule:
    """If `when` matches the drawn categoricals, force `attr` into bin
    `target_bin` with probability `strength`."""

    when: tuple[tuple[str, str], ...]
    attr: str
    target_bin: int
    strength: float

    def as_item_rule(self) -> tuple[frozenset[str], frozenset[str]]:
        antecedent = frozenset(f"{k}={v}" for k, v in self.when)
        consequent = frozenset([f"{self.attr}=b{self.target_bin}"])
        return antecedent, consequent


PLANTED_RULES = (
    PlantedRule((("diagnosis", "hypertension"),), "systolic", 3, 0.90),
    PlantedRule((("diagnosis", "diabetes"),), "glucose", 2, 0.80),
    PlantedRule((("smoker", "yes"),), "cholesterol", 2, 0.70),
    PlantedRule((("diagnosis", "healthy"),), "systolic", 0, 0.75),
    PlantedRule((("smoker", "no"),), "cholesterol", 1, 0.55),
)


def planted_item_rules(rules=PLANTED_RULES) -> list[tuple[frozenset[str], frozenset[str]]]:
    return [r.as_item_rule() for r in rules]


def _weighted(rng: random.Random, table) -> str:
    x = rng.random()
    acc = 0.0
    for value, w in table:
        acc += w
        if x < acc:
            return value
    return table[-1][0]


def _bin_interior(rng: random.Random, target_bin: int) -> float:
    """A value safely inside the target bin (10% margin off each edge)."""
    width = (NUMERIC_HI - NUMERIC_LO) / BINS
    lo = NUMERIC_LO + target_bin * width
    return rng.uniform(lo + 0.1 * width, lo + 0.9 * width)


def generate(
    n: int,
    seed: int,
    schema: Schema = DEFAULT_SCHEMA,
    rules=PLANTED_RULES,
    source_id: str | None = None,
) -> Dataset:
    """n records; deterministic for a given (seed, source_id)."""
    rng = random.Random(stream_seed(seed, f"datagen:{source_id or ''}"))
    conf_names = [a.name for a in schema.confidential_attrs]
    records = []
    for _ in range(n):
        cats = {"diagnosis": _weighted(rng, _DIAGNOSES), "smoker": _weighted(rng, _SMOKER)}
        conf = {name: rng.uniform(NUMERIC_LO, NUMERIC_HI) for name in conf_names}
        for rule in rules:
            if all(cats.get(k) == v for k, v in rule.when):
                if rng.random() < rule.strength:
                    conf[rule.attr] = _bin_interior(rng, rule.target_bin)
        records.append(
            Record(
                tuple(round(conf[name], 2) for name in conf_names),
                tuple(cats[name] for name in schema.categorical_attrs),
            )
        )
    provenance = (source_id,) if source_id else ()
    return Dataset(schema, tuple(records), provenance)
