"""Warehouse-side ETL: CSV ingestion, multi-source merge, cleaning.

Confidential numeric attributes carry a quantization (scale, offset) that
maps real values to the nonnegative integers the encryption layer encodes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import HeaderMismatch, IoFailure, SchemaMismatch


@dataclass(frozen=True)
class ConfidentialAttr:
    """Numeric attribute quantized as round((v - offset) * scale)."""

    name: str
    scale: float = 100.0
    offset: float = 0.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"scale for {self.name} must be positive")

    def quantize(self, v: float) -> int:
        return round((v - self.offset) * self.scale)

    def dequantize(self, q: int) -> float:
        return q / self.scale + self.offset


@dataclass(frozen=True)
class Schema:
    confidential_attrs: tuple[ConfidentialAttr, ...]
    categorical_attrs: tuple[str, ...]

    def __post_init__(self):
        names = [a.name for a in self.confidential_attrs] + list(self.categorical_attrs)
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")

    @property
    def header(self) -> list[str]:
        return [a.name for a in self.confidential_attrs] + list(self.categorical_attrs)


@dataclass(frozen=True)
class Record:
    confidential: tuple[float | None, ...]
    categorical: tuple[str, ...]

    @property
    def has_missing(self) -> bool:
        return any(v is None for v in self.confidential)


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    rows: tuple[Record, ...]
    provenance: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class CleaningReport:
    rows_in: int = 0
    rows_out: int = 0
    duplicates_removed: int = 0
    missing_dropped: int = 0

    @property
    def is_empty(self) -> bool:
        return self.duplicates_removed == 0 and self.missing_dropped == 0


def merge_sources(batches: list[Dataset]) -> Dataset:
    """Concatenate same-schema datasets, ordered by source id."""
    if not batches:
        raise SchemaMismatch("nothing to merge")
    schema = batches[0].schema
    for b in batches[1:]:
        if b.schema != schema:
            raise SchemaMismatch("input schemas differ")
    ordered = sorted(batches, key=lambda b: b.provenance)
    rows: list[Record] = []
    provenance: list[str] = []
    for b in ordered:
        rows.extend(b.rows)
        for s in b.provenance:
            if s not in provenance:
                provenance.append(s)
    return Dataset(schema, tuple(rows), tuple(sorted(provenance)))


def clean(data: Dataset) -> tuple[Dataset, CleaningReport]:
    """Drop rows with missing confidential values, then exact duplicates."""
    report = CleaningReport(rows_in=len(data.rows))
    seen: set[Record] = set()
    kept: list[Record] = []
    for row in data.rows:
        if row.has_missing:
            report.missing_dropped += 1
            continue
        if row in seen:
            report.duplicates_removed += 1
            continue
        seen.add(row)
        kept.append(row)
    report.rows_out = len(kept)
    return Dataset(data.schema, tuple(kept), data.provenance), report


def ingest_csv(path: str, schema: Schema, source_id: str | None = None) -> Dataset:
    """Parse a CSV whose header matches the schema; bad numerics become missing."""
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            rows = list(reader)
    except OSError as e:
        raise IoFailure(str(e)) from e
    if not rows or rows[0] != schema.header:
        raise HeaderMismatch(f"header of {path} does not match schema {schema.header}")
    d = len(schema.confidential_attrs)
    records = []
    for raw in rows[1:]:
        if not raw:
            continue
        conf: list[float | None] = []
        for cell in raw[:d]:
            try:
                conf.append(float(cell))
            except ValueError:
                conf.append(None)
        records.append(Record(tuple(conf), tuple(raw[d:])))
    provenance = (source_id,) if source_id else ()
    return Dataset(schema, tuple(records), provenance)


def write_csv(data: Dataset, path: str, with_provenance: bool = True) -> None:
    """Canonical serialization: optional provenance comment, header, rows."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            if with_provenance:
                f.write("#provenance:" + ",".join(sorted(data.provenance)) + "\n")
            writer = csv.writer(f)
            writer.writerow(data.schema.header)
            for row in data.rows:
                cells = [repr(v) if v is not None else "" for v in row.confidential]
                writer.writerow(cells + list(row.categorical))
    except OSError as e:
        raise IoFailure(str(e)) from e


def read_canonical_csv(path: str, schema: Schema) -> Dataset:
    """Read back a file produced by write_csv."""
    try:
        with open(path, newline="", encoding="utf-8") as f:
            first = f.readline()
            provenance: tuple[str, ...] = ()
            if first.startswith("#provenance:"):
                tail = first[len("#provenance:"):].strip()
                provenance = tuple(s for s in tail.split(",") if s)
                rest = f.read()
            else:
                rest = first + f.read()
    except OSError as e:
        raise IoFailure(str(e)) from e
    rows = list(csv.reader(rest.splitlines()))
    if not rows or rows[0] != schema.header:
        raise HeaderMismatch(f"header of {path} does not match schema")
    d = len(schema.confidential_attrs)
    records = []
    for raw in rows[1:]:
        if not raw:
            continue
        conf = tuple(float(c) if c else None for c in raw[:d])
        records.append(Record(conf, tuple(raw[d:])))
    return Dataset(schema, tuple(records), provenance)
