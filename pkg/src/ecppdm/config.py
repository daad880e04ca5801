"""Pipeline configuration: one YAML file validated up front.

Every stage reads the same PipelineConfig; the first invalid field aborts
with its name.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .curve import DomainParams, ECPoint, make_domain, validate_curve
from .ecelgamal import EncodingParams
from .errors import ConfigError
from .etl import ConfidentialAttr, Schema
from .mining_eval import MiningParams
from .perturb import Op


@dataclass(frozen=True)
class SourceSpec:
    source_id: str
    csv_path: str | None = None
    generate_rows: int | None = None


@dataclass
class PipelineConfig:
    seed: int
    domain: DomainParams
    encoding: EncodingParams
    schema: Schema
    sources: list[SourceSpec]
    transport_mode: str  # "file" | "stream"
    endpoint_host: str
    endpoint_port: int  # 0 picks a free port
    perturb_op: Op
    perturb_variance: float
    perturb_variances: dict[str, float]
    mining: MiningParams
    record_schedule: tuple[int, ...]
    out_dir: str
    warehouse_private_scalar: int | None = None
    raw: dict = field(default_factory=dict)


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"missing config field: {context}{key}")
    return mapping[key]


def parse_config(doc: dict) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")

    seed = _require(doc, "seed", "")
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")

    dom = _require(doc, "domain", "")
    try:
        curve = validate_curve(
            _require(dom, "p", "domain."),
            _require(dom, "a", "domain."),
            _require(dom, "b", "domain."),
        )
        G = ECPoint(_require(dom, "gx", "domain."), _require(dom, "gy", "domain."))
        domain = make_domain(curve, G, dom.get("order"))
    except ConfigError:
        raise
    except Exception as e:
        raise ConfigError(f"domain: {e}") from e

    try:
        encoding = EncodingParams(k_pad=doc.get("encoding", {}).get("k_pad", 20))
    except ValueError as e:
        raise ConfigError(f"encoding.k_pad: {e}") from e

    sch = _require(doc, "schema", "")
    try:
        confidential = tuple(
            ConfidentialAttr(
                _require(a, "name", "schema.confidential."),
                float(a.get("scale", 100.0)),
                float(a.get("offset", 0.0)),
            )
            for a in _require(sch, "confidential", "schema.")
        )
        schema = Schema(confidential, tuple(sch.get("categorical", [])))
    except ConfigError:
        raise
    except Exception as e:
        raise ConfigError(f"schema: {e}") from e

    sources = []
    for s in _require(doc, "sources", ""):
        sid = _require(s, "id", "sources.")
        if "csv" in s:
            sources.append(SourceSpec(sid, csv_path=s["csv"]))
        elif "generate_rows" in s:
            sources.append(SourceSpec(sid, generate_rows=int(s["generate_rows"])))
        else:
            raise ConfigError(f"sources.{sid}: needs either 'csv' or 'generate_rows'")
    if len({s.source_id for s in sources}) != len(sources):
        raise ConfigError("sources: duplicate source ids")

    transport = doc.get("transport", {})
    mode = transport.get("mode", "file")
    if mode not in ("file", "stream"):
        raise ConfigError(f"transport.mode: {mode!r} is not 'file' or 'stream'")

    pert = doc.get("perturb", {})
    op_name = pert.get("op", "mult")
    try:
        op = Op(op_name)
    except ValueError:
        raise ConfigError(f"perturb.op: {op_name!r} is not 'mult' or 'add'") from None
    variance = float(pert.get("variance", 0.0))
    if variance < 0:
        raise ConfigError("perturb.variance: must be nonnegative")
    variances = {k: float(v) for k, v in pert.get("variances", {}).items()}
    for name, v in variances.items():
        if v < 0:
            raise ConfigError(f"perturb.variances.{name}: must be nonnegative")

    mining_doc = doc.get("mining", {})
    try:
        mining = MiningParams(
            minsup=float(mining_doc.get("minsup", 0.2)),
            minconf=float(mining_doc.get("minconf", 0.6)),
            bins=int(mining_doc.get("bins", 4)),
        )
    except ValueError as e:
        raise ConfigError(f"mining: {e}") from e

    schedule = tuple(doc.get("experiment", {}).get("record_counts", (200, 400, 600, 800)))
    if any(not isinstance(c, int) or c <= 0 for c in schedule):
        raise ConfigError("experiment.record_counts: must be positive integers")

    out_dir = doc.get("output", {}).get("dir", "out")

    scalar = doc.get("warehouse", {}).get("private_scalar")
    if scalar is not None and not (1 <= scalar < domain.order_of_G):
        raise ConfigError("warehouse.private_scalar: outside [1, order-1]")

    return PipelineConfig(
        seed=seed,
        domain=domain,
        encoding=encoding,
        schema=schema,
        sources=sources,
        transport_mode=mode,
        endpoint_host=transport.get("host", "127.0.0.1"),
        endpoint_port=int(transport.get("port", 0)),
        perturb_op=op,
        perturb_variance=variance,
        perturb_variances=variances,
        mining=mining,
        record_schedule=schedule,
        out_dir=out_dir,
        warehouse_private_scalar=scalar,
        raw=doc,
    )


def load_config(path: str, seed_override: int | None = None, out_override: str | None = None) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as f:
            doc = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"config is not valid YAML: {e}") from e
    if seed_override is not None:
        doc["seed"] = seed_override
    if out_override is not None:
        doc.setdefault("output", {})["dir"] = out_override
    return parse_config(doc)
