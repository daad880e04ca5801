"""Stage orchestration: keygen, send, receive, etl, perturb, mine.

Every stage persists its artifacts under the configured output directory so
each transformation is inspectable, and every random choice derives from the
config seed, making reruns byte-identical.
"""
from __future__ import annotations

import os
import random
import threading

from . import datagen
from .config import PipelineConfig, SourceSpec
from .curve import ECPoint
from .ecelgamal import KeyPair, keygen
from .errors import ConfigError, EcppdmError, IncompleteDelivery, StageError
from .etl import Dataset, clean, ingest_csv, merge_sources, read_canonical_csv, write_csv
from .mining_eval import AccuracyReport, run_experiment
from .perturb import PerturbPlan, stream_seed, transform_dataset
from .transport import (
    EncryptedBatch,
    WarehouseServer,
    decrypt_batch,
    encrypt_batch,
    receive_batches_file,
    send_batch_file,
    send_batch_stream,
)


def _path(cfg: PipelineConfig, *parts: str) -> str:
    path = os.path.join(cfg.out_dir, *parts)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


def warehouse_keypair(cfg: PipelineConfig) -> KeyPair:
    scalar = cfg.warehouse_private_scalar
    if scalar is None:
        rng = random.Random(stream_seed(cfg.seed, "warehouse-key"))
        scalar = rng.randrange(1, cfg.domain.order_of_G)
    return keygen(cfg.domain, scalar)


def run_keygen(cfg: PipelineConfig) -> KeyPair:
    kp = warehouse_keypair(cfg)
    with open(_path(cfg, "keys", "warehouse.key"), "w") as f:
        f.write(f"{kp.private_scalar}\n")
    with open(_path(cfg, "keys", "warehouse.pub"), "w") as f:
        f.write(f"{kp.public_point.x} {kp.public_point.y}\n")
    return kp


def load_public_key(cfg: PipelineConfig) -> ECPoint:
    path = os.path.join(cfg.out_dir, "keys", "warehouse.pub")
    with open(path) as f:
        x, y = f.read().split()
    return ECPoint(int(x), int(y))


def load_keypair(cfg: PipelineConfig) -> KeyPair:
    path = os.path.join(cfg.out_dir, "keys", "warehouse.key")
    with open(path) as f:
        return keygen(cfg.domain, int(f.read().strip()))


def source_dataset(cfg: PipelineConfig, spec: SourceSpec) -> Dataset:
    """Load or synthesize one source's data and persist it as an artifact."""
    if spec.csv_path is not None:
        data = ingest_csv(spec.csv_path, cfg.schema, spec.source_id)
    else:
        gen_names = {a.name for a in datagen.DEFAULT_SCHEMA.confidential_attrs}
        cfg_names = {a.name for a in cfg.schema.confidential_attrs}
        if gen_names != cfg_names or set(cfg.schema.categorical_attrs) != set(
            datagen.DEFAULT_SCHEMA.categorical_attrs
        ):
            raise ConfigError(
                f"sources.{spec.source_id}: the generator requires the default schema attributes"
            )
        data = datagen.generate(spec.generate_rows, cfg.seed, cfg.schema, source_id=spec.source_id)
    write_csv(data, _path(cfg, "sources", f"{spec.source_id}.csv"))
    return data


def build_batch(cfg: PipelineConfig, spec: SourceSpec, recipient_public: ECPoint) -> EncryptedBatch:
    data = source_dataset(cfg, spec)
    # rows with missing confidential cells cannot be encoded; drop them at
    # the source (the warehouse clean stage handles duplicates)
    complete = Dataset(
        data.schema,
        tuple(r for r in data.rows if not r.has_missing),
        data.provenance,
    )
    rng = random.Random(stream_seed(cfg.seed, f"ephemeral:{spec.source_id}"))
    return encrypt_batch(complete, spec.source_id, recipient_public, cfg.domain, cfg.encoding, rng)


def run_send(cfg: PipelineConfig, source_id: str, port: int | None = None) -> None:
    spec = next((s for s in cfg.sources if s.source_id == source_id), None)
    if spec is None:
        raise ConfigError(f"unknown source id {source_id!r}")
    batch = build_batch(cfg, spec, load_public_key(cfg))
    if cfg.transport_mode == "file":
        send_batch_file(batch, os.path.join(cfg.out_dir, "inbox"))
    else:
        send_batch_stream(batch, cfg.endpoint_host, port or cfg.endpoint_port)


def _persist_frames_from_inbox(cfg: PipelineConfig):
    inbox = os.path.join(cfg.out_dir, "inbox")
    os.makedirs(inbox, exist_ok=True)
    return inbox


def run_receive(cfg: PipelineConfig, timeout: float = 10.0) -> list[Dataset]:
    """Collect arrived batches, decrypt, and stage one CSV per source."""
    kp = load_keypair(cfg)
    if cfg.transport_mode == "file":
        inbox = _persist_frames_from_inbox(cfg)
        result = receive_batches_file(inbox, cfg.domain, cfg.schema)
    else:
        server = WarehouseServer(cfg.endpoint_host, cfg.endpoint_port)
        server.start()
        try:
            import time

            deadline = time.monotonic() + timeout
            while time.monotonic() < deadline:
                result = server.collect(cfg.domain, cfg.schema)
                if len(result.batches) >= len(cfg.sources):
                    break
                time.sleep(0.05)
            else:
                result = server.collect(cfg.domain, cfg.schema)
        finally:
            server.stop()
    if result.incomplete:
        detail = "; ".join(f"{s}: {msg}" for s, msg in sorted(result.incomplete.items()))
        raise IncompleteDelivery(detail)
    return _stage_batches(cfg, result.batches, kp)


def _stage_batches(cfg: PipelineConfig, batches: list[EncryptedBatch], kp: KeyPair) -> list[Dataset]:
    staged = []
    for batch in sorted(batches, key=lambda b: b.manifest.source_id):
        data = decrypt_batch(batch, kp, cfg.domain, cfg.encoding)
        write_csv(data, _path(cfg, "staged", f"{batch.manifest.source_id}.csv"))
        staged.append(data)
    return staged


def run_etl(cfg: PipelineConfig) -> Dataset:
    staged_dir = os.path.join(cfg.out_dir, "staged")
    datasets = [
        read_canonical_csv(os.path.join(staged_dir, name), cfg.schema)
        for name in sorted(os.listdir(staged_dir))
        if name.endswith(".csv")
    ]
    merged = merge_sources(datasets)
    write_csv(merged, _path(cfg, "merged.csv"))
    cleaned, report = clean(merged)
    write_csv(cleaned, _path(cfg, "cleaned.csv"))
    with open(_path(cfg, "cleaning_report.txt"), "w") as f:
        f.write(
            f"rows_in={report.rows_in} rows_out={report.rows_out} "
            f"duplicates_removed={report.duplicates_removed} "
            f"missing_dropped={report.missing_dropped}\n"
        )
    return cleaned


def build_plan(cfg: PipelineConfig) -> PerturbPlan:
    return PerturbPlan.build(
        cfg.schema,
        cfg.seed,
        variance=cfg.perturb_variance,
        op=cfg.perturb_op,
        variances=cfg.perturb_variances,
    )


def run_perturb(cfg: PipelineConfig) -> Dataset:
    cleaned = read_canonical_csv(os.path.join(cfg.out_dir, "cleaned.csv"), cfg.schema)
    perturbed = transform_dataset(cleaned, build_plan(cfg))
    write_csv(perturbed, _path(cfg, "perturbed.csv"))
    return perturbed


def _write_rules(rules, path: str) -> None:
    with open(path, "w") as f:
        f.write("antecedent,consequent,support,confidence\n")
        for r in sorted(rules, key=lambda r: (sorted(r.antecedent), sorted(r.consequent))):
            f.write(
                f"{'&'.join(sorted(r.antecedent))},{'&'.join(sorted(r.consequent))},"
                f"{r.support:.6f},{r.confidence:.6f}\n"
            )


def run_mine(cfg: PipelineConfig) -> AccuracyReport:
    cleaned = read_canonical_csv(os.path.join(cfg.out_dir, "cleaned.csv"), cfg.schema)
    perturbed = read_canonical_csv(os.path.join(cfg.out_dir, "perturbed.csv"), cfg.schema)
    planted = None
    if cfg.sources and all(s.generate_rows is not None for s in cfg.sources):
        planted = datagen.planted_item_rules()
    report = run_experiment(
        cleaned,
        perturbed,
        cfg.mining,
        schedule=cfg.record_schedule,
        planted=planted,
        parameters={
            "minsup": cfg.mining.minsup,
            "minconf": cfg.mining.minconf,
            "bins": cfg.mining.bins,
            "variance": cfg.perturb_variance,
            "seed": cfg.seed,
        },
    )
    # persist full-dataset rule lists alongside the report
    from .mining_eval import Itemizer, apriori, itemize

    itemizer = Itemizer.fit(cleaned, cfg.mining.bins)
    rules_orig = apriori(itemize(cleaned, itemizer), cfg.mining.minsup, cfg.mining.minconf)
    rules_pert = apriori(itemize(perturbed, itemizer), cfg.mining.minsup, cfg.mining.minconf)
    _write_rules(rules_orig, _path(cfg, "rules_original.csv"))
    _write_rules(rules_pert, _path(cfg, "rules_perturbed.csv"))
    with open(_path(cfg, "report.csv"), "w") as f:
        f.write(report.to_csv())
    with open(_path(cfg, "report.txt"), "w") as f:
        f.write(report.to_table())
    return report


def run_pipeline(cfg: PipelineConfig) -> AccuracyReport:
    """keygen -> send(all) -> receive -> merge/clean -> perturb -> mine."""
    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except EcppdmError as e:
            raise StageError(name, e) from e

    stage("keygen", run_keygen, cfg)
    if cfg.transport_mode == "stream":
        server = WarehouseServer(cfg.endpoint_host, cfg.endpoint_port)
        server.start()
        try:
            kp = load_keypair(cfg)
            threads = []
            errors: list[Exception] = []

            def send_one(sid: str):
                try:
                    run_send(cfg, sid, port=server.port)
                except Exception as e:  # surfaced with source attribution
                    errors.append(RuntimeError(f"source {sid}: {e}"))

            for s in cfg.sources:
                t = threading.Thread(target=send_one, args=(s.source_id,))
                t.start()
                threads.append(t)
            for t in threads:
                t.join()
            if errors:
                raise StageError("send", errors[0])
            import time

            deadline = time.monotonic() + 10.0
            while time.monotonic() < deadline:
                result = server.collect(cfg.domain, cfg.schema)
                if len(result.batches) >= len(cfg.sources):
                    break
                time.sleep(0.05)
        finally:
            server.stop()
        if result.incomplete:
            detail = "; ".join(f"{s}: {m}" for s, m in sorted(result.incomplete.items()))
            raise StageError("receive", IncompleteDelivery(detail))
        stage("receive", _stage_batches, cfg, result.batches, kp)
    else:
        for s in cfg.sources:
            stage("send", run_send, cfg, s.source_id)
        stage("receive", run_receive, cfg)
    stage("etl", run_etl, cfg)
    stage("perturb", run_perturb, cfg)
    return stage("mine", run_mine, cfg)
