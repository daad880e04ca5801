"""Phase 1: source nodes encrypt datasets and ship them to the warehouse.

Frames are a fixed binary layout (big-endian throughout) with a CRC-32
trailer; they travel either as files in a drop-box directory or as
length-prefixed messages over a loopback stream.
"""
from __future__ import annotations

import os
import random
import socket
import struct
import threading
import zlib
from dataclasses import dataclass, field

from .curve import DomainParams, ECPoint, INFINITY, is_on_curve
from .ecelgamal import Ciphertext, EncodingParams, KeyPair, decode_message, decrypt, encode_message, encrypt
from .errors import (
    BadMagic,
    ChecksumMismatch,
    DomainMismatch,
    FrameError,
    MessageOutOfRange,
    OffCurveInput,
    TruncatedFrame,
    UnsupportedVersion,
)
from .etl import ConfidentialAttr, Dataset, Record, Schema

MAGIC = b"ECP1"
VERSION = 1

_TAG_INFINITY = 0x00
_TAG_AFFINE = 0x04


@dataclass(frozen=True)
class SourceManifest:
    source_id: str
    domain: DomainParams
    recipient_public: ECPoint
    schema: Schema
    record_count: int

    def __post_init__(self):
        if not is_on_curve(self.recipient_public, self.domain.curve):
            raise OffCurveInput("recipient public key is not on the domain curve")


@dataclass(frozen=True)
class EncryptedRow:
    ciphers: tuple[Ciphertext, ...]
    categorical: tuple[str, ...]


@dataclass(frozen=True)
class EncryptedBatch:
    manifest: SourceManifest
    rows: tuple[EncryptedRow, ...]


def encrypt_batch(
    data: Dataset,
    source_id: str,
    recipient_public: ECPoint,
    d: DomainParams,
    enc: EncodingParams,
    rng: random.Random,
) -> EncryptedBatch:
    """Quantize, encode, and encrypt every confidential cell independently.

    Each cell gets a fresh ephemeral scalar from rng. Categorical cells
    pass through in clear.
    """
    attrs = data.schema.confidential_attrs
    max_m = enc.max_message(d.p)
    rows = []
    for row in data.rows:
        ciphers = []
        for attr, value in zip(attrs, row.confidential):
            if value is None:
                raise MessageOutOfRange(f"missing value in attribute {attr.name!r}")
            q = attr.quantize(value)
            if not (0 <= q <= max_m):
                raise MessageOutOfRange(f"{attr.name}={value} quantizes to {q}, outside [0, {max_m}]")
            pm = encode_message(q, d, enc)
            k = rng.randrange(1, d.order_of_G)
            ciphers.append(encrypt(pm, recipient_public, k, d))
        rows.append(EncryptedRow(tuple(ciphers), row.categorical))
    manifest = SourceManifest(source_id, d, recipient_public, data.schema, len(rows))
    return EncryptedBatch(manifest, tuple(rows))


def decrypt_batch(batch: EncryptedBatch, kp: KeyPair, d: DomainParams, enc: EncodingParams) -> Dataset:
    """Decrypt and dequantize a batch back to a plaintext dataset."""
    attrs = batch.manifest.schema.confidential_attrs
    rows = []
    for erow in batch.rows:
        conf = []
        for attr, ct in zip(attrs, erow.ciphers):
            pm = decrypt(kp, ct, d)
            conf.append(attr.dequantize(decode_message(pm, enc)))
        rows.append(Record(tuple(conf), erow.categorical))
    return Dataset(batch.manifest.schema, tuple(rows), (batch.manifest.source_id,))


# -- frame codec -------------------------------------------------------------

def _pack_point(P: ECPoint) -> bytes:
    if P.is_infinity:
        return struct.pack(">BII", _TAG_INFINITY, 0, 0)
    return struct.pack(">BII", _TAG_AFFINE, P.x, P.y)


def _unpack_point(data: bytes, off: int) -> tuple[ECPoint, int]:
    tag, x, y = struct.unpack_from(">BII", data, off)
    off += 9
    if tag == _TAG_INFINITY:
        return INFINITY, off
    if tag == _TAG_AFFINE:
        return ECPoint(x, y), off
    raise FrameError(f"unknown point tag 0x{tag:02x}")


def write_frame(batch: EncryptedBatch) -> bytes:
    m = batch.manifest
    sid = m.source_id.encode("utf-8")
    if len(sid) > 255:
        raise FrameError("source id longer than 255 bytes")
    c = m.domain.curve
    parts = [
        MAGIC,
        struct.pack(">B", VERSION),
        struct.pack(">B", len(sid)),
        sid,
        struct.pack(">IIIII", c.p, c.a, c.b, m.domain.G.x, m.domain.G.y),
        struct.pack(">BB", len(m.schema.confidential_attrs), len(m.schema.categorical_attrs)),
        struct.pack(">I", len(batch.rows)),
    ]
    for row in batch.rows:
        for ct in row.ciphers:
            parts.append(_pack_point(ct.c1))
            parts.append(_pack_point(ct.c2))
        for cell in row.categorical:
            raw = cell.encode("utf-8")
            parts.append(struct.pack(">H", len(raw)))
            parts.append(raw)
    body = b"".join(parts)
    return body + struct.pack(">I", zlib.crc32(body))


def read_frame(data: bytes, domain: DomainParams, schema: Schema | None = None) -> EncryptedBatch:
    """Decode one frame. The CRC is verified before any value is trusted."""
    if len(data) < 4:
        raise TruncatedFrame("frame shorter than magic")
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    if len(data) < 6:
        raise TruncatedFrame("frame ends inside fixed header")
    if data[4] != VERSION:
        raise UnsupportedVersion(f"version {data[4]}")
    sid_len = data[5]
    head_end = 6 + sid_len + 20 + 2 + 4
    if len(data) < head_end:
        raise TruncatedFrame("frame ends inside header")
    off = 6 + sid_len
    p, a, b, gx, gy = struct.unpack_from(">IIIII", data, off)
    off += 20
    n_conf, n_cat = struct.unpack_from(">BB", data, off)
    off += 2
    (n_rows,) = struct.unpack_from(">I", data, off)
    off += 4

    # row sizes: confidential cells are fixed width, categorical are not,
    # so walk the rows to find the body end before checking the CRC
    row_offsets = off
    try:
        for _ in range(n_rows):
            row_offsets += n_conf * 18
            for _ in range(n_cat):
                if row_offsets + 2 > len(data) - 4:
                    raise TruncatedFrame("frame ends inside a categorical cell")
                (cat_len,) = struct.unpack_from(">H", data, row_offsets)
                row_offsets += 2 + cat_len
            if row_offsets > len(data) - 4:
                raise TruncatedFrame("frame ends inside a row")
    except struct.error as e:
        raise TruncatedFrame(str(e)) from e
    body_end = row_offsets
    if len(data) != body_end + 4:
        raise TruncatedFrame(f"frame length {len(data)} != expected {body_end + 4}")
    (crc,) = struct.unpack_from(">I", data, body_end)
    if crc != zlib.crc32(data[:body_end]):
        raise ChecksumMismatch("frame CRC-32 does not match")

    c = domain.curve
    if (p, a, b, gx, gy) != (c.p, c.a, c.b, domain.G.x, domain.G.y):
        raise DomainMismatch(
            f"frame domain ({p},{a},{b},G=({gx},{gy})) differs from configured domain"
        )
    try:
        source_id = data[6:6 + sid_len].decode("utf-8")
    except UnicodeDecodeError as e:
        raise FrameError(f"source id not valid UTF-8: {e}") from e

    if schema is None:
        schema = Schema(
            tuple(ConfidentialAttr(f"c{i}", scale=1.0) for i in range(n_conf)),
            tuple(f"k{i}" for i in range(n_cat)),
        )
    if len(schema.confidential_attrs) != n_conf or len(schema.categorical_attrs) != n_cat:
        raise FrameError(
            f"frame arity ({n_conf} confidential, {n_cat} categorical) does not match schema"
        )

    rows = []
    for _ in range(n_rows):
        ciphers = []
        for _ in range(n_conf):
            c1, off = _unpack_point(data, off)
            c2, off = _unpack_point(data, off)
            ciphers.append(Ciphertext(c1, c2))
        cats = []
        for _ in range(n_cat):
            (cat_len,) = struct.unpack_from(">H", data, off)
            off += 2
            cats.append(data[off:off + cat_len].decode("utf-8"))
            off += cat_len
        rows.append(EncryptedRow(tuple(ciphers), tuple(cats)))
    manifest = SourceManifest(source_id, domain, INFINITY, schema, n_rows)
    return EncryptedBatch(manifest, tuple(rows))


# -- delivery ----------------------------------------------------------------

@dataclass
class DeliveryResult:
    batches: list[EncryptedBatch] = field(default_factory=list)
    incomplete: dict[str, str] = field(default_factory=dict)


def send_batch_file(batch: EncryptedBatch, inbox_dir: str, seq: int = 0) -> str:
    os.makedirs(inbox_dir, exist_ok=True)
    name = f"{batch.manifest.source_id}_{seq:04d}.frame"
    path = os.path.join(inbox_dir, name)
    with open(path, "wb") as f:
        f.write(write_frame(batch))
    return path


def receive_batches_file(inbox_dir: str, domain: DomainParams, schema: Schema | None = None) -> DeliveryResult:
    result = DeliveryResult()
    for name in sorted(os.listdir(inbox_dir)):
        if not name.endswith(".frame"):
            continue
        with open(os.path.join(inbox_dir, name), "rb") as f:
            data = f.read()
        source = name.rsplit("_", 1)[0]
        try:
            result.batches.append(read_frame(data, domain, schema))
        except FrameError as e:
            result.incomplete[source] = str(e)
    return result


def _guess_source_id(buf: bytes) -> str | None:
    if len(buf) >= 6 and buf[:4] == MAGIC:
        sid_len = buf[5]
        if len(buf) >= 6 + sid_len:
            try:
                return buf[6:6 + sid_len].decode("utf-8")
            except UnicodeDecodeError:
                return None
    return None


class WarehouseServer:
    """Loopback warehouse endpoint; each connection is a separate thread.

    Frames arrive length-prefixed (u32 byte count, then the frame). A
    connection closing cleanly between frames is a normal end of stream;
    closing mid-frame records an incomplete delivery for that source.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen()
        self.host, self.port = self._sock.getsockname()
        self._lock = threading.Lock()
        self._frames: list[bytes] = []
        self._failures: dict[str, str] = {}
        self._threads: list[threading.Thread] = []
        self._accept_thread: threading.Thread | None = None
        self._running = False

    def start(self) -> None:
        self._running = True
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while self._running:
            try:
                conn, addr = self._sock.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve, args=(conn, addr), daemon=True)
            t.start()
            with self._lock:
                self._threads.append(t)

    def _recv_exact(self, conn: socket.socket, n: int) -> bytes:
        chunks = []
        got = 0
        while got < n:
            chunk = conn.recv(min(65536, n - got))
            if not chunk:
                break
            chunks.append(chunk)
            got += len(chunk)
        return b"".join(chunks)

    def _serve(self, conn: socket.socket, addr) -> None:
        label = f"{addr[0]}:{addr[1]}"
        with conn:
            while True:
                header = self._recv_exact(conn, 4)
                if not header:
                    return
                if len(header) < 4:
                    with self._lock:
                        self._failures[label] = "stream ended inside a frame length prefix"
                    return
                (length,) = struct.unpack(">I", header)
                frame = self._recv_exact(conn, length)
                if len(frame) < length:
                    source = _guess_source_id(frame) or label
                    with self._lock:
                        self._failures[source] = (
                            f"stream ended mid-frame ({len(frame)}/{length} bytes)"
                        )
                    return
                with self._lock:
                    self._frames.append(frame)

    def stop(self) -> None:
        self._running = False
        try:
            self._sock.close()
        except OSError:
            pass
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2)
        with self._lock:
            threads = list(self._threads)
        for t in threads:
            t.join(timeout=2)

    def collect(self, domain: DomainParams, schema: Schema | None = None) -> DeliveryResult:
        result = DeliveryResult()
        with self._lock:
            frames = list(self._frames)
            result.incomplete.update(self._failures)
        for data in frames:
            try:
                result.batches.append(read_frame(data, domain, schema))
            except FrameError as e:
                source = _guess_source_id(data) or "unknown"
                result.incomplete[source] = str(e)
        return result


def send_batch_stream(batch: EncryptedBatch, host: str, port: int) -> None:
    frame = write_frame(batch)
    with socket.create_connection((host, port)) as conn:
        conn.sendall(struct.pack(">I", len(frame)) + frame)
