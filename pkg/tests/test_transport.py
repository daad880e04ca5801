import random
import socket
import struct
import threading

import pytest

from ecppdm.curve import ECPoint, INFINITY
from ecppdm.ecelgamal import Ciphertext, EncodingParams, keygen
from ecppdm.errors import (
    BadMagic,
    DomainMismatch,
    FrameError,
    MessageOutOfRange,
    NotAMessagePoint,
    TruncatedFrame,
    UnsupportedVersion,
)
from ecppdm.etl import ConfidentialAttr, Dataset, Record, Schema
from ecppdm.transport import (
    EncryptedBatch,
    EncryptedRow,
    SourceManifest,
    WarehouseServer,
    decrypt_batch,
    encrypt_batch,
    read_frame,
    receive_batches_file,
    send_batch_file,
    send_batch_stream,
    write_frame,
)
from conftest import BIG, build_domain

SCHEMA = Schema(
    (ConfidentialAttr("bp", scale=100.0), ConfidentialAttr("chol", scale=100.0)),
    ("sex",),
)

ENC = EncodingParams(k_pad=20)


def plain_dataset(n=4):
    rows = tuple(
        Record((100.0 + i, 200.0 + i / 4), ("m" if i % 2 else "f",)) for i in range(n)
    )
    return Dataset(SCHEMA, rows, ("S1",))


@pytest.fixture(scope="module")
def domain():
    return build_domain(BIG)


@pytest.fixture(scope="module")
def warehouse(domain):
    return keygen(domain, 123_456_789 % domain.order_of_G)


def make_batch(domain, warehouse, n=4, source_id="S1", seed=5):
    data = plain_dataset(n)
    return encrypt_batch(data, source_id, warehouse.public_point, domain, ENC, random.Random(seed))


class TestEncryptDecryptBatch:
    def test_empty_dataset(self, domain, warehouse):
        data = Dataset(SCHEMA, (), ("S1",))
        batch = encrypt_batch(data, "S1", warehouse.public_point, domain, ENC, random.Random(0))
        assert batch.rows == ()
        assert len(decrypt_batch(batch, warehouse, domain, ENC)) == 0

    def test_ciphertext_arity(self, domain, warehouse):
        batch = make_batch(domain, warehouse, n=1)
        assert len(batch.rows[0].ciphers) == 2

    def test_roundtrip_cell_for_cell(self, domain, warehouse):
        data = plain_dataset(6)
        batch = encrypt_batch(data, "S1", warehouse.public_point, domain, ENC, random.Random(1))
        back = decrypt_batch(batch, warehouse, domain, ENC)
        for orig, dec in zip(data.rows, back.rows):
            assert dec.categorical == orig.categorical
            for attr, o, v in zip(SCHEMA.confidential_attrs, orig.confidential, dec.confidential):
                assert attr.quantize(o) == attr.quantize(v)

    def test_wrong_key_corrupts(self, tiny_domain):
        d = tiny_domain
        enc = EncodingParams(k_pad=2)
        schema = Schema((ConfidentialAttr("v", scale=1.0),), ())
        data = Dataset(schema, tuple(Record((float(i),), ()) for i in (0, 2, 3, 4, 5)), ("S1",))
        right = keygen(d, 3)
        batch = encrypt_batch(data, "S1", right.public_point, d, enc, random.Random(2))
        for wrong_scalar in range(1, d.order_of_G):
            if wrong_scalar == 3:
                continue
            wrong = keygen(d, wrong_scalar)
            try:
                back = decrypt_batch(batch, wrong, d, enc)
            except (FrameError, NotAMessagePoint):
                continue
            got = [r.confidential[0] for r in back.rows]
            assert got != [r.confidential[0] for r in data.rows]

    def test_missing_value_rejected(self, domain, warehouse):
        data = Dataset(SCHEMA, (Record((None, 1.0), ("m",)),), ("S1",))
        with pytest.raises(MessageOutOfRange):
            encrypt_batch(data, "S1", warehouse.public_point, domain, ENC, random.Random(0))

    def test_unencodable_value_rejected(self, domain, warehouse):
        data = Dataset(SCHEMA, (Record((-5.0, 1.0), ("m",)),), ("S1",))
        with pytest.raises(MessageOutOfRange):
            encrypt_batch(data, "S1", warehouse.public_point, domain, ENC, random.Random(0))


class TestFrameCodec:
    def test_roundtrip_identity(self, domain, warehouse):
        batch = make_batch(domain, warehouse)
        back = read_frame(write_frame(batch), domain, SCHEMA)
        assert back.rows == batch.rows
        assert back.manifest.source_id == "S1"
        assert back.manifest.record_count == len(batch.rows)

    def test_roundtrip_randomized(self, domain):
        rng = random.Random(99)
        p = domain.p
        for case in range(200):
            n_conf = rng.randint(0, 3)
            n_cat = rng.randint(0, 2)
            schema = Schema(
                tuple(ConfidentialAttr(f"c{i}", scale=1.0) for i in range(n_conf)),
                tuple(f"k{i}" for i in range(n_cat)),
            )
            rows = []
            for _ in range(rng.randint(0, 5)):
                ciphers = tuple(
                    Ciphertext(
                        INFINITY if rng.random() < 0.1 else ECPoint(rng.randrange(p), rng.randrange(p)),
                        ECPoint(rng.randrange(p), rng.randrange(p)),
                    )
                    for _ in range(n_conf)
                )
                cats = tuple(rng.choice(["", "abc", "naïve", "x" * 40]) for _ in range(n_cat))
                rows.append(EncryptedRow(ciphers, cats))
            manifest = SourceManifest(f"S{case}", domain, INFINITY, schema, len(rows))
            batch = EncryptedBatch(manifest, tuple(rows))
            back = read_frame(write_frame(batch), domain, schema)
            assert back.rows == batch.rows
            assert back.manifest.source_id == batch.manifest.source_id

    def test_bad_magic(self, domain, warehouse):
        frame = bytearray(write_frame(make_batch(domain, warehouse)))
        frame[0] ^= 0xFF
        with pytest.raises(BadMagic):
            read_frame(bytes(frame), domain, SCHEMA)

    def test_unsupported_version(self, domain, warehouse):
        frame = bytearray(write_frame(make_batch(domain, warehouse)))
        frame[4] = 2
        with pytest.raises(UnsupportedVersion):
            read_frame(bytes(frame), domain, SCHEMA)

    def test_truncated(self, domain, warehouse):
        frame = write_frame(make_batch(domain, warehouse))
        with pytest.raises(TruncatedFrame):
            read_frame(frame[: len(frame) // 2], domain, SCHEMA)

    def test_trailing_garbage(self, domain, warehouse):
        frame = write_frame(make_batch(domain, warehouse))
        with pytest.raises(TruncatedFrame):
            read_frame(frame + b"\x00", domain, SCHEMA)

    def test_body_corruption_detected(self, domain, warehouse):
        frame = bytearray(write_frame(make_batch(domain, warehouse)))
        frame[-10] ^= 0x01  # inside the last row
        with pytest.raises(FrameError):
            read_frame(bytes(frame), domain, SCHEMA)

    def test_every_header_byte_corruption_rejected(self, domain, warehouse):
        frame = write_frame(make_batch(domain, warehouse, n=2))
        header_len = 6 + len("S1") + 20 + 2 + 4
        for idx in range(header_len):
            for delta in (0x01, 0x80, 0xFF):
                mutated = bytearray(frame)
                mutated[idx] ^= delta
                with pytest.raises(FrameError):
                    read_frame(bytes(mutated), domain, SCHEMA)

    def test_domain_mismatch(self, domain, warehouse, small_domain):
        frame = write_frame(make_batch(domain, warehouse))
        with pytest.raises(DomainMismatch):
            read_frame(frame, small_domain, SCHEMA)

    def test_schema_arity_mismatch(self, domain, warehouse):
        frame = write_frame(make_batch(domain, warehouse))
        other = Schema((ConfidentialAttr("only"),), ())
        with pytest.raises(FrameError):
            read_frame(frame, domain, other)


class TestDelivery:
    def test_file_mode(self, tmp_path, domain, warehouse):
        inbox = str(tmp_path / "inbox")
        b1 = make_batch(domain, warehouse, source_id="S1", seed=1)
        b2 = make_batch(domain, warehouse, source_id="S2", seed=2)
        send_batch_file(b1, inbox)
        send_batch_file(b2, inbox)
        result = receive_batches_file(inbox, domain, SCHEMA)
        assert len(result.batches) == 2
        assert not result.incomplete
        assert {b.manifest.source_id for b in result.batches} == {"S1", "S2"}

    def test_stream_mode_two_sources(self, domain, warehouse):
        server = WarehouseServer()
        server.start()
        try:
            b1 = make_batch(domain, warehouse, source_id="S1", seed=1)
            b2 = make_batch(domain, warehouse, source_id="S2", seed=2)
            t1 = threading.Thread(target=send_batch_stream, args=(b1, server.host, server.port))
            t2 = threading.Thread(target=send_batch_stream, args=(b2, server.host, server.port))
            t1.start(), t2.start()
            t1.join(), t2.join()
            import time

            deadline = time.monotonic() + 5
            while time.monotonic() < deadline:
                result = server.collect(domain, SCHEMA)
                if len(result.batches) == 2:
                    break
                time.sleep(0.02)
        finally:
            server.stop()
        assert len(result.batches) == 2
        assert not result.incomplete
        assert {b.manifest.source_id for b in result.batches} == {"S1", "S2"}

    def test_file_and_stream_frames_byte_identical(self, tmp_path, domain, warehouse):
        batch = make_batch(domain, warehouse, seed=3)
        path = send_batch_file(batch, str(tmp_path / "inbox"))
        with open(path, "rb") as f:
            file_bytes = f.read()
        server = WarehouseServer()
        server.start()
        try:
            send_batch_stream(batch, server.host, server.port)
            import time

            deadline = time.monotonic() + 5
            frames = []
            while time.monotonic() < deadline:
                frames = server._frames
                if frames:
                    break
                time.sleep(0.02)
        finally:
            server.stop()
        assert frames and frames[0] == file_bytes

    def test_mid_frame_disconnect_isolated(self, domain, warehouse):
        server = WarehouseServer()
        server.start()
        try:
            good = make_batch(domain, warehouse, source_id="S1", seed=1)
            send_batch_stream(good, server.host, server.port)
            bad = write_frame(make_batch(domain, warehouse, source_id="S2", seed=2))
            with socket.create_connection((server.host, server.port)) as conn:
                conn.sendall(struct.pack(">I", len(bad)) + bad[: len(bad) // 2])
            import time

            deadline = time.monotonic() + 5
            while time.monotonic() < deadline:
                result = server.collect(domain, SCHEMA)
                if result.batches and result.incomplete:
                    break
                time.sleep(0.02)
        finally:
            server.stop()
        assert len(result.batches) == 1
        assert result.batches[0].manifest.source_id == "S1"
        assert "S2" in result.incomplete

    def test_confidentiality_proxy(self, domain, warehouse):
        # ciphertext bytes must not contain the big-endian encoding of any
        # quantized confidential cell (checked over the rows region)
        data = plain_dataset(50)
        batch = encrypt_batch(data, "S1", warehouse.public_point, domain, ENC, random.Random(11))
        frame = write_frame(batch)
        header_len = 6 + len("S1") + 20 + 2 + 4
        rows_region = frame[header_len:-4]
        for row in data.rows:
            for attr, v in zip(SCHEMA.confidential_attrs, row.confidential):
                q = attr.quantize(v)
                encoded_x = None
                from ecppdm.ecelgamal import encode_message

                encoded_x = encode_message(q, domain, ENC).x
                if encoded_x == q:
                    continue
                assert struct.pack(">I", q) not in rows_region
