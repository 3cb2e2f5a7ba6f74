"""Byte formats: framed messages, transcript files and database files.

Frame::

    magic "CPIR" | version u8 | kind u8 | scheme_id u8 | body_len u64 LE | body

Query and Reply bodies carry a ring descriptor, ``count`` and ``width`` as
u64 LE, then ``count * width * elem_size`` residues, each u64 LE.  Error
bodies are UTF-8 text.  Every integer on the wire is little-endian.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .algebra import ExtField, ModRing, PolyRing, PrimeField, RingCtx
from .framework import Query, Reply, Scheme, SchemeId

MAGIC = b"CPIR"
TRANSCRIPT_MAGIC = b"CPTR"
DB_MAGIC = b"CPDB"
VERSION = 0x01
HEADER = struct.Struct("<4sBBBQ")
HEADER_SIZE = HEADER.size  # 15
MAX_BODY = 1 << 31
_U64 = struct.Struct("<Q")


class Kind(enum.IntEnum):
    QUERY = 0x01
    REPLY = 0x02
    ERROR = 0x03


class WireError(ValueError):
    pass


class BadMagic(WireError):
    pass


class BadVersion(WireError):
    pass


class Truncated(WireError):
    pass


class TrailingBytes(WireError):
    pass


class UnknownKind(WireError):
    pass


class UnknownScheme(WireError):
    pass


@dataclass(frozen=True)
class WireMessage:
    kind: Kind
    scheme_id: SchemeId
    body: bytes = b""


# ---------------------------------------------------------------------------
# frames


def encode_frame(msg: WireMessage) -> bytes:
    return HEADER.pack(MAGIC, VERSION, int(msg.kind), int(msg.scheme_id), len(msg.body)) + msg.body


def _parse_header(head: bytes) -> tuple[Kind, SchemeId, int]:
    if len(head) < HEADER_SIZE:
        raise Truncated(f"frame header needs {HEADER_SIZE} bytes, got {len(head)}")
    magic, version, kind, sid, length = HEADER.unpack_from(head)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    try:
        kind = Kind(kind)
    except ValueError:
        raise UnknownKind(f"unknown message kind {kind:#04x}") from None
    try:
        sid = SchemeId(sid)
    except ValueError:
        raise UnknownScheme(f"unknown scheme id {sid:#04x}") from None
    if length > MAX_BODY:
        raise WireError(f"body length {length} exceeds {MAX_BODY}")
    return kind, sid, length


def decode_frame(data: bytes) -> WireMessage:
    kind, sid, length = _parse_header(data)
    end = HEADER_SIZE + length
    if len(data) < end:
        raise Truncated(f"body declares {length} bytes, {len(data) - HEADER_SIZE} present")
    if len(data) > end:
        raise TrailingBytes(f"{len(data) - end} bytes after the frame")
    return WireMessage(kind, sid, bytes(data[HEADER_SIZE:end]))


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            raise Truncated(f"stream closed after {len(buf)} of {n} bytes")
        buf.extend(chunk)
    return bytes(buf)


def read_frame(stream: BinaryIO) -> WireMessage:
    head = _read_exact(stream, HEADER_SIZE)
    kind, sid, length = _parse_header(head)
    return WireMessage(kind, sid, _read_exact(stream, length))


# ---------------------------------------------------------------------------
# ring descriptors and residues


class _Reader:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise Truncated(f"need {n} bytes at offset {self.pos}, "
                            f"{len(self.data) - self.pos} left")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise TrailingBytes(f"{len(self.data) - self.pos} unread bytes")


def encode_ctx(ctx: RingCtx) -> bytes:
    if isinstance(ctx, PrimeField):
        return bytes([1]) + _U64.pack(ctx.p)
    if isinstance(ctx, ExtField):
        fields = [ctx.q, ctx.m, *ctx.modulus_poly]
        return bytes([2]) + b"".join(_U64.pack(v) for v in fields)
    if isinstance(ctx, ModRing):
        return bytes([3]) + _U64.pack(ctx.q)
    if isinstance(ctx, PolyRing):
        return bytes([4]) + _U64.pack(ctx.q) + _U64.pack(ctx.n)
    raise WireError(f"no descriptor for {type(ctx).__name__}")


def _decode_ctx(r: _Reader) -> RingCtx:
    tag = r.u8()
    try:
        if tag == 1:
            return PrimeField(r.u64())
        if tag == 2:
            q, m = r.u64(), r.u64()
            if not 1 <= m <= 8:
                raise WireError(f"extension degree {m} outside [1, 8]")
            return ExtField(q, m, tuple(r.u64() for _ in range(m + 1)))
        if tag == 3:
            return ModRing(r.u64())
        if tag == 4:
            return PolyRing(r.u64(), r.u64())
    except (ValueError, ArithmeticError) as exc:
        if isinstance(exc, WireError):
            raise
        raise WireError(f"invalid ring descriptor: {exc}") from exc
    raise WireError(f"unknown ring tag {tag}")


def decode_ctx(data: bytes) -> RingCtx:
    r = _Reader(data)
    ctx = _decode_ctx(r)
    r.finish()
    return ctx


def descriptor_size(ctx: RingCtx) -> int:
    return len(encode_ctx(ctx))


def encode_residues(ctx: RingCtx, arr) -> bytes:
    a = np.asarray(arr)
    if a.dtype == object:
        a = np.array([int(v) % ctx.modulus for v in a.ravel()], dtype=np.uint64)
    else:
        a = (a % ctx.modulus).astype(np.uint64).ravel()
    return a.astype("<u8").tobytes()


def _decode_residues(ctx: RingCtx, r: _Reader, count: int) -> np.ndarray:
    raw = np.frombuffer(r.take(8 * count), dtype="<u8")
    if count and int(raw.max()) >= ctx.modulus:
        raise WireError(f"residue {int(raw.max())} not reduced modulo {ctx.modulus}")
    if ctx.dtype == object:
        return np.array([int(v) for v in raw], dtype=object)
    return raw.astype(np.int64)


def encode_matrix(ctx: RingCtx, vectors) -> bytes:
    """Descriptor, u64 count, u64 width, residues of a (count, width, *elem) array."""
    v = np.asarray(vectors)
    if v.ndim != 2 + len(ctx.elem_shape):
        raise WireError(f"expected (count, width) + {ctx.elem_shape}, got {v.shape}")
    return encode_ctx(ctx) + _U64.pack(v.shape[0]) + _U64.pack(v.shape[1]) + encode_residues(ctx, v)


def _decode_matrix(r: _Reader) -> tuple[RingCtx, np.ndarray]:
    ctx = _decode_ctx(r)
    count, width = r.u64(), r.u64()
    total = count * width * ctx.elem_size
    if 8 * total > len(r.data) - r.pos:
        raise Truncated(f"{count} x {width} matrix needs {8 * total} bytes")
    flat = _decode_residues(ctx, r, total)
    return ctx, flat.reshape((count, width) + ctx.elem_shape)


def decode_matrix(body: bytes) -> tuple[RingCtx, np.ndarray]:
    r = _Reader(body)
    out = _decode_matrix(r)
    r.finish()
    return out


# ---------------------------------------------------------------------------
# typed messages


def query_message(query: Query) -> WireMessage:
    return WireMessage(Kind.QUERY, query.scheme_id, encode_matrix(query.ctx, query.vectors))


def reply_message(reply: Reply) -> WireMessage:
    return WireMessage(Kind.REPLY, reply.scheme_id, encode_matrix(reply.ctx, reply.vectors))


def error_message(scheme_id: SchemeId, text: str = "") -> WireMessage:
    return WireMessage(Kind.ERROR, scheme_id, text.encode("utf-8"))


def encode_message(obj) -> bytes:
    """Frame a Query, Reply or raw WireMessage."""
    if isinstance(obj, Query):
        obj = query_message(obj)
    elif isinstance(obj, Reply):
        obj = reply_message(obj)
    return encode_frame(obj)


def decode_message(data: bytes):
    """Inverse of ``encode_message``: Query, Reply, or WireMessage for errors."""
    return unpack_message(decode_frame(data))


def unpack_message(msg: WireMessage):
    if msg.kind is Kind.ERROR:
        return msg
    ctx, vectors = decode_matrix(msg.body)
    cls = Query if msg.kind is Kind.QUERY else Reply
    return cls(msg.scheme_id, ctx, vectors)


# ---------------------------------------------------------------------------
# sizes for the cost model


def element_bytes(scheme: Scheme) -> int:
    """Encoded bytes of one query vector (or one reply vector)."""
    return scheme.query_width * scheme.ctx.elem_size * 8


def message_overhead(ctx: RingCtx) -> int:
    """Frame header, ring descriptor and the count/width preamble."""
    return HEADER_SIZE + descriptor_size(ctx) + 16


# ---------------------------------------------------------------------------
# transcript files


@dataclass(eq=False)
class Transcript:
    scheme_id: SchemeId
    params: dict
    ctx: RingCtx
    vectors: np.ndarray  # (N, width, *elem_shape)


def encode_transcript(scheme: Scheme, query: Query) -> bytes:
    params = json.dumps(scheme.params(), sort_keys=True, separators=(",", ":")).encode()
    head = TRANSCRIPT_MAGIC + bytes([VERSION, int(scheme.scheme_id)])
    return head + struct.pack("<I", len(params)) + params + encode_matrix(query.ctx, query.vectors)


def decode_transcript(data: bytes) -> Transcript:
    r = _Reader(data)
    if r.take(4) != TRANSCRIPT_MAGIC:
        raise BadMagic("not a transcript file")
    if r.u8() != VERSION:
        raise BadVersion("unsupported transcript version")
    try:
        sid = SchemeId(r.u8())
    except ValueError:
        raise UnknownScheme("unknown scheme id in transcript") from None
    try:
        params = json.loads(r.take(r.u32()).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WireError(f"bad transcript parameter block: {exc}") from exc
    ctx, vectors = _decode_matrix(r)
    r.finish()
    return Transcript(sid, params, ctx, vectors)


def write_transcript(path, scheme: Scheme, query: Query) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_transcript(scheme, query))


def read_transcript(path) -> Transcript:
    with open(path, "rb") as fh:
        return decode_transcript(fh.read())


# ---------------------------------------------------------------------------
# database files


def encode_db(scheme: Scheme, files) -> bytes:
    files = scheme.ctx.element(files)
    head = DB_MAGIC + bytes([VERSION, int(scheme.scheme_id)]) + _U64.pack(files.shape[0])
    return head + encode_residues(scheme.ctx, files)


def decode_db(data: bytes, ctx: RingCtx) -> tuple[SchemeId, np.ndarray]:
    """Files of shape (N, *elem_shape); the element size is checked against ``ctx``."""
    r = _Reader(data)
    if r.take(4) != DB_MAGIC:
        raise BadMagic("not a database file")
    if r.u8() != VERSION:
        raise BadVersion("unsupported database version")
    try:
        sid = SchemeId(r.u8())
    except ValueError:
        raise UnknownScheme("unknown scheme id in database") from None
    N = r.u64()
    left = len(data) - r.pos
    if N == 0 or left % (8 * N):
        raise WireError(f"{left} element bytes do not split into {N} elements")
    per = left // (8 * N)
    if per != ctx.elem_size:
        raise WireError(f"database elements hold {per} residues, ring expects {ctx.elem_size}")
    files = _decode_residues(ctx, r, N * per).reshape((N,) + ctx.elem_shape)
    r.finish()
    return sid, files


def write_db(path, scheme: Scheme, files) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_db(scheme, files))


def read_db(path, ctx: RingCtx) -> tuple[SchemeId, np.ndarray]:
    with open(path, "rb") as fh:
        return decode_db(fh.read(), ctx)
