"""Generic query / reply / extract engine shared by every scheme.

A scheme supplies a retrieval function ``f`` and samplers for the file set X,
the kernel set Y and the marker set Z.  The engine hides the desired index
``b`` by adding the marker to coordinate ``v`` of the b-th error vector and
kernel elements to the same coordinate of every other error vector, then masks
everything with random codewords.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .algebra import RingCtx
from .codes import (
    ConstacyclicCode,
    LinearCode,
    cc_decode,
    cc_encode,
    encode,
    erase_decode,
    sample_code,
    sample_constacyclic,
)


class HidingMode(enum.Enum):
    # codeword randomness removed through the error-free information set
    SYSTEMATIC = "systematic"
    # query carries the code coefficients a_i explicitly: q_i = (a_i, a_i s + e_i)
    EXPLICIT = "explicit"


class SchemeId(enum.IntEnum):
    BASIC = 1
    HHWZ = 2
    AMG = 3
    RLWE = 4


class ParameterError(ValueError):
    """Scheme or protocol parameters violate a required constraint."""


class RecoveryError(ValueError):
    """The extracted value is not ``m * f(z)`` for any file ``m`` in X."""


class Scheme:
    """A retrieval function with its sets X, Y, Z. Subclasses live in ``schemes``."""

    name: str
    scheme_id: SchemeId
    ctx: RingCtx
    mode: HidingMode
    n: int
    k: int = 0
    max_N: Optional[int] = None
    # bits carried by one scalar symbol of a file, and symbols per file element
    symbol_bits: int = 1
    symbols_per_element: int = 1

    def f(self, x) -> np.ndarray:
        raise NotImplementedError

    def sample_y(self, rng: np.random.Generator, size=()) -> np.ndarray:
        raise NotImplementedError

    def sample_z(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def sample_x(self, rng: np.random.Generator, size=()) -> np.ndarray:
        raise NotImplementedError

    def in_x(self, x) -> bool:
        raise NotImplementedError

    def recover(self, value, fz) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def lift_x(self, value) -> np.ndarray:
        x = self.ctx.element(value)
        if not self.in_x(x):
            raise ParameterError(f"{value!r} is not a valid file for {self.name}")
        return x

    def unlift_x(self, x):
        return self.ctx.to_python(x)

    @property
    def query_width(self) -> int:
        """Ring elements per query vector: n coordinates, or the pair (a, c + e)."""
        return self.n if self.mode is HidingMode.SYSTEMATIC else 2

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


@dataclass(eq=False)
class Query:
    scheme_id: SchemeId
    ctx: RingCtx
    vectors: np.ndarray  # (N, width, *elem_shape)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]


@dataclass(eq=False)
class ClientSecret:
    code: Union[LinearCode, ConstacyclicCode]
    b: int
    fz: np.ndarray
    v: Optional[int] = None


@dataclass(eq=False)
class Reply:
    scheme_id: SchemeId
    ctx: RingCtx
    vectors: np.ndarray  # (count, width, *elem_shape); one entry per grid row

    @property
    def count(self) -> int:
        return self.vectors.shape[0]


@dataclass(eq=False)
class Database:
    """Files arranged as a grid of shape (replies, query_size, *elem_shape).

    Reply ``r`` is the combination of grid row ``r`` with the query.  A flat
    database is one row; the matrix layout puts the s x t file matrix here
    directly; the chunked layout stores chunk layer ``l`` of every file in row l.
    """

    ctx: RingCtx
    grid: np.ndarray
    layout: str = "flat"

    @property
    def query_size(self) -> int:
        return self.grid.shape[1]

    @property
    def replies(self) -> int:
        return self.grid.shape[0]

    @classmethod
    def flat(cls, scheme: Scheme, files) -> "Database":
        files = _validated(scheme, files)
        return cls(scheme.ctx, files[None], "flat")

    @classmethod
    def matrix(cls, scheme: Scheme, files, rows: int, cols: int) -> "Database":
        files = _validated(scheme, files)
        if rows * cols != files.shape[0]:
            raise ParameterError(f"{rows} x {cols} does not hold {files.shape[0]} files")
        return cls(scheme.ctx, files.reshape((rows, cols) + scheme.ctx.elem_shape), "matrix")

    @classmethod
    def chunked(cls, scheme: Scheme, chunks) -> "Database":
        """``chunks`` has shape (N, L, *elem_shape)."""
        chunks = np.asarray(chunks)
        es = scheme.ctx.elem_shape
        if chunks.ndim != 2 + len(es) or chunks.shape[2:] != es:
            raise ParameterError("ragged chunking: expected shape (N, L, *element)")
        flat = _validated(scheme, chunks.reshape((-1,) + es))
        return cls(scheme.ctx, np.swapaxes(flat.reshape(chunks.shape), 0, 1), "chunked")

    def file(self, index: int, col: Optional[int] = None) -> np.ndarray:
        """1-based access: flat/chunked by file index, matrix by (row, col)."""
        if self.layout == "matrix":
            return self.grid[index - 1, col - 1]
        if self.layout == "chunked":
            return self.grid[:, index - 1]
        return self.grid[0, index - 1]


def _validated(scheme: Scheme, files) -> np.ndarray:
    files = scheme.ctx.element(files)
    for i, x in enumerate(files):
        if not scheme.in_x(x):
            raise ParameterError(f"file {i + 1} lies outside X for {scheme.name}")
    return files


# ---------------------------------------------------------------------------
# protocol


def gen_query(scheme: Scheme, N: int, b: int, rng: np.random.Generator
              ) -> tuple[Query, ClientSecret]:
    if not 1 <= b <= N:
        raise ParameterError(f"index b={b} outside [1, {N}]")
    if scheme.max_N is not None and N > scheme.max_N:
        raise ParameterError(
            f"N={N} exceeds max_N={scheme.max_N}; kernel combinations would leave ker(f)")
    ctx = scheme.ctx
    bi = b - 1
    if scheme.mode is HidingMode.SYSTEMATIC:
        code = sample_code(ctx, scheme.n, scheme.k, rng)
        comp = list(code.complement)
        v = int(rng.choice(comp))
        a = ctx.random(rng, (N, scheme.k))
        c = encode(code, a)
        e = ctx.zeros((N, scheme.n))
        e[:, comp] = ctx.random(rng, (N, len(comp)))
        e[:, v] = scheme.sample_y(rng, (N,))
        e[bi, v] = scheme.sample_z(rng)
        fz = scheme.f(e[bi, v])
        vectors = ctx.add(c, e)
        return (Query(scheme.scheme_id, ctx, vectors),
                ClientSecret(code=code, b=b, fz=fz, v=v))

    code = sample_constacyclic(ctx, rng)
    a = ctx.random(rng, (N,))
    e = scheme.sample_y(rng, (N,))
    e[bi] = scheme.sample_z(rng)
    fz = scheme.f(e[bi])
    vectors = np.stack([a, ctx.add(cc_encode(code, a), e)], axis=1)
    return Query(scheme.scheme_id, ctx, vectors), ClientSecret(code=code, b=b, fz=fz)


def gen_reply(query: Query, db: Database) -> Reply:
    """Server side: sum_i m_i q_i for every grid row. Sees nothing but (query, db)."""
    if db.query_size != query.size:
        raise ParameterError(
            f"database holds {db.query_size} files per row, query has {query.size}")
    ctx = query.ctx
    grid = db.grid[:, :, None]
    vectors = ctx.sum(ctx.mul(grid, query.vectors[None]), axis=1)
    return Reply(query.scheme_id, ctx, vectors)


def extract(scheme: Scheme, secret: ClientSecret, reply: Reply, index: int = 0) -> np.ndarray:
    """Recover m_b from reply row ``index`` (0-based; flat replies have one row)."""
    r = reply.vectors[index]
    if scheme.mode is HidingMode.SYSTEMATIC:
        e = erase_decode(secret.code, r)
        value = scheme.f(e[secret.v])
    else:
        value = scheme.f(cc_decode(secret.code, r[0], r[1]))
    return scheme.recover(value, secret.fz)


Transport = Callable[[Query, Database], Reply]


def flat_round(scheme: Scheme, db: Database, b: int, rng: np.random.Generator,
               transport: Transport = gen_reply) -> np.ndarray:
    query, secret = gen_query(scheme, db.query_size, b, rng)
    return extract(scheme, secret, transport(query, db))


def matrix_round(scheme: Scheme, db: Database, target_row: int, target_col: int,
                 rng: np.random.Generator, transport: Transport = gen_reply) -> np.ndarray:
    """Query the column, receive one reply per row, keep the target row."""
    if db.layout != "matrix":
        raise ParameterError("matrix_round needs a database in matrix layout")
    rows, cols = db.grid.shape[:2]
    if not (1 <= target_row <= rows and 1 <= target_col <= cols):
        raise ParameterError(f"target ({target_row}, {target_col}) outside {rows} x {cols}")
    query, secret = gen_query(scheme, cols, target_col, rng)
    reply = transport(query, db)
    return extract(scheme, secret, reply, target_row - 1)


def iterative_round(scheme: Scheme, db: Database, b: int, rng: np.random.Generator,
                    transport: Transport = gen_reply) -> np.ndarray:
    """One query, L replies (one per chunk layer); returns the L chunks of file b."""
    if db.layout != "chunked":
        raise ParameterError("iterative_round needs a chunked database")
    query, secret = gen_query(scheme, db.query_size, b, rng)
    reply = transport(query, db)
    return np.stack([extract(scheme, secret, reply, layer) for layer in range(reply.count)])


# ---------------------------------------------------------------------------
# files as bytes


def bytes_to_chunks(scheme: Scheme, data: bytes, L: int) -> np.ndarray:
    """Pack ``data`` into L elements of X, ``symbol_bits`` bits per scalar symbol."""
    bits = scheme.symbol_bits
    per = scheme.symbols_per_element
    capacity = L * per * bits
    if 8 * len(data) > capacity:
        raise ParameterError(f"{len(data)} bytes do not fit into {L} chunks ({capacity} bits)")
    value = int.from_bytes(data, "little")
    symbols = [(value >> (bits * i)) & ((1 << bits) - 1) for i in range(L * per)]
    arr = np.array(symbols, dtype=np.int64).reshape((L,) + ((per,) if per > 1 else ()))
    return np.stack([scheme.lift_x(x) for x in arr])


def chunks_to_bytes(scheme: Scheme, chunks, length: int) -> bytes:
    bits = scheme.symbol_bits
    value = 0
    flat = [int(s) for x in chunks for s in np.ravel(scheme_symbols(scheme, x))]
    for i, s in enumerate(flat):
        value |= s << (bits * i)
    return (value & ((1 << (8 * length)) - 1)).to_bytes(length, "little")


def scheme_symbols(scheme: Scheme, x) -> np.ndarray:
    """Scalar symbols carried by one file element (drops the zero embedding coordinates)."""
    x = np.asarray(x)
    if scheme.symbols_per_element == 1 and x.ndim:
        return x[:1]
    return x


# ---------------------------------------------------------------------------
# communication accounting


@dataclass(frozen=True)
class CommCost:
    uplink_bytes: int
    downlink_bytes: int
    uplink_header_bytes: int
    downlink_header_bytes: int

    @property
    def total_bytes(self) -> int:
        return self.uplink_bytes + self.downlink_bytes


def comm_cost(scheme: Scheme, N: int, setup: str = "flat", L: int = 1) -> CommCost:
    """Payload bytes under the wire encoding; framing and preambles reported apart.

    ``N`` counts X-elements stored by the server. ``setup`` is ``flat``,
    ``matrix`` (sqrt(N) x sqrt(N)) or ``iter`` (N/L files of L chunks each).
    """
    from .wire import element_bytes, message_overhead

    elem = element_bytes(scheme)
    overhead = message_overhead(scheme.ctx)
    if N < 1:
        raise ParameterError("N must be positive")
    if setup == "flat":
        up, down = N, 1
    elif setup == "matrix":
        side = math.isqrt(N)
        if side * side != N:
            raise ParameterError(f"matrix setup needs a square N, got {N}")
        up, down = side, side
    elif setup == "iter":
        if L < 1 or N % L:
            raise ParameterError(f"L={L} does not divide N={N}")
        up, down = N // L, L
    else:
        raise ParameterError(f"unknown setup {setup!r}")
    return CommCost(up * elem, down * elem, overhead, overhead)


# ---------------------------------------------------------------------------
# retrieval-function conditions


def check_retrieval_conditions(scheme: Scheme, rng: np.random.Generator,
                               trials: int = 1000, terms: Optional[int] = None) -> dict:
    """Count violations of the three retrieval-function conditions on random samples.

    * nonzero: f(z) != 0 for sampled markers z (f is not the zero map);
    * kernel: f(sum_j x_j y_j) == 0 with ``terms`` summands (default max_N, or 64);
    * marker: f(y + x z) == x f(z) and f(z) is a unit.
    """
    ctx = scheme.ctx
    J = terms or scheme.max_N or 64
    out = {"nonzero": 0, "kernel": 0, "marker": 0, "unit": 0}
    zero = ctx.zeros()
    for _ in range(trials):
        xs = scheme.sample_x(rng, (J,))
        ys = scheme.sample_y(rng, (J,))
        combo = ctx.sum(ctx.mul(xs, ys), axis=0)
        if not ctx.equal(scheme.f(combo), zero):
            out["kernel"] += 1
        x = scheme.sample_x(rng)
        y = scheme.sample_y(rng)
        z = scheme.sample_z(rng)
        fz = scheme.f(z)
        if ctx.equal(fz, zero):
            out["nonzero"] += 1
        if not ctx.equal(scheme.f(ctx.add(y, ctx.mul(x, z))), ctx.mul(x, fz)):
            out["marker"] += 1
        if not _is_unit(ctx, fz):
            out["unit"] += 1
    return out


def _is_unit(ctx: RingCtx, x) -> bool:
    try:
        ctx.inv(x)
    except ArithmeticError:
        return False
    return True
