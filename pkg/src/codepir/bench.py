"""Measured communication and server time for the three database setups."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .framework import Database, ParameterError, Scheme, extract, gen_query, gen_reply
from .wire import encode_message, message_overhead


@dataclass(frozen=True)
class BenchRow:
    N: int
    setup: str
    L: int
    uplink_bytes: int
    downlink_bytes: int
    header_bytes: int
    server_seconds: float
    ok: bool

    @property
    def total_bytes(self) -> int:
        return self.uplink_bytes + self.downlink_bytes


def layout(N: int, setup: str, L: int = 1) -> tuple[int, int]:
    """(query size, reply count) for N stored elements."""
    if N < 1:
        raise ParameterError("N must be positive")
    if setup == "flat":
        return N, 1
    if setup == "matrix":
        side = math.isqrt(N)
        if side * side != N:
            raise ParameterError(f"matrix setup needs a square N, got {N}")
        return side, side
    if setup == "iter":
        if L < 1 or N % L:
            raise ParameterError(f"L={L} does not divide N={N}")
        return N // L, L
    raise ParameterError(f"unknown setup {setup!r}")


def measure(scheme_for: Callable[[int], Scheme], N: int, setup: str, rng: np.random.Generator,
            L: int = 1) -> BenchRow:
    """Run one round over N random X-elements and count the encoded payload bytes.

    ``scheme_for(query_size)`` builds the scheme; AMG and RLWE parameters
    depend on the number of query elements.
    """
    size, count = layout(N, setup, L)
    scheme = scheme_for(size)
    grid = scheme.sample_x(rng, (count, size))
    db = Database(scheme.ctx, scheme.ctx.element(grid), "matrix" if count > 1 else "flat")
    b = int(rng.integers(1, size + 1))
    row = int(rng.integers(count))
    query, secret = gen_query(scheme, size, b, rng)
    start = time.perf_counter()
    reply = gen_reply(query, db)
    elapsed = time.perf_counter() - start
    overhead = message_overhead(scheme.ctx)
    up = len(encode_message(query)) - overhead
    down = len(encode_message(reply)) - overhead
    ok = scheme.ctx.equal(extract(scheme, secret, reply, row), grid[row, b - 1])
    return BenchRow(N, setup, L, up, down, 2 * overhead, elapsed, ok)
