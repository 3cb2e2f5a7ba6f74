"""Random linear codes with an information set, and constacyclic codes in R_q."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    NonUnitError,
    PolyRing,
    RingCtx,
    inverse_matrix,
    matmul,
    rank,
)

# information-set draws per generator matrix before G is resampled
IS_RETRIES = 64


@dataclass(frozen=True, eq=False)
class LinearCode:
    ctx: RingCtx
    n: int
    k: int
    G: np.ndarray
    info_set: tuple[int, ...]
    G_I_inv: np.ndarray

    @property
    def complement(self) -> tuple[int, ...]:
        info = set(self.info_set)
        return tuple(j for j in range(self.n) if j not in info)


def sample_code(ctx: RingCtx, n: int, k: int, rng: np.random.Generator) -> LinearCode:
    """Uniform rank-k generator matrix with a uniformly drawn invertible information set."""
    if not ctx.is_field:
        raise ValueError("linear codes need a field context")
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got n={n}, k={k}")
    while True:
        G = ctx.random(rng, (k, n))
        if rank(ctx, G) != k:
            continue
        for _ in range(IS_RETRIES):
            info = tuple(sorted(int(j) for j in rng.choice(n, size=k, replace=False)))
            try:
                G_I_inv = inverse_matrix(ctx, G[:, list(info)])
            except NonUnitError:
                continue
            return LinearCode(ctx, n, k, G, info, G_I_inv)


def encode(code: LinearCode, a) -> np.ndarray:
    """``a @ G`` for one message of length k, or a batch of shape (N, k, ...)."""
    a = np.asarray(a)
    ne = len(code.ctx.elem_shape)
    if a.ndim - ne not in (1, 2) or a.shape[a.ndim - ne - 1] != code.k:
        raise ValueError(f"message length must be {code.k}")
    if a.ndim - ne == 1:
        return matmul(code.ctx, a[None], code.G)[0]
    return matmul(code.ctx, a, code.G)


def erase_decode(code: LinearCode, r) -> np.ndarray:
    """Strip the codeword part: ``r - r_I G_I^{-1} G``.

    Exact whenever the error part of ``r`` vanishes on the information set.
    Accepts a single word or a batch (N, n, ...).
    """
    r = np.asarray(r)
    ne = len(code.ctx.elem_shape)
    single = r.ndim - ne == 1
    if single:
        r = r[None]
    rI = r[:, list(code.info_set)]
    msg = matmul(code.ctx, rI, code.G_I_inv)
    e = code.ctx.sub(r, matmul(code.ctx, msg, code.G))
    return e[0] if single else e


@dataclass(frozen=True, eq=False)
class ConstacyclicCode:
    """The ideal of (Z/qZ)[x]/(x^n+1) generated by ``s``."""

    ctx: PolyRing
    s: np.ndarray

    def __post_init__(self):
        if not np.any(self.s):
            raise ValueError("generator must be a non-zero polynomial")


def sample_constacyclic(ctx: PolyRing, rng: np.random.Generator) -> ConstacyclicCode:
    while True:
        s = ctx.random(rng)
        if np.any(s):
            return ConstacyclicCode(ctx, s)


def cc_encode(code: ConstacyclicCode, a) -> np.ndarray:
    return code.ctx.mul(np.asarray(a), code.s)


def cc_decode(code: ConstacyclicCode, r1, r2) -> np.ndarray:
    return code.ctx.sub(np.asarray(r2), cc_encode(code, r1))
