"""Integer lattice tools: LLL, brute-force SVP, Kannan embedding for CVP, q-ary bases."""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .algebra import PrimeField, row_reduce

MAX_LLL_DIM = 32
MAX_BRUTE_DIM = 6


class LatticeError(ValueError):
    pass


def _gso(B: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    Bf = np.array(B, dtype=float)
    d = len(B)
    mu = np.zeros((d, d))
    star = np.zeros_like(Bf)
    norms = np.zeros(d)
    for i in range(d):
        v = Bf[i].copy()
        for j in range(i):
            mu[i, j] = Bf[i] @ star[j] / norms[j]
            v -= mu[i, j] * star[j]
        star[i] = v
        norms[i] = v @ v
        if norms[i] < 1e-9:
            raise LatticeError("basis rows are linearly dependent")
    return mu, norms


def lll(basis: Sequence[Sequence[int]], delta: float = 0.75) -> list[list[int]]:
    """LLL-reduce the rows of ``basis`` (floating-point Gram-Schmidt, exact integer updates)."""
    if not 0.25 < delta < 1:
        raise ValueError("delta must lie in (1/4, 1)")
    B = [[int(c) for c in row] for row in basis]
    d = len(B)
    if d > MAX_LLL_DIM:
        raise LatticeError(f"dimension {d} exceeds {MAX_LLL_DIM}")
    if d == 0:
        return B
    mu, norms = _gso(B)
    k = 1
    while k < d:
        for j in range(k - 1, -1, -1):
            r = int(round(mu[k, j]))
            if r:
                B[k] = [a - r * b for a, b in zip(B[k], B[j])]
                mu[k, :j] -= r * mu[j, :j]
                mu[k, j] -= r
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            B[k - 1], B[k] = B[k], B[k - 1]
            mu, norms = _gso(B)
            k = max(k - 1, 1)
    return B


def is_lll_reduced(basis: Sequence[Sequence[int]], delta: float = 0.75, eps: float = 1e-6) -> bool:
    mu, norms = _gso([list(r) for r in basis])
    d = len(basis)
    for i in range(d):
        for j in range(i):
            if abs(mu[i, j]) > 0.5 + eps:
                return False
    for k in range(1, d):
        if norms[k] < (delta - mu[k, k - 1] ** 2) * norms[k - 1] - eps:
            return False
    return True


def shortest_vector_bruteforce(basis: Sequence[Sequence[int]], coeff_bound: int) -> list[int]:
    """Shortest nonzero combination with coefficients in [-coeff_bound, coeff_bound]."""
    B = np.array(basis, dtype=np.int64)
    d = B.shape[0]
    if d > MAX_BRUTE_DIM:
        raise LatticeError(f"dimension {d} exceeds {MAX_BRUTE_DIM}")
    rng = np.arange(-coeff_bound, coeff_bound + 1)
    coeffs = np.array(list(itertools.product(rng, repeat=d)), dtype=np.int64)
    coeffs = coeffs[np.any(coeffs != 0, axis=1)]
    vecs = coeffs @ B
    norms = np.einsum("ij,ij->i", vecs, vecs)
    return [int(c) for c in vecs[int(np.argmin(norms))]]


def sq_norm(v: Sequence[int]) -> int:
    return sum(int(c) * int(c) for c in v)


def qary_basis(columns, p: int) -> list[list[int]]:
    """Basis of the lattice generated by the given columns (length-d vectors) and p Z^d.

    ``columns`` has shape (d, r): the r generators are its columns.
    """
    G = np.asarray(columns, dtype=np.int64) % p
    d = G.shape[0]
    R, pivots = row_reduce(PrimeField(p), G.T)
    rows = [[int(c) for c in R[i]] for i in range(len(pivots))]
    for j in range(d):
        if j not in pivots:
            rows.append([p if c == j else 0 for c in range(d)])
    return rows


def cvp_embed(basis: Sequence[Sequence[int]], target: Sequence[int], gamma: int = 1
              ) -> list[int]:
    """Closest-vector candidate via Kannan's embedding [[B, 0], [target, gamma]]."""
    B = [list(map(int, r)) for r in basis]
    if not B or len(target) != len(B[0]):
        raise LatticeError("target length must equal the lattice ambient dimension")
    emb = [row + [0] for row in B] + [[int(c) for c in target] + [gamma]]
    reduced = lll(emb)
    cands = [v for v in reduced if abs(v[-1]) == gamma]
    if not cands:
        raise LatticeError(f"no embedded vector with last coordinate +-{gamma}")
    best = min(cands, key=sq_norm)
    sign = 1 if best[-1] == gamma else -1
    residual = [sign * c for c in best[:-1]]
    return [int(t) - r for t, r in zip(target, residual)]


def cvp(basis, target, gammas: Sequence[int] = (1,)) -> list[int]:
    """Try ``cvp_embed`` with each embedding factor until one succeeds."""
    last = None
    for g in gammas:
        try:
            return cvp_embed(basis, target, g)
        except LatticeError as exc:
            last = exc
    raise last if last else LatticeError("no embedding factor given")


def embedding_gammas(t: int) -> list[int]:
    """1, then 2, 4, ... up to t/2."""
    out = [1]
    g = 2
    while g <= max(2, t // 2):
        out.append(g)
        g *= 2
    return out
