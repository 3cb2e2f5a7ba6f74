"""Distinguishing attacks on the query matrix A = (q_1; ...; q_N).

* ``unit_vector_attack``: e_b is in the column span of A when f is a field map.
* ``rank_drop_attack``: deleting row b lowers the F_q-rank when f is F_q-linear.
* ``amg_lattice_attack``: the +-1 kernel column is short in small p-ary lattices.

Indices in reports are 1-based.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sympy import isprime

from .algebra import (
    ContextError,
    ExtField,
    ModRing,
    PolyRing,
    PrimeField,
    RingCtx,
    expand_to_base,
    rank,
    solve_membership,
)
from .framework import Query
from .lattice import LatticeError, cvp, embedding_gammas, lll, qary_basis, sq_norm


@dataclass(eq=False)
class QueryMatrix:
    ctx: RingCtx
    A: np.ndarray  # (N, cols, *elem_shape)

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_query(cls, query: Query) -> "QueryMatrix":
        return cls(query.ctx, np.array(query.vectors, copy=True))

    def field_view(self) -> "QueryMatrix":
        """Coefficient rows over F_q when a ring context has a prime modulus."""
        if self.ctx.is_field:
            return self
        if isinstance(self.ctx, (PolyRing, ModRing)) and isprime(self.ctx.q):
            return QueryMatrix(PrimeField(self.ctx.q), self.A.reshape(self.N, -1))
        raise ContextError(f"{type(self.ctx).__name__} with modulus {self.ctx.modulus} "
                           "has no field view")


@dataclass
class AttackReport:
    strategy: str
    statistics: list
    guess: Optional[int]
    candidates: list[int]
    elapsed: float
    notes: list[str] = field(default_factory=list)
    phases: dict = field(default_factory=dict)

    def table(self) -> str:
        lines = [f"strategy: {self.strategy}", "index  statistic"]
        for i, s in enumerate(self.statistics, 1):
            mark = "  <-" if i == self.guess else ""
            lines.append(f"{i:5d}  {s}{mark}")
        lines.append(f"candidates: {self.candidates}")
        lines.append(f"guess: {self.guess if self.guess is not None else 'none'}")
        lines.extend(f"note: {n}" for n in self.notes)
        lines.append(f"time: {self.elapsed:.3f}s")
        return "\n".join(lines)


def final_guess(report: AttackReport, rng: np.random.Generator, N: int) -> int:
    """The attacker's index after breaking ties uniformly (no candidates: uniform over N)."""
    if report.guess is not None:
        return report.guess
    pool = report.candidates or list(range(1, N + 1))
    return int(pool[int(rng.integers(len(pool)))])


def _require_field_matrix(qm: QueryMatrix) -> None:
    if not qm.ctx.is_field:
        raise ContextError(
            f"attack needs a field context, got {type(qm.ctx).__name__}; "
            "use QueryMatrix.field_view() for a prime modulus")


def unit_vector_attack(qm: QueryMatrix) -> AttackReport:
    """Candidates are the b with the unit vector u_b in the column span of A."""
    _require_field_matrix(qm)
    start = time.perf_counter()
    ctx = qm.ctx
    A = qm.A
    N, cols = A.shape[:2]
    flags = []
    for b in range(N):
        u = ctx.zeros((N,))
        u[b] = ctx.one()
        flags.append(solve_membership(ctx, A, u) is not None)
    cands = [i + 1 for i, hit in enumerate(flags) if hit]
    notes = [f"at most {cols} unit vectors can lie in a {cols}-column span; found {len(cands)}"]
    return AttackReport("unitvec", flags, cands[0] if cands else None, cands,
                        time.perf_counter() - start, notes)


def rank_drop_attack(qm: QueryMatrix, s: Optional[int] = None) -> AttackReport:
    """Delete each row in turn and compare base-field ranks; the minimum marks b."""
    _require_field_matrix(qm)
    start = time.perf_counter()
    ctx = qm.ctx
    if isinstance(ctx, ExtField):
        A = expand_to_base(ctx, qm.A)
        base, m = ctx.base, ctx.m
    else:
        A = qm.A.reshape(qm.N, -1)
        base, m = ctx, 1
    N = qm.N
    n = qm.A.shape[1]
    ranks = [rank(base, np.delete(A, i, axis=0)) for i in range(N)]
    lo = min(ranks)
    cands = [i + 1 for i, r in enumerate(ranks) if r == lo]
    guess = cands[0] if len(cands) == 1 else None
    notes = []
    if N < m * n:
        notes.append(f"N={N} < mn={m * n}: rank gap not guaranteed (degraded confidence)")
    if s is not None:
        notes.append(f"expected rank at b: mn - s = {m * n - s}")
    if len(cands) == N:
        notes.append("all ranks equal: no gap expected for this query matrix")
    return AttackReport("rank", ranks, guess, cands, time.perf_counter() - start, notes)


def _block_lattices(A: np.ndarray, rows: list[int], subsets, p: int):
    block = A[rows]
    for S in subsets:
        yield S, qary_basis(block[:, list(S)], p)


def amg_lattice_attack(qm: QueryMatrix, t: int, block_size: int, k: Optional[int] = None,
                       delta: float = 0.75) -> AttackReport:
    """Two-phase block lattice attack.

    Phase 1 splits the rows into blocks and LLL-reduces, per block, the p-ary
    lattice spanned by block columns.  Outside the block holding b the
    restricted kernel column (+-1 entries) is a very short lattice vector; the
    block holding b has no such vector, so it maximises the normalised
    shortest squared norm.

    The kernel column lies in the span of the k information-set columns and
    column v.  When ``k + 1 < n`` the remaining uniformly random error columns
    would fill the lattice, so every (k+1)-subset of columns is tried and the
    smallest norm per block kept.  With ``k`` omitted all n columns are used.

    Phase 2 solves CVP with target t * u_j at each position j of the anomalous
    block, using the column subsets that produced short vectors elsewhere.
    The planted position leaves a residual of +-1 entries and a 0 at j.
    """
    if not isinstance(qm.ctx, PrimeField):
        raise ContextError("lattice attack needs a prime-field query matrix")
    start = time.perf_counter()
    p = qm.ctx.p
    A = np.asarray(qm.A, dtype=np.int64).reshape(qm.N, -1)
    N, n = A.shape
    if not 1 <= block_size <= N:
        raise ValueError(f"block size {block_size} outside [1, {N}]")
    if k is not None and block_size < k:
        raise ValueError(f"block size {block_size} below the code dimension {k}")
    if block_size > 12:
        raise ValueError("block size above 12 is beyond desk-scale LLL")
    r = n if k is None or k + 1 >= n else k + 1
    subsets = list(itertools.combinations(range(n), r))
    blocks = [list(range(i, min(i + block_size, N))) for i in range(0, N, block_size)]

    # phase 1
    per_subset: list[dict] = []
    block_stats: list[float] = []
    for rows in blocks:
        stats = {}
        for S, basis in _block_lattices(A, rows, subsets, p):
            reduced = lll(basis, delta)
            stats[S] = min(sq_norm(v) for v in reduced) / len(rows)
        per_subset.append(stats)
        block_stats.append(min(stats.values()))
    top = max(block_stats)
    cand_blocks = [i for i, s in enumerate(block_stats) if math.isclose(s, top)]

    # column subsets that look right in the other blocks
    others = [i for i in range(len(blocks)) if i not in cand_blocks]
    if others:
        score = {S: sum(per_subset[i][S] for i in others) for S in subsets}
        best = min(score.values())
        ref = [S for S in subsets if math.isclose(score[S], best)]
    else:
        ref = subsets

    # phase 2
    gammas = embedding_gammas(t)
    pos_stats: dict[int, tuple] = {}
    for bi in cand_blocks:
        rows = blocks[bi]
        for S, basis in _block_lattices(A, rows, ref, p):
            for j, row in enumerate(rows):
                target = [t if c == j else 0 for c in range(len(rows))]
                try:
                    closest = cvp(basis, target, gammas)
                except LatticeError:
                    continue
                resid = [a - c for a, c in zip(target, closest)]
                pattern = resid[j] == 0 and all(abs(x) == 1 for i, x in enumerate(resid) if i != j)
                key = (0 if pattern else 1, sq_norm(resid))
                if row not in pos_stats or key < pos_stats[row]:
                    pos_stats[row] = key
    notes = [f"blocks: {len(blocks)} of size <= {block_size}; column subsets of size {r}: "
             f"{len(subsets)}"]
    if len(cand_blocks) > 1:
        notes.append(f"phase 1 tie between blocks {[b + 1 for b in cand_blocks]}")
    if pos_stats:
        best_key = min(pos_stats.values())
        cands = sorted(i + 1 for i, key in pos_stats.items() if key == best_key)
        if best_key[0] != 0:
            notes.append("no residual matched the +-1 pattern")
    else:
        cands = []
        notes.append("CVP failed for every position")
    guess = cands[0] if len(cands) == 1 else None
    statistics = [pos_stats.get(i, (None, None))[1] for i in range(N)]
    phases = {
        "block_stats": block_stats,
        "candidate_blocks": [b + 1 for b in cand_blocks],
        "reference_subsets": ref,
        "position_stats": {i + 1: v for i, v in sorted(pos_stats.items())},
    }
    return AttackReport("lattice", statistics, guess, cands, time.perf_counter() - start,
                        notes, phases)
