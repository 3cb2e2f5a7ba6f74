"""Exact arithmetic over the ambient rings and the matrix kernels built on them.

Four contexts are supported:

* ``PrimeField(p)``      -- F_p, elements are residues in ``[0, p)``.
* ``ExtField(q, m, f)``  -- F_{q^m} = F_q[x]/(f), elements are coordinate
  vectors of length ``m`` in the polynomial basis ``1, x, ..., x^{m-1}``.
* ``ModRing(q)``         -- Z/qZ.
* ``PolyRing(q, n)``     -- (Z/qZ)[x]/(x^n + 1), elements are coefficient
  vectors of length ``n``.

Elements are numpy arrays whose trailing axes equal ``ctx.elem_shape``; every
ring operation broadcasts over the leading axes, so a matrix over F_{q^m} is
just an array of shape ``(rows, cols, m)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from sympy import isprime

_INT64_LIMIT = 2**63


class NonUnitError(ArithmeticError):
    """Raised when inverting an element that is not a unit."""


class ContextError(ValueError):
    """Raised for malformed contexts or operands from the wrong context."""


class _Ring:
    """Shared array machinery. Subclasses set ``modulus`` and ``elem_shape``."""

    modulus: int
    elem_shape: tuple[int, ...] = ()
    is_field: bool = False

    # number of products accumulated per output coefficient by ``mul``
    def _mul_terms(self) -> int:
        return 1

    @property
    def dtype(self):
        bound = self._mul_terms() * (self.modulus - 1) ** 2 + self.modulus
        return np.int64 if bound < _INT64_LIMIT else object

    @property
    def elem_size(self) -> int:
        return math.prod(self.elem_shape)

    def zeros(self, shape: Sequence[int] = ()) -> np.ndarray:
        return np.zeros(tuple(shape) + self.elem_shape, dtype=self.dtype)

    def one(self) -> np.ndarray:
        z = self.zeros()
        if self.elem_shape:
            z[0] = 1
            return z
        return np.asarray(1, dtype=self.dtype)

    def element(self, value) -> np.ndarray:
        """Coerce ints / sequences into a canonical array in this context."""
        if self.dtype is object:
            arr = np.array(value, dtype=object)
            arr = np.vectorize(int, otypes=[object])(arr) if arr.size else arr
        else:
            arr = np.asarray(value, dtype=np.int64)
        if arr.shape[arr.ndim - len(self.elem_shape):] != self.elem_shape:
            raise ContextError(
                f"expected trailing shape {self.elem_shape}, got {arr.shape}")
        return arr % self.modulus

    def random(self, rng: np.random.Generator, size: Sequence[int] = ()) -> np.ndarray:
        shape = tuple(size) + self.elem_shape
        if self.dtype is object:
            return rng.integers(0, self.modulus, size=shape, dtype=np.uint64).astype(object)
        return rng.integers(0, self.modulus, size=shape, dtype=np.int64)

    def add(self, x, y):
        return (x + y) % self.modulus

    def sub(self, x, y):
        return (x - y) % self.modulus

    def neg(self, x):
        return (-x) % self.modulus

    def scale(self, c, x):
        """Multiply by integer scalars ``c`` (broadcast over the element axes)."""
        c = np.asarray(c)
        if self.elem_shape:
            c = c.reshape(c.shape + (1,) * len(self.elem_shape))
        return (c * x) % self.modulus

    def mul(self, x, y):
        return (x * y) % self.modulus

    def is_zero(self, x) -> np.ndarray:
        x = np.asarray(x)
        if self.elem_shape:
            return np.all(x == 0, axis=tuple(range(-len(self.elem_shape), 0)))
        return x == 0

    def is_unit(self, x) -> np.ndarray:
        return ~self.is_zero(x)

    def equal(self, x, y) -> bool:
        return bool(np.all(np.asarray(x) % self.modulus == np.asarray(y) % self.modulus))

    def inv(self, x):
        raise NotImplementedError

    def sum(self, x, axis):
        return np.sum(x, axis=axis) % self.modulus

    def to_python(self, x):
        """Convert an element (or array of elements) into nested Python ints."""
        arr = np.asarray(x)
        if arr.ndim == 0:
            return int(arr)
        return [self.to_python(v) for v in arr]


@dataclass(frozen=True)
class PrimeField(_Ring):
    p: int
    is_field = True

    def __post_init__(self):
        if not (2 <= self.p < 2**64) or not isprime(self.p):
            raise ContextError(f"{self.p} is not a 64-bit prime")

    @property
    def modulus(self) -> int:
        return self.p

    @property
    def base(self) -> "PrimeField":
        return self

    def inv(self, x):
        x = int(np.asarray(x)) % self.p
        if x == 0:
            raise NonUnitError("0 has no inverse")
        return np.asarray(pow(x, -1, self.p), dtype=self.dtype)


@dataclass(frozen=True)
class ModRing(_Ring):
    q: int

    def __post_init__(self):
        if not (2 <= self.q < 2**64):
            raise ContextError(f"modulus {self.q} outside [2, 2^64)")

    @property
    def modulus(self) -> int:
        return self.q

    def is_unit(self, x):
        return np.gcd(np.asarray(x).astype(object) if self.dtype is object else x, self.q) == 1

    def inv(self, x):
        x = int(np.asarray(x)) % self.q
        if math.gcd(x, self.q) != 1:
            raise NonUnitError(f"gcd({x}, {self.q}) != 1")
        return np.asarray(pow(x, -1, self.q), dtype=self.dtype)


def _poly_rem(a: list[int], g: list[int], q: int) -> list[int]:
    """Remainder of ``a`` by monic ``g`` over F_q (coefficients low to high)."""
    a = list(a)
    dg = len(g) - 1
    for i in range(len(a) - 1, dg - 1, -1):
        c = a[i] % q
        if c:
            for j in range(dg + 1):
                a[i - dg + j] = (a[i - dg + j] - c * g[j]) % q
    return [c % q for c in a[:dg]]


def is_irreducible(modulus: Sequence[int], q: int) -> bool:
    """Trial division by every monic polynomial of degree 1..m//2 over F_q."""
    m = len(modulus) - 1
    for d in range(1, m // 2 + 1):
        for low in itertools.product(range(q), repeat=d):
            g = list(low) + [1]
            if not any(_poly_rem(modulus, g, q)):
                return False
    return True


def find_irreducible(q: int, m: int) -> tuple[int, ...]:
    """First monic irreducible of degree ``m`` in lexicographic order of its low coefficients."""
    for low in itertools.product(range(q), repeat=m):
        cand = tuple(reversed(low)) + (1,)
        if cand[0] != 0 and is_irreducible(cand, q):
            return cand
    raise ContextError(f"no irreducible polynomial of degree {m} over F_{q}")


@dataclass(frozen=True)
class ExtField(_Ring):
    """F_{q^m} with the polynomial basis beta_i = x^(i-1) modulo ``modulus``.

    ``modulus`` lists the coefficients of a monic degree-``m`` polynomial from
    the constant term up, e.g. ``(1, 1, 0, 0, 1)`` for x^4 + x + 1.
    """

    q: int
    m: int
    modulus_poly: tuple[int, ...] = field(default=())
    is_field = True

    def __post_init__(self):
        if not isprime(self.q) or self.q >= 2**64:
            raise ContextError(f"base {self.q} is not a 64-bit prime")
        if not 1 <= self.m <= 8:
            raise ContextError("extension degree must lie in [1, 8]")
        if not self.modulus_poly:
            object.__setattr__(self, "modulus_poly", find_irreducible(self.q, self.m))
        poly = tuple(int(c) % self.q for c in self.modulus_poly)
        object.__setattr__(self, "modulus_poly", poly)
        if len(poly) != self.m + 1 or poly[-1] != 1:
            raise ContextError("modulus must be monic of degree m")
        if not is_irreducible(poly, self.q):
            raise ContextError(f"{poly} is reducible over F_{self.q}")

    @property
    def modulus(self) -> int:
        return self.q

    @property
    def elem_shape(self) -> tuple[int, ...]:
        return (self.m,)

    @property
    def base(self) -> PrimeField:
        return PrimeField(self.q)

    def _mul_terms(self) -> int:
        return self.m

    def mul(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        m, q = self.m, self.q
        lead = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        prod = np.zeros(lead + (2 * m - 1,), dtype=self.dtype)
        for i in range(m):
            prod[..., i:i + m] += x[..., i:i + 1] * y
        prod %= q
        low = np.asarray(self.modulus_poly[:m], dtype=self.dtype)
        # x^m = -(f_0 + ... + f_{m-1} x^{m-1})
        for d in range(2 * m - 2, m - 1, -1):
            c = prod[..., d:d + 1]
            prod[..., d - m:d] = (prod[..., d - m:d] - c * low) % q
        return prod[..., :m] % q

    def pow(self, x, e: int):
        result = np.broadcast_to(self.one(), np.shape(x)).copy()
        base = np.asarray(x)
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, x):
        x = np.asarray(x) % self.q
        if not np.any(x):
            raise NonUnitError("0 has no inverse")
        return self.pow(x, self.q**self.m - 2)

    def embed(self, c):
        """Embed base-field scalars as extension elements (coordinate beta_1)."""
        c = np.asarray(c, dtype=self.dtype) % self.q
        out = np.zeros(c.shape + (self.m,), dtype=self.dtype)
        out[..., 0] = c
        return out


@dataclass(frozen=True)
class PolyRing(_Ring):
    """(Z/qZ)[x]/(x^n + 1); multiplication by x is a negacyclic rotation."""

    q: int
    n: int

    def __post_init__(self):
        if not (2 <= self.q < 2**64):
            raise ContextError(f"modulus {self.q} outside [2, 2^64)")
        if self.n < 1 or self.n & (self.n - 1):
            raise ContextError(f"degree {self.n} is not a power of two")

    @property
    def modulus(self) -> int:
        return self.q

    @property
    def elem_shape(self) -> tuple[int, ...]:
        return (self.n,)

    def _mul_terms(self) -> int:
        return self.n

    def mul(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        n = self.n
        lead = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        prod = np.zeros(lead + (2 * n,), dtype=self.dtype)
        for i in range(n):
            prod[..., i:i + n] += x[..., i:i + 1] * y
        return (prod[..., :n] - prod[..., n:]) % self.q

    def mul_matrix(self, x) -> np.ndarray:
        """n x n matrix M over Z/qZ with (y * x) == y @ M for coefficient rows y."""
        rows = self.mul(np.eye(self.n, dtype=self.dtype), np.asarray(x))
        return rows % self.q

    def inv(self, x):
        x = np.asarray(x) % self.q
        M = self.mul_matrix(x)
        # y @ M = 1  <=>  M^T y^T = e_0
        ring = PrimeField(self.q) if isprime(self.q) else ModRing(self.q)
        try:
            Minv = inverse_matrix(ring, M)
        except NonUnitError as exc:
            raise NonUnitError("polynomial is not a unit in the quotient ring") from exc
        return Minv[0] % self.q


RingCtx = Union[PrimeField, ExtField, ModRing, PolyRing]


# ---------------------------------------------------------------------------
# scalar helpers


def arith(ctx: RingCtx, op: str, x, y=None):
    """Apply ``add``/``sub``/``mul``/``neg`` in ``ctx`` and return a canonical element."""
    x = ctx.element(x)
    if op == "neg":
        return ctx.neg(x)
    if y is None:
        raise ContextError(f"{op} needs two operands")
    y = ctx.element(y)
    if x.shape != y.shape:
        raise ContextError("operands belong to different contexts")
    try:
        fn = {"add": ctx.add, "sub": ctx.sub, "mul": ctx.mul}[op]
    except KeyError:
        raise ContextError(f"unknown operation {op!r}") from None
    return fn(x, y)


def invert(ctx: RingCtx, x):
    return ctx.inv(ctx.element(x))


def signed_lift(p: int, x):
    """Representative of ``x`` in ``[-floor(p/2), floor(p/2)]``."""
    if isinstance(x, np.ndarray):
        x = x % p
        return np.where(x > p // 2, x - p, x)
    x = int(x) % p
    return x - p if x > p // 2 else x


def centered_residue(t: int, w):
    """Representative of ``w`` modulo ``t`` in the half-open interval ``(-t/2, t/2]``."""
    if t < 2:
        raise ValueError("t must be at least 2")
    if isinstance(w, np.ndarray):
        r = w % t
        return np.where(2 * r > t, r - t, r)
    r = int(w) % t
    return r - t if 2 * r > t else r


# ---------------------------------------------------------------------------
# matrices (arrays of shape (rows, cols, *elem_shape))


def _require_field(ctx: RingCtx) -> None:
    if not ctx.is_field:
        raise ContextError(f"{type(ctx).__name__} is not a field")


def matmul(ctx: RingCtx, A, B) -> np.ndarray:
    """Matrix product; ``A`` is (r, k, *e) and ``B`` is (k, c, *e)."""
    A = np.asarray(A)
    B = np.asarray(B)
    ne = len(ctx.elem_shape)
    if ne == 0 and ctx.dtype is not object:
        # entries are reduced, so a k-term dot product stays below k * p^2
        if A.shape[1] * (ctx.modulus - 1) ** 2 < _INT64_LIMIT:
            return (A @ B) % ctx.modulus
    prods = ctx.mul(A[:, :, None], B[None, :, :])
    return ctx.sum(prods, axis=1)


def expand_to_base(ctx: ExtField, M) -> np.ndarray:
    """Write each F_{q^m} entry as its m base-field coordinates (column j -> m columns)."""
    M = np.asarray(M)
    rows, cols = M.shape[:2]
    return M.reshape(rows, cols * ctx.m)


def row_reduce(ctx: RingCtx, M) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns. Pivots must be units."""
    M = np.array(M, dtype=ctx.dtype, copy=True) % ctx.modulus
    rows, cols = M.shape[:2]
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        ok = ctx.is_unit(M[r:, c])
        if not np.any(ok):
            continue
        pr = r + int(np.argmax(ok))
        if pr != r:
            M[[r, pr]] = M[[pr, r]]
        M[r] = ctx.mul(M[r], ctx.inv(M[r, c]))
        factors = M[:, c].copy()
        factors[r] = 0
        M = ctx.sub(M, ctx.mul(factors[:, None], M[r][None, :]))
        pivots.append(c)
        r += 1
    return M, pivots


def rank(ctx: RingCtx, M) -> int:
    _require_field(ctx)
    M = np.asarray(M)
    if M.size == 0:
        return 0
    return len(row_reduce(ctx, M)[1])


def inverse_matrix(ctx: RingCtx, M) -> np.ndarray:
    """Inverse of a square matrix; raises ``NonUnitError`` when singular."""
    M = np.asarray(M)
    k = M.shape[0]
    if M.shape[1] != k:
        raise ContextError("matrix is not square")
    eye = ctx.zeros((k, k))
    for i in range(k):
        eye[i, i] = ctx.one()
    R, pivots = row_reduce(ctx, np.concatenate([M, eye], axis=1))
    if pivots[:k] != list(range(k)) or len(pivots) < k:
        raise NonUnitError("matrix is singular")
    return R[:, k:]


def solve_membership(ctx: RingCtx, M, target) -> Optional[np.ndarray]:
    """Return x with M @ x == target, or None if target is outside the column span."""
    _require_field(ctx)
    M = np.asarray(M)
    target = np.asarray(target)
    rows, cols = M.shape[:2]
    if target.shape[0] != rows:
        raise ContextError("target length differs from row count")
    aug = np.concatenate([M, target[:, None]], axis=1)
    R, pivots = row_reduce(ctx, aug)
    if cols in pivots:
        return None
    x = ctx.zeros((cols,))
    for r, c in enumerate(pivots):
        x[c] = R[r, cols]
    return x


def left_kernel(ctx: RingCtx, M) -> np.ndarray:
    """Basis (as rows) of {w : w @ M == 0}."""
    _require_field(ctx)
    M = np.asarray(M)
    rows = M.shape[0]
    R, pivots = row_reduce(ctx, np.swapaxes(M, 0, 1))
    free = [c for c in range(rows) if c not in pivots]
    basis = ctx.zeros((len(free), rows))
    for i, f in enumerate(free):
        basis[i, f] = ctx.one()
        for r, c in enumerate(pivots):
            basis[i, c] = ctx.neg(R[r, f])
    return basis


# ---------------------------------------------------------------------------
# sampling


def gaussian_vector(sigma: float, size, rng: np.random.Generator) -> np.ndarray:
    """Rounded normal variates, rejected and redrawn beyond ceil(6 sigma)."""
    size = (size,) if isinstance(size, int) else tuple(size)
    if sigma == 0:
        return np.zeros(size, dtype=np.int64)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    cut = math.ceil(6 * sigma)
    out = np.rint(rng.normal(0.0, sigma, size=size)).astype(np.int64)
    bad = np.abs(out) > cut
    while np.any(bad):
        out[bad] = np.rint(rng.normal(0.0, sigma, size=int(bad.sum()))).astype(np.int64)
        bad = np.abs(out) > cut
    return out


def gaussian_sample(sigma: float, rng: np.random.Generator) -> int:
    return int(gaussian_vector(sigma, 1, rng)[0])
