"""The four concrete retrieval functions and their parameter gates.

==========  ================  =====================  ===========  ============  ==============
scheme      ring              f                      X            Y             Z
==========  ================  =====================  ===========  ============  ==============
basic       F_q               identity               F_q          {0}           F_q \\ {0}
hhwz        F_{q^m}           projection onto V      F_q          W             V \\ {0}
amg         F_p               x - cmod_t(x)          [0, 2^l)     {-1, +1}      {t}
rlwe        Z_q[x]/(x^n+1)    x mod t (per coeff)    coeffs < t   t * chi       t * chi + 1
==========  ================  =====================  ===========  ============  ==============
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sympy import isprime, nextprime

from .algebra import (
    ExtField,
    PolyRing,
    PrimeField,
    centered_residue,
    gaussian_vector,
    signed_lift,
)
from .framework import HidingMode, ParameterError, RecoveryError, Scheme, SchemeId


def _shape(size) -> tuple[int, ...]:
    return (size,) if isinstance(size, (int, np.integer)) else tuple(size)


def _check_shape(n: int, k: int) -> None:
    if not 0 < k < n:
        raise ParameterError(f"code shape needs 0 < k < n, got n={n}, k={k}")


# ---------------------------------------------------------------------------
# basic: identity retrieval over F_q


@dataclass(frozen=True)
class BasicParams:
    q: int = 13
    n: int = 10
    k: int = 5


class BasicScheme(Scheme):
    name = "basic"
    scheme_id = SchemeId.BASIC
    mode = HidingMode.SYSTEMATIC

    def __init__(self, params: BasicParams):
        _check_shape(params.n, params.k)
        if not isprime(params.q):
            raise ParameterError(f"q={params.q} is not prime")
        self.config = params
        self.ctx = PrimeField(params.q)
        self.n, self.k = params.n, params.k
        self.symbol_bits = max(1, params.q.bit_length() - 1)

    def f(self, x):
        return np.asarray(x) % self.ctx.p

    def sample_y(self, rng, size=()):
        return self.ctx.zeros(size)

    def sample_z(self, rng):
        return np.asarray(rng.integers(1, self.ctx.p), dtype=self.ctx.dtype)

    def sample_x(self, rng, size=()):
        return self.ctx.random(rng, size)

    def in_x(self, x):
        return bool(np.all((0 <= np.asarray(x)) & (np.asarray(x) < self.ctx.p)))

    def recover(self, value, fz):
        return self.ctx.mul(value, self.ctx.inv(fz))

    def params(self):
        return {"q": self.config.q, "n": self.n, "k": self.k}


def make_basic(params: BasicParams = BasicParams()) -> BasicScheme:
    return BasicScheme(params)


# ---------------------------------------------------------------------------
# hhwz: projection onto a secret-free coordinate subspace of F_{q^m}


@dataclass(frozen=True)
class HhwzParams:
    q: int = 2
    m: int = 4
    n: int = 6
    k: int = 3
    s: int = 2
    modulus: Optional[tuple[int, ...]] = None


class HhwzScheme(Scheme):
    """V = span(beta_1..beta_s), W = span(beta_{s+1}..beta_m) in the polynomial basis."""

    name = "hhwz"
    scheme_id = SchemeId.HHWZ
    mode = HidingMode.SYSTEMATIC

    def __init__(self, params: HhwzParams):
        _check_shape(params.n, params.k)
        if not 1 <= params.s < params.m:
            raise ParameterError(f"s={params.s} outside [1, m-1] for m={params.m}")
        self.config = params
        self.ctx = ExtField(params.q, params.m, params.modulus or ())
        self.n, self.k, self.s = params.n, params.k, params.s
        self.symbol_bits = max(1, params.q.bit_length() - 1)

    def f(self, x):
        out = np.array(x, copy=True)
        out[..., self.s:] = 0
        return out

    def sample_y(self, rng, size=()):
        y = self.ctx.random(rng, size)
        y[..., :self.s] = 0
        return y

    def sample_z(self, rng):
        while True:
            z = self.ctx.random(rng)
            z[self.s:] = 0
            if np.any(z):
                return z

    def sample_x(self, rng, size=()):
        return self.ctx.embed(rng.integers(0, self.ctx.q, size=size))

    def in_x(self, x):
        x = np.asarray(x)
        return bool(np.all(x[..., 1:] == 0) and np.all((0 <= x) & (x < self.ctx.q)))

    def lift_x(self, value):
        if not 0 <= int(value) < self.ctx.q:
            raise ParameterError(f"{value!r} is not in F_{self.ctx.q}")
        return self.ctx.embed(int(value))

    def unlift_x(self, x):
        return int(np.asarray(x)[0])

    def recover(self, value, fz):
        m = self.ctx.mul(value, self.ctx.inv(fz))
        if not self.in_x(m):
            raise RecoveryError("projected value is not a base-field multiple of f(z)")
        return m

    def params(self):
        return {"q": self.config.q, "m": self.ctx.m, "n": self.n, "k": self.k, "s": self.s,
                "modulus": list(self.ctx.modulus_poly)}


def make_hhwz(params: HhwzParams = HhwzParams()) -> HhwzScheme:
    return HhwzScheme(params)


# ---------------------------------------------------------------------------
# amg: small errors modulo t inside a large prime field


@dataclass(frozen=True)
class AmgParams:
    N: int
    ell: int
    t: int
    p: int
    n: int
    k: int

    @classmethod
    def derive(cls, N: int, n: int = 4, k: int = 2, p: Optional[int] = None) -> "AmgParams":
        if N < 1:
            raise ParameterError("N must be positive")
        _check_shape(n, k)
        ell = math.ceil(math.log2(N)) + 1 if N > 1 else 1
        t = 2 ** (2 * ell)
        floor = 2 ** (3 * ell + 1)
        if p is None:
            p = int(nextprime(floor))
        elif p <= floor or not isprime(p):
            raise ParameterError(f"p must be a prime above 2^(3l+1) = {floor}, got {p}")
        return cls(N=N, ell=ell, t=t, p=p, n=n, k=k)


class AmgScheme(Scheme):
    name = "amg"
    scheme_id = SchemeId.AMG
    mode = HidingMode.SYSTEMATIC

    def __init__(self, params: AmgParams):
        self.config = params
        self.ctx = PrimeField(params.p)
        self.n, self.k = params.n, params.k
        self.t, self.ell = params.t, params.ell
        self.max_N = params.N
        self.symbol_bits = params.ell

    def f(self, x):
        w = signed_lift(self.ctx.p, np.asarray(x))
        return (w - centered_residue(self.t, w)) % self.ctx.p

    def sample_y(self, rng, size=()):
        signs = rng.integers(0, 2, size=size)
        return np.where(signs == 1, 1, self.ctx.p - 1).astype(self.ctx.dtype)

    def sample_z(self, rng):
        return np.asarray(self.t, dtype=self.ctx.dtype)

    def sample_x(self, rng, size=()):
        return rng.integers(0, 2**self.ell, size=size).astype(self.ctx.dtype)

    def in_x(self, x):
        x = np.asarray(x)
        return bool(np.all((0 <= x) & (x < 2**self.ell)))

    def recover(self, value, fz):
        m = self.ctx.mul(value, self.ctx.inv(fz))
        if not self.in_x(m):
            raise RecoveryError(f"value {int(value)} is not m * {int(fz)} for a file m")
        return m

    def params(self):
        return {"N": self.max_N, "ell": self.ell, "t": self.t, "p": self.ctx.p,
                "n": self.n, "k": self.k}


def make_amg(N: int = 8, n: int = 4, k: int = 2, p: Optional[int] = None) -> AmgScheme:
    return AmgScheme(AmgParams.derive(N, n, k, p))


# ---------------------------------------------------------------------------
# rlwe: constacyclic code over Z_q[x]/(x^n+1), errors in t * Z


@dataclass(frozen=True)
class RlweParams:
    n: int = 64
    q: int = 12289
    t: int = 4
    sigma: float = 2.0
    N: int = 16

    def gate(self) -> float:
        """Left side of N t^2 sigma sqrt(n) < q/2."""
        return self.N * self.t**2 * self.sigma * math.sqrt(self.n)

    def validate(self) -> None:
        if self.N < 1:
            raise ParameterError("N must be positive")
        if not 2 <= self.t < self.q:
            raise ParameterError(f"need 2 <= t < q, got t={self.t}, q={self.q}")
        if math.gcd(self.t, self.q) != 1:
            raise ParameterError(f"gcd(t, q) = {math.gcd(self.t, self.q)} != 1")
        if not self.gate() < self.q / 2:
            raise ParameterError(
                f"N t^2 sigma sqrt(n) < q/2 fails: {self.N}*{self.t}^2*{self.sigma}"
                f"*sqrt({self.n}) = {self.gate():g} >= {self.q / 2:g}")


class RlweScheme(Scheme):
    name = "rlwe"
    scheme_id = SchemeId.RLWE
    mode = HidingMode.EXPLICIT

    def __init__(self, params: RlweParams):
        params.validate()
        self.config = params
        self.ctx = PolyRing(params.q, params.n)
        self.n = params.n
        self.t = params.t
        self.sigma = params.sigma
        self.max_N = params.N
        self.symbol_bits = max(1, params.t.bit_length() - 1)
        self.symbols_per_element = params.n

    def f(self, x):
        return signed_lift(self.ctx.q, np.asarray(x)) % self.t

    def sample_y(self, rng, size=()):
        shape = _shape(size)
        y = gaussian_vector(self.sigma, shape + (self.n,), rng)
        return (self.t * y) % self.ctx.q

    def sample_z(self, rng):
        z = self.sample_y(rng)
        z[0] = (z[0] + 1) % self.ctx.q
        return z

    def sample_x(self, rng, size=()):
        shape = _shape(size)
        return rng.integers(0, self.t, size=shape + (self.n,)).astype(self.ctx.dtype)

    def in_x(self, x):
        x = np.asarray(x)
        return bool(np.all((0 <= x) & (x < self.t)))

    def recover(self, value, fz):
        one = np.zeros(self.n, dtype=np.asarray(fz).dtype)
        one[0] = 1
        if not np.array_equal(np.asarray(fz), one):
            raise RecoveryError("f(z) must be the constant polynomial 1")
        if not self.in_x(value):
            raise RecoveryError("decoded coefficients outside [0, t)")
        return np.asarray(value)

    def params(self):
        return {"n": self.n, "q": self.ctx.q, "t": self.t, "sigma": self.sigma, "N": self.max_N}


def make_rlwe(params: RlweParams = RlweParams()) -> RlweScheme:
    return RlweScheme(params)


def make_scheme(name: str, **kw) -> Scheme:
    """Build a scheme from its name and keyword parameters (CLI / transcript headers)."""
    if name == "basic":
        return make_basic(BasicParams(**kw))
    if name == "hhwz":
        if kw.get("modulus") is not None:
            kw["modulus"] = tuple(kw["modulus"])
        return make_hhwz(HhwzParams(**kw))
    if name == "amg":
        kw.pop("ell", None)
        kw.pop("t", None)
        return make_amg(**kw)
    if name == "rlwe":
        return make_rlwe(RlweParams(**kw))
    raise ParameterError(f"unknown scheme {name!r}")


SCHEME_NAMES = {SchemeId.BASIC: "basic", SchemeId.HHWZ: "hhwz",
                SchemeId.AMG: "amg", SchemeId.RLWE: "rlwe"}
