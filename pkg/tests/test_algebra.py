import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codepir.algebra import (
    ContextError,
    ExtField,
    ModRing,
    NonUnitError,
    PolyRing,
    PrimeField,
    arith,
    centered_residue,
    expand_to_base,
    gaussian_sample,
    gaussian_vector,
    inverse_matrix,
    invert,
    is_irreducible,
    left_kernel,
    matmul,
    rank,
    signed_lift,
    solve_membership,
)


def schoolbook_negacyclic(a, b, q):
    n = len(a)
    out = [0] * (2 * n)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += int(x) * int(y)
    return [(out[i] - out[i + n]) % q for i in range(n)]


def span_size_log(rows, q):
    """log_q of the number of distinct F_q combinations of ``rows``."""
    rows = [tuple(int(c) for c in r) for r in rows]
    if not rows:
        return 0
    seen = set()
    for coeffs in itertools.product(range(q), repeat=len(rows)):
        seen.add(tuple(sum(c * r[j] for c, r in zip(coeffs, rows)) % q for j in range(len(rows[0]))))
    return round(math.log(len(seen), q))


class TestArith:
    def test_prime_field_mul(self):
        assert int(arith(PrimeField(7), "mul", 3, 5)) == 1

    def test_negacyclic_wrap(self):
        ctx = PolyRing(17, 2)
        x = np.array([0, 1])
        assert arith(ctx, "mul", x, x).tolist() == [16, 0]

    def test_ext_field_mul_by_modulus(self):
        ctx = ExtField(2, 2, (1, 1, 1))
        beta2 = np.array([0, 1])
        assert arith(ctx, "mul", beta2, beta2).tolist() == [1, 1]

    def test_add_sub_neg(self):
        ctx = ModRing(12)
        assert int(arith(ctx, "add", 7, 9)) == 4
        assert int(arith(ctx, "sub", 3, 9)) == 6
        assert int(arith(ctx, "neg", 5)) == 7

    def test_context_mismatch(self):
        with pytest.raises(ContextError):
            arith(ExtField(2, 4), "add", np.array([1, 0]), np.array([1, 0, 0, 0]))

    def test_negacyclic_matches_schoolbook(self):
        ctx = PolyRing(12289, 16)
        rng = np.random.default_rng(3)
        for _ in range(100):
            a, b = ctx.random(rng), ctx.random(rng)
            assert ctx.mul(a, b).tolist() == schoolbook_negacyclic(a, b, 12289)

    def test_large_modulus_uses_exact_integers(self):
        p = 2**61 - 1
        ctx = PrimeField(p)
        x = p - 2
        assert int(ctx.mul(np.array(x, dtype=ctx.dtype), np.array(x, dtype=ctx.dtype))) == (x * x) % p


class TestInvert:
    def test_prime_field(self):
        assert int(invert(PrimeField(7), 3)) == 5

    def test_modring_unit(self):
        y = int(invert(ModRing(12289), 4))
        assert (4 * y) % 12289 == 1
        assert y == pow(4, -1, 12289)

    def test_modring_non_unit(self):
        with pytest.raises(NonUnitError):
            invert(ModRing(12), 4)

    def test_zero_in_field(self):
        with pytest.raises(NonUnitError):
            invert(PrimeField(13), 0)

    def test_every_ext_element(self):
        ctx = ExtField(2, 4)
        one = ctx.one()
        for coords in itertools.product(range(2), repeat=4):
            x = np.array(coords)
            if any(coords):
                assert ctx.mul(x, ctx.inv(x)).tolist() == one.tolist()

    def test_poly_ring_inverse(self):
        ctx = PolyRing(17, 4)
        x = np.array([1, 1, 0, 0])
        assert ctx.mul(x, ctx.inv(x)).tolist() == [1, 0, 0, 0]


class TestLiftAndResidue:
    @pytest.mark.parametrize("p,x,w", [(7, 6, -1), (7, 3, 3), (4099, 4098, -1)])
    def test_signed_lift(self, p, x, w):
        assert int(signed_lift(p, x)) == w

    @pytest.mark.parametrize("w,r", [(255, -1), (100, 100), (-300, -44), (128, 128), (-128, 128)])
    def test_centered_residue(self, w, r):
        assert int(centered_residue(256, w)) == r

    @given(st.integers(min_value=-(2**63) + 1, max_value=2**63 - 1), st.integers(2, 2**20))
    @settings(max_examples=300, deadline=None)
    def test_centered_residue_range(self, w, t):
        r = int(centered_residue(t, w))
        assert (r - w) % t == 0
        assert -t / 2 < r <= t / 2

    @given(st.integers(0, 8208))
    @settings(deadline=None)
    def test_lift_reduces_back(self, x):
        w = int(signed_lift(8209, x))
        assert w % 8209 == x and abs(w) <= 4104


class TestMatrices:
    def test_expand_single_beta1(self):
        ctx = ExtField(2, 2, (1, 1, 1))
        assert expand_to_base(ctx, np.array([[[1, 0]]])).tolist() == [[1, 0]]

    def test_expand_zero(self):
        ctx = ExtField(2, 4)
        assert expand_to_base(ctx, ctx.zeros((3, 2))).shape == (3, 8)

    @pytest.mark.parametrize("seed", range(5))
    def test_expanded_rank_matches_span_enumeration(self, seed):
        ctx = ExtField(2, 4)
        rng = np.random.default_rng(seed)
        M = ctx.random(rng, (3, 2))
        E = expand_to_base(ctx, M)
        assert rank(ctx.base, E) == span_size_log(E, 2)

    @pytest.mark.parametrize("seed", range(5))
    def test_rank_over_f4_matches_enumeration(self, seed):
        ctx = ExtField(2, 2, (1, 1, 1))
        rng = np.random.default_rng(seed)
        M = ctx.random(rng, (int(rng.integers(1, 5)), 2))
        assert rank(ctx.base, expand_to_base(ctx, M)) == span_size_log(expand_to_base(ctx, M), 2)

    def test_rank_small_cases(self):
        F = PrimeField(7)
        assert rank(F, np.eye(4, dtype=np.int64)) == 4
        assert rank(F, np.zeros((3, 5), dtype=np.int64)) == 0
        assert rank(F, np.array([[1, 2], [2, 4]])) == 1
        assert rank(F, np.zeros((0, 3), dtype=np.int64)) == 0

    def test_rank_rejects_rings(self):
        with pytest.raises(ContextError):
            rank(ModRing(12), np.eye(2, dtype=np.int64))
        with pytest.raises(ContextError):
            rank(PolyRing(17, 2), np.zeros((2, 2, 2), dtype=np.int64))

    def test_solve_membership_examples(self):
        F = PrimeField(13)
        x = solve_membership(F, np.eye(3, dtype=np.int64), np.array([0, 1, 0]))
        assert x.tolist() == [0, 1, 0]
        assert solve_membership(F, np.zeros((3, 2), dtype=np.int64), np.array([1, 0, 0])) is None

    def test_solve_membership_reproduces_target(self):
        F = PrimeField(13)
        rng = np.random.default_rng(11)
        M = F.random(rng, (6, 3))
        target = matmul(F, M, np.array([[2], [5], [1]]))[:, 0]
        x = solve_membership(F, M, target)
        assert matmul(F, M, x[:, None])[:, 0].tolist() == target.tolist()

    def test_solve_membership_ext_field(self):
        ctx = ExtField(2, 4)
        rng = np.random.default_rng(2)
        M = ctx.random(rng, (5, 2))
        coeffs = ctx.random(rng, (2, 1))
        target = matmul(ctx, M, coeffs)[:, 0]
        x = solve_membership(ctx, M, target)
        assert np.array_equal(matmul(ctx, M, x[:, None])[:, 0], target)

    def test_inverse_matrix(self):
        F = PrimeField(13)
        rng = np.random.default_rng(4)
        while True:
            M = F.random(rng, (4, 4))
            if rank(F, M) == 4:
                break
        assert matmul(F, M, inverse_matrix(F, M)).tolist() == np.eye(4, dtype=int).tolist()

    def test_inverse_singular(self):
        with pytest.raises(NonUnitError):
            inverse_matrix(PrimeField(7), np.array([[1, 2], [2, 4]]))

    def test_left_kernel(self):
        F = PrimeField(13)
        rng = np.random.default_rng(5)
        M = F.random(rng, (6, 3))
        K = left_kernel(F, M)
        assert K.shape[0] == 6 - rank(F, M)
        assert not np.any(matmul(F, K, M))


class TestContexts:
    def test_prime_check(self):
        with pytest.raises(ContextError):
            PrimeField(12)

    def test_poly_degree_power_of_two(self):
        with pytest.raises(ContextError):
            PolyRing(17, 6)

    def test_reducible_modulus_rejected(self):
        with pytest.raises(ContextError):
            ExtField(2, 2, (1, 0, 1))  # x^2 + 1 = (x + 1)^2

    def test_default_modulus(self):
        assert ExtField(2, 4).modulus_poly == (1, 1, 0, 0, 1)
        assert is_irreducible((1, 1, 0, 0, 1), 2)

    def test_residues_below_modulus(self):
        ctx = ExtField(3, 2)
        x = ctx.element([[5, 7], [-1, 9]])
        assert x.tolist() == [[2, 1], [2, 0]]


class TestGaussian:
    def test_zero_sigma(self):
        rng = np.random.default_rng(0)
        assert all(gaussian_sample(0, rng) == 0 for _ in range(50))

    def test_mean_and_cutoff(self):
        rng = np.random.default_rng(1)
        xs = gaussian_vector(2.0, 10**5, rng)
        assert abs(xs.mean()) <= 0.05
        assert xs.min() >= -12 and xs.max() <= 12
        assert abs(xs.std() - 2.0) < 0.05
