import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdmm.linalg import (
    EvaluationPoints,
    IllConditionedError,
    ShapeError,
    as_complex_matrix,
    condition_number,
    frobenius_distance,
    hermitian_gram,
    matmul,
    relative_frobenius_distance,
    solve_vandermonde,
    trace_of_solve,
    vandermonde,
)
from oracles import naive_matmul, random_complex


def roots(n):
    return EvaluationPoints.roots_of_unity(n).points


class TestMatmul:
    def test_identity(self, rng):
        m = random_complex(rng, (2, 2))
        assert np.array_equal(matmul(np.eye(2), m), m)

    def test_zero(self, rng):
        m = random_complex(rng, (3, 3))
        assert np.array_equal(matmul(np.zeros((3, 3)), m), np.zeros((3, 3)))

    def test_against_triple_loop(self, rng):
        a = random_complex(rng, (5, 4))
        b = random_complex(rng, (4, 3))
        # both accumulate in increasing inner index with plain complex ops
        np.testing.assert_array_equal(matmul(a, b), naive_matmul(a, b))

    def test_shape_error_carries_shapes(self):
        with pytest.raises(ShapeError) as info:
            matmul(np.ones((2, 3)), np.ones((2, 3)))
        assert info.value.shapes == ((2, 3), (2, 3))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            as_complex_matrix([[np.nan]])


class TestEvaluationPoints:
    def test_canonical(self):
        pts = EvaluationPoints.roots_of_unity(5)
        assert pts.n == 5
        for i in range(1, 6):
            assert pts[i - 1] == pytest.approx(np.exp(2j * np.pi * i / 5), abs=1e-15)
        assert pts[4] == pytest.approx(1.0)

    def test_rejects_off_circle_and_duplicates(self):
        with pytest.raises(ValueError):
            EvaluationPoints(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            EvaluationPoints(np.array([1.0, 1.0]))

    def test_for_servers(self):
        pts = EvaluationPoints.roots_of_unity(6)
        np.testing.assert_array_equal(pts.for_servers([2, 5]), pts.points[[1, 4]])


class TestVandermonde:
    def test_single(self):
        assert np.array_equal(vandermonde([1], 1), [[1]])

    def test_pm_one(self):
        assert np.array_equal(vandermonde([1, -1], 2), [[1, 1], [1, -1]])

    def test_fourth_roots_scaled_unitary(self):
        v = vandermonde(roots(4), 4)
        np.testing.assert_allclose(v @ v.conj().T, 4 * np.eye(4), atol=1e-12)

    @pytest.mark.parametrize("n", range(2, 65))
    def test_all_roots_orthogonal(self, n):
        v = vandermonde(roots(n), n)
        np.testing.assert_allclose(v @ v.conj().T, n * np.eye(n), rtol=0, atol=1e-11)

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            vandermonde([1, 1j, 1], 3)


class TestSolveVandermonde:
    def test_k1(self, rng):
        m = random_complex(rng, (2, 3))
        np.testing.assert_allclose(solve_vandermonde([1.0], [m])[0], m)

    def test_recovers_coefficients_at_roots(self, rng):
        pts = roots(7)
        coeffs = random_complex(rng, (7, 3, 4))
        rhs = np.stack([sum(coeffs[j] * x**j for j in range(7)) for x in pts])
        got = solve_vandermonde(pts, rhs)
        rel = np.linalg.norm(got - coeffs) / np.linalg.norm(coeffs)
        assert rel <= 1e-10

    def test_residual_all_roots(self, rng):
        pts = roots(9)
        rhs = random_complex(rng, (9, 2, 2))
        coeffs = solve_vandermonde(pts, rhs)
        v = vandermonde(pts, 9)
        back = np.einsum("ij,jab->iab", v, coeffs)
        assert np.linalg.norm(back - rhs) / np.linalg.norm(rhs) <= 1e-12

    @settings(max_examples=30, deadline=None)
    @given(k=st.integers(1, 32), seed=st.integers(0, 2**32 - 1), subset=st.booleans())
    def test_round_trip_property(self, k, seed, subset):
        rng = np.random.default_rng(seed)
        if subset:
            # distinct points drawn from a larger root set
            n = k + int(rng.integers(0, 3))
            pts = roots(n)[np.sort(rng.choice(n, k, replace=False))]
        else:
            pts = roots(k)
        coeffs = random_complex(rng, (k, 2, 2))
        rhs = np.einsum("ij,jab->iab", vandermonde(pts, k), coeffs)
        got = solve_vandermonde(pts, rhs)
        assert np.linalg.norm(got - coeffs) / np.linalg.norm(coeffs) <= 1e-9

    def test_mismatched_lengths(self, rng):
        with pytest.raises(ShapeError):
            solve_vandermonde(roots(3), random_complex(rng, (2, 2, 2)))

    def test_ill_conditioned_reports_condition(self):
        pts = np.array([1.0, 1.0 + 1e-15, 1.0 + 2e-15, 2.0, 3.0])
        with pytest.raises(IllConditionedError) as info:
            solve_vandermonde(pts, np.ones((5, 1, 1)))
        assert info.value.condition > 1e14


class TestConditionNumber:
    def test_identity(self):
        assert condition_number(np.eye(4)) == 1.0

    @pytest.mark.parametrize("n", [3, 8, 21, 33])
    def test_all_roots_is_one(self, n):
        assert condition_number(vandermonde(roots(n), n)) == pytest.approx(1.0, abs=1e-10)

    def test_straggler_subset_matches_svd(self):
        pts = roots(9)[:7]
        v = vandermonde(pts, 7)
        sv = np.linalg.svd(v, compute_uv=False)
        got = condition_number(v)
        assert got > 1.0
        assert got == pytest.approx(sv.max() / sv.min(), rel=1e-12)

    def test_scaled_unitary(self, rng):
        q, _ = np.linalg.qr(random_complex(rng, (6, 6)))
        assert condition_number(3.5 * q) == pytest.approx(1.0, abs=1e-9)

    def test_singular_is_inf(self):
        assert condition_number(np.zeros((3, 3))) == float("inf")

    def test_non_square(self):
        with pytest.raises(ShapeError):
            condition_number(np.ones((2, 3)))


class TestFrobenius:
    def test_self(self, rng):
        m = random_complex(rng, (3, 3))
        assert frobenius_distance(m, m) == 0.0

    def test_345(self):
        assert frobenius_distance([[3.0, 4.0]], [[0.0, 0.0]]) == 5.0

    def test_against_sum_of_squares(self, rng):
        a = random_complex(rng, (4, 5))
        b = random_complex(rng, (4, 5))
        ref = sum(abs(complex(x) - complex(y)) ** 2 for x, y in zip(a.ravel(), b.ravel())) ** 0.5
        assert frobenius_distance(a, b) == pytest.approx(ref, rel=1e-14)
        assert relative_frobenius_distance(a, b) == pytest.approx(ref / np.linalg.norm(b), rel=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            frobenius_distance(np.ones((2, 2)), np.ones((2, 3)))


class TestHermitianGram:
    def test_identity(self):
        np.testing.assert_array_equal(hermitian_gram(np.eye(3)), np.eye(3))

    def test_row(self):
        np.testing.assert_allclose(hermitian_gram([[1, 1j]]), [[2]])

    @settings(max_examples=25, deadline=None)
    @given(rows=st.integers(1, 6), cols=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
    def test_hermitian_psd(self, rows, cols, seed):
        m = random_complex(np.random.default_rng(seed), (rows, cols))
        g = hermitian_gram(m)
        np.testing.assert_allclose(g, g.conj().T, atol=1e-12)
        ev = np.linalg.eigvalsh(g)
        assert ev.min() >= -1e-10 * max(ev.max(), 1.0)


class TestTraceOfSolve:
    def test_identity(self):
        assert trace_of_solve(np.eye(5), np.eye(5)) == 5.0

    def test_scaled(self):
        assert trace_of_solve(2 * np.eye(3), np.eye(3)) == pytest.approx(1.5)

    def test_random_pd_against_explicit_inverse(self, rng):
        g = hermitian_gram(random_complex(rng, (4, 6))) + 0.1 * np.eye(4)
        s = hermitian_gram(random_complex(rng, (4, 2)))
        ref = np.trace(np.linalg.inv(g) @ s).real
        assert trace_of_solve(g, s) == pytest.approx(ref, rel=1e-9)

    def test_singular(self):
        with pytest.raises(np.linalg.LinAlgError):
            trace_of_solve(np.zeros((2, 2)), np.eye(2))
