import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core.cpd import (
    CPDWeights,
    equilibrate,
    evaluate,
    factor_grams,
    frob_norm_sq,
    init_random,
    inner_with_rank1,
    reconstruct_full,
)
from src.core.errors import CapacityError, InvalidParameterError, ShapeMismatchError

from conftest import dense_outer


def _random_weights(rng, m_hat, dims, rank):
    return CPDWeights(tuple(rng.standard_normal((m_hat, rank)) for _ in range(dims)))


def _dense_by_loops(w: CPDWeights) -> np.ndarray:
    T = np.zeros((w.m_hat,) * w.dims)
    for index in np.ndindex(*T.shape):
        T[index] = sum(np.prod([w.factors[d][i, r] for d, i in enumerate(index)]) for r in range(w.rank))
    return T


class TestInitRandom:
    def test_unit_frobenius_norms(self):
        w = init_random(5, 3, 4, seed=0)
        for factor in w.factors:
            assert np.linalg.norm(factor) == pytest.approx(1.0, abs=1e-12)

    def test_seeded(self):
        a, b = init_random(5, 3, 4, seed=7), init_random(5, 3, 4, seed=7)
        for fa, fb in zip(a.factors, b.factors):
            np.testing.assert_array_equal(fa, fb)
        assert not np.array_equal(a.factors[0], init_random(5, 3, 4, seed=8).factors[0])

    @pytest.mark.parametrize("m_hat, dims, rank", [(0, 2, 2), (3, 0, 2), (3, 2, 0)])
    def test_rejects_empty_shapes(self, m_hat, dims, rank):
        with pytest.raises(InvalidParameterError):
            init_random(m_hat, dims, rank, seed=0)


class TestWeights:
    def test_factors_are_read_only(self):
        w = init_random(3, 2, 2, seed=0)
        with pytest.raises(ValueError):
            w.factors[0][0, 0] = 1.0

    def test_mismatched_factor_shapes(self):
        with pytest.raises(ShapeMismatchError):
            CPDWeights((np.ones((3, 2)), np.ones((3, 1))))

    def test_with_factor_returns_new_weights(self):
        w = init_random(3, 2, 2, seed=0)
        w2 = w.with_factor(1, np.zeros((3, 2)))
        assert np.all(w2.factors[1] == 0)
        assert not np.all(w.factors[1] == 0)


class TestReconstruct:
    def test_rank_one_matrix(self):
        w = CPDWeights((np.array([[1.0], [2.0]]), np.array([[3.0], [4.0]])))
        np.testing.assert_array_equal(reconstruct_full(w), [[3.0, 4.0], [6.0, 8.0]])

    def test_zero_factor_gives_zero_tensor(self, rng):
        w = _random_weights(rng, 3, 3, 2).with_factor(2, np.zeros((3, 2)))
        assert np.all(reconstruct_full(w) == 0.0)

    def test_matches_loop_definition(self, rng):
        w = _random_weights(rng, 3, 3, 2)
        np.testing.assert_allclose(reconstruct_full(w), _dense_by_loops(w), rtol=1e-12, atol=1e-14)

    def test_scaling_between_factors_cancels(self, rng):
        w = _random_weights(rng, 4, 3, 3)
        scaled = w.with_factor(0, w.factors[0] * 2.5).with_factor(1, w.factors[1] / 2.5)
        np.testing.assert_allclose(reconstruct_full(scaled), reconstruct_full(w), rtol=1e-12, atol=1e-14)

    def test_capacity_guard(self):
        w = init_random(10, 7, 1, seed=0)
        with pytest.raises(CapacityError) as info:
            reconstruct_full(w)
        assert info.value.requested == 10 ** 7


class TestInnerWithRankOne:
    def test_selects_one_entry(self):
        w = CPDWeights((np.array([[1.0], [2.0]]), np.array([[3.0], [4.0]])))
        assert inner_with_rank1(w, [np.array([1.0, 0.0]), np.array([0.0, 1.0])]) == 4.0

    def test_zero_vector(self, rng):
        w = _random_weights(rng, 3, 3, 2)
        z = [rng.standard_normal(3), np.zeros(3), rng.standard_normal(3)]
        assert inner_with_rank1(w, z) == 0.0

    def test_matches_dense_contraction(self, rng):
        w = _random_weights(rng, 3, 4, 2)
        z = [rng.standard_normal(3) for _ in range(4)]
        expected = float(np.sum(reconstruct_full(w) * dense_outer(z)))
        assert inner_with_rank1(w, z) == pytest.approx(expected, rel=1e-12, abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 5), st.integers(1, 4), st.integers(0, 10_000))
    def test_dense_equivalence_property(self, dims, m_hat, rank, seed):
        rng = np.random.default_rng(seed)
        w = _random_weights(rng, m_hat, dims, rank)
        z = [rng.standard_normal(m_hat) for _ in range(dims)]
        expected = float(np.sum(reconstruct_full(w) * dense_outer(z)))
        assert inner_with_rank1(w, z) == pytest.approx(expected, rel=1e-10, abs=1e-12)

    def test_wrong_vector_count(self, rng):
        w = _random_weights(rng, 3, 2, 2)
        with pytest.raises(ShapeMismatchError):
            inner_with_rank1(w, [np.ones(3)])

    def test_evaluate_is_batched_inner(self, rng):
        w = _random_weights(rng, 4, 3, 2)
        mats = [rng.standard_normal((6, 4)) for _ in range(3)]
        expected = [inner_with_rank1(w, [m[n] for m in mats]) for n in range(6)]
        np.testing.assert_allclose(evaluate(w, mats), expected, rtol=1e-12, atol=1e-14)


class TestGramsAndNorm:
    def test_all_ones_gram(self):
        w = CPDWeights((np.ones((4, 3)),))
        np.testing.assert_array_equal(factor_grams(w)[0], 4.0 * np.ones((3, 3)))

    def test_orthonormal_columns_give_identity(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((6, 3)))
        np.testing.assert_allclose(factor_grams(CPDWeights((q, q)))[1], np.eye(3), atol=1e-12)

    def test_random_gram(self, rng):
        w = _random_weights(rng, 5, 2, 3)
        np.testing.assert_allclose(factor_grams(w)[0], w.factors[0].T @ w.factors[0], rtol=1e-14)

    def test_rank_one_norm(self):
        w = CPDWeights((np.array([[1.0], [2.0]]), np.array([[3.0], [4.0]])))
        assert frob_norm_sq(w) == pytest.approx(125.0, rel=1e-14)

    def test_zero_norm(self):
        assert frob_norm_sq(CPDWeights((np.zeros((3, 2)), np.ones((3, 2))))) == 0.0

    def test_norm_matches_dense(self, rng):
        w = _random_weights(rng, 4, 3, 3)
        assert frob_norm_sq(w) == pytest.approx(float(np.sum(reconstruct_full(w) ** 2)), rel=1e-10)


class TestEquilibrate:
    def test_tensor_unchanged_and_norms_balanced(self, rng):
        w = _random_weights(rng, 4, 3, 2)
        w = w.with_factor(0, w.factors[0] * 100.0)
        balanced = equilibrate(w)
        np.testing.assert_allclose(reconstruct_full(balanced), reconstruct_full(w), rtol=1e-10, atol=1e-12)
        norms = np.stack([np.linalg.norm(f, axis=0) for f in balanced.factors])
        np.testing.assert_allclose(norms, np.broadcast_to(norms[0], norms.shape), rtol=1e-10)

    def test_zero_column_left_alone(self):
        w = CPDWeights((np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[2.0, 1.0], [0.0, 1.0]])))
        balanced = equilibrate(w)
        np.testing.assert_array_equal(balanced.factors[1][:, 1], w.factors[1][:, 1])
        np.testing.assert_allclose(reconstruct_full(balanced), reconstruct_full(w))
