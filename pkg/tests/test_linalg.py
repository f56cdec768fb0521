import numpy as np
import pytest

from lrse import ConditioningError
from lrse.linalg import (
    DEFAULT_COND_MAX,
    INVERT_COND_LIMIT,
    invert,
    mat_vec_T,
    one_norm_cond,
    random_invertible,
    scaled_cond_max,
)


def naive_transpose_product(m, v):
    """Triple-loop oracle for M^T v."""
    d = m.shape[0]
    out = np.zeros(m.shape[1])
    for j in range(m.shape[1]):
        acc = 0.0
        for i in range(d):
            acc += m[i, j] * v[i]
        out[j] = acc
    return out


class TestRandomInvertible:
    def test_1x1_nonzero(self):
        m = random_invertible(1, seed=0)
        assert m.shape == (1, 1)
        assert m[0, 0] != 0.0

    def test_102_inverse_residual(self):
        m = random_invertible(102, seed=42, cond_max=1e6)
        residual = np.max(np.abs(m @ invert(m) - np.eye(102)))
        assert residual <= 1e-8

    def test_deterministic(self):
        a = random_invertible(102, seed=42, cond_max=1e6)
        b = random_invertible(102, seed=42, cond_max=1e6)
        assert np.array_equal(a, b)

    def test_seeds_differ(self):
        assert not np.array_equal(random_invertible(8, seed=1), random_invertible(8, seed=2))

    def test_condition_bound_respected(self):
        for seed in range(5):
            m = random_invertible(20, seed=seed, cond_max=1e4)
            assert one_norm_cond(m) <= 1e4

    def test_unreachable_bound_raises(self):
        with pytest.raises(ConditioningError, match="after 64 draws"):
            random_invertible(20, seed=0, cond_max=1.01)

    @pytest.mark.parametrize("d,cond_max", [(0, 10.0), (3, 1.0), (3, 0.5)])
    def test_preconditions(self, d, cond_max):
        with pytest.raises(ValueError):
            random_invertible(d, seed=0, cond_max=cond_max)


class TestInvert:
    def test_identity(self):
        assert np.allclose(invert(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        got = invert(np.array([[2.0, 0.0], [0.0, 4.0]]))
        assert np.allclose(got, [[0.5, 0.0], [0.0, 0.25]])

    def test_roundtrip_102(self):
        m = random_invertible(102, seed=7)
        assert np.max(np.abs(m @ invert(m) - np.eye(102))) <= 1e-8

    def test_singular_raises(self):
        with pytest.raises(ConditioningError, match="singular"):
            invert(np.zeros((3, 3)))

    def test_near_singular_raises(self):
        m = np.diag([1.0, 1e-15, 1.0])
        assert one_norm_cond(m) > INVERT_COND_LIMIT
        with pytest.raises(ConditioningError, match="exceeds"):
            invert(m)

    def test_non_square_raises(self):
        with pytest.raises(ValueError):
            invert(np.ones((2, 3)))


class TestMatVecT:
    def test_identity_passthrough(self):
        v = np.array([1.0, -2.0, 3.5])
        assert np.array_equal(mat_vec_T(np.eye(3), v), v)

    def test_2x2_arithmetic(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(mat_vec_T(m, np.array([1.0, 1.0])), [4.0, 6.0])

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            m = rng.standard_normal((6, 6))
            v = rng.standard_normal(6)
            assert np.allclose(mat_vec_T(m, v), naive_transpose_product(m, v), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mat_vec_T(np.eye(3), np.ones(4))


class TestInnerProductPreservation:
    def test_transpose_inverse_pairing(self):
        # (M^T a) . (M^-1 b) == a . b, the algebra the whole scheme rests on
        rng = np.random.default_rng(11)
        for d in (2, 6, 30):
            for _ in range(25):
                m = random_invertible(d, seed=int(rng.integers(0, 2**31)))
                m_inv = invert(m)
                a = rng.standard_normal(d)
                b = rng.standard_normal(d)
                got = float(mat_vec_T(m, a) @ (m_inv @ b))
                want = float(a @ b)
                assert abs(got - want) <= 1e-8 * (1 + abs(want) + np.linalg.norm(a) * np.linalg.norm(b))


def test_scaled_cond_max_monotone():
    assert scaled_cond_max(102) == DEFAULT_COND_MAX
    assert scaled_cond_max(4002) > scaled_cond_max(2002) > DEFAULT_COND_MAX
