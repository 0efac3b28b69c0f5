import numpy as np
import pytest

from imba_ids.linalg import bernoulli_mask, check_matrix, he_init, make_rng, matmul


class TestMakeRng:
    def test_same_seed_same_stream(self):
        a = make_rng(42).standard_normal(100)
        b = make_rng(42).standard_normal(100)
        assert np.array_equal(a, b)

    def test_different_seed_parts_diverge(self):
        a = make_rng(42, 0).standard_normal(100)
        b = make_rng(42, 1).standard_normal(100)
        assert not np.array_equal(a, b)

    def test_multi_part_seeds_are_distinct_streams(self):
        # (seed, 2, epoch) style streams must all differ
        streams = [make_rng(7, 2, ep).permutation(50) for ep in range(4)]
        for i in range(len(streams)):
            for j in range(i + 1, len(streams)):
                assert not np.array_equal(streams[i], streams[j])


class TestMatmul:
    def test_identity(self):
        m = np.arange(12.0).reshape(3, 4)
        assert np.array_equal(matmul(np.eye(3), m), m)

    def test_zero(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        z = np.zeros((2, 1))
        assert np.array_equal(matmul(a, z), z)

    def test_hand_product(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[5.0], [6.0]])
        # [1*5+2*6, 3*5+4*6]
        assert np.array_equal(matmul(a, b), np.array([[17.0], [39.0]]))

    def test_dimension_mismatch_names_shapes(self):
        with pytest.raises(ValueError, match=r"2.*3.*4.*5|\(2, 3\).*\(4, 5\)"):
            matmul(np.zeros((2, 3)), np.zeros((4, 5)))

    def test_associative_within_tolerance(self):
        rng = make_rng(0)
        a, b, c = (rng.standard_normal((6, 6)) for _ in range(3))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        assert np.allclose(left, right, rtol=1e-9, atol=1e-9)


class TestCheckMatrix:
    def test_rejects_non_2d(self):
        with pytest.raises(ValueError, match="vec"):
            check_matrix(np.zeros(3), "vec")

    def test_passes_through_2d(self):
        m = check_matrix([[1, 2]], "m")
        assert m.dtype == np.float64 and m.shape == (1, 2)


class TestBernoulliMask:
    def test_keep_one_is_all_ones(self):
        assert np.all(bernoulli_mask(make_rng(0), 1000, 1.0) == 1.0)

    def test_keep_zero_is_all_zeros(self):
        assert np.all(bernoulli_mask(make_rng(0), 1000, 0.0) == 0.0)

    def test_mean_near_keep_prob(self):
        mask = bernoulli_mask(make_rng(123), 100_000, 0.8)
        assert abs(mask.mean() - 0.8) < 0.01

    def test_values_are_binary(self):
        mask = bernoulli_mask(make_rng(5), 1000, 0.3)
        assert set(np.unique(mask)) <= {0.0, 1.0}

    @pytest.mark.parametrize("bad", [-0.1, 1.1])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            bernoulli_mask(make_rng(0), 10, bad)


class TestHeInit:
    def test_shape_is_fan_out_by_fan_in(self):
        w = he_init(make_rng(0), fan_in=2, fan_out=3)
        assert w.shape == (3, 2)

    def test_sample_std_matches_fan_in_scaling(self):
        # std should be sqrt(2/2) = 1.0 for fan_in=2
        w = he_init(make_rng(1), fan_in=2, fan_out=5000)
        assert abs(w.std() - 1.0) < 0.2
        assert abs(w.mean()) < 0.05

    def test_deterministic_given_seed(self):
        a = he_init(make_rng(9), 4, 4)
        b = he_init(make_rng(9), 4, 4)
        assert np.array_equal(a, b)

    def test_huge_fan_in_stays_finite(self):
        w = he_init(make_rng(2), 10**6, 2)
        assert np.all(np.isfinite(w))
        assert np.all(np.abs(w) < 1e-2)
