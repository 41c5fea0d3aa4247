import json
import math

import numpy as np
import pytest

from seqbo import (
    CategoricalOverlap,
    InvalidInputError,
    LinearKernel,
    Matern,
    Periodic,
    Product,
    Rbf,
    Scale,
    Sum,
    kernel_eval,
    kernel_from_config,
    kernel_matrix,
)


class TestLeafValues:
    def test_rbf_zero_distance_gives_signal_variance(self):
        k = Rbf(variance=2.5, lengthscale=0.7)
        assert kernel_eval(k, [0.3, 0.4], [0.3, 0.4]) == pytest.approx(2.5)

    def test_rbf_unit_distance(self):
        k = Rbf(variance=1.0, lengthscale=1.0)
        assert kernel_eval(k, [0.0], [1.0]) == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_matern_half_is_exponential(self):
        k = Matern(nu=0.5, variance=1.0, lengthscale=1.0)
        assert kernel_eval(k, [0.0], [1.0]) == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_matern_three_halves_closed_form(self):
        k = Matern(nu=1.5, variance=1.0, lengthscale=0.5)
        r = 0.8 / 0.5
        expected = (1 + math.sqrt(3) * r) * math.exp(-math.sqrt(3) * r)
        assert kernel_eval(k, [0.0], [0.8]) == pytest.approx(expected, abs=1e-12)

    def test_matern_five_halves_closed_form(self):
        k = Matern(nu=2.5, variance=2.0, lengthscale=0.5)
        r = 0.8 / 0.5
        s = math.sqrt(5) * r
        expected = 2.0 * (1 + s + s * s / 3) * math.exp(-s)
        assert kernel_eval(k, [0.0], [0.8]) == pytest.approx(expected, abs=1e-12)

    def test_matern_rejects_other_orders(self):
        with pytest.raises(InvalidInputError):
            Matern(nu=2.0)

    def test_linear_kernel(self):
        k = LinearKernel(bias_variance=0.5)
        assert kernel_eval(k, [1.0, 2.0], [3.0, 4.0]) == pytest.approx(0.5 + 11.0)

    def test_periodic_formula(self):
        k = Periodic(variance=1.5, lengthscale=0.9, period=0.37)
        r = abs(0.2 - 0.65)
        expected = 1.5 * math.exp(-2 * math.sin(math.pi * r / 0.37) ** 2 / 0.9**2)
        assert kernel_eval(k, [0.2], [0.65]) == pytest.approx(expected, abs=1e-12)

    def test_categorical_overlap(self):
        k = CategoricalOverlap(weight=1.3)
        assert kernel_eval(k, [0, 1, 0], [0, 1, 0]) == pytest.approx(1.0)
        assert kernel_eval(k, [0, 1, 0], [1, 0, 0]) == pytest.approx(math.exp(-1.3))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            kernel_eval(Rbf(), [0.0, 1.0], [0.0])

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        x, y = rng.random(3), rng.random(3)
        for k in (Rbf(1.2, 0.4), Matern(1.5), LinearKernel(0.3),
                  Sum(Rbf(), LinearKernel())):
            assert kernel_eval(k, x, y) == pytest.approx(kernel_eval(k, y, x), rel=1e-12)


class TestComposition:
    def test_singleton_matrix(self):
        K = kernel_matrix(Rbf(variance=3.0), np.array([[0.1, 0.2]]))
        assert K.shape == (1, 1)
        assert K[0, 0] == pytest.approx(3.0)

    def test_sum_is_elementwise_sum(self):
        rng = np.random.default_rng(1)
        X = rng.random((4, 2))
        k1, k2 = Rbf(1.0, 0.3), Matern(1.5, 0.5, 0.2)
        np.testing.assert_allclose(kernel_matrix(Sum(k1, k2), X),
                                   kernel_matrix(k1, X) + kernel_matrix(k2, X))

    def test_product_is_elementwise_product(self):
        rng = np.random.default_rng(2)
        X = rng.random((4, 2))
        k1, k2 = Rbf(1.0, 0.3), LinearKernel(0.7)
        np.testing.assert_allclose(kernel_matrix(Product(k1, k2), X),
                                   kernel_matrix(k1, X) * kernel_matrix(k2, X))

    def test_scale(self):
        rng = np.random.default_rng(3)
        X = rng.random((3, 2))
        np.testing.assert_allclose(kernel_matrix(Scale(0.25, Rbf()), X),
                                   0.25 * kernel_matrix(Rbf(), X))

    @pytest.mark.parametrize("kernel", [
        Rbf(1.0, 0.2),
        Matern(2.5, 1.5, 0.3),
        Sum(Rbf(0.5, 0.2), Scale(2.0, LinearKernel(0.1))),
        Product(Rbf(1.0, np.array([0.3, 0.6])), Matern(0.5, 1.0, 0.5)),
        Periodic(1.0, 0.8, 0.4, dims=[0]),
    ], ids=["rbf", "matern", "sum-scale-linear", "product-ard", "periodic"])
    def test_gram_matrices_are_psd(self, kernel):
        rng = np.random.default_rng(4)
        X = rng.random((5, 2)) if kernel.dims is None else rng.random((5, 2))
        K = kernel_matrix(kernel, X)
        np.testing.assert_allclose(K, K.T, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(K)) >= -1e-10

    def test_dims_restrict_leaves(self):
        k = Rbf(1.0, 0.5, dims=[1])
        a, b = np.array([[0.0, 0.3]]), np.array([[9.0, 0.3]])
        assert k(a, b)[0, 0] == pytest.approx(1.0)  # first coordinate ignored

    def test_heterogeneous_product_kernel(self):
        k = Product(Rbf(1.0, 0.5, dims=[0]), CategoricalOverlap(2.0, dims=[1, 2]))
        same_cat = kernel_eval(k, [0.1, 1, 0], [0.1, 1, 0])
        diff_cat = kernel_eval(k, [0.1, 1, 0], [0.1, 0, 1])
        assert same_cat == pytest.approx(1.0)
        assert diff_cat == pytest.approx(math.exp(-2.0))


class TestSerialization:
    @pytest.mark.parametrize("kernel", [
        Rbf(1.5, 0.25, dims=[0, 2]),
        Rbf(1.0, np.array([0.2, 0.4])),
        Matern(1.5, 2.0, 0.3),
        LinearKernel(0.8, dims=[1]),
        Periodic(1.0, 0.5, 0.3, dims=[0]),
        CategoricalOverlap(1.7, dims=[2, 3]),
        Sum(Rbf(), Product(Matern(0.5), Scale(0.5, LinearKernel()))),
    ], ids=["rbf-dims", "rbf-ard", "matern", "linear", "periodic", "cat", "tree"])
    def test_roundtrip_exact(self, kernel):
        cfg = kernel.to_config()
        again = kernel_from_config(json.loads(json.dumps(cfg)))
        assert again.to_config() == cfg

    def test_roundtrip_preserves_values(self):
        kernel = Sum(Rbf(1.234567890123, 0.111213141516),
                     Scale(0.5, Matern(2.5, 0.9, 0.77)))
        again = kernel_from_config(json.loads(json.dumps(kernel.to_config())))
        rng = np.random.default_rng(9)
        X = rng.random((6, 2))
        np.testing.assert_array_equal(kernel_matrix(kernel, X), kernel_matrix(again, X))

    def test_param_flattening_roundtrip(self):
        kernel = Sum(Rbf(1.0, np.array([0.2, 0.4])), Scale(2.0, Matern(1.5, 0.5, 0.3)))
        values = kernel.param_values()
        rebuilt = kernel.with_param_values([v * 2 for v in values])
        assert rebuilt.param_values() == pytest.approx([v * 2 for v in values])
        assert rebuilt.to_config()["children"][0]["kind"] == "rbf"
        assert len(rebuilt.param_bounds()) == len(values)
