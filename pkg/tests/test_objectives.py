import numpy as np
import pytest

from rdsa.exceptions import DomainError
from rdsa.objectives import (
    FourthOrder,
    MeasurementOracle,
    NoiseModel,
    Quadratic,
    Rastrigin,
    eval_fourth_order,
    eval_quadratic,
    eval_rastrigin,
    make_objective,
    noisy_measure,
    quadratic_matrix,
    quadratic_optimum,
)


def fd_gradient(f, x, h=1e-5):
    E = np.eye(x.size) * h
    return np.array([(f(x + e) - f(x - e)) / (2 * h) for e in E])


def fd_hessian(grad, x, h=1e-5):
    E = np.eye(x.size) * h
    H = np.array([(grad(x + e) - grad(x - e)) / (2 * h) for e in E])
    return 0.5 * (H + H.T)


class TestQuadratic:
    def test_matrix(self):
        np.testing.assert_array_equal(quadratic_matrix(2), [[0.5, 0.5], [0.0, 0.5]])
        assert np.all(np.tril(quadratic_matrix(6), -1) == 0)

    def test_values(self):
        assert eval_quadratic(np.zeros(4)) == 0.0
        assert eval_quadratic([1.0, 1.0]) == pytest.approx(3.5, abs=1e-14)
        assert eval_quadratic(np.full(10, -0.9091)) == pytest.approx(-4.55, abs=0.01)

    def test_optimum_n10(self):
        x_star, f_star = quadratic_optimum(10)
        np.testing.assert_allclose(x_star, -0.9091, atol=1e-4)
        assert f_star == pytest.approx(-4.55, abs=0.01)

    def test_optimum_n1(self):
        x_star, f_star = quadratic_optimum(1)
        np.testing.assert_allclose(x_star, [-0.5])
        assert f_star == pytest.approx(-0.25)

    @pytest.mark.parametrize("N", [1, 2, 5, 10, 17])
    def test_optimum_closed_form(self, N):
        # A + A^T = (I + ones ones^T) / N, so x* = -N/(N+1) ones
        np.testing.assert_allclose(Quadratic(N).x_star, -N / (N + 1), rtol=1e-12)

    @pytest.mark.parametrize("N", [5, 10])
    def test_strong_convexity(self, N):
        mu = Quadratic(N).strong_convexity
        assert mu > 0
        assert mu == pytest.approx(1 / N, rel=1e-10)

    def test_read_only(self):
        q = Quadratic(3)
        with pytest.raises(ValueError):
            q.A[0, 0] = 5.0

    def test_batch_evaluation(self):
        q = Quadratic(3)
        X = np.random.default_rng(0).normal(size=(4, 3))
        np.testing.assert_allclose(q.value(X), [q.value(x) for x in X])


class TestFourthOrder:
    def test_values(self):
        assert eval_fourth_order(np.zeros(3)) == 0.0
        assert eval_fourth_order([1.0, 1.0]) == pytest.approx(1.373125, abs=1e-12)

    def test_gradient_at_zero(self):
        np.testing.assert_array_equal(FourthOrder(4).gradient(np.zeros(4)), 0.0)


class TestRastrigin:
    def test_values(self):
        assert eval_rastrigin(np.zeros(5)) == pytest.approx(1.0)
        assert eval_rastrigin([1.0, 1.0]) == pytest.approx(3.0)
        assert eval_rastrigin([0.5, 0.0]) == pytest.approx(21.25)

    def test_start_point(self):
        np.testing.assert_array_equal(Rastrigin(3).x0, [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(Quadratic(3).x0, np.ones(3))
        np.testing.assert_array_equal(FourthOrder(3).x0, np.ones(3))


@pytest.mark.parametrize("cls", [Quadratic, FourthOrder, Rastrigin])
class TestDerivatives:
    def test_gradient_matches_finite_differences(self, cls):
        obj = cls(4)
        rng = np.random.default_rng(3)
        for x in rng.uniform(-2, 2, size=(20, 4)):
            g = obj.gradient(x)
            fd = fd_gradient(obj.value, x)
            assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(g))

    def test_hessian_matches_finite_differences(self, cls):
        obj = cls(4)
        rng = np.random.default_rng(4)
        for x in rng.uniform(-2, 2, size=(20, 4)):
            H = obj.hessian(x)
            fd = fd_hessian(obj.gradient, x)
            assert np.linalg.norm(H - fd) <= 1e-5 * max(1.0, np.linalg.norm(H))

    def test_stationary_at_optimum(self, cls):
        obj = cls(6)
        assert np.linalg.norm(obj.gradient(obj.x_star)) < 1e-8
        assert obj.value(obj.x_star) == pytest.approx(obj.f_star, abs=1e-8)


def test_make_objective():
    assert isinstance(make_objective("fourth", 3), FourthOrder)
    with pytest.raises(DomainError):
        make_objective("sphere", 3)
    with pytest.raises(DomainError):
        make_objective("quadratic", 0)


class TestNoise:
    def test_zero_sigma_is_exact(self):
        q = Quadratic(3)
        x = np.array([0.3, -1.0, 2.0])
        noise = NoiseModel(0.0, 0)
        assert noisy_measure(q, noise, x) == q.value(x)
        assert noise.calls == 1

    def test_mean_and_variance(self):
        q = Quadratic(3)
        x = np.array([0.5, -1.0, 1.5])
        sigma = 0.1
        oracle = MeasurementOracle(q, NoiseModel(sigma, 5))
        y = oracle.batch(np.broadcast_to(x, (10**5, 3)))
        var = sigma**2 * (x @ x + 1)
        assert y.var() == pytest.approx(var, rel=0.05)
        assert abs(y.mean() - q.value(x)) < 3 * np.sqrt(var / y.size)
        assert oracle.calls == oracle.noise.calls == 10**5

    def test_matches_explicit_linear_form(self):
        # [x, 1] . xi with xi ~ N(0, sigma^2 I) has the same law; compare quantiles
        x = np.array([1.0, 2.0])
        rng = np.random.default_rng(8)
        xi = rng.normal(0, 0.2, size=(10**5, 3))
        explicit = xi @ np.append(x, 1.0)
        sampled = NoiseModel(0.2, 9).sample(np.broadcast_to(x, (10**5, 2)))
        qs = [0.05, 0.25, 0.5, 0.75, 0.95]
        np.testing.assert_allclose(np.quantile(sampled, qs), np.quantile(explicit, qs), atol=0.02)

    def test_counter_per_call(self):
        oracle = MeasurementOracle(Quadratic(2), NoiseModel(0.1, 0))
        for _ in range(7):
            oracle([1.0, 1.0])
        oracle.batch(np.zeros((5, 2)))
        assert oracle.calls == 12 and oracle.noise.calls == 12

    def test_plain_callable(self):
        oracle = MeasurementOracle(lambda x: float(np.sum(x)))
        assert oracle([1.0, 2.0]) == 3.0
        np.testing.assert_array_equal(oracle.batch(np.ones((2, 3))), [3.0, 3.0])

    @pytest.mark.parametrize("sigma", [-0.1, float("inf")])
    def test_invalid_sigma(self, sigma):
        with pytest.raises(DomainError):
            NoiseModel(sigma)
