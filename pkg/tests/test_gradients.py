import numpy as np
import pytest

from rdsa.exceptions import DomainError
from rdsa.gradients import (
    grad_kw_dp,
    grad_lex_dp,
    grad_perm_dp,
    grad_rdsa_random,
    grad_spsa,
    inner_deltas,
)
from rdsa.objectives import FourthOrder, MeasurementOracle, NoiseModel, Quadratic
from rdsa.perturb import PermSequence, RandomDirectionDist

X11 = np.array([1.0, 1.0])
EXPECTED = np.array([2.5, 2.5])

DETERMINISTIC = [grad_lex_dp, grad_perm_dp, grad_kw_dp]


def clean(obj):
    return MeasurementOracle(obj)


def constant_oracle():
    return MeasurementOracle(lambda X: np.full(np.asarray(X).shape[0], 7.0), vectorized=True)


@pytest.mark.parametrize("estimator", DETERMINISTIC)
class TestDeterministic:
    @pytest.mark.parametrize("delta", [1e-3, 0.5, 3.0])
    def test_quadratic_example(self, estimator, delta):
        g = estimator(clean(Quadratic(2)), X11, delta)
        np.testing.assert_allclose(g.vector, EXPECTED, rtol=1e-12)

    def test_constant(self, estimator):
        np.testing.assert_array_equal(estimator(constant_oracle(), X11, 0.3).vector, 0.0)

    @pytest.mark.parametrize("N", [2, 5, 8])
    def test_quadratic_exactness(self, estimator, N):
        q = Quadratic(N)
        x = np.random.default_rng(N).uniform(-2, 2, N)
        g = estimator(clean(q), x, lambda k: 1.9 / k**0.101, n=3)
        truth = q.gradient(x)
        assert np.linalg.norm(g.vector - truth) <= 1e-10 * np.linalg.norm(truth)

    def test_measurement_count(self, estimator):
        oracle = clean(Quadratic(3))
        g = estimator(oracle, np.zeros(3), 0.1)
        expected = 2 * 27 if estimator is grad_lex_dp else 6
        assert g.measurements_used == oracle.calls == expected

    def test_nonpositive_delta(self, estimator):
        with pytest.raises(DomainError):
            estimator(clean(Quadratic(2)), X11, 0.0)
        with pytest.raises(DomainError):
            estimator(clean(Quadratic(2)), X11, lambda k: -1.0)


@pytest.mark.parametrize("estimator", [grad_lex_dp, grad_perm_dp, grad_kw_dp])
def test_bias_is_second_order_in_delta(estimator):
    f = FourthOrder(2)
    truth = f.gradient(X11)
    bias = [np.linalg.norm(estimator(clean(f), X11, d).vector - truth) for d in (0.2, 0.1)]
    assert bias[0] / bias[1] == pytest.approx(4.0, rel=0.2)


def test_sum_of_squares_at_origin():
    oracle = MeasurementOracle(lambda X: np.sum(np.asarray(X) ** 2, axis=-1), vectorized=True)
    for delta in (0.01, 1.0, 5.0):
        np.testing.assert_array_equal(grad_kw_dp(oracle, np.zeros(3), delta).vector, 0.0)


def test_perm_order_does_not_matter_on_quadratic():
    q = Quadratic(4)
    x = np.array([0.1, -0.4, 1.2, 0.0])
    g = grad_perm_dp(clean(q), x, 0.7, seq=PermSequence(4, (2, 0, 3, 1)))
    np.testing.assert_allclose(g.vector, q.gradient(x), rtol=1e-12)


def test_perm_dimension_mismatch():
    with pytest.raises(DomainError):
        grad_perm_dp(clean(Quadratic(2)), X11, 0.1, seq=PermSequence(3))


def test_inner_deltas_use_global_index():
    seen = inner_deltas(lambda k: float(k), n=3, P=4)
    np.testing.assert_array_equal(seen, [9.0, 10.0, 11.0, 12.0])
    with pytest.raises(DomainError):
        inner_deltas(0.1, n=0, P=2)


def test_lex_uses_per_step_delta():
    calls = []

    def delta_at(k):
        calls.append(k)
        return 0.1

    g = grad_lex_dp(clean(Quadratic(2)), X11, delta_at, n=2)
    assert calls == list(range(10, 19))
    assert g.delta_used == 0.1


def test_perm_unbiased_under_noise():
    q = Quadratic(2)
    oracle = MeasurementOracle(q, NoiseModel(0.001, 1))
    G = np.array([grad_perm_dp(oracle, X11, 0.1).vector for _ in range(10**4)])
    se = G.std(axis=0, ddof=1) / np.sqrt(len(G))
    assert np.all(np.abs(G.mean(axis=0) - EXPECTED) < 3 * se)


def _average_random(make, draws=10**5):
    G = np.array([make().vector for _ in range(draws)])
    return G.mean(axis=0), G.std(axis=0, ddof=1) / np.sqrt(draws)


class TestRandom:
    def test_spsa_constant(self):
        assert np.all(grad_spsa(constant_oracle(), X11, 0.2, 0).vector == 0)

    def test_spsa_unbiased(self):
        rng = np.random.default_rng(0)
        oracle = clean(Quadratic(2))
        mean, se = _average_random(lambda: grad_spsa(oracle, X11, 0.5, rng))
        assert np.all(np.abs(mean - EXPECTED) < 3 * se)

    def test_spsa_linear_expansion(self):
        b = np.array([1.0, -2.0, 0.5])
        oracle = MeasurementOracle(lambda X: np.asarray(X) @ b, vectorized=True)
        rng = np.random.default_rng(5)
        g = grad_spsa(oracle, np.zeros(3), 0.3, rng)
        d = np.random.default_rng(5).random(3) < 0.5
        d = np.where(d, -1.0, 1.0)
        expected = np.array([b[i] + sum(b[j] * d[j] / d[i] for j in range(3) if j != i) for i in range(3)])
        np.testing.assert_allclose(g.vector, expected)
        assert g.measurements_used == 2

    @pytest.mark.parametrize(
        "dist", [RandomDirectionDist.asym_bernoulli(1e-4), RandomDirectionDist.uniform(1.0)]
    )
    def test_rdsa_unbiased(self, dist):
        rng = np.random.default_rng(1)
        oracle = clean(Quadratic(2))
        mean, se = _average_random(lambda: grad_rdsa_random(oracle, X11, 0.5, dist, rng))
        assert np.all(np.abs(mean - EXPECTED) < 3 * se)

    def test_rdsa_constant(self):
        dist = RandomDirectionDist.uniform(1.0)
        assert np.all(grad_rdsa_random(constant_oracle(), X11, 0.2, dist, 0).vector == 0)

    def test_rdsa_rejects_rademacher(self):
        with pytest.raises(DomainError):
            grad_rdsa_random(clean(Quadratic(2)), X11, 0.1, RandomDirectionDist.rademacher(), 0)

    def test_reproducible(self):
        oracle = clean(Quadratic(3))
        a = grad_spsa(oracle, np.ones(3), 0.1, 9).vector
        b = grad_spsa(oracle, np.ones(3), 0.1, 9).vector
        np.testing.assert_array_equal(a, b)
