import numpy as np
import pytest

from rankvandal.adversary.mgda import (
    TASKS,
    MgdaWeights,
    TaskGradients,
    mgda_weights,
    min_norm_weights,
)
from rankvandal.errors import ContractError, NumericError

from conftest import grid_min_blend_norm


def _blend_norm(grads, w):
    G = np.stack([g.ravel() for g in grads])
    return float(w @ (G @ G.T) @ w)


class TestAnalyticCases:
    def test_symmetric_orthogonal(self):
        w = min_norm_weights([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert w == pytest.approx([0.5, 0.5], abs=1e-9)

    def test_unequal_magnitudes(self):
        # minimize ||w(2,0) + (1-w)(0,1)||^2 = 4w^2 + (1-w)^2 -> w = 0.2
        w = min_norm_weights([np.array([2.0, 0.0]), np.array([0.0, 1.0])])
        assert w == pytest.approx([0.2, 0.8], abs=1e-9)

    def test_identical_gradients_uniform(self):
        g = np.array([1.0, 2.0, 3.0])
        w = min_norm_weights([g, g.copy()])
        assert w == pytest.approx([0.5, 0.5], abs=1e-9)
        w3 = min_norm_weights([g, g.copy(), g.copy()])
        assert w3 == pytest.approx([1 / 3] * 3, abs=1e-9)

    def test_opposed_gradients_reach_zero(self):
        w = min_norm_weights([np.array([1.0, 0.0]), np.array([-1.0, 0.0])])
        assert _blend_norm([np.array([1.0, 0.0]), np.array([-1.0, 0.0])], w) <= 1e-12

    def test_dominant_vertex_optimum(self):
        # g2 tiny and aligned with g1: the optimum is the vertex w = (0, 1);
        # exact [0,1] clipping must reach it
        g1, g2 = np.array([10.0, 0.0]), np.array([0.1, 0.0])
        w = min_norm_weights([g1, g2])
        assert w == pytest.approx([0.0, 1.0], abs=1e-9)


class TestSimplexInvariants:
    def test_simplex_membership_and_vertex_dominance(self, np_rng):
        for _ in range(100):
            n = int(np_rng.integers(2, 5))
            dim = int(np_rng.integers(2, 51))
            grads = [np_rng.normal(size=dim) * np_rng.uniform(0.1, 5) for _ in range(n)]
            w = min_norm_weights(grads)
            assert np.all(w >= -1e-12)
            assert float(w.sum()) == pytest.approx(1.0, abs=1e-9)
            f = _blend_norm(grads, w)
            for i in range(n):
                e = np.zeros(n)
                e[i] = 1.0
                assert f <= _blend_norm(grads, e) + 1e-9

    def test_deterministic(self, np_rng):
        grads = [np_rng.normal(size=20) for _ in range(3)]
        w1 = min_norm_weights(grads)
        w2 = min_norm_weights([g.copy() for g in grads])
        assert np.array_equal(w1, w2)


class TestGridOracle:
    def test_matches_dense_grid_search(self, np_rng):
        # trimmed-size version of the acceptance run
        for _ in range(60):
            n = int(np_rng.integers(2, 5))
            dim = int(np_rng.integers(2, 51))
            grads = [np_rng.normal(size=dim) * np_rng.uniform(0.1, 5) for _ in range(n)]
            w = min_norm_weights(grads)
            f_fw = _blend_norm(grads, w)
            step = 1e-3 if n == 2 else 2e-2
            f_grid = grid_min_blend_norm(grads, step)
            assert f_fw <= f_grid + 1e-4


class TestContracts:
    def test_too_few_tasks(self):
        with pytest.raises(ContractError):
            min_norm_weights([np.ones(3)])

    def test_too_many_tasks(self):
        with pytest.raises(ContractError):
            min_norm_weights([np.ones(3)] * 5)

    def test_nonfinite_rejected(self):
        with pytest.raises(NumericError):
            min_norm_weights([np.array([1.0, np.nan]), np.ones(2)])
        with pytest.raises(NumericError):
            min_norm_weights([np.array([np.inf, 0.0]), np.ones(2)])

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            min_norm_weights([np.ones(3), np.ones(4)])

    def test_task_wrapper(self):
        losses = {t: 1.0 for t in TASKS}
        grads = {
            "rank": np.array([2.0, 0.0, 0.0, 0.0]),
            "detect": np.array([0.0, 1.0, 0.0, 0.0]),
            "topic": np.array([0.0, 0.0, 1.0, 0.0]),
            "sem": np.array([0.0, 0.0, 0.0, 1.0]),
        }
        w = mgda_weights(TaskGradients(losses, grads))
        assert isinstance(w, MgdaWeights)
        arr = w.as_array()
        assert float(arr.sum()) == pytest.approx(1.0, abs=1e-9)
        # the larger gradient gets the smaller weight
        assert w.w_rank < w.w_detect

    def test_task_wrapper_rejects_missing_task(self):
        losses = {t: 0.0 for t in TASKS[:-1]}
        grads = {t: np.ones(2) for t in TASKS[:-1]}
        with pytest.raises(ContractError):
            TaskGradients(losses, grads)
