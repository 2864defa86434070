import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afgen.acquisitions import EI
from afgen.bo import Objective, RunConfig, run_bo
from afgen.meta import MetaConfig, meta_objective, meta_optimize, project_weights
from afgen.policies import PolicySpec


def quadratic_objective():
    return Objective(lambda x01: float((x01[0] - 0.3) ** 2), np.array([[0.0, 1.0]]), 1, 0.0)


def small_meta_config(**kw):
    inner = RunConfig(n_iters=4, n_init=3, grid_size=25, gp_restarts=2)
    defaults = dict(outer_iters=1, outer_init=3, inner_reps=1, inner_config=inner, seed=0)
    defaults.update(kw)
    return MetaConfig(**defaults)


class TestProjectWeights:
    def test_already_normalized(self):
        np.testing.assert_allclose(
            project_weights(np.array([0.2, 0.2, 0.6])), [0.2, 0.2, 0.6]
        )

    def test_all_zero_maps_to_uniform(self):
        np.testing.assert_allclose(project_weights(np.zeros(3)), [1 / 3] * 3)

    def test_uniform_scaling(self):
        np.testing.assert_allclose(
            project_weights(np.array([0.2, 0.2, 0.2])), [1 / 3] * 3
        )

    @given(
        st.lists(st.floats(1e-6, 1), min_size=2, max_size=5),
        st.floats(1e-3, 1e3),
    )
    @settings(max_examples=80, deadline=None)
    def test_scale_invariance_and_simplex(self, raw, c):
        raw = np.array(raw)
        w = project_weights(raw)
        assert np.all(w >= 0)
        assert w.sum() == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(project_weights(c * raw), w, atol=1e-12)


class TestMetaObjective:
    def test_deterministic_given_rng_state(self):
        obj = quadratic_objective()
        cfg = small_meta_config()
        v1 = meta_objective(np.array([0.3, 0.3, 0.4]), obj, cfg, np.random.default_rng(5))
        v2 = meta_objective(np.array([0.3, 0.3, 0.4]), obj, cfg, np.random.default_rng(5))
        assert v1 == v2

    def test_one_hot_equals_fixed_policy_runs(self):
        obj = quadratic_objective()
        cfg = small_meta_config(inner_reps=2)
        rng = np.random.default_rng(11)
        got = meta_objective(np.array([0.0, 1.0, 0.0]), obj, cfg, rng)
        # replay the same inner seeds with a Fixed(EI) policy
        rng2 = np.random.default_rng(11)
        finals = []
        for _ in range(2):
            seed = int(rng2.integers(2**63))
            from dataclasses import replace

            run_cfg = replace(cfg.inner_config, seed=seed)
            finals.append(run_bo(obj, run_cfg, PolicySpec.fixed(EI)).records[-1].best_so_far)
        assert got == pytest.approx(np.mean(finals), abs=1e-12)

    def test_bounded_below_by_optimum(self):
        obj = quadratic_objective()
        cfg = small_meta_config()
        val = meta_objective(np.array([0.5, 0.25, 0.25]), obj, cfg, np.random.default_rng(1))
        assert val >= 0.0

    def test_rejects_out_of_box_weights(self):
        obj = quadratic_objective()
        cfg = small_meta_config()
        with pytest.raises(ValueError):
            meta_objective(np.array([1.5, 0.0, 0.0]), obj, cfg, np.random.default_rng(0))
        with pytest.raises(ValueError):
            meta_objective(np.array([0.5, 0.5]), obj, cfg, np.random.default_rng(0))


class TestMetaOptimize:
    def test_zero_outer_iters_returns_best_initial_weights(self):
        obj = quadratic_objective()
        cfg = small_meta_config(outer_iters=0, outer_init=3, seed=4)
        weights, trace = meta_optimize(obj, cfg)
        assert len(trace.records) == 3
        best = trace.best_observed()
        np.testing.assert_allclose(weights, project_weights(best.x), atol=1e-12)
        assert weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_reproducible_weights(self):
        obj = quadratic_objective()
        cfg = small_meta_config(seed=8)
        w1, t1 = meta_optimize(obj, cfg)
        w2, t2 = meta_optimize(obj, cfg)
        np.testing.assert_array_equal(w1, w2)
        assert [r.y for r in t1.records] == [r.y for r in t2.records]

    def test_outer_points_stay_in_weight_box(self):
        obj = quadratic_objective()
        cfg = small_meta_config(outer_iters=2, seed=3)
        _, trace = meta_optimize(obj, cfg)
        for rec in trace.records:
            assert np.all(rec.x >= -1e-12)
            assert np.all(rec.x <= 1 + 1e-12)


class TestMetaConfig:
    def test_rejects_bad_inner_reps(self):
        with pytest.raises(ValueError):
            small_meta_config(inner_reps=0)

    def test_rejects_bad_aggregate(self):
        with pytest.raises(ValueError):
            small_meta_config(aggregate="median")

    def test_auc_aggregate_runs(self):
        obj = quadratic_objective()
        cfg = small_meta_config(aggregate="auc")
        val = meta_objective(np.array([1.0, 0.0, 0.0]), obj, cfg, np.random.default_rng(2))
        assert np.isfinite(val)
