import numpy as np
import pytest

from peerskill import (
    DiffusionConfig,
    InteractionGraph,
    build_laplacian,
    generate_er_graph,
    simulate,
    step,
    total_variation,
)
from peerskill.diffusion import realization_rng

from conftest import random_connected_weights

NOISELESS = dict(drift_mean=0.0, drift_std=0.0)


def test_fig3_pre_drift_and_drift(star_graph):
    lap = build_laplacian(star_graph)
    cfg = DiffusionConfig(n=4, c=0.01)
    r = np.array([4.0, 3.0, 5.0, 3.0])
    pre = step(r, lap, cfg, noise=np.zeros(4))
    assert pre[0] == pytest.approx(3.99, abs=1e-12)
    post = step(r, lap, cfg, noise=np.array([0.0676, 0, 0, 0]))
    assert post[0] == pytest.approx(4.0576, abs=1e-12)


def test_scalar_form_agrees():
    rng = np.random.default_rng(11)
    w = random_connected_weights(rng, 8)
    lap = build_laplacian(InteractionGraph(w))
    c = 0.9 / lap.d_max
    r = rng.uniform(2, 4, 8)
    eps = rng.normal(0, 0.01, 8)
    out = step(r, lap, DiffusionConfig(n=8, c=c), noise=eps)
    d = w.sum(axis=1)
    for i in range(8):
        expected = (1 - c * d[i]) * r[i] + c * sum(w[i, j] * r[j] for j in range(8)) + eps[i]
        assert out[i] == pytest.approx(np.clip(expected, 1, 5), abs=1e-12)


def test_ceiling_clamps():
    lap = build_laplacian(generate_er_graph(6, 0.7, 0))
    cfg = DiffusionConfig(n=6, c=0.05, drift_mean=0.05, drift_std=0.0)
    np.testing.assert_array_equal(step(np.full(6, 5.0), lap, cfg, rng=1), np.full(6, 5.0))


@pytest.mark.parametrize("c", [0.34, 1.0, 0.0, -0.1])
def test_inadmissible_c(star_graph, c):
    with pytest.raises(ValueError, match="c="):
        step([1, 2, 3, 4], build_laplacian(star_graph), DiffusionConfig(n=4, c=c))


def test_edgeless_accepts_any_positive_c():
    lap = build_laplacian(InteractionGraph.empty(3))
    out = step([1.0, 2.0, 3.0], lap, DiffusionConfig(n=3, c=7.0, **NOISELESS))
    np.testing.assert_array_equal(out, [1.0, 2.0, 3.0])


def test_er_degenerate_probabilities():
    assert generate_er_graph(5, 0.0, 0).n_edges == 0
    full = generate_er_graph(26, 1.0, 0)
    assert full.n_edges == 325
    assert set(np.unique(full.weights)) == {0, 1}


def test_er_mean_edge_count():
    counts = [generate_er_graph(26, 0.5, realization_rng(2024, k)).n_edges for k in range(10000)]
    assert abs(np.mean(counts) - 162.5) < 2


def test_er_reproducible():
    assert generate_er_graph(12, 0.4, 5) == generate_er_graph(12, 0.4, 5)


def test_noise_free_contraction_and_mean():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(3, 10))
        lap = build_laplacian(InteractionGraph(random_connected_weights(rng, n)))
        cfg = DiffusionConfig(n=n, c=float(rng.uniform(0.05, 0.99)) / lap.d_max, **NOISELESS)
        r = rng.uniform(1, 5, n)
        for _ in range(50):
            nxt = step(r, lap, cfg)
            assert total_variation(lap, nxt) <= total_variation(lap, r) * (1 + 1e-12) + 1e-15
            assert nxt.mean() == pytest.approx(r.mean(), abs=1e-12)
            r = nxt


def test_simulate_bounded_and_deterministic():
    cfg = DiffusionConfig(n=10, horizon=15, realizations=2, seed=9)
    a, b = simulate(cfg, keep_traces=True), simulate(cfg, keep_traces=True)
    np.testing.assert_array_equal(a.mean_rating, b.mean_rating)
    np.testing.assert_array_equal(a.total_variation, b.total_variation)
    np.testing.assert_array_equal(a.normalized_tv, b.normalized_tv)
    assert np.all((a.traces["mean_rating"] >= 1) & (a.traces["mean_rating"] <= 5))
    norms = np.linalg.norm(a.traces["normalized_tv"], axis=1)
    np.testing.assert_allclose(norms, 1.0)
    assert a.horizon == 15


def test_simulate_pure_consensus():
    cfg = DiffusionConfig(n=8, edge_prob=1.0, c=0.1, horizon=200, realizations=1, seed=4, **NOISELESS)
    stats = simulate(cfg)
    assert stats.total_variation[-1] < 1e-6
    np.testing.assert_allclose(stats.mean_rating, stats.mean_rating[0], atol=1e-12)


def test_config_problems_listed_together():
    cfg = DiffusionConfig(edge_prob=1.5, r_min=5, r_max=1, horizon=0)
    problems = cfg.problems()
    assert len(problems) == 3
    with pytest.raises(ValueError, match="edge_prob"):
        cfg.validate()


def test_realization_streams_are_order_independent():
    cfg = DiffusionConfig(n=6, horizon=5, realizations=3, seed=1)
    stats = simulate(cfg, keep_traces=True)
    from peerskill.diffusion import simulate_realization

    tv, mean = simulate_realization(cfg, realization_rng(1, 2))
    np.testing.assert_array_equal(stats.traces["total_variation"][2], tv)
    np.testing.assert_array_equal(stats.traces["mean_rating"][2], mean)
