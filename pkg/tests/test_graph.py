import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from peerskill import (
    InteractionGraph,
    average_rating,
    build_laplacian,
    normalize_series,
    total_variation,
)
from peerskill.graph import pairwise_variation

from conftest import pairwise_tv, random_weights


def test_two_node_laplacian():
    lap = build_laplacian(InteractionGraph([[0, 2], [2, 0]]))
    np.testing.assert_array_equal(lap.degrees, [2, 2])
    np.testing.assert_array_equal(lap.entries, [[2, -2], [-2, 2]])


def test_star_degrees(star_graph):
    np.testing.assert_array_equal(build_laplacian(star_graph).degrees, [3, 1, 1, 1])


def test_edgeless_laplacian_is_zero():
    lap = build_laplacian(InteractionGraph.empty(3))
    np.testing.assert_array_equal(lap.entries, np.zeros((3, 3)))
    assert lap.d_max == 0


@pytest.mark.parametrize(
    "weights, message",
    [
        ([[0, 1], [2, 0]], "symmetric"),
        ([[1, 0], [0, 0]], "diagonal"),
        ([[0, -1], [-1, 0]], "nonnegative"),
        ([[0, 0.5], [0.5, 0]], "integer"),
        ([[0, 1, 0], [1, 0, 0]], "square"),
    ],
)
def test_invalid_graphs_rejected(weights, message):
    with pytest.raises(ValueError, match=message):
        InteractionGraph(weights)


def test_graph_is_immutable(star_graph):
    with pytest.raises(ValueError):
        star_graph.weights[0, 1] = 7


def test_tv_examples(star_graph):
    two = build_laplacian(InteractionGraph([[0, 2], [2, 0]]))
    assert total_variation(two, [1, 5]) == pytest.approx(32.0, rel=1e-12)
    assert total_variation(build_laplacian(star_graph), [4, 3, 5, 3]) == pytest.approx(3.0, rel=1e-12)
    assert total_variation(build_laplacian(star_graph), [3, 3, 3, 3]) == 0.0


def test_tv_dimension_mismatch(star_graph):
    with pytest.raises(ValueError, match="length"):
        total_variation(build_laplacian(star_graph), [1, 2, 3])


def test_average_rating():
    assert average_rating([3, 3, 3]) == 3
    assert average_rating([1, 5]) == 3
    assert average_rating([4, 3, 5, 3]) == pytest.approx(3.75)
    with pytest.raises(ValueError):
        average_rating([])


def test_normalize_series():
    np.testing.assert_allclose(normalize_series([3, 4]), [0.6, 0.8])
    np.testing.assert_allclose(normalize_series([7]), [1.0])
    with pytest.raises(ValueError, match="all-zero"):
        normalize_series([0, 0])


def test_pairwise_helper_matches_loop():
    rng = np.random.default_rng(3)
    w = random_weights(rng, 7)
    r = rng.uniform(1, 5, 7)
    assert pairwise_variation(InteractionGraph(w), r) == pytest.approx(pairwise_tv(w, r), rel=1e-12)


@st.composite
def graph_and_signal(draw):
    n = draw(st.integers(1, 8))
    upper = draw(arrays(np.int64, (n, n), elements=st.integers(0, 5)))
    w = np.triu(upper, 1)
    w = w + w.T
    r = draw(arrays(float, n, elements=st.floats(-10, 10)))
    return InteractionGraph(w), r


@settings(max_examples=100, deadline=None)
@given(graph_and_signal(), st.floats(-5, 5), st.floats(-3, 3))
def test_tv_properties(gs, shift, alpha):
    graph, r = gs
    lap = build_laplacian(graph)
    tv = total_variation(lap, r)
    assert tv >= 0
    np.testing.assert_allclose(lap.entries.sum(axis=1), 0, atol=1e-12)
    np.testing.assert_array_equal(lap.entries, lap.entries.T)
    scale = max(1.0, tv)
    assert total_variation(lap, r + shift) == pytest.approx(tv, abs=1e-10 * scale * (1 + shift**2))
    assert total_variation(lap, alpha * r) == pytest.approx(alpha**2 * tv, rel=1e-10, abs=1e-10)
    assert total_variation(lap, np.full(graph.n, shift)) == pytest.approx(0.0, abs=1e-10)
