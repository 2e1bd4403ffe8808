import numpy as np
import pytest
from hypothesis import given, strategies as st

from kmtwist.graph import GraphIndexError, GraphSpec, degree, graphon_limit, graphon_step, weight


def rule(n, kappa, k, j):
    """The index-distance rule evaluated literally in floating point."""
    d = abs(k - j)
    return int(d <= n * kappa + 1e-9 or d >= n * (1 - kappa) - 1e-9)


@pytest.mark.parametrize("k,j,expected", [(5, 5, 1), (1, 7, 1), (1, 6, 0)])
def test_weight_examples(k, j, expected):
    assert weight(GraphSpec(10, 0.4), k, j) == expected


@pytest.mark.parametrize("n,kappa,k,expected", [(10, 0.4, 5, 9), (10, 0.4, 1, 9), (10, 0.5, 3, 10)])
def test_degree_examples(n, kappa, k, expected):
    assert degree(GraphSpec(n, kappa), k) == expected


@pytest.mark.parametrize("kappa,x,y,expected", [(0.5, 0.1, 0.9, 1), (0.4, 0.0, 0.5, 0), (0.4, 0.0, 0.7, 1)])
def test_graphon_limit_examples(kappa, x, y, expected):
    assert graphon_limit(kappa, x, y) == expected


def test_index_range_errors():
    spec = GraphSpec(10, 0.4)
    with pytest.raises(GraphIndexError):
        weight(spec, 0, 3)
    with pytest.raises(GraphIndexError):
        weight(spec, 3, 11)
    with pytest.raises(GraphIndexError):
        degree(spec, 11)


@pytest.mark.parametrize("n,kappa", [(1, 0.3), (10, 0.0), (10, 0.6), (10, -0.1)])
def test_invalid_spec(n, kappa):
    with pytest.raises(ValueError):
        GraphSpec(n, kappa)


def test_graphon_domain():
    with pytest.raises(ValueError):
        graphon_limit(0.3, 1.2, 0.0)


@given(st.integers(2, 64), st.sampled_from([0.1, 0.25, 0.4, 0.5]))
def test_circulant_mask_matches_rule(n, kappa):
    spec = GraphSpec(n, kappa)
    W = spec.dense()
    for k in range(1, n + 1):
        for j in range(1, n + 1):
            w = weight(spec, k, j)
            assert w == rule(n, kappa, k, j)
            assert W[k - 1, j - 1] == w
            assert spec.mask[(j - k) % n] == w
    assert np.array_equal(W, W.T)


@pytest.mark.parametrize("n", [2, 3, 7, 10, 33])
def test_complete_graph(n):
    spec = GraphSpec(n, 0.5)
    assert spec.is_complete
    assert np.all(spec.dense() == 1)


@pytest.mark.parametrize("n,kappa", [(8, 0.25), (12, 0.4), (32, 0.3), (17, 0.1)])
def test_cell_average_matches_weight(n, kappa):
    # midpoint quadrature of the step graphon on each cell
    spec = GraphSpec(n, kappa)
    s = (np.arange(4) + 0.5) / 4
    for k in range(1, n + 1):
        for j in range(1, n + 1):
            xs, ys = (k - 1 + s) / n, (j - 1 + s) / n
            avg = np.mean([[graphon_step(spec, x, y) for y in ys] for x in xs])
            assert avg == weight(spec, k, j)


def test_step_graphon_approaches_limit():
    kappa = 0.3
    pts = np.random.default_rng(1).uniform(0, 1, size=(2000, 2))
    mismatch = []
    for n in (10, 100, 1000):
        spec = GraphSpec(n, kappa)
        mismatch.append(np.mean([graphon_step(spec, x, y) != graphon_limit(kappa, x, y) for x, y in pts]))
    assert mismatch[2] <= mismatch[1] <= mismatch[0]
    assert mismatch[2] < 0.01


def test_boundary_tie_included():
    # n*kappa = 3 exactly: offset 3 is a neighbor, offset 4 is not
    spec = GraphSpec(10, 0.3)
    assert spec.band_radius == 3
    assert weight(spec, 1, 4) == 1 and weight(spec, 1, 5) == 0
    assert GraphSpec(100, 0.29).band_radius == 29


def test_mask_is_immutable():
    spec = GraphSpec(10, 0.4)
    with pytest.raises(ValueError):
        spec.mask[0] = 0
