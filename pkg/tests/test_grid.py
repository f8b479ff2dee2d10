import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from khessian import (GridError, MeshFunction, build_grid, discrete_hessian, discrete_laplacian,
                      hessian_field, laplacian_field, restrict)


@pytest.mark.parametrize("n,m,nodes,interior", [(2, 2, 9, 1), (3, 4, 125, 27), (2, 5, 36, 16)])
def test_counts(n, m, nodes, interior):
    g = build_grid(n, m)
    assert g.num_nodes == nodes
    assert g.num_interior == interior
    assert g.num_boundary == nodes - interior
    assert g.h * g.m == 1.0
    assert g.boundary_mask().sum() == g.num_boundary


@pytest.mark.parametrize("n,m,msg", [(3, 1, "no interior nodes"), (4, 4, "unsupported dimension"),
                                     (1, 4, "unsupported dimension")])
def test_bad_grids(n, m, msg):
    with pytest.raises(GridError, match=msg):
        build_grid(n, m)


def test_node_indexing_axis1_fastest():
    g = build_grid(3, 4)
    assert g.node_index((1, 0, 0)) == 1
    assert g.node_index((0, 1, 0)) == 5
    assert g.node_index((0, 0, 1)) == 25
    for p in (0, 17, 124):
        assert g.node_index(g.multi_index(p)) == p
    assert g.is_boundary((0, 2, 2)) and g.is_boundary((2, 4, 2))
    assert not g.is_boundary((1, 2, 3))


def test_restrict():
    g = build_grid(2, 2)
    assert np.all(restrict(lambda x, y: np.ones_like(x), g).values == 1.0)
    assert restrict(lambda x, y: x, g)[(1, 1)] == 0.5
    g3 = build_grid(3, 2)
    u = restrict(lambda *x: np.exp(sum(t * t for t in x)), g3)
    assert u[(1, 1, 1)] == pytest.approx(np.exp(0.75), rel=1e-15)
    assert u[(1, 1, 1)] == pytest.approx(2.117000, abs=5e-7)


def test_restrict_rejects_nonfinite():
    with pytest.raises(GridError, match="non-finite sample"):
        with np.errstate(divide="ignore"):
            restrict(lambda x, y: 1.0 / (x - 0.5), build_grid(2, 2))


def test_mesh_function_length_check():
    g = build_grid(2, 3)
    with pytest.raises(GridError):
        MeshFunction(g, np.zeros(7))
    assert MeshFunction(g, np.arange(16.0)).flat[5] == 5.0


@pytest.mark.parametrize("n", [2, 3])
def test_hessian_of_sum_of_squares(n):
    g = build_grid(n, 5)
    u = restrict(lambda *x: sum(t * t for t in x), g)
    H = hessian_field(u)
    assert np.allclose(H, 2 * np.eye(n), atol=1e-12, rtol=0)
    assert np.allclose(laplacian_field(u), 2 * n, atol=1e-12, rtol=0)


def test_hessian_bilinear_and_cubic():
    g = build_grid(2, 4)
    H = discrete_hessian(restrict(lambda x, y: x * y, g), (2, 1))
    assert H == pytest.approx(np.array([[0, 1], [1, 0]]), abs=1e-12)
    cubic = restrict(lambda x, y: x ** 3, g)
    assert discrete_hessian(cubic, (2, 1))[0, 0] == pytest.approx(3.0, abs=1e-12)
    assert discrete_laplacian(cubic, (2, 1)) == pytest.approx(3.0, abs=1e-12)


def test_harmonic_quadratic():
    g = build_grid(2, 6)
    u = restrict(lambda x, y: x * x - y * y, g)
    assert np.max(np.abs(laplacian_field(u))) <= 1e-10


def test_stencil_leaves_grid():
    u = MeshFunction.zeros(build_grid(2, 4))
    with pytest.raises(GridError, match="stencil leaves grid"):
        discrete_hessian(u, (0, 2))
    with pytest.raises(GridError, match="stencil leaves grid"):
        discrete_laplacian(u, (2, 4))


def test_pointwise_matches_field(rng):
    g = build_grid(3, 4)
    u = MeshFunction(g, rng.uniform(-1, 1, g.shape))
    H = hessian_field(u)
    for x in [(1, 1, 1), (3, 2, 1), (2, 3, 3)]:
        assert np.array_equal(discrete_hessian(u, x), H[tuple(i - 1 for i in x)])
        assert np.allclose(H[tuple(i - 1 for i in x)], H[tuple(i - 1 for i in x)].T)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3]), st.integers(2, 6))
def test_trace_equals_laplacian(seed, n, m):
    g = build_grid(n, m)
    u = MeshFunction(g, np.random.default_rng(seed).uniform(-1, 1, g.shape))
    tr = np.trace(hessian_field(u), axis1=-2, axis2=-1)
    lap = laplacian_field(u)
    assert np.all(np.abs(tr - lap) <= 4 * np.spacing(np.maximum(np.abs(lap), np.abs(tr))))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=10, max_size=10), st.sampled_from([2, 3]))
def test_quadratic_exactness(c, n):
    """Any quadratic ``q`` has constant discrete Hessian equal to ``D^2 q``."""
    Q = np.array([[c[0], c[1], c[2]], [c[1], c[3], c[4]], [c[2], c[4], c[5]]])[:n, :n]
    b = np.array(c[6:9])[:n]

    def q(*x):
        X = np.stack(x, -1)
        return np.einsum("...i,ij,...j->...", X, Q, X) + X @ b + c[9]

    g = build_grid(n, 4)
    H = hessian_field(restrict(q, g))
    assert np.max(np.abs(H - 2 * Q)) <= 1e-12 * max(1.0, np.abs(Q).max()) * 10


def _expsq_error(m, every=None):
    g = build_grid(3, m)
    u = restrict(lambda *x: np.exp(sum(t * t for t in x)), g)
    X = np.stack(g.interior_coordinates(), -1)
    e = np.exp((X ** 2).sum(-1))
    D2 = e[..., None, None] * (2 * np.eye(3) + 4 * X[..., :, None] * X[..., None, :])
    E = np.abs(D2 - hessian_field(u)).max(axis=(-1, -2))
    if every:
        s = m // every
        E = E[s - 1::s, s - 1::s, s - 1::s]
    return E.max()


def test_consistency_order_at_fixed_nodes():
    # error on the nodes shared by all grids (those of m=4)
    errs = [_expsq_error(m, every=4) for m in (8, 16, 32)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates >= 1.9), rates


def test_consistency_error_decreases_in_max_norm():
    errs = [_expsq_error(m) for m in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]
