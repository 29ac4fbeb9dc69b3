import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from histlab.errors import StructuralError
from histlab.grid import GridState, inner_product, integrate, l2_distance, make_grid, node_index, quadrature_weights


def test_grid_includes_walls_and_origin():
    x = make_grid(17)
    assert x[0] == -1.0 and x[-1] == 1.0 and x[8] == 0.0


def test_grid_too_small():
    with pytest.raises(StructuralError):
        make_grid(2)


@given(st.integers(3, 400))
def test_weights_integrate_constants(n):
    x = make_grid(n)
    assert quadrature_weights(n, x[1] - x[0]).sum() == pytest.approx(2.0, rel=1e-12)


def test_simpson_exact_for_cubics():
    x = make_grid(9)
    f = 3 * x ** 3 - x ** 2 + 2
    assert integrate(f, x) == pytest.approx(-2 / 3 + 4, rel=1e-13)


def test_sub_interval_integration():
    x = make_grid(2001)
    assert integrate(np.cos(x), x, -1.0, 0.0) == pytest.approx(np.sin(1.0), rel=1e-12)


def test_node_index_snaps():
    x = make_grid(5)
    assert node_index(x, 0.1) == 2
    assert node_index(x, -5) == 0


def test_state_is_read_only():
    x = make_grid(5)
    s = GridState(np.ones(5), x, (-1.0, 1.0))
    with pytest.raises(ValueError):
        s.amplitudes[0] = 2.0


def test_inner_product_uses_common_support():
    x = make_grid(2001)
    a = GridState(np.where(x <= 0, 1.0, 0.0), x, (-1.0, 0.0))
    b = GridState(np.ones_like(x), x, (-1.0, 1.0))
    assert inner_product(a, b) == pytest.approx(1.0, rel=1e-12)
    assert l2_distance(b, b) == 0.0


def test_mismatched_grids():
    a = GridState(np.ones(5), make_grid(5), (-1.0, 1.0))
    b = GridState(np.ones(7), make_grid(7), (-1.0, 1.0))
    with pytest.raises(StructuralError):
        inner_product(a, b)


def test_shape_mismatch():
    with pytest.raises(StructuralError):
        GridState(np.ones(4), make_grid(5), (-1.0, 1.0))
