import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinflow.fieldgrid import (
    Grid,
    diff_central,
    gradient_flat,
    integrate,
    laplacian_flat,
    laplacian_wide,
    norms,
    pairwise_sum,
)
from spinflow.oracles import loop_sum


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((4, 16), (1.0, 1.0))
    with pytest.raises(ValueError):
        Grid((16,), (1.0,))
    with pytest.raises(ValueError):
        Grid((16, 16), (1.0, 0.0))
    g = Grid((16, 32, 8), (1.0, 2.0, 4.0))
    assert g.dim == 3 and g.h == (1 / 16, 1 / 16, 0.5) and g.size == 16 * 32 * 8


def test_coords_are_ih():
    g = Grid((8, 10), (2.0, 5.0))
    x, y = g.coords()
    assert x[3, 0] == 3 * 0.25 and y[0, 7] == 7 * 0.5
    xc, _ = g.coords(centered=True)
    assert xc[4, 0] == 0.0


def test_diff_examples():
    g = Grid.cube(2, 16, 2 * np.pi)
    x, _ = g.coords()
    d = diff_central(np.sin(x), g, 0)
    assert np.allclose(d, np.sin(g.h[0]) / g.h[0] * np.cos(x), atol=1e-14)
    assert np.all(diff_central(np.full(g.n, 3.0), g, 1) == 0)
    with pytest.raises(ValueError):
        diff_central(np.sin(x), g, 2)


def test_diff_second_order():
    errs = []
    for n in (16, 32, 64):
        g = Grid.cube(2, n, 2 * np.pi)
        x, y = g.coords()
        f = np.sin(x + np.cos(y))
        errs.append(np.abs(diff_central(f, g, 0) - np.cos(x + np.cos(y))).max())
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.5 < r < 4.6 for r in ratios)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_laplacian_fourier_symbols(k):
    # both stencils act diagonally on Fourier modes with known symbols
    g = Grid.cube(3, 16, 2 * np.pi)
    x, _, _ = g.coords()
    f = np.cos(k * x)
    h = g.h[0]
    assert np.allclose(laplacian_flat(f, g), (2 - 2 * np.cos(k * h)) / h ** 2 * f, atol=1e-11)
    assert np.allclose(laplacian_wide(f, g), (np.sin(k * h) / h) ** 2 * f, atol=1e-11)


def test_laplacian_nonnegative_and_componentwise(rng):
    g = Grid.cube(2, 16, 1.0)
    f = rng.standard_normal(g.n + (4,))
    lap = laplacian_flat(f, g)
    assert np.sum(lap * f) >= 0
    assert np.array_equal(lap[..., 2], laplacian_flat(f[..., 2], g))


def test_gradient_shape():
    g = Grid.cube(3, 8, 1.0)
    assert gradient_flat(np.zeros(g.n), g).shape == g.n + (3,)


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=0, max_size=300))
def test_pairwise_sum_matches_loop(values):
    a = np.array(values, dtype=float)
    assert math.isclose(pairwise_sum(a), loop_sum(a), rel_tol=1e-9, abs_tol=1e-6)


def test_pairwise_sum_is_layout_independent(rng):
    a = rng.standard_normal((24, 32))
    assert pairwise_sum(a) == pairwise_sum(np.asfortranarray(a))


def test_integrate_trig_exact():
    g = Grid.cube(2, 16, 2 * np.pi)
    x, y = g.coords()
    assert math.isclose(integrate(np.sin(x) ** 2 + 1.0, g), 1.5 * (2 * np.pi) ** 2, rel_tol=1e-14)


def test_norms_and_weights(rng):
    g = Grid.cube(2, 16, 1.0)
    f = rng.standard_normal(g.n + (4,))
    l2, linf = norms(f, g)
    assert math.isclose(l2, math.sqrt(np.sum(f ** 2) * g.cell_volume), rel_tol=1e-12)
    assert linf == np.sqrt(np.sum(f ** 2, axis=-1)).max()
    w = np.full(g.n, 4.0)
    assert math.isclose(norms(f, g, w)[0], 2 * l2, rel_tol=1e-12)
    with pytest.raises(ValueError):
        norms(f, g, -w)
