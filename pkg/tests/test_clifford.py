import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinflow import clifford as cl
from spinflow.clifford import E1, E2, E3, E12, E13, E23, E123, EvenSpinor, Multivector, Rotor
from spinflow.oracles import reduce_word, symbolic_structure_table

reals = st.floats(-10, 10, allow_nan=False)
even_arrays = st.lists(reals, min_size=4, max_size=4)
mv_arrays = st.lists(reals, min_size=8, max_size=8)


def basis(i):
    a = np.zeros(8)
    a[i] = 1.0
    return a


def test_word_rewriting_oracle():
    assert reduce_word((2, 1)) == (-1, (1, 2))
    assert reduce_word((1, 2, 1)) == (-1, (2,))
    assert reduce_word((3, 3)) == (1, ())


def test_table_matches_symbolic_oracle():
    index, sign = symbolic_structure_table()
    for i in range(8):
        for j in range(8):
            expected = np.zeros(8)
            expected[index[i, j]] = sign[i, j]
            assert np.array_equal(cl.gp(basis(i), basis(j)), expected), (cl.BLADES[i], cl.BLADES[j])


def test_product_examples():
    assert (E1 * E1).allclose(Multivector(c0=1.0))
    assert (E1 * E2).allclose(E12)
    assert ((1 + E12) * (1 - E12)).allclose(Multivector(c0=2.0))


@pytest.mark.parametrize("i", range(3))
@pytest.mark.parametrize("j", range(3))
def test_generator_anticommutators(i, j):
    ei, ej = cl.BASIS_VECTORS[i], cl.BASIS_VECTORS[j]
    assert (ei * ej + ej * ei).to_array().tolist() == [2.0 * (i == j)] + [0.0] * 7


@given(mv_arrays, mv_arrays, mv_arrays)
def test_associative_and_bilinear(a, b, c):
    a, b, c = map(np.array, (a, b, c))
    left = cl.gp(cl.gp(a, b), c)
    right = cl.gp(a, cl.gp(b, c))
    assert np.allclose(left, right, rtol=1e-12, atol=1e-9)
    assert np.allclose(cl.gp(a + 2 * b, c), cl.gp(a, c) + 2 * cl.gp(b, c), atol=1e-9)


def test_reverse_examples():
    assert cl.reverse(E12).allclose(-1 * E12)
    assert cl.reverse(E123).allclose(-1 * E123)
    assert cl.reverse(E1).allclose(E1)


def test_reverse_antiautomorphism_random_pairs(rng):
    a = rng.standard_normal((1000, 8))
    b = rng.standard_normal((1000, 8))
    lhs = cl.rev(cl.gp(a, b))
    rhs = cl.gp(cl.rev(b), cl.rev(a))
    assert np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1.0)) <= 1e-12
    assert np.array_equal(cl.rev(cl.rev(a)), a)


@given(mv_arrays, st.integers(0, 3))
def test_grade_projection(a, k):
    m = Multivector.from_array(a)
    g = cl.grade(m, k).to_array()
    assert np.all(g[cl.GRADES != k] == 0)
    assert np.array_equal(g[cl.GRADES == k], np.array(a)[cl.GRADES == k])


def test_grade_rejects_bad_k():
    with pytest.raises(ValueError):
        cl.grade(E1, 4)


@given(even_arrays)
def test_amplitude_identity(arr):
    psi = EvenSpinor.from_array(arr)
    m = psi.to_multivector()
    assert m.is_even()
    scalar = (m * m.reverse()).c0
    assert math.isclose(cl.amplitude(psi) ** 2, scalar, rel_tol=1e-12, abs_tol=1e-12)
    assert cl.amplitude(psi) >= 0


def test_amplitude_random_batch(rng):
    psi = rng.standard_normal((1000, 4))
    m = cl.even_to_mv(psi)
    scalar = cl.gp(m, cl.rev(m))[..., 0]
    assert np.allclose(np.sum(psi ** 2, axis=-1), scalar, rtol=1e-12)


def test_rotor_normalization():
    r = Rotor.from_angle(0.7, "E23")
    assert abs(cl.amplitude(r) - 1) <= 1e-12
    with pytest.raises(ValueError):
        Rotor(1.0, 0.1, 0.0, 0.0)


def test_rotor_rotates_in_plane():
    r = Rotor.from_angle(math.pi / 2, "E12")
    assert cl.sandwich(r, E1).allclose(E2)


@given(even_arrays.filter(lambda a: sum(x * x for x in a) > 1e-6))
def test_polar_decompose_roundtrip(arr):
    psi = EvenSpinor.from_array(arr)
    rho, rot = cl.polar_decompose(psi)
    assert math.isclose(rho, cl.amplitude(psi), rel_tol=1e-12)
    assert (rho * rot).allclose(psi, atol=1e-9)


def test_polar_decompose_nodal_point():
    with pytest.raises(cl.NodalPointError):
        cl.polar_decompose(EvenSpinor(0.0, 0.0, 0.0, 0.0))


def test_sandwich_is_vector(rng):
    m = cl.even_to_mv(rng.standard_normal((1000, 4)))
    v = cl.vec_to_mv(rng.standard_normal((1000, 3)))
    out = cl.gp(cl.gp(m, v), cl.rev(m))
    assert np.abs(out[..., [0, 4, 5, 6, 7]]).max() <= 1e-14 * max(1.0, np.abs(out).max())


def test_sandwich_scales_by_rho_squared():
    psi = EvenSpinor(2.0, 0.0, 0.0, 0.0)
    assert cl.sandwich(psi, E3).allclose(4 * E3)


def test_action_examples(rng):
    one = EvenSpinor(1.0, 0.0, 0.0, 0.0)
    assert cl.clifford_action(E1, one).allclose(EvenSpinor(0.0, 0.0, 0.0, 1.0))
    psi = EvenSpinor.from_array(rng.standard_normal(4))
    assert cl.clifford_action(E1, cl.clifford_action(E1, psi)).allclose(-1 * psi)
    anti = cl.clifford_action(E1, cl.clifford_action(E2, one)) + cl.clifford_action(E2, cl.clifford_action(E1, one))
    assert anti.allclose(EvenSpinor(0.0, 0.0, 0.0, 0.0))


@pytest.mark.parametrize("b", range(4))
def test_action_anticommutators_on_basis(b):
    psi = EvenSpinor.from_array(np.eye(4)[b])
    for i, ei in enumerate(cl.BASIS_VECTORS):
        for j, ej in enumerate(cl.BASIS_VECTORS):
            anti = cl.clifford_action(ei, cl.clifford_action(ej, psi)) + cl.clifford_action(ej, cl.clifford_action(ei, psi))
            assert np.array_equal(anti.to_array(), -2.0 * (i == j) * np.eye(4)[b])


def test_action_is_left_multiplication_by_dual(rng):
    phi = rng.standard_normal((5, 4))
    for k, ek in enumerate(cl.BASIS_VECTORS):
        via_table = cl.gp((E123 * ek).to_array(), cl.even_to_mv(phi))[..., list(cl.EVEN_SLOTS)]
        assert np.array_equal(cl.act(k, phi), via_table)


def test_field_action_matches_vector_action(rng):
    v = rng.standard_normal((6, 3))
    phi = rng.standard_normal((6, 4))
    expected = sum(v[:, k, None] * cl.act(k, phi) for k in range(3))
    assert np.allclose(cl.act_vector(v, phi), expected)
    sq = cl.act_vector(v, cl.act_vector(v, phi))
    assert np.allclose(sq, -np.sum(v ** 2, axis=1)[:, None] * phi)


def test_duals_of_vectors():
    assert (E123 * E1).allclose(E23)
    assert (E123 * E2).allclose(-1 * E13)
    assert (E123 * E3).allclose(E12)
    assert E13.grade(2).allclose(E13)
