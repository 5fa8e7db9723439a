from __future__ import annotations

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from services.intlat import (
    IntMatrix,
    hermite_normal_form,
    in_rational_span,
    lattice_index,
    left_kernel,
    matrix_rank,
    quotient_presentation,
    saturate,
    saturation_index,
    snf,
    sublattices_equal,
)

small = st.integers(min_value=-9, max_value=9)


@st.composite
def matrices(draw, max_rows: int = 4, max_cols: int = 4):
    rows = draw(st.integers(min_value=1, max_value=max_rows))
    cols = draw(st.integers(min_value=1, max_value=max_cols))
    entries = draw(st.lists(st.lists(small, min_size=cols, max_size=cols), min_size=rows, max_size=rows))
    return IntMatrix.from_rows(entries, cols)


def test_snf_of_small_matrix_has_expected_invariant_factors():
    decomposition = snf([[2, 4], [6, 8]])

    assert decomposition.invariant_factors == (2, 4)
    assert decomposition.rank == 2


@settings(max_examples=150, deadline=None)
@given(matrices())
def test_snf_transformations_are_unimodular_and_diagonalize(matrix):
    decomposition = snf(matrix)

    assert decomposition.U @ matrix @ decomposition.V == decomposition.S
    assert abs(sympy.Matrix(decomposition.U.entries).det()) == 1
    assert abs(sympy.Matrix(decomposition.V.entries).det()) == 1
    assert decomposition.V @ decomposition.V_inverse == IntMatrix.identity(matrix.cols)
    factors = decomposition.invariant_factors
    for d, e in zip(factors, factors[1:]):
        if d == 0:
            assert e == 0
        else:
            assert e % d == 0
    assert all(d >= 0 for d in factors)


def test_hermite_form_depends_only_on_the_lattice():
    first = hermite_normal_form([(1, 2), (3, 4)])
    second = hermite_normal_form([(1, 2), (2, 2)])

    assert first == second
    assert first.entries == ((1, 0), (0, 2))
    assert sublattices_equal([(1, 2), (3, 4)], [(1, 0), (0, 2)])


def test_saturation_of_sublattice():
    assert saturate([(2, 2), (0, 4)]) == IntMatrix.identity(2)
    assert saturate([(2, 4)]).entries == ((1, 2),)
    assert saturation_index([(2, 2), (0, 4)]) == 8
    assert saturation_index([(1, 0)]) == 1


@settings(max_examples=100, deadline=None)
@given(matrices())
def test_saturation_is_idempotent(matrix):
    once = saturate(matrix)

    assert saturate(once) == once
    assert matrix_rank(once) == matrix_rank(matrix)


def test_lattice_index_of_full_rank_sublattice():
    assert lattice_index([(2, 0), (0, 3)], 2) == 6
    assert lattice_index([], 0) == 1
    with pytest.raises(ValueError):
        lattice_index([(1, 1), (2, 2)], 2)


def test_left_kernel_of_column():
    kernel = left_kernel([[1], [1]])

    assert kernel.entries == ((1, -1),)


def test_rational_span_membership():
    assert in_rational_span((2, 4), [(1, 2)])
    assert not in_rational_span((1, 0), [(1, 2)])


def test_quotient_by_coordinate_axis_is_free_of_rank_one():
    presentation = quotient_presentation(2, [(1, 0)])

    assert presentation.free_rank == 1
    assert presentation.torsion == ()
    assert presentation.project((1, 0)) == (0,)
    assert abs(presentation.project((0, 1))[0]) == 1
    assert presentation.order is None


def test_quotient_with_torsion():
    cyclic = quotient_presentation(1, [(2,)])
    assert cyclic.torsion == (2,)
    assert cyclic.project((3,)) == (1,)
    assert cyclic.order == 2

    six = quotient_presentation(2, [(2, 0), (0, 3)])
    assert six.free_rank == 0
    assert six.torsion == (6,)
    assert six.order == 6


def test_trivial_quotient():
    presentation = quotient_presentation(2, [(1, 0), (0, 1)])

    assert presentation.is_trivial
    assert presentation.project((5, -7)) == ()


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(small, small, small), min_size=0, max_size=3),
    st.tuples(small, small, small),
    st.tuples(small, small, small),
)
def test_projection_is_additive_and_lift_is_a_section(generators, u, v):
    presentation = quotient_presentation(3, generators)

    def reduce(coordinates):
        free = coordinates[:presentation.free_rank]
        torsion = tuple(c % d for c, d in zip(coordinates[presentation.free_rank:], presentation.torsion))
        return tuple(free) + torsion

    total = presentation.project(tuple(a + b for a, b in zip(u, v)))
    summed = reduce(tuple(a + b for a, b in zip(presentation.project(u), presentation.project(v))))
    assert total == summed
    assert presentation.project(presentation.lift(presentation.project(u))) == presentation.project(u)
    for generator in generators:
        assert not any(presentation.project(generator))
