from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from services.diagnostics import CategoryMismatchError
from services.fan_catalog import standard_fan
from services.fundcat import (
    Morphism,
    build_fundamental_category,
    finite_level,
    galois_datum,
    hasse_generators,
    hom_elements,
    hom_set_description,
    reduce_morphism,
)


@pytest.mark.parametrize('name', ['A1', 'A2', 'A3', 'P1', 'P2', 'P3', 'F1'])
def test_group_rank_equals_orbit_dimension(category, name):
    cat = category(name)

    for s in cat.objects:
        assert cat.group_rank(s) == cat.poset.orbit_dim[s]
        assert cat.hom_group(s).torsion == ()


def test_affine_plane_composition_adds_projected_elements(a2):
    # G_3 = 0, G_1 = N / <e1>, G_0 = N
    h = a2.morphism(1, 0, (5,))
    g = a2.morphism(0, 0, (2, 3))
    composite = a2.compose(g, h)

    assert composite.source == 1 and composite.target == 0
    assert composite.element == (a2.apply_transition(0, 1, (2, 3))[0] + 5,)
    assert a2.project(1, (2, 3)) == a2.apply_transition(0, 1, (2, 3))
    assert abs(a2.project(1, (0, 1))[0]) == 1
    assert a2.project(1, (1, 0)) == (0,)


def test_hom_set_is_empty_unless_ordered(a2):
    assert hom_set_description(a2, 0, 3) is None
    assert hom_set_description(a2, 3, 0).is_trivial
    assert hom_set_description(a2, 1, 0).free_rank == 1
    with pytest.raises(CategoryMismatchError):
        a2.morphism(0, 3, (0, 0))
    with pytest.raises(CategoryMismatchError):
        a2.morphism(1, 0, (1, 2))


def test_compose_rejects_non_composable_pair(a2):
    with pytest.raises(CategoryMismatchError):
        a2.compose(a2.identity(0), a2.identity(1))
    with pytest.raises(CategoryMismatchError):
        a2.hom_group(42)


def test_galois_datum_order():
    assert galois_datum(5, 2).galois_order == 4
    assert galois_datum(7, 3).galois_order == 6
    assert galois_datum(4, 3).galois_order == 2
    assert galois_datum(1).galois_order == 1
    assert galois_datum(6, 1).is_trivial


@pytest.mark.parametrize('level, frob', [(0, 1), (4, 2), (6, 3)])
def test_galois_datum_rejects_invalid_input(level, frob):
    with pytest.raises(ValueError):
        galois_datum(level, frob)


def test_galois_datum_requires_level_coprime_to_characteristic():
    with pytest.raises(ValueError):
        galois_datum(4, 1, characteristic=2)
    assert galois_datum(3, 2, characteristic=2).galois_order == 2


@pytest.mark.parametrize('n, q', [(5, 2), (7, 3), (4, 3)])
def test_frobenius_acts_by_cyclotomic_exponent(category, n, q):
    cat = category('A2', n, q)

    for s in cat.objects:
        rank = cat.group_rank(s)
        v = tuple(range(1, rank + 1))
        conjugate = cat.frobenius_conjugate(Morphism(s, s, v, 0))
        assert conjugate == Morphism(s, s, tuple((q * x) % n for x in v), 0)


def test_finite_hom_sizes(category):
    cat = category('A2', 3, 2)

    assert cat.hom_size(0, 0) == 9 * 2
    assert cat.hom_size(1, 0) == 3 * 2
    assert cat.hom_size(3, 0) == 2
    assert cat.hom_size(0, 3) == 0
    assert len(hom_elements(cat, 1, 0)) == 6
    assert hom_elements(cat, 0, 1) == []


def test_reduction_between_levels(category):
    base = category('A1')
    fine = finite_level(base, galois_datum(12, 5))
    coarse = finite_level(base, galois_datum(4, 1))
    morphism = fine.morphism(0, 0, (7,), 1)

    reduced = reduce_morphism(fine, coarse, morphism)
    assert reduced == Morphism(0, 0, (3,), 0)
    with pytest.raises(CategoryMismatchError):
        reduce_morphism(coarse, fine, reduced)


def test_hasse_generators_report_source_rank(p2):
    generators = hasse_generators(p2)

    assert len(generators) == 9
    assert {'source': 4, 'target': 1, 'rank': 0} in generators
    assert {'source': 1, 'target': 0, 'rank': 1} in generators


AFFINE_PLANE = build_fundamental_category(standard_fan('A2'))

elements = st.lists(st.integers(min_value=-20, max_value=20), min_size=2, max_size=2)


@settings(max_examples=100, deadline=None)
@given(elements, elements, elements)
def test_composition_is_associative_and_unital(a_raw, b_raw, c_raw):
    cat = AFFINE_PLANE
    f = cat.morphism(3, 1, ())
    g = cat.morphism(1, 0, (a_raw[0],))
    h = cat.morphism(0, 0, tuple(b_raw))
    k = cat.morphism(0, 0, tuple(c_raw))

    assert cat.compose(k, cat.compose(h, g)) == cat.compose(cat.compose(k, h), g)
    assert cat.compose(cat.compose(h, g), f) == cat.compose(h, cat.compose(g, f))
    assert cat.compose(cat.identity(0), g) == g
    assert cat.compose(g, cat.identity(1)) == g
