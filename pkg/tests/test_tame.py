from __future__ import annotations

import pytest
import sympy
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from services.diagnostics import CoverError
from services.fan import span_sublattice
from services.tame import (
    CharacterSurjection,
    FiniteAbelianGroup,
    character_kernel,
    character_map,
    connected_covers,
    cover_components,
    descent_cross_check,
    extension_from_surjection,
    extension_index,
    is_surjective,
    kummer_classes,
    load_cover,
    local_system_from_cover,
    pontryagin_pairing,
    same_cover,
    surjection_from_extension,
)
from services.intlat import IntMatrix

SWAP = (1, 0)


@pytest.fixture
def square_map():
    return character_map(1, [2], [[1]])


@pytest.fixture
def first_coordinate():
    return character_map(2, [2], [[1], [0]])


@pytest.fixture
def klein():
    return character_map(2, [2, 2], [[1, 0], [0, 1]])


def test_finite_abelian_group_normal_form():
    assert FiniteAbelianGroup.from_orders([2, 3]).invariant_factors == (6,)
    assert FiniteAbelianGroup.from_orders([2, 4, 1]).invariant_factors == (2, 4)
    assert FiniteAbelianGroup.from_orders([1]).is_trivial
    group = FiniteAbelianGroup((2, 4))
    assert (group.order, group.exponent, group.rank) == (8, 4, 2)
    assert len(group.elements()) == 8
    assert group.add((1, 3), (1, 2)) == (0, 1)


@pytest.mark.parametrize('factors', [(1,), (0,), (2, 3)])
def test_finite_abelian_group_rejects_bad_factors(factors):
    with pytest.raises(CoverError):
        FiniteAbelianGroup(factors)


def test_character_map_checks_shape_and_surjectivity():
    with pytest.raises(CoverError):
        character_map(1, [2], [[0]])
    with pytest.raises(CoverError):
        character_map(2, [2], [[1]])
    assert not character_map(1, [2], [[0]], require_surjective=False).surjective
    assert character_map(1, [3], [[5]]).matrix.entries == ((2,),)
    assert is_surjective(character_map(2, [], []))


def test_kummer_extension_of_the_square_map(square_map):
    spec = extension_from_surjection(square_map)

    assert spec.denominator == 2
    assert spec.numerators.entries == ((1,),)
    assert spec.basis() == [(sympy.Rational(1, 2),)]
    assert extension_index(spec) == 2


@pytest.mark.parametrize('m', [2, 3, 5])
def test_cyclic_extension_has_index_m(m):
    spec = extension_from_surjection(character_map(1, [m], [[1]]))

    assert spec.basis() == [(sympy.Rational(1, m),)]
    assert extension_index(spec) == m


def test_trivial_character_gives_the_same_lattice():
    spec = extension_from_surjection(character_map(2, [], []))

    assert extension_index(spec) == 1
    assert spec.numerators == IntMatrix.identity(2)
    assert spec.denominator == 1


def test_extension_of_first_coordinate_mod_two(first_coordinate):
    spec = extension_from_surjection(first_coordinate)

    assert extension_index(spec) == 2
    assert sorted(spec.basis()) == [(0, 1), (sympy.Rational(1, 2), 0)]
    assert character_kernel(first_coordinate).entries == ((2, 0), (0, 1))


def test_klein_extension(klein):
    spec = extension_from_surjection(klein)

    assert extension_index(spec) == 4
    assert character_kernel(klein).entries == ((2, 0), (0, 2))


def test_wild_covers_are_rejected(square_map):
    with pytest.raises(CoverError):
        extension_from_surjection(square_map, characteristic=2)
    assert extension_index(extension_from_surjection(square_map, characteristic=3)) == 2
    with pytest.raises(CoverError):
        extension_from_surjection(character_map(1, [2], [[0]], require_surjective=False))


def test_surjection_is_recovered_from_extension(klein, first_coordinate):
    for surjection in (klein, first_coordinate, character_map(1, [4], [[3]])):
        recovered = surjection_from_extension(extension_from_surjection(surjection))
        assert same_cover(surjection, recovered)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=2, max_value=6),
    st.lists(st.integers(min_value=0, max_value=5), min_size=2, max_size=2),
)
def test_extension_index_equals_deck_order(m, row):
    surjection = character_map(2, [m], [[row[0]], [row[1]]], require_surjective=False)
    assume(surjection.surjective)

    spec = extension_from_surjection(surjection)
    assert extension_index(spec) == m
    assert same_cover(surjection, surjection_from_extension(spec))


def test_pontryagin_pairing():
    assert pontryagin_pairing(FiniteAbelianGroup((4,)), (1,), (3,)) == sympy.Rational(3, 4)
    assert pontryagin_pairing(FiniteAbelianGroup((2, 2)), (1, 1), (1, 0)) == sympy.Rational(1, 2)
    assert pontryagin_pairing(FiniteAbelianGroup((2, 2)), (1, 1), (1, 1)) == 0


def test_components_over_smaller_strata(klein):
    cyclic = character_map(1, [3], [[1]])

    over_torus = cover_components(cyclic, [])
    assert (over_torus.descends, over_torus.component_count, over_torus.image_order) == (True, 3, 1)
    over_ray = cover_components(cyclic, [(1,)])
    assert (over_ray.descends, over_ray.component_count, over_ray.image_order) == (False, 1, 3)
    half = cover_components(klein, [(1, 0)])
    assert (half.descends, half.component_count, half.image_order) == (False, 2, 2)
    with pytest.raises(CoverError):
        cover_components(klein, [(1, 0, 0)])


def test_local_system_of_the_square_map(a1, square_map):
    local = local_system_from_cover(square_map, a1)

    assert local.size == 2
    assert local.generators == (SWAP,)
    assert local_system_from_cover(extension_from_surjection(square_map), a1) == local
    with pytest.raises(CoverError):
        local_system_from_cover(square_map, a1, 1)


def test_local_system_from_cover_checks_rank_and_level(a2, category, square_map):
    with pytest.raises(CoverError):
        local_system_from_cover(square_map, a2)
    with pytest.raises(CoverError):
        local_system_from_cover(square_map, category('A1', 3, 2))
    local = local_system_from_cover(character_map(1, [3], [[1]]), category('A1', 3, 2))
    assert local.frobenius == (0, 2, 1)


def test_descent_on_the_affine_line(a1, category, square_map):
    verdict = descent_cross_check(square_map, a1, 1)
    assert verdict.agree
    assert not verdict.descends
    assert verdict.pushforward_size == 0

    assert descent_cross_check(square_map, category('A1', 2, 1), 1).agree


@pytest.mark.parametrize('s, descends, size', [(0, True, 2), (1, False, 0), (2, True, 2), (3, False, 0)])
def test_descent_on_the_affine_plane(a2, first_coordinate, s, descends, size):
    verdict = descent_cross_check(first_coordinate, a2, s)

    assert verdict.agree
    assert verdict.descends is descends
    assert verdict.pushforward_size == verdict.expected_size == size


def test_every_small_cover_of_the_plane_passes_descent(a2):
    for surjection in connected_covers(2, 3):
        for s in a2.objects:
            components = cover_components(surjection, span_sublattice(a2.fan.cone(s)))
            verdict = descent_cross_check(surjection, a2, s)
            assert verdict.agree
            assert verdict.descends is components.descends


def test_connected_cover_counts():
    assert len(connected_covers(1, 4)) == 4
    assert len(connected_covers(2, 2)) == 5
    assert len(connected_covers(1, 4, characteristic=2)) == 2


@pytest.mark.parametrize('m', [1, 2, 3, 4, 6])
def test_one_kummer_class_per_degree(m):
    assert len(kummer_classes(m)) == 1


def test_load_cover():
    cover = load_cover({'rank': 2, 'invariant_factors': [2], 'phi_matrix': [[1], [0]]})

    assert isinstance(cover, CharacterSurjection)
    assert cover.apply((3, 5)) == (1,)
    assert load_cover({'rank': 1}).target.is_trivial
    with pytest.raises(CoverError):
        load_cover({'rank': 1, 'invariant_factors': [2], 'phi_matrix': [[0]]})
