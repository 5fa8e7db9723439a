from __future__ import annotations

import pytest

from services.diagnostics import CategoryMismatchError, SearchBudgetExceeded, SheafError
from services.homs import (
    are_isomorphic,
    compose_morphisms,
    enumerate_sheaves,
    equivariant_maps,
    find_isomorphism,
    find_local_isomorphism,
    hom_set,
    inverse_morphism,
    representable,
    representable_via_pullback,
    transpose_from_extension,
    transpose_to_extension,
    yoneda_check,
)
from services.sampling import random_local_system, random_sheaf
from services.sheaf_ops import (
    extend_by_empty,
    pushforward_closed,
    pushforward_open,
    restrict_closed,
    restrict_open,
)
from services.sheaves import (
    StratumLocalSystem,
    constant_sheaf,
    identity_morphism,
    is_natural,
    make_sheaf,
    validate_sheaf,
)

SWAP = (1, 0)
CYCLE = (1, 2, 0)


def test_equivariant_maps_between_small_sets():
    assert len(equivariant_maps([SWAP], 2, [SWAP], 2)) == 2
    assert equivariant_maps([SWAP], 2, [(0,)], 1) == [(0, 0)]
    assert equivariant_maps([(0,)], 1, [SWAP], 2) == []
    assert equivariant_maps([], 0, [], 0) == [()]
    assert equivariant_maps([SWAP], 2, [(0, 1, 2)], 3, bijective=True) == []


def test_hom_set_counts_natural_transformations(a1):
    constant = constant_sheaf(a1, 2)
    homs = hom_set(constant, constant)

    assert len(homs) == 4
    assert all(is_natural(eta) for eta in homs)


def test_isomorphism_relabels_stalks(a1):
    first = make_sheaf(a1, {0: 2, 1: 1}, structure={(1, 0): (0,)})
    second = make_sheaf(a1, {0: 2, 1: 1}, structure={(1, 0): (1,)})

    iso = find_isomorphism(first, second)
    assert iso is not None
    assert iso.components[0] == SWAP
    assert compose_morphisms(iso, inverse_morphism(iso)).components == identity_morphism(first).components
    assert not are_isomorphic(first, make_sheaf(a1, {0: 2, 1: 0}))


def test_hom_set_rejects_sheaves_on_different_domains(a1):
    with pytest.raises(CategoryMismatchError):
        hom_set(constant_sheaf(a1, 1), constant_sheaf(a1, 1, [0]))


def test_local_isomorphism():
    first = StratumLocalSystem(0, 3, (CYCLE,), (0, 1, 2))
    second = StratumLocalSystem(0, 3, ((2, 0, 1),), (0, 1, 2))

    assert find_local_isomorphism(first, second) is not None
    assert find_local_isomorphism(first, StratumLocalSystem(0, 3, ((0, 1, 2),), (0, 1, 2))) is None
    with pytest.raises(CategoryMismatchError):
        find_local_isomorphism(first, StratumLocalSystem(1, 3, (), (0, 1, 2)))


@pytest.mark.parametrize('name, expected', [('A1', 3), ('P1', 5), ('A2', 6)])
def test_enumeration_with_stalks_of_size_one_counts_opens(category, name, expected):
    cat = category(name)
    result = enumerate_sheaves(cat, 1)

    assert result.count == expected
    assert result.count == sum(1 for _ in cat.poset.upward_closed_sets())
    assert all(validate_sheaf(sheaf).valid for sheaf in result.representatives)


def test_enumeration_on_the_torus_counts_permutation_actions(a1):
    # Sul solo aperto: classi di coniugio di permutazioni di al più due punti
    result = enumerate_sheaves(a1, 2, objects=[0])

    assert result.count == 1 + 1 + 2
    assert result.examined > 0


def test_enumeration_respects_the_budget(a2):
    with pytest.raises(SearchBudgetExceeded):
        enumerate_sheaves(a2, 2, budget=5)
    with pytest.raises(SheafError):
        enumerate_sheaves(a2, -1)


@pytest.mark.parametrize('level, frob', [(2, 1), (3, 2)])
@pytest.mark.parametrize('s', [0, 1])
def test_representable_equals_extended_pullback(category, level, frob, s):
    cat = category('A1', level, frob)
    represented = representable(cat, s)

    assert validate_sheaf(represented).valid
    assert represented == representable_via_pullback(cat, s)
    assert represented.size(s) == cat.hom_size(s, s)


def test_representable_needs_finite_level(a1):
    with pytest.raises(CategoryMismatchError):
        representable(a1, 0)
    with pytest.raises(CategoryMismatchError):
        yoneda_check(a1, 0, constant_sheaf(a1, 1))


@pytest.mark.parametrize('level, frob', [(2, 1), (3, 2)])
def test_yoneda_bijection_on_random_sheaves(category, rng, level, frob):
    cat = category('A1', level, frob)

    for _ in range(3):
        sheaf = random_sheaf(cat, rng, max_stalk=2)
        for s in cat.objects:
            verdict = yoneda_check(cat, s, sheaf)
            assert verdict.bijective
            assert verdict.hom_count == sheaf.size(s)


def test_yoneda_rejects_sheaves_from_another_level(category):
    cat = category('A1', 2, 1)
    other = category('A1', 3, 2)

    with pytest.raises(CategoryMismatchError):
        yoneda_check(cat, 0, constant_sheaf(other, 1))


def test_extension_by_empty_is_left_adjoint_to_restriction(a1, rng):
    local = make_sheaf(a1, {0: 2}, generators={0: [SWAP]})
    extended = extend_by_empty(local)

    for _ in range(4):
        target = random_sheaf(a1, rng, max_stalk=3)
        homs = hom_set(extended, target)
        assert len(homs) == len(hom_set(local, restrict_open(target, [0])))
        for eta in homs:
            transposed = transpose_from_extension(eta, [0])
            assert is_natural(transposed)
            assert transpose_to_extension(transposed, target).components == eta.components


def test_restriction_is_left_adjoint_to_open_pushforward(a1, rng):
    local = make_sheaf(a1, {0: 2}, generators={0: [SWAP]})
    pushed = pushforward_open(local)

    for _ in range(4):
        source = random_sheaf(a1, rng, max_stalk=3)
        assert len(hom_set(source, pushed)) == len(hom_set(restrict_open(source, [0]), local))


def test_closed_restriction_is_left_adjoint_to_closed_pushforward(p1, rng):
    for _ in range(4):
        source = random_sheaf(p1, rng, max_stalk=3)
        local = make_sheaf(p1, {1: 2})
        assert len(hom_set(source, pushforward_closed(local))) == len(hom_set(restrict_closed(source, [1]), local))


def test_random_local_systems_are_isomorphic_to_themselves(a2, rng):
    for _ in range(5):
        local = random_local_system(a2, 0, rng, max_size=3)
        assert find_local_isomorphism(local, local) is not None
