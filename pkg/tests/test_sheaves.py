from __future__ import annotations

import pytest

from services.diagnostics import CategoryMismatchError, SheafError
from services.fundcat import Morphism
from services.sheaves import (
    SheafMorphism,
    StratumLocalSystem,
    compose_perms,
    constant_sheaf,
    evaluate,
    identity_morphism,
    initial_sheaf,
    invert_perm,
    is_convex,
    is_natural,
    lattice_generators_from_local,
    local_system_at,
    local_system_from_lattice,
    make_sheaf,
    orbits,
    perm_order,
    perm_power,
    terminal_sheaf,
    validate_local_system,
    validate_sheaf,
)

SWAP = (1, 0)
CYCLE = (1, 2, 0)


def test_permutation_helpers():
    assert compose_perms((1, 0, 2), (0, 2, 1)) == (1, 2, 0)
    assert perm_order((1, 2, 0, 4, 3)) == 6
    assert perm_power(CYCLE, 2) == (2, 0, 1)
    assert perm_power(CYCLE, -1) == invert_perm(CYCLE)
    assert perm_power(CYCLE, 3) == (0, 1, 2)
    assert orbits(5, [(1, 0, 2, 3, 4), (0, 1, 3, 2, 4)]) == [(0, 1), (2, 3), (4,)]
    assert orbits(0, []) == []


def test_constant_terminal_and_initial_sheaves(a2):
    constant = constant_sheaf(a2, 2)
    assert constant.objects == (0, 1, 2, 3)
    assert all(constant.size(s) == 2 for s in constant.objects)
    assert constant.structure_map(3, 0) == (0, 1)

    terminal = terminal_sheaf(a2)
    assert all(terminal.size(s) == 1 for s in terminal.objects)

    initial = initial_sheaf(a2)
    assert all(initial.size(s) == 0 for s in initial.objects)
    assert initial.structure[(3, 1)] == ()
    assert validate_sheaf(initial).valid


def test_sheaf_with_nontrivial_monodromy_on_the_torus(a1):
    sheaf = make_sheaf(a1, {0: 2, 1: 0}, generators={0: [SWAP]})

    assert sheaf.structure[(1, 0)] == ()
    assert evaluate(sheaf, a1.morphism(0, 0, (1,))) == SWAP
    assert evaluate(sheaf, a1.morphism(0, 0, (2,))) == (0, 1)
    local = local_system_at(sheaf, 0)
    assert local.generators == (SWAP,)
    assert lattice_generators_from_local(a1, local) == (SWAP,)


def test_evaluate_rejects_bad_morphisms(a1):
    sheaf = constant_sheaf(a1, 2)

    with pytest.raises(CategoryMismatchError):
        evaluate(sheaf, Morphism(0, 1, (), 0))
    with pytest.raises(CategoryMismatchError):
        evaluate(sheaf, Morphism(0, 0, (1, 1), 0))
    with pytest.raises(CategoryMismatchError):
        evaluate(sheaf, Morphism(0, 0, (1,), 1))
    with pytest.raises(SheafError):
        make_sheaf(a1, {0: 2}).size(1)


def test_non_equivariant_structure_map_is_rejected(a1):
    with pytest.raises(SheafError):
        make_sheaf(a1, {0: 2, 1: 1}, generators={0: [SWAP]}, structure={(1, 0): (0,)})

    sheaf = make_sheaf(a1, {0: 2, 1: 1}, generators={0: [SWAP]}, structure={(1, 0): (0,)}, validate=False)
    assert 'not-equivariant' in validate_sheaf(sheaf).codes()


def test_missing_structure_map_is_reported(a1):
    sheaf = make_sheaf(a1, {0: 2, 1: 1}, validate=False)

    assert validate_sheaf(sheaf).codes() == ['bad-structure-map']


def test_action_must_factor_through_the_stratum_group(a1):
    sheaf = make_sheaf(a1, {1: 2}, generators={1: [SWAP]}, validate=False)

    assert 'action-not-factoring' in validate_sheaf(sheaf).codes()


@pytest.mark.parametrize(
    'carriers, generators, frobenius, code',
    [
        ({5: 1}, None, None, 'unknown-object'),
        ({0: 2}, {0: [(0, 0)]}, None, 'bad-permutation'),
        ({0: 2}, None, {0: SWAP}, 'frobenius-order'),
    ],
)
def test_local_validation_codes(a1, carriers, generators, frobenius, code):
    sheaf = make_sheaf(a1, carriers, generators=generators, frobenius=frobenius, validate=False)

    assert code in validate_sheaf(sheaf).codes()


def test_generators_must_commute(a2):
    sheaf = make_sheaf(a2, {0: 3}, generators={0: [(1, 0, 2), (0, 2, 1)]}, validate=False)

    assert 'actions-not-commuting' in validate_sheaf(sheaf).codes()


def test_domain_must_be_convex(a2):
    assert not is_convex(a2, [3, 0])
    assert is_convex(a2, [1, 3])
    sheaf = make_sheaf(a2, {3: 1, 0: 1}, validate=False)
    assert validate_sheaf(sheaf).codes() == ['domain-not-convex']


def test_diamonds_must_commute(a2):
    sheaf = make_sheaf(
        a2,
        {0: 2, 1: 1, 2: 1, 3: 1},
        structure={(1, 0): (0,), (2, 0): (1,), (3, 1): (0,), (3, 2): (0,)},
        validate=False,
    )

    assert validate_sheaf(sheaf).codes() == ['diamond-not-commuting']


def test_frobenius_must_twist_the_monodromy(category):
    cat = category('A1', 3, 2)
    frobenius = (0, 2, 1)

    sheaf = make_sheaf(cat, {0: 3, 1: 0}, generators={0: [CYCLE]}, frobenius={0: frobenius})
    assert evaluate(sheaf, cat.morphism(0, 0, (0,), 1)) == frobenius

    untwisted = make_sheaf(cat, {0: 3, 1: 0}, generators={0: [CYCLE]}, validate=False)
    assert 'frobenius-twist' in validate_sheaf(untwisted).codes()


def test_monodromy_order_must_divide_the_level(category):
    cat = category('A1', 2, 1)
    sheaf = make_sheaf(cat, {0: 3}, generators={0: [CYCLE]}, validate=False)

    assert 'level-order' in validate_sheaf(sheaf).codes()


def test_local_system_validation(a1, a2):
    assert validate_local_system(a1, StratumLocalSystem(0, 2, (SWAP,), (0, 1))).valid
    assert validate_local_system(a1, StratumLocalSystem(0, 2, (), (0, 1))).codes() == ['bad-rank']

    local = local_system_from_lattice(a2, 1, 2, [(0, 1), SWAP], (0, 1))
    assert local.generators == (SWAP,)
    assert validate_local_system(a2, local).valid


def test_naturality(a1):
    constant = constant_sheaf(a1, 2)
    terminal = terminal_sheaf(a1)

    assert is_natural(identity_morphism(constant))
    assert is_natural(SheafMorphism(constant, terminal, {0: (0, 0), 1: (0, 0)}))
    assert is_natural(SheafMorphism(constant, constant, {0: SWAP, 1: SWAP}))
    assert not is_natural(SheafMorphism(constant, constant, {0: SWAP, 1: (0, 1)}))
    assert not is_natural(SheafMorphism(constant, terminal, {0: (0, 0)}))
