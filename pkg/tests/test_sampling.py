from __future__ import annotations

import random

import pytest

from services.sampling import (
    TwistedGroup,
    coset_space,
    random_gluing_data,
    random_local_system,
    random_sheaf,
)
from services.sheaf_ops import glue
from services.sheaves import make_sheaf, orbits, perm_order, validate_local_system, validate_sheaf


def test_twisted_group_multiplication():
    group = TwistedGroup(1, 3, twist=2, galois_order=2)
    (one,) = group.basis()
    frobenius = group.frobenius()

    assert group.order == 6
    assert group.multiply(frobenius, one) == ((2,), 1)
    assert group.multiply(one, frobenius) == ((1,), 1)
    assert len(group.subgroup([one, frobenius])) == 6
    assert group.subgroup([]) == frozenset({group.identity})


def test_coset_spaces_of_a_cyclic_group():
    group = TwistedGroup(1, 4)

    representatives, basis, frobenius = coset_space(group, group.subgroup([]))
    assert representatives == [((0,), 0), ((1,), 0), ((2,), 0), ((3,), 0)]
    assert basis == ((1, 2, 3, 0),)
    assert frobenius == (0, 1, 2, 3)

    representatives, basis, _ = coset_space(group, group.subgroup([((2,), 0)]))
    assert len(representatives) == 2
    assert basis == ((1, 0),)


def test_stalks_can_wind_around_an_orbit(a2):
    # Sul toro il secondo generatore scambia due punti, il raggio 1 agisce banalmente
    open_part = make_sheaf(a2, {0: 2}, generators={0: [(0, 1), (1, 0)]})
    rng = random.Random(5)

    wound = 0
    for _ in range(400):
        local, theta = random_gluing_data(open_part, 1, rng, max_stalk=4)
        assert validate_local_system(a2, local).valid
        assert validate_sheaf(glue(open_part, local, theta)).valid
        if local.size == 4 and perm_order(local.generators[0]) == 4:
            wound += 1
    assert wound > 0


def test_local_systems_are_not_only_cyclic(a2):
    rng = random.Random(3)

    klein = 0
    for _ in range(400):
        local = random_local_system(a2, 0, rng, max_size=4)
        assert validate_local_system(a2, local).valid
        if (
            local.size == 4
            and len(orbits(local.size, local.generators)) == 1
            and all(perm_order(g) == 2 for g in local.generators)
        ):
            klein += 1
    assert klein > 0


@pytest.mark.parametrize('name, level, frob', [('A1', 3, 2), ('P1', 4, 3), ('A2', 2, 1)])
def test_random_sheaves_at_finite_level_are_valid(category, rng, name, level, frob):
    cat = category(name, level, frob)

    for _ in range(10):
        sheaf = random_sheaf(cat, rng, max_stalk=4)
        assert validate_sheaf(sheaf).valid
        assert all(size <= 4 for size in sheaf.carriers.values())


@pytest.mark.parametrize('name', ['A1', 'A2', 'P1', 'P2'])
def test_random_sheaves_respect_the_stalk_bound(category, rng, name):
    cat = category(name)

    for _ in range(10):
        sheaf = random_sheaf(cat, rng, max_stalk=3)
        assert validate_sheaf(sheaf).valid
        assert max(sheaf.carriers.values()) <= 3
