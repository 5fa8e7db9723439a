from __future__ import annotations

import pytest

from services.diagnostics import SheafError
from services.sampling import random_gluing_data, random_local_system, random_sheaf
from services.sheaf_ops import (
    Recollement,
    coproduct,
    coproduct_of_local_systems,
    decompose,
    equalizer,
    extend_by_empty,
    glue,
    projection_pullback,
    projection_pushforward,
    pushforward_closed,
    pushforward_open,
    restrict_closed,
    restrict_open,
    sections,
    sheaf_product,
)
from services.sheaves import (
    SheafMorphism,
    StratumLocalSystem,
    constant_sheaf,
    identity_morphism,
    make_sheaf,
    terminal_sheaf,
    validate_sheaf,
)

SWAP = (1, 0)


@pytest.fixture
def square_on_torus(a1):
    # Rivestimento z ↦ z² del toro: la monodromia scambia i due fogli
    return make_sheaf(a1, {0: 2}, generators={0: [SWAP]})


def test_sections_are_compatible_fixed_families(a1, a2, square_on_torus):
    assert len(sections(constant_sheaf(a1, 2)).families) == 2
    assert len(sections(square_on_torus).families) == 0
    assert len(sections(constant_sheaf(a2, 3), [0, 1]).families) == 3
    with pytest.raises(SheafError):
        sections(constant_sheaf(a1, 2), [1])


def test_restrictions_check_openness(a2):
    sheaf = constant_sheaf(a2, 2)

    assert restrict_open(sheaf, [0, 2]).objects == (0, 2)
    assert restrict_closed(sheaf, [1, 3]).objects == (1, 3)
    with pytest.raises(SheafError):
        restrict_open(sheaf, [1, 3])
    with pytest.raises(SheafError):
        restrict_closed(sheaf, [0, 2])


def test_pushforward_of_the_square_cover_has_empty_stalk(square_on_torus):
    pushed = pushforward_open(square_on_torus)

    assert pushed.carriers == {0: 2, 1: 0}
    assert validate_sheaf(pushed).valid
    assert extend_by_empty(square_on_torus).carriers == {0: 2, 1: 0}


def test_pushforward_of_constant_sheaf_is_constant(a1, p1):
    assert pushforward_open(constant_sheaf(a1, 2, [0])) == constant_sheaf(a1, 2)
    assert pushforward_open(terminal_sheaf(p1, [0])) == terminal_sheaf(p1)


def test_pushforward_on_projective_line(p1):
    sheaf = make_sheaf(p1, {0: 2}, generators={0: [SWAP]})
    pushed = pushforward_open(sheaf)

    assert pushed.carriers == {0: 2, 1: 0, 2: 0}
    assert validate_sheaf(pushed).valid


def test_extension_by_empty_vanishes_off_the_open(a2):
    extended = extend_by_empty(constant_sheaf(a2, 2, [0]))

    assert extended.carriers == {0: 2, 1: 0, 2: 0, 3: 0}
    assert validate_sheaf(extended).valid
    with pytest.raises(SheafError):
        extend_by_empty(constant_sheaf(a2, 2, [1]))


def test_closed_pushforward_is_a_point_off_the_closed(a1):
    local = make_sheaf(a1, {1: 3})
    pushed = pushforward_closed(local)

    assert pushed.carriers == {0: 1, 1: 3}
    assert pushed.structure[(1, 0)] == (0, 0, 0)
    assert validate_sheaf(pushed).valid
    with pytest.raises(SheafError):
        pushforward_closed(constant_sheaf(a1, 2, [0]))


@pytest.mark.parametrize('name, z', [('A1', 1), ('A2', 3), ('P1', 1), ('P2', 4)])
def test_decompose_then_glue_gives_back_the_sheaf(category, rng, name, z):
    cat = category(name)

    for _ in range(5):
        sheaf = random_sheaf(cat, rng, max_stalk=3)
        assert validate_sheaf(sheaf).valid
        if any(cat.poset.leq(u, z) and u != z for u in sheaf.objects):
            continue
        data = decompose(sheaf, z)
        assert glue(data.open_part, data.closed_part, data.theta) == sheaf


@pytest.mark.parametrize('name, z', [('A1', 1), ('A2', 3), ('P2', 4)])
def test_glue_then_decompose_recovers_independent_data(category, rng, name, z):
    cat = category(name)
    opened = [t for t in cat.objects if t != z]

    for _ in range(5):
        open_part = random_sheaf(cat, rng, max_stalk=3, objects=opened)
        closed_part, theta = random_gluing_data(open_part, z, rng, max_stalk=3)
        glued = glue(open_part, closed_part, theta)

        assert validate_sheaf(glued).valid
        assert decompose(glued, z) == Recollement(open_part, closed_part, tuple(theta))


def test_decompose_requires_a_minimal_stratum(a2):
    with pytest.raises(SheafError):
        decompose(constant_sheaf(a2, 1), 1)


def test_glue_rejects_non_equivariant_comparison(a1, square_on_torus):
    fibre = StratumLocalSystem(stratum=1, size=1, generators=(), frobenius=(0,))

    with pytest.raises(SheafError):
        glue(square_on_torus, fibre, (0,))
    glued = glue(constant_sheaf(a1, 2, [0]), fibre, (1,))
    assert glued.structure[(1, 0)] == (1,)
    assert validate_sheaf(glued).valid


def test_glue_rejects_closed_part_with_non_commuting_actions(a2):
    empty = make_sheaf(a2, {}, validate=False)
    fibre = StratumLocalSystem(stratum=0, size=3, generators=((1, 0, 2), (0, 2, 1)), frobenius=(0, 1, 2))

    with pytest.raises(SheafError) as excinfo:
        glue(empty, fibre, (0, 0, 0))
    assert excinfo.value.report.codes() == ['actions-not-commuting']


def test_glue_rejects_closed_part_without_frobenius_twist(category):
    cat = category('A1', 3, 2)
    empty = make_sheaf(cat, {}, validate=False)
    fibre = StratumLocalSystem(stratum=0, size=3, generators=((1, 2, 0),), frobenius=(0, 1, 2))

    with pytest.raises(SheafError) as excinfo:
        glue(empty, fibre, (0, 0, 0))
    assert 'frobenius-twist' in excinfo.value.report.codes()
    twisted = StratumLocalSystem(stratum=0, size=3, generators=((1, 2, 0),), frobenius=(0, 2, 1))
    assert validate_sheaf(glue(empty, twisted, (0, 0, 0))).valid


@pytest.mark.parametrize('s', [0, 1, 3])
def test_projection_pushforward_recovers_the_local_system(a2, rng, s):
    for _ in range(5):
        local = random_local_system(a2, s, rng, max_size=4)
        pulled = projection_pullback(a2, local)

        assert pulled.objects == tuple(sorted(a2.poset.star(s)))
        assert validate_sheaf(pulled).valid
        assert projection_pushforward(pulled) == local


def test_projection_pushforward_needs_a_star(a2):
    with pytest.raises(SheafError):
        projection_pushforward(constant_sheaf(a2, 1, [0, 1, 2]))


def test_products_and_coproducts_are_pointwise(a2):
    two, three = constant_sheaf(a2, 2), constant_sheaf(a2, 3)

    product = sheaf_product(two, three)
    assert all(product.size(s) == 6 for s in product.objects)
    assert validate_sheaf(product).valid

    union = coproduct(two, three)
    assert all(union.size(s) == 5 for s in union.objects)
    assert validate_sheaf(union).valid
    assert len(sections(union).families) == 5


def test_coproduct_of_local_systems_shifts_indices():
    first = StratumLocalSystem(0, 2, (SWAP,), (0, 1))
    second = StratumLocalSystem(0, 1, ((0,),), (0,))

    union = coproduct_of_local_systems(first, second)
    assert union.size == 3
    assert union.generators == ((1, 0, 2),)
    assert union.frobenius == (0, 1, 2)


def test_equalizer(a1):
    sheaf = constant_sheaf(a1, 2)
    swap = SheafMorphism(sheaf, sheaf, {0: SWAP, 1: SWAP})

    assert equalizer(identity_morphism(sheaf), swap).carriers == {0: 0, 1: 0}
    assert equalizer(identity_morphism(sheaf), identity_morphism(sheaf)).carriers == {0: 2, 1: 2}
