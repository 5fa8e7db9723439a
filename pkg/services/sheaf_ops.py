"""Calcolo dei fasci: restrizioni, estensioni, push-forward e incollamento.

I push-forward sono calcolati punto per punto come insiemi di famiglie
compatibili: per ``s`` fuori dall'aperto, ``(j_*F)(s)`` è l'insieme delle
famiglie ``(y_t)`` indicizzate dagli ``t ≥ s`` dell'aperto, con ``y_t`` fisso
sotto ``N_σs`` e compatibili con le mappe di struttura. Le famiglie sono
ordinate lessicograficamente lungo l'estensione lineare del poset, quindi gli
indici dei supporti sono deterministici.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from services.diagnostics import CategoryMismatchError, PropertyCheckFailed, SheafError
from services.fan import span_sublattice
from services.sheaves import (
    ConstructibleSheaf,
    Perm,
    SheafMorphism,
    StratumLocalSystem,
    compose_perms,
    domain_covers,
    identity_perm,
    is_convex,
    lattice_generators_from_local,
    local_system_at,
    make_sheaf,
    validate_local_system,
)

LOGGER = logging.getLogger(__name__)

Family = Tuple[int, ...]


@dataclass(frozen=True)
class FamilySet:
    """Famiglie compatibili su ``components`` (in ordine dal basso verso l'alto)."""

    components: Tuple[int, ...]
    families: Tuple[Family, ...]

    def index(self) -> Dict[Family, int]:
        return {family: i for i, family in enumerate(self.families)}

    def position(self, t: int) -> int:
        return self.components.index(t)


def _ordered(category, objects: Iterable[int]) -> List[int]:
    chosen = set(objects)
    return [u for u in category.poset.bottom_up() if u in chosen]


def compatible_families(sheaf: ConstructibleSheaf, components: Iterable[int],
                        fixed_by: Dict[int, Sequence[Perm]]) -> FamilySet:
    """Famiglie ``(y_t)`` con ``y_t`` fisso sotto ``fixed_by[t]`` e compatibili."""
    category = sheaf.category
    order = _ordered(category, components)
    position = {t: i for i, t in enumerate(order)}
    allowed = {
        t: [x for x in range(sheaf.carriers[t]) if all(perm[x] == x for perm in fixed_by.get(t, ()))]
        for t in order
    }
    allowed_sets = {t: set(values) for t, values in allowed.items()}
    lowers = {t: [r for r in category.poset.lower_covers(t) if r in position] for t in order}
    results: List[Family] = []
    partial: List[int] = []

    def extend(index: int) -> None:
        if index == len(order):
            results.append(tuple(partial))
            return
        t = order[index]
        if lowers[t]:
            forced = {sheaf.structure[(r, t)][partial[position[r]]] for r in lowers[t]}
            if len(forced) != 1:
                return
            candidates = [y for y in forced if y in allowed_sets[t]]
        else:
            candidates = allowed[t]
        for y in candidates:
            partial.append(y)
            extend(index + 1)
            partial.pop()

    extend(0)
    return FamilySet(components=tuple(order), families=tuple(sorted(results)))


def _stabilizer_perms(sheaf: ConstructibleSheaf, s: int, components: Iterable[int]) -> Dict[int, List[Perm]]:
    basis = span_sublattice(sheaf.category.fan.cone(s)).entries
    return {t: [sheaf.act(t, vector) for vector in basis] for t in components}


def pushforward_families(sheaf: ConstructibleSheaf, s: int) -> FamilySet:
    """Supporto di ``j_*F`` in ``s``: famiglie sugli oggetti del dominio sopra ``s``."""
    poset = sheaf.category.poset
    components = [t for t in sheaf.objects if poset.leq(s, t)]
    return compatible_families(sheaf, components, _stabilizer_perms(sheaf, s, components))


def _componentwise(family_set: FamilySet, perms: Dict[int, Perm]) -> Perm:
    index = family_set.index()
    return tuple(
        index[tuple(perms[t][y] for t, y in zip(family_set.components, family))]
        for family in family_set.families
    )


def family_action(sheaf: ConstructibleSheaf, family_set: FamilySet) -> Tuple[Tuple[Perm, ...], Perm]:
    rank = sheaf.category.lattice_rank
    generators = tuple(
        _componentwise(family_set, {t: sheaf.generators[t][i] for t in family_set.components})
        for i in range(rank)
    )
    frobenius = _componentwise(family_set, {t: sheaf.frobenius[t] for t in family_set.components})
    return generators, frobenius


def _check_domain(sheaf: ConstructibleSheaf, domain: Optional[Iterable[int]]) -> Tuple[int, ...]:
    category = sheaf.category
    objects = tuple(sorted(domain)) if domain is not None else tuple(category.objects)
    if not set(sheaf.objects) <= set(objects):
        raise SheafError('Il dominio di arrivo non contiene quello del fascio.')
    if not is_convex(category, objects):
        raise SheafError('Il dominio di arrivo non è convesso.')
    return objects


def _upward_closed_in(category, subset: Iterable[int], domain: Iterable[int]) -> bool:
    chosen = set(subset)
    poset = category.poset
    return all(u in chosen for s in chosen for u in domain if poset.leq(s, u))


def _downward_closed_in(category, subset: Iterable[int], domain: Iterable[int]) -> bool:
    chosen = set(subset)
    poset = category.poset
    return all(r in chosen for s in chosen for r in domain if poset.leq(r, s))


def sections(sheaf: ConstructibleSheaf, subset: Optional[Iterable[int]] = None) -> FamilySet:
    """Sezioni su un aperto: famiglie di punti fissi compatibili."""
    chosen = list(sheaf.objects) if subset is None else sorted(set(subset))
    if not set(chosen) <= set(sheaf.objects):
        raise SheafError('L\'aperto richiesto esce dal dominio del fascio.')
    if not _upward_closed_in(sheaf.category, chosen, sheaf.objects):
        raise SheafError(f'L\'insieme {chosen} non è chiuso verso l\'alto.')
    fixed = {t: sheaf.all_perms(t) for t in chosen}
    return compatible_families(sheaf, chosen, fixed)


def restrict(sheaf: ConstructibleSheaf, objects: Iterable[int]) -> ConstructibleSheaf:
    chosen = tuple(sorted(set(objects)))
    if not set(chosen) <= set(sheaf.objects):
        raise SheafError('La restrizione esce dal dominio del fascio.')
    if not is_convex(sheaf.category, chosen):
        raise SheafError('Il sottoinsieme di restrizione non è convesso.')
    covers = domain_covers(sheaf.category, chosen)
    return ConstructibleSheaf(
        category=sheaf.category,
        objects=chosen,
        carriers={s: sheaf.carriers[s] for s in chosen},
        generators={s: sheaf.generators[s] for s in chosen},
        frobenius={s: sheaf.frobenius[s] for s in chosen},
        structure={cover: sheaf.structure[cover] for cover in covers},
    )


def restrict_open(sheaf: ConstructibleSheaf, subset: Iterable[int]) -> ConstructibleSheaf:
    """``j^*``: restrizione a un insieme chiuso verso l'alto."""
    chosen = set(subset)
    if not _upward_closed_in(sheaf.category, chosen, sheaf.objects):
        raise SheafError(f'L\'insieme {sorted(chosen)} non è aperto.')
    return restrict(sheaf, chosen)


def restrict_closed(sheaf: ConstructibleSheaf, subset: Iterable[int]) -> ConstructibleSheaf:
    """``i^*``: restrizione a un insieme chiuso verso il basso."""
    chosen = set(subset)
    if not _downward_closed_in(sheaf.category, chosen, sheaf.objects):
        raise SheafError(f'L\'insieme {sorted(chosen)} non è chiuso.')
    return restrict(sheaf, chosen)


def extend_by_empty(sheaf: ConstructibleSheaf, domain: Optional[Iterable[int]] = None) -> ConstructibleSheaf:
    """``j_!``: insieme vuoto fuori dall'aperto."""
    category = sheaf.category
    objects = _check_domain(sheaf, domain)
    if not _upward_closed_in(category, sheaf.objects, objects):
        raise SheafError('Il dominio del fascio non è aperto nel dominio di arrivo.')
    rank = category.lattice_rank
    carriers = {s: sheaf.carriers.get(s, 0) for s in objects}
    generators = {s: sheaf.generators.get(s, tuple(() for _ in range(rank))) for s in objects}
    frobenius = {s: sheaf.frobenius.get(s, ()) for s in objects}
    structure = {
        cover: sheaf.structure.get(cover, ()) for cover in domain_covers(category, objects)
    }
    return make_sheaf(category, carriers, generators=generators, structure=structure,
                      frobenius=frobenius, validate=False)


def _assert_lift_independent(sheaf: ConstructibleSheaf, s: int, family_set: FamilySet) -> None:
    basis = span_sublattice(sheaf.category.fan.cone(s)).entries
    for vector in basis:
        for family in family_set.families:
            moved = tuple(sheaf.act(t, vector)[y] for t, y in zip(family_set.components, family))
            if moved != family:
                raise PropertyCheckFailed(
                    f'L\'azione residua su (j_*F)({s}) dipende dal sollevamento scelto.'
                )


def pushforward_open(sheaf: ConstructibleSheaf, domain: Optional[Iterable[int]] = None, *,
                     check_lifts: bool = True) -> ConstructibleSheaf:
    """``j_*`` lungo l'inclusione di un aperto."""
    category = sheaf.category
    objects = _check_domain(sheaf, domain)
    if not _upward_closed_in(category, sheaf.objects, objects):
        raise SheafError('Il dominio del fascio non è aperto nel dominio di arrivo.')
    inside = set(sheaf.objects)
    carriers, generators, frobenius = {}, {}, {}
    family_sets: Dict[int, FamilySet] = {}
    for s in objects:
        if s in inside:
            carriers[s] = sheaf.carriers[s]
            generators[s] = sheaf.generators[s]
            frobenius[s] = sheaf.frobenius[s]
            continue
        family_set = pushforward_families(sheaf, s)
        if check_lifts:
            _assert_lift_independent(sheaf, s, family_set)
        family_sets[s] = family_set
        carriers[s] = len(family_set.families)
        generators[s], frobenius[s] = family_action(sheaf, family_set)
        LOGGER.debug('j_* in %s: %s famiglie su %s componenti.', s, carriers[s], len(family_set.components))

    structure = {}
    for s, u in domain_covers(category, objects):
        if s in inside:
            structure[(s, u)] = sheaf.structure[(s, u)]
        elif u in inside:
            position = family_sets[s].position(u)
            structure[(s, u)] = tuple(family[position] for family in family_sets[s].families)
        else:
            source, target = family_sets[s], family_sets[u]
            positions = [source.position(t) for t in target.components]
            index = target.index()
            structure[(s, u)] = tuple(
                index[tuple(family[p] for p in positions)] for family in source.families
            )
    return make_sheaf(category, carriers, generators=generators, structure=structure,
                      frobenius=frobenius, validate=False)


def pushforward_closed(sheaf: ConstructibleSheaf, domain: Optional[Iterable[int]] = None) -> ConstructibleSheaf:
    """``i_*``: singoletto (limite vuoto) fuori dal chiuso."""
    category = sheaf.category
    objects = _check_domain(sheaf, domain)
    if not _downward_closed_in(category, sheaf.objects, objects):
        raise SheafError('Il dominio del fascio non è chiuso nel dominio di arrivo.')
    rank = category.lattice_rank
    inside = set(sheaf.objects)
    carriers = {s: sheaf.carriers[s] if s in inside else 1 for s in objects}
    generators = {
        s: sheaf.generators[s] if s in inside else tuple((0,) for _ in range(rank)) for s in objects
    }
    frobenius = {s: sheaf.frobenius[s] if s in inside else (0,) for s in objects}
    structure = {}
    for s, u in domain_covers(category, objects):
        if u in inside:
            structure[(s, u)] = sheaf.structure[(s, u)]
        else:
            structure[(s, u)] = (0,) * carriers[s]
    return make_sheaf(category, carriers, generators=generators, structure=structure,
                      frobenius=frobenius, validate=False)


def projection_pullback(category, local: StratumLocalSystem) -> ConstructibleSheaf:
    """``π^*``: il sistema locale trasportato su tutta la stella di ``s``."""
    star = category.poset.star(local.stratum)
    generators = lattice_generators_from_local(category, local)
    return make_sheaf(
        category,
        {t: local.size for t in star},
        generators={t: generators for t in star},
        frobenius={t: local.frobenius for t in star},
        structure={cover: identity_perm(local.size) for cover in domain_covers(category, star)},
        validate=False,
    )


def projection_pushforward(sheaf: ConstructibleSheaf, s: Optional[int] = None) -> StratumLocalSystem:
    """``π_*``: limite sulla stella, confrontato con la fibra ``F_s``."""
    category = sheaf.category
    if s is None:
        minimal = [t for t in sheaf.objects if all(not category.poset.leq(u, t) or u == t for u in sheaf.objects)]
        if len(minimal) != 1:
            raise SheafError('Il dominio del fascio non è la stella di un solo strato.')
        s = minimal[0]
    if set(sheaf.objects) != set(category.poset.star(s)):
        raise SheafError(f'Il dominio del fascio non è la stella di {s}.')
    family_set = pushforward_families(sheaf, s)
    rank = category.group_rank(s)
    lifts = [category.lift(s, tuple(1 if j == i else 0 for j in range(rank))) for i in range(rank)]
    generators = tuple(
        _componentwise(family_set, {t: sheaf.act(t, lift) for t in family_set.components}) for lift in lifts
    )
    frobenius = _componentwise(family_set, {t: sheaf.frobenius[t] for t in family_set.components})
    result = StratumLocalSystem(stratum=s, size=len(family_set.families), generators=generators, frobenius=frobenius)

    fibre = local_system_at(sheaf, s)
    position = family_set.position(s)
    evaluation = tuple(family[position] for family in family_set.families)
    if sorted(evaluation) != list(range(fibre.size)):
        raise PropertyCheckFailed(f'π_*F non è in biiezione con F_{s}.')
    for mine, theirs in zip(list(result.generators) + [result.frobenius], list(fibre.generators) + [fibre.frobenius]):
        if compose_perms(evaluation, mine) != compose_perms(theirs, evaluation):
            raise PropertyCheckFailed(f'Il confronto π_*F → F_{s} non è equivariante.')
    return result


@dataclass(frozen=True)
class Recollement:
    """Dati di incollamento: parte aperta, fibra chiusa e mappa di confronto."""

    open_part: ConstructibleSheaf
    closed_part: StratumLocalSystem
    theta: Tuple[int, ...]


def decompose(sheaf: ConstructibleSheaf, z: int) -> Recollement:
    category = sheaf.category
    if z not in sheaf.carriers:
        raise SheafError(f'Lo strato {z} non appartiene al dominio del fascio.')
    if any(category.poset.leq(u, z) and u != z for u in sheaf.objects):
        raise SheafError(f'Lo strato {z} non è minimale nel dominio del fascio.')
    open_part = restrict(sheaf, [t for t in sheaf.objects if t != z])
    family_set = pushforward_families(open_part, z)
    index = family_set.index()
    maps = {t: sheaf.structure_map(z, t) for t in family_set.components}
    theta = tuple(
        index[tuple(maps[t][a] for t in family_set.components)] for a in range(sheaf.carriers[z])
    )
    return Recollement(open_part=open_part, closed_part=local_system_at(sheaf, z), theta=theta)


def glue(open_part: ConstructibleSheaf, closed_part: StratumLocalSystem, theta: Sequence[int]) -> ConstructibleSheaf:
    """Ricostruisce il fascio su ``U ∪ {z}`` a partire dai dati di incollamento."""
    category = open_part.category
    z = closed_part.stratum
    if z not in category.objects:
        raise SheafError(f'Lo strato {z} non appartiene alla categoria.')
    report = validate_local_system(category, closed_part)
    if not report.valid:
        raise SheafError(f'Parte chiusa non valida: {report.first().message}', report=report)
    if z in open_part.carriers:
        raise SheafError(f'Lo strato {z} appartiene già alla parte aperta.')
    objects = tuple(sorted(set(open_part.objects) | {z}))
    if not is_convex(category, objects) or not _upward_closed_in(category, open_part.objects, objects):
        raise SheafError(f'Lo strato {z} non è un chiuso minimale del dominio incollato.')
    theta = tuple(theta)
    family_set = pushforward_families(open_part, z)
    if len(theta) != closed_part.size or any(not 0 <= x < len(family_set.families) for x in theta):
        raise SheafError('La mappa di confronto non ha dominio o codominio corretti.')

    generators = lattice_generators_from_local(category, closed_part)
    target_generators, target_frobenius = family_action(open_part, family_set)
    for mine, theirs in zip(list(generators) + [closed_part.frobenius], list(target_generators) + [target_frobenius]):
        if compose_perms(theta, mine) != compose_perms(theirs, theta):
            raise SheafError('La mappa di confronto non è equivariante.')

    carriers = dict(open_part.carriers)
    carriers[z] = closed_part.size
    all_generators = dict(open_part.generators)
    all_generators[z] = generators
    frobenius = dict(open_part.frobenius)
    frobenius[z] = closed_part.frobenius
    structure = dict(open_part.structure)
    for t in category.poset.upper_covers(z):
        if t in open_part.carriers:
            position = family_set.position(t)
            structure[(z, t)] = tuple(family_set.families[x][position] for x in theta)
    return make_sheaf(category, carriers, generators=all_generators, structure=structure,
                      frobenius=frobenius, validate=False)


def _same_shape(sheaves: Sequence[ConstructibleSheaf]) -> None:
    first = sheaves[0]
    for other in sheaves[1:]:
        if other.objects != first.objects or other.category is not first.category:
            raise CategoryMismatchError('I fasci del diagramma vivono su domini o categorie diversi.')


def finite_limit(sheaves: Sequence[ConstructibleSheaf],
                 arrows: Sequence[Tuple[int, int, SheafMorphism]] = ()) -> ConstructibleSheaf:
    """Limite puntuale di un diagramma finito (prodotti, equalizzatori, fibrati)."""
    if not sheaves:
        raise SheafError('Il diagramma vuoto richiede una categoria: usare terminal_sheaf.')
    _same_shape(sheaves)
    for source, target, morphism in arrows:
        if morphism.source is not sheaves[source] and morphism.source != sheaves[source]:
            raise CategoryMismatchError(f'La freccia {source}→{target} non parte dal fascio {source}.')
    first = sheaves[0]
    category = first.category
    rank = category.lattice_rank

    element_sets: Dict[int, List[Tuple[int, ...]]] = {}
    for s in first.objects:
        elements = []
        for candidate in product(*(range(sheaf.carriers[s]) for sheaf in sheaves)):
            if all(m.components[s][candidate[i]] == candidate[j] for i, j, m in arrows):
                elements.append(candidate)
        element_sets[s] = elements

    def lookup(s: int) -> Dict[Tuple[int, ...], int]:
        return {element: i for i, element in enumerate(element_sets[s])}

    indices = {s: lookup(s) for s in first.objects}
    generators, frobenius = {}, {}
    for s in first.objects:
        generators[s] = tuple(
            tuple(
                indices[s][tuple(sheaf.generators[s][i][x] for sheaf, x in zip(sheaves, element))]
                for element in element_sets[s]
            )
            for i in range(rank)
        )
        frobenius[s] = tuple(
            indices[s][tuple(sheaf.frobenius[s][x] for sheaf, x in zip(sheaves, element))]
            for element in element_sets[s]
        )
    structure = {
        (s, t): tuple(
            indices[t][tuple(sheaf.structure[(s, t)][x] for sheaf, x in zip(sheaves, element))]
            for element in element_sets[s]
        )
        for s, t in first.covers()
    }
    return make_sheaf(category, {s: len(element_sets[s]) for s in first.objects}, generators=generators,
                      structure=structure, frobenius=frobenius, validate=False)


def sheaf_product(*sheaves: ConstructibleSheaf) -> ConstructibleSheaf:
    return finite_limit(sheaves)


def equalizer(first: SheafMorphism, second: SheafMorphism) -> ConstructibleSheaf:
    return finite_limit([first.source, first.target], [(0, 1, first), (0, 1, second)])


def coproduct(*sheaves: ConstructibleSheaf) -> ConstructibleSheaf:
    """Unione disgiunta oggetto per oggetto."""
    if not sheaves:
        raise SheafError('Il coprodotto vuoto richiede una categoria: usare initial_sheaf.')
    _same_shape(sheaves)
    first = sheaves[0]
    rank = first.category.lattice_rank

    def shifted(perms: Sequence[Sequence[int]], targets: Sequence[int]) -> Tuple[int, ...]:
        result: List[int] = []
        for perm, offset in zip(perms, targets):
            result.extend(offset + x for x in perm)
        return tuple(result)

    offsets = {}
    for s in first.objects:
        running, values = 0, []
        for sheaf in sheaves:
            values.append(running)
            running += sheaf.carriers[s]
        offsets[s] = values
    carriers = {s: sum(sheaf.carriers[s] for sheaf in sheaves) for s in first.objects}
    generators = {
        s: tuple(shifted([sheaf.generators[s][i] for sheaf in sheaves], offsets[s]) for i in range(rank))
        for s in first.objects
    }
    frobenius = {s: shifted([sheaf.frobenius[s] for sheaf in sheaves], offsets[s]) for s in first.objects}
    structure = {
        (s, t): shifted([sheaf.structure[(s, t)] for sheaf in sheaves], offsets[t])
        for s, t in first.covers()
    }
    return make_sheaf(first.category, carriers, generators=generators, structure=structure,
                      frobenius=frobenius, validate=False)


def coproduct_of_local_systems(*systems: StratumLocalSystem) -> StratumLocalSystem:
    if not systems:
        raise SheafError('Serve almeno un sistema locale.')
    stratum = systems[0].stratum
    if any(local.stratum != stratum for local in systems):
        raise CategoryMismatchError('I sistemi locali vivono su strati diversi.')
    offsets, running = [], 0
    for local in systems:
        offsets.append(running)
        running += local.size

    def shifted(perms: Sequence[Sequence[int]]) -> Tuple[int, ...]:
        return tuple(offset + x for perm, offset in zip(perms, offsets) for x in perm)

    rank = len(systems[0].generators)
    return StratumLocalSystem(
        stratum=stratum,
        size=running,
        generators=tuple(shifted([local.generators[i] for local in systems]) for i in range(rank)),
        frobenius=shifted([local.frobenius for local in systems]),
    )


__all__ = [
    'Family',
    'FamilySet',
    'Recollement',
    'compatible_families',
    'coproduct',
    'coproduct_of_local_systems',
    'decompose',
    'equalizer',
    'extend_by_empty',
    'family_action',
    'finite_limit',
    'glue',
    'projection_pullback',
    'projection_pushforward',
    'pushforward_closed',
    'pushforward_families',
    'pushforward_open',
    'restrict',
    'restrict_closed',
    'restrict_open',
    'sections',
    'sheaf_product',
]
