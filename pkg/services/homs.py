"""Insiemi di morfismi, isomorfismi, aggiunzioni, enumerazione e Yoneda.

Tutte le ricerche sono esaustive: le mappe equivarianti tra due insiemi con
azione sono determinate dalle immagini dei rappresentanti delle orbite e
vengono propagate lungo i generatori.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from itertools import permutations, product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from services.diagnostics import CategoryMismatchError, SearchBudgetExceeded, SheafError
from services.sheaf_ops import (
    extend_by_empty,
    projection_pullback,
    pushforward_families,
    restrict,
)
from services.sheaves import (
    ConstructibleSheaf,
    Perm,
    SheafMorphism,
    StratumLocalSystem,
    compose_perms,
    domain_covers,
    identity_perm,
    invert_perm,
    is_finite_level,
    lattice_generators_from_local,
    make_sheaf,
    orbits,
    perm_order,
    perm_power,
)

LOGGER = logging.getLogger(__name__)


def _propagate(x0: int, y0: int, source_perms: Sequence[Perm], target_perms: Sequence[Perm]) -> Optional[Dict[int, int]]:
    assigned = {x0: y0}
    queue = deque([x0])
    while queue:
        x = queue.popleft()
        for source, target in zip(source_perms, target_perms):
            x_next, y_next = source[x], target[assigned[x]]
            if x_next in assigned:
                if assigned[x_next] != y_next:
                    return None
            else:
                assigned[x_next] = y_next
                queue.append(x_next)
    return assigned


def equivariant_maps(source_perms: Sequence[Perm], source_size: int,
                     target_perms: Sequence[Perm], target_size: int, *,
                     bijective: bool = False) -> List[Tuple[int, ...]]:
    """Tutte le mappe ``X → Y`` che commutano con le permutazioni accoppiate."""
    if bijective and source_size != target_size:
        return []
    per_orbit = []
    for orbit in orbits(source_size, source_perms):
        options = []
        for y in range(target_size):
            mapping = _propagate(orbit[0], y, source_perms, target_perms)
            if mapping is not None and (not bijective or len(set(mapping.values())) == len(mapping)):
                options.append(mapping)
        if not options:
            return []
        per_orbit.append(options)
    results = []
    for combination in product(*per_orbit):
        function = [0] * source_size
        for mapping in combination:
            for x, y in mapping.items():
                function[x] = y
        if bijective and len(set(function)) != source_size:
            continue
        results.append(tuple(function))
    return results


def _check_pair(first: ConstructibleSheaf, second: ConstructibleSheaf) -> None:
    if first.category is not second.category:
        raise CategoryMismatchError('I due fasci sono definiti su categorie diverse.')
    if first.objects != second.objects:
        raise CategoryMismatchError('I due fasci hanno domini diversi.')


def iter_homs(source: ConstructibleSheaf, target: ConstructibleSheaf, *,
              bijective: bool = False) -> Iterator[SheafMorphism]:
    _check_pair(source, target)
    category = source.category
    order = [s for s in category.poset.bottom_up() if s in source.carriers]
    candidates = {
        s: equivariant_maps(source.all_perms(s), source.carriers[s], target.all_perms(s),
                            target.carriers[s], bijective=bijective)
        for s in order
    }
    if any(not options for options in candidates.values()):
        return
    lowers = {s: [r for r, t in source.covers() if t == s] for s in order}
    chosen: Dict[int, Tuple[int, ...]] = {}

    def extend(index: int) -> Iterator[SheafMorphism]:
        if index == len(order):
            yield SheafMorphism(source, target, dict(chosen))
            return
        s = order[index]
        for component in candidates[s]:
            if all(
                compose_perms(target.structure[(r, s)], chosen[r])
                == compose_perms(component, source.structure[(r, s)])
                for r in lowers[s]
            ):
                chosen[s] = component
                yield from extend(index + 1)
                del chosen[s]

    yield from extend(0)


def hom_set(source: ConstructibleSheaf, target: ConstructibleSheaf) -> List[SheafMorphism]:
    """Tutte le trasformazioni naturali ``source → target``."""
    return list(iter_homs(source, target))


def find_isomorphism(first: ConstructibleSheaf, second: ConstructibleSheaf) -> Optional[SheafMorphism]:
    if any(first.carriers[s] != second.carriers.get(s) for s in first.objects):
        return None
    return next(iter_homs(first, second, bijective=True), None)


def are_isomorphic(first: ConstructibleSheaf, second: ConstructibleSheaf) -> bool:
    return find_isomorphism(first, second) is not None


def inverse_morphism(morphism: SheafMorphism) -> SheafMorphism:
    return SheafMorphism(
        morphism.target,
        morphism.source,
        {s: invert_perm(component) for s, component in morphism.components.items()},
    )


def compose_morphisms(first: SheafMorphism, second: SheafMorphism) -> SheafMorphism:
    """``second ∘ first`` per ``first: F → G`` e ``second: G → H``."""
    if first.target != second.source:
        raise CategoryMismatchError('Morfismi di fasci non componibili.')
    return SheafMorphism(
        first.source,
        second.target,
        {s: compose_perms(second.components[s], first.components[s]) for s in first.source.objects},
    )


def find_local_isomorphism(first: StratumLocalSystem, second: StratumLocalSystem) -> Optional[Tuple[int, ...]]:
    if first.stratum != second.stratum:
        raise CategoryMismatchError('Sistemi locali su strati diversi.')
    maps = equivariant_maps(
        list(first.generators) + [first.frobenius], first.size,
        list(second.generators) + [second.frobenius], second.size,
        bijective=True,
    )
    return maps[0] if maps else None


# Trasposizioni delle aggiunzioni j_! ⊣ j^* ⊣ j_* e i^* ⊣ i_*

def transpose_from_extension(morphism: SheafMorphism, open_objects: Sequence[int]) -> SheafMorphism:
    """``Hom(j_!F, G) → Hom(F, j^*G)``."""
    chosen = sorted(open_objects)
    return SheafMorphism(
        restrict(morphism.source, chosen),
        restrict(morphism.target, chosen),
        {s: morphism.components[s] for s in chosen},
    )


def transpose_to_extension(morphism: SheafMorphism, target: ConstructibleSheaf) -> SheafMorphism:
    """``Hom(F, j^*G) → Hom(j_!F, G)``: componenti vuote fuori dall'aperto."""
    source = extend_by_empty(morphism.source, target.objects)
    components = {s: morphism.components.get(s, ()) for s in target.objects}
    return SheafMorphism(source, target, components)


def transpose_from_closed_pushforward(morphism: SheafMorphism, closed_objects: Sequence[int]) -> SheafMorphism:
    """``Hom(F, i_*G) → Hom(i^*F, G)``."""
    chosen = sorted(closed_objects)
    return SheafMorphism(
        restrict(morphism.source, chosen),
        restrict(morphism.target, chosen),
        {s: morphism.components[s] for s in chosen},
    )


def transpose_to_closed_pushforward(morphism: SheafMorphism, source: ConstructibleSheaf,
                                    target: ConstructibleSheaf) -> SheafMorphism:
    """``Hom(i^*F, G) → Hom(F, i_*G)``: mappe costanti fuori dal chiuso."""
    components = {
        s: morphism.components[s] if s in morphism.components else (0,) * source.carriers[s]
        for s in source.objects
    }
    return SheafMorphism(source, target, components)


def transpose_to_pushforward_open(source: ConstructibleSheaf, morphism: SheafMorphism,
                                  pushed: ConstructibleSheaf) -> SheafMorphism:
    """``Hom(j^*F, G) → Hom(F, j_*G)`` per ``pushed = j_*G``."""
    inside = set(morphism.source.objects)
    components = {}
    for s in source.objects:
        if s in inside:
            components[s] = morphism.components[s]
            continue
        family_set = pushforward_families(morphism.target, s)
        index = family_set.index()
        maps = {t: source.structure_map(s, t) for t in family_set.components}
        components[s] = tuple(
            index[tuple(morphism.components[t][maps[t][a]] for t in family_set.components)]
            for a in range(source.carriers[s])
        )
    return SheafMorphism(source, pushed, components)


def transpose_from_pushforward_open(morphism: SheafMorphism, open_objects: Sequence[int],
                                    target: ConstructibleSheaf) -> SheafMorphism:
    """``Hom(F, j_*G) → Hom(j^*F, G)``: restrizione all'aperto."""
    chosen = sorted(open_objects)
    return SheafMorphism(restrict(morphism.source, chosen), target, {s: morphism.components[s] for s in chosen})


# Enumerazione

@dataclass
class EnumerationResult:
    representatives: List[ConstructibleSheaf]
    examined: int

    @property
    def count(self) -> int:
        return len(self.representatives)


def _local_systems(category, s: int, size: int, order_bound: Optional[int]) -> List[StratumLocalSystem]:
    rank = category.group_rank(s)
    identity = identity_perm(size)
    every = [tuple(p) for p in permutations(range(size))]
    pool = every
    if is_finite_level(category):
        pool = [p for p in every if perm_power(p, category.level) == identity]
    elif order_bound is not None:
        pool = [p for p in every if perm_order(p) <= order_bound]

    tuples: List[Tuple[Perm, ...]] = [()]
    for _ in range(rank):
        tuples = [
            existing + (p,) for existing in tuples for p in pool
            if all(compose_perms(p, q) == compose_perms(q, p) for q in existing)
        ]
    if not is_finite_level(category):
        return [StratumLocalSystem(s, size, generators, identity) for generators in tuples]

    galois = category.galois
    frobenius_pool = [p for p in every if perm_power(p, galois.galois_order) == identity]
    result = []
    for generators in tuples:
        for frob in frobenius_pool:
            inverse = invert_perm(frob)
            if all(
                compose_perms(frob, compose_perms(p, inverse)) == perm_power(p, galois.char_exponent)
                for p in generators
            ):
                result.append(StratumLocalSystem(s, size, generators, frob))
    return result


def _signature(sheaf: ConstructibleSheaf) -> Tuple:
    return tuple(
        (s, sheaf.carriers[s], tuple(sorted(len(o) for o in orbits(sheaf.carriers[s], sheaf.all_perms(s)))))
        for s in sheaf.objects
    )


def enumerate_sheaves(category, max_stalk: int, *, objects: Optional[Sequence[int]] = None,
                      order_bound: Optional[int] = None, budget: int = 200000) -> EnumerationResult:
    """Classi di isomorfismo dei fasci con supporti di cardinalità al più ``max_stalk``."""
    if max_stalk < 0:
        raise SheafError('La cardinalità massima deve essere non negativa.')
    domain = tuple(sorted(objects)) if objects is not None else tuple(category.objects)
    poset = category.poset
    order = [s for s in reversed(poset.bottom_up()) if s in set(domain)]
    covers = domain_covers(category, domain)
    uppers = {s: [t for r, t in covers if r == s] for s in domain}

    local_options = {
        s: [
            (local, lattice_generators_from_local(category, local))
            for size in range(max_stalk + 1)
            for local in _local_systems(category, s, size, order_bound)
        ]
        for s in domain
    }
    LOGGER.debug(
        'Enumerazione: %s',
        ', '.join(f'{s}: {len(options)} sistemi locali' for s, options in local_options.items()),
    )

    examined = 0
    representatives: List[ConstructibleSheaf] = []
    by_signature: Dict[Tuple, List[ConstructibleSheaf]] = {}
    carriers: Dict[int, int] = {}
    generators: Dict[int, Tuple[Perm, ...]] = {}
    frobenius: Dict[int, Perm] = {}
    structure: Dict[Tuple[int, int], Tuple[int, ...]] = {}

    def tick() -> None:
        nonlocal examined
        examined += 1
        if examined > budget:
            raise SearchBudgetExceeded(f'Superato il limite di {budget} candidati nell\'enumerazione.')

    def consistent_from(s: int) -> bool:
        reached = {s: identity_perm(carriers[s])}
        for u in reversed(order):
            if u == s or not poset.leq(s, u):
                continue
            for r in poset.lower_covers(u):
                if r in reached and (r, u) in structure:
                    candidate = compose_perms(structure[(r, u)], reached[r])
                    if u not in reached:
                        reached[u] = candidate
                    elif reached[u] != candidate:
                        return False
        return True

    def record() -> None:
        sheaf = make_sheaf(category, dict(carriers), generators=dict(generators), structure=dict(structure),
                           frobenius=dict(frobenius), validate=False)
        key = _signature(sheaf)
        for other in by_signature.get(key, []):
            if find_isomorphism(sheaf, other) is not None:
                return
        by_signature.setdefault(key, []).append(sheaf)
        representatives.append(sheaf)

    def choose_maps(s: int, targets: List[int], index: int) -> None:
        if index == len(targets):
            if consistent_from(s):
                place(order.index(s) + 1)
            return
        t = targets[index]
        source_perms = list(generators[s]) + [frobenius[s]]
        target_perms = list(generators[t]) + [frobenius[t]]
        for mapping in equivariant_maps(source_perms, carriers[s], target_perms, carriers[t]):
            tick()
            structure[(s, t)] = mapping
            choose_maps(s, targets, index + 1)
            del structure[(s, t)]

    def place(index: int) -> None:
        if index == len(order):
            record()
            return
        s = order[index]
        for local, lattice_generators in local_options[s]:
            tick()
            carriers[s] = local.size
            generators[s] = lattice_generators
            frobenius[s] = local.frobenius
            choose_maps(s, uppers[s], 0)
            del carriers[s], generators[s], frobenius[s]

    place(0)
    LOGGER.info('Enumerazione completata: %s classi, %s candidati esaminati.', len(representatives), examined)
    return EnumerationResult(representatives=representatives, examined=examined)


# Rappresentabili a livello finito

def _hom_pairs(category, s: int) -> List[Tuple[Tuple[int, ...], int]]:
    return [(m.element, m.frobenius) for m in category.hom_elements(s, s)]


def representable(category, s: int) -> ConstructibleSheaf:
    """``y_s(t) = Hom_n(s, t)`` con azione per post-composizione."""
    if not is_finite_level(category):
        raise CategoryMismatchError('Il funtore rappresentabile è definito solo a livello finito.')
    n = category.level
    galois = category.galois
    pairs = _hom_pairs(category, s)
    index = {pair: i for i, pair in enumerate(pairs)}
    shift = [category.generator_image(s, i) for i in range(category.lattice_rank)]
    lattice_generators = tuple(
        tuple(index[(tuple((a + b) % n for a, b in zip(v, step)), k)] for v, k in pairs) for step in shift
    )
    frob = tuple(index[(galois.twist(1, v), (k + 1) % galois.galois_order)] for v, k in pairs)
    star = category.poset.star(s)
    rank = category.lattice_rank
    carriers = {t: len(pairs) if t in star else 0 for t in category.objects}
    return make_sheaf(
        category,
        carriers,
        generators={t: lattice_generators if t in star else tuple(() for _ in range(rank)) for t in category.objects},
        frobenius={t: frob if t in star else () for t in category.objects},
        structure={
            (a, b): identity_perm(len(pairs)) if a in star else ()
            for a, b in domain_covers(category, category.objects)
        },
        validate=False,
    )


def regular_local_system(category, s: int) -> StratumLocalSystem:
    """``Hom_n(s, s)`` come sistema locale su ``s`` (rivestimento universale troncato)."""
    n = category.level
    galois = category.galois
    pairs = _hom_pairs(category, s)
    index = {pair: i for i, pair in enumerate(pairs)}
    rank = category.group_rank(s)
    generators = tuple(
        tuple(
            index[(tuple((x + (1 if j == i else 0)) % n for j, x in enumerate(v)), k)] for v, k in pairs
        )
        for i in range(rank)
    )
    frob = tuple(index[(galois.twist(1, v), (k + 1) % galois.galois_order)] for v, k in pairs)
    return StratumLocalSystem(stratum=s, size=len(pairs), generators=generators, frobenius=frob)


def representable_via_pullback(category, s: int) -> ConstructibleSheaf:
    """``j_! π^*`` del sistema locale regolare: deve coincidere con ``y_s``."""
    return extend_by_empty(projection_pullback(category, regular_local_system(category, s)), category.objects)


@dataclass(frozen=True)
class YonedaVerdict:
    stratum: int
    hom_count: int
    fibre_size: int
    bijective: bool


def yoneda_check(category, s: int, sheaf: ConstructibleSheaf) -> YonedaVerdict:
    """Verifica che ``η ↦ η_s(id_s)`` sia una biiezione ``Hom(y_s, F) → F(s)``."""
    if not is_finite_level(category):
        raise CategoryMismatchError('Il controllo di Yoneda richiede una categoria a livello finito.')
    if sheaf.category is not category:
        same_level = is_finite_level(sheaf.category) and sheaf.category.level == category.level
        raise CategoryMismatchError(
            'Livello del fascio diverso da quello della categoria.' if not same_level
            else 'Il fascio appartiene a un\'altra categoria.'
        )
    if sheaf.objects != tuple(sorted(category.objects)):
        raise CategoryMismatchError('Il fascio deve essere definito su tutta la categoria.')
    represented = representable(category, s)
    identity_index = _hom_pairs(category, s).index(((0,) * category.group_rank(s), 0))
    values = [eta.components[s][identity_index] for eta in iter_homs(represented, sheaf)]
    fibre = sheaf.carriers[s]
    bijective = len(values) == fibre and sorted(values) == list(range(fibre))
    return YonedaVerdict(stratum=s, hom_count=len(values), fibre_size=fibre, bijective=bijective)


__all__ = [
    'EnumerationResult',
    'YonedaVerdict',
    'are_isomorphic',
    'compose_morphisms',
    'enumerate_sheaves',
    'equivariant_maps',
    'find_isomorphism',
    'find_local_isomorphism',
    'hom_set',
    'inverse_morphism',
    'iter_homs',
    'regular_local_system',
    'representable',
    'representable_via_pullback',
    'transpose_from_closed_pushforward',
    'transpose_from_extension',
    'transpose_from_pushforward_open',
    'transpose_to_closed_pushforward',
    'transpose_to_extension',
    'transpose_to_pushforward_open',
    'yoneda_check',
]
