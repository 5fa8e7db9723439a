"""Fasci costruibili come funtori sulla categoria fondamentale.

Un fascio assegna a ogni oggetto ``s`` del suo dominio un insieme finito
``{0, ..., k-1}``, una permutazione per ciascun vettore della base standard
di ``N`` (notazione a una riga), una permutazione di Frobenius (l'identità a
livello infinito) e, per ogni coppia di copertura ``s ⋖ t`` del dominio, una
funzione ``F_s → F_t`` data come lista di indici.

Il dominio è un sottoinsieme convesso del poset (aperti, chiusi e stelle lo
sono); tutte le operazioni accettano insiemi vuoti.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from math import lcm
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from services.diagnostics import CategoryMismatchError, SheafError, ValidationReport
from services.fan import span_sublattice
from services.fundcat import Morphism

LOGGER = logging.getLogger(__name__)

Perm = Tuple[int, ...]
Cover = Tuple[int, int]


def identity_perm(size: int) -> Perm:
    return tuple(range(size))


def compose_perms(first: Sequence[int], second: Sequence[int]) -> Tuple[int, ...]:
    """``first ∘ second`` (prima ``second``, poi ``first``)."""
    return tuple(first[x] for x in second)


def invert_perm(perm: Sequence[int]) -> Perm:
    inverse = [0] * len(perm)
    for position, image in enumerate(perm):
        inverse[image] = position
    return tuple(inverse)


def is_permutation(perm: Sequence[int], size: int) -> bool:
    return len(perm) == size and sorted(perm) == list(range(size))


def perm_order(perm: Sequence[int]) -> int:
    seen = set()
    order = 1
    for start in range(len(perm)):
        if start in seen:
            continue
        length = 0
        x = start
        while x not in seen:
            seen.add(x)
            x = perm[x]
            length += 1
        order = lcm(order, length)
    return order


def perm_power(perm: Sequence[int], exponent: int) -> Perm:
    exponent %= perm_order(perm)
    result = identity_perm(len(perm))
    base = tuple(perm)
    while exponent:
        if exponent & 1:
            result = compose_perms(base, result)
        base = compose_perms(base, base)
        exponent >>= 1
    return result


def lattice_action(generators: Sequence[Perm], size: int, vector: Sequence[int]) -> Perm:
    """Permutazione associata a ``Σ v_i e_i`` (i generatori commutano)."""
    result = identity_perm(size)
    for perm, power in zip(generators, vector):
        if power:
            result = compose_perms(perm_power(perm, power), result)
    return result


def orbits(size: int, perms: Iterable[Sequence[int]]) -> List[Tuple[int, ...]]:
    """Orbite del gruppo generato da ``perms``, ordinate per minimo."""
    perms = [tuple(p) for p in perms]
    seen = [False] * size
    result = []
    for start in range(size):
        if seen[start]:
            continue
        seen[start] = True
        orbit = [start]
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for perm in perms:
                y = perm[x]
                if not seen[y]:
                    seen[y] = True
                    orbit.append(y)
                    queue.append(y)
        result.append(tuple(sorted(orbit)))
    return result


def is_finite_level(category) -> bool:
    return category.level is not None


@dataclass(frozen=True)
class StratumLocalSystem:
    """Sistema locale su uno strato: ``G_s`` agisce tramite le sue coordinate."""

    stratum: int
    size: int
    generators: Tuple[Perm, ...]
    frobenius: Perm

    def act(self, element: Sequence[int]) -> Perm:
        return lattice_action(self.generators, self.size, element)


def validate_local_system(category, local: StratumLocalSystem) -> ValidationReport:
    report = ValidationReport()
    s = local.stratum
    rank = category.group_rank(s)
    perms = list(local.generators) + [local.frobenius]
    if len(local.generators) != rank:
        report.add('bad-rank', f'Attese {rank} permutazioni per G_{s}, trovate {len(local.generators)}.', s)
        return report
    if not all(is_permutation(p, local.size) for p in perms):
        report.add('bad-permutation', f'Permutazioni non valide sullo strato {s}.', s)
        return report
    for i, first in enumerate(local.generators):
        for second in local.generators[i + 1:]:
            if compose_perms(first, second) != compose_perms(second, first):
                report.add('actions-not-commuting', f'Le permutazioni su {s} non commutano.', s)
    _check_galois(category, s, local.size, local.generators, local.frobenius, report)
    return report


def _check_galois(category, s: int, size: int, generators: Sequence[Perm], frobenius: Perm,
                  report: ValidationReport) -> None:
    if not is_finite_level(category):
        if frobenius != identity_perm(size):
            report.add('frobenius-order', f'A livello infinito il Frobenius su {s} deve essere banale.', s)
        return
    n = category.level
    galois = category.galois
    for perm in generators:
        if perm_power(perm, n) != identity_perm(size):
            report.add('level-order', f'Un generatore su {s} ha ordine che non divide {n}.', s)
            break
    inverse = invert_perm(frobenius)
    for perm in generators:
        conjugate = compose_perms(frobenius, compose_perms(perm, inverse))
        if conjugate != perm_power(perm, galois.char_exponent):
            report.add('frobenius-twist', f'Il Frobenius su {s} non realizza la torsione q.', s)
            break
    if perm_power(frobenius, galois.galois_order) != identity_perm(size):
        report.add('frobenius-order', f'Il Frobenius su {s} ha ordine che non divide {galois.galois_order}.', s)


@dataclass(frozen=True)
class ConstructibleSheaf:
    category: object = field(compare=False, repr=False)
    objects: Tuple[int, ...]
    carriers: Dict[int, int]
    generators: Dict[int, Tuple[Perm, ...]]
    frobenius: Dict[int, Perm]
    structure: Dict[Cover, Tuple[int, ...]]

    def size(self, s: int) -> int:
        try:
            return self.carriers[s]
        except KeyError as exc:
            raise SheafError(f'Oggetto {s} fuori dal dominio del fascio.') from exc

    def covers(self) -> List[Cover]:
        return domain_covers(self.category, self.objects)

    def act(self, s: int, vector: Sequence[int]) -> Perm:
        """Azione di un vettore di ``N`` su ``F_s``."""
        return lattice_action(self.generators[s], self.size(s), vector)

    def act_element(self, s: int, element: Sequence[int]) -> Perm:
        """Azione di un elemento di ``G_s`` (tramite il sollevamento canonico)."""
        if not element:
            return identity_perm(self.size(s))
        return self.act(s, self.category.lift(s, element))

    def frobenius_power(self, s: int, power: int) -> Perm:
        return perm_power(self.frobenius[s], power)

    def all_perms(self, s: int) -> List[Perm]:
        return list(self.generators[s]) + [self.frobenius[s]]

    def structure_map(self, s: int, t: int) -> Tuple[int, ...]:
        """Composizione delle mappe di struttura lungo una catena da ``s`` a ``t``."""
        chain = self.category.poset.chain(s, t)
        result = identity_perm(self.size(s))
        for lower, upper in zip(chain, chain[1:]):
            result = compose_perms(self.structure[(lower, upper)], result)
        return result


def domain_covers(category, objects: Iterable[int]) -> List[Cover]:
    chosen = set(objects)
    return [(s, t) for s, t in category.poset.covers() if s in chosen and t in chosen]


def is_convex(category, objects: Iterable[int]) -> bool:
    chosen = set(objects)
    poset = category.poset
    for s in chosen:
        for t in chosen:
            if poset.leq(s, t):
                for u in poset.star(s) & poset.closure(t):
                    if u not in chosen:
                        return False
    return True


def make_sheaf(category, carriers: Mapping[int, int], *,
               generators: Optional[Mapping[int, Sequence[Sequence[int]]]] = None,
               structure: Optional[Mapping[Cover, Sequence[int]]] = None,
               frobenius: Optional[Mapping[int, Sequence[int]]] = None,
               validate: bool = True) -> ConstructibleSheaf:
    """Costruisce un fascio; i dati mancanti sono identità o mappe costanti."""
    objects = tuple(sorted(carriers))
    rank = category.lattice_rank
    generators = generators or {}
    structure = structure or {}
    frobenius = frobenius or {}
    sizes = {s: int(carriers[s]) for s in objects}
    normalized_generators = {
        s: tuple(tuple(p) for p in generators[s]) if s in generators
        else tuple(identity_perm(sizes[s]) for _ in range(rank))
        for s in objects
    }
    normalized_frobenius = {
        s: tuple(frobenius[s]) if s in frobenius else identity_perm(sizes[s]) for s in objects
    }
    normalized_structure = {}
    for s, t in domain_covers(category, objects):
        if (s, t) in structure:
            normalized_structure[(s, t)] = tuple(structure[(s, t)])
        elif sizes[t] == 1:
            normalized_structure[(s, t)] = (0,) * sizes[s]
        elif sizes[s] == 0:
            normalized_structure[(s, t)] = ()
    sheaf = ConstructibleSheaf(
        category=category,
        objects=objects,
        carriers=sizes,
        generators=normalized_generators,
        frobenius=normalized_frobenius,
        structure=normalized_structure,
    )
    if validate:
        report = validate_sheaf(sheaf)
        if not report.valid:
            raise SheafError(f'Fascio non valido: {report.first().message}', report=report)
    return sheaf


def constant_sheaf(category, size: int, objects: Optional[Iterable[int]] = None) -> ConstructibleSheaf:
    domain = sorted(objects) if objects is not None else list(category.objects)
    return make_sheaf(
        category,
        {s: size for s in domain},
        structure={cover: identity_perm(size) for cover in domain_covers(category, domain)},
    )


def terminal_sheaf(category, objects: Optional[Iterable[int]] = None) -> ConstructibleSheaf:
    return constant_sheaf(category, 1, objects)


def initial_sheaf(category, objects: Optional[Iterable[int]] = None) -> ConstructibleSheaf:
    return constant_sheaf(category, 0, objects)


def validate_sheaf(sheaf: ConstructibleSheaf) -> ValidationReport:
    """Controlla fattorizzazione, equivarianza e commutatività dei diamanti."""
    report = ValidationReport()
    category = sheaf.category
    known = set(category.objects)
    for s in sheaf.objects:
        if s not in known:
            report.add('unknown-object', f'Oggetto {s} inesistente nella categoria.', s)
    if not report.valid:
        return report
    if not is_convex(category, sheaf.objects):
        report.add('domain-not-convex', 'Il dominio del fascio non è convesso nel poset.', sheaf.objects)
        return report

    rank = category.lattice_rank
    local_ok = set()
    for s in sheaf.objects:
        size = sheaf.carriers.get(s)
        if not isinstance(size, int) or size < 0:
            report.add('bad-carrier', f'Cardinalità non valida su {s}.', s)
            continue
        gens = sheaf.generators.get(s, ())
        frob = sheaf.frobenius.get(s)
        if len(gens) != rank or frob is None or not all(is_permutation(p, size) for p in list(gens) + [frob]):
            report.add('bad-permutation', f'Permutazioni mancanti o non valide su {s}.', s)
            continue
        if any(
            compose_perms(a, b) != compose_perms(b, a) for i, a in enumerate(gens) for b in gens[i + 1:]
        ):
            report.add('actions-not-commuting', f'Le permutazioni su {s} non commutano.', s)
            continue
        for vector in span_sublattice(category.fan.cone(s)).entries:
            if lattice_action(gens, size, vector) != identity_perm(size):
                report.add(
                    'action-not-factoring',
                    f'Il reticolo del cono {s} non agisce banalmente: l\'azione non scende a G_{s}.',
                    s,
                )
                break
        _check_galois(category, s, size, gens, frob, report)
        local_ok.add(s)

    covers = sheaf.covers()
    for s, t in covers:
        if s not in local_ok or t not in local_ok:
            continue
        mapping = sheaf.structure.get((s, t))
        if mapping is None or len(mapping) != sheaf.carriers[s] or any(
            not 0 <= y < sheaf.carriers[t] for y in mapping
        ):
            report.add('bad-structure-map', f'Mappa di struttura {s}→{t} mancante o non valida.', (s, t))
            continue
        for source_perm, target_perm in zip(sheaf.all_perms(s), sheaf.all_perms(t)):
            if compose_perms(mapping, source_perm) != compose_perms(target_perm, mapping):
                report.add('not-equivariant', f'La mappa {s}→{t} non è equivariante.', (s, t))
                break
    if not report.valid:
        return report

    poset = category.poset
    order = [u for u in poset.bottom_up() if u in set(sheaf.objects)]
    for s in order:
        reached = {s: identity_perm(sheaf.carriers[s])}
        for u in order:
            if u == s or not poset.leq(s, u):
                continue
            for r in poset.lower_covers(u):
                if r not in reached:
                    continue
                candidate = compose_perms(sheaf.structure[(r, u)], reached[r])
                if u not in reached:
                    reached[u] = candidate
                elif reached[u] != candidate:
                    report.add(
                        'diamond-not-commuting',
                        f'Due catene da {s} a {u} danno mappe diverse.',
                        (s, u),
                    )
                    return report
    return report


@dataclass(frozen=True)
class SheafMorphism:
    """Trasformazione naturale: una funzione ``F_s → G_s`` per ogni oggetto."""

    source: ConstructibleSheaf
    target: ConstructibleSheaf
    components: Dict[int, Tuple[int, ...]]

    def __call__(self, s: int, x: int) -> int:
        return self.components[s][x]


def identity_morphism(sheaf: ConstructibleSheaf) -> SheafMorphism:
    return SheafMorphism(sheaf, sheaf, {s: identity_perm(sheaf.carriers[s]) for s in sheaf.objects})


def is_natural(morphism: SheafMorphism) -> bool:
    """Equivarianza su ogni oggetto e compatibilità con le mappe di struttura."""
    source, target = morphism.source, morphism.target
    if source.objects != target.objects or set(morphism.components) != set(source.objects):
        return False
    for s in source.objects:
        component = morphism.components[s]
        if len(component) != source.carriers[s] or any(not 0 <= y < target.carriers[s] for y in component):
            return False
        for first, second in zip(source.all_perms(s), target.all_perms(s)):
            if compose_perms(component, first) != compose_perms(second, component):
                return False
    for s, t in source.covers():
        left = compose_perms(target.structure[(s, t)], morphism.components[s])
        right = compose_perms(morphism.components[t], source.structure[(s, t)])
        if left != right:
            return False
    return True


def evaluate(sheaf: ConstructibleSheaf, morphism: Morphism) -> Tuple[int, ...]:
    """Funzione ``F_s → F_t`` associata a un morfismo ``s → t``."""
    s, t = morphism.source, morphism.target
    if s not in sheaf.carriers or t not in sheaf.carriers:
        raise CategoryMismatchError(f'Il morfismo {s}→{t} esce dal dominio del fascio.')
    if not sheaf.category.poset.leq(s, t):
        raise CategoryMismatchError(f'Hom({s}, {t}) è vuoto.')
    if len(morphism.element) != sheaf.category.group_rank(s):
        raise CategoryMismatchError(f'Elemento incompatibile con G_{s}.')
    if morphism.frobenius and not is_finite_level(sheaf.category):
        raise CategoryMismatchError('Morfismo con Frobenius su una categoria a livello infinito.')
    local = compose_perms(sheaf.act_element(s, morphism.element), sheaf.frobenius_power(s, morphism.frobenius))
    return compose_perms(sheaf.structure_map(s, t), local)


def local_system_at(sheaf: ConstructibleSheaf, s: int) -> StratumLocalSystem:
    """Restrizione allo strato ``s`` (``i^*``) come sistema locale su ``G_s``."""
    category = sheaf.category
    rank = category.group_rank(s)
    generators = tuple(
        sheaf.act_element(s, tuple(1 if j == i else 0 for j in range(rank))) for i in range(rank)
    )
    return StratumLocalSystem(stratum=s, size=sheaf.size(s), generators=generators, frobenius=sheaf.frobenius[s])


def lattice_generators_from_local(category, local: StratumLocalSystem, s: Optional[int] = None) -> Tuple[Perm, ...]:
    """Permutazioni dei generatori di ``N`` che agiscono tramite ``N → G_s``."""
    stratum = local.stratum if s is None else s
    return tuple(
        local.act(category.generator_image(stratum, i)) for i in range(category.lattice_rank)
    )


def local_system_from_lattice(category, s: int, size: int, lattice_generators: Sequence[Perm],
                              frobenius: Perm) -> StratumLocalSystem:
    """Sistema locale su ``s`` da un'azione di ``N`` che scende a ``G_s``."""
    rank = category.group_rank(s)
    generators = tuple(
        lattice_action(lattice_generators, size, category.lift(s, tuple(1 if j == i else 0 for j in range(rank))))
        for i in range(rank)
    )
    return StratumLocalSystem(stratum=s, size=size, generators=generators, frobenius=tuple(frobenius))


__all__ = [
    'ConstructibleSheaf',
    'SheafMorphism',
    'Cover',
    'Perm',
    'StratumLocalSystem',
    'compose_perms',
    'constant_sheaf',
    'domain_covers',
    'evaluate',
    'identity_morphism',
    'identity_perm',
    'initial_sheaf',
    'invert_perm',
    'is_convex',
    'is_finite_level',
    'is_natural',
    'is_permutation',
    'lattice_action',
    'lattice_generators_from_local',
    'local_system_at',
    'local_system_from_lattice',
    'make_sheaf',
    'orbits',
    'perm_order',
    'perm_power',
    'terminal_sheaf',
    'validate_local_system',
    'validate_sheaf',
]
