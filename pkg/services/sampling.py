"""Generatori casuali di sistemi locali e fasci costruibili.

I fasci vengono costruiti incollando dall'alto verso il basso. A ogni strato
``z`` il supporto è un'unione di insiemi transitivi ``Γ/H`` sopra le orbite
di ``(j_*F)(z)``: ``Γ`` è un quoziente finito di ``G_z`` (esteso dal
Frobenius a livello finito) e ``H`` un sottogruppo casuale dello
stabilizzatore di un punto dell'orbita; la mappa di confronto è
``γH ↦ γ·o``. Si ottengono così tutti i ``G_z``-insiemi finiti sopra il
bersaglio, anche quelli in cui la parte ciclica e l'orbita si intrecciano.
Ogni fascio ottenuto è valido per costruzione.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from itertools import product
from math import lcm
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from services.sheaf_ops import family_action, glue, pushforward_families
from services.sheaves import (
    ConstructibleSheaf,
    Perm,
    StratumLocalSystem,
    identity_perm,
    is_finite_level,
    lattice_action,
    make_sheaf,
    orbits,
    perm_order,
    perm_power,
)

LOGGER = logging.getLogger(__name__)

# Oltre questa cardinalità il quoziente finito di G_z non viene allargato.
MAX_GROUP_ORDER = 1024

Element = Tuple[Tuple[int, ...], int]


@dataclass(frozen=True)
class TwistedGroup:
    """``(Z/e)^r ⋊ Z/m`` con il generatore di ``Z/m`` che agisce come ``v ↦ q·v``."""

    rank: int
    modulus: int
    twist: int = 1
    galois_order: int = 1

    @property
    def identity(self) -> Element:
        return (0,) * self.rank, 0

    @property
    def order(self) -> int:
        return self.modulus ** self.rank * self.galois_order

    def elements(self) -> List[Element]:
        return [
            (vector, k)
            for vector in product(range(self.modulus), repeat=self.rank)
            for k in range(self.galois_order)
        ]

    def basis(self) -> List[Element]:
        return [
            (tuple(1 % self.modulus if j == i else 0 for j in range(self.rank)), 0) for i in range(self.rank)
        ]

    def frobenius(self) -> Element:
        return (0,) * self.rank, 1 % self.galois_order

    def multiply(self, first: Element, second: Element) -> Element:
        (v, k), (w, l) = first, second
        factor = pow(self.twist, k, self.modulus)
        return (
            tuple((a + factor * b) % self.modulus for a, b in zip(v, w)),
            (k + l) % self.galois_order,
        )

    def subgroup(self, generators: Iterable[Element]) -> FrozenSet[Element]:
        generators = list(generators)
        found = {self.identity}
        frontier = [self.identity]
        while frontier:
            x = frontier.pop()
            for g in generators:
                y = self.multiply(x, g)
                if y not in found:
                    found.add(y)
                    frontier.append(y)
        return frozenset(found)


def _target_action(group: TwistedGroup, generators: Sequence[Perm], frobenius: Perm, size: int):
    """Azione di ``Γ`` sul bersaglio: ``(v, k)`` agisce come ``v ∘ Φ^k``."""

    def act(element: Element, point: int) -> int:
        vector, k = element
        return lattice_action(generators, size, vector)[perm_power(frobenius, k)[point]]

    return act


def coset_space(group: TwistedGroup, subgroup: FrozenSet[Element]
                ) -> Tuple[List[Element], Tuple[Perm, ...], Perm]:
    """Rappresentanti di ``Γ/H`` e azione a sinistra di base e Frobenius."""
    coset_of: Dict[Element, int] = {}
    representatives: List[Element] = []
    for g in sorted(group.elements()):
        if g in coset_of:
            continue
        for h in subgroup:
            coset_of[group.multiply(g, h)] = len(representatives)
        representatives.append(g)

    def left(element: Element) -> Perm:
        return tuple(coset_of[group.multiply(element, g)] for g in representatives)

    return representatives, tuple(left(e) for e in group.basis()), left(group.frobenius())


def _random_subgroup(group: TwistedGroup, stabilizer: Sequence[Element], room: int,
                     rng: random.Random) -> FrozenSet[Element]:
    """Sottogruppo casuale dello stabilizzatore con indice al più ``room``."""
    full = group.subgroup(stabilizer)
    chosen: List[Element] = []
    current = group.subgroup(chosen)
    while current != full and (group.order // len(current) > room or rng.random() < 0.5):
        chosen.append(rng.choice([g for g in stabilizer if g not in current]))
        current = group.subgroup(chosen)
    return current


def _group_for(category, s: int, target_generators: Sequence[Perm], rng: random.Random,
               capacity: int) -> TwistedGroup:
    rank = category.group_rank(s)
    if is_finite_level(category):
        galois = category.galois
        return TwistedGroup(rank, category.level, galois.char_exponent, galois.galois_order)
    base = lcm(1, *(perm_order(perm) for perm in target_generators))
    options = [c for c in range(1, max(capacity, 1) + 1) if (base * c) ** rank <= MAX_GROUP_ORDER] or [1]
    return TwistedGroup(rank, base * rng.choice(options))


def _pieces(category, s: int, rng: random.Random, capacity: int,
            target_generators: Sequence[Perm], target_frobenius: Perm, target_size: int
            ) -> Tuple[StratumLocalSystem, List[int]]:
    """Unione di insiemi transitivi sopra le orbite del bersaglio, entro la capacità.

    ``target_generators`` sono le permutazioni delle coordinate di ``G_s``.
    Restituisce il sistema locale e la mappa verso il bersaglio.
    """
    rank = category.group_rank(s)
    target_orbits = orbits(target_size, list(target_generators) + [target_frobenius])

    size = 0
    generators: List[List[int]] = [[] for _ in range(rank)]
    frobenius: List[int] = []
    theta: List[int] = []
    while True:
        room = capacity - size
        options = [orbit for orbit in target_orbits if len(orbit) <= room]
        if not options:
            break
        o = rng.choice(options)[0]
        group = _group_for(category, s, target_generators, rng, room)
        act = _target_action(group, target_generators, target_frobenius, target_size)
        stabilizer = [g for g in group.elements() if act(g, o) == o]
        subgroup = _random_subgroup(group, stabilizer, room, rng)
        representatives, basis, frob = coset_space(group, subgroup)
        for i, perm in enumerate(basis):
            generators[i].extend(size + x for x in perm)
        frobenius.extend(size + x for x in frob)
        theta.extend(act(g, o) for g in representatives)
        size += len(representatives)
    local = StratumLocalSystem(
        stratum=s, size=size, generators=tuple(tuple(g) for g in generators), frobenius=tuple(frobenius)
    )
    return local, theta


def _group_coordinates(category, s: int, lattice_generators: Sequence[Perm], size: int) -> List[Perm]:
    rank = category.group_rank(s)
    return [
        lattice_action(lattice_generators, size, category.lift(s, tuple(1 if j == i else 0 for j in range(rank))))
        for i in range(rank)
    ]


def random_local_system(category, s: int, rng: random.Random, max_size: int = 4) -> StratumLocalSystem:
    """``G_s``-insieme finito casuale con al più ``max_size`` elementi."""
    capacity = rng.randint(0, max_size)
    single = (0,)
    local, _ = _pieces(category, s, rng, capacity, [single] * category.group_rank(s), single, 1)
    return local


def random_gluing_data(open_part: ConstructibleSheaf, z: int, rng: random.Random,
                       max_stalk: int = 4) -> Tuple[StratumLocalSystem, List[int]]:
    """Fibra casuale su ``z`` con una mappa di confronto verso ``(j_*F)(z)``."""
    category = open_part.category
    family_set = pushforward_families(open_part, z)
    target_size = len(family_set.families)
    lattice_generators, target_frobenius = family_action(open_part, family_set)
    target_generators = _group_coordinates(category, z, lattice_generators, target_size)
    return _pieces(category, z, rng, rng.randint(0, max_stalk), target_generators, target_frobenius, target_size)


def random_sheaf(category, rng: random.Random, max_stalk: int = 4,
                 objects: Optional[Iterable[int]] = None) -> ConstructibleSheaf:
    """Fascio casuale su un dominio chiuso verso l'alto (di default tutto il poset)."""
    domain = set(objects) if objects is not None else set(category.objects)
    order = [s for s in reversed(category.poset.bottom_up()) if s in domain]
    current = make_sheaf(category, {}, validate=False)
    for z in order:
        local, theta = random_gluing_data(current, z, rng, max_stalk)
        current = glue(current, local, theta)
    LOGGER.debug('Fascio casuale con supporti %s.', current.carriers)
    return current


def random_star_sheaf(category, s: int, rng: random.Random, max_stalk: int = 4) -> ConstructibleSheaf:
    return random_sheaf(category, rng, max_stalk, category.poset.star(s))


def trivial_local_system(category, s: int, size: int) -> StratumLocalSystem:
    identity = identity_perm(size)
    return StratumLocalSystem(
        stratum=s, size=size, generators=tuple(identity for _ in range(category.group_rank(s))), frobenius=identity
    )


__all__ = [
    'MAX_GROUP_ORDER',
    'TwistedGroup',
    'coset_space',
    'random_gluing_data',
    'random_local_system',
    'random_sheaf',
    'random_star_sheaf',
    'trivial_local_system',
]
