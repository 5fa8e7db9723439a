"""Categoria fondamentale degli strati e sua variante a livello finito.

Gli oggetti sono gli id dei coni. Per ``s ≤ t`` l'insieme ``Hom(s, t)`` è il
gruppo ``G_s = N / N_σs`` (non dipende da ``t``); la composizione passa per le
proiezioni ``q_{s→r}: G_s → G_r`` e la somma in ``G_r``.

A livello finito ``n`` ogni morfismo è una coppia ``(v mod n, k mod m)`` dove
``k`` è la potenza del Frobenius e ``m`` l'ordine di ``q`` modulo ``n``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from math import gcd
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from sympy.ntheory import n_order

from services.diagnostics import CategoryMismatchError
from services.fan import Fan, OrbitPoset, orbit_poset, span_sublattice
from services.intlat import IntMatrix, QuotientPresentation, Vector, quotient_presentation

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Morphism:
    source: int
    target: int
    element: Vector
    frobenius: int = 0


@dataclass(frozen=True)
class GaloisDatum:
    """Livello ``n``, esponente ciclotomico ``q`` e suo ordine ``m`` modulo ``n``."""

    level: int
    char_exponent: int
    galois_order: int
    characteristic: int = 0

    @property
    def is_trivial(self) -> bool:
        return self.galois_order == 1

    def twist(self, power: int, vector: Sequence[int]) -> Vector:
        factor = pow(self.char_exponent, power % self.galois_order, self.level)
        return tuple((factor * x) % self.level for x in vector)


def galois_datum(level: int, frob: int = 1, characteristic: int = 0) -> GaloisDatum:
    if level < 1:
        raise ValueError(f'Il livello deve essere almeno 1, ricevuto {level}.')
    if characteristic < 0:
        raise ValueError('La caratteristica non può essere negativa.')
    if characteristic and gcd(level, characteristic) != 1:
        raise ValueError(
            f'Il livello {level} non è coprimo con la caratteristica {characteristic}.'
        )
    q = frob % level
    if gcd(q, level) != 1:
        raise ValueError(f'{frob} non è invertibile modulo {level}.')
    order = 1 if level == 1 else int(n_order(q, level))
    return GaloisDatum(level=level, char_exponent=q, galois_order=order, characteristic=characteristic)


@dataclass(frozen=True)
class FundamentalCategory:
    fan: Fan
    poset: OrbitPoset
    hom_groups: Dict[int, QuotientPresentation] = field(compare=False)
    transitions: Dict[Tuple[int, int], IntMatrix] = field(compare=False, repr=False)

    level = None
    galois = None

    @property
    def base(self) -> 'FundamentalCategory':
        return self

    @property
    def objects(self) -> Tuple[int, ...]:
        return self.poset.elements

    @property
    def lattice_rank(self) -> int:
        return self.fan.rank

    def _check(self, s: int) -> None:
        if s not in self.hom_groups:
            raise CategoryMismatchError(f'Oggetto inesistente nella categoria: {s!r}.')

    def hom_group(self, s: int) -> QuotientPresentation:
        self._check(s)
        return self.hom_groups[s]

    def group_rank(self, s: int) -> int:
        return self.hom_group(s).free_rank

    def transition(self, s: int, r: int) -> IntMatrix:
        """Matrice di ``q_{s→r}`` per ``r ≤ s``."""
        self._check(s)
        self._check(r)
        try:
            return self.transitions[(s, r)]
        except KeyError as exc:
            raise CategoryMismatchError(f'Nessuna proiezione da {s} a {r}: {r} non è sotto {s}.') from exc

    def apply_transition(self, s: int, r: int, element: Sequence[int]) -> Vector:
        matrix = self.transition(s, r)
        if not matrix.rows:
            return (0,) * matrix.cols
        return matrix.apply(element)

    def project(self, s: int, vector: Sequence[int]) -> Vector:
        """Immagine in ``G_s`` di un vettore di ``N``."""
        return self.hom_group(s).project(vector)

    def generator_image(self, s: int, i: int) -> Vector:
        return self.project(s, tuple(1 if j == i else 0 for j in range(self.lattice_rank)))

    def lift(self, s: int, element: Sequence[int]) -> Vector:
        return self.hom_group(s).lift(element)

    def morphism(self, source: int, target: int, element: Sequence[int]) -> Morphism:
        if not self.poset.leq(source, target):
            raise CategoryMismatchError(f'Hom({source}, {target}) è vuoto.')
        element = tuple(int(x) for x in element)
        if len(element) != self.group_rank(source):
            raise CategoryMismatchError(
                f'Elemento di rango {len(element)} per G_{source} di rango {self.group_rank(source)}.'
            )
        return Morphism(source, target, element)

    def identity(self, s: int) -> Morphism:
        return Morphism(s, s, (0,) * self.group_rank(s))

    def compose(self, g: Morphism, h: Morphism) -> Morphism:
        """``g ∘ h`` con ``h: r → s`` e ``g: s → t``."""
        if h.target != g.source:
            raise CategoryMismatchError(
                f'Morfismi non componibili: {h.source}→{h.target} seguito da {g.source}→{g.target}.'
            )
        moved = self.apply_transition(g.source, h.source, g.element)
        return Morphism(h.source, g.target, tuple(a + b for a, b in zip(moved, h.element)))


def build_fundamental_category(fan: Fan) -> FundamentalCategory:
    poset = orbit_poset(fan)
    hom_groups = {
        cone.id: quotient_presentation(fan.rank, span_sublattice(cone)) for cone in fan.cones
    }
    transitions = {}
    for s in poset.elements:
        source = hom_groups[s]
        for r in poset.closure(s):
            target = hom_groups[r]
            if source.free_rank:
                transitions[(s, r)] = source.section @ target.projection
            else:
                transitions[(s, r)] = IntMatrix.zeros(0, target.free_rank)
    LOGGER.debug('Categoria fondamentale costruita con %s oggetti.', len(poset.elements))
    return FundamentalCategory(fan=fan, poset=poset, hom_groups=hom_groups, transitions=transitions)


def compose(category, g: Morphism, h: Morphism) -> Morphism:
    return category.compose(g, h)


def hom_set_description(category, s: int, t: int) -> Optional[QuotientPresentation]:
    """Presentazione di ``G_s`` se ``s ≤ t``, altrimenti ``None`` (insieme vuoto)."""
    base = category.base
    base.hom_group(t)
    if not base.poset.leq(s, t):
        return None
    return base.hom_group(s)


@dataclass(frozen=True)
class FiniteLevelCategory:
    base: FundamentalCategory
    galois: GaloisDatum

    @property
    def level(self) -> int:
        return self.galois.level

    @property
    def fan(self) -> Fan:
        return self.base.fan

    @property
    def poset(self) -> OrbitPoset:
        return self.base.poset

    @property
    def objects(self) -> Tuple[int, ...]:
        return self.base.objects

    @property
    def lattice_rank(self) -> int:
        return self.base.lattice_rank

    def hom_group(self, s: int) -> QuotientPresentation:
        return self.base.hom_group(s)

    def group_rank(self, s: int) -> int:
        return self.base.group_rank(s)

    def reduce(self, vector: Sequence[int]) -> Vector:
        return tuple(x % self.level for x in vector)

    def project(self, s: int, vector: Sequence[int]) -> Vector:
        return self.reduce(self.base.project(s, vector))

    def generator_image(self, s: int, i: int) -> Vector:
        return self.reduce(self.base.generator_image(s, i))

    def apply_transition(self, s: int, r: int, element: Sequence[int]) -> Vector:
        return self.reduce(self.base.apply_transition(s, r, element))

    def lift(self, s: int, element: Sequence[int]) -> Vector:
        return self.base.lift(s, element)

    def hom_size(self, s: int, t: int) -> int:
        if not self.poset.leq(s, t):
            return 0
        return self.level ** self.group_rank(s) * self.galois.galois_order

    def morphism(self, source: int, target: int, element: Sequence[int], frobenius: int = 0) -> Morphism:
        base = self.base.morphism(source, target, element)
        return Morphism(source, target, self.reduce(base.element), frobenius % self.galois.galois_order)

    def identity(self, s: int) -> Morphism:
        return Morphism(s, s, (0,) * self.group_rank(s), 0)

    def frobenius(self, s: int) -> Morphism:
        return Morphism(s, s, (0,) * self.group_rank(s), 1 % self.galois.galois_order)

    def compose(self, g: Morphism, h: Morphism) -> Morphism:
        if h.target != g.source:
            raise CategoryMismatchError(
                f'Morfismi non componibili: {h.source}→{h.target} seguito da {g.source}→{g.target}.'
            )
        moved = self.apply_transition(g.source, h.source, g.element)
        twisted = self.galois.twist(g.frobenius, h.element)
        element = tuple((a + b) % self.level for a, b in zip(moved, twisted))
        return Morphism(h.source, g.target, element, (g.frobenius + h.frobenius) % self.galois.galois_order)

    def hom_elements(self, s: int, t: int) -> Iterator[Morphism]:
        if not self.poset.leq(s, t):
            return
        for frob in range(self.galois.galois_order):
            for element in product(range(self.level), repeat=self.group_rank(s)):
                yield Morphism(s, t, tuple(element), frob)

    def frobenius_conjugate(self, morphism: Morphism) -> Morphism:
        """``Frob · g · Frob⁻¹`` per un endomorfismo ``g``."""
        s = morphism.source
        inverse = Morphism(s, s, (0,) * self.group_rank(s), (-1) % self.galois.galois_order)
        return self.compose(self.compose(self.frobenius(morphism.target), morphism), inverse)


def finite_level(category: FundamentalCategory, galois: GaloisDatum) -> FiniteLevelCategory:
    return FiniteLevelCategory(base=category, galois=galois)


def hom_elements(category: FiniteLevelCategory, s: int, t: int) -> List[Morphism]:
    return list(category.hom_elements(s, t))


def reduce_morphism(source: FiniteLevelCategory, target: FiniteLevelCategory, morphism: Morphism) -> Morphism:
    """Riduzione da livello ``n'`` a un livello ``n`` che lo divide."""
    if source.base is not target.base and source.fan != target.fan:
        raise CategoryMismatchError('Le due categorie provengono da ventagli diversi.')
    if source.level % target.level:
        raise CategoryMismatchError(f'Il livello {target.level} non divide {source.level}.')
    if source.galois.char_exponent % target.level != target.galois.char_exponent % target.level:
        raise CategoryMismatchError('Gli esponenti ciclotomici non sono compatibili.')
    return Morphism(
        morphism.source,
        morphism.target,
        target.reduce(morphism.element),
        morphism.frobenius % target.galois.galois_order,
    )


def hasse_generators(category) -> List[Dict[str, int]]:
    """Generatori del diagramma di Hasse con il rango del gruppo alla sorgente."""
    base = category.base
    return [
        {'source': s, 'target': t, 'rank': base.group_rank(s)}
        for s, t in base.poset.covers()
    ]


__all__ = [
    'FiniteLevelCategory',
    'FundamentalCategory',
    'GaloisDatum',
    'Morphism',
    'build_fundamental_category',
    'compose',
    'finite_level',
    'galois_datum',
    'hasse_generators',
    'hom_elements',
    'hom_set_description',
    'reduce_morphism',
]
