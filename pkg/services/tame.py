"""Aritmetica dei rivestimenti di Kummer del toro.

Un rivestimento connesso con gruppo di deck abeliano finito ``A`` è dato da
una suriezione ``φ: Z^r ↠ A`` (il reticolo ``Z^r`` è quello del ventaglio,
cioè il gruppo fondamentale dell'orbita aperta). Equivalentemente da
un'estensione di reticoli ``M ⊆ N`` con ``N/M ≅ A^*``: ``N`` è il duale del
nucleo di ``φ``.

Il modulo calcola la corrispondenza nei due sensi, il numero di componenti
sopra uno strato più piccolo e la dicotomia di discesa: se ``φ`` non si
annulla su ``N_σ`` il pushforward del sistema locale ha fibra vuota, altrimenti
la fibra è il sistema locale disceso.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from math import gcd, prod
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import sympy

from services.diagnostics import CoverError, PropertyCheckFailed
from services.fan import span_sublattice
from services.homs import find_local_isomorphism
from services.intlat import (
    IntMatrix,
    Vector,
    as_matrix,
    hermite_normal_form,
    lattice_index,
    left_kernel,
    quotient_presentation,
    snf,
)
from services.sheaf_ops import projection_pullback, pushforward_open
from services.sheaves import StratumLocalSystem, is_finite_level, local_system_at, local_system_from_lattice

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """``⊕ Z/d_i`` con ``d_1 | d_2 | ...``; la lista vuota è il gruppo banale."""

    invariant_factors: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        factors = tuple(int(d) for d in self.invariant_factors)
        if any(d <= 1 for d in factors):
            raise CoverError(f'Fattori invarianti non validi: {factors} (devono essere > 1).')
        for first, second in zip(factors, factors[1:]):
            if second % first:
                raise CoverError(f'I fattori invarianti {factors} non formano una catena di divisibilità.')
        object.__setattr__(self, 'invariant_factors', factors)

    @classmethod
    def from_orders(cls, orders: Sequence[int]) -> 'FiniteAbelianGroup':
        """Forma normale di ``⊕ Z/c_i`` per ordini ciclici arbitrari."""
        orders = [int(c) for c in orders if int(c) != 1]
        if any(c <= 0 for c in orders):
            raise CoverError('Gli ordini ciclici devono essere positivi.')
        if not orders:
            return cls(())
        diagonal = IntMatrix.from_rows(
            [[c if i == j else 0 for j in range(len(orders))] for i, c in enumerate(orders)]
        )
        factors = snf(diagonal).invariant_factors
        return cls(tuple(d for d in factors if d > 1))

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def order(self) -> int:
        return prod(self.invariant_factors)

    @property
    def exponent(self) -> int:
        return self.invariant_factors[-1] if self.invariant_factors else 1

    @property
    def is_trivial(self) -> bool:
        return not self.invariant_factors

    def reduce(self, element: Sequence[int]) -> Vector:
        if len(element) != self.rank:
            raise CoverError(f'Elemento {tuple(element)} di lunghezza diversa da {self.rank}.')
        return tuple(int(x) % d for x, d in zip(element, self.invariant_factors))

    def add(self, first: Sequence[int], second: Sequence[int]) -> Vector:
        return self.reduce([a + b for a, b in zip(first, second)])

    def scale(self, factor: int, element: Sequence[int]) -> Vector:
        return self.reduce([factor * x for x in element])

    def zero(self) -> Vector:
        return (0,) * self.rank

    def elements(self) -> List[Vector]:
        return [tuple(e) for e in product(*(range(d) for d in self.invariant_factors))]

    def element_index(self) -> Dict[Vector, int]:
        return {element: i for i, element in enumerate(self.elements())}


@dataclass(frozen=True)
class CharacterSurjection:
    """Omomorfismo ``Z^rank → A``: la riga ``j`` è l'immagine di ``e_j``."""

    rank: int
    target: FiniteAbelianGroup
    matrix: IntMatrix

    def apply(self, vector: Sequence[int]) -> Vector:
        if len(vector) != self.rank:
            raise CoverError(f'Il vettore ha {len(vector)} componenti, atteso rango {self.rank}.')
        if not self.target.rank:
            return ()
        return self.target.reduce(self.matrix.apply(vector))

    def image(self, i: int) -> Vector:
        return self.matrix.row(i) if self.target.rank else ()

    @property
    def surjective(self) -> bool:
        return is_surjective(self)


@dataclass(frozen=True)
class KummerCoverSpec:
    """Estensione ``M ⊆ N`` in ``M ⊗ Q``: ``N`` ha base ``numerators / denominator``."""

    base_rank: int
    denominator: int
    numerators: IntMatrix
    deck: FiniteAbelianGroup
    surjection: CharacterSurjection

    def basis(self) -> List[Tuple[sympy.Rational, ...]]:
        return [
            tuple(sympy.Rational(x, self.denominator) for x in row) for row in self.numerators.entries
        ]


def character_map(rank: int, invariant_factors: Sequence[int], matrix, *,
                  require_surjective: bool = True) -> CharacterSurjection:
    """Costruisce ``φ`` riducendo le righe modulo i fattori invarianti."""
    if rank < 0:
        raise CoverError('Rango negativo.')
    target = FiniteAbelianGroup(tuple(invariant_factors))
    rows = [list(row) for row in (matrix.entries if isinstance(matrix, IntMatrix) else matrix)]
    if target.rank == 0:
        if any(row for row in rows):
            raise CoverError('Il gruppo banale non ammette colonne nella matrice di φ.')
        rows = [[] for _ in range(rank)]
    if len(rows) != rank:
        raise CoverError(f'La matrice di φ ha {len(rows)} righe, attese {rank}.')
    if any(len(row) != target.rank for row in rows):
        raise CoverError(f'Ogni riga di φ deve avere {target.rank} componenti.')
    reduced = IntMatrix.from_rows([target.reduce(row) for row in rows], target.rank)
    surjection = CharacterSurjection(rank=rank, target=target, matrix=reduced)
    if require_surjective and not is_surjective(surjection):
        raise CoverError('φ non è suriettiva: il rivestimento non è connesso.')
    return surjection


def _relations(surjection: CharacterSurjection) -> IntMatrix:
    """Righe di ``φ`` seguite dalla diagonale dei fattori."""
    k = surjection.target.rank
    diagonal = IntMatrix.from_rows(
        [[d if i == j else 0 for j in range(k)] for i, d in enumerate(surjection.target.invariant_factors)], k
    )
    return surjection.matrix.stack(diagonal)


def is_surjective(surjection: CharacterSurjection) -> bool:
    if surjection.target.is_trivial:
        return True
    factors = snf(_relations(surjection)).invariant_factors
    return len(factors) == surjection.target.rank and all(d == 1 for d in factors)


def character_kernel(surjection: CharacterSurjection) -> IntMatrix:
    """Base di Hermite di ``ker φ ⊆ Z^rank`` (rango pieno)."""
    r = surjection.rank
    if surjection.target.is_trivial:
        return IntMatrix.identity(r)
    kernel = left_kernel(_relations(surjection))
    restricted = [row[:r] for row in kernel.entries]
    return hermite_normal_form(restricted, r)


def extension_from_surjection(surjection: CharacterSurjection, characteristic: int = 0) -> KummerCoverSpec:
    """Reticolo ``N = (ker φ)^∨`` con ``N/M ≅ A^*``."""
    if not is_surjective(surjection):
        raise CoverError('φ non è suriettiva.')
    deck = surjection.target
    if characteristic and gcd(deck.order, characteristic) != 1:
        raise CoverError(
            f'|A| = {deck.order} non è coprimo con la caratteristica {characteristic}: rivestimento non moderato.'
        )
    r = surjection.rank
    e = deck.exponent
    if r == 0:
        return KummerCoverSpec(0, 1, IntMatrix((), 0), deck, surjection)
    kernel = character_kernel(surjection)
    dual = sympy.Matrix(kernel.entries).inv().T * e
    if any(not value.is_integer for value in dual):
        raise CoverError('Il denominatore comune non annulla la base duale.')
    numerators = IntMatrix.from_rows(
        [[int(dual[i, j]) for j in range(r)] for i in range(r)], r
    )
    spec = KummerCoverSpec(base_rank=r, denominator=e, numerators=numerators, deck=deck, surjection=surjection)
    index = extension_index(spec)
    if index != deck.order:
        raise CoverError(f'Indice [N:M] = {index} diverso da |A| = {deck.order}.')
    LOGGER.debug('Estensione di Kummer di indice %s con denominatore %s.', index, e)
    return spec


def extension_index(spec: KummerCoverSpec) -> int:
    """``[N : M] = e^r / [Z^r : e·N]``."""
    if spec.base_rank == 0:
        return 1
    return spec.denominator ** spec.base_rank // lattice_index(spec.numerators, spec.base_rank)


def surjection_from_extension(spec: KummerCoverSpec) -> CharacterSurjection:
    """Ricava ``Z^r ↠ Z^r / N^∨`` nelle coordinate canoniche del quoziente."""
    r = spec.base_rank
    if r == 0:
        return character_map(0, (), [])
    dual = (sympy.Matrix(spec.numerators.entries) / spec.denominator).inv().T
    if any(not value.is_integer for value in dual):
        raise CoverError('Il duale di N non è contenuto in Z^r: M non è contenuto in N.')
    kernel = [[int(dual[i, j]) for j in range(r)] for i in range(r)]
    presentation = quotient_presentation(r, kernel)
    if presentation.free_rank:
        raise CoverError('L\'estensione non ha indice finito.')
    k = len(presentation.torsion)
    rows = [presentation.project(tuple(1 if j == i else 0 for j in range(r))) for i in range(r)]
    return character_map(r, presentation.torsion, rows if k else [])


def same_cover(first: CharacterSurjection, second: CharacterSurjection) -> bool:
    """Stesso rivestimento a meno di isomorfismo di deck: stesso nucleo."""
    return (
        first.rank == second.rank
        and first.target.invariant_factors == second.target.invariant_factors
        and character_kernel(first) == character_kernel(second)
    )


def pontryagin_pairing(group: FiniteAbelianGroup, character: Sequence[int], element: Sequence[int]) -> sympy.Rational:
    """Accoppiamento ``A^* × A → Q/Z`` sulle coordinate dei fattori invarianti."""
    total = sum(
        (sympy.Rational(a * b, d) for a, b, d in zip(group.reduce(character), group.reduce(element),
                                                       group.invariant_factors)),
        sympy.Integer(0),
    )
    return total - sympy.floor(total)


@dataclass(frozen=True)
class CoverComponents:
    descends: bool
    component_count: int
    image_order: int


def cover_components(surjection: CharacterSurjection, sub) -> CoverComponents:
    """Componenti sopra uno strato: orbite di ``B = φ(sub)`` su ``A`` per traslazione."""
    try:
        vectors = as_matrix(sub, surjection.rank)
    except ValueError as exc:
        raise CoverError(f'Il sottoreticolo non è contenuto in Z^{surjection.rank}.') from exc
    group = surjection.target
    images = [surjection.apply(row) for row in vectors.entries]
    if group.is_trivial:
        return CoverComponents(descends=True, component_count=1, image_order=1)
    relations = IntMatrix.from_rows(images, group.rank).stack(_relations(surjection).select_rows(
        range(surjection.rank, surjection.rank + group.rank)
    ))
    count = quotient_presentation(group.rank, relations).order
    descends = all(not any(image) for image in images)
    return CoverComponents(descends=descends, component_count=count, image_order=group.order // count)


def _as_surjection(cover: Union[CharacterSurjection, KummerCoverSpec]) -> CharacterSurjection:
    if isinstance(cover, KummerCoverSpec):
        return surjection_from_extension(cover)
    return cover


def local_system_from_cover(cover: Union[CharacterSurjection, KummerCoverSpec], category,
                            stratum: Optional[int] = None) -> StratumLocalSystem:
    """Sistema locale sugli elementi di ``A``: ``e_j`` trasla di ``φ(e_j)``, Frobenius moltiplica per ``q``."""
    surjection = _as_surjection(cover)
    s = category.poset.top if stratum is None else stratum
    if surjection.rank != category.lattice_rank:
        raise CoverError(
            f'φ è definita su Z^{surjection.rank}, il ventaglio ha rango {category.lattice_rank}.'
        )
    group = surjection.target
    q = 1
    if is_finite_level(category):
        if category.level % group.exponent:
            raise CoverError(
                f'Livello {category.level} troppo piccolo: l\'esponente {group.exponent} non lo divide.'
            )
        q = category.galois.char_exponent
    if not cover_components(surjection, span_sublattice(category.fan.cone(s))).descends:
        raise CoverError(f'Il rivestimento non scende allo strato {s}.')
    elements = group.elements()
    index = group.element_index()
    lattice_generators = [
        tuple(index[group.add(a, surjection.image(i))] for a in elements) for i in range(surjection.rank)
    ]
    frobenius = tuple(index[group.scale(q, a)] for a in elements)
    return local_system_from_lattice(category, s, len(elements), lattice_generators, frobenius)


def descended_local_system(cover: Union[CharacterSurjection, KummerCoverSpec], category, s: int) -> StratumLocalSystem:
    return local_system_from_cover(cover, category, s)


@dataclass(frozen=True)
class DescentVerdict:
    stratum: int
    descends: bool
    pushforward_size: int
    expected_size: int
    agree: bool


def descent_cross_check(cover: Union[CharacterSurjection, KummerCoverSpec], category, s: int, *,
                        check_lifts: bool = True) -> DescentVerdict:
    """Confronta ``i^*j_*`` calcolato sul fascio con la dicotomia di discesa."""
    surjection = _as_surjection(cover)
    top = category.poset.top
    local = local_system_from_cover(surjection, category, top)
    sheaf = projection_pullback(category, local)
    pushed = pushforward_open(sheaf, category.poset.star(s), check_lifts=check_lifts)
    computed = local_system_at(pushed, s)

    components = cover_components(surjection, span_sublattice(category.fan.cone(s)))
    if components.descends:
        expected = descended_local_system(surjection, category, s)
    else:
        rank = category.group_rank(s)
        expected = StratumLocalSystem(stratum=s, size=0, generators=((),) * rank, frobenius=())
    agree = computed.size == expected.size and find_local_isomorphism(computed, expected) is not None
    LOGGER.info(
        'Verifica di discesa su %s: j_* ha fibra %s, attesa %s (%s).',
        s, computed.size, expected.size, 'concordi' if agree else 'DISCORDI',
    )
    return DescentVerdict(
        stratum=s,
        descends=components.descends,
        pushforward_size=computed.size,
        expected_size=expected.size,
        agree=agree,
    )


def assert_descent(cover, category, s: int) -> DescentVerdict:
    verdict = descent_cross_check(cover, category, s)
    if not verdict.agree:
        raise PropertyCheckFailed(
            f'Dicotomia di discesa violata su {s}: {verdict.pushforward_size} ≠ {verdict.expected_size}.'
        )
    return verdict


def surjections_onto(rank: int, group: FiniteAbelianGroup) -> Iterator[CharacterSurjection]:
    """Tutte le suriezioni ``Z^rank ↠ group`` (matrici ridotte)."""
    if group.is_trivial:
        yield character_map(rank, (), [])
        return
    elements = group.elements()
    for rows in product(elements, repeat=rank):
        candidate = CharacterSurjection(rank, group, IntMatrix.from_rows(rows, group.rank))
        if is_surjective(candidate):
            yield candidate


def _groups_of_exponent(max_rank: int, max_exponent: int) -> List[FiniteAbelianGroup]:
    chains: List[Tuple[int, ...]] = [()]
    frontier: List[Tuple[int, ...]] = [()]
    for _ in range(max_rank):
        extended = []
        for chain in frontier:
            start = chain[-1] if chain else 2
            for d in range(start, max_exponent + 1):
                if not chain or d % chain[-1] == 0:
                    extended.append(chain + (d,))
        chains.extend(extended)
        frontier = extended
    return [FiniteAbelianGroup(chain) for chain in chains]


def connected_covers(rank: int, max_exponent: int, characteristic: int = 0) -> List[CharacterSurjection]:
    """Rivestimenti connessi di esponente ``≤ max_exponent``, uno per classe di deck."""
    covers: List[CharacterSurjection] = []
    seen = set()
    for group in _groups_of_exponent(rank, max_exponent):
        if characteristic and gcd(group.order, characteristic) != 1:
            continue
        for surjection in surjections_onto(rank, group):
            key = (group.invariant_factors, character_kernel(surjection))
            if key in seen:
                continue
            seen.add(key)
            covers.append(surjection)
    LOGGER.debug('%s rivestimenti connessi di rango %s ed esponente ≤ %s.', len(covers), rank, max_exponent)
    return covers


def kummer_classes(m: int) -> List[CharacterSurjection]:
    """Classi di rivestimenti connessi ``Z/m`` del toro di dimensione uno."""
    group = FiniteAbelianGroup.from_orders([m])
    classes: List[CharacterSurjection] = []
    for surjection in surjections_onto(1, group):
        if not any(same_cover(surjection, known) for known in classes):
            classes.append(surjection)
    return classes


def load_cover(data: dict, *, require_surjective: bool = True) -> CharacterSurjection:
    return character_map(
        int(data['rank']), data.get('invariant_factors', []), data.get('phi_matrix', []),
        require_surjective=require_surjective,
    )


__all__ = [
    'CharacterSurjection',
    'CoverComponents',
    'DescentVerdict',
    'FiniteAbelianGroup',
    'KummerCoverSpec',
    'assert_descent',
    'character_kernel',
    'character_map',
    'connected_covers',
    'cover_components',
    'descended_local_system',
    'descent_cross_check',
    'extension_from_surjection',
    'extension_index',
    'is_surjective',
    'kummer_classes',
    'load_cover',
    'local_system_from_cover',
    'pontryagin_pairing',
    'same_cover',
    'surjection_from_extension',
    'surjections_onto',
]
