"""Ventagli, coni, facce e poset delle orbite.

Un ventaglio viene costruito a partire da raggi e liste di indici; i raggi
sono normalizzati a vettori primitivi e i coni chiusi per facce. Gli
identificativi dei coni seguono l'ordinamento ``(dimensione, indici dei
raggi)``: il cono nullo ha sempre id 0 ed è l'elemento massimo del poset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import gcd
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from services.diagnostics import FanError, ValidationReport
from services.intlat import (
    IntMatrix,
    Vector,
    in_rational_span,
    left_kernel,
    matrix_rank,
    quotient_presentation,
    saturate,
)

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cone:
    """Cono razionale generato da raggi primitivi (nessun raggio = cono nullo)."""

    id: Optional[int]
    ambient_rank: int
    ray_generators: Tuple[Vector, ...]
    ray_indices: Tuple[int, ...]
    dim: int

    @property
    def is_zero(self) -> bool:
        return not self.ray_generators


def make_cone(rays: Iterable[Sequence[int]], ambient_rank: Optional[int] = None, *,
              cone_id: Optional[int] = None, ray_indices: Optional[Sequence[int]] = None) -> Cone:
    generators = tuple(tuple(int(x) for x in ray) for ray in rays)
    if ambient_rank is None:
        if not generators:
            raise FanError('Il rango ambiente è obbligatorio per il cono nullo.')
        ambient_rank = len(generators[0])
    for ray in generators:
        if len(ray) != ambient_rank:
            raise FanError(f'Il raggio {list(ray)} non ha {ambient_rank} componenti.')
    indices = tuple(ray_indices) if ray_indices is not None else tuple(range(len(generators)))
    return Cone(
        id=cone_id,
        ambient_rank=ambient_rank,
        ray_generators=generators,
        ray_indices=indices,
        dim=matrix_rank(generators, ambient_rank) if generators else 0,
    )


def primitive(vector: Sequence[int]) -> Vector:
    divisor = 0
    for value in vector:
        divisor = gcd(divisor, value)
    if divisor == 0:
        raise FanError('Il vettore nullo non genera un raggio.')
    return tuple(value // divisor for value in vector)


def _nonnegative_circuits(vectors: Sequence[Vector], ambient_rank: int) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """Circuiti (dipendenze minimali) con tutti i coefficienti dello stesso segno."""
    for size in range(2, min(len(vectors), ambient_rank + 1) + 1):
        for subset in combinations(range(len(vectors)), size):
            kernel = left_kernel(IntMatrix.from_rows([vectors[i] for i in subset], ambient_rank))
            if kernel.rows != 1:
                continue
            coefficients = kernel.row(0)
            if all(c > 0 for c in coefficients):
                yield subset, coefficients
            elif all(c < 0 for c in coefficients):
                yield subset, tuple(-c for c in coefficients)


def is_strongly_convex(cone: Cone) -> bool:
    return next(_nonnegative_circuits(cone.ray_generators, cone.ambient_rank), None) is None


def _facets(cone: Cone) -> List[Tuple[FrozenSet[int], Vector]]:
    """Faccette come insiemi di posizioni dei raggi, con la normale interna."""
    d = cone.dim
    rays = cone.ray_generators
    if d == 0:
        return []
    basis = saturate(rays, cone.ambient_rank)
    found: Dict[FrozenSet[int], Vector] = {}
    for subset in combinations(range(len(rays)), d - 1):
        chosen = [rays[i] for i in subset]
        if chosen and matrix_rank(chosen, cone.ambient_rank) != d - 1:
            continue
        pairing = IntMatrix.from_rows(
            [[sum(a * b for a, b in zip(row, ray)) for ray in chosen] for row in basis.entries],
            len(chosen),
        )
        kernel = left_kernel(pairing)
        if kernel.rows != 1:
            continue
        normal = basis.apply(kernel.row(0))
        values = [sum(a * b for a, b in zip(normal, ray)) for ray in rays]
        if all(v >= 0 for v in values):
            oriented = normal
        elif all(v <= 0 for v in values):
            oriented = tuple(-x for x in normal)
        else:
            continue
        facet = frozenset(i for i, v in enumerate(values) if v == 0)
        found.setdefault(facet, oriented)
    return sorted(found.items(), key=lambda item: sorted(item[0]))


def face_position_sets(cone: Cone) -> List[FrozenSet[int]]:
    """Facce come insiemi di posizioni dei raggi del cono (incluse 0 e il cono)."""
    full = frozenset(range(len(cone.ray_generators)))
    if cone.is_zero:
        return [full]
    if not is_strongly_convex(cone):
        raise FanError(f'Il cono {list(cone.ray_indices)} non è fortemente convesso.')
    result = {full}
    frontier = {facet for facet, _ in _facets(cone)}
    result |= frontier
    while frontier:
        produced = set()
        current = list(result)
        for first in frontier:
            for second in current:
                meet = first & second
                if meet not in result:
                    produced.add(meet)
        result |= produced
        frontier = produced
    return sorted(result, key=lambda positions: (len(positions), sorted(positions)))


def faces(cone: Cone) -> List[Cone]:
    """Tutte le facce del cono, dal cono nullo al cono stesso."""
    result = []
    for positions in face_position_sets(cone):
        ordered = sorted(positions)
        result.append(
            make_cone(
                [cone.ray_generators[i] for i in ordered],
                cone.ambient_rank,
                ray_indices=[cone.ray_indices[i] for i in ordered],
            )
        )
    return sorted(result, key=lambda face: (face.dim, face.ray_indices))


def is_face(cone: Cone, ray_indices: Iterable[int]) -> bool:
    wanted = frozenset(ray_indices)
    return any(frozenset(face.ray_indices) == wanted for face in faces(cone))


def facet_normals(cone: Cone) -> List[Vector]:
    """Normali interne delle faccette (elementi di σ^∨ che non sono unità)."""
    return [normal for _, normal in _facets(cone)]


@dataclass(frozen=True)
class Fan:
    rank: int
    rays: Tuple[Vector, ...]
    cones: Tuple[Cone, ...]
    face_relation: FrozenSet[Tuple[int, int]]
    _by_rays: Dict[FrozenSet[int], int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self._by_rays:
            object.__setattr__(
                self, '_by_rays', {frozenset(cone.ray_indices): cone.id for cone in self.cones}
            )

    def __len__(self) -> int:
        return len(self.cones)

    def cone(self, cone_id: int) -> Cone:
        if not isinstance(cone_id, int) or not 0 <= cone_id < len(self.cones):
            raise FanError(f'Cono inesistente: {cone_id!r}.')
        return self.cones[cone_id]

    def find(self, ray_indices: Iterable[int]) -> Optional[Cone]:
        cone_id = self._by_rays.get(frozenset(ray_indices))
        return None if cone_id is None else self.cones[cone_id]

    def maximal_cones(self) -> List[Cone]:
        return [
            cone for cone in self.cones
            if not any(face == cone.id and other != cone.id for face, other in self.face_relation)
        ]


def build_fan(rank: int, rays: Iterable[Sequence[int]], cones: Iterable[Sequence[int]]) -> Fan:
    """Costruisce un ventaglio normalizzando i raggi e chiudendo per facce.

    Non verifica gli assiomi: per quello c'è ``validate_fan``.
    """
    if rank < 0:
        raise FanError('Il rango del reticolo deve essere non negativo.')
    normalized: List[Vector] = []
    remap: Dict[int, int] = {}
    for position, ray in enumerate(rays):
        ray = tuple(int(x) for x in ray)
        if len(ray) != rank:
            raise FanError(f'Il raggio {position} ha {len(ray)} componenti invece di {rank}.')
        reduced = primitive(ray)
        if reduced != ray:
            LOGGER.warning('Raggio %s non primitivo: normalizzato a %s.', list(ray), list(reduced))
        if reduced in normalized:
            LOGGER.warning('Raggio %s duplicato: unificato con il raggio %s.', position, normalized.index(reduced))
            remap[position] = normalized.index(reduced)
        else:
            remap[position] = len(normalized)
            normalized.append(reduced)

    ray_sets = {frozenset()}
    for cone_position, indices in enumerate(cones):
        try:
            ray_sets.add(frozenset(remap[int(i)] for i in indices))
        except KeyError as exc:
            raise FanError(f'Il cono {cone_position} usa un raggio inesistente: {exc.args[0]}.') from exc

    def as_cone(positions: FrozenSet[int], cone_id: Optional[int] = None) -> Cone:
        ordered = sorted(positions)
        return make_cone([normalized[i] for i in ordered], rank, cone_id=cone_id, ray_indices=ordered)

    closed = set(ray_sets)
    for positions in ray_sets:
        cone = as_cone(positions)
        if is_strongly_convex(cone):
            closed.update(frozenset(face.ray_indices) for face in faces(cone))
    if len(closed) > len(ray_sets):
        LOGGER.debug('Aggiunte %s facce mancanti al ventaglio.', len(closed) - len(ray_sets))

    ordered_sets = sorted(
        closed,
        key=lambda positions: (as_cone(positions).dim, sorted(positions)),
    )
    cone_list = tuple(as_cone(positions, cone_id) for cone_id, positions in enumerate(ordered_sets))
    by_rays = {frozenset(cone.ray_indices): cone.id for cone in cone_list}

    relation = set()
    for cone in cone_list:
        relation.add((cone.id, cone.id))
        if not is_strongly_convex(cone):
            continue
        for face in faces(cone):
            face_id = by_rays.get(frozenset(face.ray_indices))
            if face_id is not None:
                relation.add((face_id, cone.id))
    return Fan(rank=rank, rays=tuple(normalized), cones=cone_list, face_relation=frozenset(relation))


def _intersection_is_common_face(first: Cone, second: Cone) -> bool:
    common = sorted(set(first.ray_indices) & set(second.ray_indices))
    if not is_face(first, common) or not is_face(second, common):
        return False
    common_rays = [first.ray_generators[first.ray_indices.index(i)] for i in common]
    stacked = list(first.ray_generators) + [tuple(-x for x in ray) for ray in second.ray_generators]
    k = len(first.ray_generators)
    for subset, coefficients in _nonnegative_circuits(stacked, first.ambient_rank):
        point = [0] * first.ambient_rank
        for position, coefficient in zip(subset, coefficients):
            if position < k:
                point = [p + coefficient * x for p, x in zip(point, stacked[position])]
        if not any(point):
            continue
        if not in_rational_span(point, IntMatrix.from_rows(common_rays, first.ambient_rank)):
            return False
    return True


def validate_fan(fan: Fan) -> ValidationReport:
    """Verifica gli assiomi di ventaglio; le violazioni vengono solo elencate."""
    report = ValidationReport()
    if fan.find(()) is None:
        report.add('missing-zero-cone', 'Il ventaglio non contiene il cono nullo.')
    for index, ray in enumerate(fan.rays):
        if len(ray) != fan.rank:
            report.add('bad-dimension', f'Il raggio {index} non ha {fan.rank} componenti.', index)
        elif not any(ray) or primitive(ray) != ray:
            report.add('non-primitive-ray', f'Il raggio {index} non è primitivo.', index)
    if not report.valid:
        return report

    convex = {}
    for cone in fan.cones:
        convex[cone.id] = is_strongly_convex(cone)
        if not convex[cone.id]:
            report.add(
                'not-strongly-convex',
                f'Il cono {list(cone.ray_indices)} contiene una retta.',
                cone.ray_indices,
            )
            continue
        for position, ray_index in enumerate(cone.ray_indices):
            if not is_face(cone, [ray_index]):
                report.add(
                    'redundant-ray',
                    f'Il raggio {ray_index} non è estremale nel cono {list(cone.ray_indices)}.',
                    cone.ray_indices,
                )
        for face in faces(cone):
            if fan.find(face.ray_indices) is None:
                report.add(
                    'not-face-closed',
                    f'La faccia {list(face.ray_indices)} del cono {list(cone.ray_indices)} manca.',
                    face.ray_indices,
                )

    for first, second in combinations(fan.cones, 2):
        if not (convex[first.id] and convex[second.id]):
            continue
        first_set, second_set = set(first.ray_indices), set(second.ray_indices)
        if first_set <= second_set and is_face(second, first.ray_indices):
            continue
        if second_set <= first_set and is_face(first, second.ray_indices):
            continue
        if not _intersection_is_common_face(first, second):
            report.add(
                'intersection-not-face',
                f'I coni {list(first.ray_indices)} e {list(second.ray_indices)} '
                'non si intersecano in una faccia comune.',
                (first.ray_indices, second.ray_indices),
            )
    return report


@dataclass(frozen=True)
class OrbitPoset:
    """Poset degli strati: ``s ≤ t`` se e solo se σ_t è una faccia di σ_s."""

    elements: Tuple[int, ...]
    order: FrozenSet[Tuple[int, int]]
    orbit_dim: Dict[int, int]
    top: int
    hasse: nx.DiGraph = field(compare=False, repr=False)

    def leq(self, s: int, t: int) -> bool:
        return (s, t) in self.order

    def _check(self, s: int) -> None:
        if s not in self.orbit_dim:
            raise FanError(f'Elemento del poset inesistente: {s!r}.')

    def star(self, s: int) -> FrozenSet[int]:
        self._check(s)
        return frozenset(t for t in self.elements if self.leq(s, t))

    def closure(self, s: int) -> FrozenSet[int]:
        self._check(s)
        return frozenset(r for r in self.elements if self.leq(r, s))

    def covers(self) -> List[Tuple[int, int]]:
        """Coppie ``(s, t)`` con ``s ⋖ t`` (diagramma di Hasse)."""
        return sorted(self.hasse.edges())

    def upper_covers(self, s: int) -> List[int]:
        return sorted(self.hasse.successors(s))

    def lower_covers(self, s: int) -> List[int]:
        return sorted(self.hasse.predecessors(s))

    def minimal_elements(self) -> List[int]:
        return sorted(s for s in self.elements if self.hasse.in_degree(s) == 0)

    def chain(self, s: int, t: int) -> List[int]:
        """Una catena satura da ``s`` a ``t``."""
        self._check(s)
        self._check(t)
        if not self.leq(s, t):
            raise FanError(f'{s} non è minore o uguale a {t}.')
        return nx.shortest_path(self.hasse, s, t)

    def bottom_up(self) -> List[int]:
        """Estensione lineare deterministica, dai minimali verso il massimo."""
        return list(nx.lexicographical_topological_sort(self.hasse))

    def is_upward_closed(self, subset: Iterable[int]) -> bool:
        chosen = set(subset)
        return all(t in chosen for s in chosen for t in self.star(s))

    def is_downward_closed(self, subset: Iterable[int]) -> bool:
        chosen = set(subset)
        return all(r in chosen for s in chosen for r in self.closure(s))

    def upward_closed_sets(self) -> Iterator[FrozenSet[int]]:
        """Tutti gli aperti di Alexandroff, uno per ogni anticatena."""
        for antichain in nx.antichains(self.hasse):
            opened = frozenset()
            for s in antichain:
                opened |= self.star(s)
            yield opened


def orbit_poset(fan: Fan, *, report: Optional[ValidationReport] = None) -> OrbitPoset:
    report = report if report is not None else validate_fan(fan)
    if not report.valid:
        raise FanError(f'Ventaglio non valido: {report.first().message}', report=report)
    order = frozenset((cone_id, face_id) for face_id, cone_id in fan.face_relation)
    graph = nx.DiGraph()
    graph.add_nodes_from(cone.id for cone in fan.cones)
    graph.add_edges_from((s, t) for s, t in order if s != t)
    hasse = nx.transitive_reduction(graph)
    hasse.add_nodes_from(graph.nodes())
    return OrbitPoset(
        elements=tuple(cone.id for cone in fan.cones),
        order=order,
        orbit_dim={cone.id: fan.rank - cone.dim for cone in fan.cones},
        top=fan.find(()).id,
        hasse=hasse,
    )


def star_and_closure(poset: OrbitPoset, s: int) -> Tuple[FrozenSet[int], FrozenSet[int]]:
    return poset.star(s), poset.closure(s)


def span_sublattice(cone: Cone) -> IntMatrix:
    """``N_σ``: saturazione dello span dei raggi."""
    if cone.is_zero:
        return IntMatrix((), cone.ambient_rank)
    return saturate(cone.ray_generators, cone.ambient_rank)


def units_sublattice(cone: Cone) -> IntMatrix:
    """``M^× = σ^⊥ ∩ M``."""
    if cone.is_zero:
        return IntMatrix.identity(cone.ambient_rank)
    return left_kernel(IntMatrix.from_rows(cone.ray_generators, cone.ambient_rank).transpose())


@dataclass(frozen=True)
class UnitSequence:
    """Ranghi di ``0 → M^× → M → M̄ → 0``; M̄ è sempre libero."""

    units_rank: int
    lattice_rank: int
    quotient_rank: int
    quotient_torsion: Tuple[int, ...]


def unit_sequence(cone: Cone) -> UnitSequence:
    units = units_sublattice(cone)
    quotient = quotient_presentation(cone.ambient_rank, units)
    return UnitSequence(
        units_rank=units.rows,
        lattice_rank=cone.ambient_rank,
        quotient_rank=quotient.free_rank,
        quotient_torsion=quotient.torsion,
    )


def homotopy_grading(cone: Cone) -> Vector:
    """Somma dei raggi: giace nel cono ma in nessuna faccia propria."""
    witness = tuple(sum(ray[j] for ray in cone.ray_generators) for j in range(cone.ambient_rank))
    if cone.is_zero:
        return witness
    for face in faces(cone):
        if face.ray_indices == cone.ray_indices:
            continue
        if in_rational_span(witness, IntMatrix.from_rows(face.ray_generators, cone.ambient_rank)):
            raise FanError(
                f'La somma dei raggi di {list(cone.ray_indices)} cade nella faccia {list(face.ray_indices)}.'
            )
    return witness


def grading_is_witness(cone: Cone) -> bool:
    """Il nucleo dell'accoppiamento con la somma dei raggi è esattamente ``M^×``."""
    witness = homotopy_grading(cone)

    def pair(m: Sequence[int]) -> int:
        return sum(a * b for a, b in zip(m, witness))

    if any(pair(m) != 0 for m in units_sublattice(cone).entries):
        return False
    return all(pair(u) > 0 for u in facet_normals(cone))


__all__ = [
    'Cone',
    'Fan',
    'OrbitPoset',
    'UnitSequence',
    'build_fan',
    'face_position_sets',
    'faces',
    'facet_normals',
    'grading_is_witness',
    'homotopy_grading',
    'is_face',
    'is_strongly_convex',
    'make_cone',
    'orbit_poset',
    'primitive',
    'span_sublattice',
    'star_and_closure',
    'unit_sequence',
    'units_sublattice',
    'validate_fan',
]
