"""Suite di autoverifica eseguite da ``exodromy selfcheck``.

Ogni suite restituisce un ``SuiteResult``; le eccezioni ``PropertyCheckFailed``
sollevate dalle operazioni controllate vengono registrate come fallimenti.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import sympy

from services.diagnostics import PropertyCheckFailed
from services.fan_catalog import standard_fan
from services.fundcat import Morphism, build_fundamental_category, finite_level, galois_datum
from services.homs import (
    are_isomorphic,
    enumerate_sheaves,
    equivariant_maps,
    find_local_isomorphism,
    iter_homs,
    representable,
    representable_via_pullback,
    transpose_from_closed_pushforward,
    transpose_from_extension,
    transpose_from_pushforward_open,
    yoneda_check,
)
from services.intlat import IntMatrix, saturate, snf
from services.sampling import random_local_system, random_sheaf, random_star_sheaf, trivial_local_system
from services.sheaf_ops import (
    Recollement,
    coproduct,
    coproduct_of_local_systems,
    decompose,
    extend_by_empty,
    family_action,
    glue,
    projection_pullback,
    projection_pushforward,
    pushforward_closed,
    pushforward_families,
    pushforward_open,
    restrict,
)
from services.sheaves import StratumLocalSystem, lattice_generators_from_local
from services.tame import connected_covers, descent_cross_check, kummer_classes

LOGGER = logging.getLogger(__name__)

RANK_FANS = ('A1', 'A2', 'A3', 'P1', 'P2', 'P3', 'F1')
SHEAF_FANS = ('A1', 'A2', 'P1', 'P2')
GALOIS_CASES = ((5, 2), (7, 3), (4, 3))


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: List[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message: str) -> None:
        self.failures.append(message)

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'passed': self.passed,
            'checked': self.checked,
            'failures': list(self.failures),
        }


def _categories(names: Iterable[str]):
    return {name: build_fundamental_category(standard_fan(name)) for name in names}


def check_rank_theorem(config, rng: random.Random, result: SuiteResult) -> None:
    for name, category in _categories(RANK_FANS).items():
        for s in category.objects:
            result.checked += 1
            group = category.hom_group(s)
            if group.free_rank != category.poset.orbit_dim[s] or group.torsion:
                result.fail(f'{name}: G_{s} ha rango {group.free_rank}, atteso {category.poset.orbit_dim[s]}.')


def _random_morphism(category, source: int, target: int, rng: random.Random) -> Morphism:
    element = [rng.randint(-5, 5) for _ in range(category.group_rank(source))]
    if category.level is None:
        return category.morphism(source, target, element)
    return category.morphism(source, target, element, rng.randrange(category.galois.galois_order))


def _composable_triples(category, count: int, rng: random.Random):
    poset = category.poset
    elements = list(category.objects)
    for _ in range(count):
        a = rng.choice(elements)
        b = rng.choice(sorted(poset.star(a)))
        c = rng.choice(sorted(poset.star(b)))
        d = rng.choice(sorted(poset.star(c)))
        yield (
            _random_morphism(category, a, b, rng),
            _random_morphism(category, b, c, rng),
            _random_morphism(category, c, d, rng),
        )


def _check_laws(name: str, category, count: int, rng: random.Random, result: SuiteResult) -> None:
    for f, g, h in _composable_triples(category, count, rng):
        result.checked += 1
        if category.compose(h, category.compose(g, f)) != category.compose(category.compose(h, g), f):
            result.fail(f'{name}: associatività violata per {f}, {g}, {h}.')
        if category.compose(category.identity(f.target), f) != f or category.compose(f, category.identity(f.source)) != f:
            result.fail(f'{name}: identità non neutra per {f}.')


def check_category_laws(config, rng: random.Random, result: SuiteResult, samples: int = 500) -> None:
    for name, category in _categories(RANK_FANS).items():
        _check_laws(name, category, samples, rng, result)
        for n, q in GALOIS_CASES:
            truncated = finite_level(category, galois_datum(n, q))
            _check_laws(f'{name}@{n}', truncated, max(samples // 10, 1), rng, result)
            for s in truncated.objects:
                result.checked += 1
                v = tuple(rng.randrange(n) for _ in range(truncated.group_rank(s)))
                conjugate = truncated.frobenius_conjugate(Morphism(s, s, v, 0))
                if conjugate != Morphism(s, s, tuple((q * x) % n for x in v), 0):
                    result.fail(f'{name}@{n}: Frob·v·Frob⁻¹ ≠ {q}·v su {s}.')


def _independent_gluing_data(open_part, z: int, rng: random.Random, max_stalk: int,
                             attempts: int = 5) -> Tuple[StratumLocalSystem, Tuple[int, ...]]:
    """Fibra casuale su ``z`` e mappa di confronto scelta tra tutte quelle equivarianti."""
    category = open_part.category
    family_set = pushforward_families(open_part, z)
    target_generators, target_frobenius = family_action(open_part, family_set)
    target = list(target_generators) + [target_frobenius]
    for _ in range(attempts):
        local = random_local_system(category, z, rng, max_stalk)
        source = list(lattice_generators_from_local(category, local)) + [local.frobenius]
        maps = equivariant_maps(source, local.size, target, len(family_set.families))
        if maps:
            return local, rng.choice(maps)
    return trivial_local_system(category, z, 0), ()


def check_recollement(config, rng: random.Random, result: SuiteResult) -> None:
    samples = int(config['RANDOM_SAMPLES'])
    max_stalk = int(config['MAX_STALK'])
    for name, category in _categories(SHEAF_FANS).items():
        minimal = category.poset.minimal_elements()
        for _ in range(samples):
            sheaf = random_sheaf(category, rng, max_stalk)
            z = rng.choice(minimal)
            result.checked += 1
            pieces = decompose(sheaf, z)
            if glue(pieces.open_part, pieces.closed_part, pieces.theta) != sheaf:
                result.fail(f'{name}: glue∘decompose diverso dall\'identità in {z}.')

            opened = [t for t in category.objects if t != z]
            open_part = random_sheaf(category, rng, max_stalk, opened)
            closed_part, theta = _independent_gluing_data(open_part, z, rng, max_stalk)
            result.checked += 1
            glued = glue(open_part, closed_part, theta)
            again = decompose(glued, z)
            if again != Recollement(open_part=open_part, closed_part=closed_part, theta=tuple(theta)):
                result.fail(f'{name}: decompose∘glue diverso dall\'identità in {z}.')
            if not are_isomorphic(glue(again.open_part, again.closed_part, again.theta), glued):
                result.fail(f'{name}: il reincollamento in {z} non è isomorfo al fascio incollato.')


def _opens(category) -> List[List[int]]:
    everything = set(category.objects)
    return [
        sorted(opened) for opened in category.poset.upward_closed_sets()
        if opened and opened != everything
    ]


def check_adjunctions(config, rng: random.Random, result: SuiteResult, max_stalk: int = 2) -> None:
    budget = int(config['SEARCH_BUDGET'])
    for name in ('A1', 'P1'):
        category = build_fundamental_category(standard_fan(name))
        everything = list(category.objects)
        on_x = enumerate_sheaves(category, max_stalk, budget=budget).representatives
        for opened in _opens(category):
            closed = sorted(set(everything) - set(opened))
            on_u = enumerate_sheaves(category, max_stalk, objects=opened, budget=budget).representatives
            on_z = enumerate_sheaves(category, max_stalk, objects=closed, budget=budget).representatives
            for F in on_u:
                extended = extend_by_empty(F, everything)
                for G in on_x:
                    result.checked += 1
                    left = [transpose_from_extension(m, opened).components for m in iter_homs(extended, G)]
                    right = [m.components for m in iter_homs(F, restrict(G, opened))]
                    if sorted(map(_key, left)) != sorted(map(_key, right)):
                        result.fail(f'{name}: Hom(j_!F, G) ≇ Hom(F, j^*G) su {opened}.')
                    pushed = pushforward_open(F, everything)
                    left = [m.components for m in iter_homs(restrict(G, opened), F)]
                    right = [
                        transpose_from_pushforward_open(m, opened, F).components for m in iter_homs(G, pushed)
                    ]
                    if sorted(map(_key, left)) != sorted(map(_key, right)):
                        result.fail(f'{name}: Hom(j^*G, F) ≇ Hom(G, j_*F) su {opened}.')
            for G in on_z:
                pushed = pushforward_closed(G, everything)
                for F in on_x:
                    result.checked += 1
                    left = [transpose_from_closed_pushforward(m, closed).components for m in iter_homs(F, pushed)]
                    right = [m.components for m in iter_homs(restrict(F, closed), G)]
                    if sorted(map(_key, left)) != sorted(map(_key, right)):
                        result.fail(f'{name}: Hom(F, i_*G) ≇ Hom(i^*F, G) su {closed}.')


def _key(components: Dict[int, Sequence[int]]):
    return tuple(sorted((s, tuple(values)) for s, values in components.items()))


def check_projection(config, rng: random.Random, result: SuiteResult) -> None:
    samples = int(config['RANDOM_SAMPLES'])
    max_stalk = int(config['MAX_STALK'])
    category = build_fundamental_category(standard_fan('A2'))
    for _ in range(samples):
        s = rng.choice(category.objects)
        result.checked += 1
        try:
            projection_pushforward(random_star_sheaf(category, s, rng, max_stalk), s)
        except PropertyCheckFailed as exc:
            result.fail(str(exc))
        local = random_local_system(category, s, rng, max_stalk)
        unit = projection_pushforward(projection_pullback(category, local), s)
        if find_local_isomorphism(unit, local) is None:
            result.fail(f'π_*π^*L ≇ L sullo strato {s}.')


def check_coproducts(config, rng: random.Random, result: SuiteResult) -> None:
    samples = int(config['RANDOM_SAMPLES'])
    max_stalk = int(config['MAX_STALK'])
    category = build_fundamental_category(standard_fan('A2'))
    for _ in range(samples):
        s = rng.choice(category.objects)
        first = random_star_sheaf(category, s, rng, max_stalk)
        second = random_star_sheaf(category, s, rng, max_stalk)
        result.checked += 1
        joined = projection_pushforward(coproduct(first, second), s)
        separate = coproduct_of_local_systems(projection_pushforward(first, s), projection_pushforward(second, s))
        if find_local_isomorphism(joined, separate) is None:
            result.fail(f'π_* non preserva il coprodotto sullo strato {s}.')


def check_descent(config, rng: random.Random, result: SuiteResult, max_exponent: int = 4) -> None:
    characteristic = int(config['CHARACTERISTIC'])
    check_lifts = bool(config['CHECK_LIFTS'])
    for name in ('A1', 'A2'):
        category = build_fundamental_category(standard_fan(name))
        for cover in connected_covers(category.lattice_rank, max_exponent, characteristic):
            for s in category.objects:
                result.checked += 1
                verdict = descent_cross_check(cover, category, s, check_lifts=check_lifts)
                if not verdict.agree:
                    result.fail(
                        f'{name}: discesa discorde su {s} per φ = {cover.matrix.entries} '
                        f'({verdict.pushforward_size} ≠ {verdict.expected_size}).'
                    )
    for m in (1, 2, 3, 4):
        result.checked += 1
        if len(kummer_classes(m)) != 1:
            result.fail(f'Più di un rivestimento di Kummer connesso di grado {m}.')


def check_yoneda(config, rng: random.Random, result: SuiteResult) -> None:
    samples = int(config['YONEDA_SAMPLES'])
    max_stalk = int(config['MAX_STALK'])
    for name, base in _categories(SHEAF_FANS).items():
        for n in config['YONEDA_LEVELS']:
            n = int(n)
            category = finite_level(base, galois_datum(n, n - 1 if n > 2 else 1, int(config['CHARACTERISTIC'])))
            for s in category.objects:
                result.checked += 1
                if not are_isomorphic(representable(category, s), representable_via_pullback(category, s)):
                    result.fail(f'{name}@{n}: y_{s} e j_!π^* del rivestimento regolare differiscono.')
            for _ in range(samples):
                sheaf = random_sheaf(category, rng, max_stalk)
                for s in category.objects:
                    result.checked += 1
                    verdict = yoneda_check(category, s, sheaf)
                    if not verdict.bijective:
                        result.fail(
                            f'{name}@{n}: Hom(y_{s}, F) ha {verdict.hom_count} elementi, F({s}) ne ha {verdict.fibre_size}.'
                        )


def count_small_sheaves(fan) -> int:
    """Fasci con supporti di cardinalità al più 1, contati sulle relazioni di faccia del ventaglio.

    Un supporto non vuoto su un cono obbliga supporti non vuoti su tutte le sue
    facce; i sottoinsiemi di raggi dei coni del ventaglio bastano a riconoscerle.
    """
    rays = [frozenset(cone.ray_indices) for cone in fan.cones]
    faces = [(big, small) for big in range(len(rays)) for small in range(len(rays))
             if big != small and rays[small] <= rays[big]]
    return sum(
        1 for sizes in product((0, 1), repeat=len(rays))
        if all(sizes[small] or not sizes[big] for big, small in faces)
    )


def check_classification(config, rng: random.Random, result: SuiteResult) -> None:
    budget = int(config['SEARCH_BUDGET'])
    expected = {'A1': 3, 'P1': 5}
    for name, category in _categories(('A1', 'P1', 'A2')).items():
        result.checked += 1
        count = enumerate_sheaves(category, 1, budget=budget).count
        oracle = count_small_sheaves(category.fan)
        if count != oracle or count != expected.get(name, oracle):
            result.fail(f'{name}: {count} classi con supporti ≤ 1, l\'oracolo ne conta {oracle}.')


def _random_matrix(rng: random.Random) -> IntMatrix:
    rows, cols = rng.randint(1, 4), rng.randint(1, 4)
    return IntMatrix.from_rows([[rng.randint(-6, 6) for _ in range(cols)] for _ in range(rows)], cols)


def check_lattice(config, rng: random.Random, result: SuiteResult, samples: int = 200) -> None:
    for _ in range(samples):
        A = _random_matrix(rng)
        result.checked += 1
        decomposition = snf(A)
        if decomposition.U @ A @ decomposition.V != decomposition.S:
            result.fail(f'U·A·V ≠ S per {A.entries}.')
        for unimodular in (decomposition.U, decomposition.V):
            if abs(sympy.Matrix(unimodular.entries).det()) != 1:
                result.fail(f'Trasformazione non unimodulare per {A.entries}.')
        factors = decomposition.invariant_factors
        for d, e in zip(factors, factors[1:]):
            if (d == 0 and e != 0) or (d and e % d):
                result.fail(f'Fattori invarianti {factors} non in catena di divisibilità.')
        once = saturate(A)
        if saturate(once) != once:
            result.fail(f'Saturazione non idempotente per {A.entries}.')
    for name, category in _categories(RANK_FANS).items():
        for s in category.objects:
            result.checked += 1
            if category.hom_group(s).torsion:
                result.fail(f'{name}: N/N_σ ha torsione sullo strato {s}.')


SUITES: Dict[str, Callable] = {
    'rank': check_rank_theorem,
    'category-laws': check_category_laws,
    'recollement': check_recollement,
    'adjunctions': check_adjunctions,
    'projection': check_projection,
    'coproducts': check_coproducts,
    'descent': check_descent,
    'yoneda': check_yoneda,
    'classification': check_classification,
    'lattice': check_lattice,
}


def run_suite(name: str, config, rng: random.Random) -> SuiteResult:
    result = SuiteResult(name)
    started = time.perf_counter()
    try:
        SUITES[name](config, rng, result)
    except PropertyCheckFailed as exc:
        result.fail(str(exc))
    result.seconds = time.perf_counter() - started
    LOGGER.info(
        'Suite %s: %s verifiche, %s fallimenti in %.1f s.',
        name, result.checked, len(result.failures), result.seconds,
    )
    return result


def run_selfcheck(config, names: Optional[Sequence[str]] = None, seed: Optional[int] = None) -> List[SuiteResult]:
    chosen = list(names) if names else list(SUITES)
    unknown = [name for name in chosen if name not in SUITES]
    if unknown:
        raise ValueError(f'Suite sconosciute: {", ".join(unknown)}.')
    rng = random.Random(int(config['DEFAULT_SEED']) if seed is None else seed)
    return [run_suite(name, config, rng) for name in chosen]


__all__ = [
    'SUITES',
    'SuiteResult',
    'count_small_sheaves',
    'run_selfcheck',
    'run_suite',
]
