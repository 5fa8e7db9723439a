"""Ventagli di riferimento usati da test, selfcheck e riga di comando."""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Dict, List

from services.diagnostics import FanError
from services.fan import Fan, build_fan


def _unit(rank: int, i: int) -> List[int]:
    return [1 if j == i else 0 for j in range(rank)]


def affine_space(rank: int) -> Fan:
    """A^n: un solo cono massimale generato dalla base standard."""
    return build_fan(rank, [_unit(rank, i) for i in range(rank)], [list(range(rank))])


def projective_space(rank: int) -> Fan:
    """P^n: raggi e_1, ..., e_n e -(e_1 + ... + e_n)."""
    if rank < 1:
        raise FanError('Lo spazio proiettivo richiede rango almeno 1.')
    rays = [_unit(rank, i) for i in range(rank)] + [[-1] * rank]
    return build_fan(rank, rays, [list(c) for c in combinations(range(rank + 1), rank)])


def hirzebruch(a: int) -> Fan:
    """Superficie di Hirzebruch F_a."""
    rays = [[1, 0], [0, 1], [-1, a], [0, -1]]
    return build_fan(2, rays, [[0, 1], [1, 2], [2, 3], [3, 0]])


def remove_maximal_cone(fan: Fan, cone_id: int) -> Fan:
    """Toglie un cono massimale conservando tutte le sue facce proprie."""
    target = fan.cone(cone_id)
    if target not in fan.maximal_cones():
        raise FanError(f'Il cono {cone_id} non è massimale.')
    remaining = [list(cone.ray_indices) for cone in fan.cones if cone.id != cone_id]
    return build_fan(fan.rank, fan.rays, remaining)


STANDARD_FANS: Dict[str, Callable[[], Fan]] = {
    'A1': lambda: affine_space(1),
    'A2': lambda: affine_space(2),
    'A3': lambda: affine_space(3),
    'P1': lambda: projective_space(1),
    'P2': lambda: projective_space(2),
    'P3': lambda: projective_space(3),
    'F1': lambda: hirzebruch(1),
    'P2-minus-cone': lambda: remove_maximal_cone(projective_space(2), len(projective_space(2)) - 1),
}


def standard_fan(name: str) -> Fan:
    try:
        factory = STANDARD_FANS[name]
    except KeyError as exc:
        raise FanError(f'Ventaglio di catalogo sconosciuto: {name!r}.') from exc
    return factory()


__all__ = [
    'STANDARD_FANS',
    'affine_space',
    'hirzebruch',
    'projective_space',
    'remove_maximal_cone',
    'standard_fan',
]
