"""Formati di scambio: ventagli, fasci e rivestimenti in JSON, poset in JSON e DOT.

Tutti i file portano ``"format": 1``. L'output è sempre serializzato con chiavi
ordinate e indentazione 2, quindi è deterministico byte per byte.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from services.diagnostics import FanError, FormatError, SheafError
from services.fan import Fan, OrbitPoset, build_fan, validate_fan
from services.fan_catalog import STANDARD_FANS, standard_fan
from services.fundcat import build_fundamental_category, finite_level, galois_datum
from services.sheaves import ConstructibleSheaf, is_finite_level, make_sheaf, validate_sheaf
from services.tame import CharacterSurjection, character_map

LOGGER = logging.getLogger(__name__)

FORMAT_VERSION = 1

Source = Union[str, Path, Dict[str, Any]]


def dump_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + '\n'


def _read(source: Source) -> Tuple[Any, Optional[Path]]:
    """Restituisce i dati JSON e la cartella del file (per i riferimenti relativi)."""
    if isinstance(source, dict):
        return source, None
    path: Optional[Path] = None
    if isinstance(source, Path) or not str(source).lstrip().startswith('{'):
        path = Path(source)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as exc:
            raise FormatError(f'Impossibile leggere {path}: {exc.strerror or exc}') from exc
    else:
        text = str(source)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f'JSON non valido: {exc.msg}', line=exc.lineno, column=exc.colno) from exc
    return data, path.parent if path is not None else None


def _field(data: Dict[str, Any], key: str, path: str, kind, *, required: bool = True, default=None):
    if not isinstance(data, dict):
        raise FormatError('Atteso un oggetto JSON', field_path=path or '$')
    if key not in data:
        if required:
            raise FormatError(f'Campo obbligatorio mancante: {key!r}', field_path=f'{path}.{key}' if path else key)
        return default
    value = data[key]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise FormatError(f'Tipo non valido per {key!r}', field_path=f'{path}.{key}' if path else key)
    return value


def _int_list(value: Any, path: str) -> List[int]:
    if not isinstance(value, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in value):
        raise FormatError('Attesa una lista di interi', field_path=path)
    return list(value)


def _int_matrix(value: Any, path: str) -> List[List[int]]:
    if not isinstance(value, list):
        raise FormatError('Attesa una lista di liste di interi', field_path=path)
    return [_int_list(row, f'{path}[{i}]') for i, row in enumerate(value)]


def _check_version(data: Any, path: str = '') -> None:
    version = _field(data, 'format', path, int)
    if version != FORMAT_VERSION:
        raise FormatError(f'Versione di formato non supportata: {version}', field_path=f'{path}.format' if path else 'format')


# --- ventagli ---------------------------------------------------------------

def fan_from_dict(data: Any, path: str = '', *, validate: bool = True) -> Fan:
    _check_version(data, path)
    rank = _field(data, 'rank', path, int)
    if rank < 0:
        raise FormatError('Il rango deve essere non negativo', field_path=f'{path}.rank' if path else 'rank')
    prefix = f'{path}.' if path else ''
    rays = _int_matrix(_field(data, 'rays', path, list), f'{prefix}rays')
    for i, ray in enumerate(rays):
        if len(ray) != rank:
            raise FormatError(f'Il raggio ha {len(ray)} componenti invece di {rank}', field_path=f'{prefix}rays[{i}]')
    cones = _int_matrix(_field(data, 'cones', path, list), f'{prefix}cones')
    for i, cone in enumerate(cones):
        for j, index in enumerate(cone):
            if not 0 <= index < len(rays):
                raise FormatError(f'Indice di raggio fuori intervallo: {index}', field_path=f'{prefix}cones[{i}][{j}]')
    fan = build_fan(rank, rays, cones)
    if validate:
        report = validate_fan(fan)
        if not report.valid:
            raise FanError(f'Ventaglio non valido: {report.first().message}', report=report)
    return fan


def parse_fan(source: Source, *, validate: bool = True) -> Fan:
    """Legge un ventaglio da testo JSON, da un percorso o da un dizionario già decodificato."""
    data, _ = _read(source)
    return fan_from_dict(data, validate=validate)


def fan_to_dict(fan: Fan) -> Dict[str, Any]:
    """Solo i coni massimali: le facce sono implicite."""
    return {
        'format': FORMAT_VERSION,
        'rank': fan.rank,
        'rays': [list(ray) for ray in fan.rays],
        'cones': [list(cone.ray_indices) for cone in fan.maximal_cones() if not cone.is_zero],
    }


def serialize_fan(fan: Fan) -> str:
    return dump_json(fan_to_dict(fan))


# --- poset ------------------------------------------------------------------

def poset_to_dict(fan: Fan, poset: OrbitPoset) -> Dict[str, Any]:
    return {
        'format': FORMAT_VERSION,
        'top': poset.top,
        'nodes': [
            {'id': s, 'rays': list(fan.cone(s).ray_indices), 'orbit_dim': poset.orbit_dim[s]}
            for s in poset.elements
        ],
        'edges': [[s, t] for s, t in poset.covers()],
    }


def poset_to_dot(fan: Fan, poset: OrbitPoset) -> str:
    lines = ['digraph orbit_poset {', '  rankdir=BT;']
    for s in poset.elements:
        rays = ','.join(str(i) for i in fan.cone(s).ray_indices)
        lines.append(f'  n{s} [label="{s}: {{{rays}}} dim {poset.orbit_dim[s]}"];')
    for s, t in poset.covers():
        lines.append(f'  n{s} -> n{t};')
    lines.append('}')
    return '\n'.join(lines) + '\n'


# --- fasci ------------------------------------------------------------------

def _resolve_fan(reference: Any, base_dir: Optional[Path]) -> Tuple[Fan, Any]:
    if isinstance(reference, dict):
        return fan_from_dict(reference, 'fan'), reference
    if isinstance(reference, str):
        if reference in STANDARD_FANS:
            return standard_fan(reference), reference
        path = Path(reference)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        data, _ = _read(path)
        return fan_from_dict(data), reference
    raise FormatError('Riferimento al ventaglio non valido', field_path='fan')


def category_for(fan: Fan, level: Optional[int] = None, frob: int = 1, characteristic: int = 0):
    """Categoria fondamentale, troncata al livello ``level`` se indicato."""
    base = build_fundamental_category(fan)
    if level is None:
        return base
    return finite_level(base, galois_datum(level, frob, characteristic))


def _cone_id(fan: Fan, value: Any, path: str) -> int:
    indices = _int_list(value, path)
    cone = fan.find(indices)
    if cone is None:
        raise FormatError(f'Nessun cono con raggi {indices}', field_path=path)
    return cone.id


def sheaf_from_dict(data: Any, *, category=None, base_dir: Optional[Path] = None,
                    characteristic: int = 0, validate: bool = True) -> ConstructibleSheaf:
    _check_version(data)
    if 'fan' not in data:
        raise FormatError("Campo obbligatorio mancante: 'fan'", field_path='fan')
    fan, _ = _resolve_fan(data['fan'], base_dir)
    level = _field(data, 'level', '', int, required=False)
    frob = _field(data, 'frob', '', int, required=False, default=1)
    if category is None:
        try:
            category = category_for(fan, level, frob, characteristic)
        except ValueError as exc:
            raise FormatError(str(exc), field_path='level') from exc
    else:
        if category.fan != fan:
            raise FormatError('Il fascio è definito su un ventaglio diverso', field_path='fan')
        if category.level != level:
            raise FormatError('Il livello del fascio non coincide con quello richiesto', field_path='level')

    carriers: Dict[int, int] = {}
    generators: Dict[int, List[List[int]]] = {}
    frobenius: Dict[int, List[int]] = {}
    for i, stalk in enumerate(_field(data, 'stalks', '', list)):
        path = f'stalks[{i}]'
        s = _cone_id(fan, _field(stalk, 'cone', path, list), f'{path}.cone')
        if s in carriers:
            raise FormatError(f'Cono {s} ripetuto', field_path=f'{path}.cone')
        carriers[s] = _field(stalk, 'size', path, int)
        if 'generators' in stalk:
            generators[s] = _int_matrix(stalk['generators'], f'{path}.generators')
        if 'frobenius' in stalk:
            frobenius[s] = _int_list(stalk['frobenius'], f'{path}.frobenius')
    structure: Dict[Tuple[int, int], List[int]] = {}
    for i, entry in enumerate(_field(data, 'maps', '', list, required=False, default=[])):
        path = f'maps[{i}]'
        s = _cone_id(fan, _field(entry, 'source', path, list), f'{path}.source')
        t = _cone_id(fan, _field(entry, 'target', path, list), f'{path}.target')
        structure[(s, t)] = _int_list(_field(entry, 'map', path, list), f'{path}.map')
    sheaf = make_sheaf(category, carriers, generators=generators, structure=structure,
                       frobenius=frobenius, validate=False)
    if validate:
        report = validate_sheaf(sheaf)
        if not report.valid:
            raise SheafError(f'Fascio non valido: {report.first().message}', report=report)
    LOGGER.debug('Fascio letto: supporti %s.', sheaf.carriers)
    return sheaf


def parse_sheaf(source: Source, *, category=None, characteristic: int = 0,
                validate: bool = True) -> ConstructibleSheaf:
    data, base_dir = _read(source)
    if not isinstance(data, dict):
        raise FormatError('Atteso un oggetto JSON', field_path='$')
    return sheaf_from_dict(data, category=category, base_dir=base_dir,
                           characteristic=characteristic, validate=validate)


def sheaf_to_dict(sheaf: ConstructibleSheaf, fan_reference: Any = None) -> Dict[str, Any]:
    category = sheaf.category
    fan = category.fan
    data: Dict[str, Any] = {
        'format': FORMAT_VERSION,
        'fan': fan_reference if fan_reference is not None else fan_to_dict(fan),
    }
    if is_finite_level(category):
        data['level'] = category.level
        data['frob'] = category.galois.char_exponent
    stalks = []
    for s in sheaf.objects:
        stalk: Dict[str, Any] = {
            'cone': list(fan.cone(s).ray_indices),
            'size': sheaf.carriers[s],
            'generators': [list(p) for p in sheaf.generators[s]],
        }
        if is_finite_level(category):
            stalk['frobenius'] = list(sheaf.frobenius[s])
        stalks.append(stalk)
    data['stalks'] = stalks
    data['maps'] = [
        {
            'source': list(fan.cone(s).ray_indices),
            'target': list(fan.cone(t).ray_indices),
            'map': list(sheaf.structure[(s, t)]),
        }
        for s, t in sorted(sheaf.structure)
    ]
    return data


def serialize_sheaf(sheaf: ConstructibleSheaf, fan_reference: Any = None) -> str:
    return dump_json(sheaf_to_dict(sheaf, fan_reference))


# --- rivestimenti -----------------------------------------------------------

def cover_from_dict(data: Any, *, require_surjective: bool = True) -> CharacterSurjection:
    _check_version(data)
    rank = _field(data, 'rank', '', int)
    factors = _int_list(_field(data, 'invariant_factors', '', list), 'invariant_factors')
    matrix = _int_matrix(_field(data, 'phi_matrix', '', list), 'phi_matrix')
    return character_map(rank, factors, matrix, require_surjective=require_surjective)


def parse_cover(source: Source, *, require_surjective: bool = True) -> CharacterSurjection:
    data, _ = _read(source)
    return cover_from_dict(data, require_surjective=require_surjective)


def cover_to_dict(surjection: CharacterSurjection) -> Dict[str, Any]:
    return {
        'format': FORMAT_VERSION,
        'rank': surjection.rank,
        'invariant_factors': list(surjection.target.invariant_factors),
        'phi_matrix': [list(row) for row in surjection.matrix.entries],
    }


def serialize_cover(surjection: CharacterSurjection) -> str:
    return dump_json(cover_to_dict(surjection))


__all__ = [
    'FORMAT_VERSION',
    'category_for',
    'cover_from_dict',
    'cover_to_dict',
    'dump_json',
    'fan_from_dict',
    'fan_to_dict',
    'parse_cover',
    'parse_fan',
    'parse_sheaf',
    'poset_to_dict',
    'poset_to_dot',
    'serialize_cover',
    'serialize_fan',
    'serialize_sheaf',
    'sheaf_from_dict',
    'sheaf_to_dict',
]
