"""Riga di comando per ventagli, categorie fondamentali, fasci e rivestimenti di Kummer.

Codici di uscita: 0 successo, 1 uso scorretto, 2 input non valido,
3 verifica di proprietà fallita.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from config import create_config
from services.diagnostics import CategoryMismatchError, CoverError, PropertyCheckFailed, SearchBudgetExceeded
from services.fan import Fan, orbit_poset, span_sublattice, validate_fan
from services.fan_catalog import STANDARD_FANS, standard_fan
from services.formats import (
    category_for,
    dump_json,
    fan_to_dict,
    parse_cover,
    parse_fan,
    parse_sheaf,
    poset_to_dict,
    poset_to_dot,
    serialize_sheaf,
    sheaf_to_dict,
)
from services.fundcat import hasse_generators
from services.homs import enumerate_sheaves, find_isomorphism, hom_set
from services.selfcheck import SUITES, run_selfcheck
from services.sheaf_ops import decompose, glue, pushforward_closed, pushforward_open, sections
from services.sheaves import validate_sheaf
from services.tame import (
    cover_components,
    descent_cross_check,
    extension_from_surjection,
    extension_index,
    same_cover,
    surjection_from_extension,
)

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_PROPERTY = 3


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    """Come ``argparse.ArgumentParser`` ma senza uscire dal processo sugli errori."""

    def error(self, message: str) -> None:
        raise UsageError(f'{self.prog}: {message}')


def build_arg_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='exodromy', description=__doc__)
    parser.add_argument('--seed', type=int, help='Seme per le suite randomizzate (default da configurazione).')
    parser.add_argument('--level', type=int, help='Livello finito n della categoria.')
    parser.add_argument('--frob', type=int, default=1, help='Esponente ciclotomico q modulo n.')
    parser.add_argument('--char', type=int, dest='characteristic', help='Caratteristica p (0 = nessun vincolo).')
    parser.add_argument('--verbose', action='store_true', help='Abilita log dettagliati.')
    commands = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    commands.required = True

    fan = commands.add_parser('fan', help='Operazioni sui ventagli.')
    fan_actions = fan.add_subparsers(dest='action', parser_class=_ArgumentParser)
    fan_actions.required = True
    validate = fan_actions.add_parser('validate', help='Verifica gli assiomi di ventaglio.')
    validate.add_argument('fan', help='File JSON oppure nome di catalogo (A1, P2, ...).')

    poset = commands.add_parser('poset', help='Esporta il poset delle orbite.')
    poset.add_argument('fan')
    output = poset.add_mutually_exclusive_group()
    output.add_argument('--dot', action='store_true', help='Formato DOT.')
    output.add_argument('--json', action='store_true', help='Formato JSON (default).')

    fundcat = commands.add_parser('fundcat', help='Descrive la categoria fondamentale.')
    fundcat.add_argument('fan')

    sheaf = commands.add_parser('sheaf', help='Operazioni sui fasci.')
    sheaf_actions = sheaf.add_subparsers(dest='action', parser_class=_ArgumentParser)
    sheaf_actions.required = True
    sheaf_actions.add_parser('validate', help='Valida un fascio.').add_argument('sheaf')
    sections_parser = sheaf_actions.add_parser('sections', help='Conta le sezioni su un aperto.')
    sections_parser.add_argument('sheaf')
    sections_parser.add_argument('--objects', type=int, nargs='*', help='Id dei coni dell\'aperto.')
    pushforward = sheaf_actions.add_parser('pushforward', help='j_* (aperto) o i_* (chiuso) su tutto X.')
    pushforward.add_argument('sheaf')
    pushforward.add_argument('--kind', choices=('open', 'closed'), default='open')
    glue_parser = sheaf_actions.add_parser('glue', help='Decompone e reincolla lungo uno strato minimale.')
    glue_parser.add_argument('sheaf')
    glue_parser.add_argument('--stratum', type=int, required=True)
    hom = sheaf_actions.add_parser('hom', help='Conta i morfismi tra due fasci.')
    hom.add_argument('source')
    hom.add_argument('target')

    enumerate_parser = commands.add_parser('enumerate', help='Classi di isomorfismo di fasci piccoli.')
    enumerate_parser.add_argument('fan')
    enumerate_parser.add_argument('--max-stalk', type=int, default=1)
    enumerate_parser.add_argument('--json', action='store_true', help='Stampa anche i rappresentanti.')

    cover = commands.add_parser('cover', help='Rivestimenti di Kummer.')
    cover_actions = cover.add_subparsers(dest='action', parser_class=_ArgumentParser)
    cover_actions.required = True
    build = cover_actions.add_parser('build', help='Reticolo di estensione di una suriezione.')
    build.add_argument('cover')
    for name in ('components', 'crosscheck'):
        action = cover_actions.add_parser(name)
        action.add_argument('cover')
        action.add_argument('--fan', required=True)
        action.add_argument('--allow-disconnected', action='store_true',
                            help='Accetta φ non suriettive (rivestimenti non connessi).')

    selfcheck = commands.add_parser('selfcheck', help='Esegue le suite di autoverifica.')
    selfcheck.add_argument('--suite', action='append', choices=sorted(SUITES), help='Suite da eseguire.')
    selfcheck.add_argument('--samples', type=int, help='Sovrascrive RANDOM_SAMPLES.')
    return parser


def _load_fan(reference: str, *, validate: bool = True) -> Fan:
    if reference in STANDARD_FANS:
        return standard_fan(reference)
    return parse_fan(Path(reference), validate=validate)


def _fan_reference(reference: str, fan: Fan) -> Any:
    return reference if reference in STANDARD_FANS else fan_to_dict(fan)


def _category(args, fan: Fan):
    return category_for(fan, args.level, args.frob, args.characteristic)


def _fan_validate(args, config) -> Tuple[int, str]:
    fan = _load_fan(args.fan, validate=False)
    report = validate_fan(fan)
    payload = report.to_dict()
    payload['cones'] = len(fan.cones)
    if report.valid:
        LOGGER.info('Ventaglio valido con %s coni.', len(fan.cones))
        return EXIT_OK, dump_json(payload)
    return EXIT_INVALID, dump_json(payload)


def _poset(args, config) -> Tuple[int, str]:
    fan = _load_fan(args.fan)
    poset = orbit_poset(fan)
    if args.dot:
        return EXIT_OK, poset_to_dot(fan, poset)
    return EXIT_OK, dump_json(poset_to_dict(fan, poset))


def _fundcat(args, config) -> Tuple[int, str]:
    fan = _load_fan(args.fan)
    category = _category(args, fan)
    objects = []
    for s in category.objects:
        group = category.hom_group(s)
        entry: Dict[str, Any] = {
            'id': s,
            'rays': list(fan.cone(s).ray_indices),
            'group_rank': group.free_rank,
            'star': sorted(category.poset.star(s)),
        }
        if category.level is not None:
            entry['hom_size'] = category.hom_size(s, s)
        objects.append(entry)
    payload: Dict[str, Any] = {'objects': objects, 'generators': hasse_generators(category)}
    if category.level is not None:
        payload['level'] = category.level
        payload['frob'] = category.galois.char_exponent
        payload['galois_order'] = category.galois.galois_order
    return EXIT_OK, dump_json(payload)


def _load_sheaf(path: str, args, category=None):
    sheaf = parse_sheaf(Path(path), category=category, characteristic=args.characteristic)
    if args.level is not None and sheaf.category.level != args.level:
        raise CategoryMismatchError(f'Il fascio {path} non è al livello {args.level}.')
    return sheaf


def _sheaf(args, config) -> Tuple[int, str]:
    if args.action == 'validate':
        sheaf = parse_sheaf(Path(args.sheaf), characteristic=args.characteristic, validate=False)
        report = validate_sheaf(sheaf)
        return (EXIT_OK if report.valid else EXIT_INVALID), dump_json(report.to_dict())

    if args.action == 'hom':
        source = _load_sheaf(args.source, args)
        target = _load_sheaf(args.target, args, category=source.category)
        morphisms = hom_set(source, target)
        isomorphic = find_isomorphism(source, target) is not None if source.objects == target.objects else False
        return EXIT_OK, dump_json({'count': len(morphisms), 'isomorphic': isomorphic})

    sheaf = _load_sheaf(args.sheaf, args)
    if args.action == 'sections':
        family_set = sections(sheaf, args.objects)
        return EXIT_OK, dump_json({
            'objects': list(family_set.components),
            'count': len(family_set.families),
            'sections': [list(family) for family in family_set.families],
        })
    if args.action == 'pushforward':
        if args.kind == 'open':
            pushed = pushforward_open(sheaf, check_lifts=bool(config['CHECK_LIFTS']))
        else:
            pushed = pushforward_closed(sheaf)
        return EXIT_OK, serialize_sheaf(pushed)

    # glue
    pieces = decompose(sheaf, args.stratum)
    glued = glue(pieces.open_part, pieces.closed_part, pieces.theta)
    if glued != sheaf:
        raise PropertyCheckFailed(f'Il reincollamento lungo {args.stratum} non restituisce il fascio di partenza.')
    return EXIT_OK, dump_json({
        'stratum': args.stratum,
        'open_objects': list(pieces.open_part.objects),
        'closed_size': pieces.closed_part.size,
        'theta': list(pieces.theta),
        'round_trip': True,
    })


def _enumerate(args, config) -> Tuple[int, str]:
    fan = _load_fan(args.fan)
    category = _category(args, fan)
    result = enumerate_sheaves(category, args.max_stalk, budget=int(config['SEARCH_BUDGET']))
    if not args.json:
        return EXIT_OK, f'{result.count}\n'
    reference = _fan_reference(args.fan, fan)
    return EXIT_OK, dump_json({
        'count': result.count,
        'examined': result.examined,
        'representatives': [sheaf_to_dict(sheaf, reference) for sheaf in result.representatives],
    })


def _cover(args, config) -> Tuple[int, str]:
    allow = getattr(args, 'allow_disconnected', False)
    surjection = parse_cover(Path(args.cover), require_surjective=not allow)
    if args.action == 'build':
        spec = extension_from_surjection(surjection, args.characteristic)
        return EXIT_OK, dump_json({
            'rank': spec.base_rank,
            'invariant_factors': list(spec.deck.invariant_factors),
            'denominator': spec.denominator,
            'numerators': [list(row) for row in spec.numerators.entries],
            'index': extension_index(spec),
            'round_trip': same_cover(surjection_from_extension(spec), surjection),
        })

    fan = _load_fan(args.fan)
    if fan.rank != surjection.rank:
        raise CoverError(f'φ è definita su Z^{surjection.rank}, il ventaglio ha rango {fan.rank}.')
    if args.action == 'components':
        rows = []
        for cone in fan.cones:
            components = cover_components(surjection, span_sublattice(cone))
            rows.append({
                'id': cone.id,
                'rays': list(cone.ray_indices),
                'descends': components.descends,
                'component_count': components.component_count,
            })
        return EXIT_OK, dump_json({'strata': rows})

    category = _category(args, fan)
    verdicts = [
        descent_cross_check(surjection, category, s, check_lifts=bool(config['CHECK_LIFTS']))
        for s in category.objects
    ]
    payload = {
        'strata': [
            {
                'id': v.stratum,
                'descends': v.descends,
                'pushforward_size': v.pushforward_size,
                'expected_size': v.expected_size,
                'agree': v.agree,
            }
            for v in verdicts
        ]
    }
    code = EXIT_OK if all(v.agree for v in verdicts) else EXIT_PROPERTY
    return code, dump_json(payload)


def _selfcheck(args, config) -> Tuple[int, str]:
    if args.samples is not None:
        config['RANDOM_SAMPLES'] = args.samples
        config['YONEDA_SAMPLES'] = min(int(config['YONEDA_SAMPLES']), args.samples)
    results = run_selfcheck(config, args.suite, args.seed)
    passed = all(result.passed for result in results)
    payload = {'passed': passed, 'suites': [result.to_dict() for result in results]}
    return (EXIT_OK if passed else EXIT_PROPERTY), dump_json(payload)


HANDLERS = {
    'fan': _fan_validate,
    'poset': _poset,
    'fundcat': _fundcat,
    'sheaf': _sheaf,
    'enumerate': _enumerate,
    'cover': _cover,
    'selfcheck': _selfcheck,
}


def run_command(argv: Sequence[str], config=None) -> Tuple[int, str]:
    """Esegue un comando e restituisce ``(codice di uscita, output)``."""
    parser = build_arg_parser()
    try:
        args = parser.parse_args(list(argv))
    except UsageError as exc:
        return EXIT_USAGE, f'{exc}\n'
    except SystemExit as exc:
        # --help
        return (EXIT_OK if not exc.code else EXIT_USAGE), ''

    config = config if config is not None else create_config()
    logging.basicConfig(level=logging.DEBUG if args.verbose else config['LOG_LEVEL'])
    if args.characteristic is None:
        args.characteristic = int(config['CHARACTERISTIC'])
    if args.seed is None:
        args.seed = int(config['DEFAULT_SEED'])

    try:
        return HANDLERS[args.command](args, config)
    except PropertyCheckFailed as exc:
        LOGGER.error('Verifica fallita: %s', exc)
        return EXIT_PROPERTY, f'{exc}\n'
    except (ValueError, SearchBudgetExceeded) as exc:
        LOGGER.error('Input non valido: %s', exc)
        report = getattr(exc, 'report', None)
        if report is not None:
            return EXIT_INVALID, dump_json({'error': str(exc), **report.to_dict()})
        return EXIT_INVALID, f'{exc}\n'


def main(argv: Optional[List[str]] = None) -> int:
    code, output = run_command(sys.argv[1:] if argv is None else argv)
    if output:
        stream = sys.stdout if code in (EXIT_OK, EXIT_PROPERTY) else sys.stderr
        stream.write(output)
    return code


if __name__ == '__main__':
    raise SystemExit(main())
