from __future__ import annotations

import pytest

from services.fan_catalog import standard_fan
from services.selfcheck import SUITES, count_small_sheaves, run_selfcheck, run_suite


@pytest.mark.parametrize('name', sorted(SUITES))
def test_every_suite_passes_with_reduced_samples(config, rng, name):
    result = run_suite(name, config, rng)

    assert result.passed, result.failures
    assert result.checked > 0


def test_run_selfcheck_is_reproducible(config):
    first = run_selfcheck(config, ['recollement'], seed=11)
    second = run_selfcheck(config, ['recollement'], seed=11)

    assert [r.to_dict() for r in first] == [r.to_dict() for r in second]


def test_unknown_suite_is_rejected(config):
    with pytest.raises(ValueError):
        run_selfcheck(config, ['nope'])


@pytest.mark.parametrize('name, expected', [('A1', 3), ('P1', 5), ('A2', 6), ('P2', 19)])
def test_small_sheaves_are_counted_from_face_relations(name, expected):
    assert count_small_sheaves(standard_fan(name)) == expected


def test_recollement_suite_checks_independent_gluing_data(config, rng):
    result = run_suite('recollement', config, rng)

    assert result.passed, result.failures
    assert result.checked == 2 * int(config['RANDOM_SAMPLES']) * 4
