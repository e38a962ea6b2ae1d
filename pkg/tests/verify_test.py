from collections import Counter

import pytest

from bitsmm_sim import bitmath, verify
from bitsmm_sim.bitmath import BoothAction
from bitsmm_sim.errors import VerificationFailure
from bitsmm_sim.mac import MacVariant


def test_full_protocol_enumeration():
    cases = verify.build_cases(seed=0)
    kinds = Counter(case.kind for case in cases)

    assert kinds['exhaustive'] == 2 * 8
    assert kinds['random_pairs'] == 2 * 8
    assert kinds['dot'] == 2 * 16 * 5
    assert kinds['matmul'] == 2 * 2 * 3
    assert [case.index for case in cases] == list(range(len(cases)))

    exhaustive_pairs = sum(4 ** case.width for case in cases if case.kind == 'exhaustive')
    assert exhaustive_pairs == 2 * sum(4 ** w for w in range(1, 9))
    assert all(case.n >= 100 for case in cases if case.kind == 'random_pairs')
    assert {case.n for case in cases if case.kind == 'dot'} == {1, 2, 10, 100, 1000}
    assert {(case.rows, case.cols) for case in cases if case.kind == 'matmul'} == \
        {(4, 16), (8, 32), (16, 64)}


def test_sub_problem_shapes_fit():
    for case in verify.build_cases(seed=123):
        if case.kind == 'matmul':
            assert 1 <= case.m <= case.rows and 1 <= case.p <= case.cols
            assert 1 <= case.width <= 16


def test_quick_suite_passes():
    summary = verify.run_verification(seed=42, quick=True)

    assert list(summary.columns) == verify.SUMMARY_COLUMNS
    assert (summary['status'] == 'PASS').all()
    exhaustive = summary[summary['kind'] == 'exhaustive']
    assert exhaustive['cases'].sum() == 2 * sum(4 ** w for w in range(1, 5))


def test_quick_suite_is_deterministic():
    first = verify.run_verification(seed=7, quick=True, variants=[MacVariant.SBMWC])
    second = verify.run_verification(seed=7, quick=True, variants=[MacVariant.SBMWC], workers=3)
    assert first.equals(second)


def test_injected_recode_fault(mocker):
    mocker.patch.dict(bitmath.BOOTH_TABLE, {(1, 0): BoothAction.ADD_M})

    with pytest.raises(VerificationFailure) as e:
        verify.run_verification(seed=42, quick=True, variants=[MacVariant.BOOTH])

    reproducer = e.value.reproducer
    assert reproducer['kind'] == 'exhaustive'
    assert reproducer['variant'] == 'booth'
    assert reproducer['width'] == 1
    assert reproducer['seed'] == 42
    assert reproducer['expected'] == reproducer['a'] * reproducer['b'] != reproducer['got']


def test_injected_fault_spares_sbmwc(mocker):
    mocker.patch.dict(bitmath.BOOTH_TABLE, {(1, 0): BoothAction.ADD_M})
    summary = verify.run_verification(seed=1, quick=True, variants=[MacVariant.SBMWC])
    assert (summary['status'] == 'PASS').all()
