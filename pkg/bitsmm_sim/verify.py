from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Tuple
import logging

import numpy as np
import pandas as pd

from bitsmm_sim import systolic
from bitsmm_sim.bitmath import SignedWord, bitsmm_cycle_count, oracle_product, word_range
from bitsmm_sim.errors import VerificationFailure
from bitsmm_sim.mac import MacVariant, drive_dot_product, drive_multiplication
from bitsmm_sim.perfmodel import EVALUATED_TOPOLOGIES
from bitsmm_sim.type_utils import format_topology

logger = logging.getLogger(__name__)

EXHAUSTIVE_WIDTHS = range(1, 9)
RANDOM_WIDTHS = range(9, 17)
RANDOM_PAIRS = 100
DOT_WIDTHS = range(1, 17)
DOT_LENGTHS = (1, 2, 10, 100, 1000)
MATMUL_N = 3

QUICK_EXHAUSTIVE_WIDTHS = range(1, 5)
QUICK_RANDOM_PAIRS = 10
QUICK_DOT_LENGTHS = (1, 2, 10)
QUICK_TOPOLOGIES = ((4, 16),)

SUMMARY_COLUMNS = ['index', 'kind', 'variant', 'width', 'topology', 'm', 'n', 'p', 'cases',
                   'status']


@dataclass(frozen=True)
class VerifyCase:
    """One independent unit of the verification protocol

    Args:
        index (int):
            position in the suite; results are reported in this order
        kind (str):
            `exhaustive`, `random_pairs`, `dot` or `matmul`
        variant (MacVariant):
            MAC architecture under test
        width (int):
            operand width
        n (int):
            pair count (`random_pairs`), vector length (`dot`) or shared dimension (`matmul`)
        rows, cols (int):
            array shape, `matmul` only
        m, p (int):
            result shape, `matmul` only
    """
    index: int
    kind: str
    variant: MacVariant
    width: int
    n: int = 1
    rows: int = 1
    cols: int = 1
    m: int = 1
    p: int = 1

    def rng(self, seed: int) -> np.random.Generator:
        return np.random.default_rng([seed, self.index])


@dataclass
class CaseResult:
    case: VerifyCase
    checked: int
    failure: Optional[Dict[str, Any]] = None


def build_cases(seed: int = 0, quick: bool = False,
                variants: Iterable[MacVariant] = tuple(MacVariant)) -> List[VerifyCase]:
    """Enumerates the verification protocol

    - every multiplicand/multiplier pair at the exhaustive widths
    - random pairs at widths 9 to 16
    - random dot products at every width and length, checking the (n + 1) * width latency
    - random matrix multiplications on the evaluated topologies, full size and one random
      sub-problem each

    Args:
        seed (int):
            base seed; sub-problem shapes and widths are drawn from it
        quick (bool):
            reduced suite, for smoke runs
        variants (Iterable[MacVariant]):
            MAC architectures to cover

    Returns:
        List[VerifyCase]:
            cases in index order
    """
    variants = list(variants)
    exhaustive = QUICK_EXHAUSTIVE_WIDTHS if quick else EXHAUSTIVE_WIDTHS
    pairs = QUICK_RANDOM_PAIRS if quick else RANDOM_PAIRS
    lengths = QUICK_DOT_LENGTHS if quick else DOT_LENGTHS
    topologies = QUICK_TOPOLOGIES if quick else EVALUATED_TOPOLOGIES

    specs = []
    for variant in variants:
        specs += [dict(kind='exhaustive', variant=variant, width=w) for w in exhaustive]
        specs += [dict(kind='random_pairs', variant=variant, width=w, n=pairs)
                  for w in RANDOM_WIDTHS]
        specs += [dict(kind='dot', variant=variant, width=w, n=length)
                  for w in DOT_WIDTHS for length in lengths]

    shapes = np.random.default_rng(seed)
    for rows, cols in topologies:
        sub_m = int(shapes.integers(1, rows, endpoint=True))
        sub_p = int(shapes.integers(1, cols, endpoint=True))
        sub_n = int(shapes.integers(1, MATMUL_N, endpoint=True))
        width = int(shapes.integers(1, 16, endpoint=True))
        for variant in variants:
            specs.append(dict(kind='matmul', variant=variant, width=16, n=MATMUL_N,
                              rows=rows, cols=cols, m=rows, p=cols))
            specs.append(dict(kind='matmul', variant=variant, width=width, n=sub_n,
                              rows=rows, cols=cols, m=sub_m, p=sub_p))

    return [VerifyCase(index=i, **spec) for i, spec in enumerate(specs)]


def _random_words(rng: np.random.Generator, width: int, size) -> np.ndarray:
    lo, hi = word_range(width)
    return rng.integers(lo, hi, size=size, endpoint=True)


def _check_pairs(case: VerifyCase, pairs: Iterable[Tuple[int, int]], seed: int) -> CaseResult:
    checked = 0
    for a, b in pairs:
        got, cycles = drive_multiplication(
            case.variant, SignedWord(a, case.width), SignedWord(b, case.width)
        )
        checked += 1
        expected = oracle_product(SignedWord(a, case.width), SignedWord(b, case.width))
        if got != expected or cycles != 2 * case.width:
            return CaseResult(case, checked, {
                'kind': case.kind, 'variant': case.variant.value, 'width': case.width,
                'a': a, 'b': b, 'seed': seed, 'case': case.index,
                'expected': expected, 'got': got, 'cycles': cycles,
            })
    return CaseResult(case, checked)


def _run_exhaustive(case: VerifyCase, seed: int) -> CaseResult:
    lo, hi = word_range(case.width)
    pairs = ((a, b) for a in range(lo, hi + 1) for b in range(lo, hi + 1))
    return _check_pairs(case, pairs, seed)


def _run_random_pairs(case: VerifyCase, seed: int) -> CaseResult:
    draws = _random_words(case.rng(seed), case.width, (case.n, 2))
    return _check_pairs(case, ((int(a), int(b)) for a, b in draws), seed)


def _run_dot(case: VerifyCase, seed: int) -> CaseResult:
    draws = _random_words(case.rng(seed), case.width, (2, case.n))
    vec_a = [SignedWord(int(v), case.width) for v in draws[0]]
    vec_b = [SignedWord(int(v), case.width) for v in draws[1]]
    got, cycles = drive_dot_product(case.variant, vec_a, vec_b, case.width)

    expected = sum(int(a) * int(b) for a, b in zip(draws[0], draws[1]))
    expected_cycles = bitsmm_cycle_count(case.width, case.width, case.n)
    if got != expected or cycles != expected_cycles:
        return CaseResult(case, 1, {
            'kind': case.kind, 'variant': case.variant.value, 'width': case.width,
            'n': case.n, 'seed': seed, 'case': case.index, 'expected': expected, 'got': got,
            'cycles': cycles, 'expected_cycles': expected_cycles,
        })
    return CaseResult(case, 1)


def _run_matmul(case: VerifyCase, seed: int) -> CaseResult:
    rng = case.rng(seed)
    a = systolic.random_matrix(rng, case.m, case.n, case.width)
    b = systolic.random_matrix(rng, case.n, case.p, case.width)
    config = systolic.SaConfig(case.rows, case.cols)
    got, stats = systolic.run_matmul(systolic.make_array(config, case.variant), a, b)

    expected = a.values @ b.values
    readout_ok = stats.readout_cycles == case.rows * case.cols
    if not np.array_equal(got, expected) or not readout_ok:
        mismatches = np.argwhere(got != expected)
        where = tuple(int(i) for i in mismatches[0]) if len(mismatches) else None
        return CaseResult(case, 1, {
            'kind': case.kind, 'variant': case.variant.value, 'width': case.width,
            'topology': config.label, 'm': case.m, 'n': case.n, 'p': case.p,
            'seed': seed, 'case': case.index, 'first_mismatch': where,
            'expected': int(expected[where]) if where else None,
            'got': int(got[where]) if where else None,
            'readout_cycles': stats.readout_cycles,
        })
    return CaseResult(case, 1)


_RUNNERS = {
    'exhaustive': _run_exhaustive,
    'random_pairs': _run_random_pairs,
    'dot': _run_dot,
    'matmul': _run_matmul,
}


def run_case(case: VerifyCase, seed: int) -> CaseResult:
    return _RUNNERS[case.kind](case, seed)


def run_verification(seed: int = 0, quick: bool = False, workers: int = 1,
                     variants: Iterable[MacVariant] = tuple(MacVariant)) -> pd.DataFrame:
    """Runs the verification protocol against the integer oracle

    Args:
        seed (int):
            base seed; every case draws from `default_rng([seed, case_index])`
        quick (bool):
            reduced suite
        workers (int):
            threads running cases concurrently; results stay in case order
        variants (Iterable[MacVariant]):
            MAC architectures to cover

    Raises:
        VerificationFailure:
            Raised for the first failing case, in case order, with a reproducer

    Returns:
        pd.DataFrame:
            one summary row per case with columns `SUMMARY_COLUMNS`
    """
    cases = build_cases(seed, quick, variants)
    logger.info('verifying %d case groups (seed=%d, quick=%s)', len(cases), seed, quick)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(executor.map(lambda case: run_case(case, seed), cases))

    for result in results:
        if result.failure is not None:
            raise VerificationFailure(result.failure)

    rows = [{
        'index': r.case.index,
        'kind': r.case.kind,
        'variant': r.case.variant.value,
        'width': r.case.width,
        'topology': format_topology(r.case.rows, r.case.cols) if r.case.kind == 'matmul' else '',
        'm': r.case.m if r.case.kind == 'matmul' else '',
        'n': r.case.n,
        'p': r.case.p if r.case.kind == 'matmul' else '',
        'cases': r.checked,
        'status': 'PASS',
    } for r in results]
    logger.info('verification passed: %d cases', sum(r.checked for r in results))
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
