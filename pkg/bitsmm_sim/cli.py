"""Command line surface of the simulator

    bitsmm mac      single multiplication or dot product on one MAC
    bitsmm matmul   matrix multiplication on a systolic array
    bitsmm verify   full verification protocol against the integer oracle
    bitsmm sweep    analytic throughput tables and plots
    bitsmm trace    per-cycle signal trace of an array run (CSV or VCD)

Random inputs come from `numpy.random.default_rng(seed)` (PCG64), so the same seed and flags
always produce the same report. Exit status is 0 when every check passed, 1 on a verification
failure or protocol violation, 2 on a usage error.
"""
from typing import List, Optional, Sequence
import argparse
import logging
import sys
import warnings

import numpy as np
import pandas as pd

from bitsmm_sim import io_utils, mac, perfmodel, systolic, trace, verify
from bitsmm_sim.bitmath import MAX_WIDTH, SignedWord, bitsmm_cycle_count, word_range
from bitsmm_sim.errors import ProtocolViolation, VerificationFailure
from bitsmm_sim.mac import MacVariant
from bitsmm_sim.type_utils import format_topology, parse_int_range, parse_topology

logger = logging.getLogger(__name__)

MAC_COLUMNS = ['variant', 'width', 'n', 'result', 'oracle', 'cycles', 'predicted_cycles',
               'status']
MATMUL_COLUMNS = ['topology', 'variant', 'width', 'm', 'n', 'p', 'fill_cycles',
                  'compute_cycles', 'readout_cycles', 'total_cycles', 'toggles_mac',
                  'toggles_pipeline', 'toggles_p2s', 'toggles_readout', 'measured_op_per_cycle',
                  'measured_op_per_cycle_excluding_fill', 'model_op_per_cycle', 'gops',
                  'status']
TRACE_WARN_MACS = 64


def _width(text: str) -> int:
    width = int(text)
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f'width must be within [1, {MAX_WIDTH}]')
    return width


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError('must be >= 1')
    return value


def _mhz_list(text: str) -> List[float]:
    values = [float(v) for v in text.split(',') if v.strip()]
    if not values or min(values) <= 0:
        raise ValueError('expected a non-empty list of positive frequencies')
    return values


def _emit(df: pd.DataFrame, args: argparse.Namespace, default_name: str) -> None:
    path = io_utils.resolve_output_path(args.output, default_name)
    text = io_utils.write_table(df, path, args.format)
    if path is None:
        sys.stdout.write(text)
    else:
        logger.info('wrote %s', path)


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--format', choices=io_utils.TABLE_FORMATS, default='csv',
                        help='report format (default: csv)')
    parser.add_argument('--output', default=None,
                        help=f'report file; bare names land in ${io_utils.OUTPUT_DIR_ENV}')


def _add_array_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--topo', type=parse_topology, default=None,
                        help='array as <cols>x<rows>, e.g. 64x16; overrides --rows/--cols')
    parser.add_argument('--rows', type=_positive, default=1)
    parser.add_argument('--cols', type=_positive, default=1)
    parser.add_argument('--variant', choices=[v.value for v in MacVariant], default='booth')


def _array_shape(args: argparse.Namespace):
    return args.topo if args.topo is not None else (args.rows, args.cols)


def _operand_matrices(args: argparse.Namespace, rows: int, cols: int):
    """ A (m x n multipliers) and B (n x p multiplicands) from files or the seeded generator """
    if args.a_file is not None or args.b_file is not None:
        if args.a_file is None or args.b_file is None:
            raise ValueError('--a-file and --b-file must be given together')
        a = io_utils.read_matrix_csv(args.a_file)
        b = io_utils.read_matrix_csv(args.b_file)
        return a, b, max(a.width, b.width)

    if args.seed is None:
        raise ValueError('--seed is required for random matrices')
    m = args.m if args.m is not None else rows
    p = args.p if args.p is not None else cols
    rng = np.random.default_rng(args.seed)
    a = systolic.random_matrix(rng, m, args.n, args.width)
    b = systolic.random_matrix(rng, args.n, p, args.width)
    return a, b, args.width


def cmd_mac(args: argparse.Namespace) -> int:
    """ Multiplication (`--a`, `--b`) or random dot product (`--dot`) on a single MAC """
    variant = MacVariant(args.variant)
    if args.dot:
        if args.seed is None:
            raise ValueError('--seed is required for --dot')
        lo, hi = word_range(args.width)
        draws = np.random.default_rng(args.seed).integers(lo, hi, size=(2, args.n),
                                                          endpoint=True)
        vec_a = [SignedWord(int(v), args.width) for v in draws[0]]
        vec_b = [SignedWord(int(v), args.width) for v in draws[1]]
        oracle = sum(int(a) * int(b) for a, b in zip(draws[0], draws[1]))
    else:
        if args.a is None or args.b is None:
            raise ValueError('--a and --b are required without --dot')
        vec_a = [SignedWord(args.a, args.width)]
        vec_b = [SignedWord(args.b, args.width)]
        oracle = args.a * args.b

    result, cycles = mac.drive_dot_product(variant, vec_a, vec_b, args.width)
    predicted = bitsmm_cycle_count(args.width, args.width, len(vec_a))
    passed = result == oracle and cycles == predicted

    _emit(pd.DataFrame([{
        'variant': variant.value, 'width': args.width, 'n': len(vec_a), 'result': result,
        'oracle': oracle, 'cycles': cycles, 'predicted_cycles': predicted,
        'status': 'PASS' if passed else 'FAIL',
    }], columns=MAC_COLUMNS), args, 'mac.' + args.format)

    if not passed:
        raise VerificationFailure({
            'kind': 'dot' if args.dot else 'pair', 'variant': variant.value, 'width': args.width,
            'n': len(vec_a), 'seed': args.seed, 'expected': oracle, 'got': result,
            'cycles': cycles,
        })
    return 0


def cmd_matmul(args: argparse.Namespace) -> int:
    """ C = A x B on a systolic array, checked against the integer oracle """
    rows, cols = _array_shape(args)
    variant = MacVariant(args.variant)
    a, b, width = _operand_matrices(args, rows, cols)

    config = systolic.SaConfig(rows, cols)
    got, stats = systolic.run_matmul(systolic.make_array(config, variant), a, b, width)
    expected = a.values @ b.values
    passed = bool(np.array_equal(got, expected))

    q = perfmodel.query_for_run(rows, cols, a.rows, a.cols, b.cols, width,
                                args.freq * 1e6 if args.freq else None)
    check = perfmodel.validate_model(stats, q)
    report = {
        'topology': config.label, 'variant': variant.value, 'width': width,
        'm': a.rows, 'n': a.cols, 'p': b.cols,
        **stats.as_dict(),
        'measured_op_per_cycle': check['measured_op_per_cycle'],
        'measured_op_per_cycle_excluding_fill': check['measured_op_per_cycle_excluding_fill'],
        'model_op_per_cycle': check['model_op_per_cycle'],
        'gops': perfmodel.evaluate(q).gops,
        'status': 'PASS' if passed else 'FAIL',
    }
    _emit(pd.DataFrame([report], columns=MATMUL_COLUMNS), args, 'matmul.' + args.format)

    if args.result_file is not None:
        io_utils.write_matrix_csv(systolic.Matrix(got, mac.ACC_W),
                                  io_utils.resolve_output_path(args.result_file))

    if not passed:
        r, c = (int(i) for i in np.argwhere(got != expected)[0])
        raise VerificationFailure({
            'kind': 'matmul', 'variant': variant.value, 'topology': config.label,
            'width': width, 'seed': args.seed, 'r': r, 'c': c,
            'expected': int(expected[r, c]), 'got': int(got[r, c]),
        })
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    """ Full protocol; the first failing case, in case order, is reported with a reproducer """
    variants = list(MacVariant) if args.variant == 'both' else [MacVariant(args.variant)]
    summary = verify.run_verification(args.seed, args.quick, args.workers, variants)
    _emit(summary, args, 'verify.' + args.format)
    print(f'PASS {int(summary["cases"].sum())} cases', file=sys.stderr)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    """ Throughput table over topologies, widths and frequencies """
    if args.preset or args.implementations:
        axes = [f'--{name}' for name in ('topo', 'widths', 'freqs', 'n')
                if getattr(args, name) is not None]
        if args.preset and args.implementations:
            axes.insert(0, '--implementations')
        if axes:
            fixed = '--preset' if args.preset else '--implementations'
            raise ValueError(f'{fixed} fixes the sweep axes, drop {", ".join(axes)}')

    topologies = args.topo or list(perfmodel.EVALUATED_TOPOLOGIES)
    widths = args.widths if args.widths is not None else list(range(1, MAX_WIDTH + 1))

    if args.implementations:
        table = perfmodel.implementation_table()
    elif args.preset == 'paper':
        table = perfmodel.evaluated_sweep(args.workers)
    else:
        freqs = [f * 1e6 for f in args.freqs] if args.freqs else None
        table = perfmodel.sweep(topologies, widths, freqs, args.n, args.workers)
    _emit(table, args, 'sweep.' + args.format)

    if args.plot is not None:
        if args.preset == 'paper':
            topologies, widths = perfmodel.EVALUATED_TOPOLOGIES, range(1, MAX_WIDTH + 1)
        path = io_utils.resolve_output_path(args.plot)
        perfmodel.plot_peak_throughput(perfmodel.peak_throughput_grid(topologies, widths), path)
        logger.info('wrote %s', path)
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    """ Per-cycle trace of a single array run, from global reset through the readout drain """
    rows, cols = _array_shape(args)
    if rows * cols > TRACE_WARN_MACS:
        warnings.warn(f'tracing {rows * cols} MACs produces very wide records')

    if args.a is not None or args.b is not None:
        if args.a is None or args.b is None:
            raise ValueError('--a and --b must be given together')
        # scalar form: multiplicand `a` enters from the top, multiplier `b` from the left
        width = args.width
        a = systolic.Matrix([[args.b]], width)
        b = systolic.Matrix([[args.a]], width)
    else:
        a, b, width = _operand_matrices(args, rows, cols)

    path = io_utils.resolve_output_path(args.output)
    records = []
    config = systolic.SaConfig(rows, cols)
    systolic.run_matmul(systolic.make_array(config, MacVariant(args.variant)), a, b, width,
                        trace=records)
    trace.write_trace(records, path, args.format)
    logger.info('wrote %d trace cycles to %s', len(records), path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='bitsmm', description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for progress, -vv for per-run details')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p_mac = sub.add_parser('mac', help='single MAC run',
                           description=f'CSV columns: {", ".join(MAC_COLUMNS)}')
    p_mac.add_argument('--variant', choices=[v.value for v in MacVariant], default='booth')
    p_mac.add_argument('--a', type=int, default=None, help='multiplicand')
    p_mac.add_argument('--b', type=int, default=None, help='multiplier')
    p_mac.add_argument('--width', type=_width, default=MAX_WIDTH)
    p_mac.add_argument('--dot', action='store_true', help='random dot product of length --n')
    p_mac.add_argument('--n', type=_positive, default=1)
    p_mac.add_argument('--seed', type=int, default=None)
    _add_output_args(p_mac)
    p_mac.set_defaults(func=cmd_mac)

    p_mm = sub.add_parser('matmul', help='matrix multiplication on an array',
                          description=f'CSV columns: {", ".join(MATMUL_COLUMNS)}')
    _add_array_args(p_mm)
    p_mm.add_argument('--width', type=_width, default=MAX_WIDTH)
    p_mm.add_argument('--n', type=_positive, default=1, help='shared dimension')
    p_mm.add_argument('--m', type=_positive, default=None, help='rows of C (default: rows)')
    p_mm.add_argument('--p', type=_positive, default=None, help='columns of C (default: cols)')
    p_mm.add_argument('--seed', type=int, default=None)
    p_mm.add_argument('--a-file', default=None, help='multiplier matrix file (m x n)')
    p_mm.add_argument('--b-file', default=None, help='multiplicand matrix file (n x p)')
    p_mm.add_argument('--freq', type=float, default=None, help='clock in MHz, adds GOPS')
    p_mm.add_argument('--result-file', default=None, help='write C as a matrix file')
    _add_output_args(p_mm)
    p_mm.set_defaults(func=cmd_matmul)

    p_ver = sub.add_parser('verify', help='verification protocol',
                           description=f'CSV columns: {", ".join(verify.SUMMARY_COLUMNS)}')
    p_ver.add_argument('--seed', type=int, default=0)
    p_ver.add_argument('--quick', action='store_true', help='reduced suite')
    p_ver.add_argument('--variant', choices=['both'] + [v.value for v in MacVariant],
                       default='both')
    p_ver.add_argument('--workers', type=_positive, default=1)
    _add_output_args(p_ver)
    p_ver.set_defaults(func=cmd_verify)

    p_sw = sub.add_parser('sweep', help='analytic throughput sweep',
                          description=f'CSV columns: {", ".join(perfmodel.SWEEP_COLUMNS)}')
    p_sw.add_argument('--preset', choices=['paper'], default=None,
                      help='peak curves of the evaluated arrays at every reported clock; '
                           'excludes --topo, --widths, --freqs and --n')
    p_sw.add_argument('--implementations', action='store_true',
                      help='reported vs model GOPS of the evaluated implementations')
    p_sw.add_argument('--topo', type=parse_topology, action='append', default=None,
                      help='<cols>x<rows>, repeatable')
    p_sw.add_argument('--widths', type=parse_int_range, default=None, help='e.g. 1..16')
    p_sw.add_argument('--freqs', type=_mhz_list, default=None, help='MHz, e.g. 300,1000')
    p_sw.add_argument('--n', type=_positive, default=None,
                      help='also evaluate a finite multiplication with full-size matrices')
    p_sw.add_argument('--plot', default=None, help='write the peak OP/cycle curves to an image')
    p_sw.add_argument('--workers', type=_positive, default=1)
    _add_output_args(p_sw)
    p_sw.set_defaults(func=cmd_sweep)

    p_tr = sub.add_parser('trace', help='per-cycle trace')
    _add_array_args(p_tr)
    p_tr.add_argument('--a', type=int, default=None, help='scalar multiplicand (1x1 run)')
    p_tr.add_argument('--b', type=int, default=None, help='scalar multiplier (1x1 run)')
    p_tr.add_argument('--width', type=_width, default=MAX_WIDTH)
    p_tr.add_argument('--n', type=_positive, default=1)
    p_tr.add_argument('--m', type=_positive, default=None)
    p_tr.add_argument('--p', type=_positive, default=None)
    p_tr.add_argument('--seed', type=int, default=None)
    p_tr.add_argument('--a-file', default=None)
    p_tr.add_argument('--b-file', default=None)
    p_tr.add_argument('--format', choices=trace.TRACE_FORMATS, default='csv')
    p_tr.add_argument('--output', required=True, help='trace file')
    p_tr.set_defaults(func=cmd_trace)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level={0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG),
        format='%(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )

    try:
        return args.func(args)
    except VerificationFailure as e:
        print(f'FAIL {e}', file=sys.stderr)
        return 1
    except ProtocolViolation as e:
        print(f'FAIL {e}', file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f'error: {e}', file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
