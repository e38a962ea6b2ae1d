from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union
import logging

import numpy as np
import pandas as pd
import xarray as xr

from bitsmm_sim.bitmath import MAX_WIDTH, bismo_cycle_count, bitsmm_cycle_count
from bitsmm_sim.type_utils import format_topology, make_iterable

logger = logging.getLogger(__name__)

# (rows, cols) of the evaluated arrays, written 16x4, 32x8 and 64x16 as cols x rows
EVALUATED_TOPOLOGIES = ((4, 16), (8, 32), (16, 64))
EVALUATED_WIDTH = 16
FPGA_FREQ_HZ = 300e6
ASIC_TARGET_FREQ_HZ = {'asap7': 1e9, 'nangate45': 500e6}

# GOPS-relevant columns of the reported implementations; area/power are tool outputs
REPORTED_IMPLEMENTATIONS = [
    {'topology': '16x4', 'variant': 'booth', 'platform': 'ZCU104', 'freq_mhz': 300,
     'peak_gops': 1.2, 'target_gops': 1.2},
    {'topology': '16x4', 'variant': 'sbmwc', 'platform': 'ZCU104', 'freq_mhz': 300,
     'peak_gops': 1.2, 'target_gops': 1.2},
    {'topology': '32x8', 'variant': 'booth', 'platform': 'ZCU104', 'freq_mhz': 300,
     'peak_gops': 4.8, 'target_gops': 4.8},
    {'topology': '64x16', 'variant': 'booth', 'platform': 'ZCU104', 'freq_mhz': 300,
     'peak_gops': 19.2, 'target_gops': 19.2},
    {'topology': '16x4', 'variant': 'booth', 'platform': 'asap7', 'freq_mhz': 1183,
     'peak_gops': 4.73, 'target_gops': 4},
    {'topology': '16x4', 'variant': 'sbmwc', 'platform': 'asap7', 'freq_mhz': 1311,
     'peak_gops': 5.24, 'target_gops': 4},
    {'topology': '32x8', 'variant': 'booth', 'platform': 'asap7', 'freq_mhz': 1124,
     'peak_gops': 17.98, 'target_gops': 16},
    {'topology': '64x16', 'variant': 'booth', 'platform': 'asap7', 'freq_mhz': 1144,
     'peak_gops': 73.22, 'target_gops': 64},
    {'topology': '16x4', 'variant': 'booth', 'platform': 'nangate45', 'freq_mhz': 748,
     'peak_gops': 2.99, 'target_gops': 2},
    {'topology': '16x4', 'variant': 'sbmwc', 'platform': 'nangate45', 'freq_mhz': 730,
     'peak_gops': 2.92, 'target_gops': 2},
    {'topology': '32x8', 'variant': 'booth', 'platform': 'nangate45', 'freq_mhz': 685,
     'peak_gops': 10.96, 'target_gops': 8},
    {'topology': '64x16', 'variant': 'booth', 'platform': 'nangate45', 'freq_mhz': 643,
     'peak_gops': 41.15, 'target_gops': 32},
]

# the reported figures are rounded to 2-4 significant digits
GOPS_TOLERANCE = 0.05

SWEEP_COLUMNS = ['topology', 'sa_width', 'sa_height', 'bit_width', 'freq_mhz', 'n',
                 'op_per_cycle', 'peak_op_per_cycle', 'peak_op_per_cycle_float', 'gops',
                 'peak_gops']


@dataclass(frozen=True)
class PerfQuery:
    """Inputs of the analytic throughput model

    One OP is one multiply-accumulate.

    Args:
        n (int):
            shared dimension of the multiplication (vector length)
        a_width_elems (int):
            output rows produced by the array
        b_height_elems (int):
            output columns produced by the array
        bit_width (int):
            operand precision
        sa_width (int):
            array columns
        sa_height (int):
            array rows
        freq_hz (float | None):
            clock frequency, for GOPS
    """
    n: int
    a_width_elems: int
    b_height_elems: int
    bit_width: int
    sa_width: int
    sa_height: int
    freq_hz: Optional[float] = None

    def __post_init__(self):
        ints = ('n', 'a_width_elems', 'b_height_elems', 'bit_width', 'sa_width', 'sa_height')
        bad = [name for name in ints if getattr(self, name) < 1]
        if bad:
            raise ValueError(f'PerfQuery fields must be positive: {", ".join(bad)}')
        if self.bit_width > MAX_WIDTH:
            raise ValueError(f'bit_width must be within [1, {MAX_WIDTH}], got {self.bit_width}')
        if self.freq_hz is not None and self.freq_hz <= 0:
            raise ValueError(f'freq_hz must be positive, got {self.freq_hz}')


@dataclass(frozen=True)
class PerfResult:
    op_per_cycle: Fraction
    peak_op_per_cycle: Fraction
    model_cycles: int
    gops: Optional[float] = None


def model_cycles(q: PerfQuery) -> int:
    """ Streaming latency plus readout latency: (1 + n) * bit_width + sa_width * sa_height """
    return (1 + q.n) * q.bit_width + q.sa_width * q.sa_height


def op_per_cycle(q: PerfQuery) -> Fraction:
    """ Operations per cycle of one multiplication, as an exact ratio """
    return Fraction(q.n * q.a_width_elems * q.b_height_elems, model_cycles(q))


def peak_op_per_cycle(sa_w: int, sa_h: int, bit_width: int) -> Fraction:
    """ Limit of `op_per_cycle` for n -> infinity with matrices matching the array """
    if min(sa_w, sa_h, bit_width) < 1:
        raise ValueError('array dimensions and bit width must be positive')
    return Fraction(sa_w * sa_h, bit_width)


def gops(op_per_cycle: Union[Fraction, int, float], freq_hz: float) -> float:
    """ Billions of operations per second at `freq_hz` """
    if op_per_cycle <= 0 or freq_hz <= 0:
        raise ValueError('op_per_cycle and freq_hz must be positive')
    return float(Fraction(op_per_cycle) * Fraction(freq_hz) / 10 ** 9)


def binary_to_word_gops(binary_gops: float, width: int = EVALUATED_WIDTH) -> float:
    """ Converts bit-level (binary operation) throughput to `width`-bit word throughput

    A `width` x `width` multiplication costs width**2 binary operations.
    """
    return binary_gops / width ** 2


def evaluate(q: PerfQuery) -> PerfResult:
    """ Full model evaluation of one query """
    opc = op_per_cycle(q)
    return PerfResult(
        op_per_cycle=opc,
        peak_op_per_cycle=peak_op_per_cycle(q.sa_width, q.sa_height, q.bit_width),
        model_cycles=model_cycles(q),
        gops=gops(opc, q.freq_hz) if q.freq_hz is not None else None,
    )


def query_for_run(rows: int, cols: int, m: int, n: int, p: int, width: int,
                  freq_hz: Optional[float] = None) -> PerfQuery:
    """ Model query matching an m x n by n x p multiplication on a rows x cols array """
    return PerfQuery(n=n, a_width_elems=m, b_height_elems=p, bit_width=width,
                     sa_width=cols, sa_height=rows, freq_hz=freq_hz)


def compare_cycle_models(b_mc: int, b_ml: int, n: int) -> Dict[str, Any]:
    """Dot-product latency of bit-pair serial multiplication vs word-streamed multiplication

    Returns:
        Dict[str, Any]:
            `bismo_cycles`, `bitsmm_cycles` and their exact `ratio` (bismo / bitsmm)
    """
    bismo = bismo_cycle_count(b_mc, b_ml, n)
    bitsmm = bitsmm_cycle_count(b_mc, b_ml, n)
    return {'bismo_cycles': bismo, 'bitsmm_cycles': bitsmm, 'ratio': Fraction(bismo, bitsmm)}


def _sweep_row(point: Tuple[Tuple[int, int], int, Optional[float], Optional[int]]
               ) -> Dict[str, Any]:
    (rows, cols), width, freq_hz, n = point
    peak = peak_op_per_cycle(cols, rows, width)
    opc = None
    if n is not None:
        opc = op_per_cycle(query_for_run(rows, cols, rows, n, cols, width))
    return {
        'topology': format_topology(rows, cols),
        'sa_width': cols,
        'sa_height': rows,
        'bit_width': width,
        'freq_mhz': freq_hz / 1e6 if freq_hz is not None else None,
        'n': n,
        'op_per_cycle': opc,
        'peak_op_per_cycle': peak,
        'peak_op_per_cycle_float': float(peak),
        'gops': gops(opc, freq_hz) if opc is not None and freq_hz is not None else None,
        'peak_gops': gops(peak, freq_hz) if freq_hz is not None else None,
    }


def sweep(topologies: Iterable[Tuple[int, int]], widths: Iterable[int],
          freqs: Union[float, Iterable[float], None] = None, n: Optional[int] = None,
          workers: int = 1) -> pd.DataFrame:
    """Cross product of topologies, widths and frequencies through the model

    Args:
        topologies (Iterable[Tuple[int, int]]):
            (rows, cols) of each array
        widths (Iterable[int]):
            operand widths
        freqs (float | Iterable[float] | None):
            clock frequencies in Hz; GOPS columns stay empty without them
        n (int | None):
            if given, also evaluates a finite multiplication with full-size matrices
        workers (int):
            threads used to evaluate the points

    Raises:
        ValueError:
            Raised if an axis is empty

    Returns:
        pd.DataFrame:
            one row per point, in axis order, with columns `SWEEP_COLUMNS`
    """
    topologies = list(topologies)
    widths = list(make_iterable(widths))
    freqs = [None] if freqs is None else list(make_iterable(freqs))
    for name, axis in (('topologies', topologies), ('widths', widths), ('freqs', freqs)):
        if not axis:
            raise ValueError(f'sweep axis `{name}` is empty')

    points = [(topo, width, freq, n) for topo, width, freq in product(topologies, widths, freqs)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        rows = list(executor.map(_sweep_row, points))

    logger.debug('sweep evaluated %d points', len(rows))
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def target_freq_hz(platform: str) -> float:
    """ Clock a platform is compared at: its ASIC target, or the FPGA clock """
    return ASIC_TARGET_FREQ_HZ.get(platform, FPGA_FREQ_HZ)


def evaluated_sweep(workers: int = 1) -> pd.DataFrame:
    """ Peak-throughput curves of the evaluated arrays at every reported clock frequency """
    freqs = {impl['freq_mhz'] * 1e6 for impl in REPORTED_IMPLEMENTATIONS}
    freqs |= {target_freq_hz(impl['platform']) for impl in REPORTED_IMPLEMENTATIONS}
    return sweep(EVALUATED_TOPOLOGIES, range(1, MAX_WIDTH + 1), sorted(freqs), workers=workers)


def implementation_table(width: int = EVALUATED_WIDTH) -> pd.DataFrame:
    """Recomputes the GOPS columns of the reported implementations

    Returns:
        pd.DataFrame:
            one row per implementation with the reported and model GOPS side by side and
            whether they agree within `GOPS_TOLERANCE`
    """
    rows = []
    for impl in REPORTED_IMPLEMENTATIONS:
        cols, rows_ = (int(v) for v in impl['topology'].split('x'))
        peak = peak_op_per_cycle(cols, rows_, width)
        model_peak = gops(peak, impl['freq_mhz'] * 1e6)
        target_hz = target_freq_hz(impl['platform'])
        model_target = gops(peak, target_hz)
        rows.append({
            **impl,
            'target_mhz': target_hz / 1e6,
            'model_peak_gops': model_peak,
            'model_target_gops': model_target,
            'within_tolerance': bool(
                abs(model_peak - impl['peak_gops']) <= GOPS_TOLERANCE
                and abs(model_target - impl['target_gops']) <= GOPS_TOLERANCE
            ),
        })
    return pd.DataFrame(rows)


def validate_model(stats, q: PerfQuery) -> Dict[str, Any]:
    """Cross-checks a simulated run against the analytic model

    The model has no term for input skew, so the measured throughput matches it exactly once
    the fill cycles are excluded.

    Args:
        stats (CycleStats):
            measured accounting of a completed `run_matmul`
        q (PerfQuery):
            query describing the same run

    Returns:
        Dict[str, Any]:
            measured and model OP/cycle (exact), the fill discrepancy and their ratio
    """
    total_ops = q.n * q.a_width_elems * q.b_height_elems
    model = op_per_cycle(q)
    measured = Fraction(total_ops, stats.total_cycles)
    measured_no_fill = Fraction(total_ops, stats.total_cycles - stats.fill_cycles)
    return {
        'total_ops': total_ops,
        'measured_cycles': stats.total_cycles,
        'model_cycles': model_cycles(q),
        'fill_cycles': stats.fill_cycles,
        'measured_op_per_cycle': measured,
        'measured_op_per_cycle_excluding_fill': measured_no_fill,
        'model_op_per_cycle': model,
        'measured_to_model': measured / model,
        'matches_excluding_fill': measured_no_fill == model,
    }


def peak_throughput_grid(topologies: Iterable[Tuple[int, int]] = EVALUATED_TOPOLOGIES,
                         widths: Iterable[int] = range(1, MAX_WIDTH + 1)) -> xr.DataArray:
    """ Peak OP/cycle over topologies and widths as a labelled grid """
    topologies = list(topologies)
    widths = list(widths)
    data = np.array([
        [float(peak_op_per_cycle(cols, rows, width)) for width in widths]
        for rows, cols in topologies
    ])
    return xr.DataArray(
        data=data,
        coords=[[format_topology(rows, cols) for rows, cols in topologies], widths],
        dims=['topology', 'bit_width'],
        name='peak_op_per_cycle',
    )


def plot_peak_throughput(grid: xr.DataArray, path: str) -> None:
    """ Writes the peak OP/cycle curves of `grid` to an image file """
    from matplotlib.figure import Figure

    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    for topology in grid.topology.values:
        ax.plot(grid.bit_width.values, grid.sel(topology=topology).values, marker='o',
                label=str(topology))
    ax.set_yscale('log', base=2)
    ax.set_xlabel('operand bit width')
    ax.set_ylabel('peak OP/cycle')
    ax.grid(True, which='both', alpha=0.3)
    ax.legend(title='cols x rows')
    fig.tight_layout()
    fig.savefig(path)
