from typing import Any, Dict, List, Sequence, Tuple
import logging

import pandas as pd
from vcd import VCDWriter

logger = logging.getLogger(__name__)

TRACE_FORMATS = ('csv', 'vcd')
TOP_SCOPE = 'bitsmm'


def trace_frame(records: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    """ Per-cycle records as a table, columns in first-seen order """
    if not records:
        raise ValueError('trace is empty')
    return pd.DataFrame(list(records))


def write_trace_csv(records: Sequence[Dict[str, Any]], path: str) -> None:
    trace_frame(records).to_csv(path, index=False)


def _split_name(column: str) -> Tuple[str, str]:
    # `mac_0_1.acc` lives in scope bitsmm.mac_0_1
    scope, _, name = column.rpartition('.')
    return (f'{TOP_SCOPE}.{scope}' if scope else TOP_SCOPE), name


def _signal_width(values: List[int]) -> int:
    if not any(v < 0 for v in values):
        return max([1] + [v.bit_length() for v in values])
    # once a column goes negative its positive values need a sign bit too
    return max((-v - 1 if v < 0 else v).bit_length() + 1 for v in values)


def write_trace_vcd(records: Sequence[Dict[str, Any]], path: str,
                    timescale: str = '1 ns') -> None:
    """Writes per-cycle records as a value change dump

    Integer columns become wires as wide as their widest value, signed values in two's
    complement; text columns (Booth actions, readout selects) become string variables. Empty
    cells mean no change.

    Args:
        records (Sequence[Dict[str, Any]]):
            per-cycle records, each with a `cycle` key used as the timestamp
        path (str):
            output file
        timescale (str):
            duration of one cycle
    """
    columns = [col for col in trace_frame(records).columns if col != 'cycle']

    signals = {}
    for col in columns:
        present = [rec[col] for rec in records if rec.get(col, '') != '']
        if all(isinstance(v, (int, bool)) for v in present):
            ints = [int(v) for v in present]
            signals[col] = ('wire', _signal_width(ints))
        else:
            signals[col] = ('string', None)

    with open(path, 'w') as f:
        with VCDWriter(f, timescale=timescale, date='', version='bitsmm-sim') as writer:
            handles = {}
            for col in columns:
                scope, name = _split_name(col)
                var_type, size = signals[col]
                handles[col] = writer.register_var(scope, name, var_type, size=size)

            last = {}
            for rec in records:
                for col in columns:
                    value = rec.get(col, '')
                    if value == '' or last.get(col) == value:
                        continue
                    last[col] = value
                    var_type, size = signals[col]
                    if var_type == 'wire':
                        value = int(value) & ((1 << size) - 1)
                    writer.change(handles[col], rec['cycle'], value)

    logger.debug('wrote %d trace cycles, %d signals to %s', len(records), len(columns), path)


def write_trace(records: Sequence[Dict[str, Any]], path: str, fmt: str = 'csv') -> None:
    """ Writes a trace in one of `TRACE_FORMATS` """
    if fmt == 'csv':
        write_trace_csv(records, path)
    elif fmt == 'vcd':
        write_trace_vcd(records, path)
    else:
        raise ValueError(f'unknown trace format `{fmt}`, expected one of {TRACE_FORMATS}')
