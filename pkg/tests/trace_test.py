import os
import tempfile

import pandas as pd
import pytest

from bitsmm_sim import mac, systolic, trace
from bitsmm_sim.bitmath import SignedWord
from bitsmm_sim.mac import MacVariant


def _mac_records():
    records = []
    mac.drive_multiplication(MacVariant.BOOTH, SignedWord(6, 4), SignedWord(-2, 4), records)
    return records


def _array_records():
    records = []
    array = systolic.make_array(systolic.SaConfig(1, 2))
    systolic.run_matmul(array, systolic.Matrix([[-2]], 4), systolic.Matrix([[6, 3]], 4),
                        trace=records)
    return records


def test_trace_csv():
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, 'mac.csv')
        trace.write_trace(_mac_records(), path)
        df = pd.read_csv(path)

    assert len(df) == 8
    assert df['action'].tolist()[4:] == ['NOP', 'SUB', 'NOP', 'NOP']
    assert df['acc'].iloc[-1] == -12


def test_array_trace_csv():
    records = _array_records()
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, 'array.csv')
        trace.write_trace_csv(records, path)
        df = pd.read_csv(path)

    assert len(df) == len(records)
    assert {'cycle', 'read_enable', 'v_0', 'v_1', 'h_0', 'mac_0_1.acc', 'port'} <= set(df.columns)
    assert df['port'].dropna().astype(int).tolist() == [-6, -12]


def test_trace_vcd():
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, 'array.vcd')
        trace.write_trace(_array_records(), path, fmt='vcd')
        with open(path) as f:
            text = f.read()

    assert '$enddefinitions' in text
    assert 'mac_0_1' in text
    assert 'SUB' in text
    assert '#4' in text


def test_signal_width():
    assert trace._signal_width([0, 1]) == 1
    assert trace._signal_width([-12, 3]) == 5
    assert trace._signal_width([]) == 1
    assert trace._signal_width([15, -1]) == 5
    assert trace._signal_width([-8, 7]) == 4
    assert trace._signal_width([-1]) == 1


def test_vcd_keeps_signed_values_apart():
    records = [{'cycle': 0, 'acc': 15}, {'cycle': 1, 'acc': -1}]
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, 'acc.vcd')
        trace.write_trace_vcd(records, path)
        with open(path) as f:
            lines = f.read().splitlines()

    bits = [line.split()[0][1:] for line in lines if line.startswith('b') and 'x' not in line]
    assert [int(b, 2) for b in bits][-2:] == [15, 31]
    assert '$var wire 5' in '\n'.join(lines)


def test_trace_errors():
    with pytest.raises(ValueError):
        trace.trace_frame([])
    with tempfile.TemporaryDirectory() as temp_dir:
        with pytest.raises(ValueError):
            trace.write_trace(_mac_records(), os.path.join(temp_dir, 'x.txt'), fmt='txt')
