from fractions import Fraction
import os
import tempfile

import numpy as np
import pytest
from pytest_cases import parametrize, parametrize_with_cases

from bitsmm_sim import perfmodel, systolic
from bitsmm_sim.perfmodel import PerfQuery


class PerfQueryCases:

    def case_minimal(self):
        return PerfQuery(1, 1, 1, 1, 1, 1), Fraction(1, 3)

    def case_single_mac_word(self):
        return PerfQuery(10, 1, 1, 8, 1, 1), Fraction(10, 89)

    def case_full_16x4(self):
        return PerfQuery(100, 4, 16, 16, 16, 4), Fraction(6400, 101 * 16 + 64)

    @pytest.mark.xfail(raises=ValueError)
    def case_zero_n(self):
        return PerfQuery(0, 1, 1, 1, 1, 1), None

    @pytest.mark.xfail(raises=ValueError)
    def case_wide_operands(self):
        return PerfQuery(1, 1, 1, 17, 1, 1), None

    @pytest.mark.xfail(raises=ValueError)
    def case_negative_freq(self):
        return PerfQuery(1, 1, 1, 1, 1, 1, freq_hz=-1.0), None


@parametrize_with_cases('q, expected', cases=PerfQueryCases)
def test_op_per_cycle(q, expected):
    assert perfmodel.op_per_cycle(q) == expected

    result = perfmodel.evaluate(q)
    assert result.op_per_cycle == expected
    assert result.op_per_cycle <= result.peak_op_per_cycle
    assert result.gops is None


def test_peak_op_per_cycle():
    assert perfmodel.peak_op_per_cycle(64, 16, 16) == 64
    assert perfmodel.peak_op_per_cycle(1, 1, 1) == 1
    assert perfmodel.peak_op_per_cycle(16, 4, 1) == 64
    assert perfmodel.peak_op_per_cycle(32, 8, 3) == Fraction(256, 3)
    with pytest.raises(ValueError):
        perfmodel.peak_op_per_cycle(0, 1, 1)


def test_convergence_to_peak():
    q = PerfQuery(10 ** 6, 16, 64, 16, 64, 16)
    opc = perfmodel.op_per_cycle(q)
    assert opc < 64
    assert (64 - opc) / 64 < Fraction(1, 100)

    previous = Fraction(0)
    for n in (1, 10, 100, 1000, 10 ** 4):
        current = perfmodel.op_per_cycle(PerfQuery(n, 16, 64, 16, 64, 16))
        assert current > previous
        previous = current


@parametrize(n=(1, 10, 1000))
def test_op_per_cycle_falls_with_width(n):
    values = [perfmodel.op_per_cycle(PerfQuery(n, 4, 16, w, 16, 4)) for w in range(1, 17)]
    assert values == sorted(values, reverse=True)


class GopsCases:

    def case_fpga_64x16(self):
        return 64, 300e6, 19.2

    def case_fpga_32x8(self):
        return 16, 300e6, 4.8

    def case_fpga_16x4(self):
        return 4, 300e6, 1.2

    def case_asic_target_1ghz(self):
        return 64, 1e9, 64.0

    def case_asic_target_500mhz(self):
        return 16, 500e6, 8.0


@parametrize_with_cases('opc, freq, expected', cases=GopsCases)
def test_gops_exact(opc, freq, expected):
    assert perfmodel.gops(opc, freq) == expected


def test_gops_rounded_reports():
    assert perfmodel.gops(64, 1144e6) == pytest.approx(73.216)
    assert perfmodel.gops(4, 1183e6) == pytest.approx(4.732)
    assert perfmodel.gops(Fraction(1, 3), 3e9) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        perfmodel.gops(0, 1e9)


def test_reported_implementations():
    table = perfmodel.implementation_table()

    assert len(table) == len(perfmodel.REPORTED_IMPLEMENTATIONS)
    assert table['within_tolerance'].all()
    fpga = table[table['platform'] == 'ZCU104']
    assert sorted(set(fpga['model_peak_gops'])) == pytest.approx([1.2, 4.8, 19.2])
    sbmwc = table[(table['variant'] == 'sbmwc') & (table['platform'] == 'asap7')]
    assert sbmwc['model_peak_gops'].iloc[0] == pytest.approx(5.244)


class PlatformClockCases:

    def case_fpga(self):
        return 'ZCU104', [1.2, 4.8, 19.2]

    def case_asap7_target(self):
        return 'asap7', [4.0, 16.0, 64.0]

    def case_nangate45_target(self):
        return 'nangate45', [2.0, 8.0, 32.0]


@parametrize_with_cases('platform, expected', cases=PlatformClockCases)
def test_target_clock_gops(platform, expected):
    freq = perfmodel.target_freq_hz(platform)
    got = [perfmodel.gops(perfmodel.peak_op_per_cycle(cols, rows, perfmodel.EVALUATED_WIDTH),
                          freq)
           for rows, cols in perfmodel.EVALUATED_TOPOLOGIES]
    assert got == expected

    table = perfmodel.implementation_table()
    targets = table[table['platform'] == platform]
    assert (targets['target_mhz'] == freq / 1e6).all()


def test_platform_clocks():
    assert perfmodel.target_freq_hz('ZCU104') == perfmodel.FPGA_FREQ_HZ == 300e6
    assert perfmodel.target_freq_hz('asap7') == perfmodel.ASIC_TARGET_FREQ_HZ['asap7'] == 1e9
    assert perfmodel.target_freq_hz('nangate45') == 500e6


def test_compare_cycle_models():
    assert perfmodel.compare_cycle_models(2, 2, 1) == {
        'bismo_cycles': 4, 'bitsmm_cycles': 4, 'ratio': Fraction(1)
    }
    single = perfmodel.compare_cycle_models(1, 1, 9)
    assert (single['bismo_cycles'], single['bitsmm_cycles']) == (9, 10)
    assert single['ratio'] < 1
    assert perfmodel.compare_cycle_models(8, 8, 100)['ratio'] == Fraction(6400, 808)
    assert perfmodel.compare_cycle_models(3, 9, 5)['bitsmm_cycles'] == \
        perfmodel.compare_cycle_models(9, 3, 5)['bitsmm_cycles']


def test_sweep_curve():
    table = perfmodel.sweep([(16, 64)], range(1, 17))

    assert len(table) == 16
    assert list(table.columns) == perfmodel.SWEEP_COLUMNS
    peaks = list(table['peak_op_per_cycle'])
    assert peaks[0] == 1024 and peaks[-1] == 64
    assert peaks == sorted(peaks, reverse=True)
    assert table['gops'].isna().all()


def test_sweep_single_point():
    table = perfmodel.sweep([(8, 32)], [16], [300e6], n=10)

    assert len(table) == 1
    row = table.iloc[0]
    assert row['topology'] == '32x8'
    assert row['peak_gops'] == pytest.approx(4.8)
    assert row['op_per_cycle'] == Fraction(10 * 256, 11 * 16 + 256)
    assert row['gops'] < row['peak_gops']


def test_sweep_max_frequencies():
    expected = {((4, 16), 1183e6): 4.73, ((8, 32), 1124e6): 17.98, ((16, 64), 1144e6): 73.22,
                ((4, 16), 748e6): 2.99, ((8, 32), 685e6): 10.96, ((16, 64), 643e6): 41.15}
    for (topology, freq), reported in expected.items():
        row = perfmodel.sweep([topology], [16], [freq]).iloc[0]
        assert abs(row['peak_gops'] - reported) <= perfmodel.GOPS_TOLERANCE


def test_sweep_empty_axis():
    with pytest.raises(ValueError, match='widths'):
        perfmodel.sweep([(4, 16)], [])
    with pytest.raises(ValueError, match='topologies'):
        perfmodel.sweep([], [16])


def test_sweep_workers_keep_order():
    serial = perfmodel.sweep(perfmodel.EVALUATED_TOPOLOGIES, range(1, 17), [300e6, 1e9])
    threaded = perfmodel.sweep(perfmodel.EVALUATED_TOPOLOGIES, range(1, 17), [300e6, 1e9],
                               workers=4)
    assert serial.equals(threaded)


def test_evaluated_sweep():
    table = perfmodel.evaluated_sweep()
    row = table[(table['topology'] == '64x16') & (table['bit_width'] == 16)
                & (table['freq_mhz'] == 300)]
    assert len(row) == 1
    assert row['peak_gops'].iloc[0] == pytest.approx(19.2)
    assert set(table['topology']) == {'16x4', '32x8', '64x16'}


def test_binary_to_word_gops():
    assert perfmodel.binary_to_word_gops(256.0) == 1.0
    assert perfmodel.binary_to_word_gops(64.0, width=8) == 1.0


def test_validate_single_mac():
    a = systolic.Matrix([[3, -2, 5]], 4)
    b = systolic.Matrix([[1], [7], [-4]], 4)
    _, stats = systolic.run_matmul(systolic.make_array(systolic.SaConfig(1, 1)), a, b)
    report = perfmodel.validate_model(stats, perfmodel.query_for_run(1, 1, 1, 3, 1, 4))

    assert report['fill_cycles'] == 0
    assert report['measured_op_per_cycle'] == report['model_op_per_cycle'] == Fraction(3, 17)
    assert report['measured_cycles'] == report['model_cycles']


def test_validate_full_array():
    rng = np.random.default_rng(0)
    a = systolic.random_matrix(rng, 4, 5, 8)
    b = systolic.random_matrix(rng, 5, 16, 8)
    _, stats = systolic.run_matmul(systolic.make_array(systolic.SaConfig(4, 16)), a, b)
    report = perfmodel.validate_model(stats, perfmodel.query_for_run(4, 16, 4, 5, 16, 8))

    assert report['fill_cycles'] == 3 + 15
    assert report['matches_excluding_fill']
    assert report['measured_op_per_cycle'] < report['model_op_per_cycle']


def test_validate_ratio_approaches_one():
    ratios = []
    for n in (1, 8, 64):
        rng = np.random.default_rng(n)
        a = systolic.random_matrix(rng, 2, n, 4)
        b = systolic.random_matrix(rng, n, 2, 4)
        _, stats = systolic.run_matmul(systolic.make_array(systolic.SaConfig(2, 2)), a, b)
        q = perfmodel.query_for_run(2, 2, 2, n, 2, 4)
        ratios.append(perfmodel.validate_model(stats, q)['measured_to_model'])

    assert ratios == sorted(ratios)
    assert all(r < 1 for r in ratios)
    assert 1 - ratios[-1] < Fraction(1, 100)


def test_peak_throughput_grid():
    grid = perfmodel.peak_throughput_grid()

    assert grid.dims == ('topology', 'bit_width')
    assert grid.shape == (3, 16)
    assert grid.sel(topology='64x16', bit_width=1).item() == 1024
    assert grid.sel(topology='64x16', bit_width=16).item() == 64
    assert grid.sel(topology='32x8', bit_width=16).item() == 16


def test_plot_peak_throughput():
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, 'peak.png')
        perfmodel.plot_peak_throughput(perfmodel.peak_throughput_grid(), path)
        assert os.path.getsize(path) > 0
