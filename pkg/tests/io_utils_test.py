from fractions import Fraction
import json
import os
import tempfile

import numpy as np
import pandas as pd
import pytest
from pytest_cases import parametrize_with_cases

from bitsmm_sim import io_utils
from bitsmm_sim.systolic import Matrix


def test_matrix_file():
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, 'a.csv')
        matrix = Matrix([[1, -2, 3], [-4, 5, -6]], 4)
        io_utils.write_matrix_csv(matrix, path)

        with open(path) as f:
            assert f.readline() == 'width=4\n'
            assert f.readline().strip() == '1,-2,3'

        loaded = io_utils.read_matrix_csv(path)
        assert loaded.width == 4
        np.testing.assert_array_equal(loaded.values, matrix.values)


def test_read_matrix_errors():
    with tempfile.TemporaryDirectory() as temp_dir:
        with pytest.raises(FileNotFoundError):
            io_utils.read_matrix_csv(os.path.join(temp_dir, 'missing.csv'))

        bad_header = os.path.join(temp_dir, 'bad.csv')
        with open(bad_header, 'w') as f:
            f.write('1,2\n3,4\n')
        with pytest.raises(ValueError, match='width=<w>'):
            io_utils.read_matrix_csv(bad_header)

        too_wide = os.path.join(temp_dir, 'wide.csv')
        with open(too_wide, 'w') as f:
            f.write('width=2\n1,2\n')
        with pytest.raises(ValueError):
            io_utils.read_matrix_csv(too_wide)


class OutputPathCases:

    def case_stdout(self):
        return None, None, None, None

    def case_plain_path(self):
        return None, 'out.csv', None, 'out.csv'

    def case_env_bare_name(self):
        return 'reports', 'out.csv', None, os.path.join('reports', 'out.csv')

    def case_env_directory_given(self):
        return 'reports', os.path.join('elsewhere', 'out.csv'), None, \
            os.path.join('elsewhere', 'out.csv')

    def case_env_default_name(self):
        return 'reports', None, 'sweep.csv', os.path.join('reports', 'sweep.csv')

    def case_default_name_without_env(self):
        return None, None, 'sweep.csv', None


@parametrize_with_cases('env_dir, path, default_name, expected', cases=OutputPathCases)
def test_resolve_output_path(env_dir, path, default_name, expected, monkeypatch):
    with tempfile.TemporaryDirectory() as temp_dir:
        if env_dir is not None:
            monkeypatch.setenv(io_utils.OUTPUT_DIR_ENV, os.path.join(temp_dir, env_dir))
            if expected is not None and expected.startswith(env_dir):
                expected = os.path.join(temp_dir, expected)

        assert io_utils.resolve_output_path(path, default_name) == expected
        if expected is not None and env_dir is not None and expected.startswith(temp_dir):
            assert os.path.isdir(os.path.join(temp_dir, env_dir))


def test_format_table():
    df = pd.DataFrame([{'topology': '16x4', 'opc': Fraction(1, 3), 'gops': None},
                       {'topology': '32x8', 'opc': Fraction(64), 'gops': 19.2}])

    csv = io_utils.format_table(df, 'csv')
    assert csv.splitlines()[0] == 'topology,opc,gops'
    assert csv.splitlines()[1] == '16x4,1/3,'

    records = json.loads(io_utils.format_table(df, 'json'))
    assert records[0]['opc'] == '1/3'
    assert records[1] == {'topology': '32x8', 'opc': '64', 'gops': 19.2}

    with pytest.raises(ValueError):
        io_utils.format_table(df, 'xlsx')


def test_write_table():
    df = pd.DataFrame([{'a': 1}])
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, 't.csv')
        text = io_utils.write_table(df, path)
        with open(path) as f:
            assert f.read() == text
    assert io_utils.write_table(df, None) == 'a\n1\n'
