from fractions import Fraction
from typing import Optional
import io
import os

import pandas as pd

from bitsmm_sim.systolic import Matrix

OUTPUT_DIR_ENV = 'BITSMM_OUTPUT_DIR'
TABLE_FORMATS = ('csv', 'json')


def resolve_output_path(path: Optional[str], default_name: Optional[str] = None) -> Optional[str]:
    """ Decide where a report or trace goes

    A bare file name (or no path at all, when `default_name` is given) lands in the directory
    named by the `BITSMM_OUTPUT_DIR` environment variable, if set.

    Args:
        path (str | None):
            user supplied path
        default_name (str | None):
            file name used when `path` is None and the environment variable is set

    Returns:
        str | None:
            path to write, or None for stdout
    """
    out_dir = os.environ.get(OUTPUT_DIR_ENV)
    if path is None:
        if out_dir is None or default_name is None:
            return None
        path = default_name
    elif out_dir is None or os.path.dirname(path):
        return path

    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, path)


def read_matrix_csv(path: str) -> Matrix:
    """ Reads an integer matrix file

    The first line is `width=<w>`, every following line one comma separated matrix row.

    Args:
        path (str):
            matrix file

    Raises:
        FileNotFoundError:
            Raised if `path` doesn't exist
        ValueError:
            Raised if the header is malformed or an entry doesn't fit the width

    Returns:
        Matrix:
            the matrix, with the width from the header
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f'Could not locate matrix file {path}')

    with open(path, 'r') as f:
        header = f.readline().strip()
        body = f.read()

    key, _, value = header.partition('=')
    if key.strip() != 'width' or not value.strip().lstrip('-').isdigit():
        raise ValueError(f'{path}: first line must be `width=<w>`, got `{header}`')

    values = pd.read_csv(io.StringIO(body), header=None, dtype='int64').to_numpy()
    return Matrix(values, int(value))


def write_matrix_csv(matrix: Matrix, path: str) -> None:
    """ Inverse of `read_matrix_csv` """
    with open(path, 'w') as f:
        f.write(f'width={matrix.width}\n')
        pd.DataFrame(matrix.values).to_csv(f, header=False, index=False)


def _plain_cell(value):
    return str(value) if isinstance(value, Fraction) else value


def format_table(df: pd.DataFrame, fmt: str = 'csv') -> str:
    """ Renders a report table; exact ratios are written as `p/q` strings

    Args:
        df (pd.DataFrame):
            table to render, column order is kept
        fmt (str):
            one of `TABLE_FORMATS`

    Returns:
        str:
            the rendered table
    """
    if fmt not in TABLE_FORMATS:
        raise ValueError(f'unknown table format `{fmt}`, expected one of {TABLE_FORMATS}')

    plain = df.astype(object).apply(lambda col: col.map(_plain_cell))
    if fmt == 'csv':
        return plain.to_csv(index=False)
    return plain.to_json(orient='records', indent=2) + '\n'


def write_table(df: pd.DataFrame, path: Optional[str], fmt: str = 'csv') -> str:
    """ Writes `format_table(df, fmt)` to `path`, or returns it for stdout when `path` is None """
    text = format_table(df, fmt)
    if path is not None:
        with open(path, 'w') as f:
            f.write(text)
    return text
