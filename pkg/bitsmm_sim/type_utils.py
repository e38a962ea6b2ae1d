from typing import Iterable, List, Tuple, Union


def make_iterable(a: Union[type, Iterable[type]], ignore_str=True) -> Iterable[type]:
    """ Convert noniterable type to singelton in list

    Args:
        a (T | Iterable[T]):
            value or iterable of type T
        ignore_str (bool):
            whether to ignore the iterability of the str type

    Returns:
        List[T]:
            a as singleton in list, or a if a was already iterable.
    """
    return a if hasattr(a, '__iter__') and not (isinstance(a, str) and ignore_str) else [a]


def parse_int_range(text: str) -> List[int]:
    """ Parses `'1..16'`, `'4'` or `'1,2,8'` style integer axes

    Args:
        text (str):
            inclusive range `lo..hi`, a single integer, or a comma separated list of either

    Raises:
        ValueError:
            Raised for an empty axis or a descending range

    Returns:
        List[int]:
            the expanded values, in the order given
    """
    values = []
    for part in filter(None, (p.strip() for p in text.split(','))):
        if '..' in part:
            lo, hi = (int(v) for v in part.split('..', 1))
            if hi < lo:
                raise ValueError(f'descending range `{part}`')
            values.extend(range(lo, hi + 1))
        else:
            values.append(int(part))

    if not values:
        raise ValueError(f'empty axis `{text}`')

    return values


def parse_topology(text: str) -> Tuple[int, int]:
    """ Parses a topology string written `cols x rows`

    Examples:

    - '64x16' becomes (16, 64)
    - '1x1' becomes (1, 1)

    Args:
        text (str):
            topology written as `<columns>x<rows>`

    Returns:
        Tuple[int, int]:
            (rows, cols), the simulator's canonical order
    """
    try:
        cols, rows = (int(v) for v in text.lower().split('x'))
    except ValueError:
        raise ValueError(f'topology `{text}` is not of the form <cols>x<rows>, e.g. 64x16')
    if rows < 1 or cols < 1:
        raise ValueError(f'topology `{text}` must have positive dimensions')

    return rows, cols


def format_topology(rows: int, cols: int) -> str:
    """ Inverse of `parse_topology`, `cols x rows` """
    return f'{cols}x{rows}'
