from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Sequence, Tuple
import logging

logger = logging.getLogger(__name__)

MAX_WIDTH = 16


class BitOrder(Enum):
    LSB_FIRST = 'lsb_first'
    MSB_FIRST = 'msb_first'


class BoothAction(Enum):
    NOP = 'NOP'
    ADD_M = 'ADD'
    SUB_M = 'SUB'


# (current bit, previous bit) -> action
BOOTH_TABLE: Dict[Tuple[int, int], BoothAction] = {
    (0, 0): BoothAction.NOP,
    (0, 1): BoothAction.ADD_M,
    (1, 0): BoothAction.SUB_M,
    (1, 1): BoothAction.NOP,
}


@dataclass(frozen=True)
class SignedWord:
    """Two's complement integer with an explicit bit width

    Width-1 words are signed as well: the single bit is the sign bit, so `1` means -1.

    Args:
        value (int):
            signed value, within [-2**(width-1), 2**(width-1) - 1]
        width (int):
            bit count, within [1, MAX_WIDTH]
    """
    value: int
    width: int

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f'width must be within [1, {MAX_WIDTH}], got {self.width}')
        lo, hi = word_range(self.width)
        if not lo <= self.value <= hi:
            raise ValueError(
                f'{self.value} does not fit a {self.width}-bit two\'s complement word '
                f'([{lo}, {hi}])'
            )

    def bit(self, i: int) -> int:
        """ bit `i` of the two's complement encoding; bit width-1 is the sign bit """
        if not 0 <= i < self.width:
            raise IndexError(f'bit {i} outside a {self.width}-bit word')
        return (self.value >> i) & 1

    @property
    def raw(self) -> int:
        """ unsigned encoding of the word """
        return self.value & ((1 << self.width) - 1)


def word_range(width: int) -> Tuple[int, int]:
    """ Inclusive value range of a `width`-bit two's complement word """
    return -(1 << (width - 1)), (1 << (width - 1)) - 1


def wrap_signed(value: int, width: int) -> int:
    """ Reduces `value` modulo 2**width and reinterprets it as two's complement """
    value &= (1 << width) - 1
    return value - (1 << width) if value >> (width - 1) else value


def popcount(value: int) -> int:
    return bin(value).count('1')


def sign_extend(word: SignedWord, width: int) -> SignedWord:
    """ Widens `word` to `width` bits, value unchanged

    Raises:
        ValueError:
            Raised if `width` is narrower than the word
    """
    if width < word.width:
        raise ValueError(f'cannot sign extend a {word.width}-bit word to {width} bits')
    return SignedWord(word.value, width)


def to_bits(word: SignedWord, order: BitOrder = BitOrder.LSB_FIRST) -> List[int]:
    """ Serializes the two's complement encoding of `word`

    Args:
        word (SignedWord):
            word to serialize
        order (BitOrder):
            LSB_FIRST emits bit 0 first; MSB_FIRST emits the sign bit first

    Returns:
        List[int]:
            `word.width` bits
    """
    bits = [word.bit(i) for i in range(word.width)]
    return bits if order is BitOrder.LSB_FIRST else bits[::-1]


def from_bits(bits: Sequence[int], order: BitOrder = BitOrder.LSB_FIRST) -> SignedWord:
    """ Inverse of `to_bits` """
    if not len(bits):
        raise ValueError('cannot build a word from an empty bit sequence')
    lsb_first = list(bits) if order is BitOrder.LSB_FIRST else list(bits)[::-1]
    raw = sum(int(b) << i for i, b in enumerate(lsb_first))
    return SignedWord(wrap_signed(raw, len(lsb_first)), len(lsb_first))


def _common_width(a: SignedWord, b: SignedWord) -> Tuple[SignedWord, SignedWord]:
    width = max(a.width, b.width)
    return sign_extend(a, width), sign_extend(b, width)


def oracle_product(a: SignedWord, b: SignedWord) -> int:
    """ Exact product, the ground truth every simulation is checked against """
    return a.value * b.value


def unsigned_shift_add_multiply(a_bits: Sequence[int], b_bits: Sequence[int],
                                order: BitOrder = BitOrder.MSB_FIRST) -> int:
    """ Textbook unsigned multiplication: AND each multiplier bit with the multiplicand, shift

    Args:
        a_bits (Sequence[int]):
            multiplier bits, read unsigned
        b_bits (Sequence[int]):
            multiplicand bits, read unsigned
        order (BitOrder):
            order both sequences are written in; MSB_FIRST matches `0110`-style literals

    Returns:
        int:
            unsigned product
    """
    if len(a_bits) != len(b_bits):
        raise ValueError('operands must have the same number of bits')

    def _lsb_first(bits):
        return list(bits) if order is BitOrder.LSB_FIRST else list(bits)[::-1]

    b = sum(int(bit) << i for i, bit in enumerate(_lsb_first(b_bits)))
    return sum(b << i for i, bit in enumerate(_lsb_first(a_bits)) if bit)


def sbmwc_multiply_reference(a: SignedWord, b: SignedWord) -> int:
    """ Standard binary multiplication with correction

    Shift-adds the sign-extended multiplicand `a` for multiplier bits 0..w-2 and subtracts it
    at the multiplier sign bit.

    Args:
        a (SignedWord):
            multiplicand
        b (SignedWord):
            multiplier; its sign bit triggers the correction

    Returns:
        int:
            signed product
    """
    a, b = _common_width(a, b)
    w = b.width
    acc = sum(a.value << i for i in range(w - 1) if b.bit(i))
    if b.bit(w - 1):
        acc -= a.value << (w - 1)
    return acc


def booth_recode(curr_bit: int, prev_bit: int) -> BoothAction:
    """ Booth control for the multiplier bit pair (b_i, b_i-1), scanned from the LSb """
    return BOOTH_TABLE[(int(curr_bit), int(prev_bit))]


def booth_recode_word(b: SignedWord) -> List[BoothAction]:
    """ Booth actions for every bit of `b`, LSb first, with b_-1 = 0 """
    bits = to_bits(b, BitOrder.LSB_FIRST)
    return [booth_recode(bit, prev) for bit, prev in zip(bits, [0] + bits[:-1])]


def booth_trace(a: SignedWord, b: SignedWord) -> Tuple[List[Dict[str, str]], str]:
    """ Classic Booth multiplication with an arithmetic right shift of the combined register

    Args:
        a (SignedWord):
            multiplicand
        b (SignedWord):
            multiplier

    Returns:
        Tuple[List[Dict[str, str]], str]:
            one record per step (`action`, `addend`, `high` register after the add, `low` product
            bits shifted in so far) and the final combined register, all as bit strings
    """
    steps, product = _booth_registers(a, b)
    w = max(a.width, b.width)
    return steps, format(product & ((1 << 2 * w) - 1), f'0{2 * w}b')


def _booth_registers(a: SignedWord, b: SignedWord) -> Tuple[List[Dict[str, str]], int]:
    a, b = _common_width(a, b)
    w = a.width
    mask = (1 << w) - 1
    # one extra high bit keeps -2**(w-1) * -2**(w-1) from overflowing
    high_mask = (1 << (w + 1)) - 1
    high_sign = 1 << w

    high, low, prev = 0, b.raw, 0
    steps = []
    for i in range(w):
        action = booth_recode(low & 1, prev)
        addend = {BoothAction.NOP: 0, BoothAction.ADD_M: a.value,
                  BoothAction.SUB_M: -a.value}[action]
        high = (high + addend) & high_mask
        steps.append({
            'action': action.value,
            'addend': format(addend & mask, f'0{w}b'),
            'high': format(high & mask, f'0{w}b'),
            'low': format(low >> (w - i), f'0{i}b') if i else '',
        })

        # arithmetic right shift of high:low:prev
        prev = low & 1
        low = (low >> 1) | ((high & 1) << (w - 1))
        high = (high >> 1) | (high & high_sign)

    return steps, wrap_signed((high << w) | low, 2 * w + 1)


def booth_multiply_reference(a: SignedWord, b: SignedWord) -> int:
    """ Signed product through the classic Booth formulation, see `booth_trace` """
    _, product = _booth_registers(a, b)
    return product


def bismo_cycle_count(b_mc: int, b_ml: int, n_values: int) -> int:
    """ Cycles of a bit-level (bit-pair product) serial dot product without parallelism """
    _check_positive(b_mc=b_mc, b_ml=b_ml, n_values=n_values)
    return b_mc * b_ml * n_values


def bitsmm_cycle_count(b_mc: int, b_ml: int, n_values: int) -> int:
    """ Cycles of a word-streamed serial dot product: (n_values + 1) * max(b_mc, b_ml) """
    _check_positive(b_mc=b_mc, b_ml=b_ml, n_values=n_values)
    return (n_values + 1) * max(b_mc, b_ml)


def _check_positive(**kwargs: int) -> None:
    bad = [f'{name}={value}' for name, value in kwargs.items() if value < 1]
    if bad:
        raise ValueError(f'arguments must be >= 1: {", ".join(bad)}')
