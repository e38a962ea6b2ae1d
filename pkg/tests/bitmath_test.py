import numpy as np
import pytest
from pytest_cases import parametrize, parametrize_with_cases

from bitsmm_sim import bitmath
from bitsmm_sim.bitmath import BitOrder, BoothAction, SignedWord


class SignedWordCases:

    def case_positive(self):
        return 6, 4

    def case_most_negative(self):
        return -8, 4

    def case_width_one(self):
        return -1, 1

    def case_full_width(self):
        return 32767, 16

    @pytest.mark.xfail(raises=ValueError)
    def case_too_large(self):
        return 8, 4

    @pytest.mark.xfail(raises=ValueError)
    def case_zero_width(self):
        return 0, 0

    @pytest.mark.xfail(raises=ValueError)
    def case_too_wide(self):
        return 0, 17


@parametrize_with_cases('value, width', cases=SignedWordCases)
def test_signed_word(value, width):
    word = SignedWord(value, width)
    assert bitmath.from_bits(bitmath.to_bits(word)) == word


def test_signed_word_bits():
    word = SignedWord(-2, 4)
    assert bitmath.to_bits(word, BitOrder.MSB_FIRST) == [1, 1, 1, 0]
    assert bitmath.to_bits(word, BitOrder.LSB_FIRST) == [0, 1, 1, 1]
    assert word.raw == 0b1110
    assert bitmath.from_bits([1, 1, 1, 0], BitOrder.MSB_FIRST).value == -2

    with pytest.raises(IndexError):
        word.bit(4)
    with pytest.raises(ValueError):
        bitmath.from_bits([])


def test_wrap_and_extend():
    assert bitmath.wrap_signed(8, 4) == -8
    assert bitmath.wrap_signed(-9, 4) == 7
    assert bitmath.wrap_signed(5, 4) == 5
    assert bitmath.popcount(0b1011) == 3

    wide = bitmath.sign_extend(SignedWord(-2, 4), 8)
    assert wide == SignedWord(-2, 8)
    assert bitmath.to_bits(wide, BitOrder.MSB_FIRST) == [1, 1, 1, 1, 1, 1, 1, 0]

    with pytest.raises(ValueError):
        bitmath.sign_extend(SignedWord(-2, 8), 4)


def test_reference_multipliers():
    a, b = SignedWord(6, 4), SignedWord(-2, 4)
    assert bitmath.oracle_product(a, b) == -12
    assert bitmath.sbmwc_multiply_reference(a, b) == -12
    assert bitmath.booth_multiply_reference(a, b) == -12

    # 0110 x 1110 read unsigned
    assert bitmath.unsigned_shift_add_multiply([0, 1, 1, 0], [1, 1, 1, 0]) == 84
    with pytest.raises(ValueError):
        bitmath.unsigned_shift_add_multiply([0, 1], [1, 1, 1])


@parametrize(width=range(1, 17), order=list(BitOrder))
def test_bits_round_trip(width, order):
    lo, hi = bitmath.word_range(width)
    for value in range(lo, hi + 1):
        word = SignedWord(value, width)
        bits = bitmath.to_bits(word, order)
        assert len(bits) == width
        assert bitmath.from_bits(bits, order) == word


@parametrize(width=range(1, 9))
def test_reference_multipliers_exhaustive(width):
    lo, hi = bitmath.word_range(width)
    for a in range(lo, hi + 1):
        for b in range(lo, hi + 1):
            wa, wb = SignedWord(a, width), SignedWord(b, width)
            expected = bitmath.oracle_product(wa, wb)
            assert expected == a * b
            assert bitmath.booth_multiply_reference(wa, wb) == expected
            assert bitmath.sbmwc_multiply_reference(wa, wb) == expected


def test_booth_reference_random_full_width():
    lo, hi = bitmath.word_range(16)
    rng = np.random.default_rng(16)
    for a, b in rng.integers(lo, hi, size=(100, 2), endpoint=True):
        wa, wb = SignedWord(int(a), 16), SignedWord(int(b), 16)
        assert bitmath.booth_multiply_reference(wa, wb) == int(a) * int(b)


def _recoded_product(a: int, b: SignedWord) -> int:
    weight = {BoothAction.NOP: 0, BoothAction.ADD_M: 1, BoothAction.SUB_M: -1}
    return sum(weight[action] * a << i
               for i, action in enumerate(bitmath.booth_recode_word(b)))


@parametrize(width=range(1, 9))
def test_booth_recode_weighted_sum_exhaustive(width):
    lo, hi = bitmath.word_range(width)
    for a in range(lo, hi + 1):
        for b in range(lo, hi + 1):
            assert _recoded_product(a, SignedWord(b, width)) == a * b


@parametrize(width=range(9, 17))
def test_booth_recode_weighted_sum_random(width):
    lo, hi = bitmath.word_range(width)
    rng = np.random.default_rng(width)
    for a, b in rng.integers(lo, hi, size=(1000, 2), endpoint=True):
        assert _recoded_product(int(a), SignedWord(int(b), width)) == int(a) * int(b)


def test_mixed_width_references():
    assert bitmath.sbmwc_multiply_reference(SignedWord(-3, 3), SignedWord(100, 8)) == -300
    assert bitmath.booth_multiply_reference(SignedWord(-3, 3), SignedWord(100, 8)) == -300


class BoothRecodeCases:

    def case_zeros(self):
        return 0, 0, BoothAction.NOP

    def case_start_of_run(self):
        return 1, 0, BoothAction.SUB_M

    def case_end_of_run(self):
        return 0, 1, BoothAction.ADD_M

    def case_inside_run(self):
        return 1, 1, BoothAction.NOP


@parametrize_with_cases('curr, prev, action', cases=BoothRecodeCases)
def test_booth_recode(curr, prev, action):
    assert bitmath.booth_recode(curr, prev) is action


def test_booth_recode_word():
    assert bitmath.booth_recode_word(SignedWord(-2, 4)) == [
        BoothAction.NOP, BoothAction.SUB_M, BoothAction.NOP, BoothAction.NOP
    ]
    assert bitmath.booth_recode_word(SignedWord(0, 3)) == [BoothAction.NOP] * 3


def test_booth_trace():
    steps, final = bitmath.booth_trace(SignedWord(6, 4), SignedWord(-2, 4))

    assert [step['action'] for step in steps] == ['NOP', 'SUB', 'NOP', 'NOP']
    assert [step['high'] for step in steps] == ['0000', '1010', '1101', '1110']
    assert steps[1]['addend'] == '1010'
    assert final == '11110100'


def test_booth_trace_extremes():
    _, final = bitmath.booth_trace(SignedWord(-8, 4), SignedWord(-8, 4))
    assert final == format(64, '08b')


class CycleCountCases:

    def case_crossover(self):
        return 2, 2, 1, 4, 4

    def case_single_bit(self):
        return 1, 1, 5, 5, 6

    def case_bytes(self):
        return 8, 8, 100, 6400, 808

    def case_mixed(self):
        return 3, 7, 10, 210, 77


@parametrize_with_cases('b_mc, b_ml, n, bismo, bitsmm', cases=CycleCountCases)
def test_cycle_counts(b_mc, b_ml, n, bismo, bitsmm):
    assert bitmath.bismo_cycle_count(b_mc, b_ml, n) == bismo
    assert bitmath.bitsmm_cycle_count(b_mc, b_ml, n) == bitsmm
    assert bitmath.bitsmm_cycle_count(b_ml, b_mc, n) == bitsmm


def test_bismo_examples():
    assert bitmath.bismo_cycle_count(1, 1, 7) == 7
    assert bitmath.bismo_cycle_count(16, 16, 1000) == 256000


@parametrize(b=range(1, 17))
def test_word_streaming_wins_above_two_bits(b):
    bismo = bitmath.bismo_cycle_count(b, b, 1)
    streamed = bitmath.bitsmm_cycle_count(b, b, 1)
    assert streamed == 2 * b
    assert (bismo > streamed) == (b > 2)
    assert (bismo == streamed) == (b == 2)


def test_cycle_counts_reject_zero():
    with pytest.raises(ValueError, match='n_values=0'):
        bitmath.bitsmm_cycle_count(4, 4, 0)
