from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging

from bitsmm_sim.bitmath import (
    BitOrder, BoothAction, SignedWord, booth_recode, popcount, sign_extend, wrap_signed
)
from bitsmm_sim.errors import CapacityError, ProtocolViolation

logger = logging.getLogger(__name__)

# compile-time maximum operand width of every MAC
B_MAX = 16
# accumulator headroom above a full-scale product
GUARD = 16
ACC_W = 2 * B_MAX + GUARD


class MacVariant(Enum):
    BOOTH = 'booth'
    SBMWC = 'sbmwc'


@dataclass(frozen=True)
class MacCycleInput:
    """Input pins of one MAC for one clock cycle

    Args:
        mc_bit (int):
            serial multiplicand bit, `mc_i`
        ml_bit (int):
            serial multiplier bit, `ml_i`
        v_t (int):
            value toggle level, `v_t_i`; flips at every operand boundary
        reset (bool):
            synchronous reset
        width (int):
            configured operand width
    """
    mc_bit: int = 0
    ml_bit: int = 0
    v_t: int = 0
    reset: bool = False
    width: int = B_MAX


@dataclass(frozen=True)
class BoothMacState:
    acc: int = 0
    mc_reg: int = 0
    mask_reg: int = 0
    s_m: int = 0
    m_mc: int = 0
    v_t_prev: int = 0
    ml_prev: int = 0
    mult_en: int = 0


@dataclass(frozen=True)
class SbmwcMacState:
    acc_sum: int = 0
    acc_diff: int = 0
    mc_reg: int = 0
    mask_reg: int = 0
    s_m: int = 0
    m_mc: int = 0
    v_t_prev: int = 0
    mult_en: int = 0


MacState = Union[BoothMacState, SbmwcMacState]


class P2SDirection(Enum):
    MSB_FIRST_SHIFT_LEFT = 'msb_first'
    LSB_FIRST_SHIFT_RIGHT = 'lsb_first'

    @property
    def order(self) -> BitOrder:
        if self is P2SDirection.MSB_FIRST_SHIFT_LEFT:
            return BitOrder.MSB_FIRST
        return BitOrder.LSB_FIRST


@dataclass(frozen=True)
class P2SState:
    """Parallel-to-serial converter

    Args:
        direction (P2SDirection):
            MSb-first units shift left (multiplicands), LSb-first units shift right (multipliers)
        b_max (int):
            width of the holding register
        hold_reg (int):
            remaining unsigned bits of the loaded word
        width (int):
            width of the loaded word
        remaining (int):
            bits left to emit
        valid (bool):
            whether a loaded word is still being emitted
    """
    direction: P2SDirection
    b_max: int = B_MAX
    hold_reg: int = 0
    width: int = 0
    remaining: int = 0
    valid: bool = False


def _mask(bits: int) -> int:
    return (1 << bits) - 1


def new_mac_state(variant: MacVariant) -> MacState:
    """ Register file of a MAC straight out of reset """
    return BoothMacState() if variant is MacVariant.BOOTH else SbmwcMacState()


def _masked_operand(state: MacState, edge: int, acc_w: int) -> int:
    """Combinational multiplicand mask circuit

    On a toggle edge the registered multiplicand is isolated by the grown mask and sign extended
    from its top bit; otherwise the left-shifting operand register is used.
    """
    if not edge:
        return state.m_mc
    width = popcount(state.mask_reg)
    if not width:
        return 0
    return wrap_signed(wrap_signed(state.mc_reg & state.mask_reg, width), acc_w)


def _common_next(state: MacState, inp: MacCycleInput, edge: int, operand: int, active: int,
                 b_max: int, acc_w: int) -> Dict[str, int]:
    return {
        'mc_reg': ((state.mc_reg << 1) | inp.mc_bit) & _mask(b_max),
        'mask_reg': 1 if edge else ((state.mask_reg << 1) | 1) & _mask(b_max),
        's_m': state.mask_reg if edge else state.s_m,
        'm_mc': wrap_signed(operand << 1, acc_w) if active else 0,
        'v_t_prev': inp.v_t,
        'mult_en': active,
    }


def booth_comb(state: BoothMacState, inp: MacCycleInput,
               acc_w: int = ACC_W) -> Tuple[int, int, BoothAction]:
    """ Combinational logic of the Booth MAC: (toggle edge, Booth operand, recoded action) """
    edge = inp.v_t ^ state.v_t_prev
    operand = _masked_operand(state, edge, acc_w)
    active = state.mult_en or edge
    prev = 0 if edge else state.ml_prev
    action = booth_recode(inp.ml_bit, prev) if active else BoothAction.NOP
    return edge, operand, action


def booth_mac_step(state: BoothMacState, inp: MacCycleInput, b_max: int = B_MAX,
                   acc_w: int = ACC_W) -> BoothMacState:
    """Advances a Booth-based bit-serial MAC by one clock cycle

    The multiplicand is sign extended once per word and then shifted left every cycle, and the
    single adder is enabled only when the two most recent multiplier bits differ.

    Args:
        state (BoothMacState):
            registers at the start of the cycle
        inp (MacCycleInput):
            input pins sampled this cycle
        b_max (int):
            maximum operand width
        acc_w (int):
            accumulator width

    Returns:
        BoothMacState:
            registers after the clock edge
    """
    if inp.reset:
        return BoothMacState()

    edge, operand, action = booth_comb(state, inp, acc_w)
    active = int(state.mult_en or edge)

    acc = state.acc
    if action is BoothAction.ADD_M:
        acc = wrap_signed(acc + operand, acc_w)
    elif action is BoothAction.SUB_M:
        acc = wrap_signed(acc - operand, acc_w)

    return BoothMacState(
        acc=acc,
        ml_prev=inp.ml_bit if active else 0,
        **_common_next(state, inp, edge, operand, active, b_max, acc_w),
    )


def sbmwc_mac_step(state: SbmwcMacState, inp: MacCycleInput, b_max: int = B_MAX,
                   acc_w: int = ACC_W) -> SbmwcMacState:
    """Advances an SBMwC-based bit-serial MAC by one clock cycle

    The MAC cannot tell whether the current multiplier bit is the last one of its word, so a set
    bit updates both the sum and the difference accumulator. A toggle edge on the following cycle
    marks the previous bit as final and selects the difference path as the new base.

    Args:
        state (SbmwcMacState):
            registers at the start of the cycle
        inp (MacCycleInput):
            input pins sampled this cycle
        b_max (int):
            maximum operand width
        acc_w (int):
            accumulator width

    Returns:
        SbmwcMacState:
            registers after the clock edge
    """
    if inp.reset:
        return SbmwcMacState()

    edge = inp.v_t ^ state.v_t_prev
    operand = _masked_operand(state, edge, acc_w)
    active = int(state.mult_en or edge)

    base = state.acc_diff if edge else state.acc_sum
    if active and inp.ml_bit:
        acc_sum = wrap_signed(base + operand, acc_w)
        acc_diff = wrap_signed(base - operand, acc_w)
    else:
        acc_sum = acc_diff = base

    return SbmwcMacState(
        acc_sum=acc_sum,
        acc_diff=acc_diff,
        **_common_next(state, inp, edge, operand, active, b_max, acc_w),
    )


def mac_step(variant: MacVariant, state: MacState, inp: MacCycleInput, b_max: int = B_MAX,
             acc_w: int = ACC_W) -> MacState:
    if variant is MacVariant.BOOTH:
        return booth_mac_step(state, inp, b_max, acc_w)
    return sbmwc_mac_step(state, inp, b_max, acc_w)


def mac_output(variant: MacVariant, state: MacState, inp: Optional[MacCycleInput] = None) -> int:
    """ Accumulator output port; for SBMwC a toggle edge selects the difference path """
    if variant is MacVariant.BOOTH:
        return state.acc
    if inp is not None and inp.v_t ^ state.v_t_prev:
        return state.acc_diff
    return state.acc_sum


def register_toggles(old: MacState, new: MacState, acc_w: int = ACC_W) -> int:
    """ Number of register bits that switched between two consecutive cycles """
    return sum(
        popcount((getattr(old, f.name) ^ getattr(new, f.name)) & _mask(acc_w))
        for f in fields(old)
    )


def mac_trace_record(variant: MacVariant, state: MacState, inp: MacCycleInput,
                     prefix: str = '', acc_w: int = ACC_W) -> Dict[str, Any]:
    """ Input pins, combinational decisions and registers of one MAC at the start of a cycle """
    record = {
        f'{prefix}mc_i': inp.mc_bit,
        f'{prefix}ml_i': inp.ml_bit,
        f'{prefix}v_t_i': inp.v_t,
        f'{prefix}edge': inp.v_t ^ state.v_t_prev,
    }
    if variant is MacVariant.BOOTH:
        record[f'{prefix}action'] = booth_comb(state, inp, acc_w)[2].value
    else:
        record[f'{prefix}select'] = 'diff' if record[f'{prefix}edge'] else 'sum'
    record.update({f'{prefix}{f.name}': getattr(state, f.name) for f in fields(state)})
    return record


def p2s_new(direction: P2SDirection, b_max: int = B_MAX) -> P2SState:
    return P2SState(direction=direction, b_max=b_max)


def p2s_load(state: P2SState, value: SignedWord) -> P2SState:
    """ Latches a parallel word into the converter

    Raises:
        ProtocolViolation:
            Raised if the previous word has not been fully emitted
        ValueError:
            Raised if the word is wider than the holding register
    """
    if state.remaining:
        raise ProtocolViolation(
            f'P2S loaded with {state.remaining} bit(s) of the previous word still pending'
        )
    if value.width > state.b_max:
        raise ValueError(f'{value.width}-bit word does not fit a {state.b_max}-bit P2S')
    return replace(state, hold_reg=value.raw, width=value.width, remaining=value.width,
                   valid=True)


def p2s_step(state: P2SState) -> Tuple[P2SState, int]:
    """ Emits one bit and shifts the holding register; idle converters emit 0 """
    if not state.remaining:
        return replace(state, valid=False), 0

    if state.direction is P2SDirection.MSB_FIRST_SHIFT_LEFT:
        bit = (state.hold_reg >> (state.width - 1)) & 1
        hold_reg = (state.hold_reg << 1) & _mask(state.width)
    else:
        bit = state.hold_reg & 1
        hold_reg = state.hold_reg >> 1

    remaining = state.remaining - 1
    return replace(state, hold_reg=hold_reg, remaining=remaining, valid=bool(remaining)), bit


def toggle_level(local_cycle: int, width: int, n_values: int) -> int:
    """ Value toggle level of a stream of `n_values` words at a MAC-local cycle """
    if local_cycle < 0:
        return 0
    return (min(local_cycle, (n_values + 1) * width) // width) & 1


def stream_inputs(vec_a: Sequence[SignedWord], vec_b: Sequence[SignedWord],
                  width: int, b_max: int = B_MAX) -> List[MacCycleInput]:
    """Builds the per-cycle input pins of a serial dot product

    Multiplicand k is emitted MSb first during cycles [k*width, (k+1)*width) and multiplier k
    LSb first one word later, each through its own P2S converter.

    Args:
        vec_a (Sequence[SignedWord]):
            multiplicands, already `width` bits wide
        vec_b (Sequence[SignedWord]):
            multipliers, already `width` bits wide
        width (int):
            operand width
        b_max (int):
            P2S holding register width

    Returns:
        List[MacCycleInput]:
            (len(vec_a) + 1) * width cycles of inputs
    """
    n = len(vec_a)
    mc_p2s = p2s_new(P2SDirection.MSB_FIRST_SHIFT_LEFT, b_max)
    ml_p2s = p2s_new(P2SDirection.LSB_FIRST_SHIFT_RIGHT, b_max)

    inputs = []
    for t in range((n + 1) * width):
        word, offset = divmod(t, width)
        if not offset and word < n:
            mc_p2s = p2s_load(mc_p2s, vec_a[word])
        if not offset and word >= 1:
            ml_p2s = p2s_load(ml_p2s, vec_b[word - 1])
        mc_p2s, mc_bit = p2s_step(mc_p2s)
        ml_p2s, ml_bit = p2s_step(ml_p2s)
        inputs.append(MacCycleInput(mc_bit, ml_bit, toggle_level(t, width, n), False, width))

    return inputs


def boundary_input(n_values: int, width: int) -> MacCycleInput:
    """ Pins on the trailing boundary cycle, where the last toggle flip closes the stream """
    return MacCycleInput(0, 0, toggle_level((n_values + 1) * width, width, n_values), False,
                         width)


def check_edge(state: MacState, inp: MacCycleInput, width: int, cycle: int) -> None:
    """ Verifies the toggle cadence: the mask must hold exactly `width` ones at every edge

    Raises:
        ProtocolViolation:
            Raised on a width change or a toggle after the wrong number of bits
    """
    if inp.width != width:
        raise ProtocolViolation(f'width changed from {width} to {inp.width}', cycle)
    if inp.v_t ^ state.v_t_prev and popcount(state.mask_reg) != width:
        raise ProtocolViolation(
            f'value toggle after {popcount(state.mask_reg)} bit(s), expected {width}', cycle
        )


def run_stream(variant: MacVariant, inputs: Sequence[MacCycleInput], width: int,
               boundary: Optional[MacCycleInput] = None,
               trace: Optional[List[Dict[str, Any]]] = None,
               b_max: int = B_MAX, acc_w: int = ACC_W) -> Tuple[int, int, MacState]:
    """Clocks a single MAC through a stream of input pins, checking the protocol

    Args:
        variant (MacVariant):
            MAC architecture
        inputs (Sequence[MacCycleInput]):
            pins for each cycle
        width (int):
            operand width the stream was built for
        boundary (MacCycleInput | None):
            pins of the trailing boundary cycle on which the result is read
        trace (list | None):
            if given, one record per cycle is appended
        b_max (int):
            maximum operand width
        acc_w (int):
            accumulator width

    Raises:
        ProtocolViolation:
            Raised with the offending cycle index

    Returns:
        Tuple[int, int, MacState]:
            accumulator output, number of clocked cycles, final registers
    """
    state = new_mac_state(variant)
    for cycle, inp in enumerate(inputs):
        check_edge(state, inp, width, cycle)
        if trace is not None:
            trace.append({'cycle': cycle, **mac_trace_record(variant, state, inp, acc_w=acc_w)})
        state = mac_step(variant, state, inp, b_max, acc_w)

    if boundary is not None:
        check_edge(state, boundary, width, len(inputs))

    return mac_output(variant, state, boundary), len(inputs), state


def _prepare_operands(vec: Sequence[SignedWord], width: int, name: str) -> List[SignedWord]:
    for word in vec:
        if word.width > width:
            raise ValueError(f'{name} holds a {word.width}-bit word, wider than width={width}')
    return [sign_extend(word, width) for word in vec]


def drive_dot_product(variant: MacVariant, vec_a: Sequence[SignedWord],
                      vec_b: Sequence[SignedWord], width: int,
                      trace: Optional[List[Dict[str, Any]]] = None,
                      b_max: int = B_MAX, guard: int = GUARD) -> Tuple[int, int]:
    """Streams a dot product through one MAC

    Args:
        variant (MacVariant):
            MAC architecture
        vec_a (Sequence[SignedWord]):
            multiplicands, streamed MSb first
        vec_b (Sequence[SignedWord]):
            multipliers, streamed LSb first one word behind
        width (int):
            operand width; narrower words are sign extended
        trace (list | None):
            if given, per-cycle records are appended
        b_max (int):
            maximum operand width
        guard (int):
            accumulator guard bits

    Raises:
        ValueError:
            Raised on empty or mismatched vectors and invalid widths
        CapacityError:
            Raised if the vectors are long enough to overflow the accumulator

    Returns:
        Tuple[int, int]:
            dot product and cycle count, (len(vec_a) + 1) * width
    """
    if len(vec_a) != len(vec_b):
        raise ValueError(
            f'vectors must have the same length, got {len(vec_a)} and {len(vec_b)}'
        )
    if not len(vec_a):
        raise ValueError('dot product of empty vectors')
    if not 1 <= width <= b_max:
        raise ValueError(f'width must be within [1, {b_max}], got {width}')
    if len(vec_a) > 2 ** guard:
        raise CapacityError(
            f'{len(vec_a)} terms exceed the {guard} accumulator guard bits '
            f'(at most {2 ** guard} terms)'
        )

    vec_a = _prepare_operands(vec_a, width, 'vec_a')
    vec_b = _prepare_operands(vec_b, width, 'vec_b')

    inputs = stream_inputs(vec_a, vec_b, width, b_max)
    result, cycles, _ = run_stream(variant, inputs, width, boundary_input(len(vec_a), width),
                                   trace, b_max, 2 * b_max + guard)
    logger.debug('%s dot product n=%d width=%d -> %d in %d cycles',
                 variant.value, len(vec_a), width, result, cycles)
    return result, cycles


def drive_multiplication(variant: MacVariant, a: SignedWord, b: SignedWord,
                         trace: Optional[List[Dict[str, Any]]] = None,
                         b_max: int = B_MAX) -> Tuple[int, int]:
    """ Multiplies two words on one MAC; both are extended to max(a.width, b.width)

    Returns:
        Tuple[int, int]:
            product and cycle count, 2 * max(a.width, b.width)
    """
    return drive_dot_product(variant, [a], [b], max(a.width, b.width), trace, b_max)
