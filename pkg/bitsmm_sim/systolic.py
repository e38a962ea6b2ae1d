from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Tuple
import logging

import numpy as np
import pandas as pd

from bitsmm_sim import mac
from bitsmm_sim.bitmath import SignedWord, popcount, word_range
from bitsmm_sim.errors import CapacityError, ProtocolViolation
from bitsmm_sim.mac import MacCycleInput, MacVariant, P2SDirection
from bitsmm_sim.type_utils import format_topology

logger = logging.getLogger(__name__)

TOGGLE_CLASSES = ('mac', 'pipeline', 'p2s', 'readout')


@dataclass(frozen=True)
class SaConfig:
    """Compile-time shape of a bit-serial systolic array

    Args:
        rows (int):
            MAC rows; each row is fed one multiplier stream from the left
        cols (int):
            MAC columns; each column is fed one multiplicand stream from the top
        b_max (int):
            maximum operand width of every MAC
    """
    rows: int
    cols: int
    b_max: int = mac.B_MAX

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f'array dimensions must be >= 1, got {self.rows}x{self.cols}')
        if self.b_max < 1:
            raise ValueError(f'b_max must be >= 1, got {self.b_max}')

    @property
    def label(self) -> str:
        """ `cols x rows`, the notation used for the evaluated topologies """
        return format_topology(self.rows, self.cols)


@dataclass
class Matrix:
    """Integer matrix whose entries share one two's complement width

    Args:
        values (np.ndarray):
            2D integer array
        width (int):
            common operand width
    """
    values: np.ndarray
    width: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.ndim != 2:
            raise ValueError(f'matrix must be 2D, got shape {self.values.shape}')
        lo, hi = word_range(self.width)
        if self.values.size and (self.values.min() < lo or self.values.max() > hi):
            raise ValueError(f'matrix entries do not fit {self.width}-bit words ([{lo}, {hi}])')

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def word(self, r: int, c: int) -> SignedWord:
        return SignedWord(int(self.values[r, c]), self.width)


def random_matrix(rng: np.random.Generator, rows: int, cols: int, width: int) -> Matrix:
    lo, hi = word_range(width)
    return Matrix(rng.integers(lo, hi, size=(rows, cols), endpoint=True), width)


class Lane(NamedTuple):
    """ One serial stream as it travels between neighbours """
    bit: int = 0
    toggle: int = 0
    enable: int = 0
    valid: int = 0


IDLE_LANE = Lane()


class EdgeCommand(NamedTuple):
    """ What one edge P2S unit does in a cycle: optional load, plus its toggle/enable levels """
    load: Optional[SignedWord] = None
    toggle: int = 0
    enable: int = 0
    valid: int = 0


class EdgeInputs(NamedTuple):
    cols: List[EdgeCommand]
    rows: List[EdgeCommand]


@dataclass
class InputSchedule:
    """Edge-injection plan of one matrix multiplication

    Column c is injected c cycles late and row r is injected r cycles late, so after the
    propagation registers every MAC sees its multiplicand stream exactly `width` cycles ahead
    of its multiplier stream.
    """
    config: SaConfig
    width: int
    a: Matrix
    b: Matrix

    @property
    def m(self) -> int:
        return self.a.rows

    @property
    def n(self) -> int:
        return self.a.cols

    @property
    def p(self) -> int:
        return self.b.cols

    @property
    def fill_cycles(self) -> int:
        return (self.m - 1) + (self.p - 1)

    @property
    def compute_cycles(self) -> int:
        return (self.n + 1) * self.width

    @property
    def readout_start(self) -> int:
        return self.fill_cycles + self.compute_cycles

    def _command(self, local: int, first_word: int, words) -> EdgeCommand:
        w, n = self.width, self.n
        if local < 0:
            return EdgeCommand()
        word, offset = divmod(local, w)
        index = word - first_word
        load = words(index) if not offset and 0 <= index < n else None
        valid = int(first_word * w <= local < (first_word + n) * w)
        return EdgeCommand(load, mac.toggle_level(local, w, n), int(local <= (n + 1) * w), valid)

    def at(self, t: int) -> EdgeInputs:
        """ Edge commands for global cycle `t` """
        cols = [
            self._command(t - c, 0, lambda k, c=c: self.b.word(k, c)) if c < self.p
            else EdgeCommand()
            for c in range(self.config.cols)
        ]
        rows = [
            self._command(t - r, 1, lambda k, r=r: self.a.word(r, k)) if r < self.m
            else EdgeCommand()
            for r in range(self.config.rows)
        ]
        return EdgeInputs(cols, rows)

    def plan(self) -> pd.DataFrame:
        """ Every P2S load of the run: cycle, edge ('col' or 'row'), lane index, word value """
        loads = []
        for t in range(self.readout_start + 1):
            edge = self.at(t)
            for kind, commands in (('col', edge.cols), ('row', edge.rows)):
                loads.extend({'cycle': t, 'edge': kind, 'index': i, 'value': cmd.load.value}
                             for i, cmd in enumerate(commands) if cmd.load is not None)
        return pd.DataFrame(loads, columns=['cycle', 'edge', 'index', 'value'])


@dataclass
class ReadoutChain:
    """ Snake-ordered output chain; `pending` holds (r, c, value) in arrival order """
    pending: List[Tuple[int, int, int]] = field(default_factory=list)
    port: Optional[Tuple[int, int, int]] = None
    read_en_pos: Optional[int] = None

    @property
    def draining(self) -> bool:
        return bool(self.pending)


@dataclass
class CycleStats:
    """Measured cycle accounting of one matrix multiplication

    Args:
        fill_cycles (int):
            input skew before the last active MAC starts
        compute_cycles (int):
            streaming latency, (n + 1) * width
        readout_cycles (int):
            rows * cols
        total_cycles (int):
            fill + compute + readout
        toggle_counts (Dict[str, int]):
            switched register bits per signal class
        mac_toggles (np.ndarray):
            switched register bits per MAC
        mac_leads (np.ndarray):
            locally observed multiplicand-to-multiplier lead per MAC, -1 where idle
    """
    fill_cycles: int
    compute_cycles: int
    readout_cycles: int
    total_cycles: int
    toggle_counts: Dict[str, int]
    mac_toggles: np.ndarray
    mac_leads: np.ndarray

    def as_dict(self) -> Dict[str, int]:
        return {
            'fill_cycles': self.fill_cycles,
            'compute_cycles': self.compute_cycles,
            'readout_cycles': self.readout_cycles,
            'total_cycles': self.total_cycles,
            **{f'toggles_{name}': count for name, count in self.toggle_counts.items()},
        }


@dataclass
class SystolicArray:
    """ Full register state of a bit-serial systolic array; see `make_array` """
    config: SaConfig
    variant: MacVariant
    macs: List[List[mac.MacState]]
    v_pipes: List[List[Lane]]
    h_pipes: List[List[Lane]]
    p2s_v: List[mac.P2SState]
    p2s_h: List[mac.P2SState]
    held_v: List[int]
    held_h: List[int]
    row_enable: List[bool]
    col_enable: List[bool]
    readout: ReadoutChain
    width: int
    cycle: int = 0
    schedule: Optional[InputSchedule] = None
    toggles: Dict[str, int] = field(default_factory=dict)
    mac_toggles: Optional[np.ndarray] = None
    first_v_valid: Optional[np.ndarray] = None
    first_h_valid: Optional[np.ndarray] = None


def snake_order(rows: int, cols: int) -> List[Tuple[int, int]]:
    """ Serpentine traversal starting at (0, 0): even rows left to right, odd rows back """
    return [
        (r, c)
        for r in range(rows)
        for c in (range(cols) if r % 2 == 0 else range(cols - 1, -1, -1))
    ]


def make_array(config: SaConfig, variant: MacVariant = MacVariant.BOOTH) -> SystolicArray:
    """ Builds an array straight out of global reset """
    rows, cols = config.rows, config.cols
    array = SystolicArray(
        config=config,
        variant=variant,
        macs=[],
        v_pipes=[],
        h_pipes=[],
        p2s_v=[],
        p2s_h=[],
        held_v=[],
        held_h=[],
        row_enable=[True] * rows,
        col_enable=[True] * cols,
        readout=ReadoutChain(),
        width=config.b_max,
    )
    return reset_array(array)


def reset_array(array: SystolicArray) -> SystolicArray:
    """ Applies the global reset: every register cleared, counters zeroed, schedule detached """
    config = array.config
    rows, cols = config.rows, config.cols
    array.macs = [[mac.new_mac_state(array.variant) for _ in range(cols)] for _ in range(rows)]
    array.v_pipes = [[IDLE_LANE] * cols for _ in range(rows)]
    array.h_pipes = [[IDLE_LANE] * cols for _ in range(rows)]
    array.p2s_v = [mac.p2s_new(P2SDirection.MSB_FIRST_SHIFT_LEFT, config.b_max)] * cols
    array.p2s_h = [mac.p2s_new(P2SDirection.LSB_FIRST_SHIFT_RIGHT, config.b_max)] * rows
    array.held_v = [0] * cols
    array.held_h = [0] * rows
    array.row_enable = [True] * rows
    array.col_enable = [True] * cols
    array.readout = ReadoutChain()
    array.cycle = 0
    array.schedule = None
    array.toggles = {name: 0 for name in TOGGLE_CLASSES}
    array.mac_toggles = np.zeros((rows, cols), dtype=np.int64)
    array.first_v_valid = np.full((rows, cols), -1, dtype=np.int64)
    array.first_h_valid = np.full((rows, cols), -1, dtype=np.int64)
    return array


def _lane_toggles(old: Lane, new: Lane) -> int:
    return sum(a != b for a, b in zip(old, new))


def _drive_edge(array: SystolicArray, p2s: List[mac.P2SState], held: List[int],
                commands: Optional[List[EdgeCommand]]) -> List[Lane]:
    lanes = []
    for i, unit in enumerate(p2s):
        cmd = commands[i] if commands is not None else None
        if cmd is not None and cmd.load is not None:
            try:
                unit = mac.p2s_load(unit, cmd.load)
            except ProtocolViolation as e:
                raise ProtocolViolation(e.detail, array.cycle)
        stepped, bit = mac.p2s_step(unit)
        array.toggles['p2s'] += popcount(stepped.hold_reg ^ p2s[i].hold_reg)
        p2s[i] = stepped

        if cmd is not None:
            held[i] = cmd.toggle
            lanes.append(Lane(bit, cmd.toggle, cmd.enable, cmd.valid))
        else:
            lanes.append(Lane(bit, held[i], 0, 0))
    return lanes


def _mac_input(array: SystolicArray, v: Lane, h: Lane) -> MacCycleInput:
    return MacCycleInput(v.bit, h.bit, v.toggle, False, array.width)


def sa_step(array: SystolicArray, edge: Optional[EdgeInputs] = None, read_enable: bool = False,
            trace: Optional[List[Dict[str, Any]]] = None) -> SystolicArray:
    """Advances the whole array by one global clock cycle

    Edge P2S units shift, their bits enter the first row/column, every enabled MAC executes one
    step, every propagation register advances one hop and the readout chain moves if draining.
    All registers are committed together at the end of the cycle.

    Args:
        array (SystolicArray):
            array to advance; updated in place
        edge (EdgeInputs | None):
            edge commands for this cycle; None leaves every edge idle
        read_enable (bool):
            asserts `read_output_enable` for this cycle
        trace (list | None):
            if given, one record per cycle is appended

    Raises:
        ProtocolViolation:
            Raised on toggle cadence errors, P2S loads mid-word or a second readout request
            while the chain is still draining

    Returns:
        SystolicArray:
            the same array, one cycle later
    """
    rows, cols = array.config.rows, array.config.cols
    t = array.cycle
    variant = array.variant

    v_edge = _drive_edge(array, array.p2s_v, array.held_v, edge.cols if edge else None)
    h_edge = _drive_edge(array, array.p2s_h, array.held_h, edge.rows if edge else None)

    v_local = [v_edge] + [array.v_pipes[r] for r in range(1, rows)]
    h_local = [[h_edge[r]] + array.h_pipes[r][1:] for r in range(rows)]

    readout = array.readout
    if trace is not None:
        record = {'cycle': t, 'read_enable': int(read_enable)}
        record.update({f'v_{c}': v_edge[c].bit for c in range(cols)})
        record.update({f'h_{r}': h_edge[r].bit for r in range(rows)})
        for r in range(rows):
            for c in range(cols):
                record.update(mac.mac_trace_record(
                    variant, array.macs[r][c], _mac_input(array, v_local[r][c], h_local[r][c]),
                    prefix=f'mac_{r}_{c}.'
                ))

    # readout: the chain captures combinational MAC outputs before this cycle's commit
    if read_enable:
        if readout.draining:
            raise ProtocolViolation('read_output_enable asserted while the chain drains', t)
        captured = [
            (r, c, mac.mac_output(variant, array.macs[r][c],
                                  _mac_input(array, v_local[r][c], h_local[r][c])))
            for r, c in snake_order(rows, cols)
        ]
        # the port sits at the end of the snake
        readout.pending = captured[::-1]
        readout.read_en_pos = 0
    elif readout.read_en_pos is not None:
        readout.read_en_pos = readout.read_en_pos + 1 if readout.draining else None

    if readout.draining:
        port = readout.pending.pop(0)
        previous = readout.port[2] if readout.port is not None else 0
        array.toggles['readout'] += popcount((port[2] ^ previous) & ((1 << mac.ACC_W) - 1))
        readout.port = port

    for r in range(rows):
        if not array.row_enable[r]:
            continue
        for c in range(cols):
            if not array.col_enable[c]:
                continue
            v, h = v_local[r][c], h_local[r][c]
            if not (v.enable and h.enable):
                continue
            if v.valid and array.first_v_valid[r, c] < 0:
                array.first_v_valid[r, c] = t
            if h.valid and array.first_h_valid[r, c] < 0:
                array.first_h_valid[r, c] = t

            state = array.macs[r][c]
            inp = _mac_input(array, v, h)
            mac.check_edge(state, inp, array.width, t)
            stepped = mac.mac_step(variant, state, inp, array.config.b_max)
            flips = mac.register_toggles(state, stepped)
            array.mac_toggles[r, c] += flips
            array.toggles['mac'] += flips
            array.macs[r][c] = stepped

    v_pipes = [[IDLE_LANE] * cols] + [list(array.v_pipes[r]) for r in range(1, rows)]
    h_pipes = [list(array.h_pipes[r]) for r in range(rows)]
    for r in range(rows):
        for c in range(cols):
            if not (array.row_enable[r] and array.col_enable[c]):
                continue
            if r:
                array.toggles['pipeline'] += _lane_toggles(v_pipes[r][c], v_local[r - 1][c])
                v_pipes[r][c] = v_local[r - 1][c]
            if c:
                array.toggles['pipeline'] += _lane_toggles(h_pipes[r][c], h_local[r][c - 1])
                h_pipes[r][c] = h_local[r][c - 1]
    array.v_pipes = v_pipes
    array.h_pipes = h_pipes

    if trace is not None:
        record['read_en_pos'] = readout.read_en_pos if readout.read_en_pos is not None else -1
        port = readout.port if readout.read_en_pos is not None else None
        record.update({
            'port': port[2] if port is not None else '',
            'port_r': port[0] if port is not None else '',
            'port_c': port[1] if port is not None else '',
        })
        trace.append(record)

    array.cycle += 1
    return array


def schedule_matmul(config: SaConfig, a: Matrix, b: Matrix,
                    width: Optional[int] = None) -> InputSchedule:
    """Plans the edge injection of C = A x B

    Args:
        config (SaConfig):
            array shape
        a (Matrix):
            m x n multipliers, row r streamed into MAC row r
        b (Matrix):
            n x p multiplicands, column c streamed into MAC column c
        width (int | None):
            operand width, defaults to the wider of the two matrices

    Raises:
        ValueError:
            Raised if the matrices do not fit the array or the width

    Returns:
        InputSchedule:
            the injection plan
    """
    width = max(a.width, b.width) if width is None else width
    if a.cols != b.rows:
        raise ValueError(f'cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}')
    if not a.cols:
        raise ValueError('shared dimension n must be >= 1')
    if a.rows > config.rows or b.cols > config.cols:
        raise ValueError(
            f'{a.rows}x{b.cols} result does not fit a {config.rows}x{config.cols} '
            f'(rows x cols) array'
        )
    if not 1 <= width <= config.b_max:
        raise ValueError(f'width must be within [1, {config.b_max}], got {width}')
    if max(a.width, b.width) > width:
        raise ValueError(f'{max(a.width, b.width)}-bit operands exceed width={width}')

    schedule = InputSchedule(config, width, Matrix(a.values, width), Matrix(b.values, width))
    logger.debug('scheduled %dx%dx%d at width %d on %s: fill=%d compute=%d',
                 schedule.m, schedule.n, schedule.p, width, config.label,
                 schedule.fill_cycles, schedule.compute_cycles)
    return schedule


def read_outputs(array: SystolicArray,
                 trace: Optional[List[Dict[str, Any]]] = None) -> List[Tuple[int, int, int]]:
    """Asserts `read_output_enable` for one cycle and drains the chain

    Args:
        array (SystolicArray):
            array whose computation has completed
        trace (list | None):
            if given, per-cycle records are appended

    Raises:
        ProtocolViolation:
            Raised if operand bits are still in flight

    Returns:
        List[Tuple[int, int, int]]:
            (r, c, accumulator) in arrival order, one per cycle, rows * cols entries
    """
    schedule = array.schedule
    in_flight = any(lane.valid for row in array.v_pipes + array.h_pipes for lane in row) or \
        any(unit.remaining for unit in array.p2s_v + array.p2s_h)
    if in_flight or (schedule is not None and array.cycle < schedule.readout_start):
        raise ProtocolViolation('readout requested during active computation', array.cycle)

    outputs = []
    for i in range(array.config.rows * array.config.cols):
        edge = schedule.at(array.cycle) if schedule is not None else None
        sa_step(array, edge, read_enable=(i == 0), trace=trace)
        outputs.append(array.readout.port)
    return outputs


def run_matmul(array: SystolicArray, a: Matrix, b: Matrix, width: Optional[int] = None,
               trace: Optional[List[Dict[str, Any]]] = None,
               guard: int = mac.GUARD) -> Tuple[np.ndarray, CycleStats]:
    """Computes C = A x B on the array, cycle by cycle, and drains the result

    Args:
        array (SystolicArray):
            array to run on; globally reset first
        a (Matrix):
            m x n multipliers
        b (Matrix):
            n x p multiplicands
        width (int | None):
            operand width, defaults to the wider of the two matrices
        trace (list | None):
            if given, per-cycle records are appended
        guard (int):
            accumulator guard bits

    Raises:
        CapacityError:
            Raised if n could overflow the accumulators

    Returns:
        Tuple[np.ndarray, CycleStats]:
            m x p accumulators and the measured cycle accounting
    """
    schedule = schedule_matmul(array.config, a, b, width)
    if schedule.n > 2 ** guard:
        raise CapacityError(f'n={schedule.n} exceeds the {guard} accumulator guard bits')

    reset_array(array)
    array.schedule = schedule
    array.width = schedule.width
    array.row_enable = [r < schedule.m for r in range(array.config.rows)]
    array.col_enable = [c < schedule.p for c in range(array.config.cols)]

    for t in range(schedule.readout_start):
        sa_step(array, schedule.at(t), trace=trace)
    outputs = read_outputs(array, trace)

    result = np.zeros((schedule.m, schedule.p), dtype=np.int64)
    for r, c, value in outputs:
        if r < schedule.m and c < schedule.p:
            result[r, c] = value

    active = (array.first_v_valid >= 0) & (array.first_h_valid >= 0)
    stats = CycleStats(
        fill_cycles=schedule.fill_cycles,
        compute_cycles=schedule.compute_cycles,
        readout_cycles=len(outputs),
        total_cycles=array.cycle,
        toggle_counts=dict(array.toggles),
        mac_toggles=array.mac_toggles.copy(),
        mac_leads=np.where(active, array.first_h_valid - array.first_v_valid, -1),
    )
    logger.info('%s %s matmul %dx%dx%d width %d: %d cycles',
                array.config.label, array.variant.value, schedule.m, schedule.n, schedule.p,
                schedule.width, stats.total_cycles)
    return result, stats


def structural_report(config: SaConfig) -> Dict[str, int]:
    """Component counts of an array

    Returns:
        Dict[str, int]:
            `mux_count` ((rows * cols) - 1), `pipeline_register_count_paper_formula`
            ((rows - 1)(cols - 1) + 1), `mac_count`, and the simulator's own register counts
            (`model_propagation_registers`, `model_readout_registers`, `p2s_count`)
    """
    rows, cols = config.rows, config.cols
    return {
        'mac_count': rows * cols,
        'mux_count': rows * cols - 1,
        'pipeline_register_count_paper_formula': (rows - 1) * (cols - 1) + 1,
        'model_propagation_registers': rows * (cols - 1) + (rows - 1) * cols,
        'model_readout_registers': rows * cols,
        'p2s_count': rows + cols,
    }
