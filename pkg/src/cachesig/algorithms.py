"""Signal-recovery applications: FLUSH+RELOAD binary search and the
cacheline counter, with strict timed-measurement accounting."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .cache import CacheState, LayoutConfig, LineId, allocate_lines
from .engine import GadgetError
from .gadgets import GadgetContext, invert, nand, replicate
from .netlist import build_counter_netlist, compile_program, run_program
from .timing import TimerModel, measure_line


class AlgorithmError(Exception):
    pass


@dataclass
class SearchState:
    signal: list[LineId]      # S, size N; exactly one present at start
    work: list[LineId]        # W, size 2N
    result: LineId            # R
    lo: int = 0
    hi: int = 0

    def __post_init__(self):
        n = len(self.signal)
        if n < 4 or n & (n - 1):
            raise AlgorithmError("signal array size must be a power of two >= 4")
        if len(self.work) != 2 * n:
            raise AlgorithmError("work array must be twice the signal array")
        self.hi = n - 1


def make_search_state(n: int, present_index: int, stride: int = 4160,
                      capacity: int | None = None) -> tuple[CacheState, SearchState]:
    lines = allocate_lines(LayoutConfig(stride=stride, count=3 * n + 1))
    state = CacheState(lines, capacity=capacity)
    st = SearchState(signal=lines[:n], work=lines[n:3 * n], result=lines[3 * n])
    if present_index is not None:
        state.touch(st.signal[present_index])
    return state, st


def binary_search(st: SearchState, timer: TimerModel, ctx: GadgetContext,
                  check_preconditions: bool = False) -> int:
    """Locate the single present signal line with log2(N) timed measures.

    Per round: flush W and R; replicate each surviving S line into its W
    pair (even entry feeds the test, odd entry preserves the signal); NAND
    the even entries of the candidate half into R; restore S from the odd
    entries; one timed measure of R picks the half.
    """
    if check_preconditions:
        present = [l for l in st.signal if ctx.state.phi(l)]
        if len(present) != 1:
            raise AlgorithmError(f"expected exactly one present line, found {len(present)}")
    lo, hi = st.lo, st.hi
    while lo < hi:
        for line in st.work:
            ctx.state.flush(line)
        ctx.state.flush(st.result)
        for i in range(lo, hi + 1):
            replicate(st.signal[i], [st.work[2 * i], st.work[2 * i + 1]], ctx)
        mid = (lo + hi + 1) // 2
        test = [st.work[2 * i] for i in range(lo, mid)]
        if len(test) == 1:
            invert(test[0], st.result, ctx)
        else:
            nand(test, st.result, ctx)
        for i in range(lo, hi + 1):
            ctx.state.flush(st.signal[i])
            invert(st.work[2 * i + 1], st.signal[i], ctx)
        res = measure_line(timer, ctx.latency, ctx.state, st.result, ctx.rng)
        if res.indeterminate:
            # retry once, then fall back to the not-present branch
            ctx.state.flush(st.result)  # undo the destructive read for the retry
            res = measure_line(timer, ctx.latency, ctx.state, st.result, ctx.rng)
            if res.indeterminate:
                res.estimate = False
        if res.estimate:
            hi = mid - 1
        else:
            lo = mid
    st.lo = st.hi = lo
    return lo


@dataclass
class CounterState:
    inputs: list[LineId]
    counter_bits: list[LineId]


def make_counter_state(n: int, present_indexes, stride: int = 4160) -> tuple[CacheState, CounterState]:
    bits = n.bit_length()  # == ceil(log2(n + 1)) for n >= 1
    lines = allocate_lines(LayoutConfig(stride=stride, count=n + bits))
    state = CacheState(lines)
    st = CounterState(inputs=lines[:n], counter_bits=lines[n:])
    for i in present_indexes:
        state.touch(st.inputs[i])
    return state, st


@lru_cache(maxsize=32)
def _counter_program(n: int):
    return compile_program(build_counter_netlist(n))


def count_lines(st: CounterState, timer: TimerModel, ctx: GadgetContext) -> int:
    """Popcount of the input lines read with ceil(log2(n+1)) timed measures.

    The counter netlist runs through the compiled-tape executor (it is
    equivalent to the gadget-level path, which the netlist tests pin);
    counter-bit lines are then read through the timer model.
    """
    n = len(st.inputs)
    if n < 1:
        raise AlgorithmError("need at least one input line")
    if any(ctx.state.phi(line) for line in st.counter_bits):
        raise AlgorithmError("counter bit lines must start absent")
    prog = _counter_program(n)
    if len(st.counter_bits) != len(prog.output_slots):
        raise AlgorithmError(
            f"need {len(prog.output_slots)} counter bit lines for {n} inputs")
    bits_in = [ctx.state.phi(line) for line in st.inputs]
    out_bits = run_program(prog, bits_in,
                           flip_prob=ctx.noise.gadget_flip_prob, rng=ctx.rng)
    for line in st.inputs:  # every gadget read is destructive
        ctx.state.touch(line)
    for line, bit in zip(st.counter_bits, out_bits):
        if bit:
            ctx.state.touch(line)
    value = 0
    for k, line in enumerate(st.counter_bits):
        res = measure_line(timer, ctx.latency, ctx.state, line, ctx.rng)
        if res.estimate:
            value |= 1 << k
    return value


def counter_bit_width(n: int) -> int:
    return n.bit_length()
