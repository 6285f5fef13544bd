"""Candidate scoring and selection.

Each candidate is scored by scanning every basic block left to right: a
matching slice adds ``weight * (metric(slice) - metric(pattern))`` and the
scan skips past it, otherwise the scan advances by one instruction. The
scan stops once the pattern no longer fits in the remaining instructions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigError
from .generator import BASE_OPCODE_BITS, PAPER, STRICT, fusable, live_after

CUSTOM_BITS = 7
CUSTOM_COUNT = 4
PATTERN_BYTES = 4


class MetricKind(str, enum.Enum):
    STATIC_SIZE = "static-size"
    DYNAMIC_SIZE = "dynamic-size"
    DYNAMIC_COUNT = "dynamic-count"

    @property
    def dynamic(self):
        return self is not MetricKind.STATIC_SIZE

    def of_slice(self, instrs):
        if self is MetricKind.DYNAMIC_COUNT:
            return len(instrs)
        return sum(ins.byte_size for ins in instrs)

    def of_pattern(self, pattern):
        return 1 if self is MetricKind.DYNAMIC_COUNT else PATTERN_BYTES


ALL_METRICS = tuple(MetricKind)


def sel_count(opcode_bits, custom_bits=CUSTOM_BITS, custom_count=CUSTOM_COUNT):
    """How many instructions fit in the custom opcode space."""
    if opcode_bits < custom_bits:
        raise ConfigError(f"opcode_bits must be >= {custom_bits}")
    return 2 ** (opcode_bits - custom_bits) * custom_count


@dataclass(frozen=True)
class SelConfig:
    opcode_bits: int = 9
    metric: MetricKind = MetricKind.STATIC_SIZE
    liveness_mode: str = STRICT
    custom_bits: int = CUSTOM_BITS
    custom_count: int = CUSTOM_COUNT

    def __post_init__(self):
        if not isinstance(self.opcode_bits, int) or self.opcode_bits < max(self.custom_bits, BASE_OPCODE_BITS):
            raise ConfigError(f"opcode_bits must be an integer >= {self.custom_bits}")
        object.__setattr__(self, "metric", MetricKind(self.metric))

    @property
    def sel_count(self):
        return sel_count(self.opcode_bits, self.custom_bits, self.custom_count)


@dataclass(frozen=True)
class MatchSite:
    block: str | None
    start: int
    length: int
    slots: tuple
    imms: tuple
    exec_count: int = 1
    address: int = 0

    @property
    def slot_map(self):
        return dict(self.slots)


def match_pattern(slice_, pattern, mode=STRICT, following=(), block=None, start=0, exec_count=1):
    """Return a MatchSite if ``slice_`` instantiates ``pattern``, else None.

    Slots bind independently (two slots may bind the same register). In
    strict mode every intermediate register must be dead in ``following``.
    """
    if len(slice_) != len(pattern.ops):
        return None
    inputs = {}
    imms = {}
    current = {}
    names = pattern.imm_names if pattern.imm_fields else ()
    for i, (ins, op) in enumerate(zip(slice_, pattern.ops)):
        if not fusable(ins, include_m_ext=True) or ins.base_mnemonic != op.spec.base_mnemonic:
            return None
        reads = ins.reads()
        if len(reads) != len(op.reads):
            return None
        for r, (src, k) in zip(reads, op.reads):
            if src == "in":
                if r in current or inputs.setdefault(k, r) != r:
                    return None
            elif current.get(r) != k:
                return None
        for v, f in zip(ins.imms(), op.imms):
            if not pattern.imm_fields[f].fits(v):
                return None
            imms[names[f]] = v
        current[ins.dest()] = i
    rd = slice_[-1].dest()
    if mode != PAPER:
        tmp = {ins.dest() for ins in slice_[:-1]} - {rd}
        if any(live_after(following, r) for r in tmp):
            return None
    slots = (("rd", rd),) + tuple((f"rs{k + 1}", inputs[k]) for k in sorted(inputs))
    return MatchSite(block, start, len(slice_), slots, tuple(sorted(imms.items())), exec_count, slice_[0].address)


def _weight(metric, trace, address):
    if not metric.dynamic:
        return 1
    return trace.count(address)


def find_matches(instrs, pattern, mode=STRICT, block=None, trace=None):
    """Greedy non-overlapping match sites of ``pattern`` in one block."""
    sites = []
    n = len(pattern.ops)
    first = pattern.ops[0].spec.base_mnemonic
    index = 0
    while index + n <= len(instrs):
        if instrs[index].base_mnemonic != first:
            # cheap rejection before the full match
            index += 1
            continue
        slice_ = instrs[index:index + n]
        count = trace.count(slice_[0].address) if trace is not None else 1
        site = match_pattern(slice_, pattern, mode, instrs[index + n:], block, index, count)
        if site is not None:
            sites.append(site)
            index += n
        else:
            index += 1
    return sites


def improvement(instrs, pattern, metric, trace=None, mode=STRICT):
    """Metric improvement of ``pattern`` over one block's instruction list."""
    metric = MetricKind(metric)
    if metric.dynamic and trace is None:
        raise ConfigError(f"{metric.value} needs an execution trace")
    total = 0
    for site in find_matches(instrs, pattern, mode, trace=trace):
        slice_ = instrs[site.start:site.start + site.length]
        w = _weight(metric, trace, slice_[0].address)
        total += w * (metric.of_slice(slice_) - metric.of_pattern(pattern))
    return total


def score(program, pattern, metric, trace=None, mode=STRICT):
    """Total improvement over all blocks plus the match sites."""
    metric = MetricKind(metric)
    if metric.dynamic and trace is None:
        raise ConfigError(f"{metric.value} needs an execution trace")
    total = 0
    sites = []
    for block in program.blocks():
        found = find_matches(block.instrs, pattern, mode, block.label, trace)
        for site in found:
            slice_ = block.instrs[site.start:site.start + site.length]
            w = _weight(metric, trace, slice_[0].address)
            total += w * (metric.of_slice(slice_) - metric.of_pattern(pattern))
        sites.extend(found)
    return total, sites


def select(cands, program, trace, cfg):
    """Top ``cfg.sel_count`` candidates with positive improvement.

    Returns ``[(pattern, improvement), ...]`` sorted by descending
    improvement, ties kept in candidate order.
    """
    scored = []
    for order, pattern in enumerate(cands):
        value, _ = score(program, pattern, cfg.metric, trace, cfg.liveness_mode)
        if value > 0:
            scored.append((-value, order, pattern))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [(p, -v) for v, _, p in scored[:cfg.sel_count]]

