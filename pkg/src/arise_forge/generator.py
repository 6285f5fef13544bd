"""Greedy MISO candidate generation from basic blocks.

Per block, a candidate starts empty and absorbs contiguous fusable
instructions that consume a value it already produced. It closes when the
32-bit encoding budget would overflow, at control flow or a non-fusable
instruction, or right after an instruction that overwrites one of its
external inputs. The closed sequence is generalized into a
:class:`CandidatePattern` with register slots and immediate fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import isa
from .errors import ConfigError

CAPACITY = 32
REG_FIELD_BITS = 5
BASE_OPCODE_BITS = 7

STRICT = "strict"
PAPER = "paper"
LIVENESS_MODES = (STRICT, PAPER)
GREEDY = "greedy"
SLIDING = "sliding"
START_MODES = (GREEDY, SLIDING)


@dataclass(frozen=True)
class GenConfig:
    opcode_bits: int = 9
    liveness_mode: str = STRICT
    min_ops: int = 2
    include_m_ext: bool = False
    start_mode: str = GREEDY

    def __post_init__(self):
        if not isinstance(self.opcode_bits, int) or self.opcode_bits < BASE_OPCODE_BITS:
            raise ConfigError(f"opcode_bits must be an integer >= {BASE_OPCODE_BITS}, got {self.opcode_bits!r}")
        if self.opcode_bits + REG_FIELD_BITS > CAPACITY:
            raise ConfigError(f"opcode_bits={self.opcode_bits} leaves no room for a destination register")
        if self.min_ops < 2:
            raise ConfigError("min_ops must be >= 2")
        if self.liveness_mode not in LIVENESS_MODES:
            raise ConfigError(f"liveness_mode must be one of {LIVENESS_MODES}")
        if self.start_mode not in START_MODES:
            raise ConfigError(f"start_mode must be one of {START_MODES}")


@dataclass(frozen=True)
class BitBudget:
    opcode_bits: int
    used_reg_slots: int
    used_imm_bits: int
    capacity: int = CAPACITY

    @property
    def used(self):
        return self.opcode_bits + REG_FIELD_BITS * self.used_reg_slots + self.used_imm_bits

    @property
    def padding(self):
        return self.capacity - self.used

    @property
    def ok(self):
        return self.used <= self.capacity


@dataclass(frozen=True)
class ImmField:
    width: int
    signed: bool
    cap: int

    def fits(self, value):
        if self.signed:
            return -(1 << (self.width - 1)) <= value < (1 << (self.width - 1))
        return 0 <= value < (1 << self.width)


@dataclass(frozen=True)
class PatternOp:
    """One constituent op.

    ``reads`` holds one source per register read by the op: ``("in", k)``
    for input slot k, or ``("tmp", j)`` for the value produced by op j.
    ``imms`` holds the immediate-field index of each immediate operand.
    """

    spec: isa.OpSpec
    reads: tuple
    imms: tuple

    @property
    def mnemonic(self):
        return self.spec.mnemonic


@dataclass(frozen=True)
class CandidatePattern:
    name: str
    ops: tuple
    n_inputs: int
    imm_fields: tuple
    budget: BitBudget
    fused_semantics: isa.SemExpr
    example: tuple = field(default=(), compare=False, repr=False)

    @property
    def reg_slots(self):
        return ("rd",) + tuple(f"rs{k + 1}" for k in range(self.n_inputs))

    @property
    def imm_names(self):
        return imm_field_names(len(self.imm_fields))

    @property
    def intermediates(self):
        """Indices of ops whose results stay inside the fused instruction."""
        return tuple(range(len(self.ops) - 1))

    @property
    def imm_widths(self):
        return tuple(f.width for f in self.imm_fields)

    @property
    def signature(self):
        """Assembly operand list, e.g. ``rd, rs1, rs2, imm[2:0]``."""
        parts = list(self.reg_slots)
        parts += [f"{n}[{f.width - 1}:0]" for n, f in zip(self.imm_names, self.imm_fields)]
        return ", ".join(parts)

    def structure_key(self):
        """Identity ignoring immediate widths."""
        return (
            tuple((op.mnemonic, op.reads, op.imms) for op in self.ops),
            self.n_inputs,
            tuple((f.signed, f.cap) for f in self.imm_fields),
        )

    def sort_key(self):
        return (-len(self.ops), self.name, -sum(self.imm_widths), repr(self.structure_key()), self.imm_widths)


def imm_field_names(n):
    return ("imm",) if n == 1 else tuple(f"imm{i}" for i in range(n))


def min_imm_width(value, signed):
    if signed:
        w = 1
        while not -(1 << (w - 1)) <= value < (1 << (w - 1)):
            w += 1
        return w
    if value < 0:
        raise ValueError(f"negative value {value} for an unsigned field")
    return max(1, value.bit_length())


def fusable(ins, include_m_ext=False):
    return isa.is_fusable(ins.spec, include_m_ext) and ins.dest() != isa.ZERO


def live_after(following, reg):
    """True if ``reg`` is read in ``following`` before being redefined.

    Reaching the end of the block counts as dead.
    """
    for ins in following:
        if reg in ins.reads():
            return True
        if ins.dest() == reg:
            return False
    return False


def escaping_intermediates(seq, following):
    """Registers written by non-final ops of ``seq`` that are live afterwards."""
    rd = seq[-1].dest()
    regs = {ins.dest() for ins in seq[:-1]} - {rd}
    return sorted(r for r in regs if live_after(following, r))


# ---------------------------------------------------------------------------
# growth


def grow(block_instrs, start, cfg):
    """Length of the raw candidate grown from ``start`` (before liveness checks)."""
    defined = set()
    inputs = []
    widths = []
    n = 0
    for ins in block_instrs[start:]:
        if ins.is_control_flow or not fusable(ins, cfg.include_m_ext):
            break
        reads = ins.reads()
        if n and not any(r in defined for r in reads):
            break
        new_inputs = []
        for r in reads:
            if r not in defined and r not in inputs and r not in new_inputs:
                new_inputs.append(r)
        spec = ins.spec
        new_widths = [min_imm_width(v, spec.imm_signed) for v in ins.imms()]
        slots = 1 + len(inputs) + len(new_inputs)
        budget = BitBudget(cfg.opcode_bits, slots, sum(widths) + sum(new_widths))
        if not budget.ok:
            break
        overwrites_input = ins.dest() in inputs
        inputs.extend(new_inputs)
        widths.extend(new_widths)
        defined.add(ins.dest())
        n += 1
        if overwrites_input:
            break
    return n


def _close(block_instrs, start, n, cfg):
    """Apply the liveness rule; returns the accepted length (0 if none)."""
    if cfg.liveness_mode == PAPER:
        return n if n >= cfg.min_ops else 0
    for length in range(n, cfg.min_ops - 1, -1):
        seq = block_instrs[start:start + length]
        if not escaping_intermediates(seq, block_instrs[start + length:]):
            return length
    return 0


def candidates_in_block(block_instrs, cfg):
    """Raw (start, length) candidate extents for one block."""
    out = []
    s = 0
    while s < len(block_instrs):
        n = _close(block_instrs, s, grow(block_instrs, s, cfg), cfg)
        if n:
            out.append((s, n))
        if n and cfg.start_mode == GREEDY:
            s += n
        else:
            s += 1
    return out


def generate(program, cfg=None):
    """Deterministic, postprocessed candidate list for ``program``."""
    cfg = cfg or GenConfig()
    raw = []
    for block in program.blocks():
        for s, n in candidates_in_block(block.instrs, cfg):
            raw.append(generalize(block.instrs[s:s + n], cfg.opcode_bits))
    return postprocess(raw)


# ---------------------------------------------------------------------------
# generalization


def generalize(raw, opcode_bits=9, imm_widths=None):
    """Turn a concrete fused sequence into a CandidatePattern.

    Registers become slots in first-occurrence order (``rd`` for the final
    destination, ``rs1..`` for external inputs; ``zero`` is an ordinary
    input). Immediate fields start at their minimal width and absorb the
    leftover budget in order, up to each op's architectural cap. Passing
    ``imm_widths`` pins the widths instead.
    """
    raw = tuple(raw)
    inputs = []
    producer = {}
    ops = []
    fields = []
    for j, ins in enumerate(raw):
        spec = ins.spec
        reads = []
        for r in ins.reads():
            if r in producer:
                reads.append(("tmp", producer[r]))
            else:
                if r not in inputs:
                    inputs.append(r)
                reads.append(("in", inputs.index(r)))
        imms = []
        for v in ins.imms():
            imms.append(len(fields))
            fields.append(ImmField(min_imm_width(v, spec.imm_signed), spec.imm_signed, spec.imm_cap))
        producer[ins.dest()] = j
        ops.append(PatternOp(isa.canonical_op(spec), tuple(reads), tuple(imms)))

    fixed = REG_FIELD_BITS * (1 + len(inputs)) + opcode_bits
    if imm_widths is None:
        leftover = CAPACITY - fixed - sum(f.width for f in fields)
        widened = []
        for f in fields:
            extra = max(0, min(leftover, f.cap - f.width))
            leftover -= extra
            widened.append(ImmField(f.width + extra, f.signed, f.cap))
        fields = widened
    else:
        if len(imm_widths) != len(fields):
            raise ValueError("imm_widths does not match the immediate count")
        fields = [ImmField(w, f.signed, f.cap) for w, f in zip(imm_widths, fields)]

    budget = BitBudget(opcode_bits, 1 + len(inputs), sum(f.width for f in fields))
    if not budget.ok:
        raise ValueError(f"sequence does not fit in {CAPACITY} bits")
    name = "_".join(op.spec.base_mnemonic for op in ops)
    return CandidatePattern(
        name=name,
        ops=tuple(ops),
        n_inputs=len(inputs),
        imm_fields=tuple(fields),
        budget=budget,
        fused_semantics=fuse_semantics(ops, len(fields)),
        example=raw,
    )


def fuse_semantics(ops, n_imms):
    """Compose per-op templates into one expression over the pattern slots."""
    names = imm_field_names(n_imms)
    exprs = []
    for op in ops:
        def leaf(node, op=op):
            kind, k = node.slot
            if kind == "i":
                return isa.imm(names[op.imms[k]])
            src, idx = op.reads[k]
            return isa.read(f"rs{idx + 1}") if src == "in" else exprs[idx]
        exprs.append(op.spec.semantic_template.substitute(leaf))
    return exprs[-1]


# ---------------------------------------------------------------------------
# postprocessing


def _dominated(a, b):
    return a != b and all(x <= y for x, y in zip(a.imm_widths, b.imm_widths))


def postprocess(cands):
    """Drop duplicates and narrower-immediate variants; sort deterministically."""
    groups = {}
    for c in cands:
        groups.setdefault(c.structure_key(), []).append(c)
    out = []
    for group in groups.values():
        unique = []
        for c in group:
            if c not in unique:
                unique.append(c)
        out.extend(c for c in unique if not any(_dominated(c, o) for o in unique))
    return sorted(out, key=CandidatePattern.sort_key)
