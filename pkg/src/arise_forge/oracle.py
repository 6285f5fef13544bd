"""Ground truth for selector numbers.

``rewrite`` replaces matched slices with synthetic 4-byte instructions,
``recount`` measures the result from scratch, and ``check_equivalence``
interprets the constituent instructions one by one and compares against the
fused semantics. The interpreter below is written directly against RV32
behavior and shares nothing with :mod:`arise_forge.isa` templates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import isa
from .frontend import Imm, Reg, StaticInstr
from .generator import STRICT
from .selector import PATTERN_BYTES, match_pattern

M32 = 0xFFFFFFFF


# ---------------------------------------------------------------------------
# reference interpreter


def _s(v):
    return v - (1 << 32) if v & 0x80000000 else v


def _div(a, b):
    if b == 0:
        return M32
    if a == 0x80000000 and b == M32:
        return a
    q = abs(_s(a)) // abs(_s(b))
    return (q if (_s(a) < 0) == (_s(b) < 0) else -q) & M32


def _rem(a, b):
    if b == 0:
        return a
    if a == 0x80000000 and b == M32:
        return 0
    r = abs(_s(a)) % abs(_s(b))
    return (-r if _s(a) < 0 else r) & M32


REG_REG = {
    "add": lambda a, b: (a + b) & M32,
    "sub": lambda a, b: (a - b) & M32,
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "xor": lambda a, b: a ^ b,
    "slt": lambda a, b: 1 if _s(a) < _s(b) else 0,
    "sltu": lambda a, b: 1 if a < b else 0,
    "sll": lambda a, b: (a << (b & 0x1F)) & M32,
    "srl": lambda a, b: a >> (b & 0x1F),
    "sra": lambda a, b: (_s(a) >> (b & 0x1F)) & M32,
    "mul": lambda a, b: (a * b) & M32,
    "mulh": lambda a, b: ((_s(a) * _s(b)) >> 32) & M32,
    "mulhsu": lambda a, b: ((_s(a) * b) >> 32) & M32,
    "mulhu": lambda a, b: ((a * b) >> 32) & M32,
    "div": _div,
    "divu": lambda a, b: M32 if b == 0 else a // b,
    "rem": _rem,
    "remu": lambda a, b: a if b == 0 else a % b,
}
REG_IMM = {
    "addi": "add", "andi": "and", "ori": "or", "xori": "xor", "slti": "slt",
    "sltiu": "sltu", "slli": "sll", "srli": "srl", "srai": "sra",
}
REG_ONLY = {
    "mv": lambda a: a,
    "not": lambda a: ~a & M32,
    "neg": lambda a: -a & M32,
    "seqz": lambda a: 1 if a == 0 else 0,
    "snez": lambda a: 1 if a != 0 else 0,
    "sltz": lambda a: 1 if _s(a) < 0 else 0,
    "sgtz": lambda a: 1 if _s(a) > 0 else 0,
}


class MachineState:
    """32 integer registers; x0 reads as zero and ignores writes."""

    def __init__(self, values=None):
        self.x = [0] * 32
        if values is not None:
            for i, v in enumerate(values):
                self[i] = v

    def __getitem__(self, i):
        return self.x[i]

    def __setitem__(self, i, value):
        if i != 0:
            self.x[i] = value & M32

    def copy(self):
        return MachineState(self.x)


def execute(state, mnemonic, operands):
    """Run one ALU instruction on ``state``. Operands are Reg/Imm objects."""
    run(state, mnemonic, [o.index if isinstance(o, Reg) else o.value for o in operands])


def run(state, m, ops):
    """Like :func:`execute` with operands already reduced to integers."""
    if m.startswith("c."):
        base = m[2:]
        if base in ("add", "sub", "and", "or", "xor"):
            rd, rs2 = ops
            state[rd] = REG_REG[base](state[rd], state[rs2])
        elif base in ("addi", "andi", "slli", "srli", "srai"):
            rd, value = ops
            state[rd] = REG_REG[REG_IMM[base]](state[rd], value & M32)
        elif base == "mv":
            state[ops[0]] = state[ops[1]]
        elif base == "li":
            state[ops[0]] = ops[1]
        elif base == "lui":
            state[ops[0]] = ops[1] << 12
        else:
            raise ValueError(f"cannot interpret {m}")
    elif m in REG_REG:
        rd, rs1, rs2 = ops
        state[rd] = REG_REG[m](state[rs1], state[rs2])
    elif m in REG_IMM:
        rd, rs1, value = ops
        state[rd] = REG_REG[REG_IMM[m]](state[rs1], value & M32)
    elif m in REG_ONLY:
        state[ops[0]] = REG_ONLY[m](state[ops[1]])
    elif m == "li":
        state[ops[0]] = ops[1]
    elif m == "lui":
        state[ops[0]] = ops[1] << 12
    else:
        raise ValueError(f"cannot interpret {m}")


# ---------------------------------------------------------------------------
# rewriting


@dataclass(frozen=True)
class FusedInstr:
    pattern: object
    site: object
    address: int
    byte_size: int = PATTERN_BYTES


@dataclass
class RewrittenBlock:
    label: str
    items: list


@dataclass
class RewrittenProgram:
    blocks: list
    log: list = field(default_factory=list)

    def items(self):
        return [it for b in self.blocks for it in b.items]


def _patterns(selected):
    return [s[0] if isinstance(s, tuple) else s for s in selected]


def rewrite(program, selected, mode=STRICT):
    """Replace matched slices, patterns claiming in rank order then left to right."""
    patterns = _patterns(selected)
    blocks = []
    log = []
    for block in program.blocks():
        instrs = block.instrs
        claimed = [None] * len(instrs)
        for pattern in patterns:
            n = len(pattern.ops)
            i = 0
            while i + n <= len(instrs):
                if any(c is not None for c in claimed[i:i + n]):
                    i += 1
                    continue
                site = match_pattern(instrs[i:i + n], pattern, mode, instrs[i + n:], block.label, i)
                if site is None:
                    i += 1
                    continue
                for k in range(i, i + n):
                    claimed[k] = (pattern, site)
                log.append((pattern.name, site))
                i += n
        items = []
        i = 0
        while i < len(instrs):
            if claimed[i] is None:
                items.append(instrs[i])
                i += 1
            else:
                pattern, site = claimed[i]
                items.append(FusedInstr(pattern, site, instrs[i].address))
                i += site.length
        blocks.append(RewrittenBlock(block.label, items))
    return RewrittenProgram(blocks, log)


# ---------------------------------------------------------------------------
# recounting


def _pct(saved, baseline):
    if saved is None or baseline is None:
        return None
    return 100.0 * saved / baseline if baseline else 0.0


@dataclass(frozen=True)
class Recount:
    static_saved: int
    dynamic_size_saved: int | None
    dynamic_count_saved: int | None
    baseline_static: int
    baseline_dynamic_size: int | None
    baseline_dynamic_count: int | None

    @property
    def static_pct(self):
        return _pct(self.static_saved, self.baseline_static)

    @property
    def dynamic_size_pct(self):
        return _pct(self.dynamic_size_saved, self.baseline_dynamic_size)

    @property
    def dynamic_count_pct(self):
        return _pct(self.dynamic_count_saved, self.baseline_dynamic_count)

    def saved(self, metric):
        return {
            "static-size": self.static_saved,
            "dynamic-size": self.dynamic_size_saved,
            "dynamic-count": self.dynamic_count_saved,
        }[str(getattr(metric, "value", metric))]


def recount(original, rewritten, trace=None):
    """Static bytes, dynamic bytes and dynamic instructions saved by a rewrite."""
    base_static = sum(ins.byte_size for ins in original.instructions())
    new_static = sum(it.byte_size for it in rewritten.items())
    if trace is None:
        return Recount(base_static - new_static, None, None, base_static, None, None)
    base_dsize = sum(trace.count(ins.address) * ins.byte_size for ins in original.instructions())
    base_dcount = sum(trace.count(ins.address) for ins in original.instructions())
    new_dsize = sum(trace.count(it.address) * it.byte_size for it in rewritten.items())
    new_dcount = sum(trace.count(it.address) for it in rewritten.items())
    return Recount(
        base_static - new_static,
        base_dsize - new_dsize,
        base_dcount - new_dcount,
        base_static,
        base_dsize,
        base_dcount,
    )


# ---------------------------------------------------------------------------
# equivalence


@dataclass
class EquivalenceResult:
    passed: bool
    trials: int
    counterexample: dict | None = None

    def __bool__(self):
        return self.passed


def canonical_example(pattern, bindings=None):
    """Concrete instructions instantiating ``pattern``.

    ``bindings`` maps slot names (``rd``, ``rs1``, ...) to register indices.
    Intermediates get fresh registers distinct from every bound slot.
    """
    bindings = dict(bindings or {})
    bindings.setdefault("rd", 5)
    for k in range(pattern.n_inputs):
        bindings.setdefault(f"rs{k + 1}", 10 + k)
    used = set(bindings.values()) | {0}
    free = [r for r in range(1, 32) if r not in used]
    tmp_regs = free[:len(pattern.ops) - 1]
    if len(tmp_regs) < len(pattern.ops) - 1:
        raise ValueError("pattern needs more registers than available")
    out = []
    for j, op in enumerate(pattern.ops):
        regs = [bindings[f"rs{k + 1}"] if src == "in" else tmp_regs[k] for src, k in op.reads]
        dest = bindings["rd"] if j == len(pattern.ops) - 1 else tmp_regs[j]
        imms = [0] * len(op.imms)
        operands = []
        ri = ii = 0
        for role in op.spec.operand_signature:
            if role == isa.DEST:
                operands.append(Reg(dest))
            elif role in (isa.SRC, isa.SRCDEST):
                operands.append(Reg(regs[ri]))
                ri += 1
            else:
                operands.append(Imm(imms[ii]))
                ii += 1
        out.append(StaticInstr(0, 4, op.spec.mnemonic, tuple(operands), "00000000"))
    return tuple(out)


def _random_imm(rng, f):
    if f.signed:
        return rng.randrange(-(1 << (f.width - 1)), 1 << (f.width - 1))
    return rng.randrange(0, 1 << f.width)


def _compile_example(example, pattern):
    """Per-instruction (mnemonic, operand builder) pairs for fast replay."""
    steps = []
    for ins, op in zip(example, pattern.ops):
        layout = []
        k = 0
        for o in ins.operands:
            if isinstance(o, Imm):
                layout.append((True, op.imms[k]))
                k += 1
            else:
                layout.append((False, o.index))
        steps.append((ins.mnemonic, tuple(layout)))
    return steps


def check_equivalence(pattern, trials=1000, seed=0, example=None, semantics=None):
    """Compare sequential interpretation with the fused semantics.

    Uses ``random.Random(seed)`` (Mersenne Twister, platform independent),
    so a failing trial reproduces exactly. Every register touched by the
    example gets a fresh random value per trial; the first failing trial is
    reported with those registers, the immediates, expected and actual value.
    """
    example = tuple(example or pattern.example or canonical_example(pattern))
    fused = isa.compile_sem(semantics or pattern.fused_semantics)
    rd = example[-1].dest()
    input_regs = {}
    touched = set()
    for ins, op in zip(example, pattern.ops):
        touched.update(ins.reads())
        touched.add(ins.dest())
        for r, (src, k) in zip(ins.reads(), op.reads):
            if src == "in":
                input_regs.setdefault(k, r)
    touched = sorted(touched - {isa.ZERO})
    steps = _compile_example(example, pattern)
    slot_regs = [(f"rs{k + 1}", r) for k, r in sorted(input_regs.items())]
    rng = random.Random(seed)
    names = pattern.imm_names
    for t in range(trials):
        state = MachineState()
        for r in touched:
            state.x[r] = rng.getrandbits(32)
        imm_values = [_random_imm(rng, f) for f in pattern.imm_fields]
        slots = {name: state.x[r] for name, r in slot_regs}
        slots.update(zip(names, imm_values))
        before = {f"x{r}": state.x[r] for r in touched}
        for mnemonic, layout in steps:
            run(state, mnemonic, [imm_values[v] if is_imm else v for is_imm, v in layout])
        expected = state[rd]
        got = fused(slots)
        if got != expected:
            return EquivalenceResult(False, t + 1, {
                "trial": t,
                "state": before,
                "imms": dict(zip(names, imm_values)),
                "expected": expected,
                "got": got,
            })
    return EquivalenceResult(True, trials)
