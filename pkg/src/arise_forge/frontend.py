"""Disassembly and trace parsing.

Disassembly input is objdump-like text::

    000100e4 <main>:
       100e4:	00f40333          	add	t1,s0,a5
       100e8:	8d4d                	c.or	a0,a1

Trace input is either one hex PC per line, or ``<hex-pc>,<count>`` lines
(detected from the first non-empty line).
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

from . import isa
from .errors import ParseError

log = logging.getLogger(__name__)

_SYMBOL_RE = re.compile(r"^([0-9a-f]+) <([^>]+)>:$")
_INSTR_RE = re.compile(r"^\s*([0-9a-f]+):\s+([0-9a-f]{4}|[0-9a-f]{8})\s+(\S+)(\s+(.*))?$")
_ADDR_PREFIX_RE = re.compile(r"^\s*[0-9a-f]+:")
_NUM_RE = re.compile(r"^-?(0x[0-9a-fA-F]+|[0-9]+)$")
_MEM_RE = re.compile(r"^(-?(?:0x[0-9a-fA-F]+|[0-9]+))?\((\w+)\)$")
_TARGET_RE = re.compile(r"^(?:0x)?([0-9a-f]+)(?:\s+<([^>]*)>)?$")

UINT64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class Reg:
    index: int

    def __str__(self):
        return isa.reg_name(self.index)


@dataclass(frozen=True)
class Imm:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Mem:
    offset: int
    base: int

    def __str__(self):
        return f"{self.offset}({isa.reg_name(self.base)})"


@dataclass(frozen=True)
class Target:
    address: int
    label: str | None = None

    def __str__(self):
        if self.label is None:
            return f"0x{self.address:x}"
        return f"{self.address:x} <{self.label}>"


@dataclass(frozen=True)
class Sym:
    """Operand text the tool does not interpret (CSR names, FP registers, ...)."""

    text: str

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class StaticInstr:
    address: int
    byte_size: int
    mnemonic: str
    operands: tuple = ()
    encoding: str = ""
    raw_text: str = field(default="", compare=False, repr=False)
    line_no: int = field(default=0, compare=False, repr=False)

    # derived views are cached; instances are immutable

    @cached_property
    def spec(self):
        # a size mismatch means an alias we could not map; treat as unknown
        spec = isa.lookup_op(self.mnemonic)
        return spec if spec is not None and spec.byte_size == self.byte_size else None

    @cached_property
    def base_mnemonic(self):
        spec = self.spec
        return spec.base_mnemonic if spec else self.mnemonic

    @cached_property
    def is_control_flow(self):
        spec = self.spec
        return spec is not None and spec.control_flow

    def reads(self):
        """Registers read, in operand order (src-dest operands included)."""
        return self._reads

    def dest(self):
        """Register written, or ``None``."""
        return self._dest

    def imms(self):
        return self._imms

    @cached_property
    def _reads(self):
        spec = self.spec
        if spec is None or spec.operand_signature == (isa.ANY,):
            # unknown semantics: every register mentioned may be read
            out = []
            for op in self.operands:
                if isinstance(op, Reg):
                    out.append(op.index)
                elif isinstance(op, Mem):
                    out.append(op.base)
            return tuple(out)
        out = []
        for role, op in zip(self._roles(), self.operands):
            if role in (isa.SRC, isa.SRCDEST):
                out.append(op.index)
            elif role == isa.MEM:
                out.append(op.base)
        out.extend(spec.implicit_reads)
        return tuple(out)

    @cached_property
    def _dest(self):
        spec = self.spec
        if spec is None:
            return None
        for role, op in zip(self._roles(), self.operands):
            if role in (isa.DEST, isa.SRCDEST):
                return op.index
        if spec.implicit_writes:
            return spec.implicit_writes[0]
        if self.mnemonic == "jal" or (self.mnemonic == "jalr" and len(self.operands) == 1):
            return isa.RA
        return None

    @cached_property
    def _imms(self):
        return tuple(op.value for role, op in zip(self._roles(), self.operands) if role == isa.IMM)

    def targets(self):
        return [op.address for op in self.operands if isinstance(op, Target)]

    def _roles(self):
        spec = self.spec
        if spec is None:
            return ()
        for sig in spec.signatures:
            if len(sig) == len(self.operands):
                return sig
        return ()

    def render(self):
        ops = ",".join(str(o) for o in self.operands)
        text = f"{self.address:8x}:\t{self.encoding}\t{self.mnemonic}"
        return f"{text}\t{ops}" if ops else text


@dataclass
class BasicBlock:
    function: str
    index: int
    instrs: tuple

    @property
    def label(self):
        return f"{self.function}#{self.index}"

    def __len__(self):
        return len(self.instrs)


@dataclass
class Function:
    name: str
    address: int
    blocks: list

    def instructions(self):
        return [ins for b in self.blocks for ins in b.instrs]


@dataclass
class ProgramModel:
    functions: list
    warnings: Counter = field(default_factory=Counter, compare=False)

    def blocks(self):
        return [b for f in self.functions for b in f.blocks]

    def instructions(self):
        return [ins for f in self.functions for ins in f.instructions()]

    @property
    def addr_index(self):
        return {ins.address: ins for ins in self.instructions()}

    def __len__(self):
        return sum(len(b) for b in self.blocks())


@dataclass
class TraceProfile:
    counts: dict
    total_executed: int
    unmatched: int = 0

    def count(self, address):
        return self.counts.get(address, 0)

    def is_block_uniform(self, program):
        """True when every instruction of each block has the same count."""
        for block in program.blocks():
            seen = {self.count(ins.address) for ins in block.instrs}
            if len(seen) > 1:
                return False
        return True


# ---------------------------------------------------------------------------
# operand parsing


def _parse_int(text):
    if not _NUM_RE.match(text):
        raise ValueError(text)
    return int(text, 0) if text.lstrip("-").startswith("0x") else int(text, 10)


def _parse_reg(text):
    idx = isa.reg_index(text)
    if idx is None:
        raise ValueError(text)
    return Reg(idx)


def _parse_operand(role, text):
    if role in (isa.DEST, isa.SRC, isa.SRCDEST):
        return _parse_reg(text)
    if role == isa.IMM:
        return Imm(_parse_int(text))
    if role == isa.MEM:
        m = _MEM_RE.match(text)
        if not m:
            raise ValueError(text)
        base = _parse_reg(m.group(2)).index
        return Mem(_parse_int(m.group(1)) if m.group(1) else 0, base)
    if role == isa.TARGET:
        m = _TARGET_RE.match(text)
        if not m:
            raise ValueError(text)
        return Target(int(m.group(1), 16), m.group(2))
    raise ValueError(role)


def _parse_lenient(text):
    if isa.reg_index(text) is not None:
        return Reg(isa.reg_index(text))
    if _NUM_RE.match(text):
        return Imm(_parse_int(text))
    m = _MEM_RE.match(text)
    if m and isa.reg_index(m.group(2)) is not None:
        return Mem(_parse_int(m.group(1)) if m.group(1) else 0, isa.reg_index(m.group(2)))
    return Sym(text)


def _split_operands(text):
    if text is None:
        return []
    text = text.split("#", 1)[0].strip()
    if not text:
        return []
    return [t.strip() for t in text.split(",")]


def _bind(spec, tokens):
    """Parse ``tokens`` against the first signature of ``spec`` that fits."""
    if spec.operand_signature == (isa.ANY,):
        return tuple(_parse_lenient(t) for t in tokens)
    for sig in spec.signatures:
        if len(sig) != len(tokens):
            continue
        try:
            return tuple(_parse_operand(role, t) for role, t in zip(sig, tokens))
        except ValueError:
            continue
    return None


def _check_operands(spec, operands):
    """Range and register-class checks; returns an error message or None."""
    for op in operands:
        if spec.rvc_regs and isinstance(op, Reg) and not isa.is_rvc_reg(op.index):
            return f"{spec.mnemonic} cannot address {op}"
        if spec.rvc_regs and isinstance(op, Mem) and not isa.is_rvc_reg(op.base):
            return f"{spec.mnemonic} cannot address {isa.reg_name(op.base)}"
        if spec.fusable and isinstance(op, Imm):
            if not imm_fits(op.value, spec.imm_cap, spec.imm_signed):
                return f"immediate {op.value} out of range for {spec.mnemonic}"
    return None


def imm_fits(value, width, signed):
    if signed:
        return -(1 << (width - 1)) <= value < (1 << (width - 1))
    return 0 <= value < (1 << width)


def _compressed_alias(mnemonic, operands):
    """Map an alias-printed 2-byte instruction to its ``c.`` form.

    GNU objdump prints RVC encodings with their expanded names by default
    (``8d4d  or a0,a0,a1``). Returns (mnemonic, operands) or None.
    """
    regs = [o.index if isinstance(o, Reg) else None for o in operands]
    if mnemonic == "addi" and len(operands) == 3 and None not in regs[:2]:
        if regs[0] == regs[1] == isa.SP:
            return "c.addi16sp", (operands[0], operands[2])
        if regs[1] == isa.SP and regs[0] != isa.SP:
            return "c.addi4spn", operands
    if mnemonic in ("lw", "sw") and len(operands) == 2 and isinstance(operands[1], Mem):
        sp = operands[1].base == isa.SP
        return ("c." + mnemonic + ("sp" if sp else "")), operands
    if mnemonic == "ret":
        return "c.jr", (Reg(isa.RA),)
    if mnemonic == "jal" and len(operands) == 2 and regs[0] == isa.RA:
        return "c.jal", (operands[1],)
    if mnemonic == "jal" and len(operands) == 1:
        return "c.jal", operands
    if mnemonic == "jalr" and len(operands) == 1:
        return "c.jalr", operands
    if mnemonic == "add" and len(operands) == 3 and regs[1] == isa.ZERO:
        return "c.mv", (operands[0], operands[2])
    cname = "c." + mnemonic
    cspec = isa.lookup_op(cname)
    if cspec is None:
        return None
    if cspec.operand_signature and cspec.operand_signature[0] == isa.SRCDEST:
        if len(operands) == len(cspec.operand_signature) + 1 and regs[0] is not None and regs[0] == regs[1]:
            return cname, (operands[0],) + tuple(operands[2:])
    if len(operands) == len(cspec.operand_signature):
        return cname, operands
    return None


# ---------------------------------------------------------------------------
# disassembly


def _is_ignorable(line):
    s = line.strip()
    return (
        not s
        or s.startswith("Disassembly of section")
        or "file format" in s
        or s == "..."
        or s.startswith("#")
    )


def parse_instruction(line, line_no=0, warnings=None):
    """Parse one instruction line into a StaticInstr."""
    m = _INSTR_RE.match(line.rstrip())
    if not m:
        raise ParseError(f"malformed instruction line: {line.strip()!r}", line_no)
    address = int(m.group(1), 16)
    encoding = m.group(2)
    size = len(encoding) // 2
    mnemonic = m.group(3)
    tokens = _split_operands(m.group(5))
    warnings = warnings if warnings is not None else Counter()

    spec = isa.lookup_op(mnemonic)
    if spec is not None and spec.byte_size == 4 and size == 2:
        plain = _bind(spec, tokens)
        alias = _compressed_alias(mnemonic, plain) if plain is not None else None
        if alias is None:
            warnings["unmapped_compressed_alias"] += 1
            log.warning("line %d: no compressed form for 2-byte %r; treating as unknown", line_no, mnemonic)
            spec = None
        else:
            mnemonic, _ = alias
            spec = isa.lookup_op(mnemonic)
            operands = alias[1]
            err = _check_operands(spec, operands)
            if err:
                raise ParseError(err, line_no)
            return StaticInstr(address, size, mnemonic, tuple(operands), encoding, line, line_no)
    elif spec is not None and spec.byte_size != size:
        raise ParseError(f"{mnemonic} is {spec.byte_size} bytes but encoding {encoding!r} is {size}", line_no)

    if spec is None:
        if mnemonic.startswith("c.") and size != 2:
            raise ParseError(f"compressed mnemonic {mnemonic} with 4-byte encoding", line_no)
        warnings["unknown_mnemonic"] += 1
        operands = tuple(_parse_lenient(t) for t in tokens)
        return StaticInstr(address, size, mnemonic, operands, encoding, line, line_no)

    operands = _bind(spec, tokens)
    if operands is None:
        raise ParseError(f"bad operands for {mnemonic}: {', '.join(tokens)!r}", line_no)
    err = _check_operands(spec, operands)
    if err:
        raise ParseError(err, line_no)
    return StaticInstr(address, size, mnemonic, operands, encoding, line, line_no)


def split_blocks(name, instrs, targets):
    """Cut a function's instruction list into basic blocks.

    A block ends after every control-flow instruction and before every
    address in ``targets``.
    """
    blocks, cur = [], []
    for ins in instrs:
        if cur and ins.address in targets:
            blocks.append(cur)
            cur = []
        cur.append(ins)
        if ins.is_control_flow:
            blocks.append(cur)
            cur = []
    if cur:
        blocks.append(cur)
    return [BasicBlock(name, i, tuple(b)) for i, b in enumerate(blocks)]


def parse_disassembly(text):
    """Parse objdump-style text into a ProgramModel."""
    warnings = Counter()
    raw_funcs = []  # (name, address, [instrs])
    last_addr = -1
    for line_no, line in enumerate(text.splitlines(), 1):
        if _is_ignorable(line):
            continue
        sm = _SYMBOL_RE.match(line.strip())
        if sm:
            raw_funcs.append((sm.group(2), int(sm.group(1), 16), []))
            continue
        if not _ADDR_PREFIX_RE.match(line):
            raise ParseError(f"unrecognized line: {line.strip()!r}", line_no)
        ins = parse_instruction(line, line_no, warnings)
        if ins.address <= last_addr:
            raise ParseError(f"address {ins.address:x} does not increase", line_no)
        last_addr = ins.address
        if not raw_funcs:
            raw_funcs.append(("", ins.address, []))
        raw_funcs[-1][2].append(ins)

    targets = set()
    for _, _, instrs in raw_funcs:
        for ins in instrs:
            if ins.is_control_flow:
                targets.update(ins.targets())
    functions = [Function(name, addr, split_blocks(name, instrs, targets)) for name, addr, instrs in raw_funcs]
    if warnings:
        log.info("disassembly warnings: %s", dict(warnings))
    return ProgramModel(functions, warnings)


def resplit(program):
    """Re-run block splitting over an existing model (idempotence check)."""
    targets = {t for ins in program.instructions() if ins.is_control_flow for t in ins.targets()}
    funcs = [Function(f.name, f.address, split_blocks(f.name, f.instructions(), targets)) for f in program.functions]
    return ProgramModel(funcs, Counter(program.warnings))


def format_program(program):
    """Canonical disassembly text; ``parse_disassembly`` reads it back unchanged."""
    out = []
    for f in program.functions:
        if out:
            out.append("")
        if f.name:
            out.append(f"{f.address:08x} <{f.name}>:")
        out.extend(ins.render() for ins in f.instructions())
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# trace


def _parse_pc(token, line_no):
    t = token.strip()
    if t.startswith(("0x", "0X")):
        t = t[2:]
    if not t or any(c not in "0123456789abcdefABCDEF" for c in t):
        raise ParseError(f"not a hex address: {token.strip()!r}", line_no)
    return int(t, 16)


def parse_trace(text, program):
    """Aggregate a raw or ``pc,count`` trace against ``program``."""
    known = program.addr_index
    counts = {}
    unmatched = 0
    total = 0
    aggregated = None
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if aggregated is None:
            aggregated = "," in line
        if aggregated:
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"expected '<pc>,<count>': {line.strip()!r}", line_no)
            pc = _parse_pc(parts[0], line_no)
            c = parts[1].strip()
            if not c.isdigit():
                raise ParseError(f"bad count {c!r}", line_no)
            n = int(c)
        else:
            if "," in line:
                raise ParseError("aggregated entry in a raw trace", line_no)
            pc = _parse_pc(line, line_no)
            n = 1
        total += n
        if n > UINT64_MAX or total > UINT64_MAX:
            raise ParseError("execution count overflow", line_no)
        if pc in known:
            counts[pc] = counts.get(pc, 0) + n
        else:
            unmatched += n
    if unmatched:
        log.warning("%d trace entries do not match any parsed instruction", unmatched)
    return TraceProfile(counts, total, unmatched)


def format_trace(trace):
    """Aggregated-form text for ``trace`` (matched addresses only)."""
    return "".join(f"{pc:x},{n}\n" for pc, n in sorted(trace.counts.items()))
