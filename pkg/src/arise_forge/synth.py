"""Seeded synthetic programs and traces.

Programs are emitted as objdump-style text with real RV32IC encodings, so
they go through the same parser as real dumps. Traces are block-uniform:
every instruction of a basic block gets the block's execution count.
"""

from __future__ import annotations

import random

from . import isa
from .frontend import parse_disassembly

_F3 = {"add": 0, "sub": 0, "sll": 1, "slt": 2, "sltu": 3, "xor": 4, "srl": 5, "sra": 5, "or": 6, "and": 7}
_F3_IMM = {"addi": 0, "slli": 1, "slti": 2, "sltiu": 3, "xori": 4, "srli": 5, "srai": 5, "ori": 6, "andi": 7}
_F3_BR = {"beq": 0, "bne": 1, "blt": 4, "bge": 5, "bltu": 6, "bgeu": 7}
_CA_F2 = {"c.sub": 0, "c.xor": 1, "c.or": 2, "c.and": 3}

POOL = [5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]  # t0-t2, s0-s1, a0-a5
RVC_POOL = [r for r in POOL if isa.is_rvc_reg(r)]


def _bits(v, hi, lo):
    return (v >> lo) & ((1 << (hi - lo + 1)) - 1)


def encode(mnemonic, rd=0, rs1=0, rs2=0, imm=0):
    """Machine word for the subset of RV32IC this module emits."""
    m = mnemonic
    if m in _F3:
        f7 = 0x20 if m in ("sub", "sra") else 0
        return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (_F3[m] << 12) | (rd << 7) | 0x33
    if m in _F3_IMM:
        if m in ("slli", "srli", "srai"):
            imm = (imm & 0x1F) | (0x400 if m == "srai" else 0)
        return ((imm & 0xFFF) << 20) | (rs1 << 15) | (_F3_IMM[m] << 12) | (rd << 7) | 0x13
    if m == "lui":
        return ((imm & 0xFFFFF) << 12) | (rd << 7) | 0x37
    if m == "lw":
        return ((imm & 0xFFF) << 20) | (rs1 << 15) | (2 << 12) | (rd << 7) | 0x03
    if m == "sw":
        return (_bits(imm, 11, 5) << 25) | (rs2 << 20) | (rs1 << 15) | (2 << 12) | (_bits(imm, 4, 0) << 7) | 0x23
    if m in _F3_BR:
        return ((_bits(imm, 12, 12) << 31) | (_bits(imm, 10, 5) << 25) | (rs2 << 20) | (rs1 << 15)
                | (_F3_BR[m] << 12) | (_bits(imm, 4, 1) << 8) | (_bits(imm, 11, 11) << 7) | 0x63)
    if m == "jal":
        return ((_bits(imm, 20, 20) << 31) | (_bits(imm, 10, 1) << 21) | (_bits(imm, 11, 11) << 20)
                | (_bits(imm, 19, 12) << 12) | (rd << 7) | 0x6F)
    if m == "ret":
        return 0x00008067
    if m == "fadd.s":
        return (rs2 << 20) | (rs1 << 15) | (7 << 12) | (rd << 7) | 0x53
    if m == "c.add":
        return (0b1001 << 12) | (rd << 7) | (rs2 << 2) | 0b10
    if m == "c.mv":
        return (0b1000 << 12) | (rd << 7) | (rs2 << 2) | 0b10
    if m in ("c.li", "c.addi"):
        f3 = 0b010 if m == "c.li" else 0b000
        return (f3 << 13) | (_bits(imm, 5, 5) << 12) | (rd << 7) | (_bits(imm, 4, 0) << 2) | 0b01
    if m == "c.slli":
        return (_bits(imm, 5, 5) << 12) | (rd << 7) | (_bits(imm, 4, 0) << 2) | 0b10
    if m in ("c.srli", "c.srai", "c.andi"):
        f2 = {"c.srli": 0, "c.srai": 1, "c.andi": 2}[m]
        return ((0b100 << 13) | (_bits(imm, 5, 5) << 12) | (f2 << 10) | ((rd - 8) << 7)
                | (_bits(imm, 4, 0) << 2) | 0b01)
    if m in _CA_F2:
        return (0b100011 << 10) | ((rd - 8) << 7) | (_CA_F2[m] << 5) | ((rs2 - 8) << 2) | 0b01
    raise ValueError(f"cannot encode {m}")


class _Instr:
    def __init__(self, mnemonic, size, text, fields, target=None):
        self.mnemonic = mnemonic
        self.size = size
        self.text = text
        self.fields = fields
        self.target = target  # (function index, block index) for branches
        self.address = 0


def _r(i):
    return isa.reg_name(i)


class _Gen:
    def __init__(self, rng, alias_style):
        self.rng = rng
        self.alias = alias_style
        self.recent = []

    def src(self):
        rng = self.rng
        if self.recent and rng.random() < 0.75:
            return rng.choice(self.recent[-3:])
        if rng.random() < 0.05:
            return 0
        return rng.choice(POOL)

    def dest(self, rvc=False):
        rng = self.rng
        pool = RVC_POOL if rvc else POOL
        if self.recent and rng.random() < 0.3 and self.recent[-1] in pool:
            return self.recent[-1]
        return rng.choice(pool)

    def imm(self, kind):
        rng = self.rng
        if kind == "shift":
            return rng.randrange(1, 32)
        if kind == "c6":
            return rng.randrange(-32, 32)
        roll = rng.random()
        if roll < 0.6:
            return rng.randrange(-8, 16)
        if roll < 0.9:
            return rng.randrange(-128, 256)
        return rng.randrange(-2048, 2048)

    def wrote(self, rd):
        if rd:
            self.recent.append(rd)
            del self.recent[:-6]

    def alu(self):
        rng = self.rng
        roll = rng.random()
        if roll < 0.35:
            m = rng.choice(["add", "sub", "and", "or", "xor", "slt", "sltu", "sll", "srl", "sra"])
            rd, a, b = self.dest(), self.src(), self.src()
            ins = _Instr(m, 4, f"{m}\t{_r(rd)},{_r(a)},{_r(b)}", dict(rd=rd, rs1=a, rs2=b))
        elif roll < 0.62:
            m = rng.choice(["addi", "andi", "ori", "xori", "slti", "sltiu", "slli", "srli", "srai"])
            rd, a = self.dest(), self.src()
            v = self.imm("shift" if m in ("slli", "srli", "srai") else "i")
            shown = f"0x{v:x}" if m in ("slli", "srli", "srai") else str(v)
            ins = _Instr(m, 4, f"{m}\t{_r(rd)},{_r(a)},{shown}", dict(rd=rd, rs1=a, imm=v))
        elif roll < 0.66:
            rd, v = self.dest(), rng.randrange(0, 1 << 20)
            ins = _Instr("lui", 4, f"lui\t{_r(rd)},0x{v:x}", dict(rd=rd, imm=v))
        else:
            ins = self.compressed()
        self.wrote(ins.fields.get("rd"))
        return ins

    def compressed(self):
        rng = self.rng
        m = rng.choice(["c.add", "c.mv", "c.li", "c.addi", "c.slli", "c.srli", "c.srai",
                        "c.andi", "c.sub", "c.xor", "c.or", "c.and"])
        rvc = m in ("c.srli", "c.srai", "c.andi") or m in _CA_F2
        rd = self.dest(rvc=rvc)
        if m in ("c.add", "c.mv") or m in _CA_F2:
            rs2 = self.src()
            if m in _CA_F2 and not isa.is_rvc_reg(rs2):
                rs2 = rng.choice(RVC_POOL)
            if rs2 == 0:
                rs2 = rng.choice(POOL)
            fields = dict(rd=rd, rs2=rs2)
            plain = {"c.add": "add", "c.mv": "mv"}.get(m, m[2:])
            if self.alias:
                text = f"{plain}\t{_r(rd)},{_r(rs2)}" if m == "c.mv" else f"{plain}\t{_r(rd)},{_r(rd)},{_r(rs2)}"
            else:
                text = f"{m}\t{_r(rd)},{_r(rs2)}"
            return _Instr(m, 2, text, fields)
        if m in ("c.slli", "c.srli", "c.srai"):
            v = rng.randrange(1, 32)
            shown = f"0x{v:x}"
        else:
            v = self.imm("c6")
            if m == "c.addi" and v == 0:
                v = 1
            shown = str(v)
        fields = dict(rd=rd, imm=v)
        if self.alias:
            plain = m[2:]
            text = f"{plain}\t{_r(rd)},{shown}" if m == "c.li" else f"{plain}\t{_r(rd)},{_r(rd)},{shown}"
        else:
            text = f"{m}\t{_r(rd)},{shown}"
        return _Instr(m, 2, text, fields)

    def memory(self):
        rng = self.rng
        off = 4 * rng.randrange(0, 32)
        if rng.random() < 0.5:
            rd = self.dest()
            self.wrote(rd)
            return _Instr("lw", 4, f"lw\t{_r(rd)},{off}(sp)", dict(rd=rd, rs1=isa.SP, imm=off))
        rs = self.src() or 10
        return _Instr("sw", 4, f"sw\t{_r(rs)},{off}(sp)", dict(rs1=isa.SP, rs2=rs, imm=off))


def random_program(seed, n_instrs=120, n_funcs=None, alias_style=None):
    """Objdump-style text of a random RV32IC program with about ``n_instrs`` instructions."""
    rng = random.Random(seed)
    if n_funcs is None:
        n_funcs = rng.randint(1, max(1, n_instrs // 60))
    if alias_style is None:
        alias_style = rng.random() < 0.5
    gen = _Gen(rng, alias_style)
    per_func = [n_instrs // n_funcs + (1 if i < n_instrs % n_funcs else 0) for i in range(n_funcs)]

    funcs = []  # list of (name, [blocks]) where block = [_Instr]
    for fi, budget in enumerate(per_func):
        blocks = []
        remaining = budget
        while remaining > 0:
            length = min(remaining, rng.randint(3, 18))
            blocks.append(length)
            remaining -= length
        fblocks = []
        for bi, length in enumerate(blocks):
            body = []
            last = bi == len(blocks) - 1
            n_body = length - 1
            for _ in range(n_body):
                roll = rng.random()
                if roll < 0.85:
                    body.append(gen.alu())
                elif roll < 0.97:
                    body.append(gen.memory())
                else:
                    rd, a, b = rng.randrange(8), rng.randrange(8), rng.randrange(8)
                    body.append(_Instr("fadd.s", 4, f"fadd.s\tfa{rd},fa{a},fa{b}", dict(rd=rd, rs1=a, rs2=b)))
            if last:
                body.append(_Instr("ret", 4, "ret", {}))
            elif rng.random() < 0.7:
                m = rng.choice(sorted(_F3_BR))
                a, b = gen.src(), gen.src()
                tgt = (fi, rng.randrange(len(blocks)))
                body.append(_Instr(m, 4, m + "\t{a},{b},{target}", dict(rs1=a, rs2=b, a=_r(a), b=_r(b)), tgt))
            else:
                body.append(gen.alu())
            gen.recent.clear()
            fblocks.append(body)
        funcs.append((f"fn{fi}", fblocks))

    addr = 0x10074
    starts = {}
    for fi, (_, fblocks) in enumerate(funcs):
        for bi, body in enumerate(fblocks):
            starts[(fi, bi)] = addr
            for ins in body:
                ins.address = addr
                addr += ins.size

    lines = ["", "synthetic.elf:     file format elf32-littleriscv", "", "",
             "Disassembly of section .text:", ""]
    for fi, (name, fblocks) in enumerate(funcs):
        lines.append(f"{starts[(fi, 0)]:08x} <{name}>:")
        for body in fblocks:
            for ins in body:
                text = ins.text
                fields = dict(ins.fields)
                if ins.target is not None:
                    t = starts[ins.target]
                    fields["imm"] = t - ins.address
                    off = t - starts[(fi, 0)]
                    label = name if off == 0 else f"{name}+0x{off:x}"
                    text = text.format(a=fields.pop("a"), b=fields.pop("b"), target=f"{t:x} <{label}>")
                word = encode(ins.mnemonic, **fields)
                enc = f"{word:08x}" if ins.size == 4 else f"{word:04x}"
                lines.append(f"{ins.address:8x}:\t{enc:<20}\t{text}")
        lines.append("")
    return "\n".join(lines)


def block_trace(program, seed, unmatched=0):
    """Aggregated ``pc,count`` trace with one count per basic block."""
    rng = random.Random(seed)
    out = []
    for block in program.blocks():
        roll = rng.random()
        if roll < 0.1:
            count = 0
        elif roll < 0.4:
            count = rng.randint(1, 20)
        elif roll < 0.8:
            count = rng.randint(20, 2000)
        else:
            count = rng.randint(2000, 100000)
        if count:
            out.extend(f"{ins.address:x},{count}" for ins in block.instrs)
    last = max(ins.address for ins in program.instructions())
    for k in range(unmatched):
        out.append(f"{last + 0x1000 + 4 * k:x},{rng.randint(1, 50)}")
    return "\n".join(out) + "\n"


def inject_branch(text, target):
    """Append a stub function holding ``j target`` so ``target`` starts a block."""
    program = parse_disassembly(text)
    last = program.instructions()[-1]
    addr = last.address + last.byte_size
    addr += (-addr) % 4
    word = encode("jal", rd=0, imm=target - addr)
    stub = f"{addr:08x} <injected_branch>:\n{addr:8x}:\t{word:08x}\tj\t{target:x}\n"
    return text.rstrip("\n") + "\n\n" + stub


def fuzz_corpus(n=100, seed=0, sizes=(50, 200)):
    """``n`` (program text, trace text) pairs."""
    rng = random.Random(seed)
    out = []
    for i in range(n):
        text = random_program(rng.getrandbits(32), rng.randint(*sizes))
        prog = parse_disassembly(text)
        out.append((text, block_trace(prog, rng.getrandbits(32), unmatched=i % 3)))
    return out
