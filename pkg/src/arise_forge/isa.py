"""RV32 instruction vocabulary: registers, operand signatures and ALU semantics.

The fusable whitelist is a reconstruction. It covers the integer
arithmetic/logical subset of RV32IMC (plus the common objdump pseudo
mnemonics that print those ops) and deliberately leaves out anything that
touches memory, control flow, CSRs, floating point or the PC (``auipc``).
M-extension ops are known but only fusable when explicitly enabled.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractViolation

MASK32 = 0xFFFFFFFF

ABI_NAMES = (
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2",
    "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5",
    "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7",
    "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6",
)
ZERO = 0
RA = 1
SP = 2

_REG_LOOKUP = {name: i for i, name in enumerate(ABI_NAMES)}
_REG_LOOKUP["fp"] = 8
_REG_LOOKUP.update({f"x{i}": i for i in range(32)})


def reg_index(name):
    """ABI or numeric register name to index; ``None`` for non-integer names."""
    return _REG_LOOKUP.get(name)


def reg_name(index):
    return ABI_NAMES[index]


def is_rvc_reg(index):
    """True for the eight registers reachable from 3-bit RVC fields."""
    return 8 <= index <= 15


# operand roles
DEST = "dest"
SRC = "src"
SRCDEST = "srcdest"
IMM = "imm"
MEM = "mem"
TARGET = "target"
ANY = "any"


# ---------------------------------------------------------------------------
# semantic expressions

BINARY_KINDS = (
    "add", "sub", "and", "or", "xor", "sll", "srl", "sra", "slt", "sltu",
    "mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu",
)
LEAF_KINDS = ("read", "imm", "const")


@dataclass(frozen=True)
class SemExpr:
    """Expression tree over 32-bit values.

    Leaves are ``read`` (register slot), ``imm`` (immediate slot) and
    ``const``; inner nodes are two-operand ALU kinds from ``BINARY_KINDS``.
    """

    kind: str
    children: tuple = ()
    slot: object = None
    value: int = 0

    def __post_init__(self):
        if self.kind in BINARY_KINDS:
            if len(self.children) != 2:
                raise ValueError(f"{self.kind} takes two operands")
        elif self.kind not in LEAF_KINDS:
            raise ValueError(f"unknown SemExpr kind {self.kind!r}")

    def slots(self):
        """All (kind, slot) leaves in left-to-right order."""
        if self.kind in ("read", "imm"):
            return [(self.kind, self.slot)]
        out = []
        for c in self.children:
            out.extend(c.slots())
        return out

    def substitute(self, fn):
        """Rebuild the tree, replacing every read/imm leaf by ``fn(leaf)``."""
        if self.kind in ("read", "imm"):
            return fn(self)
        if self.kind == "const":
            return self
        return SemExpr(self.kind, tuple(c.substitute(fn) for c in self.children))

    def __str__(self):
        if self.kind == "read":
            return f"{self.slot}"
        if self.kind == "imm":
            return f"#{self.slot}"
        if self.kind == "const":
            return str(self.value)
        a, b = self.children
        return f"{self.kind}({a}, {b})"


def read(slot):
    return SemExpr("read", slot=slot)


def imm(slot):
    return SemExpr("imm", slot=slot)


def const(value):
    return SemExpr("const", value=value & MASK32)


def binop(kind, a, b):
    return SemExpr(kind, (a, b))


def _signed(v):
    return v - (1 << 32) if v & 0x80000000 else v


def _trunc_div(a, b):
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _alu(kind, a, b):
    if kind == "add":
        return (a + b) & MASK32
    if kind == "sub":
        return (a - b) & MASK32
    if kind == "and":
        return a & b
    if kind == "or":
        return a | b
    if kind == "xor":
        return a ^ b
    if kind == "sll":
        return (a << (b & 31)) & MASK32
    if kind == "srl":
        return a >> (b & 31)
    if kind == "sra":
        return (_signed(a) >> (b & 31)) & MASK32
    if kind == "slt":
        return int(_signed(a) < _signed(b))
    if kind == "sltu":
        return int(a < b)
    if kind == "mul":
        return (a * b) & MASK32
    if kind == "mulh":
        return ((_signed(a) * _signed(b)) >> 32) & MASK32
    if kind == "mulhsu":
        return ((_signed(a) * b) >> 32) & MASK32
    if kind == "mulhu":
        return (a * b) >> 32
    if kind == "div":
        if b == 0:
            return MASK32
        if _signed(a) == -(1 << 31) and _signed(b) == -1:
            return a
        return _trunc_div(_signed(a), _signed(b)) & MASK32
    if kind == "divu":
        return MASK32 if b == 0 else a // b
    if kind == "rem":
        if b == 0:
            return a
        if _signed(a) == -(1 << 31) and _signed(b) == -1:
            return 0
        sa, sb = _signed(a), _signed(b)
        return (sa - _trunc_div(sa, sb) * sb) & MASK32
    if kind == "remu":
        return a if b == 0 else a % b
    raise ValueError(kind)


def eval_sem(template, slot_values):
    """Evaluate ``template`` with 32-bit wrapping semantics.

    ``slot_values`` maps slot keys to integers; negative values are taken as
    two's complement. Raises ContractViolation on an unbound slot.
    """
    kind = template.kind
    if kind == "const":
        return template.value
    if kind in ("read", "imm"):
        try:
            return slot_values[template.slot] & MASK32
        except KeyError:
            raise ContractViolation(f"unbound {kind} slot {template.slot!r}") from None
    a, b = template.children
    return _alu(kind, eval_sem(a, slot_values), eval_sem(b, slot_values))


def compile_sem(template):
    """Closure equivalent to ``lambda slots: eval_sem(template, slots)``.

    Used in hot loops; unbound slots raise ContractViolation just the same.
    """
    kind = template.kind
    if kind == "const":
        value = template.value
        return lambda slots: value
    if kind in ("read", "imm"):
        key = template.slot

        def leaf(slots):
            try:
                return slots[key] & MASK32
            except KeyError:
                raise ContractViolation(f"unbound {kind} slot {key!r}") from None
        return leaf
    fa, fb = (compile_sem(c) for c in template.children)
    return lambda slots: _alu(kind, fa(slots), fb(slots))


# ---------------------------------------------------------------------------
# op table


@dataclass(frozen=True)
class OpSpec:
    """One mnemonic the tool understands.

    ``semantic_template`` uses normalized slot keys: ``("r", k)`` is the k-th
    register read by the op (in operand order, src-dest operands included)
    and ``("i", k)`` the k-th immediate. That makes ``c.or a0,a1`` and
    ``or a0,a0,a1`` share one template.
    """

    mnemonic: str
    operand_signature: tuple
    byte_size: int
    fusable: bool = False
    semantic_template: SemExpr | None = None
    imm_signed: bool = True
    imm_cap: int = 12
    control_flow: bool = False
    extension: str = "I"
    rvc_regs: bool = False
    variants: tuple = ()
    implicit_reads: tuple = ()
    implicit_writes: tuple = ()

    @property
    def base_mnemonic(self):
        return self.mnemonic[2:] if self.mnemonic.startswith("c.") else self.mnemonic

    @property
    def signatures(self):
        return (self.operand_signature,) + self.variants


_R0, _R1 = read(("r", 0)), read(("r", 1))
_I0 = imm(("i", 0))

_OPS = {}


def _add(spec):
    if spec.mnemonic in _OPS:
        raise ValueError(f"duplicate op {spec.mnemonic}")
    _OPS[spec.mnemonic] = spec


def _alu_op(mnemonic, signature, template, size=4, **kw):
    _add(OpSpec(mnemonic, signature, size, fusable=True, semantic_template=template, **kw))


def _plain(mnemonic, signature, size=4, **kw):
    _add(OpSpec(mnemonic, signature, size, **kw))


def _cflow(mnemonic, signature, size=4, **kw):
    _add(OpSpec(mnemonic, signature, size, control_flow=True, **kw))


_RRR = (DEST, SRC, SRC)
_RRI = (DEST, SRC, IMM)

for _m in ("add", "sub", "and", "or", "xor", "slt", "sltu", "sll", "srl", "sra"):
    _alu_op(_m, _RRR, binop(_m, _R0, _R1))
for _m, _k in (("addi", "add"), ("andi", "and"), ("ori", "or"), ("xori", "xor"),
               ("slti", "slt"), ("sltiu", "sltu")):
    _alu_op(_m, _RRI, binop(_k, _R0, _I0))
for _m, _k in (("slli", "sll"), ("srli", "srl"), ("srai", "sra")):
    _alu_op(_m, _RRI, binop(_k, _R0, _I0), imm_signed=False, imm_cap=5)
_alu_op("lui", (DEST, IMM), binop("sll", _I0, const(12)), imm_signed=False, imm_cap=20)

# objdump pseudo mnemonics for ALU ops
_alu_op("mv", (DEST, SRC), _R0)
_alu_op("li", (DEST, IMM), _I0)
_alu_op("not", (DEST, SRC), binop("xor", _R0, const(-1)))
_alu_op("neg", (DEST, SRC), binop("sub", const(0), _R0))
_alu_op("seqz", (DEST, SRC), binop("sltu", _R0, const(1)))
_alu_op("snez", (DEST, SRC), binop("sltu", const(0), _R0))
_alu_op("sltz", (DEST, SRC), binop("slt", _R0, const(0)))
_alu_op("sgtz", (DEST, SRC), binop("slt", const(0), _R0))

for _m in ("mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu"):
    _alu_op(_m, _RRR, binop(_m, _R0, _R1), extension="M")

# compressed ALU ops; register-class limits apply to parsing only
_CA = (SRCDEST, SRC)
_alu_op("c.add", _CA, binop("add", _R0, _R1), size=2, extension="C")
_alu_op("c.mv", (DEST, SRC), _R0, size=2, extension="C")
for _m in ("sub", "and", "or", "xor"):
    _alu_op("c." + _m, _CA, binop(_m, _R0, _R1), size=2, extension="C", rvc_regs=True)
_alu_op("c.addi", (SRCDEST, IMM), binop("add", _R0, _I0), size=2, extension="C")
_alu_op("c.andi", (SRCDEST, IMM), binop("and", _R0, _I0), size=2, extension="C", rvc_regs=True)
_alu_op("c.slli", (SRCDEST, IMM), binop("sll", _R0, _I0), size=2, extension="C",
        imm_signed=False, imm_cap=5)
for _m, _k in (("c.srli", "srl"), ("c.srai", "sra")):
    _alu_op(_m, (SRCDEST, IMM), binop(_k, _R0, _I0), size=2, extension="C",
            imm_signed=False, imm_cap=5, rvc_regs=True)
_alu_op("c.li", (DEST, IMM), _I0, size=2, extension="C")
_alu_op("c.lui", (DEST, IMM), binop("sll", _I0, const(12)), size=2, extension="C",
        imm_signed=False, imm_cap=20)

# arithmetic but excluded from fusion
_plain("auipc", (DEST, IMM), imm_signed=False, imm_cap=20)
_plain("nop", ())
_plain("c.nop", (), size=2, extension="C")
_plain("c.addi16sp", (SRCDEST, IMM), size=2, extension="C")
_plain("c.addi4spn", (DEST, SRC, IMM), size=2, extension="C")

# memory
for _m in ("lb", "lh", "lw", "lbu", "lhu"):
    _plain(_m, (DEST, MEM))
for _m in ("sb", "sh", "sw"):
    _plain(_m, (SRC, MEM))
_plain("c.lw", (DEST, MEM), size=2, extension="C", rvc_regs=True)
_plain("c.sw", (SRC, MEM), size=2, extension="C", rvc_regs=True)
_plain("c.lwsp", (DEST, MEM), size=2, extension="C")
_plain("c.swsp", (SRC, MEM), size=2, extension="C")

# control flow
for _m in ("beq", "bne", "blt", "bge", "bltu", "bgeu", "bgt", "ble", "bgtu", "bleu"):
    _cflow(_m, (SRC, SRC, TARGET))
for _m in ("beqz", "bnez", "blez", "bgez", "bltz", "bgtz"):
    _cflow(_m, (SRC, TARGET))
_cflow("c.beqz", (SRC, TARGET), size=2, extension="C", rvc_regs=True)
_cflow("c.bnez", (SRC, TARGET), size=2, extension="C", rvc_regs=True)
_cflow("jal", (DEST, TARGET), variants=((TARGET,),))
_cflow("j", (TARGET,))
_cflow("call", (TARGET,), implicit_writes=(RA,))
_cflow("tail", (TARGET,))
_cflow("jalr", (SRC,), variants=((DEST, MEM), (DEST, SRC, IMM), (MEM,)))
_cflow("jr", (SRC,))
_cflow("ret", (), implicit_reads=(RA,))
_cflow("c.j", (TARGET,), size=2, extension="C")
_cflow("c.jal", (TARGET,), size=2, extension="C", implicit_writes=(RA,))
_cflow("c.jr", (SRC,), size=2, extension="C")
_cflow("c.jalr", (SRC,), size=2, extension="C", implicit_writes=(RA,))

# system
for _m in ("ecall", "ebreak", "mret", "sret", "wfi", "fence.i"):
    _cflow(_m, ())
_cflow("c.ebreak", (), size=2, extension="C")
for _m in ("fence", "csrr", "csrw", "csrs", "csrc", "csrrw", "csrrs", "csrrc",
           "csrrwi", "csrrsi", "csrrci", "csrwi", "csrsi", "csrci"):
    _cflow(_m, (ANY,))


def lookup_op(mnemonic):
    """The OpSpec for ``mnemonic``, or ``None`` if the tool does not know it."""
    return _OPS.get(mnemonic)


def known_mnemonics():
    return tuple(_OPS)


def is_fusable(spec, include_m_ext=False):
    if spec is None or not spec.fusable:
        return False
    return include_m_ext or spec.extension != "M"


def canonical_op(spec):
    """The uncompressed OpSpec sharing ``spec``'s semantics."""
    return _OPS[spec.base_mnemonic]


FUSABLE_WHITELIST = tuple(m for m, s in _OPS.items() if s.fusable and s.extension != "M")
M_EXTENSION_OPS = tuple(m for m, s in _OPS.items() if s.extension == "M")
