"""CoreDSL and report output.

Encoding layout, least significant bit first::

    major opcode (7) | minor index (opcode_bits - 7) | rd (5) | rs1.. (5 each)
    | immediates in order | zero padding up to bit 31

This is a packed layout, not the standard R/I-type field positions. The
retargeting flow only needs a self-consistent encoding, so fields are laid
out contiguously.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import ContractViolation
from .generator import BASE_OPCODE_BITS, CAPACITY, REG_FIELD_BITS
from .selector import sel_count

CUSTOM_MAJORS = (0b0001011, 0b0101011, 0b1011011, 0b1111011)
MAJOR_NAMES = ("custom-0", "custom-1", "custom-2", "custom-3")


@dataclass(frozen=True)
class Field:
    name: str
    width: int
    value: int | None = None

    @property
    def constant(self):
        return self.value is not None

    def render(self):
        if self.constant:
            return f"0b{self.value:0{self.width}b}"
        return f"{self.name}[{self.width - 1}:0]"


@dataclass(frozen=True)
class EncodingLayout:
    fields: tuple  # least significant first

    @property
    def width(self):
        return sum(f.width for f in self.fields)

    @property
    def major(self):
        return self.fields[0].value

    @property
    def minor(self):
        f = self.fields[1]
        return f.value if f.name == "minor" else 0

    @property
    def opcode_point(self):
        return (self.major, self.minor)

    def render(self):
        return " :: ".join(f.render() for f in reversed(self.fields))

    def encode(self, values):
        """Pack named field values (signed values allowed) into a 32-bit word."""
        word, lo = 0, 0
        for f in self.fields:
            v = f.value if f.constant else values[f.name]
            word |= (v & ((1 << f.width) - 1)) << lo
            lo += f.width
        return word

    def decode(self, word):
        """Named field values of ``word``, or None if a constant field differs."""
        out, lo = {}, 0
        for f in self.fields:
            v = (word >> lo) & ((1 << f.width) - 1)
            if f.constant and v != f.value:
                return None
            if not f.constant:
                out[f.name] = v
            lo += f.width
        return out


def build_layout(pattern, rank, opcode_bits):
    if opcode_bits < BASE_OPCODE_BITS:
        raise ContractViolation("opcode_bits below the base opcode width")
    minor_bits = opcode_bits - BASE_OPCODE_BITS
    fields = [Field("opcode", BASE_OPCODE_BITS, CUSTOM_MAJORS[rank % 4])]
    if minor_bits:
        fields.append(Field("minor", minor_bits, rank // 4))
    fields += [Field(name, REG_FIELD_BITS) for name in pattern.reg_slots]
    fields += [Field(name, f.width) for name, f in zip(pattern.imm_names, pattern.imm_fields)]
    pad = CAPACITY - sum(f.width for f in fields)
    if pad < 0:
        raise ContractViolation(f"{pattern.name} needs {CAPACITY - pad} bits")
    if pad:
        fields.append(Field("padding", pad, 0))
    return EncodingLayout(tuple(fields))


def assign_opcodes(selected, opcode_bits):
    """Pair each ranked pattern with its layout: rank i -> custom-(i%4), minor i//4."""
    patterns = [s[0] if isinstance(s, tuple) else s for s in selected]
    cap = sel_count(opcode_bits)
    if len(patterns) > cap:
        raise ContractViolation(f"{len(patterns)} patterns exceed the {cap} available opcode points")
    return [(p, build_layout(p, i, opcode_bits)) for i, p in enumerate(patterns)]


_NAMED_RE = re.compile(r"^(\w+)\[(\d+):0\]$")
_CONST_RE = re.compile(r"^0b([01]+)$")


def parse_encoding(text):
    """Read a rendered ``encoding:`` value back into an EncodingLayout."""
    parts = [p.strip() for p in text.strip().rstrip(";").split("::")]
    fields = []
    for i, part in enumerate(reversed(parts)):
        m = _NAMED_RE.match(part)
        if m:
            fields.append(Field(m.group(1), int(m.group(2)) + 1))
            continue
        m = _CONST_RE.match(part)
        if not m:
            raise ValueError(f"bad encoding field {part!r}")
        if i == 0:
            name = "opcode"
        elif i == 1 and all(f.constant for f in fields):
            name = "minor"
        else:
            name = "padding"
        fields.append(Field(name, len(m.group(1)), int(m.group(1), 2)))
    layout = EncodingLayout(tuple(fields))
    if layout.width != CAPACITY:
        raise ValueError(f"encoding is {layout.width} bits wide")
    return layout


def decode_word(word, layouts):
    """Find which layout ``word`` belongs to; returns (index, fields) or None."""
    for i, layout in enumerate(layouts):
        values = layout.decode(word)
        if values is not None:
            return i, values
    return None


def instruction_names(patterns):
    """Upper-cased names with '.' removed; repeats get ``_2``, ``_3``..."""
    seen = {}
    out = []
    for p in patterns:
        base = p.name.upper().replace(".", "")
        seen[base] = seen.get(base, 0) + 1
        out.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
    return out


# ---------------------------------------------------------------------------
# CoreDSL


def _u32(expr):
    return f"(unsigned<32>)({expr})"


def _s32(expr):
    return f"(signed<32>){expr}"


def _coredsl_expr(node, leaf):
    kind = node.kind
    if kind in ("read", "imm"):
        return leaf(node)
    if kind == "const":
        return str(node.value) if node.value < 10 else f"0x{node.value:X}"
    a, b = (_coredsl_expr(c, leaf) for c in node.children)
    simple = {"add": "+", "sub": "-", "and": "&", "or": "|", "xor": "^"}
    if kind in simple:
        return _u32(f"{a} {simple[kind]} {b}")
    if kind == "sll":
        return _u32(f"{a} << ({b} & 31)")
    if kind == "srl":
        return _u32(f"{a} >> ({b} & 31)")
    if kind == "sra":
        return _u32(f"{_s32(a)} >> ({b} & 31)")
    if kind == "slt":
        return f"(({_s32(a)} < {_s32(b)}) ? 1 : 0)"
    if kind == "sltu":
        return f"(({a} < {b}) ? 1 : 0)"
    if kind == "mul":
        return _u32(f"{a} * {b}")
    if kind == "mulh":
        return _u32(f"((signed<64>){_s32(a)} * (signed<64>){_s32(b)}) >> 32")
    if kind == "mulhsu":
        return _u32(f"((signed<64>){_s32(a)} * (signed<64>){b}) >> 32")
    if kind == "mulhu":
        return _u32(f"((unsigned<64>){a} * (unsigned<64>){b}) >> 32")
    if kind == "div":
        return f"(({b} == 0) ? 0xFFFFFFFF : (({a} == 0x80000000 && {b} == 0xFFFFFFFF) ? {a} : {_u32(f'{_s32(a)} / {_s32(b)}')}))"
    if kind == "divu":
        return f"(({b} == 0) ? 0xFFFFFFFF : {_u32(f'{a} / {b}')})"
    if kind == "rem":
        return f"(({b} == 0) ? {a} : (({a} == 0x80000000 && {b} == 0xFFFFFFFF) ? 0 : {_u32(f'{_s32(a)} % {_s32(b)}')}))"
    if kind == "remu":
        return f"(({b} == 0) ? {a} : {_u32(f'{a} % {b}')})"
    raise ValueError(kind)


def _behavior(pattern):
    names = pattern.imm_names
    lines = []
    for j, op in enumerate(pattern.ops):
        def leaf(node, op=op):
            kind, k = node.slot
            if kind == "i":
                f = pattern.imm_fields[op.imms[k]]
                name = names[op.imms[k]]
                if f.signed:
                    return f"(unsigned<32>)(signed<32>)(signed<{f.width}>){name}"
                return f"(unsigned<32>){name}"
            src, idx = op.reads[k]
            return f"X[rs{idx + 1}]" if src == "in" else f"tmp{idx}"
        expr = _coredsl_expr(op.spec.semantic_template, leaf)
        if j < len(pattern.ops) - 1:
            lines.append(f"unsigned<32> tmp{j} = {expr};")
        else:
            lines.append(f"if (rd != 0) X[rd] = {expr};")
    return lines


def emit_coredsl(assigned, set_name="ARISE"):
    """CoreDSL instruction set for ``[(pattern, layout), ...]``."""
    out = [f"InstructionSet {set_name} extends RV32I {{", "    instructions {"]
    names = instruction_names([p for p, _ in assigned])
    for name, (pattern, layout) in zip(names, assigned):
        operands = [f"{{name({s})}}" for s in pattern.reg_slots] + [f"{{{n}}}" for n in pattern.imm_names]
        out.append(f"        {name} {{")
        out.append(f"            encoding: {layout.render()};")
        out.append(f'            assembly: "{", ".join(operands)}";')
        out.append("            behavior: {")
        out.extend(f"                {line}" for line in _behavior(pattern))
        out.append("            }")
        out.append("        }")
    out.append("    }")
    out.append("}")
    return "\n".join(out) + "\n"


def parse_coredsl_encodings(text):
    """``{NAME: EncodingLayout}`` for every instruction in emitted CoreDSL."""
    out = {}
    name = None
    for line in text.splitlines():
        s = line.strip()
        m = re.match(r"^(\w+) \{$", s)
        if m and m.group(1) not in ("instructions",):
            name = m.group(1)
        elif s.startswith("encoding:") and name:
            out[name] = parse_encoding(s[len("encoding:"):])
    return out


# ---------------------------------------------------------------------------
# report


def _dump(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + _dump(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return f"{obj:.2f}"
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(str(obj))


def emit_report(report):
    """Canonical JSON text: sorted keys, floats with two decimals."""
    return _dump(report) + "\n"
