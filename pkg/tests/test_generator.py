import pytest
from asm import block, program
from hypothesis import given, settings
from hypothesis import strategies as st

from arise_forge import frontend, generator, synth
from arise_forge.errors import ConfigError
from arise_forge.generator import PAPER, STRICT, GenConfig

PAPER9 = GenConfig(opcode_bits=9, liveness_mode=PAPER)


def names(cands):
    return [c.name for c in cands]


def test_demo_paper_mode(demo):
    cands = generator.generate(demo, PAPER9)
    assert names(cands) == ["xori_or_sltu", "add_add"]
    xos, pair = cands
    assert xos.signature == "rd, rs1, rs2, rs3, imm[2:0]"
    assert pair.signature == "rd, rs1, rs2, rs3"
    assert pair.budget.padding == 3


def test_demo_generalization(demo):
    xos = generator.generate(demo, PAPER9)[0]
    # a5 -> rs1, a0 -> rs2, zero -> rs3; the c.or result feeds sltu
    assert [op.reads for op in xos.ops] == [(("in", 0),), (("in", 1), ("tmp", 0)), (("in", 2), ("tmp", 1))]
    assert [op.mnemonic for op in xos.ops] == ["xori", "or", "sltu"]
    assert xos.imm_fields[0].signed and xos.imm_fields[0].width == 3


def test_demo_strict_mode_truncates_xos(demo):
    cands = generator.generate(demo, GenConfig(liveness_mode=STRICT))
    # a0 (the c.or result) is read by the trailing addi, so sltu is cut off
    assert names(cands) == ["add_add", "xori_or"]


def test_overwrite_rule_includes_then_closes():
    instrs = block("add t1,s0,a5", "add a5,t1,a2", "add t2,a5,a0")
    assert generator.grow(instrs, 0, PAPER9) == 2


def test_src_dest_does_not_trigger_overwrite():
    instrs = block("xori a1,a5,1", "c.or a0,a1", "xori a3,a0,2")
    assert generator.grow(instrs, 0, GenConfig(opcode_bits=7, liveness_mode=PAPER)) == 3


def test_single_instruction_block_yields_nothing():
    assert generator.generate(program("add t1,s0,a5"), PAPER9) == []


def test_budget_truncation():
    # 9 + 5 * (rd + 4 inputs) = 34 > 32, so the or is left out
    p = program("add t0,a0,a1", "xor t1,t0,a2", "or t2,t1,a3")
    (cand,) = generator.generate(p)
    assert cand.name == "add_xor"
    assert (cand.budget.used, cand.budget.padding) == (29, 3)


def test_minus_one_widens_to_fill_budget():
    (cand,) = generator.generate(program("addi t0,a0,-1", "xor t1,t0,a1"))
    # 9 opcode + 15 register bits leave 8 bits, below the 12-bit cap
    assert cand.imm_widths == (8,)
    assert cand.budget.padding == 0


def test_no_immediates_means_padding():
    (cand,) = generator.generate(program("add t0,a0,a1", "sub t1,t0,a2"))
    assert cand.imm_fields == ()
    assert cand.budget.padding == 32 - 9 - 5 * 4


def test_shift_fields_cap_at_five_bits():
    (cand,) = generator.generate(program("slli t0,a0,3", "srai t1,t0,1"))
    assert cand.imm_widths == (5, 5)
    assert cand.budget.padding == 32 - 9 - 10 - 10
    assert not any(f.signed for f in cand.imm_fields)


@pytest.mark.parametrize("value,signed,width", [
    (0, True, 1), (-1, True, 1), (1, True, 2), (3, True, 3), (-4, True, 3), (2047, True, 12), (-2048, True, 12),
    (0, False, 1), (1, False, 1), (31, False, 5),
])
def test_min_imm_width(value, signed, width):
    assert generator.min_imm_width(value, signed) == width


def test_zero_destination_is_not_fused():
    assert generator.generate(program("add zero,a0,a1", "add t1,zero,a2"), PAPER9) == []


def test_m_extension_gate():
    p = program("mul t0,a0,a1", "add t1,t0,a2")
    assert generator.generate(p) == []
    assert names(generator.generate(p, GenConfig(include_m_ext=True))) == ["mul_add"]


def test_non_fusable_and_control_flow_close():
    p = program("add t0,a0,a1", "lw t1,0(t0)", "add t2,t1,a2", "add t3,t2,a3", "beq t3,a0,10000")
    assert names(generator.generate(p)) == ["add_add"]


def test_postprocess_keeps_widest():
    narrow = generator.generalize(block("addi t0,a0,5", "xor t1,t0,a1"), imm_widths=(4,))
    wide = generator.generalize(block("addi t0,a0,5", "xor t1,t0,a1"), imm_widths=(8,))
    assert generator.postprocess([narrow, wide, narrow]) == [wide]


def test_postprocess_keeps_reordered_ops():
    a = generator.generalize(block("add t0,a0,a1", "xor t1,t0,a2"))
    b = generator.generalize(block("xor t0,a0,a1", "add t1,t0,a2"))
    assert names(generator.postprocess([a, b])) == ["add_xor", "xor_add"]


def test_postprocess_is_idempotent(demo):
    cands = generator.generate(demo, PAPER9)
    assert generator.postprocess(cands) == cands


def test_generalize_rejects_pinned_overflow():
    with pytest.raises(ValueError):
        generator.generalize(block("addi t0,a0,5", "xor t1,t0,a1"), imm_widths=(12,))


def test_config_validation():
    with pytest.raises(ConfigError):
        GenConfig(opcode_bits=6)
    with pytest.raises(ConfigError):
        GenConfig(min_ops=1)
    with pytest.raises(ConfigError):
        GenConfig(liveness_mode="loose")
    with pytest.raises(ConfigError):
        GenConfig(opcode_bits=28)


def test_sliding_start_finds_more(demo):
    sliding = generator.generate(demo, GenConfig(liveness_mode=PAPER, start_mode=generator.SLIDING))
    assert set(names(generator.generate(demo, PAPER9))) <= set(names(sliding))


PROGRAMS = st.builds(synth.random_program, st.integers(0, 2**32 - 1), st.integers(30, 150))


@settings(max_examples=25, deadline=None)
@given(text=PROGRAMS, bits=st.sampled_from([7, 8, 9, 10]), mode=st.sampled_from([STRICT, PAPER]))
def test_budget_and_miso_invariants(text, bits, mode):
    p = frontend.parse_disassembly(text)
    for c in generator.generate(p, GenConfig(opcode_bits=bits, liveness_mode=mode)):
        b = c.budget
        assert b.opcode_bits == bits and b.padding >= 0
        assert bits + 5 * len(c.reg_slots) + sum(c.imm_widths) + b.padding == 32
        assert c.reg_slots[0] == "rd" and c.reg_slots.count("rd") == 1
        assert c.name == "_".join(op.spec.base_mnemonic for op in c.ops)
        assert len(c.ops) >= 2
        for j, op in enumerate(c.ops):
            assert op.spec.fusable
            for src, k in op.reads:
                # inputs are slots, intermediates come from earlier ops only
                assert (src == "in" and k < c.n_inputs) or (src == "tmp" and k < j)
        for f in c.imm_fields:
            assert 1 <= f.width <= f.cap


@settings(max_examples=25, deadline=None)
@given(text=PROGRAMS)
def test_strict_candidates_have_no_escaping_intermediates(text):
    p = frontend.parse_disassembly(text)
    for b in p.blocks():
        for s, n in generator.candidates_in_block(b.instrs, GenConfig()):
            assert generator.escaping_intermediates(b.instrs[s:s + n], b.instrs[s + n:]) == []


@settings(max_examples=15, deadline=None)
@given(text=PROGRAMS)
def test_generation_is_deterministic(text):
    a = generator.generate(frontend.parse_disassembly(text))
    b = generator.generate(frontend.parse_disassembly(text))
    assert a == b and [repr(x) for x in a] == [repr(x) for x in b]
