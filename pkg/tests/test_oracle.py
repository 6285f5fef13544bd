import pytest
from asm import block, program
from hypothesis import given, settings
from hypothesis import strategies as st

from arise_forge import frontend, generator, isa, oracle, synth
from arise_forge.frontend import Imm, Reg
from arise_forge.generator import PAPER, GenConfig


@pytest.fixture(scope="module")
def paper_cands(demo):
    return {c.name: c for c in generator.generate(demo, GenConfig(liveness_mode=PAPER))}


def test_machine_state_pins_zero():
    s = oracle.MachineState([7] * 32)
    assert s[0] == 0
    s[0] = 5
    s[3] = -1
    assert s[0] == 0 and s[3] == 0xFFFFFFFF


@pytest.mark.parametrize("mnemonic,operands,regs,expected", [
    ("add", [5, 6, 7], {6: 0xFFFFFFFF, 7: 2}, 1),
    ("c.or", [5, 6], {5: 0b1010, 6: 0b0101}, 0b1111),
    ("c.sub", [8, 9], {8: 3, 9: 5}, 0xFFFFFFFE),
    ("srai", [5, 6, 4], {6: 0x80000000}, 0xF8000000),
    ("c.srli", [8, 4], {8: 0x80000000}, 0x08000000),
    ("sltiu", [5, 6, -1], {6: 7}, 1),  # the immediate is compared unsigned
    ("lui", [5, 0xFFFFF], {}, 0xFFFFF000),
    ("c.li", [5, -3], {}, 0xFFFFFFFD),
    ("neg", [5, 6], {6: 1}, 0xFFFFFFFF),
    ("seqz", [5, 6], {6: 0}, 1),
    ("divu", [5, 6, 7], {6: 9, 7: 0}, 0xFFFFFFFF),
])
def test_interpreter_values(mnemonic, operands, regs, expected):
    spec = isa.lookup_op(mnemonic)
    ops = [Imm(v) if role == isa.IMM else Reg(v) for role, v in zip(spec.operand_signature, operands)]
    s = oracle.MachineState()
    for r, v in regs.items():
        s[r] = v
    oracle.execute(s, mnemonic, ops)
    assert s[operands[0]] == expected


def test_interpreter_rejects_non_alu():
    with pytest.raises(ValueError):
        oracle.execute(oracle.MachineState(), "lw", [Reg(5), Imm(0)])


def test_rewrite_demo_add_add(demo, paper_cands):
    rw = oracle.rewrite(demo, [paper_cands["add_add"]], PAPER)
    items = rw.items()
    assert isinstance(items[0], oracle.FusedInstr) and items[0].address == 0x100E4
    assert items[1:] == list(demo.instructions()[2:])
    assert [name for name, _ in rw.log] == ["add_add"]
    rc = oracle.recount(demo, rw)
    assert rc.static_saved == 4 and rc.baseline_static == 22
    assert rc.dynamic_size_saved is None and rc.dynamic_count_pct is None


def test_empty_selection_is_identity(demo):
    rw = oracle.rewrite(demo, [])
    assert rw.items() == demo.instructions() and rw.log == []
    assert oracle.recount(demo, rw).static_pct == 0.0


def test_higher_rank_claims_overlap():
    p = program("add t0,a0,a1", "xor t1,t0,a2", "or t2,t1,a3", "sub t3,t2,a4")
    instrs = p.blocks()[0].instrs
    first = generator.generalize(instrs[1:3])   # xor_or
    second = generator.generalize(instrs[0:2])  # add_xor
    rw = oracle.rewrite(p, [first, second], PAPER)
    assert [type(i).__name__ for i in rw.items()] == ["StaticInstr", "FusedInstr", "StaticInstr"]
    assert rw.items()[1].pattern is first
    rw = oracle.rewrite(p, [second, first], PAPER)
    assert [getattr(i, "pattern", None) for i in rw.items()][0] is second


def test_recount_percentages():
    rc = oracle.Recount(15, None, None, 1000, None, None)
    assert rc.static_pct == 1.5 and rc.saved("static-size") == 15


def test_recount_with_trace(demo, demo_trace_text, paper_cands):
    trace = frontend.parse_trace(demo_trace_text, demo)
    rw = oracle.rewrite(demo, list(paper_cands.values()), PAPER)
    rc = oracle.recount(demo, rw, trace)
    # 6 instructions -> 3 items, each executed 100 times
    assert (rc.dynamic_count_saved, rc.baseline_dynamic_count) == (300, 600)
    assert (rc.dynamic_size_saved, rc.baseline_dynamic_size) == (1000, 2200)
    assert rc.static_saved == 10


def test_equivalence_passes(paper_cands):
    for pattern in paper_cands.values():
        result = oracle.check_equivalence(pattern, trials=1000, seed=1)
        assert result.passed and result.trials == 1000 and result.counterexample is None


def test_zero_register_input_is_pinned(paper_cands):
    xos = paper_cands["xori_or_sltu"]
    assert xos.example[-1].reads()[0] == isa.ZERO
    assert oracle.check_equivalence(xos, trials=200).passed
    # sltu(zero, x) is "x != 0"; a semantics that assumes a random rs3 must fail
    broken = isa.binop("sltu", isa.read("rs1"), isa.read("rs2"))
    assert not oracle.check_equivalence(xos, trials=200, semantics=broken).passed


def _mutate(expr, old, new):
    if expr.kind == old:
        return isa.SemExpr(new, expr.children)
    if expr.children:
        return isa.SemExpr(expr.kind, tuple(_mutate(c, old, new) for c in expr.children))
    return expr


def test_mutated_semantics_fail_reproducibly():
    pat = generator.generalize(block("xor t0,a0,a1", "add t1,t0,a2"))
    broken = _mutate(pat.fused_semantics, "xor", "or")
    a = oracle.check_equivalence(pat, trials=1000, seed=3, semantics=broken)
    b = oracle.check_equivalence(pat, trials=1000, seed=3, semantics=broken)
    assert not a.passed and a == b
    cx = a.counterexample
    assert set(cx) == {"trial", "state", "imms", "expected", "got"}
    assert cx["expected"] != cx["got"] and a.trials == cx["trial"] + 1


def test_canonical_example_round_trips():
    pat = generator.generalize(block("slli t0,a0,3", "srai t1,t0,1", "add t2,t1,a1"))
    ex = oracle.canonical_example(pat)
    assert generator.generalize(ex, imm_widths=pat.imm_widths).structure_key() == pat.structure_key()
    assert oracle.check_equivalence(pat, trials=300, example=ex).passed


PROGRAMS = st.builds(synth.random_program, st.integers(0, 2**32 - 1), st.integers(30, 150))


@settings(max_examples=20, deadline=None)
@given(text=PROGRAMS, seed=st.integers(0, 100))
def test_conservation_and_no_overlap(text, seed):
    p = frontend.parse_disassembly(text)
    trace = frontend.parse_trace(synth.block_trace(p, seed), p)
    cands = generator.generate(p)[:16]
    rw = oracle.rewrite(p, cands)
    rc = oracle.recount(p, rw, trace)
    expected = sum((site.length - 1) * trace.count(site.address) for _, site in rw.log)
    assert rc.dynamic_count_saved == expected
    assert rc.baseline_dynamic_count - rc.dynamic_count_saved == sum(trace.count(i.address) for i in rw.items())
    # untouched instructions keep their order; replaced ones never overlap
    covered = []
    for _, site in rw.log:
        covered.extend((site.block, site.start + k) for k in range(site.length))
    assert len(covered) == len(set(covered))
    plain = [i for i in rw.items() if isinstance(i, frontend.StaticInstr)]
    assert [i.address for i in plain] == sorted(i.address for i in plain)
