import pytest

from arise_forge import frontend, synth


@pytest.mark.parametrize("args,word", [
    # encodings from the bundled demo.dis dump (assembled by GNU as)
    (("add", 6, 8, 15), 0x00F40333),
    (("add", 15, 6, 12), 0x00C307B3),
    (("xori", 11, 15, 0, 1), 0x0017C593),
    (("c.or", 10, 0, 11), 0x8D4D),
    (("sltu", 19, 0, 10), 0x00A039B3),
    (("addi", 10, 10, 0, 128), 0x08050513),
    (("ret",), 0x00008067),
])
def test_known_encodings(args, word):
    assert synth.encode(*args) == word


def test_random_program_is_reproducible():
    assert synth.random_program(5, 80) == synth.random_program(5, 80)
    assert synth.random_program(5, 80) != synth.random_program(6, 80)


def test_random_program_parses_with_requested_size():
    p = frontend.parse_disassembly(synth.random_program(9, 150))
    assert len(p) == 150 and not p.warnings.get("unmapped_compressed_alias")


def test_block_trace_is_block_uniform():
    p = frontend.parse_disassembly(synth.random_program(1, 100))
    trace = frontend.parse_trace(synth.block_trace(p, 2, unmatched=2), p)
    assert trace.is_block_uniform(p) and trace.unmatched > 0


def test_inject_branch_splits_block():
    text = synth.random_program(3, 60)
    p = frontend.parse_disassembly(text)
    block = max(p.blocks(), key=len)
    target = block.instrs[1].address
    q = frontend.parse_disassembly(synth.inject_branch(text, target))
    assert len(q.blocks()) == len(p.blocks()) + 2  # the split plus the stub
    assert q.functions[-1].name == "injected_branch"
