from asm import program

from arise_forge import frontend, generator, oracle, pipeline, selector, synth
from arise_forge.pipeline import RunSettings


def test_pattern_record_round_trip(demo):
    for pat in generator.generate(demo, generator.GenConfig(liveness_mode="paper")):
        again = pipeline.pattern_from_record(pipeline.pattern_record(pat), 9)
        assert again == pat


def test_report_totals_come_from_combined_rewrite():
    # two patterns competing for the same slice: the selector counts it twice,
    # the oracle only once
    p = program("add t0,a0,a1", "xor t1,t0,a2", "or t2,t1,a3")
    instrs = p.blocks()[0].instrs
    a = generator.generalize(instrs[0:2])
    b = generator.generalize(instrs[1:3])
    settings = RunSettings(liveness="paper", trials=20)
    result = pipeline.finish(p, None, [a, b], settings)
    assert [v for _, v in result.selected] == [4, 4]
    rep = pipeline.build_report(result, settings)
    assert rep["totals"]["static_saved"] == 4
    assert [r["match_count"] for r in rep["selected"]] == [1, 1]


def test_non_uniform_trace_skips_dynamic_agreement(demo):
    trace = frontend.parse_trace("100e4,5\n100e8,7\n100ec,1\n", demo)
    assert not trace.is_block_uniform(demo)
    result = pipeline.generate(demo, trace, RunSettings(target="dynamic-size", liveness="paper", trials=10))
    assert result.warnings["non_uniform_trace"] == 1


def test_corpus_totals_match_direct_recount():
    text = synth.random_program(11, 120)
    p = frontend.parse_disassembly(text)
    trace_text = synth.block_trace(p, 3)
    rep = pipeline.corpus_report([("x", text, trace_text)], RunSettings(trials=0))
    trace = frontend.parse_trace(trace_text, p)
    for metric in selector.ALL_METRICS:
        picked = selector.select(generator.generate(p), p, trace, selector.SelConfig(metric=metric))
        rc = oracle.recount(p, oracle.rewrite(p, [q for q, _ in picked]), trace)
        run = rep["programs"]["x"]["runs"][metric.value]
        assert run["totals"]["static_saved"] == rc.static_saved
        assert run["totals"]["dynamic_count_saved"] == rc.dynamic_count_saved
        assert [s["improvement"] for s in run["selected"]] == [v for _, v in picked]


def test_settings_echo():
    echo = RunSettings(opcode_bits=8).echo()
    assert echo["sel_count"] == 8 and echo["target"] == "static-size"
