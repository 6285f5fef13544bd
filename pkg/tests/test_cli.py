import json
import subprocess
import sys
from importlib import resources

import pytest
from asm import dis

from arise_forge import cli, selector

DATA = resources.files("arise_forge").joinpath("data")
ASM = str(DATA.joinpath("demo.dis"))
TRACE = str(DATA.joinpath("demo.trace"))


def run(tmp_path, *args):
    return cli.main([*args, "--out-coredsl", str(tmp_path / "out.core_desc"), "--out-report", str(tmp_path / "out.json")])


def report(tmp_path, name="out.json"):
    return json.loads((tmp_path / name).read_text())


def test_generate_demo(tmp_path, capsys):
    code = run(tmp_path, "generate", "--asm", ASM, "--target", "static-size", "--opcode-bits", "9", "--liveness", "paper")
    assert code == 0
    text = (tmp_path / "out.core_desc").read_text()
    assert "ADD_ADD {" in text and "XORI_OR_SLTU {" in text
    out = capsys.readouterr().out
    assert "XORI_OR_SLTU" in out and "improvement 6" in out
    rep = report(tmp_path)
    assert rep["config"]["loop_bound"] == "index + len(pattern) <= len(block)"
    xos = rep["selected"][0]
    assert (xos["name"], xos["match_count"], xos["improvement"]["static-size"]) == ("xori_or_sltu", 1, 6)
    assert xos["improvement"]["dynamic-size"] is None
    assert rep["totals"]["dynamic_count_pct"] is None


def test_dynamic_target_without_trace(tmp_path):
    assert run(tmp_path, "generate", "--asm", ASM, "--target", "dynamic-count") == cli.EXIT_CONFIG


def test_bad_opcode_bits(tmp_path):
    assert run(tmp_path, "generate", "--asm", ASM, "--opcode-bits", "6") == cli.EXIT_CONFIG


def test_missing_file(tmp_path):
    assert run(tmp_path, "generate", "--asm", str(tmp_path / "nope.dis")) == cli.EXIT_PARSE


def test_malformed_disassembly(tmp_path, capsys):
    bad = tmp_path / "bad.dis"
    bad.write_text("00010000 <f>:\n   10000:\t00f40333\tadd\tt1,s0\n")
    assert run(tmp_path, "generate", "--asm", str(bad)) == cli.EXIT_PARSE
    assert "line 2" in capsys.readouterr().err


def test_invariant_violation(tmp_path, monkeypatch):
    real = selector.score

    def lying(*args, **kw):
        total, sites = real(*args, **kw)
        return total + 1, sites

    monkeypatch.setattr(selector, "score", lying)
    code = run(tmp_path, "generate", "--asm", ASM, "--liveness", "paper")
    assert code == cli.EXIT_INVARIANT


def test_trace_warnings_are_reported(tmp_path):
    trace = tmp_path / "t.trace"
    trace.write_text(DATA.joinpath("demo.trace").read_text() + "ffff0000,3\n")
    assert run(tmp_path, "generate", "--asm", ASM, "--trace", str(trace), "--target", "dynamic-size") == 0
    rep = report(tmp_path)
    assert rep["warnings"] == {"unmatched_trace_pcs": 3}
    assert rep["totals"]["dynamic_size_pct"] is not None


def test_generate_is_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        assert run(d, "generate", "--asm", ASM, "--trace", TRACE, "--target", "dynamic-count") == 0
        outs.append(((d / "out.core_desc").read_bytes(), (d / "out.json").read_bytes()))
    assert outs[0] == outs[1]


@pytest.fixture
def paper_report(tmp_path):
    assert run(tmp_path, "generate", "--asm", ASM, "--liveness", "paper") == 0
    return str(tmp_path / "out.json")


def test_evaluate_xos_only_paper(tmp_path, paper_report, capsys):
    code = cli.main(["evaluate", "--asm", ASM, "--report", paper_report, "--select", "xori_or_sltu",
                     "--out-report", str(tmp_path / "ev.json")])
    assert code == 0
    assert "6 of 22 bytes saved" in capsys.readouterr().out
    rep = report(tmp_path, "ev.json")
    assert rep["totals"]["static_saved"] == 6
    assert rep["inputs"]["selection"] == "out.json"


def test_evaluate_xos_only_strict(tmp_path, paper_report, capsys):
    code = cli.main(["evaluate", "--asm", ASM, "--report", paper_report, "--select", "XORI_OR_SLTU",
                     "--liveness", "strict", "--out-report", str(tmp_path / "ev.json")])
    assert code == 0
    assert "0 matches" in capsys.readouterr().out
    assert report(tmp_path, "ev.json")["selected"][0]["match_count"] == 0


def test_evaluate_empty_selection(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"config": {"opcode_bits": 9}, "selected": []}))
    code = cli.main(["evaluate", "--asm", ASM, "--trace", TRACE, "--report", str(empty),
                     "--out-report", str(tmp_path / "ev.json")])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("0.00 %") == 3
    totals = report(tmp_path, "ev.json")["totals"]
    assert totals["static_pct"] == totals["dynamic_size_pct"] == totals["dynamic_count_pct"] == 0


def test_evaluate_unknown_select(tmp_path, paper_report):
    code = cli.main(["evaluate", "--asm", ASM, "--report", paper_report, "--select", "nope",
                     "--out-report", str(tmp_path / "ev.json")])
    assert code == cli.EXIT_CONFIG


def test_evaluate_on_other_program(tmp_path, paper_report):
    other = tmp_path / "other.dis"
    other.write_text(dis("add t1,s0,a5", "add a5,t1,a2", "ret", "--", "add t2,a0,a1", "add a1,t2,a3"))
    code = cli.main(["evaluate", "--asm", str(other), "--report", paper_report, "--out-report", str(tmp_path / "ev.json")])
    assert code == 0
    rep = report(tmp_path, "ev.json")
    add_add = next(r for r in rep["selected"] if r["name"] == "add_add")
    assert add_add["match_count"] == 2 and rep["totals"]["static_saved"] == 8


def test_evaluate_bad_report(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    assert cli.main(["evaluate", "--asm", ASM, "--report", str(bad)]) == cli.EXIT_PARSE


def test_corpus_command(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    (d / "one.dis").write_text(DATA.joinpath("demo.dis").read_text())
    (d / "one.trace").write_text(DATA.joinpath("demo.trace").read_text())
    out = tmp_path / "c.json"
    assert cli.main(["corpus", "--dir", str(d), "--out-report", str(out), "--liveness", "paper"]) == 0
    rep = json.loads(out.read_text())
    assert set(rep["programs"]["one"]["runs"]) == {"static-size", "dynamic-size", "dynamic-count"}
    assert rep["averages"]["static-size"] == pytest.approx(45.45)


def test_corpus_needs_traces(tmp_path):
    (tmp_path / "one.dis").write_text(DATA.joinpath("demo.dis").read_text())
    assert cli.main(["corpus", "--dir", str(tmp_path)]) == cli.EXIT_CONFIG


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "arise_forge", "generate", "--asm", ASM, "--target", "dynamic-size"],
        capture_output=True, text=True, cwd=tmp_path, env={"ARISE_FORGE_LOG": "DEBUG", "PATH": ""},
    )
    assert proc.returncode == 2
    assert "needs a trace" in proc.stderr
