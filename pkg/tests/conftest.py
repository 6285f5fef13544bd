import logging
from importlib import resources

import pytest

from arise_forge import frontend, synth

ACCEPTANCE = {}


def data_text(name):
    return resources.files("arise_forge").joinpath("data", name).read_text()


@pytest.fixture(scope="session")
def demo_text():
    return data_text("demo.dis")


@pytest.fixture(scope="session")
def demo_trace_text():
    return data_text("demo.trace")


@pytest.fixture(scope="session")
def demo(demo_text):
    return frontend.parse_disassembly(demo_text)


@pytest.fixture(scope="session")
def fuzz_texts():
    """100 seeded (program text, trace text) pairs."""
    return synth.fuzz_corpus(100, seed=0)


@pytest.fixture(scope="session")
def fuzz_programs(fuzz_texts):
    out = []
    for text, trace_text in fuzz_texts:
        program = frontend.parse_disassembly(text)
        out.append((program, frontend.parse_trace(trace_text, program)))
    return out


@pytest.fixture(autouse=True)
def _quiet_logs(caplog):
    caplog.set_level(logging.ERROR, logger="arise_forge")


def record_acceptance(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  {detail}".rstrip())
