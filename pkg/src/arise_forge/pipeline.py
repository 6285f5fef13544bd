"""End-to-end runs: parse, generate, select, verify, report.

The CLI and the estimator both go through here. Report totals always come
from the oracle's combined rewrite, never from selector scores.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

from . import emitter, frontend, generator, oracle, selector
from .errors import ConfigError, InvariantError, ParseError
from .selector import ALL_METRICS, MetricKind

log = logging.getLogger(__name__)

LOOP_BOUND = "index + len(pattern) <= len(block)"


@dataclass(frozen=True)
class RunSettings:
    target: str = "static-size"
    opcode_bits: int = 9
    liveness: str = generator.STRICT
    include_m_ext: bool = False
    start_mode: str = generator.GREEDY
    seed: int = 0
    trials: int = 1000

    def __post_init__(self):
        try:
            object.__setattr__(self, "target", MetricKind(self.target).value)
        except ValueError:
            raise ConfigError(f"unknown target {self.target!r}; expected one of {[m.value for m in ALL_METRICS]}") from None
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not isinstance(self.trials, int) or self.trials < 0:
            raise ConfigError("trials must be a non-negative integer")
        # validates opcode_bits, liveness and start_mode
        self.gen_config()

    @property
    def metric(self):
        return MetricKind(self.target)

    def gen_config(self):
        return generator.GenConfig(
            opcode_bits=self.opcode_bits,
            liveness_mode=self.liveness,
            include_m_ext=self.include_m_ext,
            start_mode=self.start_mode,
        )

    def sel_config(self):
        return selector.SelConfig(opcode_bits=self.opcode_bits, metric=self.target, liveness_mode=self.liveness)

    def echo(self):
        return {
            "target": self.target,
            "opcode_bits": self.opcode_bits,
            "liveness": self.liveness,
            "include_m_ext": self.include_m_ext,
            "start_mode": self.start_mode,
            "seed": self.seed,
            "trials": self.trials,
            "sel_count": selector.sel_count(self.opcode_bits),
            "loop_bound": LOOP_BOUND,
        }


@dataclass
class RunResult:
    program: frontend.ProgramModel
    trace: frontend.TraceProfile | None
    candidates: list
    selected: list  # [(pattern, improvement)]
    assigned: list  # [(pattern, layout)]
    recount: oracle.Recount
    equivalence: list = field(default_factory=list)  # EquivalenceResult per selected pattern, or None
    warnings: Counter = field(default_factory=Counter)


def load(asm_text, trace_text=None):
    program = frontend.parse_disassembly(asm_text)
    trace = frontend.parse_trace(trace_text, program) if trace_text is not None else None
    return program, trace


def collect_warnings(program, trace):
    warnings = Counter(program.warnings)
    if trace is not None and trace.unmatched:
        warnings["unmatched_trace_pcs"] += trace.unmatched
    return warnings


def check_settings(settings, trace):
    if settings.metric.dynamic and trace is None:
        raise ConfigError(f"target {settings.target} needs a trace")


def generate(program, trace, settings, cache=None):
    """Generate, select and verify; returns a RunResult."""
    check_settings(settings, trace)
    cands = generator.generate(program, settings.gen_config())
    selected = selector.select(cands, program, trace, settings.sel_config())
    return finish(program, trace, [p for p, _ in selected], settings, cands, selected, cache)


def finish(program, trace, patterns, settings, cands=(), selected=None, cache=None):
    """Verify ``patterns`` on ``program`` and build the result record."""
    warnings = collect_warnings(program, trace)
    if selected is None:
        check_settings(settings, trace)
        selected = [(p, selector.score(program, p, settings.metric, trace, settings.liveness)[0]) for p in patterns]
    equivalence = verify(program, trace, selected, settings, warnings, cache)
    assigned = emitter.assign_opcodes(patterns, settings.opcode_bits)
    rewritten = oracle.rewrite(program, patterns, settings.liveness)
    totals = oracle.recount(program, rewritten, trace)
    return RunResult(program, trace, list(cands), list(selected), assigned, totals, equivalence, warnings)


def verify(program, trace, selected, settings, warnings=None, cache=None):
    """Cross-check every selected pattern against the oracle.

    Each pattern is applied alone; its selector score must equal the recount
    delta for every metric that can be evaluated. Dynamic metrics are only
    compared when every block has a uniform execution count, since the
    selector weights a slice by its first instruction. Also runs the
    equivalence check, memoized in ``cache`` when one is given. Raises
    InvariantError on any disagreement.
    """
    cache = cache if cache is not None else {}
    warnings = warnings if warnings is not None else Counter()
    metrics = [MetricKind.STATIC_SIZE]
    if trace is not None:
        if trace.is_block_uniform(program):
            metrics += [MetricKind.DYNAMIC_SIZE, MetricKind.DYNAMIC_COUNT]
        else:
            warnings["non_uniform_trace"] += 1
            log.warning("trace counts vary inside a block; dynamic agreement not checked")
    results = []
    for pattern, _ in selected:
        alone = oracle.recount(program, oracle.rewrite(program, [pattern], settings.liveness), trace)
        for metric in metrics:
            expected = selector.score(program, pattern, metric, trace, settings.liveness)[0]
            if expected != alone.saved(metric):
                raise InvariantError(
                    f"{pattern.name}: selector says {expected} for {metric.value}, oracle recount says {alone.saved(metric)}"
                )
        eq = None
        if settings.trials:
            key = (pattern, pattern.example, settings.trials, settings.seed)
            if key not in cache:
                cache[key] = oracle.check_equivalence(pattern, settings.trials, settings.seed)
            eq = cache[key]
            if not eq.passed:
                raise InvariantError(f"{pattern.name} is not equivalent to its constituents: {eq.counterexample}")
        results.append(eq)
    return results


# ---------------------------------------------------------------------------
# reports


def pattern_record(pattern):
    """Enough to rebuild ``pattern`` later (see :func:`pattern_from_record`)."""
    return {
        "exemplar": [ins.render() for ins in pattern.example],
        "imm_widths": list(pattern.imm_widths),
    }


def pattern_from_record(record, opcode_bits):
    try:
        exemplar = [frontend.parse_instruction(line) for line in record["exemplar"]]
        widths = tuple(record["imm_widths"])
        return generator.generalize(exemplar, opcode_bits, widths)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ConfigError(f"malformed pattern record: {e}") from None


def _site_record(site):
    return {
        "block": site.block,
        "start": site.start,
        "address": f"{site.address:x}",
        "exec_count": site.exec_count,
    }


def build_report(result, settings, inputs=None):
    program, trace = result.program, result.trace
    names = emitter.instruction_names([p for p, _ in result.assigned])
    records = []
    for rank, ((pattern, layout), (_, value), name) in enumerate(zip(result.assigned, result.selected, names)):
        per_metric = {}
        sites = []
        for metric in ALL_METRICS:
            if metric.dynamic and trace is None:
                per_metric[metric.value] = None
                continue
            per_metric[metric.value], sites = selector.score(program, pattern, metric, trace, settings.liveness)
        eq = result.equivalence[rank]
        records.append({
            "rank": rank,
            "name": pattern.name,
            "instruction": name,
            "mnemonics": [op.spec.mnemonic for op in pattern.ops],
            "signature": pattern.signature,
            "encoding": layout.render(),
            "opcode": {"major": layout.major, "minor": layout.minor},
            "improvement": per_metric,
            "selection_score": value,
            "match_count": len(sites),
            "sites": [_site_record(s) for s in sites],
            "equivalence": None if eq is None else {"passed": eq.passed, "trials": eq.trials},
            "pattern": pattern_record(pattern),
        })
    rc = result.recount
    totals = {
        "static_pct": rc.static_pct,
        "dynamic_size_pct": rc.dynamic_size_pct,
        "dynamic_count_pct": rc.dynamic_count_pct,
        "static_saved": rc.static_saved,
        "dynamic_size_saved": rc.dynamic_size_saved,
        "dynamic_count_saved": rc.dynamic_count_saved,
        "baseline_static": rc.baseline_static,
        "baseline_dynamic_size": rc.baseline_dynamic_size,
        "baseline_dynamic_count": rc.baseline_dynamic_count,
    }
    return {
        "config": settings.echo(),
        "inputs": dict(inputs or {}),
        "program": {
            "functions": len(program.functions),
            "blocks": len(program.blocks()),
            "instructions": len(program),
            "traced": trace is not None,
        },
        "warnings": dict(sorted(result.warnings.items())),
        "candidates_generated": len(result.candidates),
        "selected": records,
        "totals": totals,
    }


CUSTOM_INDEX = {major: i for i, major in enumerate(emitter.CUSTOM_MAJORS)}


def summary_lines(result):
    names = emitter.instruction_names([p for p, _ in result.assigned])
    out = []
    for name, (pattern, layout), (_, value) in zip(names, result.assigned, result.selected):
        out.append(f"{name:<24} {pattern.signature:<40} improvement {value}  custom-{CUSTOM_INDEX[layout.major]}/{layout.minor}")
    return out


def totals_lines(recount):
    def pct(v):
        return "n/a" if v is None else f"{v:.2f} %"
    return [
        f"static size:   {pct(recount.static_pct)} ({recount.static_saved} of {recount.baseline_static} bytes saved)",
        f"dynamic size:  {pct(recount.dynamic_size_pct)}",
        f"dynamic count: {pct(recount.dynamic_count_pct)}",
    ]


# ---------------------------------------------------------------------------
# corpus runs


def corpus_report(entries, settings=None):
    """One run per program and per target, like the per-target figures.

    ``entries`` is ``[(name, asm_text, trace_text), ...]``. Per target the
    report keeps the selected instructions and the oracle totals; the
    averages are plain means of the per-program percentages.
    """
    base = settings or RunSettings()
    programs = {}
    cache = {}
    sums = {m.value: 0.0 for m in ALL_METRICS}
    for name, asm_text, trace_text in entries:
        program, trace = load(asm_text, trace_text)
        runs = {}
        for metric in ALL_METRICS:
            s = RunSettings(metric.value, base.opcode_bits, base.liveness, base.include_m_ext,
                            base.start_mode, base.seed, base.trials)
            result = generate(program, trace, s, cache)
            rc = result.recount
            pct = {"static-size": rc.static_pct, "dynamic-size": rc.dynamic_size_pct,
                   "dynamic-count": rc.dynamic_count_pct}[metric.value]
            sums[metric.value] += pct
            runs[metric.value] = {
                "candidates_generated": len(result.candidates),
                "selected": [{"name": p.name, "signature": p.signature, "improvement": v} for p, v in result.selected],
                "target_pct": pct,
                "totals": {
                    "static_pct": rc.static_pct,
                    "dynamic_size_pct": rc.dynamic_size_pct,
                    "dynamic_count_pct": rc.dynamic_count_pct,
                    "static_saved": rc.static_saved,
                    "dynamic_size_saved": rc.dynamic_size_saved,
                    "dynamic_count_saved": rc.dynamic_count_saved,
                },
            }
        programs[name] = {
            "instructions": len(program),
            "baseline_static": sum(i.byte_size for i in program.instructions()),
            "warnings": dict(sorted(collect_warnings(program, trace).items())),
            "runs": runs,
        }
    n = len(programs)
    config = base.echo()
    del config["target"]
    return {
        "config": config,
        "programs": programs,
        "averages": {k: (v / n if n else 0.0) for k, v in sums.items()},
    }
