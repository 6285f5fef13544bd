"""Command line entry point.

    arise-forge generate --asm prog.dis [--trace prog.trace] --target static-size
    arise-forge evaluate --asm prog.dis --report prog.report.json [--select NAME]
    arise-forge corpus --dir corpus/ --out-report corpus.json

Exit codes: 0 success, 1 unreadable or malformed input, 2 bad configuration,
3 internal invariant violation (selector and oracle disagree, or a fused
instruction is not equivalent to its constituents).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import emitter, generator, pipeline
from .errors import ConfigError, ContractViolation, InvariantError, ParseError
from .selector import ALL_METRICS

log = logging.getLogger("arise_forge")

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


class _InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    asm: Path
    trace: Path | None
    settings: pipeline.RunSettings
    out_coredsl: Path | None
    out_report: Path | None


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise _InputError(f"cannot read {path}: {e}") from None


def _write(path, text):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _add_common(p, defaults=True):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--asm", required=True, help="objdump -d output")
    p.add_argument("--trace", help="execution trace (one pc per line, or pc,count)")
    p.add_argument("--target", choices=[m.value for m in ALL_METRICS], default=d("static-size"))
    p.add_argument("--opcode-bits", type=int, default=d(9))
    p.add_argument("--liveness", choices=generator.LIVENESS_MODES, default=d(generator.STRICT))
    p.add_argument("--out-coredsl", help="CoreDSL output path")
    p.add_argument("--out-report", help="JSON report output path")
    p.add_argument("--seed", type=int, default=d(0), help="seed for equivalence trials")
    p.add_argument("--trials", type=int, default=d(1000), help="equivalence trials per instruction")
    p.add_argument("--m-ext", action="store_true", default=None if not defaults else False,
                   help="allow M-extension ops in fused instructions")
    p.add_argument("--start-mode", choices=generator.START_MODES, default=d(generator.GREEDY))


def build_parser():
    parser = argparse.ArgumentParser(prog="arise-forge", description="Generate fused RISC-V custom instructions.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate, select and emit instructions")
    _add_common(gen)

    ev = sub.add_parser("evaluate", help="apply a previous selection to a program")
    _add_common(ev, defaults=False)
    ev.add_argument("--report", required=True, help="report written by generate")
    ev.add_argument("--select", action="append", metavar="NAME",
                    help="keep only these patterns (pattern or instruction name; repeatable)")

    corpus = sub.add_parser("corpus", help="run every target over a directory of programs")
    corpus.add_argument("--dir", required=True, help="directory of NAME.dis files with optional NAME.trace")
    corpus.add_argument("--out-report", help="JSON report output path")
    corpus.add_argument("--opcode-bits", type=int, default=9)
    corpus.add_argument("--liveness", choices=generator.LIVENESS_MODES, default=generator.STRICT)
    corpus.add_argument("--seed", type=int, default=0)
    corpus.add_argument("--trials", type=int, default=1000)
    corpus.add_argument("--m-ext", action="store_true")
    return parser


def _config(args, fallback=None):
    fallback = fallback or {}

    def pick(name, default):
        v = getattr(args, name)
        if v is None:
            v = fallback.get(name, default)
        return v

    settings = pipeline.RunSettings(
        target=pick("target", "static-size"),
        opcode_bits=pick("opcode_bits", 9),
        liveness=pick("liveness", generator.STRICT),
        include_m_ext=bool(pick("m_ext", False)),
        start_mode=pick("start_mode", generator.GREEDY),
        seed=pick("seed", 0),
        trials=pick("trials", 1000),
    )
    asm = Path(args.asm)
    return RunConfig(
        asm=asm,
        trace=Path(args.trace) if args.trace else None,
        settings=settings,
        out_coredsl=Path(args.out_coredsl) if args.out_coredsl else Path(asm.stem + ".core_desc"),
        out_report=Path(args.out_report) if args.out_report else Path(asm.stem + ".report.json"),
    )


def _inputs(cfg):
    # basenames only, so reports do not depend on where files live
    return {"asm": cfg.asm.name, "trace": cfg.trace.name if cfg.trace else None}


def _load(cfg):
    asm_text = _read(cfg.asm)
    trace_text = _read(cfg.trace) if cfg.trace else None
    return pipeline.load(asm_text, trace_text)


def cmd_generate(args):
    cfg = _config(args)
    program, trace = _load(cfg)
    pipeline.check_settings(cfg.settings, trace)
    result = pipeline.generate(program, trace, cfg.settings)
    _write(cfg.out_coredsl, emitter.emit_coredsl(result.assigned))
    _write(cfg.out_report, emitter.emit_report(pipeline.build_report(result, cfg.settings, _inputs(cfg))))
    print(f"{len(result.candidates)} candidates, {len(result.selected)} selected for {cfg.settings.target}")
    for line in pipeline.summary_lines(result):
        print(line)
    for line in pipeline.totals_lines(result.recount):
        print(line)
    return EXIT_OK


def _load_selection(path, opcode_bits, names):
    try:
        prior = json.loads(_read(path))
        records = prior["selected"]
        prior_config = prior.get("config", {})
    except (ValueError, KeyError, TypeError) as e:
        raise _InputError(f"{path} is not a report: {e}") from None
    if names:
        wanted = set(names)
        unknown = wanted - {r["name"] for r in records} - {r.get("instruction") for r in records}
        if unknown:
            raise ConfigError(f"--select names not in the report: {sorted(unknown)}")
        records = [r for r in records if r["name"] in wanted or r.get("instruction") in wanted]
    patterns = [pipeline.pattern_from_record(r["pattern"], opcode_bits) for r in records]
    return patterns, prior_config


def cmd_evaluate(args):
    try:
        prior_config = json.loads(_read(args.report)).get("config", {})
    except ValueError as e:
        raise _InputError(f"{args.report} is not a report: {e}") from None
    fallback = dict(prior_config)
    fallback["m_ext"] = prior_config.get("include_m_ext", False)
    cfg = _config(args, fallback)
    program, trace = _load(cfg)
    pipeline.check_settings(cfg.settings, trace)
    patterns, _ = _load_selection(args.report, cfg.settings.opcode_bits, args.select)
    result = pipeline.finish(program, trace, patterns, cfg.settings)
    inputs = dict(_inputs(cfg), selection=Path(args.report).name)
    report = pipeline.build_report(result, cfg.settings, inputs)
    _write(cfg.out_report, emitter.emit_report(report))
    for rec in report["selected"]:
        print(f"{rec['instruction']:<24} {rec['match_count']} matches")
    for line in pipeline.totals_lines(result.recount):
        print(line)
    return EXIT_OK


def read_corpus(directory):
    """``[(name, asm_text, trace_text or None)]`` for every ``*.dis`` file, sorted."""
    directory = Path(directory)
    if not directory.is_dir():
        raise _InputError(f"{directory} is not a directory")
    out = []
    for asm in sorted(directory.glob("*.dis")):
        trace = asm.with_suffix(".trace")
        out.append((asm.stem, _read(asm), _read(trace) if trace.exists() else None))
    return out


def cmd_corpus(args):
    settings = pipeline.RunSettings(
        opcode_bits=args.opcode_bits, liveness=args.liveness, include_m_ext=args.m_ext,
        seed=args.seed, trials=args.trials,
    )
    entries = read_corpus(args.dir)
    if any(trace is None for _, _, trace in entries):
        raise ConfigError("every corpus program needs a .trace file")
    text = emitter.emit_report(pipeline.corpus_report(entries, settings))
    if args.out_report:
        _write(args.out_report, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "evaluate": cmd_evaluate, "corpus": cmd_corpus}


def _setup_logging():
    level = os.environ.get("ARISE_FORGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, _InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantError, ContractViolation) as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
