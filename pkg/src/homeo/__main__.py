#  Copyright (C) 2024 The homeo authors.
#
#  This file is part of homeo.
#
#  homeo is free software: you can redistribute it and/or modify it under the terms
#  of the GNU General Public License as published by the Free Software Foundation,
#  either version 3 of the License, or (at your option) any later version.
#
#  homeo is distributed in the hope that it will be useful, but WITHOUT ANY WARRANTY;
#  without even the implied warranty of MERCHANTABILITY or FITNESS FOR A PARTICULAR
#  PURPOSE. See the GNU General Public License for more details.
#
#  You should have received a copy of the GNU General Public License along with
#  homeo. If not, see <https://www.gnu.org/licenses/>.

"""Command line interface."""

import logging
from argparse import ArgumentParser, Namespace
from collections.abc import Callable, Sequence
from enum import IntEnum
from logging import ERROR, INFO
from pathlib import Path
from sys import exit
from typing import Any

from colorama import just_fix_windows_console
from pydantic import TypeAdapter, ValidationError

from homeo.analysis.registry import DATAFLOW
from homeo.bench.corpus import CorpusShape, characteristics, gen_corpus
from homeo.bench.fuzz import Fuzzer
from homeo.bench.pipeline import (
    AnalysisSelection,
    BehaviourCheck,
    RunConfig,
    compare_modes,
    run_pipeline,
    write_outputs,
)
from homeo.errors import HomeoError, ParseError, RpStrictViolation
from homeo.ir.parser import parse
from homeo.logging_conf import HiddenOutputFilter, LoggingConf
from homeo.output import Output
from homeo.settings import Settings, TomlSettings
from homeo.stabilizer import Mode
from homeo.util import cls_name

LOG = logging.getLogger('homeo')


class ExitCode(IntEnum):
    """Process exit codes."""

    OK = 0
    INVALID = 1
    ENGINE_FAULT = 2
    STRICT_VIOLATION = 3
    MISMATCH = 4


def _names(s: str) -> list[str]:
    return [n.strip() for n in s.split(',') if n.strip()]


def _parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog='homeo',
        description='Self-stabilizing analyses and barrier elimination for a small '
        'OpenMP-like language.',
    )
    parser.add_argument('--config', type=Path, help='settings file to use')
    parser.add_argument('--log-file', type=Path, help='log file (default: ./homeo.log)')
    parser.add_argument(
        '-v', '--verbose', action='store_true', help='print progress messages'
    )
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='optimize a program and report the cost')
    run.add_argument('input', type=Path, help='source file')
    run.add_argument('--mode', default=str(Mode.LZUPD), help='stabilization mode')
    run.add_argument(
        '--opt',
        action='append',
        dest='optimizations',
        choices=['barrelim', 'none'],
        help='optimization to run (default: barrelim)',
    )
    run.add_argument(
        '--analyses', default=','.join(DATAFLOW), help='comma-separated analyses'
    )
    run.add_argument('--strict-rp', action='store_true', help='fault on stale reads')
    run.add_argument('--repeat', type=int, default=1, help='runs to average over')
    run.add_argument('--seed', type=int, default=0, help='seed recorded in the report')
    run.add_argument('--report', type=Path, help='JSON report file')
    run.add_argument('-o', '--output', type=Path, help='optimized source file')

    gen = sub.add_parser('gen', help='generate a synthetic corpus')
    gen.add_argument('--seed', type=int, default=0, help='seed of the first program')
    gen.add_argument('--nodes', type=int, help='approximate nodes per program')
    gen.add_argument('--pc', type=int, help='parallel regions per program')
    gen.add_argument('--barriers', type=int, help='explicit barriers per program')
    gen.add_argument('--functions', type=int, help='helper functions with barriers')
    gen.add_argument('--count', type=int, help='number of programs')
    gen.add_argument('-o', '--out-dir', type=Path, required=True, help='output dir')

    fuzz = sub.add_parser('fuzz', help='check stabilization against recomputation')
    fuzz.add_argument('--trials', type=int, help='number of random traces')
    fuzz.add_argument('--seed', type=int, default=0, help='base seed')
    fuzz.add_argument('--mode', default=str(Mode.LZUPD), help='stabilization mode')
    fuzz.add_argument(
        '--analyses', default=','.join(DATAFLOW), help='comma-separated analyses'
    )
    fuzz.add_argument('--max-ops', type=int, help='steps per trace')
    fuzz.add_argument('--report', type=Path, help='JSON verdict file')

    compare = sub.add_parser('compare', help='run a program under several modes')
    compare.add_argument('input', type=Path, help='source file')
    compare.add_argument(
        '--modes', default='all', help="comma-separated modes or 'all'"
    )
    compare.add_argument(
        '--analyses', default=','.join(DATAFLOW), help='comma-separated analyses'
    )
    compare.add_argument('--jobs', type=int, default=1, help='worker processes')
    compare.add_argument(
        '--check-exec',
        action='store_true',
        help='also compare executions of the original and the optimized program',
    )
    compare.add_argument('--report', type=Path, help='JSON comparison file')
    return parser


def _run(args: Namespace, settings: Settings, output: Output) -> ExitCode:
    opts = [o for o in args.optimizations or ['barrelim'] if o != 'none']
    cfg = RunConfig(
        input_path=args.input,
        mode=args.mode,
        optimizations=opts,
        analyses=_names(args.analyses),
        seed=args.seed,
        report_path=args.report,
        output_path=args.output,
        strict_rp=args.strict_rp,
        repeat=args.repeat,
        iteration_factor=settings.engine.iteration_factor,
        max_iterations=settings.barrelim.max_iterations,
    )
    result = run_pipeline(cfg)
    write_outputs(result, cfg, settings.report.indent)
    if cfg.output_path is None:
        output.show(result.source)
    output.show(output.metrics_table(result.report))
    return ExitCode.OK


def _gen(args: Namespace, settings: Settings, output: Output) -> ExitCode:
    defaults = settings.corpus
    shape = CorpusShape(
        nodes=args.nodes if args.nodes is not None else defaults.nodes,
        parallel=args.pc if args.pc is not None else defaults.parallel,
        barriers=args.barriers if args.barriers is not None else defaults.barriers,
        functions=args.functions if args.functions is not None else defaults.functions,
    )
    count = args.count if args.count is not None else defaults.count
    corpus = gen_corpus(shape, args.seed, count)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, source in corpus.items():
        args.out_dir.joinpath(name).write_text(source, encoding='utf-8')
    LOG.info('Wrote %d programs to %s', len(corpus), args.out_dir)
    output.show(
        output.characteristics_table({
            name: characteristics(parse(source)) for name, source in corpus.items()
        })
    )
    return ExitCode.OK


def _fuzz(args: Namespace, settings: Settings, output: Output) -> ExitCode:
    selection = AnalysisSelection(mode=args.mode, analyses=_names(args.analyses))
    max_ops = args.max_ops if args.max_ops is not None else settings.fuzz.max_ops
    fuzzer = Fuzzer(selection.mode, selection.analyses, args.seed, max_ops)
    trials = args.trials if args.trials is not None else settings.fuzz.trials
    verdict = fuzzer.run(trials)
    if args.report is not None:
        args.report.write_text(
            verdict.model_dump_json(by_alias=True, indent=settings.report.indent),
            encoding='utf-8',
        )
    output.show(output.fuzz_summary(verdict))
    return ExitCode.OK if verdict.passed else ExitCode.MISMATCH


def _compare(args: Namespace, settings: Settings, output: Output) -> ExitCode:
    modes = (
        list(Mode)
        if args.modes.lower() == 'all'
        else TypeAdapter(list[Mode]).validate_python([
            m.upper() for m in _names(args.modes)
        ])
    )
    cfg = RunConfig(
        input_path=args.input,
        analyses=_names(args.analyses),
        iteration_factor=settings.engine.iteration_factor,
        max_iterations=settings.barrelim.max_iterations,
    )
    interp = settings.interpreter
    behaviour = (
        BehaviourCheck(
            tuple(interp.threads), interp.schedule_seeds, interp.step_cap, interp.jitter
        )
        if args.check_exec
        else None
    )
    comparison = compare_modes(cfg, modes, args.jobs, behaviour)
    if args.report is not None:
        args.report.write_text(
            comparison.model_dump_json(by_alias=True, indent=settings.report.indent),
            encoding='utf-8',
        )
    output.show(output.comparison_table(comparison))
    text = 'All modes agree' if comparison.passed else 'Modes disagree'
    output.show(output.verdict(comparison.passed, text))
    return ExitCode.OK if comparison.passed else ExitCode.MISMATCH


COMMANDS: dict[str, Callable[[Namespace, Settings, Output], ExitCode]] = {
    'run': _run,
    'gen': _gen,
    'fuzz': _fuzz,
    'compare': _compare,
}


def _log_validation_error(e: ValidationError) -> None:
    n = e.error_count()
    msg = '%d validation error%s for %s:'
    args: tuple[Any, ...] = n, 's' if n > 1 else '', e.title
    for err in e.errors():
        msg += '\n\t[%s]: %s'.expandtabs(4)
        args += '.'.join(map(str, err['loc'])), err['msg']
    LOG.exception(msg, *args)


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run a command and return its exit code."""
    just_fix_windows_console()
    args = _parser().parse_args(argv)

    _logging = LoggingConf(args.log_file, stdout=args.verbose)
    _logging.start()

    exit_status = ExitCode.OK
    try:
        settings = TomlSettings(args.config)
        LOG.info(
            'Loaded %s[file=%s]',
            cls_name(settings),
            settings.model_config.get('toml_file'),
        )
        exit_status = COMMANDS[args.command](args, settings, Output(settings))
    except ValidationError as e:
        _log_validation_error(e)
        exit_status = ExitCode.INVALID
    except ParseError:
        LOG.exception('Failed to parse the input program')
        exit_status = ExitCode.INVALID
    except RpStrictViolation:
        LOG.exception('Stale read in a strict relevant-point run')
        exit_status = ExitCode.STRICT_VIOLATION
    except HomeoError:
        LOG.exception('Engine fault')
        exit_status = ExitCode.ENGINE_FAULT
    finally:
        LOG.log(
            INFO if exit_status == ExitCode.OK else ERROR,
            'Exit with code: %d\n',
            exit_status,
            extra=HiddenOutputFilter.EXTRA,
        )
        _logging.stop()

    return exit_status


def run() -> None:
    """Main entry point."""
    exit(main())


if __name__ == '__main__':
    run()
