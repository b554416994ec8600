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

"""Optimization runs, their metrics and cross-mode comparison."""

import hashlib
import json
import logging
import time
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal, Self

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    FilePath,
    field_validator,
    model_validator,
)
from pydantic.alias_generators import to_camel

from homeo.analysis.callgraph import CallGraph
from homeo.analysis.dataflow import DEFAULT_ITERATION_FACTOR, DataflowAnalysis
from homeo.analysis.registry import DATAFLOW, REGISTRY, create
from homeo.barrelim import DEFAULT_MAX_ITERATIONS, BarrElim, OptReport
from homeo.ir.nodes import Program
from homeo.ir.parser import parse
from homeo.ir.printer import print_program
from homeo.logging_conf import attach_queue, current_queue
from homeo.stabilizer import Mode, Stabilizer
from homeo.util import geomean

from .corpus import characteristics
from .interpreter import DEFAULT_JITTER, DEFAULT_STEP_CAP, Interpreter, render_store

LOG = logging.getLogger('homeo')

type Optimization = Literal['barrelim']


class AnalysisSelection(BaseModel):
    """A stabilization mode and the analyses to register."""

    model_config = ConfigDict(
        alias_generator=to_camel, populate_by_name=True, frozen=True
    )

    mode: Mode = Mode.LZUPD
    analyses: list[str] = Field(default_factory=lambda: list(DATAFLOW))

    # noinspection PyNestedDecorators
    @field_validator('mode', mode='before')
    @classmethod
    def validate_mode(cls, v: Any) -> Any:  # noqa: ANN401
        return v.upper() if isinstance(v, str) else v

    # noinspection PyNestedDecorators
    @field_validator('analyses')
    @classmethod
    def validate_analyses(cls, v: list[str]) -> list[str]:
        unknown = [a for a in v if a not in REGISTRY]
        if unknown:
            msg = (
                f'unknown analyses: {', '.join(unknown)}. '
                f'Valid analyses are: {', '.join(REGISTRY)}.'
            )
            raise ValueError(msg)
        return list(dict.fromkeys(v))

    @property
    def registered(self) -> list[str]:
        """Analyses to register: the selection plus the call graph."""
        extra = [] if CallGraph.name in self.analyses else [CallGraph.name]
        return [*self.analyses, *extra]


class RunConfig(AnalysisSelection):
    """Validated configuration of one pipeline run."""

    input_path: FilePath
    optimizations: list[Optimization] = Field(default_factory=lambda: ['barrelim'])
    seed: int = 0
    report_path: Path | None = None
    output_path: Path | None = None
    strict_rp: bool = False
    repeat: int = Field(default=1, ge=1)
    iteration_factor: int = Field(default=DEFAULT_ITERATION_FACTOR, ge=1)
    max_iterations: int = Field(default=DEFAULT_MAX_ITERATIONS, ge=1)


class MetricsReport(BaseModel):
    """What one run did and what it cost."""

    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    input: str
    mode: Mode
    analyses: dict[str, dict[str, int]]
    optimization: dict[str, dict[str, int]] = Field(default_factory=dict)
    seed: int = 0
    wall_clock: dict[str, float]
    repeat: int = Field(ge=1)
    transformations: int = Field(ge=0)
    characteristics: dict[str, Any]
    opt_report: OptReport | None = None
    digest: str

    @model_validator(mode='after')
    def check_counters(self) -> Self:
        for name, m in [*self.analyses.items(), *self.optimization.items()]:
            if m['computeCalls'] + m['handleUpdateCalls'] != m['stabilizationTriggers']:
                msg = f'inconsistent stabilization counters for {name!r}: {m}'
                raise ValueError(msg)
        return self

    def without_timing(self) -> dict[str, Any]:
        """Report contents that must not depend on the machine."""
        return self.model_dump(by_alias=True, mode='json', exclude={'wall_clock'})


@dataclass
class PipelineResult:
    """Report and optimized source of a run."""

    report: MetricsReport
    source: str


def flow_facts(homeo: Stabilizer) -> dict[str, Any]:
    """Canonical dump of all stable abstractions."""
    homeo.stabilize_now()
    facts: dict[str, Any] = {'phase': homeo.phase.info.to_json()}
    for name, a in sorted(homeo.analyses.items()):
        if isinstance(a, DataflowAnalysis):
            facts[name] = a.dump()
        elif isinstance(a, CallGraph):
            facts[name] = a.snapshot()
    return facts


def digest(facts: dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON of a fact dump."""
    blob = json.dumps(facts, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(blob.encode()).hexdigest()


def _run_once(
    cfg: RunConfig, source: str
) -> tuple[Stabilizer, OptReport | None, dict[str, dict[str, int]], dict[str, float]]:
    clock = time.perf_counter
    t0 = clock()
    program = parse(source)
    t1 = clock()
    homeo = Stabilizer(program, cfg.mode, strict=cfg.strict_rp)
    for a in create(cfg.registered):
        if isinstance(a, DataflowAnalysis):
            a.iteration_factor = cfg.iteration_factor
        homeo.register(a)
    t2 = clock()
    report = None
    if 'barrelim' in cfg.optimizations:
        report = BarrElim(homeo, cfg.max_iterations).run()
    t3 = clock()
    return homeo, report, homeo.metrics(), {
        'parse': t1 - t0,
        'register': t2 - t1,
        'optimize': t3 - t2,
        'total': t3 - t0,
    }


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Parse, register the analyses, optimize and report.

    :raise ParseError: if the input does not parse
    :raise RpStrictViolation: on a stale read in a strict relevant-point run
    :raise HomeoError: on any other engine fault
    """
    source = cfg.input_path.read_text(encoding='utf-8')
    timings: list[dict[str, float]] = []
    for k in range(cfg.repeat):
        homeo, opt, spent, t = _run_once(cfg, source)
        timings.append(t)
        LOG.debug('Run %d of %s: %s', k + 1, cfg.input_path, t)
    before = characteristics(parse(source))
    # the fact dump stabilizes whatever is still pending
    facts = flow_facts(homeo)
    report = MetricsReport(
        input=str(cfg.input_path),
        mode=cfg.mode,
        analyses=homeo.metrics(),
        optimization=spent,
        seed=cfg.seed,
        wall_clock={key: geomean(t[key] for t in timings) for key in timings[0]},
        repeat=cfg.repeat,
        transformations=homeo.transformations,
        characteristics=before,
        opt_report=opt,
        digest=digest(facts),
    )
    LOG.info(
        'Finished %s in mode %s: %d transformations, digest %s',
        cfg.input_path,
        cfg.mode,
        homeo.transformations,
        report.digest[:12],
    )
    return PipelineResult(report, print_program(homeo.program))


def write_outputs(
    result: PipelineResult, cfg: RunConfig, indent: int | None = 2
) -> None:
    """Write the report and the optimized source where the configuration says."""
    if cfg.report_path is not None:
        cfg.report_path.write_text(
            result.report.model_dump_json(by_alias=True, indent=indent) + '\n',
            encoding='utf-8',
        )
        LOG.info('Wrote report: %s', cfg.report_path)
    if cfg.output_path is not None:
        cfg.output_path.write_text(result.source, encoding='utf-8')
        LOG.info('Wrote optimized program: %s', cfg.output_path)


@dataclass(frozen=True)
class BehaviourCheck:
    """Differential execution of two programs over several schedules."""

    threads: Sequence[int] = (2, 3, 4)
    seeds: int = 8
    step_cap: int = DEFAULT_STEP_CAP
    jitter: float = DEFAULT_JITTER

    def stores(self, program: Program) -> list[dict[str, str | int]]:
        """Final shared stores for every thread count and schedule seed."""
        return [
            render_store(
                Interpreter(
                    program, t, s, step_cap=self.step_cap, jitter=self.jitter
                ).run()
            )
            for t in self.threads
            for s in range(self.seeds)
        ]

    def same(self, original: Program, optimized: Program) -> bool:
        """Whether both programs end in the same stores under the same schedules."""
        pairs = zip(self.stores(original), self.stores(optimized), strict=True)
        for k, (a, b) in enumerate(pairs):
            if a != b:
                LOG.error('Schedule %d ends differently: %s != %s', k, a, b)
                return False
        return True


class Comparison(BaseModel):
    """Runs of the same input under several modes."""

    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    reports: list[MetricsReport]
    same_digest: bool
    same_source: bool
    same_behaviour: bool | None = None

    @property
    def passed(self) -> bool:
        """Whether all modes agree (and the optimized program behaves the same)."""
        return self.same_digest and self.same_source and self.same_behaviour is not False


def compare_modes(
    cfg: RunConfig,
    modes: Iterable[Mode] = tuple(Mode),
    jobs: int = 1,
    behaviour: BehaviourCheck | None = None,
) -> Comparison:
    """Run ``cfg`` under every mode and compare digests and optimized sources.

    :param cfg: base configuration; its mode is replaced
    :param modes: modes to run
    :param jobs: worker processes
    :param behaviour: if given, also run original and optimized program
    """
    configs = [cfg.model_copy(update={'mode': m}) for m in modes]
    if jobs > 1:
        que = current_queue()
        pool = (
            ProcessPoolExecutor(jobs)
            if que is None
            else ProcessPoolExecutor(
                jobs, initializer=attach_queue, initargs=(que, LOG.getEffectiveLevel())
            )
        )
        with pool:
            results = list(pool.map(run_pipeline, configs))
    else:
        results = [run_pipeline(c) for c in configs]
    comparison = Comparison(
        reports=[r.report for r in results],
        same_digest=len({r.report.digest for r in results}) == 1,
        same_source=len({r.source for r in results}) == 1,
    )
    if behaviour is not None and results:
        original = parse(cfg.input_path.read_text(encoding='utf-8'))
        comparison.same_behaviour = behaviour.same(original, parse(results[0].source))
    if not comparison.passed:
        LOG.error(
            'Modes disagree on %s: digest %s, source %s, behaviour %s',
            cfg.input_path,
            comparison.same_digest,
            comparison.same_source,
            comparison.same_behaviour,
        )
    return comparison

