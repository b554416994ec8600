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

"""Randomized transformation traces checked against from-scratch analyses.

A trace interleaves elementary transformations with queries. At every query the
stabilized abstractions must equal those of a fresh stabilizer on a snapshot of the
current program. Failing traces are shrunk before they are reported.
"""

import logging
import random
from dataclasses import dataclass
from enum import StrEnum
from typing import Any, Final, override

from pydantic import BaseModel, ConfigDict, Field
from pydantic.alias_generators import to_camel

from homeo.analysis.callgraph import CallGraph
from homeo.analysis.dataflow import DataflowAnalysis
from homeo.analysis.registry import create
from homeo.errors import HomeoError, ParseError, TransformError
from homeo.ir.nodes import TID, NodeKind, Program, ProgramNode
from homeo.ir.parser import parse, parse_statements
from homeo.ir.transform import Slot, insert_at, remove_at, replace_at, replace_slot
from homeo.stabilizer import BaseAnalysis, Mode, Stabilizer, Trigger
from homeo.util import cls_name

from .corpus import CorpusShape, generate

LOG = logging.getLogger('homeo')

DEFAULT_MAX_OPS: Final[int] = 30
QUERY_RATE: Final[float] = 0.3
FUZZ_SHAPE: Final[CorpusShape] = CorpusShape(
    nodes=60, parallel=2, barriers=4, functions=1, shared=3
)
HOST_SLOTS: Final[dict[NodeKind, tuple[Slot, ...]]] = {
    NodeKind.IF: (Slot.THEN, Slot.ORELSE),
    NodeKind.WHILE: (Slot.BODY,),
}


class OpKind(StrEnum):
    """Trace step."""

    INSERT = 'insert'
    REMOVE = 'remove'
    REPLACE = 'replace'
    REINSERT = 'reinsert'
    REPLACE_SLOT = 'replace-slot'
    QUERY = 'query'


@dataclass(frozen=True)
class Op:
    """One trace step.

    ``block`` and ``index`` are reduced modulo the blocks and positions available
    when the step is replayed, so every subsequence of a trace stays replayable.
    """

    kind: OpKind
    block: int = 0
    index: int = 0
    payload: str = ''

    @override
    def __str__(self) -> str:
        if self.kind is OpKind.QUERY:
            return str(self.kind)
        text = f'{self.kind}@b{self.block}.i{self.index}'
        return f'{text} {self.payload!r}' if self.payload else text


class Failure(BaseModel):
    """A diverging trace."""

    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    trial: int
    source: str
    trace: list[str]
    detail: str


class Verdict(BaseModel):
    """Outcome of a fuzzing campaign."""

    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    mode: str
    analyses: list[str]
    trials: int = Field(default=0, ge=0)
    operations: int = Field(default=0, ge=0)
    queries: int = Field(default=0, ge=0)
    divergences: int = Field(default=0, ge=0)
    first_failure: Failure | None = None

    @property
    def passed(self) -> bool:
        """Whether no trace diverged."""
        return self.divergences == 0


def blocks_in_order(program: Program) -> list[ProgramNode]:
    """Attached blocks in source order."""
    return [
        n
        for fn in program.functions.values()
        for n in fn.body.walk()
        if n.kind is NodeKind.BLOCK
    ]


def slot_hosts(program: Program) -> list[ProgramNode]:
    """Attached statements with replaceable body slots in source order."""
    return [
        n
        for fn in program.functions.values()
        for n in fn.body.walk()
        if n.kind in HOST_SLOTS
    ]


def _positions(block: ProgramNode, *, inserting: bool) -> range:
    n = len(block.stmts)
    region_body = block.parent is not None and block.parent.kind is NodeKind.PARALLEL
    lo = 1 if region_body else 0
    hi = n - 1 if region_body else n
    return range(lo, hi + 1 if inserting else hi)


def _payload_fits(program: Program, payload: ProgramNode, *, in_region: bool) -> bool:
    """Whether barriers and calls of a payload end up where they make sense."""
    if not in_region and payload.contains(NodeKind.BARRIER):
        return False
    for n in payload.walk():
        if n.kind is not NodeKind.CALL:
            continue
        body = program.functions[n.name].body
        if n.name == program.entry_function:
            return False
        if in_region and body.contains(NodeKind.PARALLEL):
            return False
        if not in_region and body.contains(NodeKind.BARRIER):
            return False
    return True


def apply_op(program: Program, op: Op) -> bool:
    """Replay one transformation step.

    :return: whether the program changed; steps that do not fit are skipped
    """
    if op.kind is OpKind.REPLACE_SLOT:
        return _replace_slot(program, op)
    blocks = blocks_in_order(program)
    if op.kind is OpKind.QUERY or not blocks:
        return False
    block = blocks[op.block % len(blocks)]
    in_region = program.region_of(block) is not None
    positions = _positions(block, inserting=op.kind is OpKind.INSERT)
    if not positions:
        return False
    idx = positions[op.index % len(positions)]
    try:
        match op.kind:
            case OpKind.REMOVE:
                remove_at(program, block, idx)
            case OpKind.REINSERT:
                node = block.stmts[idx]
                remove_at(program, block, idx)
                insert_at(program, block, idx, node)
            case OpKind.INSERT | OpKind.REPLACE:
                payload = parse_statements(op.payload, program, in_parallel=in_region)[0]
                if not _payload_fits(program, payload, in_region=in_region):
                    return False
                if op.kind is OpKind.INSERT:
                    insert_at(program, block, idx, payload)
                else:
                    replace_at(program, block, idx, payload)
    except (TransformError, ParseError) as e:
        LOG.debug('Skipped %s: %s', op, e)
        return False
    return True


def _replace_slot(program: Program, op: Op) -> bool:
    """Swap a body slot of an ``if`` or ``while`` for a new block.

    An empty payload empties the slot, which only fits an else-branch.
    """
    hosts = slot_hosts(program)
    if not hosts:
        return False
    host = hosts[op.block % len(hosts)]
    slots = HOST_SLOTS[host.kind]
    slot = slots[op.index % len(slots)]
    in_region = program.region_of(host) is not None
    try:
        block: ProgramNode | None = None
        if op.payload:
            block = program.make(NodeKind.BLOCK)
            block.stmts = parse_statements(op.payload, program, in_parallel=in_region)
            for s in block.stmts:
                s.parent = block
            if not _payload_fits(program, block, in_region=in_region):
                return False
        replace_slot(program, host, slot, block)
    except (TransformError, ParseError) as e:
        LOG.debug('Skipped %s: %s', op, e)
        return False
    return True


def _facts(a: BaseAnalysis, program: Program) -> Any:  # noqa: ANN401
    if isinstance(a, DataflowAnalysis):
        return a.dump()
    if isinstance(a, CallGraph):
        return a.snapshot(), sorted(f for f in program.functions if a.is_recursive(f))
    msg = f'No fact dump for {cls_name(a)}'
    raise TypeError(msg)


def check(homeo: Stabilizer, names: list[str]) -> str | None:
    """Compare every abstraction with a from-scratch computation.

    :return: what differs, or ``None``
    """
    if homeo.mode.trigger is Trigger.RELEVANT:
        homeo.stabilize_now()
    oracle = Stabilizer(homeo.program.snapshot(), Mode.EGINV)
    for a in create(names):
        oracle.register(a)
    if set(homeo.graph.nodes) != set(oracle.graph.nodes):
        return 'super-graph nodes differ'
    if homeo.graph.edges() != oracle.graph.edges():
        missing = oracle.graph.edges() - homeo.graph.edges()
        extra = homeo.graph.edges() - oracle.graph.edges()
        return f'super-graph edges differ: missing {sorted(missing)}, extra {sorted(extra)}'
    if homeo.phase.info.to_json() != oracle.phase.info.to_json():
        return 'phase information differs'
    for name in names:
        got = _facts(homeo.get(name), homeo.program)
        want = _facts(oracle.get(name), oracle.program)
        if got != want:
            return f'{name} differs from a fresh computation'
    return None


def replay(source: str, ops: list[Op], mode: Mode, names: list[str]) -> str | None:
    """Run a trace on a fresh parse of ``source``.

    :return: the first divergence or engine fault, or ``None``
    """
    program = parse(source)
    homeo = Stabilizer(program, mode)
    try:
        for a in create(names):
            homeo.register(a)
        for op in ops:
            if op.kind is OpKind.QUERY:
                if (diff := check(homeo, names)) is not None:
                    return diff
            else:
                apply_op(program, op)
        return check(homeo, names)
    except HomeoError as e:
        return f'{cls_name(e)}: {e}'


def minimize(source: str, ops: list[Op], mode: Mode, names: list[str]) -> list[Op]:
    """Drop chunks of a failing trace as long as it keeps failing."""
    chunk = max(1, len(ops) // 2)
    while chunk >= 1:
        start = 0
        while start < len(ops):
            candidate = ops[:start] + ops[start + chunk :]
            if replay(source, candidate, mode, names) is not None:
                ops = candidate
            else:
                start += chunk
        chunk //= 2
    return ops


class Fuzzer:
    """Random traces for one mode and analysis selection."""

    def __init__(
        self,
        mode: Mode,
        analyses: list[str],
        seed: int = 0,
        max_ops: int = DEFAULT_MAX_OPS,
        shape: CorpusShape = FUZZ_SHAPE,
    ) -> None:
        """Initialize a fuzzer.

        :param mode: stabilization mode under test
        :param analyses: names of the analyses to register
        :param seed: base seed of programs and traces
        :param max_ops: trace length
        :param shape: size of the generated programs
        """
        self.mode = mode
        self.analyses = analyses
        self.seed = seed
        self.max_ops = max_ops
        self.shape = shape
        LOG.info(
            'Initialized %s[mode=%s,analyses=%s,seed=%d]',
            cls_name(self),
            mode,
            ','.join(analyses),
            seed,
        )

    def run(self, trials: int) -> Verdict:
        """Run ``trials`` traces and stop at the first divergence."""
        verdict = Verdict(mode=str(self.mode), analyses=self.analyses)
        for k in range(trials):
            verdict.trials += 1
            failure = self.trial(k, verdict)
            if failure is not None:
                verdict.divergences += 1
                verdict.first_failure = failure
                LOG.error('Divergence in trial %d: %s', k, failure.detail)
                break
        LOG.info(
            'Fuzzing done: %d trials, %d operations, %d queries, %d divergences',
            verdict.trials,
            verdict.operations,
            verdict.queries,
            verdict.divergences,
        )
        return verdict

    def trial(self, k: int, verdict: Verdict | None = None) -> Failure | None:
        """Run one random trace; return a minimized failure if it diverges."""
        rng = random.Random(f'{self.seed}:{k}')
        source = generate(self.shape, self.seed + k)
        program = parse(source)
        homeo = Stabilizer(program, self.mode)
        ops: list[Op] = []
        detail: str | None = None
        try:
            for a in create(self.analyses):
                homeo.register(a)
            for _ in range(self.max_ops):
                op = self.random_op(rng, program)
                ops.append(op)
                if op.kind is OpKind.QUERY:
                    if verdict is not None:
                        verdict.queries += 1
                    detail = check(homeo, self.analyses)
                    if detail is not None:
                        break
                elif apply_op(program, op) and verdict is not None:
                    verdict.operations += 1
            else:
                ops.append(Op(OpKind.QUERY))
                detail = check(homeo, self.analyses)
        except HomeoError as e:
            detail = f'{cls_name(e)}: {e}'
        if detail is None:
            return None
        trace = minimize(source, ops, self.mode, self.analyses)
        return Failure(trial=k, source=source, trace=[str(op) for op in trace], detail=detail)

    def random_op(self, rng: random.Random, program: Program) -> Op:
        """A transformation or query fitting the current program."""
        if rng.random() < QUERY_RATE:
            return Op(OpKind.QUERY)
        blocks = blocks_in_order(program)
        b = rng.randrange(len(blocks))
        kind = rng.choice([
            OpKind.INSERT,
            OpKind.INSERT,
            OpKind.REMOVE,
            OpKind.REPLACE,
            OpKind.REINSERT,
            OpKind.REPLACE_SLOT,
        ])
        payload = ''
        if kind in {OpKind.INSERT, OpKind.REPLACE}:
            in_region = program.region_of(blocks[b]) is not None
            payload = self.random_payload(rng, program, in_region=in_region)
        elif kind is OpKind.REPLACE_SLOT and (hosts := slot_hosts(program)):
            b = rng.randrange(len(hosts))
            in_region = program.region_of(hosts[b]) is not None
            # an empty payload drops an else-branch
            if rng.random() < 0.8:  # noqa: PLR2004
                payload = self.random_payload(rng, program, in_region=in_region)
        return Op(kind, b, rng.randrange(1 << 16), payload)

    @staticmethod
    def random_payload(rng: random.Random, program: Program, *, in_region: bool) -> str:
        """Source of a random statement."""
        names = sorted(program.variables() - {TID}) or ['x']
        a, b = rng.choice(names), rng.choice(names)
        options = [
            f'{a} = {b} + 1;',
            f'{a} = {b};',
            f'{a} = &{b};',
            f'*{a} = {b};',
            'flush;',
            f'if ({b} < 3) {{ {a} = 1; }} else {{ {b} = {a}; }}',
            f'while ({a} < 1) {{ {b} = {a}; }}',
            f'private fz{rng.randrange(3)};',
        ]
        callees = [f for f in sorted(program.functions) if f != program.entry_function]
        if callees:
            options.append(f'call {rng.choice(callees)}();')
        if in_region:
            options += ['barrier;', 'barrier;']
        else:
            options.append(f'parallel {{ {a} = {b}; barrier; {b} = 2; }}')
        return rng.choice(options)
