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

"""Reference interpreter.

Threads of a parallel region are generators interleaved by a seeded scheduler, one
statement per step. Shared writes of a thread sit in its store buffer until the
thread reaches a flush or barrier, so other threads see them only from then on.
Private variables are copied from the serial thread into each region thread and
thread 0's copies are kept when the region ends. Private variables a function
declares live for one call.
"""

import logging
import random
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Final, NamedTuple

from homeo.errors import InterpreterError
from homeo.ir.nodes import (
    TID,
    AddrOf,
    BinOp,
    Const,
    Deref,
    Expr,
    NodeKind,
    Program,
    ProgramNode,
    Sharing,
    Var,
)

LOG = logging.getLogger('homeo')

DEFAULT_STEP_CAP: Final[int] = 200_000
DEFAULT_JITTER: Final[float] = 0.3


class Addr(NamedTuple):
    """Address of a variable."""

    name: str

    def __str__(self) -> str:
        return f'&{self.name}'


type Value = int | Addr


class _Signal(Enum):
    STEP = auto()
    BARRIER = auto()


class _Return(Exception):  # noqa: N818
    pass


@dataclass
class ThreadState:
    """Per-thread view of memory."""

    tid: int
    private: dict[str, Value] = field(default_factory=dict)
    buffer: dict[str, Value] = field(default_factory=dict)
    barriers: int = 0
    in_region: bool = False


class Interpreter:
    """Executes a program and returns its final shared store."""

    def __init__(
        self,
        program: Program,
        threads: int = 2,
        seed: int = 0,
        *,
        step_cap: int = DEFAULT_STEP_CAP,
        jitter: float = DEFAULT_JITTER,
        priorities: Sequence[int] | None = None,
    ) -> None:
        """Initialize an interpreter.

        :param program: program to run
        :param threads: threads per parallel region
        :param seed: schedule seed
        :param step_cap: maximum number of executed statements
        :param jitter: probability of picking a random thread instead of the next one
        :param priorities: if given, always run the first runnable thread in this
            order (forces a schedule, ignores ``seed`` and ``jitter``)
        """
        if threads < 1:
            msg = f'Need at least one thread, got {threads}'
            raise ValueError(msg)
        self.program = program
        self.threads = threads
        self.step_cap = step_cap
        self.jitter = jitter
        self.priorities = list(priorities) if priorities is not None else None
        self.memory: dict[str, Value] = {}
        self.steps = 0
        self._rng = random.Random(seed)

    def run(self) -> dict[str, Value]:
        """Run the entry function and return the shared store sorted by name."""
        master = ThreadState(0)
        fn = self.program.functions[self.program.entry_function]
        for _ in self._call(master, fn.name):
            pass
        return dict(sorted(self.memory.items()))

    # Memory

    def _load(self, t: ThreadState, name: str) -> Value:
        if name == TID:
            return t.tid
        if not self.program.is_shared(name):
            return t.private.get(name, 0)
        if name in t.buffer:
            return t.buffer[name]
        return self.memory.get(name, 0)

    def _store(self, t: ThreadState, name: str, value: Value) -> None:
        if not self.program.is_shared(name):
            t.private[name] = value
        elif t.in_region:
            t.buffer[name] = value
        else:
            self.memory[name] = value

    def _flush(self, t: ThreadState) -> None:
        self.memory.update(t.buffer)
        t.buffer.clear()

    def _eval(self, t: ThreadState, e: Expr) -> Value:
        match e:
            case Const(value):
                return value
            case Var(name):
                return self._load(t, name)
            case AddrOf(name):
                return Addr(name)
            case Deref(name):
                return self._load(t, self._pointee(t, name))
            case BinOp(op, left, right):
                a, b = self._eval(t, left), self._eval(t, right)
                if op == '==':
                    return int(a == b)
                if isinstance(a, Addr) or isinstance(b, Addr):
                    msg = f'Operator {op!r} on an address'
                    raise InterpreterError(msg)
                match op:
                    case '<':
                        return int(a < b)
                    case '+':
                        return a + b
                    case '-':
                        return a - b
        msg = f'Cannot evaluate {e!r}'
        raise InterpreterError(msg)

    def _pointee(self, t: ThreadState, pointer: str) -> str:
        target = self._load(t, pointer)
        if not isinstance(target, Addr):
            msg = f'Dereferencing non-pointer {pointer!r} = {target!r}'
            raise InterpreterError(msg)
        return target.name

    def _truthy(self, t: ThreadState, e: Expr | None) -> bool:
        assert e is not None
        v = self._eval(t, e)
        return isinstance(v, Addr) or v != 0

    # Statements

    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.step_cap:
            msg = f'Step cap of {self.step_cap} exceeded'
            raise InterpreterError(msg)

    def _call(self, t: ThreadState, name: str) -> Iterator[_Signal]:
        body = self.program.functions[name].body
        frame = {
            n.name: t.private.get(n.name)
            for n in body.walk()
            if n.kind is NodeKind.DECL and n.sharing is Sharing.PRIVATE
        }
        try:
            yield from self._exec(t, body)
        except _Return:
            pass
        for v, old in frame.items():
            if old is None:
                t.private.pop(v, None)
            else:
                t.private[v] = old

    def _exec(self, t: ThreadState, n: ProgramNode) -> Iterator[_Signal]:  # noqa: C901, PLR0912
        match n.kind:
            case NodeKind.BLOCK:
                for s in n.stmts:
                    yield from self._exec(t, s)
                return
            case NodeKind.WHILE:
                assert n.body is not None
                while True:
                    self._tick()
                    if not self._truthy(t, n.expr):
                        break
                    yield _Signal.STEP
                    yield from self._exec(t, n.body)
                return
            case NodeKind.IF:
                self._tick()
                taken = self._truthy(t, n.expr)
                yield _Signal.STEP
                branch = n.then if taken else n.orelse
                if branch is not None:
                    yield from self._exec(t, branch)
                return
            case NodeKind.PARALLEL:
                self._region(t, n)
                return
            case NodeKind.CALL:
                self._tick()
                yield from self._call(t, n.name)
                return
            case NodeKind.RETURN:
                raise _Return
        self._tick()
        match n.kind:
            case NodeKind.ASSIGN:
                assert n.expr is not None
                value = self._eval(t, n.expr)
                target = self._pointee(t, n.name) if n.deref else n.name
                self._store(t, target, value)
            case NodeKind.DECL:
                self._store(t, n.name, 0)
            case NodeKind.FLUSH:
                self._flush(t)
            case NodeKind.BARRIER:
                self._flush(t)
                if t.in_region:
                    yield _Signal.BARRIER
                    return
        yield _Signal.STEP

    def _region(self, master: ThreadState, region: ProgramNode) -> None:
        assert region.body is not None
        states = [
            ThreadState(k, dict(master.private), in_region=True)
            for k in range(self.threads)
        ]
        runs = {k: self._exec(states[k], region.body) for k in range(self.threads)}
        waiting: set[int] = set()
        done: set[int] = set()
        last = -1
        while len(done) < self.threads:
            runnable = [k for k in range(self.threads) if k not in done | waiting]
            if not runnable:
                if done or len({states[k].barriers for k in waiting}) != 1:
                    msg = f'Barrier deadlock in region {region!r}'
                    raise InterpreterError(msg)
                waiting.clear()
                continue
            k = self._pick(runnable, last)
            last = k
            try:
                signal = next(runs[k])
            except StopIteration:
                self._flush(states[k])
                done.add(k)
                continue
            if signal is _Signal.BARRIER:
                states[k].barriers += 1
                waiting.add(k)
        if waiting:
            msg = f'Barrier deadlock in region {region!r}'
            raise InterpreterError(msg)
        master.private = {
            name: v for name, v in states[0].private.items() if name != TID
        }

    def _pick(self, runnable: list[int], last: int) -> int:
        if self.priorities is not None:
            for k in self.priorities:
                if k in runnable:
                    return k
            return runnable[0]
        if self._rng.random() < self.jitter:
            return self._rng.choice(runnable)
        return next((k for k in runnable if k > last), runnable[0])


def interpret(program: Program, threads: int = 2, seed: int = 0) -> dict[str, Value]:
    """Run ``program`` with default limits and return its final shared store."""
    return Interpreter(program, threads, seed).run()


def render_store(store: dict[str, Value]) -> dict[str, str | int]:
    """JSON-friendly store."""
    return {k: str(v) if isinstance(v, Addr) else v for k, v in store.items()}
