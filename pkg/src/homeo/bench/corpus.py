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

"""Synthetic benchmark programs.

Generated programs are race free, so every schedule yields the same final shared
store: inside a region, shared variables are only written by thread 0, and a shared
variable is never both written and read between two barriers. Each region works on
its own private temporaries so adjacent regions are candidates for merging.
"""

import logging
import random
from dataclasses import dataclass, field
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from homeo.analysis.phase import compute_phase_info
from homeo.analysis.supergraph import SuperGraph
from homeo.ir.nodes import NodeKind, Program

LOG = logging.getLogger('homeo')


class CorpusShape(BaseModel):
    """Requested size of a generated program."""

    model_config = ConfigDict(frozen=True)

    nodes: int = Field(default=100, ge=40, description='Approximate node count')
    parallel: int = Field(default=2, ge=0, description='Parallel regions')
    barriers: int = Field(default=4, ge=0, description='Explicit barriers')
    functions: int = Field(
        default=2, ge=0, description='Helper functions with barriers (at most)'
    )
    shared: int = Field(default=4, ge=1, le=26, description='Shared variables')


@dataclass
class _Phase:
    written: set[str] = field(default_factory=set)
    read: set[str] = field(default_factory=set)


class _Writer:
    """Source lines with a running node count."""

    def __init__(self) -> None:
        self.lines: list[str] = []
        self.depth = 1
        self.nodes = 0

    def emit(self, line: str, nodes: int = 1) -> None:
        self.lines.append('    ' * self.depth + line)
        self.nodes += nodes

    def open(self, line: str, nodes: int) -> None:
        self.emit(line + ' {', nodes)
        self.depth += 1

    def close(self, tail: str = '') -> None:
        self.depth -= 1
        self.emit('}' + tail, 0)


class Generator:
    """Deterministic program generator for one seed."""

    def __init__(self, shape: CorpusShape, seed: int) -> None:
        """Initialize the generator.

        :param shape: requested size
        :param seed: random seed
        """
        self.shape = shape
        self.rng = random.Random(seed)
        self.shared = [f's{i}' for i in range(shape.shared)]
        self.temps = ['t0', 't1', 't2']
        self.helpers = min(shape.functions, shape.barriers // 4) if shape.parallel else 0

    def generate(self) -> str:
        """Return the source text of a new program."""
        shape = self.shape
        main = _Writer()
        privates = [*self.temps, 'p']
        for r in range(shape.parallel):
            privates += [f'r{r}a', f'r{r}b', f'c{r}']
        privates += [f'h{i}a' for i in range(self.helpers)]
        for s in self.shared:
            main.emit(f'shared {s};')
        for v in privates:
            main.emit(f'private {v};')
        main.emit('p = &s0;')
        main.emit('call serial();')

        helpers = [self._helper(i) for i in range(self.helpers)]
        serial = self._serial_helper()
        fixed = (
            main.nodes
            + 4 * shape.parallel
            + 3 * (len(helpers) + 2)
            + sum(h.nodes for h in helpers)
            + serial.nodes
        )
        budget = max(0, shape.nodes - fixed)
        region_budget = budget * 4 // 5 // max(1, shape.parallel)
        barriers = shape.barriers - 2 * len(helpers)
        serial_budget = budget - region_budget * shape.parallel

        self._serial_code(main, serial_budget // 2)
        for r in range(shape.parallel):
            share = barriers // shape.parallel + (r < barriers % shape.parallel)
            main.open('parallel', 4)
            self._region_code(main, r, region_budget, share)
            main.close()
            if r + 1 < shape.parallel and self.rng.random() < 0.5:  # noqa: PLR2004
                for _ in range(self.rng.randint(1, 2)):
                    t = self.rng.choice(self.temps)
                    main.emit(f'{t} = {self.rng.randint(0, 9)};')
        self._serial_code(main, serial_budget - serial_budget // 2)
        main.emit('call serial();')

        chunks = ['func main() {', *main.lines, '}']
        for i, h in enumerate(helpers):
            chunks += ['', f'func h{i}() {{', *h.lines, '}']
        chunks += ['', 'func serial() {', *serial.lines, '}']
        return '\n'.join(chunks) + '\n'

    # Expressions

    def _atom(self, readable: list[str], privates: list[str]) -> str:
        pool = [str(self.rng.randint(0, 9)), *privates, *readable]
        return self.rng.choice(pool)

    def _expr(self, readable: list[str], privates: list[str]) -> str:
        a = self._atom(readable, privates)
        if self.rng.random() < 0.5:  # noqa: PLR2004
            return a
        op = self.rng.choice(['+', '-'])
        return f'{a} {op} {self._atom(readable, privates)}'

    def _uses(self, expr: str) -> set[str]:
        return {w for w in expr.replace('*', ' ').split() if w in self.shared}

    # Serial code

    def _serial_code(self, w: _Writer, budget: int) -> None:
        start = w.nodes
        privates = self.temps
        while w.nodes - start < budget:
            roll = self.rng.random()
            if roll < 0.5:  # noqa: PLR2004
                target = self.rng.choice(self.shared + self.temps)
                w.emit(f'{target} = {self._expr(self.shared, privates)};')
            elif roll < 0.65:  # noqa: PLR2004
                w.open(f'if ({self._atom(self.shared, privates)} < 5)', 2)
                w.emit(f'{self.rng.choice(self.shared)} = {self._expr(self.shared, privates)};')
                w.close()
            elif roll < 0.75:  # noqa: PLR2004
                w.emit('t2 = 0;')
                w.open('while (t2 < 3)', 2)
                w.emit(f'{self.rng.choice(self.shared)} = {self._expr(self.shared, privates)};')
                w.emit('t2 = t2 + 1;')
                w.close()
            elif roll < 0.85:  # noqa: PLR2004
                w.emit(f'*p = {self._expr(self.shared, privates)};')
            else:
                w.emit('call serial();')

    def _serial_helper(self) -> _Writer:
        w = _Writer()
        a, b = self.rng.sample(self.shared, 2) if len(self.shared) > 1 else (self.shared * 2)
        w.open(f'if (5 < {a})', 2)
        w.emit(f'{b} = {b} - 1;')
        w.emit('return;')
        w.close()
        w.emit(f'{a} = {a} + 1;')
        return w

    # Region code

    def _region_code(self, w: _Writer, r: int, budget: int, barriers: int) -> None:
        start = w.nodes
        privates = [f'r{r}a', f'r{r}b']
        readonly = [*self.temps, 'tid']
        phase = _Phase()
        while w.nodes - start < budget:
            roll = self.rng.random()
            left = budget - (w.nodes - start)
            if barriers >= 2 and roll < 0.1 and left > 8:  # noqa: PLR2004
                barriers -= 2
                phase = self._loop(w, f'c{r}', privates, readonly)
            elif barriers and roll < 0.25:  # noqa: PLR2004
                w.emit('barrier;')
                barriers -= 1
                phase = _Phase()
            elif self.helpers and roll < 0.32:  # noqa: PLR2004
                w.emit(f'call h{self.rng.randrange(self.helpers)}();')
                phase = _Phase()
            else:
                self._region_stmt(w, phase, privates, readonly)
        for _ in range(barriers):
            w.emit('barrier;')

    def _loop(
        self, w: _Writer, counter: str, privates: list[str], readonly: list[str]
    ) -> _Phase:
        w.emit(f'{counter} = 0;')
        w.open(f'while ({counter} < {self.rng.randint(1, 3)})', 2)
        w.emit('barrier;')
        phase = _Phase()
        for _ in range(self.rng.randint(1, 3)):
            self._region_stmt(w, phase, privates, readonly)
        w.emit('barrier;')
        w.emit(f'{counter} = {counter} + 1;')
        w.close()
        return _Phase()

    def _region_stmt(
        self, w: _Writer, phase: _Phase, privates: list[str], readonly: list[str]
    ) -> None:
        readable = [s for s in self.shared if s not in phase.written]
        roll = self.rng.random()
        if roll < 0.45:  # noqa: PLR2004
            expr = self._expr(readable, [*privates, *readonly])
            if 's0' in readable and self.rng.random() < 0.1:  # noqa: PLR2004
                expr = '*p'
                phase.read.add('s0')
            phase.read |= self._uses(expr)
            w.emit(f'{self.rng.choice(privates)} = {expr};')
            return
        writable = [s for s in self.shared if s not in phase.read]
        if roll < 0.8 and writable:  # noqa: PLR2004
            target = self.rng.choice(writable)
            expr = self._expr(readable, [*privates, *readonly])
            phase.read |= self._uses(expr)
            if target in phase.read:
                return
            phase.written.add(target)
            w.open('if (tid == 0)', 2)
            if target == 's0' and self.rng.random() < 0.3:  # noqa: PLR2004
                w.emit(f'*p = {expr};')
            else:
                w.emit(f'{target} = {expr};')
            w.close()
        elif roll < 0.9:  # noqa: PLR2004
            w.emit('flush;')
        else:
            cond = self._atom(readable, [*privates, *readonly])
            phase.read |= self._uses(cond)
            w.open(f'if ({cond} < 4)', 3)
            w.emit(f'{privates[0]} = {privates[1]} + 1;')
            w.close(' else {')
            w.depth += 1
            w.emit(f'{privates[1]} = {privates[0]};')
            w.close()

    def _helper(self, i: int) -> _Writer:
        w = _Writer()
        w.emit('barrier;')
        phase = _Phase()
        for _ in range(self.rng.randint(2, 4)):
            self._region_stmt(w, phase, [f'h{i}a'], [*self.temps, 'tid'])
        w.emit('barrier;')
        return w


def generate(shape: CorpusShape, seed: int = 0) -> str:
    """Source text of one generated program."""
    return Generator(shape, seed).generate()


def gen_corpus(shape: CorpusShape, seed: int = 0, count: int = 1) -> dict[str, str]:
    """Named programs for consecutive seeds."""
    corpus = {f'prog_{seed + k:04d}.hc': generate(shape, seed + k) for k in range(count)}
    LOG.info('Generated %d programs for %s', count, shape)
    return corpus


def characteristics(program: Program) -> dict[str, Any]:
    """Node, region, explicit barrier and phase counts of a program."""
    nodes = program.nodes()
    graph = SuperGraph(program)
    return {
        'nodes': len(nodes),
        'parallelConstructs': sum(n.kind is NodeKind.PARALLEL for n in nodes),
        'barriers': sum(n.kind is NodeKind.BARRIER and not n.implicit for n in nodes),
        'phases': len(compute_phase_info(program, graph).phases),
    }
