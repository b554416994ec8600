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

import pytest
from homeo.bench.interpreter import Addr, Interpreter, interpret, render_store
from homeo.errors import InterpreterError
from homeo.ir.parser import parse

from tests.conftest import NEEDED_BARRIER, POINTERS, STRAIGHT

# Thread 1 reads ``a`` without waiting for thread 0
RACY = """\
func main() {
    shared a;
    shared b;
    parallel {
        if (tid == 0) {
            a = 1;
            flush;
        }
        if (tid == 1) {
            b = a;
        }
    }
}
"""


def test_serial_program() -> None:
    assert interpret(parse(STRAIGHT)) == {'x': 2}


def test_pointers() -> None:
    assert interpret(parse(POINTERS)) == {'a': 0, 'b': 1}


@pytest.mark.parametrize('threads', [1, 2, 4])
@pytest.mark.parametrize('seed', range(3))
def test_barrier_publishes_writes(threads: int, seed: int) -> None:
    assert interpret(parse(NEEDED_BARRIER), threads, seed) == {'a': 1, 'b': 2}


@pytest.mark.parametrize(('priorities', 'b'), [([0, 1], 1), ([1, 0], 0)])
def test_forced_schedule(priorities: list[int], b: int) -> None:
    store = Interpreter(parse(RACY), 2, priorities=priorities).run()
    assert store == {'a': 1, 'b': b}


def test_private_copies_of_thread_zero_survive() -> None:
    source = """\
func main() {
    shared x;
    private t;
    t = 5;
    parallel {
        t = t + tid;
    }
    x = t;
}
"""
    assert interpret(parse(source), 3) == {'x': 5}


def test_step_cap() -> None:
    program = parse('func main() { shared x; while (1) { x = x + 1; } }')
    with pytest.raises(InterpreterError, match='Step cap of 50 exceeded'):
        Interpreter(program, step_cap=50).run()


def test_barrier_deadlock() -> None:
    program = parse('func main() { parallel { if (tid == 0) { barrier; } } }')
    with pytest.raises(InterpreterError, match='Barrier deadlock'):
        interpret(program, 2)
    # A single thread never waits for anybody
    assert interpret(program, 1) == {}


def test_deref_of_integer() -> None:
    program = parse('func main() { shared x; private p; p = 1; *p = 2; }')
    with pytest.raises(InterpreterError, match='non-pointer'):
        interpret(program)


def test_no_threads() -> None:
    with pytest.raises(ValueError, match='at least one thread'):
        Interpreter(parse(STRAIGHT), 0)


def test_render_store() -> None:
    assert render_store({'p': Addr('a'), 'x': 3}) == {'p': '&a', 'x': 3}
