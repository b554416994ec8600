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

import random
from typing import ClassVar, override

import pytest
from homeo.analysis.dataflow import DataflowAnalysis, Worklist
from homeo.analysis.instances import (
    CopyPropagation,
    Liveness,
    PointsTo,
    ReachingDefinitions,
)
from homeo.analysis.lattice import Lattice, MayLattice, MustLattice, Value, render
from homeo.analysis.registry import DATAFLOW
from homeo.bench.corpus import CorpusShape, generate
from homeo.bench.fuzz import Fuzzer, OpKind, apply_op
from homeo.bench.interpreter import Interpreter
from homeo.errors import IdfaError
from homeo.ir.nodes import NodeKind, ProgramNode
from homeo.ir.parser import parse, parse_statements
from homeo.ir.transform import insert_at, remove_at
from homeo.stabilizer import Mode, Stabilizer

from tests.conftest import (
    LOOP_BARRIER,
    NEEDED_BARRIER,
    POINTERS,
    labeled,
    naive_solve,
    stabilized,
)

SMALL = CorpusShape(nodes=60, parallel=2, barriers=3, functions=1, shared=3)


def test_may_lattice() -> None:
    lat = MayLattice()
    a, b = frozenset({('x', '1')}), frozenset({('y', '2')})
    assert lat.meet(a, b) == a | b
    assert lat.meet_on(a, b, ['x']) == a
    assert lat.leq(a | b, a)
    assert lat.meet_all([]) == frozenset()


def test_must_lattice() -> None:
    lat = MustLattice()
    a = frozenset({('x', 'y'), ('u', 'v')})
    b = frozenset({('x', 'y')})
    assert lat.meet(None, a) == a
    assert lat.meet(a, b) == b
    assert lat.meet_on(a, b, ['u']) == b
    assert lat.meet_on(a, b, ['x']) == a
    assert lat.leq(b, a)
    assert lat.leq(a, None)
    assert render(None) == ['T']
    assert render(b) == ['x->y']


def test_worklist_order() -> None:
    wl = Worklist({1: (1, 0), 2: (0, 1), 3: (0, 0)})
    for n in (1, 2, 3, 2):
        wl.push(n)
    assert wl.next_scc() == 0
    assert [wl.remove_next_with_id(0), wl.remove_next_with_id(0)] == [3, 2]
    assert wl.remove_next_with_id(0) is None
    assert 1 in wl
    assert wl.remove_next() == 1
    assert not wl


def test_points_to() -> None:
    homeo = stabilized(POINTERS, names=['pta'])
    pta = homeo.get('pta')
    assert isinstance(pta, PointsTo)
    program = homeo.program
    copy, store = labeled(program, 'q = p'), labeled(program, '*q = 1')
    assert pta.points_to(copy.id, 'p') == {'a', 'b'}
    assert pta.points_to(store.id, 'q') == {'a', 'b'}
    assert pta.may_access(store.id) == {'a', 'b'}
    assert pta.may_access(copy.id) == frozenset()


def test_liveness() -> None:
    homeo = stabilized(
        'func main() { shared x; private t; private u; t = 1; u = 2; x = t; }',
        names=['lv'],
    )
    lv = homeo.get('lv')
    assert isinstance(lv, Liveness)
    program = homeo.program
    assert lv.live_before(labeled(program, 'x = t').id) == {'t'}
    assert lv.live_after(labeled(program, 'u = 2').id) == {'t'}
    assert 'u' not in lv.live_after(labeled(program, 't = 1').id)


def test_copies() -> None:
    homeo = stabilized(
        'func main() { shared x; private a; private b; a = x; b = a; x = b; }',
        names=['cp'],
    )
    cp = homeo.get('cp')
    assert isinstance(cp, CopyPropagation)
    last = labeled(homeo.program, 'x = b').id
    assert cp.copies(last) == {'a': 'x', 'b': 'a'}
    assert cp.substitutable(last) == {'b'}


def test_reaching_definitions_across_barrier() -> None:
    homeo = stabilized(NEEDED_BARRIER, names=['rd'])
    rd = homeo.get('rd')
    assert isinstance(rd, ReachingDefinitions)
    program = homeo.program
    write, read = labeled(program, 'a = 1'), labeled(program, 't = a')
    assert write.id in rd.reaching(read.id, 'a')


@pytest.mark.parametrize('source', [POINTERS, NEEDED_BARRIER, LOOP_BARRIER])
@pytest.mark.parametrize('name', DATAFLOW)
def test_compute_matches_naive_solver(source: str, name: str) -> None:
    homeo = stabilized(source, names=[name])
    a = homeo.get(name)
    assert isinstance(a, DataflowAnalysis)
    assert a.dump() == naive_solve(a)


@pytest.mark.parametrize('seed', range(3))
@pytest.mark.parametrize('name', DATAFLOW)
def test_generated_matches_naive_solver(seed: int, name: str) -> None:
    homeo = stabilized(generate(SMALL, seed), names=[name])
    a = homeo.get(name)
    assert isinstance(a, DataflowAnalysis)
    assert a.dump() == naive_solve(a)


@pytest.mark.parametrize('mode', [Mode.EGUPD, Mode.LZUPD, Mode.RPUPD])
@pytest.mark.parametrize('seed', range(3))
def test_incremental_matches_fresh(mode: Mode, seed: int) -> None:
    source = generate(SMALL, seed)
    program = parse(source)
    homeo = Stabilizer(program, mode)
    analyses = [homeo.register(cls()) for cls in (PointsTo, ReachingDefinitions, Liveness, CopyPropagation)]
    rng = random.Random(seed)
    fuzzer = Fuzzer(mode, list(DATAFLOW), seed)
    for _ in range(12):
        op = fuzzer.random_op(rng, program)
        if op.kind is not OpKind.QUERY:
            apply_op(program, op)
    homeo.stabilize_now()
    for a in analyses:
        assert isinstance(a, DataflowAnalysis)
        assert a.dump() == naive_solve(a), a.name


def test_iteration_cap() -> None:
    program = parse(POINTERS)
    homeo = Stabilizer(program)
    with pytest.raises(IdfaError, match='no fixed point'):
        homeo.register(PointsTo(iteration_factor=0))
    assert 'pta' not in homeo.analyses


class _Unbounded(DataflowAnalysis):
    """Adds a new fact on every transfer, so it never settles."""

    name = 'unbounded'
    lattice: ClassVar[Lattice] = MayLattice()

    def __init__(self) -> None:
        super().__init__()
        self.calls = 0

    @override
    def transfer(self, node: ProgramNode, value: Value) -> Value:
        assert value is not None
        self.calls += 1
        return value | {('x', self.calls)}


def test_iteration_cap_inside_loop() -> None:
    program = parse("""\
func main() {
    shared x;
    while (x < 3) {
        x = x + 1;
    }
}
""")
    homeo = Stabilizer(program)
    analysis = _Unbounded()
    with pytest.raises(IdfaError, match='no fixed point'):
        homeo.register(analysis)
    assert 'unbounded' not in homeo.analyses
    assert analysis.calls > 0


COUNTER_LOOP = """\
func main() {
    shared x;
    private i;
    i = 0;
    while (i < 3) {
        x = x + i;
        i = i + 1;
    }
}
"""

NESTED_LOOPS = """\
func main() {
    shared x;
    private i;
    private j;
    i = 0;
    while (i < 2) {
        j = 0;
        while (j < 2) {
            x = x + j;
            j = j + 1;
        }
        i = i + 1;
    }
}
"""

POINTER_SWAP = """\
func main() {
    shared a;
    shared b;
    private p;
    private q;
    private r;
    p = &a;
    q = &b;
    while (a < 3) {
        r = p;
        p = q;
        q = r;
        *p = 1;
    }
}
"""

REGION_LOOP = """\
func main() {
    shared a;
    shared b;
    shared q;
    private c;
    private t;
    q = &a;
    parallel {
        c = 0;
        while (c < 2) {
            if (tid == 0) {
                a = c;
            }
            barrier;
            t = a;
            b = t;
            c = c + 1;
        }
        t = b;
    }
}
"""

RECURSION = """\
func main() {
    shared x;
    x = 0;
    call f();
}

func f() {
    x = x + 1;
    if (x < 3) {
        call f();
    }
}
"""

FLUSH_LOOP = """\
func main() {
    shared a;
    private c;
    private t;
    parallel {
        c = 0;
        while (c < 2) {
            if (tid == 0) {
                a = c;
            }
            flush;
            t = a;
            c = c + 1;
        }
    }
}
"""


def _depth(n: ProgramNode) -> int:
    d = 0
    while n.parent is not None:
        n = n.parent
        d += 1
    return d


def _loop_body(homeo: Stabilizer) -> ProgramNode:
    """Body of the innermost loop, or of ``f`` when there is none."""
    program = homeo.program
    loops = [n for n in program.nodes() if n.kind is NodeKind.WHILE]
    if not loops:
        return program.functions['f'].body
    body = max(loops, key=_depth).body
    assert body is not None
    return body


@pytest.mark.parametrize('mode', [Mode.EGUPD, Mode.LZUPD])
@pytest.mark.parametrize(
    ('source', 'stmt'),
    [
        (COUNTER_LOOP, 'x = 7;'),
        (NESTED_LOOPS, 'i = j;'),
        (POINTER_SWAP, 'q = &a;'),
        (REGION_LOOP, 'a = t;'),
        (RECURSION, 'x = 5;'),
        (FLUSH_LOOP, 't = 4;'),
    ],
)
def test_loop_updates_match_fresh(mode: Mode, source: str, stmt: str) -> None:
    homeo = stabilized(source, mode, DATAFLOW)
    program = homeo.program
    body = _loop_body(homeo)
    in_region = program.region_of(body) is not None
    insert_at(program, body, 0, parse_statements(stmt, program, in_parallel=in_region)[0])
    homeo.stabilize_now()
    for name in DATAFLOW:
        a = homeo.get(name)
        assert isinstance(a, DataflowAnalysis)
        assert a.dump() == naive_solve(a), name
    remove_at(program, body, 1)
    homeo.stabilize_now()
    for name in DATAFLOW:
        a = homeo.get(name)
        assert isinstance(a, DataflowAnalysis)
        assert a.dump() == naive_solve(a), name


# Thread 1 publishes ``a`` at its flush; thread 0 reads it after its own flush
PUBLISHED = """\
func main() {
    shared a;
    shared b;
    private t;
    parallel {
        if (tid == 0) {
            flush;
            t = a;
            b = t;
        }
        if (tid == 1) {
            a = 1;
            flush;
        }
    }
}
"""


def test_intertask_edge_carries_definition() -> None:
    homeo = stabilized(PUBLISHED, names=['rd'])
    rd = homeo.get('rd')
    assert isinstance(rd, ReachingDefinitions)
    program = homeo.program
    write, read = labeled(program, 'a = 1'), labeled(program, 't = a')
    assert write.id in rd.reaching(read.id, 'a')
    assert rd.dump() == naive_solve(rd)
    # A schedule that runs thread 1 first observes the definition
    assert Interpreter(parse(PUBLISHED), 2, priorities=[1, 0]).run()['b'] == 1
    assert Interpreter(parse(PUBLISHED), 2, priorities=[0, 1]).run()['b'] == 0
    # Without the edge the definition is lost
    homeo.phase.info.labels = {}
    assert f'a->{write.id}' not in naive_solve(rd)[str(read.id)]['in']


@pytest.mark.parametrize('name', DATAFLOW)
def test_sibling_barriers_share_facts(name: str) -> None:
    homeo = stabilized(REGION_LOOP, names=[name])
    a = homeo.get(name)
    assert isinstance(a, DataflowAnalysis)
    program = homeo.program
    info = homeo.phase.info
    pairs = info.sync_pairs()
    assert pairs
    for b, s in pairs:
        shared_b = a.lattice.split(a.out[b], program.is_shared)[1]
        shared_s = a.lattice.split(a.out[s], program.is_shared)[1]
        assert shared_b == shared_s
