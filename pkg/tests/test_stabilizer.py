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

import logging
import random

import pytest
from homeo.analysis.callgraph import CallGraph
from homeo.analysis.instances import Liveness, PointsTo
from homeo.errors import RpStrictViolation, StabilizationError
from homeo.ir.cfg import Edge, EdgeKind
from homeo.ir.parser import parse, parse_statements
from homeo.ir.transform import ChangeAction, ElemChange, insert_at, remove_at
from homeo.stabilizer import (
    ChangeLog,
    Mode,
    Stabilizer,
    StableStatus,
    Trigger,
    net_changes,
)

from tests.conftest import POINTERS, STRAIGHT, labeled, stabilized

E1 = Edge(1, 2, EdgeKind.CFG)
E2 = Edge(2, 3, EdgeKind.CFG)


@pytest.mark.parametrize(
    ('mode', 'trigger', 'incremental'),
    [
        (Mode.EGINV, Trigger.EAGER, False),
        (Mode.EGUPD, Trigger.EAGER, True),
        (Mode.RPINV, Trigger.RELEVANT, False),
        (Mode.RPUPD, Trigger.RELEVANT, True),
        (Mode.LZINV, Trigger.LAZY, False),
        (Mode.LZUPD, Trigger.LAZY, True),
    ],
)
def test_mode(mode: Mode, trigger: Trigger, incremental: bool) -> None:  # noqa: FBT001
    assert mode.trigger is trigger
    assert mode.incremental is incremental


def test_net_changes_cancel() -> None:
    changes = [
        ElemChange(ChangeAction.ADD_NODE, frozenset({7}), added_edges=frozenset({E1})),
        ElemChange(ChangeAction.REMOVE_NODE, removed_nodes=frozenset({7}), removed_edges=frozenset({E1})),
    ]
    assert net_changes(changes).empty


def test_net_changes_by_presence() -> None:
    changes = [
        ElemChange(ChangeAction.REMOVE_NODE, removed_nodes=frozenset({5}), removed_edges=frozenset({E1})),
        ElemChange(ChangeAction.ADD_NODE, frozenset({5, 6}), added_edges=frozenset({E1, E2})),
        ElemChange(ChangeAction.REMOVE_NODE, removed_nodes=frozenset({6}), removed_edges=frozenset({E2})),
    ]
    net = net_changes(changes)
    # 5 was there before and after, 6 neither
    assert net.empty
    net = net_changes(changes[:2])
    assert net.added_nodes == {6}
    assert net.added_edges == {E2}
    assert not net.removed_nodes


def test_change_log_window() -> None:
    log = ChangeLog()
    for k in range(3):
        log.append(ElemChange(ChangeAction.ADD_NODE, frozenset({k})))
    assert log.head == 3
    assert log.net_changes(1).added_nodes == {1, 2}
    log.compact(2)
    assert len(log.since(2)) == 1
    with pytest.raises(StabilizationError, match='outside log window'):
        log.since(1)


def test_net_changes_match_snapshots() -> None:
    rng = random.Random(0)
    universe = range(8)
    nodes: set[int] = set()
    edges: set[Edge] = set()
    for _ in range(10_000):
        nodes_before, edges_before = set(nodes), set(edges)
        window: list[ElemChange] = []
        for _ in range(rng.randint(1, 10)):
            absent = [n for n in universe if n not in nodes]
            if absent and (not nodes or rng.random() < 0.5):  # noqa: PLR2004
                n = rng.choice(absent)
                added = {Edge(n, m, EdgeKind.CFG) for m in nodes if rng.random() < 0.3}  # noqa: PLR2004
                added |= {Edge(m, n, EdgeKind.CFG) for m in nodes if rng.random() < 0.3}  # noqa: PLR2004
                nodes.add(n)
                edges |= added
                window.append(
                    ElemChange(ChangeAction.ADD_NODE, frozenset({n}), added_edges=frozenset(added))
                )
            else:
                n = rng.choice(sorted(nodes))
                gone = {e for e in edges if n in {e.src, e.dst}}
                nodes.discard(n)
                edges -= gone
                window.append(
                    ElemChange(
                        ChangeAction.REMOVE_NODE,
                        removed_nodes=frozenset({n}),
                        removed_edges=frozenset(gone),
                    )
                )
        net = net_changes(window)
        assert net.added_nodes == nodes - nodes_before
        assert net.removed_nodes == nodes_before - nodes
        assert net.added_edges == edges - edges_before
        assert net.removed_edges == edges_before - edges


def test_duplicate_registration() -> None:
    homeo = stabilized(STRAIGHT, names=['pta'])
    with pytest.raises(StabilizationError, match='Duplicate analysis name'):
        homeo.register(PointsTo())


def test_second_stabilizer_rejected() -> None:
    program = parse(STRAIGHT)
    Stabilizer(program)
    with pytest.raises(StabilizationError, match='already has a stabilizer'):
        Stabilizer(program)


def test_unknown_analysis() -> None:
    homeo = stabilized(STRAIGHT, names=['lv'])
    with pytest.raises(StabilizationError, match='Unknown analysis'):
        homeo.stabilize_now(['nope'])
    with pytest.raises(StabilizationError, match='Unknown analysis'):
        homeo.get('nope')
    homeo.stabilize_now(['supergraph', 'phase', 'lv'])


def _edit(homeo: Stabilizer, count: int) -> None:
    program = homeo.program
    body = program.functions['main'].body
    for k in range(count):
        insert_at(program, body, 1, parse_statements(f'x = {k};', program)[0])


def test_eager_invalidate_recomputes_every_change() -> None:
    homeo = stabilized(STRAIGHT, Mode.EGINV, ['pta', 'lv'])
    _edit(homeo, 3)
    assert homeo.all_stable()
    for m in homeo.metrics().values():
        assert m['stabilizationTriggers'] == 3
        assert m['computeCalls'] == 3
        assert m['handleUpdateCalls'] == 0


def test_lazy_update_stabilizes_once_per_query() -> None:
    homeo = stabilized(STRAIGHT, Mode.LZUPD, ['lv'])
    _edit(homeo, 3)
    lv = homeo.get('lv')
    assert isinstance(lv, Liveness)
    assert lv.status is StableStatus.UNSTABLE
    last = labeled(homeo.program, 'x = x + 1')
    assert lv.live_before(last.id) == {'x'}
    assert lv.live_after(last.id) == {'x'}
    m = homeo.metrics()['lv']
    assert m['stabilizationTriggers'] == 1
    assert m['handleUpdateCalls'] == 1
    assert m['computeCalls'] == 0
    assert homeo.transformations == 3


def test_reinsert_reprocesses_nothing() -> None:
    homeo = stabilized(STRAIGHT, Mode.LZUPD, ['pta', 'rd', 'lv', 'cp'])
    program = homeo.program
    body = program.functions['main'].body
    node = body.stmts[1]
    remove_at(program, body, 1)
    insert_at(program, body, 1, node)
    homeo.stabilize_now()
    for m in homeo.metrics().values():
        assert m['handleUpdateCalls'] == 1
        assert m['nodesReprocessed'] == 0


def test_strict_relevant_point_read() -> None:
    homeo = stabilized(POINTERS, Mode.RPUPD, ['pta'], strict=True)
    _insert_private(homeo)
    pta = homeo.get('pta')
    assert isinstance(pta, PointsTo)
    store = labeled(homeo.program, '*q = 1')
    with pytest.raises(RpStrictViolation):
        pta.points_to(store.id, 'q')
    homeo.stabilize_now()
    assert pta.points_to(store.id, 'q') == {'a', 'b'}


def test_lenient_relevant_point_read(caplog: pytest.LogCaptureFixture) -> None:
    homeo = stabilized(POINTERS, Mode.RPINV, ['pta'])
    _insert_private(homeo)
    pta = homeo.get('pta')
    assert isinstance(pta, PointsTo)
    store = labeled(homeo.program, '*q = 1')
    with caplog.at_level(logging.WARNING, logger='homeo'):
        assert pta.points_to(store.id, 'q') == {'a', 'b'}
    assert 'outside a relevant change-point' in caplog.text
    assert pta.status is StableStatus.UNSTABLE


def _insert_private(homeo: Stabilizer) -> None:
    program = homeo.program
    body = program.functions['main'].body
    insert_at(program, body, 0, parse_statements('private z;', program)[0])


def test_call_graph_follows_changes() -> None:
    homeo = stabilized(
        'func main() { call f(); } func f() { } func g() { call g(); }',
        Mode.EGUPD,
        ['callgraph'],
    )
    cg = homeo.get('callgraph')
    assert isinstance(cg, CallGraph)
    assert cg.snapshot() == {'g': {'g': 1}, 'main': {'f': 1}}
    assert cg.is_recursive('g')
    assert not cg.is_recursive('f')
    program = homeo.program
    f = program.functions['f']
    insert_at(program, f.body, 0, parse_statements('call g();', program)[0])
    insert_at(program, f.body, 0, parse_statements('call g();', program)[0])
    assert cg.snapshot() == {'f': {'g': 2}, 'g': {'g': 1}, 'main': {'f': 1}}
    assert cg.callers('g') == {'f', 'g'}
    remove_at(program, program.functions['g'].body, 0)
    assert not cg.is_recursive('g')
    assert cg.call_sites('g') == sorted(s.id for s in f.body.stmts)


def test_memo_sees_every_change() -> None:
    homeo = stabilized(STRAIGHT, Mode.LZUPD)
    seen: list[ElemChange] = []
    homeo.register_memo('seen', seen.append)
    _insert_private(homeo)
    remove_at(homeo.program, homeo.program.functions['main'].body, 0)
    assert [c.action for c in seen] == [ChangeAction.ADD_NODE, ChangeAction.REMOVE_NODE]
    homeo.unregister_memo('seen')
    _insert_private(homeo)
    assert len(seen) == 2


def test_registration_not_counted() -> None:
    homeo = stabilized(POINTERS, Mode.EGUPD, ['pta', 'rd', 'lv', 'cp'])
    for m in homeo.metrics().values():
        assert set(m.values()) == {0}


def test_log_compacted_on_notify() -> None:
    homeo = stabilized(STRAIGHT, Mode.LZUPD)
    start = homeo.log.head
    _edit(homeo, 3)
    assert homeo.log.head == start + 3
    assert homeo.log.since(homeo.log.head) == []
    with pytest.raises(StabilizationError, match='outside log window'):
        homeo.log.since(homeo.log.head - 1)

    lazy = stabilized(STRAIGHT, Mode.LZUPD, ['lv'])
    start = lazy.log.head
    _edit(lazy, 3)
    assert len(lazy.log.since(start)) == 3
    lazy.stabilize_now()
    with pytest.raises(StabilizationError, match='outside log window'):
        lazy.log.since(start)
