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
from homeo.errors import TransformError
from homeo.ir.cfg import Edge, EdgeKind, program_edges
from homeo.ir.nodes import NodeKind
from homeo.ir.parser import parse, parse_statements
from homeo.ir.printer import print_program
from homeo.ir.transform import (
    ChangeAction,
    Slot,
    clone,
    insert_at,
    remove_at,
    replace_at,
    replace_slot,
)

from tests.conftest import NEEDED_BARRIER, STRAIGHT, labeled


def test_insert_delta() -> None:
    program = parse(STRAIGHT)
    body = program.functions['main'].body
    first, second = labeled(program, 'x = 1'), labeled(program, 'x = x + 1')
    payload = parse_statements('x = 5;', program)[0]
    change = insert_at(program, body, 2, payload)
    assert change.action is ChangeAction.ADD_NODE
    assert change.added_nodes == {payload.id}
    assert not change.removed_nodes
    assert change.removed_edges == {Edge(first.id, second.id, EdgeKind.CFG)}
    assert change.added_edges == {
        Edge(first.id, payload.id, EdgeKind.CFG),
        Edge(payload.id, second.id, EdgeKind.CFG),
    }
    assert program.is_attached(payload)
    assert payload.parent is body


def test_remove_keeps_detached_node() -> None:
    program = parse(STRAIGHT)
    body = program.functions['main'].body
    node = labeled(program, 'x = 1')
    change = remove_at(program, body, 1)
    assert change.removed_nodes == {node.id}
    assert not program.is_attached(node)
    assert node.parent is None
    insert_at(program, body, 1, node)
    assert program.node(node.id) is node
    assert print_program(program) == STRAIGHT


def test_replace_compound() -> None:
    program = parse(STRAIGHT)
    body = program.functions['main'].body
    old = labeled(program, 'x = x + 1')
    payload = parse_statements('while (x < 3) { x = x + 1; }', program)[0]
    change = replace_at(program, body, 2, payload)
    assert change.action is ChangeAction.REPLACE_NODE
    assert change.removed_nodes == {old.id}
    assert payload.id in change.added_nodes
    assert payload.body is not None
    # Blocks are not super-graph nodes
    assert payload.body.id not in change.added_nodes
    inner = payload.body.stmts[0]
    assert Edge(inner.id, payload.id, EdgeKind.CFG) in program_edges(program)
    assert 'while (x < 3) {' in print_program(program)


def test_replace_slot_else() -> None:
    program = parse('func main() { shared x; if (x < 1) { x = 1; } else { x = 2; } }')
    host = next(n for n in program.nodes() if n.kind is NodeKind.IF)
    assert host.orelse is not None
    removed = labeled(program, 'x = 2')
    change = replace_slot(program, host, Slot.ORELSE, None)
    assert change.action is ChangeAction.REMOVE_NODE
    assert change.removed_nodes == {removed.id}
    assert host.orelse is None
    with pytest.raises(TransformError, match='cannot be empty'):
        replace_slot(program, host, Slot.THEN, None)


@pytest.mark.parametrize(('index', 'inserting'), [(0, True), (6, True), (0, False), (5, False)])
def test_region_bounds(index: int, inserting: bool) -> None:  # noqa: FBT001
    program = parse(NEEDED_BARRIER)
    region = next(n for n in program.nodes() if n.kind is NodeKind.PARALLEL)
    body = region.body
    assert body is not None
    assert len(body.stmts) == 6
    with pytest.raises(TransformError, match='out of range'):
        if inserting:
            insert_at(program, body, index, parse_statements('flush;', program)[0])
        else:
            remove_at(program, body, index)


@pytest.mark.parametrize(
    'payload',
    [
        'parallel { flush; }',
        'if (1) { parallel { flush; } }',
    ],
)
def test_no_region_inside_region(payload: str) -> None:
    program = parse(NEEDED_BARRIER)
    region = next(n for n in program.nodes() if n.kind is NodeKind.PARALLEL)
    assert region.body is not None
    stmt = parse_statements(payload, program)[0]
    with pytest.raises(TransformError, match='cannot be placed inside a region'):
        insert_at(program, region.body, 1, stmt)


def test_attached_payload_rejected() -> None:
    program = parse(STRAIGHT)
    body = program.functions['main'].body
    with pytest.raises(TransformError, match='not detached'):
        insert_at(program, body, 0, labeled(program, 'x = 1'))


def test_clone_fresh_ids() -> None:
    program = parse(NEEDED_BARRIER)
    region = next(n for n in program.nodes() if n.kind is NodeKind.PARALLEL)
    copy = clone(program, region)
    original = [n.id for n in region.walk()]
    copied = [n.id for n in copy.walk()]
    assert len(copied) == len(original)
    assert not set(copied) & {n.id for n in program.nodes()}
    assert [n.kind for n in copy.walk()] == [n.kind for n in region.walk()]
