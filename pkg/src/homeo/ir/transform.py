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

"""Elementary transformations: the only way to change an attached program."""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
from typing import Protocol, override

from homeo.errors import TransformError
from homeo.util import cls_name

from .cfg import Edge, function_edges
from .nodes import BarrierRole, Function, NodeKind, Program, ProgramNode

LOG = logging.getLogger('homeo')


class ChangeAction(StrEnum):
    """Kind of an elementary change."""

    ADD_NODE = 'AddNode'
    REMOVE_NODE = 'RemoveNode'
    REPLACE_NODE = 'ReplaceNode'

    @override
    def __repr__(self) -> str:
        return f'{cls_name(self)}.{self.name}'


class Slot(StrEnum):
    """Child slots of compound statements."""

    STMTS = 'stmts'
    BODY = 'body'
    THEN = 'then'
    ORELSE = 'orelse'


@dataclass(frozen=True)
class ElemChange:
    """Exact super-graph delta of one elementary transformation.

    Node sets hold ids of executable nodes only.
    """

    action: ChangeAction
    added_nodes: frozenset[int] = frozenset()
    removed_nodes: frozenset[int] = frozenset()
    added_edges: frozenset[Edge] = frozenset()
    removed_edges: frozenset[Edge] = frozenset()

    def extended(self, added: set[Edge], removed: set[Edge]) -> 'ElemChange':
        """Return a copy with more edge changes (net of each other)."""
        return ElemChange(
            self.action,
            self.added_nodes,
            self.removed_nodes,
            (self.added_edges | added) - removed,
            (self.removed_edges | removed) - added,
        )


class ChangeObserver(Protocol):
    """Receives each elementary change right after the program was mutated."""

    def on_elem_change(
        self,
        change: ElemChange,
        fn: Function,
        incoming: list[ProgramNode],
        outgoing: list[ProgramNode],
    ) -> ElemChange:
        """Update maintained abstractions and return the complete change."""
        ...


_BLOCK_SLOTS = {
    NodeKind.WHILE: (Slot.BODY,),
    NodeKind.PARALLEL: (Slot.BODY,),
    NodeKind.IF: (Slot.THEN, Slot.ORELSE),
}


def insert_at(
    program: Program, block: ProgramNode, index: int, payload: ProgramNode
) -> ElemChange:
    """Insert a detached statement into a block before position ``index``."""
    _check_block(program, block)
    lo, hi = _bounds(block, inserting=True)
    if not lo <= index <= hi:
        msg = f'Insert index {index} out of range [{lo}, {hi}] for {block!r}'
        raise TransformError(msg)
    _check_payload(program, block, payload)

    def mutate() -> tuple[ProgramNode | None, ProgramNode | None]:
        block.stmts.insert(index, payload)
        payload.parent = block
        return None, payload

    return _transform(program, block, ChangeAction.ADD_NODE, mutate)


def remove_at(program: Program, block: ProgramNode, index: int) -> ElemChange:
    """Remove the statement at position ``index``. It stays available detached."""
    _check_block(program, block)
    lo, hi = _bounds(block, inserting=False)
    if not lo <= index <= hi:
        msg = f'Remove index {index} out of range [{lo}, {hi}] for {block!r}'
        raise TransformError(msg)

    def mutate() -> tuple[ProgramNode | None, ProgramNode | None]:
        old = block.stmts.pop(index)
        old.parent = None
        return old, None

    return _transform(program, block, ChangeAction.REMOVE_NODE, mutate)


def replace_at(
    program: Program, block: ProgramNode, index: int, payload: ProgramNode
) -> ElemChange:
    """Replace the statement at position ``index`` by a detached statement."""
    _check_block(program, block)
    lo, hi = _bounds(block, inserting=False)
    if not lo <= index <= hi:
        msg = f'Replace index {index} out of range [{lo}, {hi}] for {block!r}'
        raise TransformError(msg)
    _check_payload(program, block, payload)

    def mutate() -> tuple[ProgramNode | None, ProgramNode | None]:
        old = block.stmts[index]
        block.stmts[index] = payload
        old.parent = None
        payload.parent = block
        return old, payload

    return _transform(program, block, ChangeAction.REPLACE_NODE, mutate)


def replace_slot(
    program: Program, host: ProgramNode, slot: Slot, payload: ProgramNode | None
) -> ElemChange:
    """Replace the block in a body slot of a compound statement.

    Only the else-branch of an ``if`` may be emptied (``payload`` ``None``). A region
    body must carry its implicit entry and exit barriers.
    """
    if not program.is_attached(host):
        msg = f'{host!r} is not attached to the program'
        raise TransformError(msg)
    if slot not in _BLOCK_SLOTS.get(host.kind, ()):
        msg = f'{host!r} has no slot {slot!r}'
        raise TransformError(msg)
    if payload is None:
        if slot is not Slot.ORELSE:
            msg = f'Slot {slot!r} of {host!r} cannot be empty'
            raise TransformError(msg)
    else:
        if payload.kind is not NodeKind.BLOCK:
            msg = f'Slot {slot!r} needs a block, got {payload!r}'
            raise TransformError(msg)
        if host.kind is NodeKind.PARALLEL and not _is_region_body(payload):
            msg = 'Region body must start and end with its implicit barriers'
            raise TransformError(msg)
        _check_payload(program, host, payload)
    current: ProgramNode | None = getattr(host, slot)
    action = (
        ChangeAction.REMOVE_NODE
        if payload is None
        else ChangeAction.ADD_NODE
        if current is None
        else ChangeAction.REPLACE_NODE
    )

    def mutate() -> tuple[ProgramNode | None, ProgramNode | None]:
        setattr(host, slot, payload)
        if current is not None:
            current.parent = None
        if payload is not None:
            payload.parent = host
        return current, payload

    return _transform(program, host, action, mutate)


def _transform(
    program: Program,
    host: ProgramNode,
    action: ChangeAction,
    mutate: Callable[[], tuple[ProgramNode | None, ProgramNode | None]],
) -> ElemChange:
    fn = program.function_of(host)
    old_edges = function_edges(program, fn)
    old, new = mutate()
    outgoing = program.detach(old) if old is not None else []
    incoming = program.attach(new) if new is not None else []
    new_edges = function_edges(program, fn)
    change = ElemChange(
        action,
        frozenset(n.id for n in incoming if n.kind.executable),
        frozenset(n.id for n in outgoing if n.kind.executable),
        frozenset(new_edges - old_edges),
        frozenset(old_edges - new_edges),
    )
    LOG.debug(
        '%s at %r in %s: +%d/-%d nodes, +%d/-%d edges',
        action,
        host,
        fn.name,
        len(change.added_nodes),
        len(change.removed_nodes),
        len(change.added_edges),
        len(change.removed_edges),
    )
    if program.observer is not None:
        change = program.observer.on_elem_change(change, fn, incoming, outgoing)
    return change


def _check_block(program: Program, block: ProgramNode) -> None:
    if block.kind is not NodeKind.BLOCK:
        msg = f'Not a block: {block!r}'
        raise TransformError(msg)
    if not program.is_attached(block):
        msg = f'{block!r} is not attached to the program'
        raise TransformError(msg)


def _is_region_body(block: ProgramNode) -> bool:
    return (
        len(block.stmts) >= 2  # noqa: PLR2004
        and block.stmts[0].role is BarrierRole.ENTRY
        and block.stmts[-1].role is BarrierRole.EXIT
    )


def _bounds(block: ProgramNode, *, inserting: bool) -> tuple[int, int]:
    """Index range that keeps implicit region barriers in place."""
    n = len(block.stmts)
    hi = n if inserting else n - 1
    if block.parent is not None and block.parent.kind is NodeKind.PARALLEL:
        return 1, hi - 1
    return 0, hi


def _check_payload(program: Program, host: ProgramNode, payload: ProgramNode) -> None:
    if payload.parent is not None or program.is_attached(payload):
        msg = f'Payload {payload!r} is not detached'
        raise TransformError(msg)
    if payload.kind in {NodeKind.ENTRY, NodeKind.EXIT}:
        msg = f'{payload!r} is not a statement'
        raise TransformError(msg)
    for n in payload.walk():
        if program.has_id(n.id):
            msg = f'Payload node id {n.id} collides with an attached node'
            raise TransformError(msg)
        if n.kind is NodeKind.CALL and n.name not in program.functions:
            msg = f'Unresolved callee {n.name!r}'
            raise TransformError(msg)
    in_region = host.kind is NodeKind.PARALLEL or program.region_of(host) is not None
    if in_region and payload.contains(NodeKind.PARALLEL, NodeKind.RETURN):
        msg = 'Parallel regions and returns cannot be placed inside a region'
        raise TransformError(msg)


def clone(program: Program, node: ProgramNode) -> ProgramNode:
    """Detached copy of a subtree with fresh ids from ``program``."""
    copy = program.make(
        node.kind,
        name=node.name,
        expr=node.expr,
        deref=node.deref,
        sharing=node.sharing,
        role=node.role,
        span=node.span,
    )
    copy.stmts = [clone(program, s) for s in node.stmts]
    for s in copy.stmts:
        s.parent = copy
    for slot in (Slot.BODY, Slot.THEN, Slot.ORELSE):
        child: ProgramNode | None = getattr(node, slot)
        if child is not None:
            c = clone(program, child)
            c.parent = copy
            setattr(copy, slot, c)
    return copy
