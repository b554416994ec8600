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

"""Control-flow and call edges of functions."""

from enum import StrEnum
from typing import NamedTuple, override

from homeo.util import cls_name

from .nodes import Function, NodeKind, Program, ProgramNode


class EdgeKind(StrEnum):
    """Kinds of super-graph edges."""

    CFG = 'cfg'
    CALL = 'call'
    INTERTASK = 'intertask'

    @override
    def __repr__(self) -> str:
        return f'{cls_name(self)}.{self.name}'


class Edge(NamedTuple):
    """A directed super-graph edge between node ids."""

    src: int
    dst: int
    kind: EdgeKind

    @override
    def __str__(self) -> str:
        return f'{self.src}->{self.dst}[{self.kind}]'


def function_edges(program: Program, fn: Function) -> set[Edge]:
    """Build the edges owned by ``fn``.

    A function owns its control-flow edges, the call edges leaving its call sites and
    the return edges from callee exits back into its own body.
    """
    edges: set[Edge] = set()
    first = _build(program, fn, fn.body, fn.exit.id, edges)
    edges.add(Edge(fn.entry.id, first, EdgeKind.CFG))
    return edges


def program_edges(program: Program) -> set[Edge]:
    """Control-flow and call edges of all functions."""
    edges: set[Edge] = set()
    for fn in program.functions.values():
        edges |= function_edges(program, fn)
    return edges


def return_sites(program: Program) -> dict[int, int]:
    """Map each call site id to the id control returns to."""
    sites: dict[int, int] = {}
    for fn in program.functions.values():
        _build(program, fn, fn.body, fn.exit.id, set(), sites)
    return sites


def _build(  # noqa: PLR0911
    program: Program,
    fn: Function,
    n: ProgramNode,
    nxt: int,
    edges: set[Edge],
    sites: dict[int, int] | None = None,
) -> int:
    """Add the edges of ``n`` continuing at ``nxt``. Return the id control enters."""
    match n.kind:
        case NodeKind.BLOCK:
            cur = nxt
            for s in reversed(n.stmts):
                cur = _build(program, fn, s, cur, edges, sites)
            return cur
        case NodeKind.PARALLEL:
            assert n.body is not None
            return _build(program, fn, n.body, nxt, edges, sites)
        case NodeKind.IF:
            assert n.then is not None
            edges.add(Edge(n.id, _build(program, fn, n.then, nxt, edges, sites), EdgeKind.CFG))
            other = (
                _build(program, fn, n.orelse, nxt, edges, sites)
                if n.orelse is not None
                else nxt
            )
            edges.add(Edge(n.id, other, EdgeKind.CFG))
            return n.id
        case NodeKind.WHILE:
            assert n.body is not None
            edges.add(Edge(n.id, nxt, EdgeKind.CFG))
            edges.add(Edge(n.id, _build(program, fn, n.body, n.id, edges, sites), EdgeKind.CFG))
            return n.id
        case NodeKind.RETURN:
            edges.add(Edge(n.id, fn.exit.id, EdgeKind.CFG))
            return n.id
        case NodeKind.CALL:
            callee = program.functions[n.name]
            edges.add(Edge(n.id, callee.entry.id, EdgeKind.CALL))
            edges.add(Edge(callee.exit.id, nxt, EdgeKind.CALL))
            if sites is not None:
                sites[n.id] = nxt
            return n.id
        case _:
            edges.add(Edge(n.id, nxt, EdgeKind.CFG))
            return n.id
