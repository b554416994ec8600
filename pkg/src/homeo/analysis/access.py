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

"""Syntactic read and write sets of statements."""

from homeo.ir.nodes import NodeKind, Program, ProgramNode, expr_derefs


def writes(node: ProgramNode, program: Program) -> frozenset[str]:
    """Variables a statement may write.

    A declaration initializes its variable. A store through a pointer may write any
    address-taken variable.
    """
    if node.kind is NodeKind.DECL:
        return frozenset({node.name})
    if node.kind is not NodeKind.ASSIGN:
        return frozenset()
    if node.deref:
        return program.address_taken()
    return frozenset({node.name})


def reads(node: ProgramNode, program: Program) -> frozenset[str]:
    """Variables a statement may read.

    A load through a pointer may read any address-taken variable.
    """
    r = node.reads()
    if node.expr is not None and expr_derefs(node.expr):
        r |= program.address_taken()
    return r


def shared_writes(node: ProgramNode, program: Program) -> frozenset[str]:
    """Shared variables a statement may write."""
    return frozenset(v for v in writes(node, program) if program.is_shared(v))


def shared_reads(node: ProgramNode, program: Program) -> frozenset[str]:
    """Shared variables a statement may read."""
    return frozenset(v for v in reads(node, program) if program.is_shared(v))


def has_deref(node: ProgramNode) -> bool:
    """Whether a statement accesses memory through a pointer."""
    return node.deref or (node.expr is not None and bool(expr_derefs(node.expr)))
