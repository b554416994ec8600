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

"""Canonical source printer."""

from typing import Final

from .nodes import NodeKind, Program, ProgramNode, format_expr

INDENT: Final[str] = '    '


def print_program(program: Program) -> str:
    """Return canonical source text of ``program``.

    Functions appear in source order, one statement per line, implicit region
    barriers omitted. Parsing the result yields a structurally identical program.
    """
    chunks = []
    for fn in program.functions.values():
        lines = [f'func {fn.name}() {{']
        _block_lines(fn.body, 1, lines)
        lines.append('}')
        chunks.append('\n'.join(lines))
    return '\n\n'.join(chunks) + '\n'


def _block_lines(block: ProgramNode, depth: int, lines: list[str]) -> None:
    for s in block.stmts:
        _stmt_lines(s, depth, lines)


def _stmt_lines(n: ProgramNode, depth: int, lines: list[str]) -> None:  # noqa: C901
    pad = INDENT * depth
    match n.kind:
        case NodeKind.DECL:
            lines.append(f'{pad}{n.sharing} {n.name};')
        case NodeKind.ASSIGN:
            assert n.expr is not None
            star = '*' if n.deref else ''
            lines.append(f'{pad}{star}{n.name} = {format_expr(n.expr)};')
        case NodeKind.IF:
            assert n.expr is not None
            assert n.then is not None
            lines.append(f'{pad}if ({format_expr(n.expr)}) {{')
            _block_lines(n.then, depth + 1, lines)
            if n.orelse is not None:
                lines.append(f'{pad}}} else {{')
                _block_lines(n.orelse, depth + 1, lines)
            lines.append(f'{pad}}}')
        case NodeKind.WHILE:
            assert n.expr is not None
            assert n.body is not None
            lines.append(f'{pad}while ({format_expr(n.expr)}) {{')
            _block_lines(n.body, depth + 1, lines)
            lines.append(f'{pad}}}')
        case NodeKind.PARALLEL:
            assert n.body is not None
            lines.append(f'{pad}parallel {{')
            _block_lines(n.body, depth + 1, lines)
            lines.append(f'{pad}}}')
        case NodeKind.BARRIER:
            if not n.implicit:
                lines.append(f'{pad}barrier;')
        case NodeKind.FLUSH:
            lines.append(f'{pad}flush;')
        case NodeKind.CALL:
            lines.append(f'{pad}call {n.name}();')
        case NodeKind.RETURN:
            lines.append(f'{pad}return;')
        case NodeKind.BLOCK:
            _block_lines(n, depth, lines)
        case _:
            msg = f'Cannot print {n!r}'
            raise ValueError(msg)
