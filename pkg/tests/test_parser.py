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
from homeo.errors import ParseError
from homeo.ir.nodes import BarrierRole, NodeKind, Sharing, structure
from homeo.ir.parser import parse, parse_statements
from homeo.ir.printer import print_program

from tests.conftest import (
    ADJACENT_REGIONS,
    CALL_WITH_BARRIERS,
    NEEDED_BARRIER,
    POINTERS,
    STRAIGHT,
)


@pytest.mark.parametrize(
    'source', [STRAIGHT, NEEDED_BARRIER, ADJACENT_REGIONS, CALL_WITH_BARRIERS, POINTERS]
)
def test_print_canonical(source: str) -> None:
    program = parse(source)
    assert print_program(program) == source
    assert structure(parse(print_program(program))) == structure(program)


def test_print_normalizes() -> None:
    program = parse('func main(){shared x;x=(1+2)+x;if(x<3){x=1;}else{h();}}func h(){}')
    assert print_program(program) == (
        'func main() {\n'
        '    shared x;\n'
        '    x = 1 + 2 + x;\n'
        '    if (x < 3) {\n'
        '        x = 1;\n'
        '    } else {\n'
        '        call h();\n'
        '    }\n'
        '}\n'
        '\n'
        'func h() {\n'
        '}\n'
    )


def test_implicit_barriers() -> None:
    program = parse(NEEDED_BARRIER)
    region = next(n for n in program.nodes() if n.kind is NodeKind.PARALLEL)
    assert region.body is not None
    first, last = region.body.stmts[0], region.body.stmts[-1]
    assert (first.kind, first.role) == (NodeKind.BARRIER, BarrierRole.ENTRY)
    assert (last.kind, last.role) == (NodeKind.BARRIER, BarrierRole.EXIT)
    assert sum(n.kind is NodeKind.BARRIER and not n.implicit for n in program.nodes()) == 1


def test_sharing() -> None:
    program = parse(POINTERS)
    assert program.private_names() == {'p', 'q', 'tid'}
    assert program.shared_decls() == {'a', 'b'}
    assert program.address_taken() == {'a', 'b'}
    assert program.is_shared('undeclared')
    decl = next(n for n in program.nodes() if n.kind is NodeKind.DECL)
    assert decl.sharing is Sharing.SHARED


def test_ids_unique_and_stable() -> None:
    program = parse(CALL_WITH_BARRIERS)
    ids = [n.id for n in program.nodes()]
    assert len(ids) == len(set(ids))
    copy = program.snapshot()
    assert [n.id for n in copy.nodes()] == ids
    assert all(a is not b for a, b in zip(program.nodes(), copy.nodes(), strict=True))


@pytest.mark.parametrize(
    ('source', 'message'),
    [
        ('func main() { x = ; }', 'Expected expression'),
        ('func main() { parallel { parallel { } } }', 'Nested parallel region'),
        ('func main() { parallel { return; } }', 'Return inside a parallel region'),
        ('func main() { shared x; shared x; }', 'Redeclared variable'),
        ('func main() { shared x; if (1) { private x; } }', 'declared both'),
        ('func main() { call g(); }', 'Unresolved callee'),
        ('func f() { }', 'No entry function'),
        ('func main() { } func main() { }', 'Duplicate function'),
        ('func main() { tid = 1; }', 'Cannot assign'),
        ('func main() { private tid; }', 'Cannot declare'),
        ('', 'Program has no functions'),
        ('func main() { x = 1;', "Expected '}'"),
    ],
)
def test_parse_errors(source: str, message: str) -> None:
    with pytest.raises(ParseError, match=message):
        parse(source)


def test_parse_error_position() -> None:
    with pytest.raises(ParseError) as e:
        parse('func main() {\n  x = @;\n}')
    assert (e.value.line, e.value.col) == (2, 7)


def test_parse_statements_detached() -> None:
    program = parse(STRAIGHT)
    before = len(program.nodes())
    stmts = parse_statements('x = 2; if (x < 1) { flush; }', program)
    assert [s.kind for s in stmts] == [NodeKind.ASSIGN, NodeKind.IF]
    assert all(s.parent is None and not program.is_attached(s) for s in stmts)
    assert len(program.nodes()) == before
    with pytest.raises(ParseError, match='Return inside'):
        parse_statements('return;', program, in_parallel=True)
