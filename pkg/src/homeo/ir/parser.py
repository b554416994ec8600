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

"""Parser for the source language.

Grammar::

    program  := func+
    func     := 'func' IDENT '(' ')' block
    block    := '{' stmt* '}'
    stmt     := decl ';' | assign ';' | if | while | parallel
              | 'barrier' ';' | 'flush' ';' | call ';' | 'return' ';'
    decl     := ('shared' | 'private') IDENT
    assign   := IDENT '=' expr | '*' IDENT '=' expr
    if       := 'if' '(' expr ')' block ('else' block)?
    while    := 'while' '(' expr ')' block
    parallel := 'parallel' block
    call     := 'call'? IDENT '(' ')'
    expr     := rel ('==' rel)*
    rel      := sum ('<' sum)*
    sum      := atom (('+' | '-') atom)*
    atom     := INT | IDENT | '&' IDENT | '*' IDENT | '(' expr ')'
"""

import logging
import re
from collections.abc import Iterator
from dataclasses import dataclass
from typing import Final

from homeo.errors import ParseError

from .nodes import (
    TID,
    AddrOf,
    BarrierRole,
    BinOp,
    Const,
    Deref,
    Expr,
    NodeKind,
    Program,
    ProgramNode,
    Sharing,
    Span,
    Var,
)

LOG = logging.getLogger('homeo')

KEYWORDS: Final[frozenset[str]] = frozenset({
    'func',
    'shared',
    'private',
    'if',
    'else',
    'while',
    'parallel',
    'barrier',
    'flush',
    'return',
    'call',
})

_TOKEN_PATTERN = re.compile(
    r'(?P<ws>[ \t\r\n]+|//[^\n]*)'
    r'|(?P<int>\d+)'
    r'|(?P<ident>[A-Za-z_]\w*)'
    r'|(?P<op>==|[-+<=*&(){};])'
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    span: Span


def tokenize(source: str) -> Iterator[Token]:
    """Split source text into tokens. The last token has kind ``eof``."""
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_PATTERN.match(source, pos)
        span = Span(line, pos - line_start + 1)
        if m is None:
            msg = f'Unexpected character {source[pos]!r}'
            raise ParseError(msg, *span)
        kind = m.lastgroup
        assert kind is not None
        text = m.group()
        if kind == 'ws':
            newlines = text.count('\n')
            if newlines:
                line += newlines
                line_start = m.start() + text.rindex('\n') + 1
        elif kind == 'ident' and text in KEYWORDS:
            yield Token(text, text, span)
        else:
            yield Token(kind, text, span)
        pos = m.end()
    yield Token('eof', '', Span(line, pos - line_start + 1))


class Parser:
    """Recursive descent parser building nodes with ids from a ``Program``."""

    def __init__(self, source: str, program: Program) -> None:
        """Initialize a parser.

        :param source: source text
        :param program: program that allocates ids and receives functions
        """
        self.program = program
        self._tokens = list(tokenize(source))
        self._pos = 0
        self._in_parallel = False
        self._scopes: list[set[str]] = []
        self._sharing: dict[str, Sharing] = {}
        self._calls: list[ProgramNode] = []
        for n in program.nodes():
            if n.kind is NodeKind.DECL and n.sharing is not None:
                self._sharing[n.name] = n.sharing

    @property
    def _tok(self) -> Token:
        return self._tokens[self._pos]

    def _error(self, msg: str, tok: Token | None = None) -> ParseError:
        t = tok or self._tok
        return ParseError(msg, t.span.line, t.span.col)

    def _accept(self, kind: str) -> Token | None:
        tok = self._tok
        if tok.kind == kind or (tok.kind == 'op' and tok.text == kind):
            self._pos += 1
            return tok
        return None

    def _expect(self, kind: str) -> Token:
        tok = self._accept(kind)
        if tok is None:
            found = self._tok.text or 'end of input'
            msg = f'Expected {kind!r} but found {found!r}'
            raise self._error(msg)
        return tok

    def _make(self, kind: NodeKind, tok: Token, **attrs: object) -> ProgramNode:
        return self.program.make(kind, span=tok.span, **attrs)

    def parse_program(self) -> Program:
        """Parse a whole program into the parser's ``Program``."""
        bodies: list[tuple[Token, ProgramNode]] = []
        while self._tok.kind != 'eof':
            self._expect('func')
            name = self._expect('ident')
            if name.text in {t.text for t, _ in bodies}:
                msg = f'Duplicate function {name.text!r}'
                raise self._error(msg, name)
            self._expect('(')
            self._expect(')')
            bodies.append((name, self._block()))
        if not bodies:
            msg = 'Program has no functions'
            raise self._error(msg)
        for name, body in bodies:
            self.program.add_function(name.text, body)
        if self.program.entry_function not in self.program.functions:
            msg = f'No entry function {self.program.entry_function!r}'
            raise ParseError(msg)
        self._resolve_calls()
        LOG.debug(
            'Parsed %d functions with %d nodes',
            len(self.program.functions),
            len(self.program.nodes()),
        )
        return self.program

    def parse_statements(self, *, in_parallel: bool = False) -> list[ProgramNode]:
        """Parse a statement sequence into detached nodes.

        :param in_parallel: whether the statements are meant for a parallel region
        """
        self._in_parallel = in_parallel
        self._scopes.append(set())
        stmts = []
        while self._tok.kind != 'eof':
            stmts.append(self._stmt())
        self._scopes.pop()
        self._resolve_calls()
        return stmts

    def _resolve_calls(self) -> None:
        for call in self._calls:
            if call.name not in self.program.functions:
                msg = f'Unresolved callee {call.name!r}'
                span = call.span or Span(0, 0)
                raise ParseError(msg, span.line, span.col)
        self._calls.clear()

    def _block(self) -> ProgramNode:
        start = self._expect('{')
        block = self._make(NodeKind.BLOCK, start)
        self._scopes.append(set())
        while self._accept('}') is None:
            if self._tok.kind == 'eof':
                msg = "Expected '}' but found end of input"
                raise self._error(msg)
            child = self._stmt()
            child.parent = block
            block.stmts.append(child)
        self._scopes.pop()
        return block

    def _stmt(self) -> ProgramNode:  # noqa: PLR0911
        tok = self._tok
        match tok.kind:
            case 'shared' | 'private':
                return self._decl()
            case 'if':
                return self._if()
            case 'while':
                self._pos += 1
                node = self._make(NodeKind.WHILE, tok, expr=self._paren_expr())
                node.body = self._block()
                node.body.parent = node
                return node
            case 'parallel':
                return self._parallel()
            case 'barrier' | 'flush':
                self._pos += 1
                self._expect(';')
                kind = NodeKind.BARRIER if tok.kind == 'barrier' else NodeKind.FLUSH
                return self._make(kind, tok)
            case 'return':
                if self._in_parallel:
                    msg = 'Return inside a parallel region'
                    raise self._error(msg)
                self._pos += 1
                self._expect(';')
                return self._make(NodeKind.RETURN, tok)
            case 'call':
                self._pos += 1
                return self._stmt_call(self._expect('ident'))
            case 'ident' if self._tokens[self._pos + 1].text == '(':
                self._pos += 1
                return self._stmt_call(tok)
            case 'ident':
                self._pos += 1
                return self._assign(tok, tok.text, deref=False)
            case 'op' if tok.text == '*':
                self._pos += 1
                name = self._expect('ident')
                return self._assign(tok, name.text, deref=True)
        msg = f'Unexpected {tok.text or "end of input"!r}'
        raise self._error(msg)

    def _stmt_call(self, tok: Token) -> ProgramNode:
        self._expect('(')
        self._expect(')')
        self._expect(';')
        node = self._make(NodeKind.CALL, tok, name=tok.text)
        self._calls.append(node)
        return node

    def _assign(self, tok: Token, name: str, *, deref: bool) -> ProgramNode:
        if name == TID and not deref:
            msg = f'Cannot assign to {TID!r}'
            raise self._error(msg, tok)
        self._expect('=')
        expr = self._expr()
        self._expect(';')
        return self._make(NodeKind.ASSIGN, tok, name=name, expr=expr, deref=deref)

    def _decl(self) -> ProgramNode:
        tok = self._tok
        self._pos += 1
        sharing = Sharing(tok.kind)
        name = self._expect('ident')
        self._expect(';')
        if name.text == TID:
            msg = f'Cannot declare {TID!r}'
            raise self._error(msg, name)
        if name.text in self._scopes[-1]:
            msg = f'Redeclared variable {name.text!r} in the same scope'
            raise self._error(msg, name)
        if self._sharing.setdefault(name.text, sharing) is not sharing:
            msg = f'Variable {name.text!r} declared both shared and private'
            raise self._error(msg, name)
        self._scopes[-1].add(name.text)
        return self._make(NodeKind.DECL, tok, name=name.text, sharing=sharing)

    def _if(self) -> ProgramNode:
        tok = self._expect('if')
        node = self._make(NodeKind.IF, tok, expr=self._paren_expr())
        node.then = self._block()
        node.then.parent = node
        if self._accept('else') is not None:
            node.orelse = self._block()
            node.orelse.parent = node
        return node

    def _parallel(self) -> ProgramNode:
        tok = self._expect('parallel')
        if self._in_parallel:
            msg = 'Nested parallel region'
            raise self._error(msg, tok)
        self._in_parallel = True
        try:
            body = self._block()
        finally:
            self._in_parallel = False
        node = self._make(NodeKind.PARALLEL, tok)
        wrap_region_body(self.program, body)
        node.body = body
        body.parent = node
        return node

    def _paren_expr(self) -> Expr:
        self._expect('(')
        e = self._expr()
        self._expect(')')
        return e

    def _expr(self) -> Expr:
        e = self._rel()
        while self._accept('==') is not None:
            e = BinOp('==', e, self._rel())
        return e

    def _rel(self) -> Expr:
        e = self._sum()
        while self._accept('<') is not None:
            e = BinOp('<', e, self._sum())
        return e

    def _sum(self) -> Expr:
        e = self._atom()
        while self._tok.text in {'+', '-'}:
            op = self._tok.text
            self._pos += 1
            e = BinOp(op, e, self._atom())
        return e

    def _atom(self) -> Expr:
        tok = self._tok
        if (t := self._accept('int')) is not None:
            return Const(int(t.text))
        if (t := self._accept('ident')) is not None:
            return Var(t.text)
        if self._accept('&') is not None:
            return AddrOf(self._expect('ident').text)
        if self._accept('*') is not None:
            return Deref(self._expect('ident').text)
        if self._accept('(') is not None:
            e = self._expr()
            self._expect(')')
            return e
        msg = f'Expected expression but found {tok.text or "end of input"!r}'
        raise self._error(msg)


def wrap_region_body(program: Program, body: ProgramNode) -> ProgramNode:
    """Materialize the implicit entry and exit barriers of a region body block."""
    entry = program.make(NodeKind.BARRIER, role=BarrierRole.ENTRY)
    exit_ = program.make(NodeKind.BARRIER, role=BarrierRole.EXIT)
    body.stmts = [entry, *body.stmts, exit_]
    entry.parent = exit_.parent = body
    return body


def parse(source: str) -> Program:
    """Parse source text into a program.

    :param source: source text
    :return: the parsed program
    :raise ParseError: on malformed input
    """
    return Parser(source, Program()).parse_program()


def parse_statements(
    source: str, program: Program, *, in_parallel: bool = False
) -> list[ProgramNode]:
    """Parse statements into detached nodes with ids from ``program``.

    The result is meant as payload for elementary transformations.
    """
    return Parser(source, program).parse_statements(in_parallel=in_parallel)
