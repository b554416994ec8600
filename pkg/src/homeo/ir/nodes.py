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

"""Program representation: expressions, statements, functions and programs."""

from __future__ import annotations

import copy
from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING, Final, NamedTuple, override

from homeo.errors import TransformError
from homeo.util import cls_name

if TYPE_CHECKING:
    from .transform import ChangeObserver

TID: Final[str] = 'tid'


class NodeKind(StrEnum):
    """Kinds of program nodes."""

    ENTRY = 'Entry'
    EXIT = 'Exit'
    DECL = 'Decl'
    ASSIGN = 'Assign'
    IF = 'If'
    WHILE = 'While'
    BLOCK = 'Block'
    PARALLEL = 'Parallel'
    BARRIER = 'Barrier'
    FLUSH = 'Flush'
    CALL = 'Call'
    RETURN = 'Return'

    @override
    def __repr__(self) -> str:
        return f'{cls_name(self)}.{self.name}'

    @property
    def executable(self) -> bool:
        """Whether nodes of this kind are super-graph nodes."""
        return self not in {NodeKind.BLOCK, NodeKind.PARALLEL}


class Sharing(StrEnum):
    """Data-sharing attribute of a declaration."""

    SHARED = 'shared'
    PRIVATE = 'private'


class BarrierRole(StrEnum):
    """Role of an implicit barrier of a parallel region."""

    ENTRY = 'entry'
    EXIT = 'exit'


class Span(NamedTuple):
    """Source position."""

    line: int
    col: int


@dataclass(frozen=True, slots=True)
class Const:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class AddrOf:
    name: str


@dataclass(frozen=True, slots=True)
class Deref:
    name: str


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


type Expr = Const | Var | AddrOf | Deref | BinOp

BINARY_OPS: Final[tuple[str, ...]] = ('==', '<', '+', '-')


def iter_expr(e: Expr) -> Iterator[Expr]:
    """Yield ``e`` and all of its sub-expressions in pre-order."""
    stack = [e]
    while stack:
        x = stack.pop()
        yield x
        if isinstance(x, BinOp):
            stack.extend((x.right, x.left))


def expr_reads(e: Expr) -> frozenset[str]:
    """Variables whose value ``e`` reads directly (including dereferenced pointers)."""
    return frozenset(x.name for x in iter_expr(e) if isinstance(x, Var | Deref))


def expr_derefs(e: Expr) -> frozenset[str]:
    """Pointers dereferenced by ``e``."""
    return frozenset(x.name for x in iter_expr(e) if isinstance(x, Deref))


def expr_addrs(e: Expr) -> frozenset[str]:
    """Variables whose address ``e`` takes."""
    return frozenset(x.name for x in iter_expr(e) if isinstance(x, AddrOf))


@dataclass(eq=False)
class ProgramNode:
    """A node of the program tree.

    Nodes are compared by identity. ``id`` is assigned once from the owning program's
    counter and never changes, not even when a detached node is attached again.
    Predicates and right-hand sides are immutable; changing one means replacing the
    statement.
    """

    id: int
    kind: NodeKind
    name: str = ''
    expr: Expr | None = None
    deref: bool = False
    sharing: Sharing | None = None
    role: BarrierRole | None = None
    stmts: list[ProgramNode] = field(default_factory=list)
    body: ProgramNode | None = None
    then: ProgramNode | None = None
    orelse: ProgramNode | None = None
    parent: ProgramNode | None = field(default=None, repr=False)
    span: Span | None = field(default=None, repr=False)

    @override
    def __repr__(self) -> str:
        return f'{self.kind}#{self.id}'

    @property
    def implicit(self) -> bool:
        """Whether this is an implicit region barrier."""
        return self.role is not None

    def children(self) -> list[ProgramNode]:
        """Direct children in source order."""
        match self.kind:
            case NodeKind.BLOCK:
                return list(self.stmts)
            case NodeKind.WHILE | NodeKind.PARALLEL:
                return [self.body] if self.body is not None else []
            case NodeKind.IF:
                return [c for c in (self.then, self.orelse) if c is not None]
            case _:
                return []

    def walk(self) -> Iterator[ProgramNode]:
        """Pre-order traversal of the subtree rooted at this node."""
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children()))

    def contains(self, *kinds: NodeKind) -> bool:
        """Whether the subtree contains a node of one of ``kinds``."""
        return any(n.kind in kinds for n in self.walk())

    def reads(self) -> frozenset[str]:
        """Variables read directly by this statement."""
        r = expr_reads(self.expr) if self.expr is not None else frozenset()
        if self.kind is NodeKind.ASSIGN and self.deref:
            r |= {self.name}
        return r

    def label(self) -> str:
        """Short one-line description (used for graph output)."""
        match self.kind:
            case NodeKind.ASSIGN:
                assert self.expr is not None
                return f'{'*' if self.deref else ''}{self.name} = {format_expr(self.expr)}'
            case NodeKind.DECL:
                return f'{self.sharing} {self.name}'
            case NodeKind.IF | NodeKind.WHILE:
                assert self.expr is not None
                return f'{self.kind.lower()} ({format_expr(self.expr)})'
            case NodeKind.CALL:
                return f'{self.name}()'
            case NodeKind.ENTRY | NodeKind.EXIT:
                return f'{self.kind}({self.name})'
            case NodeKind.BARRIER if self.role is not None:
                return f'barrier[{self.role}]'
            case _:
                return self.kind.lower()


_PRECEDENCE: Final[dict[str, int]] = {'==': 1, '<': 2, '+': 3, '-': 3}


def format_expr(e: Expr, parent_prec: int = 0, *, right: bool = False) -> str:
    """Canonical source text of an expression with minimal parentheses."""
    match e:
        case Const(value):
            return str(value)
        case Var(name):
            return name
        case AddrOf(name):
            return f'&{name}'
        case Deref(name):
            return f'*{name}'
        case BinOp(op, left, r):
            prec = _PRECEDENCE[op]
            s = f'{format_expr(left, prec)} {op} {format_expr(r, prec, right=True)}'
            if prec < parent_prec or (right and prec == parent_prec):
                return f'({s})'
            return s
    msg = f'Not an expression: {e!r}'
    raise TypeError(msg)


@dataclass(eq=False)
class Function:
    """A function with its synthetic entry and exit nodes."""

    name: str
    entry: ProgramNode
    exit: ProgramNode
    body: ProgramNode


class Program:
    """A parsed program.

    The program owns the id counter and an index of all attached nodes. An attached
    ``observer`` (the stabilizer) is told about every elementary transformation.
    """

    def __init__(self) -> None:
        """Initialize an empty program."""
        self.functions: dict[str, Function] = {}
        self.entry_function = 'main'
        self.observer: ChangeObserver | None = None
        self._next_id = 0
        self._nodes: dict[int, ProgramNode] = {}
        self._roots: dict[int, Function] = {}
        self._version = 0
        self._cache: dict[str, tuple[int, frozenset[str]]] = {}

    @property
    def version(self) -> int:
        """Counter bumped on every structural change."""
        return self._version

    def make(self, kind: NodeKind, **attrs: object) -> ProgramNode:
        """Create a detached node with a fresh id."""
        node = ProgramNode(self._next_id, kind, **attrs)  # type: ignore[arg-type]
        self._next_id += 1
        return node

    def add_function(self, name: str, body: ProgramNode) -> Function:
        """Create a function around ``body`` and attach it."""
        fn = Function(
            name,
            self.make(NodeKind.ENTRY, name=name),
            self.make(NodeKind.EXIT, name=name),
            body,
        )
        self.functions[name] = fn
        for n in (fn.entry, fn.exit, fn.body):
            self._roots[n.id] = fn
        self._nodes[fn.entry.id] = fn.entry
        self._nodes[fn.exit.id] = fn.exit
        self.attach(body)
        return fn

    def attach(self, subtree: ProgramNode) -> list[ProgramNode]:
        """Index a subtree that was linked into the tree. Return its nodes."""
        nodes = list(subtree.walk())
        for n in nodes:
            if n.id in self._nodes and self._nodes[n.id] is not n:
                msg = f'Node id {n.id} already in use'
                raise TransformError(msg)
        for n in nodes:
            self._nodes[n.id] = n
        self._version += 1
        return nodes

    def detach(self, subtree: ProgramNode) -> list[ProgramNode]:
        """Drop a subtree that was unlinked from the tree. Return its nodes."""
        nodes = list(subtree.walk())
        for n in nodes:
            self._nodes.pop(n.id, None)
        self._version += 1
        return nodes

    def node(self, node_id: int) -> ProgramNode:
        """Return the attached node with the given id."""
        try:
            return self._nodes[node_id]
        except KeyError as e:
            msg = f'No attached node with id {node_id}'
            raise TransformError(msg) from e

    def nodes(self) -> list[ProgramNode]:
        """All attached nodes ordered by id."""
        return [self._nodes[i] for i in sorted(self._nodes)]

    def has_id(self, node_id: int) -> bool:
        """Whether an attached node carries ``node_id``."""
        return node_id in self._nodes

    def is_attached(self, node: ProgramNode) -> bool:
        """Whether ``node`` is part of this program."""
        return self._nodes.get(node.id) is node

    def function_of(self, node: ProgramNode) -> Function:
        """The function whose tree contains ``node``."""
        root = node
        while root.parent is not None:
            root = root.parent
        fn = self._roots.get(root.id)
        if fn is None or not self.is_attached(node):
            msg = f'{node!r} is not attached to the program'
            raise TransformError(msg)
        return fn

    @staticmethod
    def region_of(node: ProgramNode) -> ProgramNode | None:
        """The lexically enclosing parallel region, if any."""
        p = node.parent
        while p is not None:
            if p.kind is NodeKind.PARALLEL:
                return p
            p = p.parent
        return None

    def _cached(self, key: str, compute: Iterator[str]) -> frozenset[str]:
        hit = self._cache.get(key)
        if hit is not None and hit[0] == self._version:
            return hit[1]
        value = frozenset(compute)
        self._cache[key] = self._version, value
        return value

    def private_names(self) -> frozenset[str]:
        """Names declared private anywhere, plus the thread number ``tid``."""
        return self._cached(
            'private',
            (
                n.name
                for n in self._nodes.values()
                if n.kind is NodeKind.DECL and n.sharing is Sharing.PRIVATE
            ),
        ) | {TID}

    def is_shared(self, name: str) -> bool:
        """Whether ``name`` denotes shared memory (the default for any name)."""
        return name not in self.private_names()

    def shared_decls(self) -> frozenset[str]:
        """Names declared shared."""
        return self._cached(
            'shared',
            (
                n.name
                for n in self._nodes.values()
                if n.kind is NodeKind.DECL and n.sharing is Sharing.SHARED
            ),
        )

    def address_taken(self) -> frozenset[str]:
        """Variables whose address is taken somewhere in the program."""
        return self._cached(
            'addr',
            (
                a
                for n in self._nodes.values()
                if n.expr is not None
                for a in expr_addrs(n.expr)
            ),
        )

    def variables(self) -> frozenset[str]:
        """All variable names mentioned by the program, including ``tid``."""

        def names() -> Iterator[str]:
            yield TID
            for n in self._nodes.values():
                if n.kind in {NodeKind.DECL, NodeKind.ASSIGN}:
                    yield n.name
                if n.expr is not None:
                    for x in iter_expr(n.expr):
                        if isinstance(x, Var | Deref | AddrOf):
                            yield x.name

        return self._cached('vars', names())

    def shared_variables(self) -> frozenset[str]:
        """All shared variable names mentioned by the program."""
        return frozenset(v for v in self.variables() if self.is_shared(v))

    def snapshot(self) -> Program:
        """Id-preserving deep copy without observer."""
        observer, self.observer = self.observer, None
        try:
            return copy.deepcopy(self)
        finally:
            self.observer = observer


def structure(program: Program) -> tuple[object, ...]:
    """Id-free structural fingerprint of a program."""

    def node(n: ProgramNode) -> tuple[object, ...]:
        return (
            n.kind,
            n.name,
            n.expr,
            n.deref,
            n.sharing,
            n.role,
            tuple(node(c) for c in n.children()),
            n.orelse is not None,
        )

    return tuple(
        (name, node(fn.body)) for name, fn in sorted(program.functions.items())
    )
