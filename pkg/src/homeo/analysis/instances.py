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

"""The data-flow analyses: points-to, reaching definitions, liveness, copies."""

from typing import ClassVar, Final, override

from homeo.ir.nodes import (
    AddrOf,
    BinOp,
    Deref,
    Expr,
    NodeKind,
    ProgramNode,
    Var,
    expr_derefs,
    expr_reads,
)
from homeo.stabilizer import stable_getter

from .dataflow import DataflowAnalysis, Direction
from .lattice import EMPTY, Fact, Lattice, MayLattice, MustLattice, Value

LIVE: Final[str] = 'live'


def _kill(v: Fact, *locs: str) -> Fact:
    return frozenset(p for p in v if p[0] not in locs)


def _targets(v: Fact, loc: str) -> frozenset[str]:
    return frozenset(val for var, val in v if var == loc)


class PointsTo(DataflowAnalysis):
    """May points-to sets of pointer variables.

    Direct assignments update strongly, stores through a pointer weakly.
    """

    name = 'pta'
    lattice: ClassVar[Lattice] = MayLattice()

    def pointees(self, e: Expr, v: Fact) -> frozenset[str]:
        """Locations the value of ``e`` may point to."""
        match e:
            case AddrOf(x):
                return frozenset({x})
            case Var(q):
                return _targets(v, q)
            case Deref(q):
                return frozenset(t for r in _targets(v, q) for t in _targets(v, r))
            case BinOp(_, left, right):
                return self.pointees(left, v) | self.pointees(right, v)
        return frozenset()

    @override
    def transfer(self, node: ProgramNode, value: Value) -> Value:
        assert value is not None
        match node.kind:
            case NodeKind.ASSIGN:
                assert node.expr is not None
                targets = self.pointees(node.expr, value)
                if node.deref:
                    return value | {(r, t) for r in _targets(value, node.name) for t in targets}
                return _kill(value, node.name) | {(node.name, t) for t in targets}
            case NodeKind.DECL:
                return _kill(value, node.name)
        return value

    @stable_getter
    def points_to(self, n: int, var: str) -> frozenset[str]:
        """Pointees of ``var`` right before node ``n``."""
        v = self.inn.get(n, EMPTY)
        assert v is not None
        return _targets(v, var)

    @stable_getter
    def may_access(self, n: int) -> frozenset[str]:
        """Locations node ``n`` may access through pointers."""
        node = self.stabilizer.graph.nodes[n]
        v = self.inn.get(n, EMPTY)
        assert v is not None
        ptrs = set(expr_derefs(node.expr)) if node.expr is not None else set()
        if node.deref:
            ptrs.add(node.name)
        return frozenset(t for p in ptrs for t in _targets(v, p))


class ReachingDefinitions(DataflowAnalysis):
    """Definition sites (node ids) that may reach a point, per variable."""

    name = 'rd'
    lattice: ClassVar[Lattice] = MayLattice()

    @override
    def transfer(self, node: ProgramNode, value: Value) -> Value:
        assert value is not None
        site = str(node.id)
        match node.kind:
            case NodeKind.ASSIGN if node.deref:
                return value | {(v, site) for v in self.program.address_taken()}
            case NodeKind.ASSIGN | NodeKind.DECL:
                return _kill(value, node.name) | {(node.name, site)}
        return value

    @stable_getter
    def reaching(self, n: int, var: str) -> frozenset[int]:
        """Definition sites of ``var`` reaching node ``n``."""
        v = self.inn.get(n, EMPTY)
        assert v is not None
        return frozenset(int(s) for s in _targets(v, var))


class Liveness(DataflowAnalysis):
    """Live variables. Shared variables are live when the program ends."""

    name = 'lv'
    direction = Direction.BACKWARD
    lattice: ClassVar[Lattice] = MayLattice()

    @override
    def boundary(self) -> Value:
        return frozenset((v, LIVE) for v in self.program.shared_variables())

    def uses(self, node: ProgramNode) -> frozenset[str]:
        """Variables a node reads."""
        used = node.reads()
        if node.expr is not None and expr_derefs(node.expr):
            used |= self.program.address_taken()
        return used

    @override
    def transfer(self, node: ProgramNode, value: Value) -> Value:
        assert value is not None
        match node.kind:
            case NodeKind.ASSIGN if not node.deref:
                value = _kill(value, node.name)
            case NodeKind.DECL:
                return _kill(value, node.name)
        return value | {(v, LIVE) for v in self.uses(node)}

    @stable_getter
    def live_before(self, n: int) -> frozenset[str]:
        """Variables live right before node ``n``."""
        v = self.out.get(n, EMPTY)
        assert v is not None
        return frozenset(var for var, _ in v)

    @stable_getter
    def live_after(self, n: int) -> frozenset[str]:
        """Variables live right after node ``n``."""
        v = self.inn.get(n, EMPTY)
        assert v is not None
        return frozenset(var for var, _ in v)


class CopyPropagation(DataflowAnalysis):
    """Available copies ``x = y`` on every path."""

    name = 'cp'
    lattice: ClassVar[Lattice] = MustLattice()

    @override
    def transfer(self, node: ProgramNode, value: Value) -> Value:
        if value is None:
            return None
        match node.kind:
            case NodeKind.ASSIGN if node.deref:
                touched = self.program.address_taken()
                return frozenset(p for p in value if p[0] not in touched and p[1] not in touched)
            case NodeKind.ASSIGN:
                x = node.name
                value = frozenset(p for p in value if x not in p)
                if isinstance(node.expr, Var) and node.expr.name != x:
                    value |= {(x, node.expr.name)}
                return value
            case NodeKind.DECL:
                return frozenset(p for p in value if node.name not in p)
        return value

    @stable_getter
    def copies(self, n: int) -> dict[str, str]:
        """Copies available right before node ``n`` (``x -> y`` for ``x = y``)."""
        v = self.inn.get(n)
        return dict(sorted(v)) if v is not None else {}

    @stable_getter
    def substitutable(self, n: int) -> frozenset[str]:
        """Variables read by node ``n`` that hold a copy of another variable."""
        node = self.stabilizer.graph.nodes[n]
        v = self.inn.get(n)
        if v is None or node.expr is None:
            return frozenset()
        return expr_reads(node.expr) & {x for x, _ in v}


ANALYSES: Final[dict[str, type[DataflowAnalysis]]] = {
    a.name: a for a in (PointsTo, ReachingDefinitions, Liveness, CopyPropagation)
}
