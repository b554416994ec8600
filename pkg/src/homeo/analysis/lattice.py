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

"""Flow-fact lattices.

Flow facts are sets of ``(location, value)`` pairs: a pointer and a pointee, a
variable and a definition site, a variable and a copy source. The location of a pair
decides whether it belongs to the shared or the private part of a fact.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable, Collection, Iterable
from typing import Final, override

type Pair = tuple[str, str]
type Fact = frozenset[Pair]
# ``None`` is the top of a must lattice (every pair holds)
type Value = Fact | None

EMPTY: Final[Fact] = frozenset()


class Lattice(ABC):
    """Meet semi-lattice over flow facts."""

    top: Value

    @abstractmethod
    def meet(self, a: Value, b: Value) -> Value:
        """Greatest lower bound."""

    @abstractmethod
    def meet_on(self, a: Value, b: Value, locs: Collection[str]) -> Value:
        """Meet ``b`` into ``a`` for the given locations only."""

    @abstractmethod
    def leq(self, a: Value, b: Value) -> bool:
        """Partial order: ``a`` is at most as informative as ``b``."""

    def meet_all(self, values: Iterable[Value]) -> Value:
        """Meet of any number of values (``top`` for none)."""
        acc = self.top
        for v in values:
            acc = self.meet(acc, v)
        return acc

    @staticmethod
    def split(v: Value, shared: Callable[[str], bool]) -> tuple[Value, Value]:
        """Private and shared part of a value."""
        if v is None:
            return None, None
        return (
            frozenset(p for p in v if not shared(p[0])),
            frozenset(p for p in v if shared(p[0])),
        )

    @staticmethod
    def join_parts(private: Value, shared: Value) -> Value:
        """Reassemble a value from disjoint parts."""
        if private is None or shared is None:
            return None
        return private | shared


class MayLattice(Lattice):
    """Union lattice: a fact holds if it holds on some path."""

    top = EMPTY

    @override
    def meet(self, a: Value, b: Value) -> Value:
        assert a is not None
        assert b is not None
        return a | b

    @override
    def meet_on(self, a: Value, b: Value, locs: Collection[str]) -> Value:
        assert a is not None
        assert b is not None
        return a | frozenset(p for p in b if p[0] in locs)

    @override
    def leq(self, a: Value, b: Value) -> bool:
        assert a is not None
        assert b is not None
        return a >= b


class MustLattice(Lattice):
    """Intersection lattice: a fact holds if it holds on every path."""

    top = None

    @override
    def meet(self, a: Value, b: Value) -> Value:
        if a is None:
            return b
        if b is None:
            return a
        return a & b

    @override
    def meet_on(self, a: Value, b: Value, locs: Collection[str]) -> Value:
        if a is None or b is None:
            return a
        return frozenset(p for p in a if p[0] not in locs or p in b)

    @override
    def leq(self, a: Value, b: Value) -> bool:
        if b is None:
            return True
        if a is None:
            return False
        return a <= b


def render(v: Value) -> list[str]:
    """Canonical rendering of a value."""
    if v is None:
        return ['T']
    return [f'{loc}->{val}' for loc, val in sorted(v)]
