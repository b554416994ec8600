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

"""Strongly connected components and their topological order."""

from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass

type Succs = Callable[[int], Iterable[int]]


def strongly_connected(nodes: Iterable[int], succs: Succs) -> list[list[int]]:
    """Iterative Tarjan.

    Sources are visited in ascending order and successors in ascending order, so the
    result is deterministic. Components come out in reverse topological order (sinks
    first).
    """
    preorder: dict[int, int] = {}
    lowlink: dict[int, int] = {}
    found: set[int] = set()
    stack: list[int] = []
    result: list[list[int]] = []
    counter = 0
    adjacency: dict[int, list[int]] = {}

    def adj(v: int) -> list[int]:
        if v not in adjacency:
            adjacency[v] = sorted(set(succs(v)))
        return adjacency[v]

    for source in sorted(nodes):
        if source in found:
            continue
        queue = [source]
        while queue:
            v = queue[-1]
            if v not in preorder:
                counter += 1
                preorder[v] = counter
            done = True
            for w in adj(v):
                if w not in preorder:
                    queue.append(w)
                    done = False
                    break
            if not done:
                continue
            lowlink[v] = preorder[v]
            for w in adj(v):
                if w not in found:
                    if preorder[w] > preorder[v]:
                        lowlink[v] = min(lowlink[v], lowlink[w])
                    else:
                        lowlink[v] = min(lowlink[v], preorder[w])
            queue.pop()
            if lowlink[v] == preorder[v]:
                component = [v]
                while stack and preorder[stack[-1]] > preorder[v]:
                    component.append(stack.pop())
                found.update(component)
                result.append(sorted(component))
            else:
                stack.append(v)
    return result


@dataclass(frozen=True)
class SccIndex:
    """SCC partition with positions usable as worklist priorities.

    ``components`` is topologically ordered; inside a component nodes follow a
    reverse post-order from the component's entry nodes.
    """

    components: tuple[tuple[int, ...], ...]
    scc_of: Mapping[int, int]
    position: Mapping[int, tuple[int, int]]

    def same_scc(self, a: int, b: int) -> bool:
        """Whether two nodes share a component."""
        return self.scc_of.get(a, -1) == self.scc_of.get(b, -2)

    def is_trivial(self, scc: int) -> bool:
        """Whether a component is a single node."""
        return len(self.components[scc]) == 1


def condense(nodes: Iterable[int], succs: Succs, preds: Succs) -> SccIndex:
    """Compute the SCC index of a graph given by its node set and adjacency."""
    node_list = sorted(nodes)
    comps = list(reversed(strongly_connected(node_list, succs)))
    scc_of = {n: i for i, comp in enumerate(comps) for n in comp}
    ordered = []
    for i, comp in enumerate(comps):
        members = set(comp)
        entries = [n for n in comp if any(scc_of.get(p) != i for p in preds(n))]
        ordered.append(tuple(_reverse_postorder(entries or comp[:1], members, succs)))
    for comp_nodes, comp in zip(ordered, comps, strict=True):
        assert len(comp_nodes) == len(comp)
    position = {
        n: (i, j) for i, comp_nodes in enumerate(ordered) for j, n in enumerate(comp_nodes)
    }
    return SccIndex(tuple(ordered), scc_of, position)


def _reverse_postorder(roots: list[int], members: set[int], succs: Succs) -> list[int]:
    seen: set[int] = set()
    post: list[int] = []
    for root in [*roots, *sorted(members)]:
        if root in seen:
            continue
        seen.add(root)
        stack = [(root, iter(sorted(s for s in succs(root) if s in members)))]
        while stack:
            v, it = stack[-1]
            for w in it:
                if w not in seen:
                    seen.add(w)
                    stack.append((w, iter(sorted(s for s in succs(w) if s in members))))
                    break
            else:
                stack.pop()
                post.append(v)
    post.reverse()
    return post
