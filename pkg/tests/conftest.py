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

from collections.abc import Callable, Iterable
from pathlib import Path
from typing import Final

import pytest
from homeo.analysis.dataflow import DataflowAnalysis, Direction
from homeo.analysis.lattice import render
from homeo.analysis.registry import create
from homeo.analysis.supergraph import STRUCTURAL
from homeo.ir.cfg import Edge
from homeo.ir.nodes import NodeKind, Program, ProgramNode
from homeo.ir.parser import parse
from homeo.stabilizer import Mode, Stabilizer

STRAIGHT: Final[str] = """\
func main() {
    shared x;
    x = 1;
    x = x + 1;
}
"""

# Thread 0 writes ``a`` before the barrier, everybody reads it after
NEEDED_BARRIER: Final[str] = """\
func main() {
    shared a;
    shared b;
    private t;
    parallel {
        if (tid == 0) {
            a = 1;
        }
        barrier;
        t = a;
        if (tid == 0) {
            b = t + 1;
        }
    }
}
"""

REDUNDANT_BARRIER: Final[str] = """\
func main() {
    shared a;
    shared b;
    private t;
    private u;
    parallel {
        t = tid + 1;
        barrier;
        u = t;
        if (tid == 0) {
            a = u;
        }
    }
    b = a;
}
"""

ADJACENT_REGIONS: Final[str] = """\
func main() {
    shared a;
    shared b;
    private t;
    parallel {
        if (tid == 0) {
            a = 1;
        }
    }
    t = 2;
    parallel {
        if (tid == 0) {
            b = a + t;
        }
    }
}
"""

CALL_WITH_BARRIERS: Final[str] = """\
func main() {
    shared a;
    shared b;
    private t;
    parallel {
        if (tid == 0) {
            a = 1;
        }
        call h();
        t = b;
    }
}

func h() {
    barrier;
    t = a;
    if (tid == 0) {
        b = t;
    }
    barrier;
}
"""

POINTERS: Final[str] = """\
func main() {
    shared a;
    shared b;
    private p;
    private q;
    p = &a;
    if (a < 1) {
        p = &b;
    }
    q = p;
    *q = 1;
}
"""

LOOP_BARRIER: Final[str] = """\
func main() {
    shared a;
    private c;
    parallel {
        c = 0;
        while (c < 2) {
            barrier;
            c = c + 1;
        }
    }
}
"""

FLUSHED: Final[str] = """\
func main() {
    shared a;
    private t;
    parallel {
        if (tid == 0) {
            a = 1;
        }
        flush;
        t = a;
    }
}
"""


def labeled(program: Program, label: str) -> ProgramNode:
    """The single attached node with the given label."""
    found = [n for n in program.nodes() if n.label() == label]
    assert len(found) == 1, f'{len(found)} nodes labeled {label!r}'
    return found[0]


def stabilized(
    source: str, mode: Mode = Mode.LZUPD, names: Iterable[str] = (), *, strict: bool = False
) -> Stabilizer:
    """A stabilizer on a fresh parse with the named analyses registered."""
    homeo = Stabilizer(parse(source), mode, strict=strict)
    for a in create(names):
        homeo.register(a)
    return homeo


def naive_solve(a: DataflowAnalysis) -> dict[str, dict[str, list[str]]]:
    """Round-robin fixed point of the equations of a registered analysis.

    Visits all nodes in id order until nothing changes, meeting over every
    dependency and every sibling barrier. Same rendering as ``dump``.
    """
    homeo = a.stabilizer
    graph = homeo.graph
    info = homeo.phase.info
    program = homeo.program
    lat = a.lattice
    forward = a.direction is Direction.FORWARD
    main = program.functions[program.entry_function]
    boundary_node = main.entry.id if forward else main.exit.id
    inn = dict.fromkeys(graph.nodes, lat.top)
    out = dict.fromkeys(graph.nodes, lat.top)
    changed = True
    while changed:
        changed = False
        for n in sorted(graph.nodes):
            deps = graph.preds(n) if forward else graph.succs(n)
            new_in = a.boundary() if n == boundary_node else lat.top
            communicated = []
            for d in deps:
                src, dst = (d, n) if forward else (n, d)
                if any(graph.has_edge(Edge(src, dst, k)) for k in STRUCTURAL):
                    new_in = lat.meet(new_in, out[d])
                else:
                    communicated.append((d, info.labels.get((src, dst), frozenset())))
            for d, locs in communicated:
                new_in = lat.meet_on(new_in, out[d], locs)
            node = graph.nodes[n]
            if node.kind is NodeKind.BARRIER:
                private, shared = lat.split(new_in, program.is_shared)
                for s in sorted(info.siblings(n)):
                    shared = lat.meet(shared, lat.split(inn[s], program.is_shared)[1])
                new_out = lat.join_parts(private, shared)
            else:
                new_out = a.transfer(node, new_in)
            if new_in != inn[n] or new_out != out[n]:
                inn[n], out[n] = new_in, new_out
                changed = True
    return {
        str(n): {'in': render(inn[n]), 'out': render(out[n])} for n in sorted(graph.nodes)
    }


@pytest.fixture
def write_source(tmp_path: Path) -> Callable[..., Path]:
    def write(source: str, name: str = 'prog.hc') -> Path:
        path = tmp_path.joinpath(name)
        path.write_text(source, encoding='utf-8')
        return path

    return write

