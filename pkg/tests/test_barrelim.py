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

import re
from pathlib import Path

import pytest
from homeo import barrelim
from homeo.barrelim import BarrElim
from homeo.bench.interpreter import interpret
from homeo.errors import BarrElimError
from homeo.ir.nodes import NodeKind
from homeo.ir.parser import parse
from homeo.ir.printer import print_program
from homeo.stabilizer import Mode

from tests.conftest import (
    ADJACENT_REGIONS,
    CALL_WITH_BARRIERS,
    NEEDED_BARRIER,
    REDUNDANT_BARRIER,
    labeled,
    stabilized,
)

ANALYSES = ['pta', 'rd', 'lv', 'cp', 'callgraph']


def _optimize(source: str, mode: Mode = Mode.LZUPD) -> tuple[str, barrelim.OptReport]:
    homeo = stabilized(source, mode, ANALYSES)
    report = BarrElim(homeo).run()
    return print_program(homeo.program), report


@pytest.mark.parametrize('mode', list(Mode))
def test_redundant_barrier_removed(mode: Mode) -> None:
    optimized, report = _optimize(REDUNDANT_BARRIER, mode)
    assert optimized == REDUNDANT_BARRIER.replace('        barrier;\n', '')
    assert report.barriers_removed == 1
    assert report.iterations == 2
    if mode.startswith('RP'):
        assert report.relevant_change_points == ['remove-barrier']
    else:
        assert not report.relevant_change_points


@pytest.mark.parametrize('mode', list(Mode))
def test_needed_barrier_kept(mode: Mode) -> None:
    optimized, report = _optimize(NEEDED_BARRIER, mode)
    assert optimized == NEEDED_BARRIER
    assert report.barriers_removed == 0
    assert report.iterations == 1


def test_conflicts() -> None:
    homeo = stabilized(NEEDED_BARRIER, names=ANALYSES)
    program = homeo.program
    b = next(n for n in program.nodes() if n.kind is NodeKind.BARRIER and not n.implicit)
    assert BarrElim(homeo).conflicts(b) == {'a'}


def test_regions_merged() -> None:
    optimized, report = _optimize(ADJACENT_REGIONS)
    assert report.regions_merged == 1
    assert report.barriers_removed == 1
    assert optimized == (
        'func main() {\n'
        '    shared a;\n'
        '    shared b;\n'
        '    private t;\n'
        '    parallel {\n'
        '        if (tid == 0) {\n'
        '            a = 1;\n'
        '        }\n'
        '        barrier;\n'
        '        t = 2;\n'
        '        if (tid == 0) {\n'
        '            b = a + t;\n'
        '        }\n'
        '    }\n'
        '}\n'
    )


def test_merge_blocked_by_private_write() -> None:
    source = ADJACENT_REGIONS.replace('            a = 1;\n', '            a = 1;\n        }\n        t = tid;\n        if (1) {\n')
    program = parse(source)
    assert labeled(program, 't = tid')
    optimized, report = _optimize(source)
    assert report.regions_merged == 0
    assert optimized.count('parallel {') == 2


def test_call_inlined() -> None:
    optimized, report = _optimize(CALL_WITH_BARRIERS)
    assert report.calls_inlined == 1
    assert report.barriers_removed == 0
    main = optimized.split('\n\n')[0]
    assert 'call h();' not in main
    assert main.count('barrier;') == 2


SHADOWING_CALL = """\
func main() {
    shared a;
    shared b;
    parallel {
        private t;
        t = tid + 5;
        if (tid == 0) {
            a = 1;
        }
        call h();
        if (tid == 0) {
            b = t;
        }
    }
}

func h() {
    private t;
    barrier;
    t = a;
    barrier;
}
"""


def test_inlined_locals_renamed() -> None:
    optimized, report = _optimize(SHADOWING_CALL)
    assert report.calls_inlined == 1
    main = optimized.split('\n\n')[0]
    assert 'if (1)' not in main
    local = re.search(r'private (t_\d+);', main)
    assert local is not None
    assert f'{local.group(1)} = a;' in main
    assert 'b = t;' in main
    expected = {'a': 1, 'b': 5}
    for seed in range(3):
        assert interpret(parse(SHADOWING_CALL), 2, seed) == expected
        assert interpret(parse(optimized), 2, seed) == expected


def test_recursive_call_not_inlined() -> None:
    source = CALL_WITH_BARRIERS.replace('    barrier;\n}\n', '    barrier;\n    call h();\n}\n')
    optimized, report = _optimize(source)
    assert report.calls_inlined == 0
    assert 'call h();' in optimized.split('\n\n')[0]


@pytest.mark.parametrize(
    'source', [REDUNDANT_BARRIER, NEEDED_BARRIER, ADJACENT_REGIONS, CALL_WITH_BARRIERS]
)
@pytest.mark.parametrize('threads', [1, 2, 3])
def test_same_behaviour(source: str, threads: int) -> None:
    optimized, _ = _optimize(source)
    for seed in range(8):
        assert interpret(parse(optimized), threads, seed) == interpret(
            parse(source), threads, seed
        )


def test_iteration_cap() -> None:
    # Merging and the barrier removal it enables take two changing iterations
    homeo = stabilized(ADJACENT_REGIONS, names=ANALYSES)
    with pytest.raises(BarrElimError, match='No fixed point after 1 iterations') as e:
        BarrElim(homeo, max_iterations=1).run()
    assert e.value.report.regions_merged == 1


def test_only_stabilizer_entry_point() -> None:
    text = Path(barrelim.__file__).read_text(encoding='utf-8')
    assert not re.search(r'\.(compute|handle_update|stabilize)\(', text)
    assert text.count('stabilize_now') == 1
