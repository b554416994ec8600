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
from homeo.bench.corpus import CorpusShape, characteristics, gen_corpus, generate
from homeo.bench.interpreter import interpret
from homeo.ir.parser import parse
from homeo.ir.printer import print_program
from pydantic import ValidationError

SMALL = CorpusShape(nodes=80, parallel=2, barriers=4, functions=1, shared=3)


def test_deterministic() -> None:
    assert generate(SMALL, 7) == generate(SMALL, 7)
    assert generate(SMALL, 7) != generate(SMALL, 8)


@pytest.mark.parametrize('seed', range(5))
def test_canonical(seed: int) -> None:
    source = generate(SMALL, seed)
    assert print_program(parse(source)) == source


@pytest.mark.parametrize('seed', range(5))
def test_requested_barriers(seed: int) -> None:
    c = characteristics(parse(generate(SMALL, seed)))
    assert c['parallelConstructs'] == SMALL.parallel
    assert c['barriers'] == SMALL.barriers


def test_no_barriers() -> None:
    shape = SMALL.model_copy(update={'barriers': 0})
    assert characteristics(parse(generate(shape, 3)))['barriers'] == 0


def test_no_regions() -> None:
    shape = SMALL.model_copy(update={'parallel': 0})
    c = characteristics(parse(generate(shape, 1)))
    assert c['parallelConstructs'] == 0
    assert c['barriers'] == 0
    assert c['phases'] == 0


@pytest.mark.parametrize('seed', range(3))
def test_size(seed: int) -> None:
    shape = CorpusShape(nodes=2000, parallel=10)
    c = characteristics(parse(generate(shape, seed)))
    assert 1600 <= c['nodes'] <= 2400
    assert c['parallelConstructs'] == 10


@pytest.mark.parametrize('seed', range(4))
def test_race_free(seed: int) -> None:
    program = parse(generate(SMALL, seed))
    stores = [interpret(program, threads, s) for threads in (2, 3) for s in range(4)]
    assert all(s == stores[0] for s in stores)


def test_gen_corpus_names() -> None:
    corpus = gen_corpus(SMALL, 5, 3)
    assert list(corpus) == ['prog_0005.hc', 'prog_0006.hc', 'prog_0007.hc']
    assert corpus['prog_0006.hc'] == generate(SMALL, 6)


@pytest.mark.parametrize('update', [{'nodes': 10}, {'parallel': -1}, {'shared': 0}])
def test_invalid_shape(update: dict[str, int]) -> None:
    with pytest.raises(ValidationError):
        CorpusShape.model_validate(SMALL.model_dump() | update)
