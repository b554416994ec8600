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

"""Build tasks based on PyInvoke."""

import logging
import sys
from pathlib import Path
from shutil import rmtree
from typing import Any

from invoke import Collection, Context, Result, task

# Conditional imports and mypy - see: https://github.com/python/mypy/issues/1297

try:
    # noinspection PyUnresolvedReferences
    from homeo.logging_conf import LoggingConf as _LoggingConf
except ImportError:
    LoggingConf = None
else:
    LoggingConf = _LoggingConf

try:
    # noinspection PyUnresolvedReferences
    from scripts import settings_generator as _settings_generator
except ImportError:
    settings_generator = None
else:
    settings_generator = _settings_generator

_pycmd = [sys.executable, '-m']
_pipcmd = [*_pycmd, 'pip', '--isolated', '--require-virtualenv']
_ruff_cmd = [*_pycmd, 'ruff', 'check', '.']
_mypy_cmd = [*_pycmd, 'mypy', 'src', 'tests', 'scripts', 'tasks.py']
_pytest_cmd = [*_pycmd, 'pytest', '--verbose', '--no-header', '--tb=short']
_homeo_cmd = [*_pycmd, 'homeo']

_gen_dirs = [Path(__file__).with_name(n) for n in ('dist', 'build', 'corpus')]

_logging = None
if LoggingConf is not None:
    _logging = LoggingConf(Path('build.log'), stdout=True)
    _logging.start()

LOG = logging.getLogger('homeo_build')
LOG.setLevel(logging.INFO)


@task
def _stop_logging(_: Context) -> None:
    if _logging is not None:
        _logging.stop()


def _run(c: Context, *args: str, **kwargs: Any) -> Result | None:  # noqa: ANN401
    return c.run(' '.join(args), **kwargs)


def _run_check(c: Context, *cmd: str) -> bool:
    res = _run(c, *cmd, echo=True, hide=False, warn=True)
    if res is None:
        msg = f'Failed to run check: {' '.join(cmd)!r}'
        raise RuntimeError(msg)
    return res.return_code == 0


@task(post=[_stop_logging])
def check(c: Context) -> bool:
    """Run checks (ruff, mypy, pytest)."""
    for name, cmd in (('Ruff', _ruff_cmd), ('Mypy', _mypy_cmd), ('Pytest', _pytest_cmd)):
        if not _run_check(c, *cmd):
            LOG.error('%s found errors.', name)
            return False
    return True


@task(post=[_stop_logging], help={'clean': 'Remove generated directories'})
def build(c: Context, *, clean: bool = False) -> None:
    """Build wheel and source distribution."""
    if clean:
        for d in _gen_dirs:
            if d.is_dir():
                rmtree(d, onexc=lambda _, path, __: LOG.error('Failed to remove %s', path))
        return
    if not check(c):
        return
    if settings_generator is not None:
        settings_generator.write_default()
    _run(c, *_pycmd, 'build', hide=False)


@task(post=[_stop_logging], help={'dev': 'Also install build and dev dependencies'})
def install(c: Context, *, dev: bool = False) -> None:
    """Install the project in editable mode."""
    _run(c, *_pipcmd, 'install', '-e .[build,dev]' if dev else '-e .', hide=False)


@task(
    post=[_stop_logging],
    help={'trials': 'Traces per mode', 'seed': 'Base seed'},
)
def fuzz(c: Context, trials: int = 100, seed: int = 0) -> bool:
    """Fuzz every stabilization mode against recomputation."""
    ok = True
    for mode in ('EGINV', 'EGUPD', 'RPINV', 'RPUPD', 'LZINV', 'LZUPD'):
        cmd = [*_homeo_cmd, 'fuzz', f'--mode {mode}', f'--trials {trials}', f'--seed {seed}']
        if not _run_check(c, *cmd):
            LOG.error('Fuzzing found divergences in mode %s.', mode)
            ok = False
    return ok


@task(
    post=[_stop_logging],
    help={'count': 'Programs to generate', 'nodes': 'Approximate nodes per program'},
)
def corpus(c: Context, count: int = 20, nodes: int = 500) -> bool:
    """Generate a corpus and compare all modes on every program."""
    out = _gen_dirs[-1]
    _run(c, *_homeo_cmd, 'gen', f'--count {count}', f'--nodes {nodes}', f'-o {out}')
    ok = True
    for p in sorted(out.glob('*.hc')):
        if not _run_check(c, *_homeo_cmd, 'compare', '--check-exec', str(p)):
            LOG.error('Modes disagree on %s.', p)
            ok = False
    return ok


namespace = Collection(check, build, install, fuzz, corpus)
