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

"""Settings model and config file discovery."""

import logging
from contextlib import suppress
from pathlib import Path
from tomllib import TOMLDecodeError, load
from typing import Annotated, Any, Literal, override

from pydantic import BaseModel, BeforeValidator, Field, PlainSerializer
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from .analysis.dataflow import DEFAULT_ITERATION_FACTOR
from .barrelim import DEFAULT_MAX_ITERATIONS
from .bench.fuzz import DEFAULT_MAX_OPS
from .bench.interpreter import DEFAULT_JITTER, DEFAULT_STEP_CAP
from .color import Color

LOG = logging.getLogger('homeo')

CONFIG_PATHS = [Path.cwd(), Path.home()]
CONFIG_NAMES = [f'{p}homeo.toml' for p in ['', '.', '_']]
CONFIG_FILES = [p.joinpath(n) for p in CONFIG_PATHS for n in CONFIG_NAMES]

CONFIG_FILE_DEV: Path = Path(__file__).with_name(CONFIG_NAMES[-1])

Border = Literal['full', 'inner', 'none']


def _validate_color(v: str | Color) -> Color:
    if isinstance(v, Color):
        return v
    with suppress(KeyError):
        return Color[v.upper()]
    msg = f'not a color: {v!r}. Valid colors are: {', '.join([c.name for c in Color])}.'
    raise ValueError(msg)


# Color given by name, serialized by name
_CT = Annotated[
    Color, BeforeValidator(_validate_color), PlainSerializer(lambda c: c.name)
]

_Ratio = Annotated[float, Field(ge=0, le=1)]


class _Engine(BaseModel):
    iteration_factor: int = Field(
        DEFAULT_ITERATION_FACTOR,
        ge=1,
        description='Node processings allowed per node and variable before the '
        'data-flow engine gives up',
    )


class _BarrElim(BaseModel):
    max_iterations: int = Field(
        DEFAULT_MAX_ITERATIONS,
        ge=1,
        description='Barrier elimination iterations with changes before giving up',
    )


class _Interpreter(BaseModel):
    threads: list[Annotated[int, Field(ge=1)]] = Field(
        [2, 3, 4], min_length=1, description='Thread counts to run regions with'
    )
    schedule_seeds: int = Field(
        8, ge=1, description='Schedules per thread count in differential checks'
    )
    step_cap: int = Field(
        DEFAULT_STEP_CAP, ge=1, description='Maximum number of executed statements'
    )
    jitter: _Ratio = Field(
        DEFAULT_JITTER,
        description='Probability of switching to a random thread instead of the next',
    )


class _Fuzz(BaseModel):
    trials: int = Field(100, ge=1, description='Random traces per fuzzing run')
    max_ops: int = Field(
        DEFAULT_MAX_OPS, ge=1, description='Transformations and queries per trace'
    )


class _Corpus(BaseModel):
    nodes: int = Field(100, ge=40, description='Approximate node count per program')
    parallel: int = Field(2, ge=0, description='Parallel regions per program')
    barriers: int = Field(4, ge=0, description='Explicit barriers per program')
    functions: int = Field(
        2, ge=0, description='Helper functions with barriers per program (at most)'
    )
    count: int = Field(1, ge=1, description='Programs per generation run')


class _TableColors(BaseModel):
    border: _CT = Field(Color.BRIGHT_BLACK, description='Table border color')
    label: _CT = Field(Color.BRIGHT_BLACK, description='Table header color')
    ok: _CT = Field(Color.GREEN, description='Color of a passing verdict')
    fail: _CT = Field(Color.RED, description='Color of a failing verdict')


class _Table(BaseModel):
    color: bool = Field(default=True, description='Use color for output')
    border: Border = Field(default='inner', description='Border type of tables')
    colors: _TableColors = Field(_TableColors(), description='Table color settings')


class _Report(BaseModel):
    indent: int | None = Field(
        2, ge=0, description='JSON report indentation (none for a single line)'
    )


class Settings(BaseSettings):
    """Tunables of the engine, the optimizer and the benchmark harness."""

    engine: _Engine = Field(_Engine(), description='Data-flow engine settings')
    barrelim: _BarrElim = Field(_BarrElim(), description='Barrier elimination settings')
    interpreter: _Interpreter = Field(
        _Interpreter(), description='Reference interpreter settings'
    )
    fuzz: _Fuzz = Field(_Fuzz(), description='Fuzzing settings')
    corpus: _Corpus = Field(_Corpus(), description='Corpus generator defaults')
    report: _Report = Field(_Report(), description='Report settings')
    table: _Table = Field(_Table(), description='Console table settings')


class TomlSettings(Settings):
    """Settings backed by a user configuration file."""

    def __init__(self, config: Path | None = None, **values: Any) -> None:  # noqa: ANN401
        """Initialize ``TomlSettings``.

        :param config: config file or ``None`` to use the first valid config
        :param values: values that overwrite the default values
        """
        TomlSettings.model_config = SettingsConfigDict(
            toml_file=config
            if config is not None
            else TomlSettings._first_valid_config()
        )
        super().__init__(**values)

    @classmethod
    @override
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return init_settings, TomlConfigSettingsSource(settings_cls)

    @staticmethod
    def _first_valid_config() -> Path | None:
        for c in CONFIG_FILES:
            with suppress(FileNotFoundError), c.open('rb') as f:
                LOG.info('Found TOML config: %s', c)
                try:
                    _ = load(f)
                except TOMLDecodeError as e:
                    LOG.warning(
                        'Failed to parse TOML\n\tFile: %s\n\tCause: %s'.expandtabs(4),
                        c,
                        e.args[0],
                    )
                else:
                    return c
        return None
