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

"""Write a commented TOML settings file with all default values.

Field descriptions of the settings model become the comments, so an unchanged file
has no effect.
"""

from collections.abc import Iterable
from typing import cast, get_args

from homeo.color import Color
from homeo.settings import CONFIG_FILE_DEV, CONFIG_NAMES, CONFIG_PATHS, Border, Settings
from pydantic import BaseModel
from tomlkit import TOMLDocument, comment, document, dumps, items, nl
from tomlkit.items import AbstractTable, Comment, Trivia


def _quoted(values: Iterable[str]) -> str:
    """Comma-separated quoted values.

    >>> _quoted(['a', 'b'])
    "'a', 'b'"
    """
    return ', '.join(f"'{v}'" for v in values)


_HEADER_COMMENT = f"""Configuration file for homeo

Config locations, first valid file wins:
{'\n'.join(f'    * {p}' for p in CONFIG_PATHS)}
Config names:
{'\n'.join(f'    * {n}' for n in CONFIG_NAMES)}

Valid border types: {_quoted(get_args(Border))}
Valid colors: {_quoted(c.name.lower() for c in Color)}"""


def _init_doc(
    _model: BaseModel, _container: TOMLDocument | AbstractTable
) -> TOMLDocument:
    dump = _model.model_dump(exclude_none=True)
    for attr_name, field_info in type(_model).model_fields.items():
        if attr_name not in dump:
            continue
        item = items.item(dump[attr_name])
        if field_info.description:
            item.comment(field_info.description)
        _container[attr_name] = (
            _init_doc(getattr(_model, attr_name), item)
            if isinstance(item, AbstractTable)
            else item
        )
    return cast(TOMLDocument, _container)


def default_document() -> TOMLDocument:
    """TOML document of the default settings with descriptions as comments."""
    doc: TOMLDocument = document()
    for line in _HEADER_COMMENT.splitlines():
        doc.add(comment(line) if line else Comment(Trivia(comment='#')))
    doc.add(nl()).add(nl())
    return _init_doc(Settings(), doc)


def write_default() -> None:
    """Write the default settings file next to the package."""
    CONFIG_FILE_DEV.write_text(dumps(default_document()), encoding='utf-8')


def get_default() -> str:
    """TOML string of the default settings."""
    return dumps(default_document())


if __name__ == '__main__':
    write_default()
