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

"""ANSI colors for console tables."""

from enum import IntEnum
from typing import override

from prettytable.colortable import RESET_CODE, Theme

from homeo.util import cls_name


class Color(IntEnum):
    """Table colors with their ANSI codes."""

    RED = 31
    GREEN = 32
    YELLOW = 33
    BLUE = 34
    CYAN = 36
    WHITE = 37
    BRIGHT_BLACK = 90
    BRIGHT_WHITE = 97

    @override
    def __repr__(self) -> str:
        return f'{cls_name(self)}.{self.name}'

    @override
    def __str__(self) -> str:
        return self.name.lower().replace('_', ' ')

    def colorize(self, s: str) -> str:
        """Wrap a string in the ANSI escape sequence of this color."""
        return Theme.format_code(str(self.value)) + s + RESET_CODE
