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

"""Utility functions."""

import math
from collections.abc import Iterable
from inspect import isclass


def cls_name(obj: type | object) -> str:
    """Get the class name of a class or an instance.

    :param obj: class or instance
    :return: class name
    """
    return obj.__name__ if isclass(obj) else type(obj).__name__


def geomean(values: Iterable[float]) -> float:
    """Geometric mean of positive values (0 for no values).

    >>> geomean([1, 4])
    2.0
    """
    vals = [v for v in values if v > 0]
    if not vals:
        return 0.0
    return math.exp(math.fsum(map(math.log, vals)) / len(vals))

