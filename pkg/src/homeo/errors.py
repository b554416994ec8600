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

"""Domain errors."""


class HomeoError(Exception):
    """Base class of all errors raised by *homeo*."""


class ParseError(HomeoError):
    """Raised when a source program is malformed."""

    def __init__(self, msg: str, line: int = 0, col: int = 0) -> None:
        """Initialize a parse error.

        :param msg: what went wrong
        :param line: 1-based source line or 0 if unknown
        :param col: 1-based source column or 0 if unknown
        """
        self.line = line
        self.col = col
        super().__init__(f'{line}:{col}: {msg}' if line else msg)


class TransformError(HomeoError):
    """Raised when an elementary transformation is not applicable."""


class GraphConsistencyError(HomeoError):
    """Raised when a super-graph delta leaves dangling edges."""


class StabilizationError(HomeoError):
    """Raised on illegal stabilizer use or failed stabilization."""


class RpStrictViolation(StabilizationError):
    """Raised when an unstable abstraction is read in strict relevant-point mode."""


class IdfaError(HomeoError):
    """Raised when the data-flow engine fails to converge."""


class InterpreterError(HomeoError):
    """Raised when program execution faults (step cap, deadlock)."""


class BarrElimError(HomeoError):
    """Raised when barrier elimination does not reach a fixed point."""

    def __init__(self, msg: str, report: object) -> None:
        """Initialize the error with the report of the work done so far."""
        self.report = report
        super().__init__(msg)
