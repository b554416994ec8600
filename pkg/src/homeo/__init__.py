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

"""Self-stabilizing program abstractions for a small OpenMP-like language."""
