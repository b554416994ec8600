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

"""Console tables."""

import logging
from collections.abc import Mapping
from typing import Any, Final

from prettytable import PrettyTable
from prettytable.colortable import ColorTable, Theme

from .bench.fuzz import Verdict
from .bench.pipeline import Comparison, MetricsReport
from .settings import Settings
from .util import cls_name

LOG = logging.getLogger('homeo')

COUNTERS: Final[tuple[tuple[str, str], ...]] = (
    ('stabilizationTriggers', 'Triggers'),
    ('computeCalls', 'Compute'),
    ('handleUpdateCalls', 'Update'),
    ('nodesReprocessed', 'Reprocessed'),
    ('transferApplications', 'Transfers'),
)


# ruff: noqa: T201
class Output:
    """Formats reports as tables according to the user configuration."""

    def __init__(self, settings: Settings) -> None:
        """Initialize Output.

        :param settings: the user configuration
        """
        self.settings = settings
        LOG.info('Initialized %s', cls_name(self))

    def _table(self, field_names: list[str], align: str = 'r') -> PrettyTable:
        cfg = self.settings.table
        table: PrettyTable
        if cfg.color:
            border_color = str(cfg.colors.border.value)
            table = ColorTable(
                theme=Theme(
                    vertical_color=border_color,
                    horizontal_color=border_color,
                    junction_color=border_color,
                )
            )
        else:
            table = PrettyTable()
        table.border = cfg.border == 'full'
        table.preserve_internal_border = cfg.border == 'inner'
        table.field_names = field_names
        for f in field_names:
            table.align[f] = align
        table.align[field_names[0]] = 'l'
        return table

    def _render(self, table: PrettyTable) -> str:
        if not self.settings.table.color:
            return table.get_string()
        # No custom header format, so color the header cells in the rendered text
        lines = table.get_string().splitlines(keepends=True)
        i = int(self.settings.table.border == 'full')
        for h in table.field_names:
            header = ' ' * table.padding_width + h + ' ' * table.padding_width
            lines[i] = lines[i].replace(header, self.settings.table.colors.label.colorize(header), 1)
        return ''.join(lines)

    def verdict(self, passed: bool, text: str) -> str:  # noqa: FBT001
        """Color a verdict line."""
        if not self.settings.table.color:
            return text
        colors = self.settings.table.colors
        return (colors.ok if passed else colors.fail).colorize(text)

    def metrics_table(self, report: MetricsReport) -> str:
        """Work counters per analysis of one run."""
        table = self._table(['Analysis', *(label for _, label in COUNTERS)])
        for name, m in report.analyses.items():
            table.add_row([name, *(m[key] for key, _ in COUNTERS)])
        return self._render(table)

    def comparison_table(self, comparison: Comparison) -> str:
        """Summed counters, run time and digest per mode."""
        table = self._table(
            ['Mode', *(label for _, label in COUNTERS), 'Time [ms]', 'Digest']
        )
        for r in comparison.reports:
            totals = [sum(m[key] for m in r.analyses.values()) for key, _ in COUNTERS]
            table.add_row([
                str(r.mode),
                *totals,
                f'{r.wall_clock.get("total", 0.0) * 1000:.1f}',
                r.digest[:12],
            ])
        return self._render(table)

    def characteristics_table(self, programs: Mapping[str, Mapping[str, Any]]) -> str:
        """Node, region, barrier and phase counts per program."""
        table = self._table(['Program', '#Node', '#PC', '#Barr', '#Ph'])
        for name, c in programs.items():
            table.add_row([
                name,
                c['nodes'],
                c['parallelConstructs'],
                c['barriers'],
                c['phases'],
            ])
        return self._render(table)

    def fuzz_summary(self, verdict: Verdict) -> str:
        """Counts of a fuzzing run and the first failure, if any."""
        table = self._table(['Mode', 'Trials', 'Operations', 'Queries', 'Divergences'])
        table.add_row([
            verdict.mode,
            verdict.trials,
            verdict.operations,
            verdict.queries,
            verdict.divergences,
        ])
        lines = [self._render(table)]
        if (f := verdict.first_failure) is not None:
            lines += [
                self.verdict(False, f'Trial {f.trial}: {f.detail}'),  # noqa: FBT003
                'Minimized trace:',
                *(f'    {op}' for op in f.trace),
            ]
        else:
            lines.append(self.verdict(True, 'No divergences'))  # noqa: FBT003
        return '\n'.join(lines)

    @staticmethod
    def show(text: str) -> None:
        """Print to the console."""
        print(text)
