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

"""Logging setup for the command line and its worker processes.

Every process logs into one multiprocessing queue. Only the main process drains it,
so records of ``compare --jobs`` workers end up in the same file as the rest.
"""

import copy
import logging.config
import multiprocessing
import time
import tomllib
from logging import CRITICAL, WARNING, Filter, Formatter, Handler, LogRecord
from logging.handlers import QueueHandler, QueueListener
from multiprocessing.queues import Queue
from pathlib import Path
from tomllib import TOMLDecodeError
from typing import Any, Final, cast, override

LOG = logging.getLogger('homeo')

type RecordQueue = Queue[LogRecord | None]


class LoggingConfError(Exception):
    """Raised when logging could not be set up."""


class LoggingConf:
    """Logging of one ``homeo`` invocation.

    The packaged ``_logging.toml`` declares formatters, filters and the three sink
    handlers. Those handlers hang off a queue listener. The root logger only gets a
    queue handler, which is also what worker processes install.
    """

    CONF_PATH: Final[Path] = Path(__file__).with_name('_logging.toml')
    SINKS: Final[tuple[str, ...]] = ('stderr', 'file')

    def __init__(self, logfile: Path | None = None, *, stdout: bool = False) -> None:
        """Load the configuration and build the listener without starting it.

        :param logfile: log file, defaults to the configured name in the working
            directory
        :param stdout: also print progress messages
        """
        self.log_conf = self._load()
        try:
            file_conf = self.log_conf['handlers']['file']
        except KeyError as e:
            msg = f'No file handler in {self.CONF_PATH}'
            raise LoggingConfError(msg) from e
        self.logfile = logfile or Path.cwd().joinpath(file_conf['filename'])
        file_conf['filename'] = str(self.logfile)

        logging.config.dictConfig(self.log_conf)
        logging.addLevelName(WARNING, 'WARN')
        logging.addLevelName(CRITICAL, 'CRIT')

        self.queue: RecordQueue = multiprocessing.get_context().Queue()
        attach_queue(self.queue)
        names = (*self.SINKS, 'stdout') if stdout else self.SINKS
        self.listener = QueueListener(
            self.queue, *map(self._sink, names), respect_handler_level=True
        )
        self._running = False

    @classmethod
    def _load(cls) -> dict[str, Any]:
        try:
            with cls.CONF_PATH.open('rb') as f:
                return tomllib.load(f)
        except FileNotFoundError as e:
            msg = f'{e.strerror}: {e.filename}'
            raise LoggingConfError(msg) from e
        except TOMLDecodeError as e:
            msg = (
                'Invalid TOML in logging configuration'
                f'\n\tFile: {cls.CONF_PATH}'
                f'\n\tCause: {e.args[0]}'
            ).expandtabs(4)
            raise LoggingConfError(msg) from e

    @staticmethod
    def _sink(name: str) -> Handler:
        handler = logging.getHandlerByName(name)
        if handler is None:
            msg = f'Not a handler: {name!r}.'
            raise LoggingConfError(msg)
        # dictConfig attached it to nothing, the listener owns it
        return handler

    def start(self) -> None:
        """Start draining the queue."""
        self.listener.start()
        self._running = True
        LOG.info('Logging to %s', self.logfile, extra=HiddenOutputFilter.EXTRA)

    def stop(self) -> None:
        """Flush the queue and stop the listener. Does nothing if not running."""
        if not self._running:
            return
        self._running = False
        self.listener.stop()
        root = logging.getLogger()
        for h in root.handlers[:]:
            if isinstance(h, CustomQueueHandler) and h.queue is self.queue:
                root.removeHandler(h)
        self.queue.close()
        self.queue.join_thread()


def attach_queue(queue: RecordQueue, level: int | None = None) -> None:
    """Make ``queue`` the only root handler of the current process.

    Used as process pool initializer, where ``level`` restores the ``homeo`` logger
    level of the parent in case the worker did not inherit it.
    """
    root = logging.getLogger()
    for h in root.handlers[:]:
        root.removeHandler(h)
    root.addHandler(CustomQueueHandler(queue))
    if level is not None:
        LOG.setLevel(level)


def current_queue() -> RecordQueue | None:
    """Queue of the root queue handler, if logging was set up by ``LoggingConf``."""
    for h in logging.getLogger().handlers:
        if isinstance(h, CustomQueueHandler):
            return cast('RecordQueue', h.queue)
    return None


class CustomQueueHandler(QueueHandler):
    """Queue handler that sends picklable records.

    Arguments are merged into the message and exception info is reduced to its
    formatted text, so records survive the trip to another process.
    """

    @override
    def prepare(self, record: LogRecord) -> Any:
        r = copy.copy(record)
        exc_text = None
        if record.exc_info:
            # Formatting fills exc_text
            _ = self.format(r)
            exc_text = r.exc_text
            r = copy.copy(record)
            r.exc_info = None
        msg = self.format(r)
        r.msg = msg
        r.message = msg
        r.args = None
        r.exc_text = exc_text
        return r


class SimpleFormatter(Formatter):
    """Formatter for the console that leaves out tracebacks."""

    @override
    def format(self, record: LogRecord) -> str:
        et = record.exc_text
        record.exc_text = None
        s = super().format(record)
        record.exc_text = et
        return s


class DetailedFormatter(Formatter):
    """Formatter for the log file with milliseconds before the timezone."""

    @override
    def formatTime(self, record: LogRecord, datefmt: str | None = None) -> str:
        ct = self.converter(record.created)
        if datefmt:
            # %f is only supported by datetime
            return time.strftime(datefmt.replace('%f', f'{record.msecs:03.0f}'), ct)
        return super().formatTime(record)


class ErrorFilter(Filter):
    """Keeps warnings and errors off stdout, stderr has them."""

    @override
    def filter(self, record: LogRecord) -> bool | LogRecord:
        return record.levelno < WARNING


class HiddenOutputFilter(Filter):
    """Drops records logged with ``extra=HiddenOutputFilter.EXTRA``."""

    KEY_EXTRA_HIDE: Final[str] = 'hide'
    EXTRA: Final[dict[str, bool]] = {KEY_EXTRA_HIDE: True}

    @override
    def filter(self, record: LogRecord) -> bool | LogRecord:
        return not getattr(record, self.KEY_EXTRA_HIDE, False)
