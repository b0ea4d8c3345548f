"""
Shared plumbing for ipdehjb: logger setup and artifact headers.

Functions
    setup_logger: configure the root logger with a log file and an ERROR console handler.
    format_header: render resolved settings as the comment header of a text artifact.
"""

import datetime
import logging
import os

import ipdehjb.constants

RECORD_FORMAT = "(%(threadName)s) %(asctime)s.%(msecs)03d %(levelname)s " \
                "%(filename)s:%(lineno)d %(message)s"
DATE_FORMAT = '%y%m%d_%H:%M:%S'


def setup_logger(log_dir=None, level=logging.INFO):
    """Setup the logger.

        Arguments:
            log_dir: (str) directory receiving the log file. Defaults to './log'.
            level: (int) level of the root logger.
    """
    log_dir = log_dir or 'log'
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    filename = os.path.abspath(os.path.join(log_dir, ipdehjb.constants.LOG_FILENAME))

    logger = logging.getLogger()
    logger.setLevel(level)

    # Repeated calls must not stack handlers on the root logger
    known_files = [getattr(h, 'baseFilename', None) for h in logger.handlers]
    if filename not in known_files:
        handler = logging.FileHandler(filename, 'a', 'utf-8')
        handler.setFormatter(logging.Formatter(RECORD_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(handler)

    if not any(getattr(h, '_ipdehjb_console', False) for h in logger.handlers):
        console = logging.StreamHandler()
        console.setLevel(logging.ERROR)
        console._ipdehjb_console = True
        logger.addHandler(console)

    logging.debug("now is %s", datetime.datetime.now())
    return logger


def format_header(items, prefix='# '):
    """ Render key/value pairs as comment lines, one per pair, in the given order.

        Arguments:
            items: (dict or list of tuples) resolved settings.
            prefix: (str) the comment marker.
    """
    pairs = items.items() if isinstance(items, dict) else items
    return ''.join(f'{prefix}{key} = {_format_value(value)}\n' for key, value in pairs)


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ', '.join(_format_value(v) for v in value)
    return str(value)
