"""The utils package contains helpful utility functions and classes used in other
parts of the application
"""

import logging
import math
import os
import re

__all__ = ['merge_dicts', 'setup_logger', 'id_sort_key',
           'format_real', 'parse_rate']

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

_RATE_UNITS = {
    'bps': 0.001,
    'kbps': 1.0,
    'mbps': 1000.0,
    'gbps': 1000000.0
}

_ID_PATTERN = re.compile(r'^(.*?)(\d+)$')


def merge_dicts(first: dict, second: dict):
    """Merge two dicts

    Keys that are present in both take their value from the first dict.
    All keys from the first dict appear before keys from the second.
    """
    merged = {}
    for key, value in first.items():
        if key not in second.keys():
            merged.update({key: value})
    for key in second.keys():
        if key in first.keys():
            merged.update({key: first[key]})
        else:
            merged.update({key: second[key]})
    return merged

def setup_logger(name, console_level=logging.ERROR, file_level=logging.WARNING):
    """Create (or fetch) a named logger with a console and a file handler

    The log file defaults to drastic.log in the working directory and can be
    moved with the DRASTIC_LOG_FILE environment variable.  Handlers are only
    attached the first time a given name is requested.

    :param str name: Logger name
    :param int console_level: Level for the stream handler
    :param int file_level: Level for the file handler
    :rtype: logging.Logger
    """
    logger = logging.getLogger(name)
    if getattr(logger, '_drastic_configured', False):
        return logger
    logger.setLevel(logging.DEBUG)
    formatter = logging.Formatter(LOG_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(console_level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    file_handler = logging.FileHandler(os.environ.get('DRASTIC_LOG_FILE', 'drastic.log'), delay=True)
    file_handler.setLevel(file_level)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    logger._drastic_configured = True
    return logger

def id_sort_key(identifier: str):
    """Natural ordering key for identifiers like 'S2' < 'S10' and 'P0031'

    Identifiers without a numeric suffix sort after numbered ones sharing the
    same prefix, by plain string comparison.
    """
    match = _ID_PATTERN.match(identifier)
    if match:
        return match.group(1), 0, int(match.group(2)), identifier
    return identifier, 1, 0, identifier

def format_real(value) -> str:
    """Canonical text form of a number: shortest round-tripping repr,
    with a trailing '.0' dropped so that 43.0 is written '43'
    """
    value = float(value)
    if not math.isfinite(value):
        return repr(value)
    text = repr(value)
    if text.endswith('.0'):
        text = text[:-2]
    return text

def parse_rate(text):
    """Parse a data rate like '14.4 kbps', '2 Mbps', '1 Gbps' into kbps

    A bare number is taken as kbps.  'null' (or an empty field) gives None.

    :rtype: float or None
    """
    text = str(text).strip()
    if text == '' or text.casefold() == 'null':
        return None
    parts = text.split()
    if len(parts) == 1:
        match = re.match(r'^([0-9.eE+-]+)([A-Za-z]*)$', parts[0])
        if not match:
            raise ValueError("Unparseable rate: '{}'".format(text))
        number, unit = match.group(1), match.group(2) or 'kbps'
    elif len(parts) == 2:
        number, unit = parts
    else:
        raise ValueError("Unparseable rate: '{}'".format(text))
    try:
        factor = _RATE_UNITS[unit.casefold()]
    except KeyError:
        raise ValueError("Unknown rate unit '{}' in '{}'".format(unit, text))
    return float(number) * factor
