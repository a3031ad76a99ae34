"""Encoder configuration space: GOP modes, configuration tuples, the standard (120)
and extended (216) enumerations and HM-style configuration text.

Configurations are opaque parameter tuples as far as the rest of the controller
is concerned; only the GOP size is read back by the switch planner.
"""

import csv
import enum
import itertools
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from jinja2 import Environment, PackageLoader, StrictUndefined

from utils import setup_logger
from drastic.errors import OutOfRangeError, ParseError, UnknownConfiguration

logger = setup_logger('ConfigSpace')

QP_VALUES = (22, 27, 31, 32, 33, 37)
RA_INTRA_PERIOD = 32
CONFIG_SPACE_HEADER = ('id', 'mode', 'qp', 'dbl', 'sao', 'refresh')


class GopMode(enum.Enum):
    """GOP structure family and size"""
    AI = 'AI'
    RA8 = 'RA8'
    RA4 = 'RA4'
    LD4 = 'LD4'
    LD6 = 'LD6'

    @property
    def gop_size(self) -> int:
        return _GOP_SIZES[self]

    @property
    def family(self) -> str:
        """'AI', 'RA' or 'LD'"""
        return self.value[:2]

    @property
    def intra_period(self) -> int:
        if self is GopMode.AI:
            return 1
        if self.family == 'RA':
            return RA_INTRA_PERIOD
        return -1


_GOP_SIZES = {
    GopMode.AI: 1,
    GopMode.RA8: 8,
    GopMode.RA4: 4,
    GopMode.LD4: 4,
    GopMode.LD6: 6
}


class Refresh(enum.Enum):
    """Decoding refresh type.  AI configurations carry None instead."""
    IDR = 'IDR'
    CRA = 'CRA'


# HM's DecodingRefreshType codes (0:none, 1:CRA, 2:IDR)
DECODING_REFRESH_CODES = {
    Refresh.CRA: 1,
    Refresh.IDR: 2
}

STANDARD_MODES = (GopMode.AI, GopMode.RA8, GopMode.LD4)
EXTENDED_MODES = (GopMode.AI, GopMode.RA8, GopMode.RA4, GopMode.LD4, GopMode.LD6)


@dataclass(frozen=True)
class GopConfiguration:
    """One point of the encoder parameter space

    Instance attributes:
        id: str
            Stable ordinal identifier, S1...S216
        mode: GopMode
        qp: int
            Quantization parameter, 0-51
        dbl: bool
            Deblocking filter on
        sao: bool
            Sample adaptive offset on
        refresh: Refresh or None
            None if and only if mode is AI
    """
    id: str
    mode: GopMode
    qp: int
    dbl: bool
    sao: bool
    refresh: Optional[Refresh]

    def __post_init__(self):
        if not isinstance(self.qp, int) or not 0 <= self.qp <= 51:
            raise OutOfRangeError('QP must be an integer in 0-51, got {!r}'.format(self.qp),
                                  module='config_space')
        if (self.mode is GopMode.AI) != (self.refresh is None):
            raise OutOfRangeError('{}: refresh type must be None exactly when the mode is AI'.format(self.id),
                                  module='config_space')

    @property
    def gop_size(self) -> int:
        return self.mode.gop_size

    @property
    def tag(self) -> str:
        """Short human label, eg. 'RA8 QP22 DBL=on SAO=off CRA'"""
        label = '{} QP{} DBL={} SAO={}'.format(self.mode.value, self.qp, _on_off(self.dbl), _on_off(self.sao))
        if self.refresh is not None:
            label += ' ' + self.refresh.value
        return label


def _on_off(flag: bool) -> str:
    return 'on' if flag else 'off'


def _mode_block(mode: GopMode):
    """All (qp, dbl, sao, refresh) combinations of one mode, in enumeration order:
    QP ascending, then DBL on first, SAO on first, IDR first
    """
    refreshes = (None,) if mode is GopMode.AI else (Refresh.IDR, Refresh.CRA)
    return list(itertools.product(QP_VALUES, (True, False), (True, False), refreshes))


def _numbered(modes, first_id):
    configs = []
    number = first_id
    for mode in modes:
        for qp, dbl, sao, refresh in _mode_block(mode):
            configs.append(GopConfiguration('S{}'.format(number), mode, qp, dbl, sao, refresh))
            number += 1
    return configs


@lru_cache(maxsize=None)
def _standard():
    return tuple(_numbered(STANDARD_MODES, 1))


@lru_cache(maxsize=None)
def _extended():
    standard = _standard()
    added = _numbered((GopMode.RA4, GopMode.LD6), len(standard) + 1)
    by_mode = {}
    for config in standard + tuple(added):
        by_mode.setdefault(config.mode, []).append(config)
    return tuple(config for mode in EXTENDED_MODES for config in by_mode[mode])


def enumerate_standard():
    """The 120 standard configurations: AI (24), RA8 (48), LD4 (48)

    :rtype: list[GopConfiguration]
    """
    return list(_standard())


def enumerate_extended():
    """The 216 extended configurations: the standard set plus RA4 and LD6.
    Standard configurations keep their ids; modes are listed AI, RA8, RA4, LD4, LD6.

    :rtype: list[GopConfiguration]
    """
    return list(_extended())


def enumerate_set(name: str):
    """Enumerate by set name, 'standard' or 'extended'"""
    if name == 'standard':
        return enumerate_standard()
    elif name == 'extended':
        return enumerate_extended()
    raise OutOfRangeError("Unknown configuration set '{}'".format(name), module='config_space')


@lru_cache(maxsize=None)
def _catalog():
    return {config.id: config for config in _extended()}


def catalog():
    """Every enumerated configuration keyed by id"""
    return dict(_catalog())


def lookup(config_id: str) -> GopConfiguration:
    try:
        return _catalog()[config_id]
    except KeyError:
        raise UnknownConfiguration("No configuration with id '{}'".format(config_id))


def find_configuration(mode: GopMode, qp: int, dbl: bool, sao: bool, refresh=None):
    """Look up the enumerated configuration with the given parameters"""
    for config in _extended():
        if (config.mode, config.qp, config.dbl, config.sao, config.refresh) == (mode, qp, dbl, sao, refresh):
            return config
    raise UnknownConfiguration('No enumerated configuration {} QP{} dbl={} sao={} refresh={}'.format(
        mode.value, qp, dbl, sao, refresh.value if refresh else None))


_env = Environment(
    loader=PackageLoader('drastic', 'templates'),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True
)


def emit_cfg_text(config: GopConfiguration) -> str:
    """Render the HM configuration file text for a configuration

    AI -> IntraPeriod 1, GOPSize 1, DecodingRefreshType 0
    RA -> IntraPeriod 32, GOPSize 8/4, DecodingRefreshType 1 (CRA) or 2 (IDR)
    LD -> IntraPeriod -1, GOPSize 4/6, DecodingRefreshType 0

    :rtype: str
    """
    if config.mode.family == 'RA':
        refresh_code = DECODING_REFRESH_CODES[config.refresh]
    else:
        refresh_code = 0
    frames = None
    if config.mode is not GopMode.AI:
        frames = 'cfg/frames/{}.txt'.format(config.mode.value.lower())
    template = _env.get_template('cfg/encoder.cfg.j2')
    return template.render(
        config=config,
        refresh_name=config.refresh.value if config.refresh else 'none',
        intra_period=config.mode.intra_period,
        refresh_code=refresh_code,
        gop_size=config.gop_size,
        frames_template=frames,
        loop_filter_disable=0 if config.dbl else 1,
        sao=1 if config.sao else 0
    )


def write_cfg_files(configs, directory):
    """Write <id>.cfg for every configuration into directory

    :rtype: list[str]
    :returns: Paths written
    """
    os.makedirs(directory, exist_ok=True)
    paths = []
    for config in configs:
        path = os.path.join(directory, '{}.cfg'.format(config.id))
        with open(path, 'w', encoding='utf-8', newline='\n') as fp:
            fp.write(emit_cfg_text(config))
        paths.append(path)
    logger.debug('write_cfg_files(): wrote {} files to {}'.format(len(paths), directory))
    return paths


def config_space_rows(configs):
    for config in configs:
        yield (config.id, config.mode.value, str(config.qp), _on_off(config.dbl), _on_off(config.sao),
               config.refresh.value if config.refresh else 'none')


def write_config_space(configs, fp):
    writer = csv.writer(fp, lineterminator='\n')
    writer.writerow(CONFIG_SPACE_HEADER)
    writer.writerows(config_space_rows(configs))


def export_config_space(configs, path):
    with open(path, 'w', encoding='utf-8', newline='') as fp:
        write_config_space(configs, fp)


def load_config_space(path):
    """Read a config-space file back into GopConfiguration objects

    :rtype: list[GopConfiguration]
    """
    flags = {'on': True, 'off': False}
    configs = []
    with open(path, encoding='utf-8', newline='') as fp:
        reader = csv.reader(fp)
        header = next(reader, None)
        if header is None or tuple(header) != CONFIG_SPACE_HEADER:
            raise ParseError('expected header {}'.format(','.join(CONFIG_SPACE_HEADER)), row=1,
                             module='config_space')
        for row_number, row in enumerate(reader, start=2):
            try:
                config_id, mode, qp, dbl, sao, refresh = row
                configs.append(GopConfiguration(
                    config_id, GopMode(mode), int(qp), flags[dbl], flags[sao],
                    None if refresh == 'none' else Refresh(refresh)))
            except (ValueError, KeyError, OutOfRangeError) as e:
                raise ParseError(str(e), row=row_number, module='config_space')
    return configs
