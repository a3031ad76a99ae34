"""The backends package contains the sources of encoder measurements.
Each backend subclasses 'EncoderBackend', defined here in this file (backends/__init__.py).
The interface is intended to be as small as possible: given a configuration and a
video segment, return the observed (PSNR, encoding time, bitrate).

The concrete backends are meant to be loaded dynamically by importlib, based on
experiment configuration details contained in a file or the command line:

    synthetic.Synthetic   - deterministic model, no encoder needed
    fixture.Fixture       - rows loaded from a measurement file
    hmencoder.HMEncoder   - runs an external encoder process and times it
"""

import abc
import csv
import importlib
import math
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from utils import setup_logger, merge_dicts, format_real, id_sort_key
from drastic.errors import OutOfRangeError, ParseError

__all__ = ['EncoderBackend', 'VideoSegment', 'Measurement', 'measure', 'measure_many',
           'bits_per_sample', 'load_fixture', 'export_measurements', 'write_measurements',
           'average_measurements', 'load_segments', 'setup_backend']

MEASUREMENT_HEADER = ('config_id', 'video_id', 'psnr_db', 'enc_time_s', 'bitrate_kbps')
SEGMENT_HEADER = ('video_id', 'source_id', 'width', 'height', 'framerate', 'start_frame', 'end_frame')

logger = setup_logger('Backends')


@dataclass(frozen=True)
class VideoSegment:
    """A contiguous frame range of a source video

    Instance attributes:
        video_id: str
            Segment identifier, eg. 'V001'
        source_id: str
            Source video identifier, eg. 'SV001'
        width, height: int
            Pixels
        framerate: float
            Frames per second
        start_frame, end_frame: int
            Inclusive frame indices
    """
    video_id: str
    source_id: str
    width: int
    height: int
    framerate: float
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise OutOfRangeError('{}: start_frame {} is after end_frame {}'.format(
                self.video_id, self.start_frame, self.end_frame), module='encoder_backend')
        if self.width <= 0 or self.height <= 0 or self.framerate <= 0:
            raise OutOfRangeError('{}: width, height and framerate must be positive'.format(self.video_id),
                                  module='encoder_backend')

    @property
    def frame_count(self) -> int:
        return self.end_frame - self.start_frame + 1

    @property
    def resolution(self) -> str:
        return '{}x{}'.format(self.width, self.height)


@dataclass(frozen=True)
class Measurement:
    """Observed objectives for one (configuration, segment) pair"""
    config_id: str
    video_id: str
    psnr_db: float
    enc_time_s: float
    bitrate_kbps: float

    def __post_init__(self):
        for name in ('psnr_db', 'enc_time_s', 'bitrate_kbps'):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise OutOfRangeError('{}/{}: {} must be positive and finite, got {!r}'.format(
                    self.config_id, self.video_id, name, value), module='encoder_backend')


class EncoderBackend(metaclass=abc.ABCMeta):
    """A generic measurement source
    """

    @classmethod
    def __subclasshook__(cls, subclass):
        return (hasattr(subclass, 'measure') and callable(subclass.measure) and
                hasattr(subclass, 'name'))

    name = 'backend'

    @abc.abstractmethod
    def measure(self, config, segment: VideoSegment) -> Measurement:
        raise NotImplementedError

    @property
    def max_workers(self) -> int:
        """How many measure() calls may run at once"""
        return 1


def measure(backend: EncoderBackend, config, segment: VideoSegment) -> Measurement:
    """Measure one configuration on one segment with the given backend

    :raises AdapterFailure: external encoder failed
    :raises FixtureMiss: fixture has no row for the pair
    """
    try:
        result = backend.measure(config, segment)
    except Exception as e:
        logger.error('measure(): {} failed for {}/{}: {}'.format(
            backend.name, config.id, segment.video_id, e.args))
        raise e
    logger.debug('measure(): {} {}/{} -> {}'.format(backend.name, config.id, segment.video_id, result))
    return result


def measure_many(backend: EncoderBackend, configs, segments):
    """Measure every configuration on every segment

    Calls run on a thread pool sized by the backend; results come back in
    (segment, configuration) order regardless of completion order.

    :rtype: list[Measurement]
    """
    pairs = [(config, segment) for segment in segments for config in configs]
    with ThreadPoolExecutor(max_workers=max(1, backend.max_workers)) as pool:
        return list(pool.map(lambda pair: measure(backend, *pair), pairs))


def bits_per_sample(m: Measurement, segment: VideoSegment) -> float:
    """Bitrate normalised by samples per second:
    bitrate_kbps * 1000 / (width * height * framerate)
    """
    return m.bitrate_kbps * 1000 / (segment.width * segment.height * segment.framerate)


def _measurement_row(m: Measurement):
    return (m.config_id, m.video_id, format_real(m.psnr_db), format_real(m.enc_time_s),
            format_real(m.bitrate_kbps))


def write_measurements(measurements, fp, flags=None):
    """Write measurements in the columnar format.  With flags (a parallel
    sequence of booleans) an extra 'pareto' column is written.
    """
    writer = csv.writer(fp, lineterminator='\n')
    if flags is None:
        writer.writerow(MEASUREMENT_HEADER)
        writer.writerows(_measurement_row(m) for m in measurements)
    else:
        writer.writerow(MEASUREMENT_HEADER + ('pareto',))
        writer.writerows(_measurement_row(m) + ('1' if flag else '0',)
                         for m, flag in zip(measurements, flags))


def export_measurements(measurements, path, flags=None):
    with open(path, 'w', encoding='utf-8', newline='') as fp:
        write_measurements(measurements, fp, flags)


def read_measurement_rows(path):
    """Yield (row_number, Measurement, pareto_flag) from a measurement or front file.
    pareto_flag is None when the file has no 'pareto' column.
    """
    with open(path, encoding='utf-8', newline='') as fp:
        reader = csv.reader(fp)
        header = next(reader, None)
        if header is None:
            raise ParseError('missing header', row=1)
        header = tuple(h.strip() for h in header)
        if header not in (MEASUREMENT_HEADER, MEASUREMENT_HEADER + ('pareto',)):
            raise ParseError('expected header {}'.format(','.join(MEASUREMENT_HEADER)), row=1)
        flagged = len(header) == len(MEASUREMENT_HEADER) + 1
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError('expected {} columns, got {}'.format(len(header), len(row)), row=row_number)
            try:
                m = Measurement(row[0], row[1], float(row[2]), float(row[3]), float(row[4]))
            except (ValueError, OutOfRangeError) as e:
                raise ParseError(str(e), row=row_number)
            flag = None
            if flagged:
                if row[5] not in ('0', '1'):
                    raise ParseError("pareto flag must be 0 or 1, got '{}'".format(row[5]), row=row_number)
                flag = row[5] == '1'
            yield row_number, m, flag


def load_fixture(path):
    """Load every row of a measurement file

    :rtype: list[Measurement]
    :raises ParseError: with the offending row number
    """
    return [m for _, m, _ in read_measurement_rows(path)]


def average_measurements(measurements, video_id='TRAIN'):
    """Average PSNR, encoding time and bitrate per configuration over all the
    videos present, giving one training record per configuration.

    :rtype: list[Measurement]
    """
    grouped = OrderedDict()
    for m in measurements:
        grouped.setdefault(m.config_id, []).append(m)
    averaged = []
    for config_id in sorted(grouped, key=id_sort_key):
        group = grouped[config_id]
        averaged.append(Measurement(
            config_id, video_id,
            math.fsum(m.psnr_db for m in group) / len(group),
            math.fsum(m.enc_time_s for m in group) / len(group),
            math.fsum(m.bitrate_kbps for m in group) / len(group)))
    return averaged


def load_segments(path):
    """Read a segments file into VideoSegment objects keyed by video_id

    :rtype: OrderedDict[str, VideoSegment]
    """
    segments = OrderedDict()
    with open(path, encoding='utf-8', newline='') as fp:
        reader = csv.reader(fp)
        header = next(reader, None)
        if header is None or tuple(header) != SEGMENT_HEADER:
            raise ParseError('expected header {}'.format(','.join(SEGMENT_HEADER)), row=1)
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                video_id, source_id, width, height, framerate, start, end = row
                segments[video_id] = VideoSegment(video_id, source_id, int(width), int(height),
                                                  float(framerate), int(start), int(end))
            except (ValueError, OutOfRangeError) as e:
                raise ParseError(str(e), row=row_number)
    return segments


_default_backend = {
    'driver': 'Synthetic'
}


def setup_backend(backend_config: dict = None) -> EncoderBackend:
    """Instantiate the backend named by backend_config['driver']

    The remaining keys are passed to the backend's constructor.  The driver
    module is assumed to be the lowercase version of the class name, ie.
    class HMEncoder in hmencoder.py.
    """
    settings = merge_dicts(backend_config or {}, _default_backend)
    driver_class_name = settings.pop('driver')
    driver_module = importlib.import_module('drastic.backends.' + driver_class_name.lower())
    driver_class = getattr(driver_module, driver_class_name)

    fallback = settings.pop('fallback', None)
    if isinstance(fallback, dict):
        settings['fallback'] = setup_backend(fallback)
    elif fallback is not None:
        settings['fallback'] = fallback

    backend = driver_class(**settings)
    if not isinstance(backend, EncoderBackend):
        raise TypeError('{} does not implement EncoderBackend'.format(driver_class_name))
    logger.debug('setup_backend(): loaded {}'.format(driver_class_name))
    return backend
