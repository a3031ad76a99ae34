"""Fixture backend: answers measure() from a measurement file.

The shipped file (drastic/data/measurements.csv) covers the extended space on
both default segments: the twenty measured QP 22 rows of the first segment
(drastic/data/reference_rows.csv) overlaid on synthetic model output for every
other pair.  Other files may cover less; give the backend a fallback (normally
the synthetic model) to fill what they miss.
"""

import os

from utils import setup_logger
from drastic.backends import EncoderBackend, Measurement, VideoSegment, load_fixture
from drastic.errors import FixtureMiss

logger = setup_logger('Fixture')

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'data')
SHIPPED_FIXTURE = os.path.join(DATA_DIR, 'measurements.csv')
REFERENCE_ROWS = os.path.join(DATA_DIR, 'reference_rows.csv')


class Fixture(EncoderBackend):
    """Measurement lookup table

    Instance attributes:
    -------------------
        path str
            File the rows were loaded from
        rows dict[(str, str), Measurement]
            Rows keyed by (config_id, video_id)
        fallback EncoderBackend or None
            Backend consulted on a miss; None means a miss raises FixtureMiss
    """
    name = 'fixture'

    def __init__(self, path: str = None, fallback: EncoderBackend = None):
        """Constructor

        :param str path: Measurement file.  Defaults to the shipped table.
        :param EncoderBackend fallback: Backend to use for pairs without a row
        """
        self.path = path or SHIPPED_FIXTURE
        self.rows = {}
        for m in load_fixture(self.path):
            self.rows[(m.config_id, m.video_id)] = m
        self.fallback = fallback
        logger.debug('loaded {} rows from {}'.format(len(self.rows), self.path))

    def measure(self, config, segment: VideoSegment) -> Measurement:
        try:
            return self.rows[(config.id, segment.video_id)]
        except KeyError:
            if self.fallback is not None:
                return self.fallback.measure(config, segment)
            raise FixtureMiss("{} has no row for {} on {}".format(self.path, config.id, segment.video_id))
