import os
import random
import tempfile

os.environ.setdefault('DRASTIC_LOG_FILE', os.path.join(tempfile.gettempdir(), 'drastic-tests.log'))

import pytest

from drastic import create_app
from drastic.backends import load_fixture, load_segments, measure_many
from drastic.backends.fixture import SHIPPED_FIXTURE, REFERENCE_ROWS
from drastic.backends.synthetic import Synthetic
from drastic.configspace import enumerate_extended, catalog
from drastic.pareto import ObjectivePoint, fronts_by_video
from drastic.rvd import seed_tables
from drastic import DEFAULT_SEGMENTS


@pytest.fixture
def app(tmp_path):
    app = create_app({
        'TESTING': True,
        'RVD_PATH': str(tmp_path / 'rvd')
    })
    yield app


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture(scope='session')
def reference_measurements():
    return load_fixture(REFERENCE_ROWS)


@pytest.fixture(scope='session')
def reference_points(reference_measurements):
    return [ObjectivePoint.from_measurement(m) for m in reference_measurements]


@pytest.fixture(scope='session')
def shipped_measurements():
    return load_fixture(SHIPPED_FIXTURE)


@pytest.fixture(scope='session')
def segments():
    return load_segments(DEFAULT_SEGMENTS)


@pytest.fixture(scope='session')
def synthetic_measurements(segments):
    return measure_many(Synthetic(), enumerate_extended(), segments.values())


@pytest.fixture(scope='session')
def synthetic_fronts(synthetic_measurements):
    return fronts_by_video(synthetic_measurements)


@pytest.fixture
def seeded_tables(synthetic_fronts, segments):
    return seed_tables(synthetic_fronts, segments, catalog())


def random_points(rng: random.Random, n: int, grid: int = None):
    """n points with unique ids; a small grid forces ties and exact duplicates"""
    points = []
    for i in range(n):
        if grid:
            q = 30 + rng.randrange(grid)
            t = 10 + rng.randrange(grid) * 5.0
            r = 100 + rng.randrange(grid) * 50.0
        else:
            q = round(rng.uniform(30, 45), 3)
            t = round(rng.uniform(10, 1200), 3)
            r = round(rng.uniform(100, 5000), 3)
        points.append(ObjectivePoint('S{}'.format(i + 1), float(q), t, r))
    if points and grid is None and n > 4:
        # copy a few vectors verbatim under other ids
        for _ in range(rng.randrange(1, 4)):
            source, target = rng.sample(range(n), 2)
            p = points[source]
            points[target] = ObjectivePoint(points[target].config_id, p.q, p.t, p.r)
    rng.shuffle(points)
    return points
