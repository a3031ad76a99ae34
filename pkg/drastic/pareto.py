"""Dominance testing and Pareto-front extraction over (maximize PSNR, minimize
encoding time, minimize bitrate).

Dominance is weak Pareto dominance: a dominates b when a is at least as good on
every axis and strictly better on one.  Points with identical objective vectors
do not dominate each other; of such a group only the lowest config_id is kept.
Comparisons are exact.
"""

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils import setup_logger, id_sort_key
from drastic.backends import Measurement, read_measurement_rows, export_measurements
from drastic.errors import DuplicateId, OutOfRangeError

logger = setup_logger('Pareto')


@dataclass(frozen=True)
class ObjectivePoint:
    """One configuration's objectives

    Instance attributes:
        config_id: str
        q: float
            PSNR in dB (maximized)
        t: float
            Encoding time in seconds (minimized)
        r: float
            Bitrate in kbps (minimized)
    """
    config_id: str
    q: float
    t: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.t) and math.isfinite(self.r)):
            raise OutOfRangeError('{}: objectives must be finite'.format(self.config_id), module='pareto_core')

    @classmethod
    def from_measurement(cls, m: Measurement):
        return cls(m.config_id, m.psnr_db, m.enc_time_s, m.bitrate_kbps)

    @property
    def vector(self):
        return self.q, self.t, self.r


@dataclass(frozen=True)
class ParetoFront:
    """Non-dominated subset of a point set

    Instance attributes:
        members: tuple[ObjectivePoint]
            Ordered by config_id
        source_size: int
            Number of points the front was extracted from
    """
    members: Tuple[ObjectivePoint, ...]
    source_size: int

    @property
    def ids(self):
        return [p.config_id for p in self.members]

    def __len__(self):
        return len(self.members)

    def __contains__(self, config_id):
        return any(p.config_id == config_id for p in self.members)


def dominates(a: ObjectivePoint, b: ObjectivePoint) -> bool:
    """True if a is at least as good as b on every axis and strictly better on one"""
    if a.q >= b.q and a.t <= b.t and a.r <= b.r:
        return a.q > b.q or a.t < b.t or a.r < b.r
    return False


def _ordered(points):
    ordered = sorted(points, key=lambda p: id_sort_key(p.config_id))
    for previous, current in zip(ordered, ordered[1:]):
        if previous.config_id == current.config_id:
            raise DuplicateId("config_id '{}' appears more than once".format(current.config_id))
    return ordered


def pareto_front(points) -> ParetoFront:
    """Extract the Pareto front

    Builds the full pairwise dominance matrix with numpy: column i is removed
    when any row j dominates it, or when an earlier (lower id) row j has the
    same objective vector.

    :param points: iterable of ObjectivePoint with unique config_ids
    :rtype: ParetoFront
    :raises DuplicateId:
    """
    ordered = _ordered(points)
    if not ordered:
        return ParetoFront((), 0)

    objectives = np.array([p.vector for p in ordered], dtype=np.float64)
    q, t, r = objectives[:, 0], objectives[:, 1], objectives[:, 2]

    # [j, i]: row j is at least as good as column i on every axis
    no_worse = (q[:, None] >= q[None, :]) & (t[:, None] <= t[None, :]) & (r[:, None] <= r[None, :])
    better = (q[:, None] > q[None, :]) | (t[:, None] < t[None, :]) | (r[:, None] < r[None, :])

    dominated = (no_worse & better).any(axis=0)
    repeated = np.triu(no_worse & ~better, k=1).any(axis=0)
    keep = ~(dominated | repeated)

    members = tuple(p for p, kept in zip(ordered, keep) if kept)
    logger.debug('pareto_front(): kept {} of {}'.format(len(members), len(ordered)))
    return ParetoFront(members, len(ordered))


def brute_force_front_ids(points):
    """Reference front by direct pairwise scan, as a list of config_ids"""
    ordered = _ordered(points)
    kept = []
    for i, p in enumerate(ordered):
        if any(dominates(other, p) for other in ordered):
            continue
        if any(other.vector == p.vector for other in ordered[:i]):
            continue
        kept.append(p.config_id)
    return kept


def is_front(points, candidate_front) -> bool:
    """True if candidate_front holds exactly the brute-force front of points

    :param candidate_front: ParetoFront or iterable of ObjectivePoint
    """
    if isinstance(candidate_front, ParetoFront):
        candidate = candidate_front.members
    else:
        candidate = list(candidate_front)
    candidate_ids = [p.config_id for p in candidate]
    if len(set(candidate_ids)) != len(candidate_ids):
        return False
    return set(candidate_ids) == set(brute_force_front_ids(points))


def front_summary(front: ParetoFront, catalog: dict = None):
    """Facts about a front: member count per GOP mode, the max-PSNR member and
    the min-bitrate member

    :param dict catalog: config_id -> GopConfiguration, for the per-mode counts
    :rtype: dict
    """
    per_mode = OrderedDict()
    if catalog:
        for p in front.members:
            config = catalog.get(p.config_id)
            mode = config.mode.value if config else 'unknown'
            per_mode[mode] = per_mode.get(mode, 0) + 1
    summary = {
        'kept': len(front.members),
        'of': front.source_size,
        'per_mode': dict(per_mode),
        'max_quality': None,
        'min_bitrate': None
    }
    if front.members:
        summary['max_quality'] = max(front.members, key=lambda p: (p.q, -p.t, -p.r))
        summary['min_bitrate'] = min(front.members, key=lambda p: (p.r, -p.q, p.t))
    return summary


def fronts_by_video(measurements):
    """Build one front per video_id

    :rtype: OrderedDict[str, ParetoFront]
    """
    grouped = OrderedDict()
    for m in measurements:
        grouped.setdefault(m.video_id, []).append(ObjectivePoint.from_measurement(m))
    return OrderedDict((video_id, pareto_front(points)) for video_id, points in grouped.items())


def export_front(measurements, path):
    """Write a front file: every measurement with a 'pareto' 1/0 column, fronts
    computed per video_id.  The file loads as a measurement file as well.

    :returns: the fronts written, keyed by video_id
    """
    measurements = list(measurements)
    fronts = fronts_by_video(measurements)
    flags = [m.config_id in fronts[m.video_id] for m in measurements]
    export_measurements(measurements, path, flags)
    return fronts


def load_front(path):
    """Read per-video fronts back from a front file (or a plain measurement file,
    in which case the fronts are computed)

    :rtype: OrderedDict[str, ParetoFront]
    """
    rows = list(read_measurement_rows(path))
    if rows and rows[0][2] is None:
        return fronts_by_video(m for _, m, _ in rows)
    members = OrderedDict()
    sizes = OrderedDict()
    for _, m, flag in rows:
        sizes[m.video_id] = sizes.get(m.video_id, 0) + 1
        members.setdefault(m.video_id, [])
        if flag:
            members[m.video_id].append(ObjectivePoint.from_measurement(m))
    return OrderedDict(
        (video_id, ParetoFront(tuple(_ordered(points)), sizes[video_id]))
        for video_id, points in members.items())
