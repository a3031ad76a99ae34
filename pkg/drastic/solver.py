"""Constrained selection over measured points, one routine per DRASTIC mode:

    min-bitrate  min r  s.t. q > q_min, t < t_max
    max-quality  max q  s.t. r < r_max, t < t_max
    min-time     min t  s.t. q > q_min, r < r_max
    typical      max alpha*q' - beta*r' - gamma*t'  s.t. all three bounds

q', r', t' are min-max normalised over the non-dominated part of the feasible
set; an axis with zero range normalises to 0.5.  Comparisons are strict unless
inclusive=True is passed.
"""

import enum
import math
import re
from dataclasses import dataclass
from typing import Optional, Tuple

from utils import setup_logger, id_sort_key, format_real
from drastic.errors import InvalidRequest, Infeasible
from drastic.pareto import ObjectivePoint, ParetoFront, pareto_front

logger = setup_logger('Solver')

WEIGHT_TOLERANCE = 1e-9


class Mode(enum.Enum):
    MIN_BITRATE = 'min-bitrate'
    MAX_QUALITY = 'max-quality'
    MIN_TIME = 'min-time'
    TYPICAL = 'typical'

    @property
    def maximizes(self) -> bool:
        return self in (Mode.MAX_QUALITY, Mode.TYPICAL)

    def better(self, a, b) -> bool:
        """True if objective value a beats b"""
        return a > b if self.maximizes else a < b


# Bounds each mode needs
_REQUIRED_BOUNDS = {
    Mode.MIN_BITRATE: ('q_min', 't_max'),
    Mode.MAX_QUALITY: ('r_max', 't_max'),
    Mode.MIN_TIME: ('q_min', 'r_max'),
    Mode.TYPICAL: ('q_min', 't_max', 'r_max')
}

# Text keys of the request form and the attributes they set
_REQUEST_KEYS = {
    'qmin': 'q_min',
    'tmax': 't_max',
    'rmax': 'r_max',
    'alpha': 'alpha',
    'beta': 'beta',
    'gamma': 'gamma'
}


@dataclass(frozen=True)
class ModeRequest:
    """A mode with its bounds and, for typical, its weights

    Instance attributes:
        mode: Mode
        q_min: float or None
            PSNR lower bound in dB
        t_max: float or None
            Encoding time upper bound in seconds
        r_max: float or None
            Bitrate upper bound in kbps
        weights: (alpha, beta, gamma) or None
    """
    mode: Mode
    q_min: Optional[float] = None
    t_max: Optional[float] = None
    r_max: Optional[float] = None
    weights: Optional[Tuple[float, float, float]] = None

    def __post_init__(self):
        if not isinstance(self.mode, Mode):
            raise InvalidRequest('mode must be one of {}'.format(', '.join(m.value for m in Mode)))
        for name in _REQUIRED_BOUNDS[self.mode]:
            value = getattr(self, name)
            if value is None:
                raise InvalidRequest('{} requires {}'.format(self.mode.value, name.replace('_', '')))
            if math.isnan(value):
                raise InvalidRequest('{} must be a number'.format(name.replace('_', '')))
        if self.mode is Mode.TYPICAL:
            if self.weights is None or len(self.weights) != 3:
                raise InvalidRequest('typical requires weights alpha, beta and gamma')
            if any(math.isnan(w) or w < 0 for w in self.weights):
                raise InvalidRequest('weights must be non-negative')
            if abs(math.fsum(self.weights) - 1) > WEIGHT_TOLERANCE:
                raise InvalidRequest('weights must sum to 1, got {}'.format(format_real(math.fsum(self.weights))))

    @property
    def active_bounds(self):
        return _REQUIRED_BOUNDS[self.mode]

    def admits(self, point: ObjectivePoint, inclusive: bool = False) -> bool:
        """True if point satisfies every active bound"""
        return all(_within(name, getattr(self, name), point, inclusive) for name in self.active_bounds)

    def replace_bound(self, name, value):
        fields = dict(mode=self.mode, q_min=self.q_min, t_max=self.t_max, r_max=self.r_max, weights=self.weights)
        fields[name] = value
        return ModeRequest(**fields)


@dataclass(frozen=True)
class Selection:
    """Result of a solve

    Instance attributes:
        config_id: str
        point: ObjectivePoint
        objective_value: float
            r, q or t for the single-objective modes, the weighted score for typical
        feasible_count: int
            Points that satisfied the constraints
    """
    config_id: str
    point: ObjectivePoint
    objective_value: float
    feasible_count: int


@dataclass(frozen=True)
class Relaxation:
    """Nearest miss along one bound: moving the bound past 'needed', with the
    other bounds unchanged, admits at least one point
    """
    bound: str
    current: float
    needed: float

    def __str__(self):
        return '{} {} -> {}'.format(self.bound.replace('_', ''), format_real(self.current), format_real(self.needed))


def _within(name, bound, point, inclusive):
    if name == 'q_min':
        return point.q >= bound if inclusive else point.q > bound
    value = point.t if name == 't_max' else point.r
    return value <= bound if inclusive else value < bound


def _axis(name, point):
    return {'q_min': point.q, 't_max': point.t, 'r_max': point.r}[name]


def relaxations(request: ModeRequest, points, inclusive: bool = False):
    """Per active bound, the value it has to move past to admit a point that
    meets the other bounds.  Bounds that cannot help alone are left out.

    :rtype: tuple[Relaxation]
    """
    found = []
    for name in request.active_bounds:
        others = [o for o in request.active_bounds if o != name]
        candidates = [p for p in points
                      if all(_within(o, getattr(request, o), p, inclusive) for o in others)]
        if not candidates:
            continue
        values = [_axis(name, p) for p in candidates]
        needed = max(values) if name == 'q_min' else min(values)
        found.append(Relaxation(name, getattr(request, name), needed))
    return tuple(found)


def _normaliser(values):
    low, high = min(values), max(values)
    if high == low:
        return lambda v: 0.5
    span = high - low
    return lambda v: (v - low) / span


def _scorer(request: ModeRequest, feasible):
    """Objective function and tie-break key for the request's mode"""
    if request.mode is Mode.MIN_BITRATE:
        return (lambda p: p.r), (lambda p, v: (v, -p.q, p.t, id_sort_key(p.config_id)))
    if request.mode is Mode.MAX_QUALITY:
        return (lambda p: p.q), (lambda p, v: (-v, p.t, p.r, id_sort_key(p.config_id)))
    if request.mode is Mode.MIN_TIME:
        return (lambda p: p.t), (lambda p, v: (v, -p.q, p.r, id_sort_key(p.config_id)))

    reference = pareto_front(feasible).members
    q_hat = _normaliser([p.q for p in reference])
    t_hat = _normaliser([p.t for p in reference])
    r_hat = _normaliser([p.r for p in reference])
    alpha, beta, gamma = request.weights

    def score(p):
        return alpha * q_hat(p.q) - beta * r_hat(p.r) - gamma * t_hat(p.t)

    return score, (lambda p, v: (-v, -p.q, p.t, p.r, id_sort_key(p.config_id)))


def solve(request: ModeRequest, points, inclusive: bool = False) -> Selection:
    """Select the feasible point that optimises the request's objective

    :param ModeRequest request:
    :param points: iterable of ObjectivePoint
    :param bool inclusive: Use >= / <= instead of strict comparisons
    :rtype: Selection
    :raises Infeasible: no point satisfies the bounds; carries the relaxations
    """
    points = list(points)
    feasible = [p for p in points if request.admits(p, inclusive)]
    if not feasible:
        diagnostics = relaxations(request, points, inclusive)
        message = 'no configuration satisfies {}'.format(format_request(request))
        if diagnostics:
            message += ' (nearest: {})'.format('; '.join(str(r) for r in diagnostics))
        logger.info('solve(): {}'.format(message))
        raise Infeasible(message, diagnostics)

    objective, tie_key = _scorer(request, feasible)
    scored = [(p, objective(p)) for p in feasible]
    best, value = min(scored, key=lambda pair: tie_key(*pair))
    logger.debug('solve(): {} -> {} ({} feasible)'.format(format_request(request), best.config_id, len(feasible)))
    return Selection(best.config_id, best, value, len(feasible))


def solve_on_front(request: ModeRequest, front: ParetoFront, inclusive: bool = False) -> Selection:
    """solve() restricted to the members of a Pareto front"""
    return solve(request, front.members, inclusive)


def objective_value(request: ModeRequest, point: ObjectivePoint, points, inclusive: bool = False):
    """Score one point the way solve() scores it against the given point set.
    Typical mode normalises over the feasible part of points (plus point).

    :returns: the objective value, or None if point is not feasible
    """
    if not request.admits(point, inclusive):
        return None
    feasible = [p for p in points if request.admits(p, inclusive) and p.config_id != point.config_id]
    objective, _ = _scorer(request, feasible + [point])
    return objective(point)


def parse_request(text: str) -> ModeRequest:
    """Parse the key=value request form, eg. 'mode=min-bitrate,qmin=35,tmax=600'

    Pairs are separated by commas or whitespace.  Numbers accept 'inf'.

    :raises InvalidRequest:
    """
    fields = {}
    for token in re.split(r'[,\s]+', text.strip()):
        if not token:
            continue
        key, sep, value = token.partition('=')
        key = key.strip().lower()
        if not sep or not value:
            raise InvalidRequest("expected key=value, got '{}'".format(token))
        if key in fields:
            raise InvalidRequest("'{}' given twice".format(key))
        fields[key] = value.strip()

    try:
        mode = Mode(fields.pop('mode').lower())
    except KeyError:
        raise InvalidRequest("request has no 'mode'")
    except ValueError as e:
        raise InvalidRequest('unknown mode: {}'.format(e))

    values = {}
    for key, value in fields.items():
        if key not in _REQUEST_KEYS:
            raise InvalidRequest("unknown request key '{}'".format(key))
        try:
            values[_REQUEST_KEYS[key]] = float(value)
        except ValueError:
            raise InvalidRequest("'{}' is not a number: '{}'".format(key, value))

    return build_request(mode, values.get('q_min'), values.get('t_max'), values.get('r_max'),
                         values.get('alpha'), values.get('beta'), values.get('gamma'))


def build_request(mode, q_min=None, t_max=None, r_max=None, alpha=None, beta=None, gamma=None) -> ModeRequest:
    """Build a request from loose values, as the command line gives them"""
    if not isinstance(mode, Mode):
        try:
            mode = Mode(str(mode).lower())
        except ValueError as e:
            raise InvalidRequest('unknown mode: {}'.format(e))
    weights = None
    given = [w for w in (alpha, beta, gamma) if w is not None]
    if given:
        if len(given) != 3:
            raise InvalidRequest('alpha, beta and gamma must be given together')
        weights = (alpha, beta, gamma)
    if weights is not None and mode is not Mode.TYPICAL:
        raise InvalidRequest('weights only apply to typical')
    return ModeRequest(mode, q_min, t_max, r_max, weights)


def format_request(request: ModeRequest) -> str:
    """Canonical text form; parse_request(format_request(r)) == r"""
    parts = ['mode={}'.format(request.mode.value)]
    for key, name in (('qmin', 'q_min'), ('tmax', 't_max'), ('rmax', 'r_max')):
        value = getattr(request, name)
        if value is not None:
            parts.append('{}={}'.format(key, format_real(value)))
    if request.weights is not None:
        for key, value in zip(('alpha', 'beta', 'gamma'), request.weights):
            parts.append('{}={}'.format(key, format_real(value)))
    return ','.join(parts)
