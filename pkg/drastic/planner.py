"""Dynamic GOP switching.

A schedule assigns a mode request to each video segment.  plan() walks the
frames GOP by GOP: at every step it selects a configuration from the segment's
Pareto front, then advances by that configuration's GOP size (the last step of a
segment is cut at the segment boundary).  compare_static() checks the dynamic
result against holding one configuration for the whole video.
"""

import csv
import enum
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List, Optional

from utils import setup_logger, format_real, id_sort_key
from drastic.backends import VideoSegment
from drastic.configspace import lookup
from drastic.errors import InvalidSchedule, MissingFront, Infeasible, ParseError, OutOfRangeError
from drastic.pareto import ObjectivePoint
from drastic.solver import (ModeRequest, solve_on_front, parse_request, format_request, objective_value)

logger = setup_logger('Planner')

TRACE_HEADER = ('frame_start', 'frame_end', 'video_id', 'config_id', 'psnr_db', 'enc_time_s',
                'bitrate_kbps', 'status', 'request')
COMPARISON_HEADER = ('label', 'config_ids', 'mean_psnr_db', 'total_enc_time_s', 'mean_bitrate_kbps')

# Geometry for schedule entries whose video_id is not in the segments catalog
DEFAULT_GEOMETRY = {
    'source_id': 'SV001',
    'width': 416,
    'height': 240,
    'framerate': 30.0
}


class OnInfeasible(enum.Enum):
    ABORT = 'abort'
    SKIP = 'skip'
    RELAX_NONE = 'relax_none'


@dataclass(frozen=True)
class ScheduleEntry:
    segment: VideoSegment
    request: ModeRequest


@dataclass(frozen=True)
class SwitchSchedule:
    """Per-segment requests covering a contiguous frame range

    Instance attributes:
        entries: tuple[ScheduleEntry]
        on_infeasible: OnInfeasible
    """
    entries: tuple
    on_infeasible: OnInfeasible = OnInfeasible.ABORT

    def __post_init__(self):
        if not self.entries:
            raise InvalidSchedule('schedule has no entries')
        for previous, current in zip(self.entries, self.entries[1:]):
            expected = previous.segment.end_frame + 1
            if current.segment.start_frame < expected:
                raise InvalidSchedule('{} overlaps {} (starts at frame {}, expected {})'.format(
                    current.segment.video_id, previous.segment.video_id, current.segment.start_frame, expected))
            if current.segment.start_frame > expected:
                raise InvalidSchedule('gap before {}: frames {}-{} are not scheduled'.format(
                    current.segment.video_id, expected, current.segment.start_frame - 1))

    @property
    def first_frame(self) -> int:
        return self.entries[0].segment.start_frame

    @property
    def last_frame(self) -> int:
        return self.entries[-1].segment.end_frame

    @property
    def frame_count(self) -> int:
        return self.last_frame - self.first_frame + 1


@dataclass(frozen=True)
class TraceStep:
    """One GOP step

    Instance attributes:
        frame_start, frame_end: int
            Inclusive
        video_id: str
        config_id: str or None
            None when the step was skipped
        point: ObjectivePoint or None
            The segment record of the selected configuration
        enc_time_s: float or None
            Time share of this step (segment time prorated by frames)
        request: ModeRequest
            Request the selection was made under
        status: str
            'ok', 'skipped' or 'relaxed'
    """
    frame_start: int
    frame_end: int
    video_id: str
    config_id: Optional[str]
    point: Optional[ObjectivePoint]
    enc_time_s: Optional[float]
    request: ModeRequest
    status: str = 'ok'

    @property
    def span(self) -> int:
        return self.frame_end - self.frame_start + 1


@dataclass(frozen=True)
class SegmentTotals:
    video_id: str
    frame_start: int
    frame_end: int
    config_ids: tuple
    mean_psnr_db: Optional[float]
    total_enc_time_s: float
    mean_bitrate_kbps: Optional[float]
    skipped_frames: int = 0


@dataclass
class SwitchTrace:
    steps: List[TraceStep] = field(default_factory=list)
    totals: List[SegmentTotals] = field(default_factory=list)

    @property
    def frame_count(self) -> int:
        return sum(step.span for step in self.steps)

    def segment_steps(self, video_id):
        return [step for step in self.steps if step.video_id == video_id]


def _totals(entry: ScheduleEntry, steps) -> SegmentTotals:
    used = [step for step in steps if step.point is not None]
    frames = sum(step.span for step in used)
    config_ids = tuple(OrderedDict.fromkeys(step.config_id for step in used))
    mean_psnr = mean_bitrate = None
    if frames:
        mean_psnr = math.fsum(step.point.q * step.span for step in used) / frames
        mean_bitrate = math.fsum(step.point.r * step.span for step in used) / frames
    return SegmentTotals(
        entry.segment.video_id, entry.segment.start_frame, entry.segment.end_frame, config_ids,
        mean_psnr, math.fsum(step.enc_time_s for step in used), mean_bitrate,
        sum(step.span for step in steps) - frames)


def _relaxed_request(request: ModeRequest, error: Infeasible):
    """Move the bound with the smallest relative miss just past its nearest point"""
    if not error.relaxations:
        return None

    def gap(relaxation):
        scale = abs(relaxation.current) or 1.0
        return abs(relaxation.needed - relaxation.current) / scale

    chosen = min(error.relaxations, key=gap)
    if chosen.bound == 'q_min':
        value = math.nextafter(chosen.needed, -math.inf)
    else:
        value = math.nextafter(chosen.needed, math.inf)
    logger.info('relaxing {} for {}'.format(chosen, format_request(request)))
    return request.replace_bound(chosen.bound, value)


def _select(entry: ScheduleEntry, front, policy: OnInfeasible):
    """(selection or None, request used, status) for one step"""
    try:
        return solve_on_front(entry.request, front), entry.request, 'ok'
    except Infeasible as e:
        if policy is OnInfeasible.ABORT:
            logger.error('plan(): {} is infeasible: {}'.format(entry.segment.video_id, e.message))
            raise
        if policy is OnInfeasible.SKIP:
            return None, entry.request, 'skipped'
        relaxed = _relaxed_request(entry.request, e)
        if relaxed is None:
            logger.error('plan(): {} cannot be relaxed on one bound: {}'.format(entry.segment.video_id, e.message))
            raise
        return solve_on_front(relaxed, front), relaxed, 'relaxed'


def plan(schedule: SwitchSchedule, fronts) -> SwitchTrace:
    """Walk the schedule GOP by GOP

    :param SwitchSchedule schedule:
    :param dict fronts: video_id -> ParetoFront
    :rtype: SwitchTrace
    :raises MissingFront: a scheduled segment has no front
    :raises Infeasible: with the abort policy, or when relax_none finds no single bound to move
    :raises UnknownConfiguration: a front member is not in the configuration catalog
    """
    trace = SwitchTrace()
    for entry in schedule.entries:
        segment = entry.segment
        try:
            front = fronts[segment.video_id]
        except KeyError:
            raise MissingFront('no Pareto front for segment {}'.format(segment.video_id))

        steps = []
        frame = segment.start_frame
        while frame <= segment.end_frame:
            selection, request, status = _select(entry, front, schedule.on_infeasible)
            if selection is None:
                steps.append(TraceStep(frame, segment.end_frame, segment.video_id, None, None, None,
                                       request, status))
                break
            span = min(lookup(selection.config_id).gop_size, segment.end_frame - frame + 1)
            share = selection.point.t * span / segment.frame_count
            steps.append(TraceStep(frame, frame + span - 1, segment.video_id, selection.config_id,
                                   selection.point, share, request, status))
            frame += span

        trace.steps.extend(steps)
        trace.totals.append(_totals(entry, steps))
        logger.debug('plan(): {} frames {}-{}: {} steps'.format(
            segment.video_id, segment.start_frame, segment.end_frame, len(steps)))
    return trace


@dataclass(frozen=True)
class Aggregates:
    label: str
    config_ids: tuple
    mean_psnr_db: Optional[float]
    total_enc_time_s: float
    mean_bitrate_kbps: Optional[float]


@dataclass(frozen=True)
class SegmentComparison:
    """Dynamic objective against the best static objective on one segment"""
    video_id: str
    mode: str
    dynamic_objective: Optional[float]
    static_objective: Optional[float]
    static_config_id: Optional[str]


@dataclass
class StaticComparison:
    """Output of compare_static

    Instance attributes:
        dynamic: Aggregates
        static_feasible: list[str]
            Configurations feasible on every segment
        best_static: dict[str, Aggregates or None]
            Best static configuration for 'psnr', 'time' and 'bitrate';
            None values mean no static configuration is feasible
        segments: list[SegmentComparison]
    """
    dynamic: Aggregates
    static_feasible: list
    best_static: dict
    segments: list

    @property
    def any_static_feasible(self) -> bool:
        return bool(self.static_feasible)


def _trace_aggregates(trace: SwitchTrace) -> Aggregates:
    used = [step for step in trace.steps if step.point is not None]
    frames = sum(step.span for step in used)
    config_ids = tuple(OrderedDict.fromkeys(step.config_id for step in used))
    if not frames:
        return Aggregates('dynamic', config_ids, None, 0.0, None)
    return Aggregates(
        'dynamic', config_ids,
        math.fsum(step.point.q * step.span for step in used) / frames,
        math.fsum(step.enc_time_s for step in used),
        math.fsum(step.point.r * step.span for step in used) / frames)


def _candidates(schedule, fronts, measurements):
    """video_id -> {config_id: ObjectivePoint} available as static choices"""
    candidates = OrderedDict()
    for entry in schedule.entries:
        video_id = entry.segment.video_id
        if measurements is not None:
            points = [ObjectivePoint.from_measurement(m) for m in measurements if m.video_id == video_id]
        else:
            points = list(fronts[video_id].members)
        candidates[video_id] = OrderedDict((p.config_id, p) for p in points)
    return candidates


def compare_static(schedule: SwitchSchedule, fronts, measurements=None) -> StaticComparison:
    """Compare the dynamic trace with every configuration that, held for the
    whole schedule, meets each segment's request

    :param dict fronts: video_id -> ParetoFront
    :param measurements: Optional full measurement list; static candidates come
        from it when given, else from the fronts
    :rtype: StaticComparison
    """
    trace = plan(schedule, fronts)
    candidates = _candidates(schedule, fronts, measurements)

    shared = None
    for points in candidates.values():
        ids = set(points)
        shared = ids if shared is None else shared & ids
    static_feasible = sorted(
        (config_id for config_id in shared
         if all(entry.request.admits(candidates[entry.segment.video_id][config_id])
                for entry in schedule.entries)),
        key=id_sort_key)

    frames = schedule.frame_count
    static = []
    for config_id in static_feasible:
        records = [(entry.segment, candidates[entry.segment.video_id][config_id]) for entry in schedule.entries]
        static.append(Aggregates(
            'static', (config_id,),
            math.fsum(p.q * s.frame_count for s, p in records) / frames,
            math.fsum(p.t for _, p in records),
            math.fsum(p.r * s.frame_count for s, p in records) / frames))

    best_static = {'psnr': None, 'time': None, 'bitrate': None}
    if static:
        best_static['psnr'] = max(static, key=lambda a: (a.mean_psnr_db, -a.total_enc_time_s))
        best_static['time'] = min(static, key=lambda a: (a.total_enc_time_s, -a.mean_psnr_db))
        best_static['bitrate'] = min(static, key=lambda a: (a.mean_bitrate_kbps, -a.mean_psnr_db))

    segments = []
    for entry, totals in zip(schedule.entries, trace.totals):
        video_id = entry.segment.video_id
        reference = list(candidates[video_id].values())
        dynamic_objective = None
        if totals.config_ids:
            chosen = candidates[video_id].get(totals.config_ids[0])
            if chosen is None:
                chosen = next(p for p in fronts[video_id].members if p.config_id == totals.config_ids[0])
            dynamic_objective = objective_value(entry.request, chosen, reference)
        best_value = best_id = None
        for config_id in static_feasible:
            value = objective_value(entry.request, candidates[video_id][config_id], reference)
            if best_value is None or entry.request.mode.better(value, best_value):
                best_value, best_id = value, config_id
        segments.append(SegmentComparison(video_id, entry.request.mode.value, dynamic_objective,
                                          best_value, best_id))

    logger.debug('compare_static(): {} static configurations feasible on all segments'.format(len(static_feasible)))
    return StaticComparison(_trace_aggregates(trace), static_feasible, best_static, segments)


def load_schedule(path, segments=None, on_infeasible=OnInfeasible.ABORT) -> SwitchSchedule:
    """Read a schedule file: 'video_id,start_frame,end_frame,<request>' per line.
    Blank lines and lines starting with '#' are skipped.

    :param dict segments: video_id -> VideoSegment for resolution and source
    :raises ParseError: with the line number
    :raises InvalidRequest:
    :raises InvalidSchedule:
    """
    segments = segments or {}
    if not isinstance(on_infeasible, OnInfeasible):
        on_infeasible = OnInfeasible(on_infeasible)
    entries = []
    with open(path, encoding='utf-8') as fp:
        for line_number, line in enumerate(fp, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            parts = [part.strip() for part in line.split(',', 3)]
            if len(parts) != 4:
                raise ParseError('expected video_id,start_frame,end_frame,request', row=line_number,
                                 module='switch_planner')
            video_id, start, end, request_text = parts
            known = segments.get(video_id)
            geometry = DEFAULT_GEOMETRY if known is None else {
                'source_id': known.source_id,
                'width': known.width,
                'height': known.height,
                'framerate': known.framerate
            }
            try:
                segment = VideoSegment(video_id, start_frame=int(start), end_frame=int(end), **geometry)
            except ValueError as e:
                raise ParseError(str(e), row=line_number, module='switch_planner')
            except OutOfRangeError as e:
                raise InvalidSchedule('line {}: {}'.format(line_number, e.message))
            entries.append(ScheduleEntry(segment, parse_request(request_text)))
    return SwitchSchedule(tuple(entries), on_infeasible)


def _real_or_blank(value):
    return '' if value is None else format_real(value)


def write_trace(trace: SwitchTrace, fp):
    writer = csv.writer(fp, lineterminator='\n')
    writer.writerow(TRACE_HEADER)
    for step in trace.steps:
        point = step.point
        writer.writerow((step.frame_start, step.frame_end, step.video_id, step.config_id or '',
                         _real_or_blank(point.q if point else None), _real_or_blank(step.enc_time_s),
                         _real_or_blank(point.r if point else None), step.status,
                         format_request(step.request)))


def export_trace(trace: SwitchTrace, path):
    with open(path, 'w', encoding='utf-8', newline='') as fp:
        write_trace(trace, fp)


def format_trace(trace: SwitchTrace) -> str:
    """Per-segment summary table for the terminal"""
    lines = ['{:<8} {:>11} {:<16} {:>10} {:>12} {:>12}'.format(
        'video', 'frames', 'configs', 'psnr_db', 'enc_time_s', 'kbps')]
    for totals in trace.totals:
        lines.append('{:<8} {:>11} {:<16} {:>10} {:>12} {:>12}'.format(
            totals.video_id,
            '{}-{}'.format(totals.frame_start, totals.frame_end),
            ' '.join(totals.config_ids) or '-',
            '-' if totals.mean_psnr_db is None else '{:.3f}'.format(totals.mean_psnr_db),
            '{:.3f}'.format(totals.total_enc_time_s),
            '-' if totals.mean_bitrate_kbps is None else '{:.3f}'.format(totals.mean_bitrate_kbps)))
    return '\n'.join(lines)


def _aggregate_row(aggregates: Aggregates, label=None):
    return (label or aggregates.label, ' '.join(aggregates.config_ids),
            _real_or_blank(aggregates.mean_psnr_db), format_real(aggregates.total_enc_time_s),
            _real_or_blank(aggregates.mean_bitrate_kbps))


def write_comparison(report: StaticComparison, fp):
    """Columnar report: the dynamic row, then the best static row per objective
    ('none feasible' when no single configuration meets every segment)
    """
    writer = csv.writer(fp, lineterminator='\n')
    writer.writerow(COMPARISON_HEADER)
    writer.writerow(_aggregate_row(report.dynamic))
    for objective in ('psnr', 'time', 'bitrate'):
        best = report.best_static[objective]
        label = 'static-best-{}'.format(objective)
        if best is None:
            writer.writerow((label, 'none feasible', '', '', ''))
        else:
            writer.writerow(_aggregate_row(best, label))


def export_comparison(report: StaticComparison, path):
    with open(path, 'w', encoding='utf-8', newline='') as fp:
        write_comparison(report, fp)
