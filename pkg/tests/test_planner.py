import math
import os

import pytest

from drastic import DATA_DIR
from drastic.backends import VideoSegment
from drastic.configspace import lookup
from drastic.errors import Infeasible, InvalidSchedule, MissingFront, ParseError, InvalidRequest
from drastic.pareto import ObjectivePoint, ParetoFront, pareto_front
from drastic.planner import (OnInfeasible, ScheduleEntry, SwitchSchedule, plan, compare_static, load_schedule,
                             export_trace, format_trace, export_comparison, TRACE_HEADER)
from drastic.solver import parse_request


def _segment(video_id, start, end):
    return VideoSegment(video_id, 'SV001', 416, 240, 30.0, start, end)


def _schedule(*entries, policy=OnInfeasible.ABORT):
    return SwitchSchedule(tuple(ScheduleEntry(segment, parse_request(text)) for segment, text in entries), policy)


@pytest.fixture
def switching_schedule(segments):
    return load_schedule(os.path.join(DATA_DIR, 'schedule_min_bitrate.txt'), segments)


def test_shipped_min_bitrate_schedule(switching_schedule):
    assert switching_schedule == _schedule((_segment('V001', 1, 100), 'mode=min-bitrate,qmin=35,tmax=600'),
                                           (_segment('V002', 101, 200), 'mode=min-bitrate,qmin=40,tmax=360'))


def test_switching_trace(switching_schedule, synthetic_fronts):
    trace = plan(switching_schedule, synthetic_fronts)

    # frame spans tile 1-200
    assert trace.frame_count == 200
    assert trace.steps[0].frame_start == 1 and trace.steps[-1].frame_end == 200
    for previous, current in zip(trace.steps, trace.steps[1:]):
        assert current.frame_start == previous.frame_end + 1

    for step in trace.steps:
        assert step.status == 'ok'
        assert step.request.admits(step.point)
        assert step.span <= lookup(step.config_id).gop_size

    first, second = trace.totals
    assert second.mean_psnr_db > 40
    assert len(first.config_ids) == 1 and len(second.config_ids) == 1
    assert first.config_ids != second.config_ids
    # the only change happens at the segment boundary
    changes = [current.frame_start for previous, current in zip(trace.steps, trace.steps[1:])
               if previous.config_id != current.config_id]
    assert changes == [101]


def test_max_quality_switching(segments, synthetic_fronts):
    schedule = load_schedule(os.path.join(DATA_DIR, 'schedule_max_quality.txt'), segments)
    assert schedule.entries[1].request.r_max == math.inf
    trace = plan(schedule, synthetic_fronts)

    assert trace.frame_count == 200
    assert trace.steps[0].frame_start == 1 and trace.steps[-1].frame_end == 200
    for previous, current in zip(trace.steps, trace.steps[1:]):
        assert current.frame_start == previous.frame_end + 1
    for step in trace.steps:
        assert step.status == 'ok'
        assert step.request.admits(step.point)

    first, second = trace.totals
    assert all(step.point.t < 70 and step.point.r < 1000 for step in trace.segment_steps('V001'))
    assert all(step.point.t < 200 for step in trace.segment_steps('V002'))
    # a looser budget buys quality
    assert second.mean_psnr_db > first.mean_psnr_db


def test_segment_time_is_conserved(switching_schedule, synthetic_fronts):
    trace = plan(switching_schedule, synthetic_fronts)
    for totals in trace.totals:
        steps = trace.segment_steps(totals.video_id)
        assert totals.total_enc_time_s == pytest.approx(steps[0].point.t)
        assert totals.mean_bitrate_kbps == pytest.approx(steps[0].point.r)


def test_all_intra_steps_one_frame():
    front = pareto_front([ObjectivePoint('S1', 43.0, 100.0, 4800.0)])
    trace = plan(_schedule((_segment('V001', 1, 100), 'mode=max-quality,rmax=inf,tmax=inf')), {'V001': front})
    assert len(trace.steps) == 100
    assert all(step.span == 1 and step.config_id == 'S1' for step in trace.steps)


def test_random_access_tail_is_truncated():
    front = pareto_front([ObjectivePoint('S32', 41.3507, 332.199, 1085.06)])
    trace = plan(_schedule((_segment('V001', 1, 100), 'mode=min-bitrate,qmin=40,tmax=800')), {'V001': front})
    assert [step.span for step in trace.steps] == [8] * 12 + [4]
    assert math.fsum(step.enc_time_s for step in trace.steps) == pytest.approx(332.199)


def test_single_feasible_point_every_step():
    front = pareto_front([ObjectivePoint('S1', 43.0, 100.0, 4800.0), ObjectivePoint('S32', 41.0, 300.0, 1000.0)])
    trace = plan(_schedule((_segment('V001', 1, 40), 'mode=min-bitrate,qmin=42,tmax=500')), {'V001': front})
    assert {step.config_id for step in trace.steps} == {'S1'}


def test_infeasible_policies():
    front = pareto_front([ObjectivePoint('S32', 41.0, 300.0, 1000.0)])
    entries = ((_segment('V001', 1, 16), 'mode=min-bitrate,qmin=35,tmax=600'),
               (_segment('V002', 17, 32), 'mode=min-bitrate,qmin=41.5,tmax=600'))
    fronts = {'V001': front, 'V002': front}

    with pytest.raises(Infeasible):
        plan(_schedule(*entries), fronts)

    skipped = plan(_schedule(*entries, policy=OnInfeasible.SKIP), fronts)
    assert skipped.frame_count == 32
    assert skipped.steps[-1].status == 'skipped' and skipped.steps[-1].config_id is None
    assert skipped.totals[1].skipped_frames == 16
    assert skipped.totals[1].mean_psnr_db is None

    relaxed = plan(_schedule(*entries, policy=OnInfeasible.RELAX_NONE), fronts)
    tail = relaxed.segment_steps('V002')
    assert {step.status for step in tail} == {'relaxed'}
    assert all(step.request.admits(step.point) for step in tail)
    assert tail[0].request.q_min < 41.0
    assert tail[0].request.t_max == 600


def test_missing_front(switching_schedule, synthetic_fronts):
    with pytest.raises(MissingFront):
        plan(switching_schedule, {'V001': synthetic_fronts['V001']})


def test_schedule_must_be_contiguous():
    with pytest.raises(InvalidSchedule):
        _schedule((_segment('V001', 1, 100), 'mode=min-time,qmin=30,rmax=900'),
                  (_segment('V002', 90, 200), 'mode=min-time,qmin=30,rmax=900'))
    with pytest.raises(InvalidSchedule):
        _schedule((_segment('V001', 1, 100), 'mode=min-time,qmin=30,rmax=900'),
                  (_segment('V002', 102, 200), 'mode=min-time,qmin=30,rmax=900'))
    with pytest.raises(InvalidSchedule):
        SwitchSchedule(())


def test_load_schedule(tmp_path, segments):
    path = tmp_path / 'schedule.txt'
    path.write_text('# two segments\n'
                    'V001,1,100,mode=min-bitrate,qmin=35,tmax=600\n'
                    '\n'
                    'V002,101,200,mode=min-bitrate qmin=40 tmax=360\n', encoding='utf-8')
    schedule = load_schedule(path, segments)
    assert [e.segment.video_id for e in schedule.entries] == ['V001', 'V002']
    assert schedule.entries[1].request.t_max == 360
    assert schedule.entries[0].segment == segments['V001']
    assert schedule.on_infeasible is OnInfeasible.ABORT

    unknown = tmp_path / 'unknown.txt'
    unknown.write_text('V900,1,50,mode=min-time,qmin=30,rmax=900\n', encoding='utf-8')
    assert load_schedule(unknown, segments, 'skip').entries[0].segment.resolution == '416x240'

    for text, error in (('V001,1\n', ParseError), ('V001,a,9,mode=min-time,qmin=1,rmax=2\n', ParseError),
                        ('V001,9,1,mode=min-time,qmin=1,rmax=2\n', InvalidSchedule),
                        ('V001,1,9,mode=min-time\n', InvalidRequest)):
        bad = tmp_path / 'bad.txt'
        bad.write_text(text, encoding='utf-8')
        with pytest.raises(error):
            load_schedule(bad, segments)


def test_trace_file(tmp_path, switching_schedule, synthetic_fronts):
    trace = plan(switching_schedule, synthetic_fronts)
    path = tmp_path / 'trace.csv'
    export_trace(trace, path)
    lines = path.read_text(encoding='utf-8').splitlines()
    assert lines[0] == ','.join(TRACE_HEADER)
    assert len(lines) == len(trace.steps) + 1
    assert lines[1].startswith('1,')
    table = format_trace(trace)
    assert 'V001' in table and 'V002' in table


def test_compare_disjoint_segments(segments, synthetic_fronts, tmp_path):
    schedule = _schedule((segments['V001'], 'mode=min-bitrate,qmin=42,tmax=inf'),
                         (segments['V002'], 'mode=min-time,qmin=30,rmax=2000'))
    report = compare_static(schedule, synthetic_fronts)
    assert report.static_feasible == []
    assert not report.any_static_feasible
    assert report.best_static == {'psnr': None, 'time': None, 'bitrate': None}
    assert report.dynamic.config_ids
    assert report.dynamic.mean_psnr_db is not None
    path = tmp_path / 'report.csv'
    export_comparison(report, path)
    assert 'static-best-bitrate,none feasible' in path.read_text(encoding='utf-8')


def test_compare_single_segment(segments, synthetic_fronts):
    schedule = _schedule((segments['V001'], 'mode=min-bitrate,qmin=35,tmax=600'))
    report = compare_static(schedule, synthetic_fronts)
    (segment,) = report.segments
    assert segment.static_objective == segment.dynamic_objective
    assert report.best_static['bitrate'].mean_bitrate_kbps == pytest.approx(report.dynamic.mean_bitrate_kbps)


def test_dynamic_beats_static(switching_schedule, synthetic_fronts, synthetic_measurements):
    report = compare_static(switching_schedule, synthetic_fronts, synthetic_measurements)
    assert report.any_static_feasible
    assert report.dynamic.mean_bitrate_kbps <= report.best_static['bitrate'].mean_bitrate_kbps
    for segment in report.segments:
        assert segment.dynamic_objective <= segment.static_objective
