import click
from flask import Blueprint, current_app

from drastic.backends import load_fixture
from drastic.cli import handle_errors
from drastic.pareto import load_front
from drastic.planner import (OnInfeasible, load_schedule, plan, compare_static, write_trace, format_trace,
                             write_comparison)

plan_bp = Blueprint('plan', __name__, cli_group=None)

_policies = click.Choice([policy.value for policy in OnInfeasible])


def _schedule(schedule_path, on_infeasible):
    return load_schedule(schedule_path, current_app.experiment.segments, OnInfeasible(on_infeasible))


@plan_bp.cli.command('plan')
@click.option('--schedule', 'schedule_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--fronts', 'fronts_path', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Front file with one front per scheduled segment.')
@click.option('--out', 'out', type=click.File('w', encoding='utf-8', lazy=True), default='-',
              help='Trace file to write (default: stdout).')
@click.option('--on-infeasible', 'on_infeasible', type=_policies, default=OnInfeasible.ABORT.value,
              show_default=True)
@handle_errors
def plan_command(schedule_path, fronts_path, out, on_infeasible):
    """Walk a schedule GOP by GOP and write the selection trace."""
    trace = plan(_schedule(schedule_path, on_infeasible), load_front(fronts_path))
    write_trace(trace, out)
    click.echo(format_trace(trace), err=True)


@plan_bp.cli.command('compare')
@click.option('--schedule', 'schedule_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--fronts', 'fronts_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--measurements', 'measurements_path', default=None, type=click.Path(exists=True, dir_okay=False),
              help='Full measurement file to draw static candidates from (default: the fronts).')
@click.option('--out', 'out', type=click.File('w', encoding='utf-8', lazy=True), default='-',
              help='Report file to write (default: stdout).')
@handle_errors
def compare_command(schedule_path, fronts_path, measurements_path, out):
    """Compare dynamic switching with the best single static configuration."""
    measurements = load_fixture(measurements_path) if measurements_path else None
    report = compare_static(_schedule(schedule_path, OnInfeasible.ABORT.value), load_front(fronts_path),
                            measurements)
    write_comparison(report, out)
    for segment in report.segments:
        static = 'none feasible' if segment.static_config_id is None else '{} ({})'.format(
            segment.static_config_id, segment.static_objective)
        click.echo('{} {}: dynamic {} static {}'.format(segment.video_id, segment.mode,
                                                        segment.dynamic_objective, static), err=True)
