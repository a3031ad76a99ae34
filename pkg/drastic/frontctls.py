import click
from flask import Blueprint, current_app

from utils import format_real
from drastic.backends import load_fixture, write_measurements, average_measurements
from drastic.cli import handle_errors
from drastic.configspace import catalog, lookup
from drastic.errors import MissingFront, UnknownConfiguration
from drastic.pareto import fronts_by_video, front_summary, load_front
from drastic.rvd import seed_tables, export_tables
from drastic.rvdctls import working_tables
from drastic.solver import Mode, build_request, parse_request, solve_on_front, format_request

front_bp = Blueprint('front', __name__, cli_group=None)


@front_bp.cli.command('front')
@click.option('--in', 'in_path', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Measurement file.')
@click.option('--out', 'out', type=click.File('w', encoding='utf-8', lazy=True), default='-',
              help="Front file to write: the measurements with a 'pareto' column (default: stdout).")
@click.option('--train', 'train', is_flag=True, default=False,
              help='Average each configuration over all videos and build one TRAIN front.')
@click.option('--seed-db', 'seed_db', is_flag=True, default=False,
              help='Also write the fronts into the working database.')
@handle_errors
def front_command(in_path, out, train, seed_db):
    """Extract the Pareto front of each video."""
    if train and seed_db:
        raise click.UsageError('--seed-db needs per-segment fronts; drop --train')
    measurements = load_fixture(in_path)
    if train:
        measurements = average_measurements(measurements)
    fronts = fronts_by_video(measurements)
    flags = [m.config_id in fronts[m.video_id] for m in measurements]
    write_measurements(measurements, out, flags)

    configs = catalog()
    for video_id, front in fronts.items():
        summary = front_summary(front, configs)
        per_mode = ' '.join('{}={}'.format(mode, count) for mode, count in summary['per_mode'].items())
        click.echo('{}: kept {} of {} {}'.format(video_id, summary['kept'], summary['of'], per_mode).rstrip(),
                   err=True)

    if seed_db:
        tables = seed_tables(fronts, current_app.experiment.segments, configs, working_tables())
        export_tables(tables, current_app.config['RVD_PATH'])
        click.echo('seeded {} paretofront rows into {}'.format(
            tables.count('paretofront'), current_app.config['RVD_PATH']), err=True)


def _describe(config_id):
    try:
        return lookup(config_id).tag
    except UnknownConfiguration:
        return config_id


@front_bp.cli.command('select')
@click.option('--front', 'front_path', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Front file (or a measurement file, whose front is computed).')
@click.option('--video', 'video_id', default=None, help='Video whose front to use; needed when the file has several.')
@click.option('--request', 'request_text', default=None,
              help="Whole request in key=value form, eg. 'mode=min-bitrate,qmin=40,tmax=800'.")
@click.option('--mode', 'mode', type=click.Choice([m.value for m in Mode]), default=None)
@click.option('--qmin', 'q_min', type=float, default=None, help='PSNR lower bound (dB).')
@click.option('--tmax', 't_max', type=float, default=None, help='Encoding time upper bound (s).')
@click.option('--rmax', 'r_max', type=float, default=None, help='Bitrate upper bound (kbps).')
@click.option('--alpha', type=float, default=None)
@click.option('--beta', type=float, default=None)
@click.option('--gamma', type=float, default=None)
@handle_errors
def select_command(front_path, video_id, request_text, mode, q_min, t_max, r_max, alpha, beta, gamma):
    """Pick the front member that best meets a mode request."""
    if request_text is not None:
        if any(v is not None for v in (mode, q_min, t_max, r_max, alpha, beta, gamma)):
            raise click.UsageError('--request cannot be combined with --mode or bound options')
        request = parse_request(request_text)
    elif mode is None:
        raise click.UsageError('give --mode or --request')
    else:
        request = build_request(mode, q_min, t_max, r_max, alpha, beta, gamma)

    fronts = load_front(front_path)
    if video_id is None:
        if len(fronts) != 1:
            raise click.UsageError('{} holds {} videos; pick one with --video'.format(front_path, len(fronts)))
        video_id = next(iter(fronts))
    if video_id not in fronts:
        raise MissingFront('{} has no front for {}'.format(front_path, video_id), module='mode_solver')

    selection = solve_on_front(request, fronts[video_id])
    point = selection.point
    click.echo(','.join((selection.config_id, video_id, format_real(point.q), format_real(point.t),
                         format_real(point.r), format_real(selection.objective_value),
                         str(selection.feasible_count))))
    click.echo('{} ({}): {:.4f} dB, {:.3f} s, {:.2f} kbps; {} of {} front members feasible under {}'.format(
        selection.config_id, _describe(selection.config_id), point.q, point.t, point.r,
        selection.feasible_count, len(fronts[video_id]), format_request(request)))
