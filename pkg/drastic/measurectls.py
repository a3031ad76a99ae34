import click
from flask import Blueprint, current_app

from utils import setup_logger
from drastic.backends import measure_many, write_measurements, average_measurements
from drastic.cli import handle_errors, backend_options, backend_overrides

logger = setup_logger('CLI')

measure_bp = Blueprint('measure', __name__, cli_group=None)


@measure_bp.cli.command('measure')
@click.option('--set', 'config_set', default=None,
              help="'standard', 'extended' or a config-space file (default: the experiment's set).")
@click.option('--video', 'video_ids', multiple=True,
              help='Segment to measure; repeat for several (default: every segment).')
@click.option('--out', 'out', type=click.File('w', encoding='utf-8', lazy=True), default='-',
              help='Measurement file to write (default: stdout).')
@click.option('--average', 'average', is_flag=True, default=False,
              help='Write one averaged TRAIN record per configuration instead of per-segment rows.')
@backend_options
@handle_errors
def measure_command(config_set, video_ids, out, average, fixture, fill, synthetic, encoder_cmd):
    """Measure every configuration on every segment."""
    experiment = current_app.experiment
    backend = experiment.backend(backend_overrides(fixture, synthetic, encoder_cmd, fill))
    configs = experiment.configurations(config_set)
    segments = experiment.segment_list(video_ids)
    logger.info('measure: {} configurations x {} segments with {}'.format(len(configs), len(segments),
                                                                         backend.name))
    measurements = measure_many(backend, configs, segments)
    if average:
        measurements = average_measurements(measurements)
    write_measurements(measurements, out)
