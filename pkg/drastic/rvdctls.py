import os

import click
from flask import Blueprint, current_app

from drastic.cli import handle_errors
from drastic.configspace import catalog
from drastic.pareto import load_front
from drastic.rvd import (MANIFEST, PROFILES, SCHEMA, import_tables, export_tables, reference_tables, seed_tables,
                         format_record)

rvd_bp = Blueprint('rvd', __name__, cli_group='rvd')

_db_option = click.option('--db', 'db', default=None, type=click.Path(file_okay=False),
                          help='Database directory (default: RVD_PATH).')


def working_tables(path=None):
    """The working database: RVD_PATH when it has been written, else the shipped reference rows"""
    path = path or current_app.config['RVD_PATH']
    if os.path.isfile(os.path.join(path, MANIFEST)):
        return import_tables(path)
    return reference_tables()


def _counts(tables):
    return ', '.join('{} {}'.format(name, tables.count(name)) for name in SCHEMA)


@rvd_bp.cli.command('import')
@click.argument('directory', type=click.Path(exists=True, file_okay=False))
@handle_errors
def rvd_import(directory):
    """Load table files from DIRECTORY into the working database."""
    tables = import_tables(directory)
    export_tables(tables, current_app.config['RVD_PATH'])
    click.echo(_counts(tables))


@rvd_bp.cli.command('export')
@click.argument('directory', type=click.Path(file_okay=False))
@_db_option
@handle_errors
def rvd_export(directory, db):
    """Write the working database to DIRECTORY."""
    tables = working_tables(db)
    export_tables(tables, directory)
    click.echo(_counts(tables))


@rvd_bp.cli.command('seed')
@click.option('--fronts', 'fronts_path', required=True, type=click.Path(exists=True, dir_okay=False))
@_db_option
@handle_errors
def rvd_seed(fronts_path, db):
    """Map a front file into softwareconfig, videoseg and paretofront."""
    path = db or current_app.config['RVD_PATH']
    tables = seed_tables(load_front(fronts_path), current_app.experiment.segments, catalog(), working_tables(path))
    export_tables(tables, path)
    click.echo(_counts(tables))


@rvd_bp.cli.group('query')
def rvd_query():
    """Paretofront queries."""


@rvd_query.command('max-quality')
@click.option('--video', 'video_id', required=True)
@click.option('--rmax', 'r_max', required=True, type=float, help='Bitrate upper bound (kbps, inclusive).')
@click.option('--tmax', 't_max', required=True, type=float, help='Encoding time upper bound (s, inclusive).')
@_db_option
@handle_errors
def rvd_query_max_quality(video_id, r_max, t_max, db):
    """Highest PSNR row within the bitrate and time bounds."""
    click.echo(format_record(working_tables(db).query_max_quality(video_id, r_max, t_max)))


@rvd_query.command('min-bitrate')
@click.option('--video', 'video_id', required=True)
@click.option('--qmin', 'q_min', required=True, type=float, help='PSNR lower bound (dB, inclusive).')
@click.option('--tmax', 't_max', required=True, type=float, help='Encoding time upper bound (s, inclusive).')
@_db_option
@handle_errors
def rvd_query_min_bitrate(video_id, q_min, t_max, db):
    """Lowest bitrate row within the quality and time bounds."""
    click.echo(format_record(working_tables(db).query_min_bitrate(video_id, q_min, t_max)))


@rvd_bp.cli.command('select')
@click.option('--device', 'device_id', required=True)
@click.option('--profile', 'profile', required=True, type=click.Choice(PROFILES, case_sensitive=False))
@click.option('--mode', 'mode', required=True, type=click.Choice(['max-quality', 'min-bitrate']))
@click.option('--video', 'video_id', required=True)
@_db_option
@handle_errors
def rvd_select(device_id, profile, mode, video_id, db):
    """Select with the thresholds of a device's user profile."""
    tables = working_tables(db)
    record = tables.device_constrained_select(device_id, profile, mode, video_id)
    click.echo(format_record(record))
