import click
from flask import Blueprint, current_app

from drastic.cli import handle_errors
from drastic.configspace import write_config_space, write_cfg_files

cfg_bp = Blueprint('cfg', __name__, cli_group=None)


@cfg_bp.cli.command('enumerate')
@click.option('--set', 'config_set', default=None,
              help="'standard', 'extended' or a config-space file (default: the experiment's set).")
@click.option('--out', 'out', type=click.File('w', encoding='utf-8', lazy=True), default='-',
              help='Config-space file to write (default: stdout).')
@click.option('--cfg-dir', 'cfg_dir', type=click.Path(file_okay=False), default=None,
              help='Also write <id>.cfg encoder configuration files into this directory.')
@handle_errors
def enumerate_command(config_set, out, cfg_dir):
    """Write the configuration space."""
    configs = current_app.experiment.configurations(config_set)
    write_config_space(configs, out)
    if cfg_dir:
        paths = write_cfg_files(configs, cfg_dir)
        click.echo('wrote {} cfg files to {}'.format(len(paths), cfg_dir), err=True)
