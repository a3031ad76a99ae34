"""Command-line entry point

Exit status: 0 on success, 2 when a request is infeasible or a query returns
no rows, 1 for any other error.  Errors are printed to stderr prefixed with the
name of the module that raised them.
"""

import functools
import sys

import click
from flask.cli import FlaskGroup

from utils import setup_logger
from drastic import create_app
from drastic.backends.fixture import SHIPPED_FIXTURE
from drastic.errors import DrasticError, Infeasible, NoRows

logger = setup_logger('CLI')

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_RESULT = 2


def handle_errors(f):
    """Turn controller errors into the exit status contract"""
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (Infeasible, NoRows) as e:
            click.echo('{}: {}'.format(e.module, e.message), err=True)
            raise click.exceptions.Exit(EXIT_NO_RESULT)
        except DrasticError as e:
            logger.debug('{}(): {}: {}'.format(f.__name__, e.module, e.message))
            click.echo('{}: {}'.format(e.module, e.message), err=True)
            raise click.exceptions.Exit(EXIT_ERROR)
        except OSError as e:
            logger.debug('{}(): {}'.format(f.__name__, e), exc_info=True)
            click.echo('io: {}'.format(e), err=True)
            raise click.exceptions.Exit(EXIT_ERROR)
    return wrapper


def backend_options(f):
    """--fixture / --synthetic / --encoder-cmd, at most one of them"""
    f = click.option('--encoder-cmd', 'encoder_cmd', default=None, metavar='TEMPLATE',
                     help='Run an external encoder with this command template.')(f)
    f = click.option('--synthetic', 'synthetic', is_flag=True, default=False,
                     help='Use the synthetic encoder model.')(f)
    f = click.option('--fill/--no-fill', 'fill', default=False,
                     help='With --fixture, measure pairs missing from the file with the synthetic model.')(f)
    f = click.option('--fixture', 'fixture', is_flag=False, flag_value=SHIPPED_FIXTURE, default=None,
                     metavar='[PATH]', help='Answer from a measurement file (default: shipped tables).')(f)
    return f


def backend_overrides(fixture=None, synthetic=False, encoder_cmd=None, fill=False):
    """Backend settings picked on the command line, or None to use the experiment's

    :raises click.UsageError: more than one backend was picked
    """
    picked = [name for name, given in (('--fixture', fixture is not None), ('--synthetic', synthetic),
                                       ('--encoder-cmd', encoder_cmd is not None)) if given]
    if len(picked) > 1:
        raise click.UsageError('{} are mutually exclusive'.format(' and '.join(picked)))
    if fill and fixture is None:
        raise click.UsageError('--fill only applies to --fixture')
    if fixture is not None:
        settings = {'driver': 'Fixture', 'path': fixture}
        if fill:
            settings['fallback'] = {'driver': 'Synthetic'}
        return settings
    if synthetic:
        return {'driver': 'Synthetic'}
    if encoder_cmd is not None:
        return {'driver': 'HMEncoder', 'command_template': encoder_cmd}
    return None


def build_cli(app_factory=create_app):
    """The top-level click group.  Flask's own run/shell/routes commands are left out."""
    return FlaskGroup(name='drastic', create_app=app_factory, add_default_commands=False,
                      add_version_option=False,
                      help='Select encoder GOP configurations under quality, time and bitrate constraints.')


cli = build_cli()


def run(argv=None, app_factory=None) -> int:
    """Run one invocation and return its exit status instead of exiting"""
    group = cli if app_factory is None else build_cli(app_factory)
    try:
        # without standalone mode click hands back the Exit status as the return value
        status = group.main(args=argv, prog_name='drastic', standalone_mode=False)
        if isinstance(status, int):
            return status
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        click.echo('Aborted!', err=True)
        return EXIT_ERROR
    except click.ClickException as e:
        e.show()
        return EXIT_ERROR
    except Exception as e:
        logger.error('run(): unexpected error: {}'.format(e.args), exc_info=True)
        click.echo('drastic: {}'.format(e), err=True)
        return EXIT_ERROR
    return EXIT_OK


def main():
    sys.exit(run())
