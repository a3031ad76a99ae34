"""DRASTIC controller app

The Flask app carries configuration and the experiment description; every
operation is a click command registered by one of the blueprints
(cfgctls, measurectls, frontctls, planctls, rvdctls).
"""
import json
import os

from flask import Flask

from utils import setup_logger, merge_dicts
from drastic.backends import load_segments, setup_backend, VideoSegment
from drastic.configspace import enumerate_set, load_config_space
from drastic.errors import OutOfRangeError

logger = setup_logger('App')

DATA_DIR = os.path.join(os.path.dirname(__file__), 'data')
DEFAULT_SEGMENTS = os.path.join(DATA_DIR, 'segments.csv')


def create_app(test_config=None):
    app = Flask(__name__, instance_relative_config=True)
    app.config.from_mapping(
        RVD_PATH=os.path.join(app.instance_path, 'rvd'),
        SEGMENTS_FILE=DEFAULT_SEGMENTS,
        BACKEND={'driver': 'Synthetic'},
        ENCODER={},
        CONFIG_SET='standard'
    )

    if test_config is None:
        app.config.from_file('config.json', load=json.load, silent=True)
    else:
        app.config.from_mapping(test_config)

    try:
        os.makedirs(app.instance_path)
    except OSError:
        pass

    # Load the experiment description (segments, backend, configuration set)
    app.experiment = setup_experiment(app)

    from . import cfgctls, measurectls, frontctls, planctls, rvdctls
    app.register_blueprint(cfgctls.cfg_bp)
    app.register_blueprint(measurectls.measure_bp)
    app.register_blueprint(frontctls.front_bp)
    app.register_blueprint(planctls.plan_bp)
    app.register_blueprint(rvdctls.rvd_bp)

    return app


class Experiment(object):
    """What to measure and how

    Instance attributes:
    -------------------
        name str
        config_set str
            'standard', 'extended' or a path to a config-space file
        segments OrderedDict[str, VideoSegment]
        backend_config dict
            Passed to setup_backend()
        encoder_config dict
            Adapter settings merged in when the driver is HMEncoder
    """
    def __init__(self):
        self.name = 'default'
        self.config_set = 'standard'
        self.segments = {}
        self.backend_config = {'driver': 'Synthetic'}
        self.encoder_config = {}

    def configurations(self, config_set=None):
        """The configurations to measure

        :rtype: list[GopConfiguration]
        """
        config_set = config_set or self.config_set
        if config_set in ('standard', 'extended'):
            return enumerate_set(config_set)
        return load_config_space(config_set)

    def segment_list(self, video_ids=None):
        if not video_ids:
            return list(self.segments.values())
        try:
            return [self.segments[video_id] for video_id in video_ids]
        except KeyError as e:
            raise OutOfRangeError('unknown segment {}'.format(e.args[0]), module='encoder_backend')

    def backend(self, overrides: dict = None):
        """Instantiate the backend; command-line overrides replace the configured one"""
        settings = dict(overrides) if overrides else dict(self.backend_config)
        if settings.get('driver') == 'HMEncoder':
            settings = merge_dicts(settings, self.encoder_config)
        return setup_backend(settings)


def _segments_from_list(entries):
    segments = {}
    for entry in entries:
        segment = VideoSegment(
            entry['video_id'], entry.get('source_id', 'SV001'), int(entry.get('width', 416)),
            int(entry.get('height', 240)), float(entry.get('framerate', 30)),
            int(entry['start_frame']), int(entry['end_frame']))
        segments[segment.video_id] = segment
    return segments


def setup_experiment(app):
    experiment = Experiment()
    experiment.config_set = app.config['CONFIG_SET']
    experiment.backend_config = dict(app.config['BACKEND'])
    experiment.encoder_config = dict(app.config['ENCODER'])
    segments_file = app.config['SEGMENTS_FILE']

    # Read the experiment file, if there is one ...
    experiment_config = {}
    try:
        with open(os.path.join(app.instance_path, 'experiment.json')) as config:
            experiment_config = json.load(config)
    except FileNotFoundError:
        logger.debug('setup_experiment(): no experiment.json, using app config')
    except json.JSONDecodeError as e:
        logger.error('setup_experiment(): experiment.json is not valid JSON: {}'.format(e.args), exc_info=True)
        raise e

    # ... which wins over the app config for whatever it names
    if 'name' in experiment_config:
        experiment.name = experiment_config['name']
    if 'config_set' in experiment_config:
        experiment.config_set = experiment_config['config_set']
    if 'backend' in experiment_config:
        experiment.backend_config = experiment_config['backend']
    if 'encoder' in experiment_config:
        experiment.encoder_config = merge_dicts(experiment_config['encoder'], experiment.encoder_config)
    if 'segments_file' in experiment_config:
        segments_file = experiment_config['segments_file']

    if 'segments' in experiment_config:
        experiment.segments = _segments_from_list(experiment_config['segments'])
    else:
        experiment.segments = load_segments(segments_file)

    logger.debug('setup_experiment(): {} with {} segments, backend {}'.format(
        experiment.name, len(experiment.segments), experiment.backend_config.get('driver')))
    return experiment
