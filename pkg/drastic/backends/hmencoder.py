"""External encoder adapter (HM reference encoder or anything with a similar
command line and a one-line summary).

Each measure() call writes the configuration text to a temporary .cfg file,
runs the encoder as a child process, times it on the wall clock and pulls
(bitrate, PSNR) out of the output with one configurable regular expression.

The command template is a str.format() pattern.  {cfg}, {input} and {frames}
are required exactly once; {skip}, {width}, {height}, {fps} and {qp} may be used.
The DRASTIC_ENCODER_CMD environment variable overrides the template.
"""

import os
import re
import shlex
import string
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from time import monotonic

from utils import setup_logger
from drastic.backends import EncoderBackend, Measurement, VideoSegment
from drastic.configspace import emit_cfg_text
from drastic.errors import AdapterFailure, OutOfRangeError

logger = setup_logger('HMEncoder')

ENV_COMMAND = 'DRASTIC_ENCODER_CMD'
REQUIRED_PLACEHOLDERS = ('cfg', 'input', 'frames')
OPTIONAL_PLACEHOLDERS = ('skip', 'width', 'height', 'fps', 'qp')

DEFAULT_COMMAND = ('TAppEncoder -c {cfg} -i {input} -f {frames} -fs {skip} '
                   '-wdt {width} -hgt {height} -fr {fps}')

# HM prints a SUMMARY block whose data line reads
#   "<frames>    a    <bitrate kbps>   <Y-PSNR>   <U-PSNR>   <V-PSNR>   <YUV-PSNR>"
DEFAULT_SUMMARY_PATTERN = r'^\s*\d+\s+a\s+(?P<bitrate>[0-9.]+)\s+(?P<psnr>[0-9.]+)'


def _timer():
    return monotonic()


@dataclass
class EncoderAdapterSpec:
    """How to run the encoder and read its result

    Instance attributes:
        command_template: str
            str.format() pattern for the command line
        summary_pattern: str
            Regex with named groups 'bitrate' and 'psnr'
        timer: callable
            Returns seconds; called before and after the child runs
    """
    command_template: str = DEFAULT_COMMAND
    summary_pattern: str = DEFAULT_SUMMARY_PATTERN
    timer: object = _timer

    def __post_init__(self):
        fields = [name for _, name, _, _ in string.Formatter().parse(self.command_template) if name is not None]
        for placeholder in REQUIRED_PLACEHOLDERS:
            if fields.count(placeholder) != 1:
                raise OutOfRangeError("command template must contain {{{}}} exactly once: '{}'".format(
                    placeholder, self.command_template), module='encoder_backend')
        unknown = set(fields) - set(REQUIRED_PLACEHOLDERS) - set(OPTIONAL_PLACEHOLDERS)
        if unknown:
            raise OutOfRangeError('unknown placeholders in command template: {}'.format(
                ', '.join(sorted(unknown))), module='encoder_backend')
        pattern = re.compile(self.summary_pattern, re.MULTILINE)
        if not {'bitrate', 'psnr'} <= set(pattern.groupindex):
            raise OutOfRangeError("summary pattern needs named groups 'bitrate' and 'psnr'",
                                  module='encoder_backend')


class HMEncoder(EncoderBackend):
    """Runs an external encoder per measurement

    Instance attributes:
    -------------------
        spec EncoderAdapterSpec
        inputs dict[str, str]
            Source_Id -> raw video path
        pool_size int
            Maximum number of concurrent child processes.  Defaults to 1
            because wall-clock timing degrades when the machine is oversubscribed.
        timeout float or None
            Seconds before a child is killed
    """
    name = 'hmencoder'

    def __init__(self, command_template: str = None, summary_pattern: str = None, inputs: dict = None,
                 pool_size: int = 1, timeout: float = None, timer=None):
        """Constructor

        :param str command_template: Command line pattern.  DRASTIC_ENCODER_CMD wins over it.
        :param str summary_pattern: Regex with named groups 'bitrate' and 'psnr'
        :param dict inputs: Custom mapping of Source_Id to raw video file paths
        :param int pool_size: Concurrent child processes allowed
        :param float timeout: Per-run timeout in seconds
        """
        template = os.environ.get(ENV_COMMAND) or command_template or DEFAULT_COMMAND
        self.spec = EncoderAdapterSpec(template, summary_pattern or DEFAULT_SUMMARY_PATTERN, timer or _timer)
        self.inputs = dict(inputs or {})
        if pool_size < 1:
            raise OutOfRangeError('pool_size must be at least 1', module='encoder_backend')
        self.pool_size = pool_size
        self.timeout = timeout
        self._slots = threading.BoundedSemaphore(pool_size)
        self._pattern = re.compile(self.spec.summary_pattern, re.MULTILINE)

    @property
    def max_workers(self) -> int:
        return self.pool_size

    def input_path(self, segment: VideoSegment) -> str:
        path = self.inputs.get(segment.source_id, segment.source_id)
        if not os.path.isfile(path):
            raise AdapterFailure("input video for {} not found: '{}'".format(segment.source_id, path))
        return path

    def command(self, config, segment: VideoSegment, cfg_path: str):
        """Build the argument list for one run"""
        line = self.spec.command_template.format(
            cfg=shlex.quote(cfg_path),
            input=shlex.quote(self.input_path(segment)),
            frames=segment.frame_count,
            skip=segment.start_frame - 1,
            width=segment.width,
            height=segment.height,
            fps=format(segment.framerate, 'g'),
            qp=config.qp
        )
        return shlex.split(line)

    def parse_summary(self, output: str):
        """Pull (psnr_db, bitrate_kbps) out of the encoder output

        :raises AdapterFailure: if the summary line is missing
        """
        match = self._pattern.search(output)
        if not match:
            raise AdapterFailure('no summary line matched in encoder output', output=output)
        return float(match.group('psnr')), float(match.group('bitrate'))

    def measure(self, config, segment: VideoSegment) -> Measurement:
        fd, cfg_path = tempfile.mkstemp(prefix='{}_'.format(config.id), suffix='.cfg')
        try:
            with os.fdopen(fd, 'w', encoding='utf-8') as fp:
                fp.write(emit_cfg_text(config))
            args = self.command(config, segment, cfg_path)
            with self._slots:
                logger.debug('measure(): running {}'.format(' '.join(args)))
                start = self.spec.timer()
                try:
                    completed = subprocess.run(args, stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
                                               universal_newlines=True, timeout=self.timeout)
                except (OSError, subprocess.TimeoutExpired) as e:
                    output = getattr(e, 'output', None) or ''
                    logger.error('measure(): could not run encoder: {}'.format(e.args), exc_info=True)
                    raise AdapterFailure('encoder could not run: {}'.format(e), output=output)
                elapsed = self.spec.timer() - start
            if completed.returncode != 0:
                raise AdapterFailure('encoder exited with status {}'.format(completed.returncode),
                                     output=completed.stdout, returncode=completed.returncode)
            psnr, bitrate = self.parse_summary(completed.stdout)
            try:
                return Measurement(config.id, segment.video_id, psnr, elapsed, bitrate)
            except OutOfRangeError as e:
                raise AdapterFailure('encoder reported unusable values: {}'.format(e.message),
                                     output=completed.stdout)
        finally:
            try:
                os.remove(cfg_path)
            except OSError:
                pass
