"""Deterministic synthetic encoder model.

Stands in for encoder runs when no encoder or source clip is available.  The
shape follows ordinary codec behaviour: bitrate halves every 6 QP steps, PSNR
falls linearly with QP and encoding time grows with the amount of inter
prediction.  Constants are anchored on QP 22 so that the outputs land near the
measured QP 22 rows of the reference tables.

    bitrate = B0 * 2^((22 - QP) / 6) * mode * filters * refresh * segment
    psnr    = P0 - s * (QP - 22) + mode + filters + refresh + segment
    time    = T(family, dbl, sao) * mode * refresh * 2^(-(QP - 22) / 15) * segment

Loop filter cost does not add up across the two filters in measured runs, so
the time anchor is kept per (family, dbl, sao) rather than as separate terms.
"""

import hashlib

from utils import setup_logger
from drastic.backends import EncoderBackend, Measurement, VideoSegment

logger = setup_logger('Synthetic')

QP_ANCHOR = 22


class Synthetic(EncoderBackend):
    """Synthetic measurement model

    Class attributes:
    ----------------
        _bitrate_factors dict[str, float]
            Bitrate multiplier per GOP mode, relative to RA8
        _psnr_offsets dict[str, float]
            PSNR offset in dB per GOP mode, relative to AI
        _anchor_times dict[str, dict[tuple[bool, bool], float]]
            Encoding time in seconds at QP 22 per mode family and (dbl, sao),
            CRA refresh for the inter families
        _mode_time_scale dict[str, float]
            Encoding time of a GOP mode relative to its family anchor
        _idr_time_factors dict[str, float]
            Extra encoding time of IDR refresh per mode family
    """
    name = 'synthetic'

    base_bitrate_kbps = 1100.0
    base_psnr_db = 43.0
    psnr_slope_db = 0.6
    qp_time_halving = 15.0

    dbl_off_bitrate = 1.01
    sao_off_bitrate = 0.998
    idr_bitrate = 1.02
    dbl_off_psnr = -0.06
    sao_off_psnr = -0.03
    idr_psnr = -0.08

    _bitrate_factors = {
        'AI': 4.4,
        'RA8': 1.0,
        'RA4': 1.015,
        'LD4': 1.04,
        'LD6': 1.02
    }

    _psnr_offsets = {
        'AI': 0.0,
        'RA8': -1.7,
        'RA4': -1.6,
        'LD4': -1.95,
        'LD6': -2.0
    }

    _anchor_times = {
        'AI': {(True, True): 104.4, (True, False): 160.0, (False, True): 106.6, (False, False): 109.7},
        'RA': {(True, True): 526.2, (True, False): 479.4, (False, True): 430.7, (False, False): 327.6},
        'LD': {(True, True): 922.2, (True, False): 827.4, (False, True): 919.3, (False, False): 769.8}
    }

    _mode_time_scale = {
        'AI': 1.0,
        'RA8': 1.0,
        'RA4': 0.833,
        'LD4': 1.0,
        'LD6': 1.17
    }

    _idr_time_factors = {
        'RA': 1.062,
        'LD': 1.313
    }
    def __init__(self, segment_spread: float = 0.04, psnr_spread_db: float = 0.25):
        """Constructor

        :param float segment_spread: Half-width of the per-segment multiplier
            applied to bitrate and time (0.04 gives [0.96, 1.04])
        :param float psnr_spread_db: Half-width of the per-segment PSNR offset
        """
        self.segment_spread = segment_spread
        self.psnr_spread_db = psnr_spread_db

    def _segment_terms(self, video_id: str):
        """Per-segment (multiplier, psnr offset), fixed by a hash of video_id"""
        digest = hashlib.sha256(video_id.encode('utf-8')).digest()
        u = int.from_bytes(digest[:8], 'big') / 2 ** 64
        v = int.from_bytes(digest[8:16], 'big') / 2 ** 64
        multiplier = 1.0 - self.segment_spread + 2 * self.segment_spread * u
        offset = -self.psnr_spread_db + 2 * self.psnr_spread_db * v
        return multiplier, offset

    def measure(self, config, segment: VideoSegment) -> Measurement:
        mode = config.mode.value
        family = config.mode.family
        idr = config.refresh is not None and config.refresh.value == 'IDR'
        multiplier, offset = self._segment_terms(segment.video_id)
        delta_qp = config.qp - QP_ANCHOR

        bitrate = self.base_bitrate_kbps * 2 ** (-delta_qp / 6) * self._bitrate_factors[mode]
        if not config.dbl:
            bitrate *= self.dbl_off_bitrate
        if not config.sao:
            bitrate *= self.sao_off_bitrate
        if idr and family == 'RA':
            bitrate *= self.idr_bitrate
        bitrate *= multiplier

        psnr = self.base_psnr_db - self.psnr_slope_db * delta_qp + self._psnr_offsets[mode] + offset
        if not config.dbl:
            psnr += self.dbl_off_psnr
        if not config.sao:
            psnr += self.sao_off_psnr
        if idr and family == 'RA':
            psnr += self.idr_psnr

        time_s = self._anchor_times[family][(config.dbl, config.sao)] * self._mode_time_scale[mode]
        if idr:
            time_s *= self._idr_time_factors[family]
        time_s *= 2 ** (-delta_qp / self.qp_time_halving) * multiplier

        return Measurement(config.id, segment.video_id, psnr, time_s, bitrate)
