"""Relational video database: seven file-backed tables with primary keys,
foreign keys and the fixed DRASTIC query shapes.

Tables and columns:

    videosource     Source_Id*, Resolution, framerate, uncvideoformat
    videoseg        Video_Id*, Resolution, start_frame, end_frame, Source_Id -> videosource
    softwareconfig  SW_Id*, QPvalue, GOPconfig, DBL, SAO
    paretofront     Pareto_Id*, SW_Id -> softwareconfig, Video_Id -> videoseg,
                    Enc_video_id, PSNR, Enctime, Bitrate   (SW_Id, Video_Id unique)
    deviceconfig    Dev_Id*, Displayresolution, Maxplaybackframerate,
                    Maxencodeframerate, Device_type, Networktypes
    network         Networktype*, TheorDL, TheorUL, TypDL, TypUL   (kbps, may be null)
    userconfig      UserDevProf*, Dev_Id -> deviceconfig, Profile, PSNR, Enctime, Bitrate

Each table is stored as <table>.csv with the column names above as its header.
A MANIFEST file lists the table files.  Queries use inclusive bounds.
"""

import csv
import math
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Tuple

from utils import setup_logger, format_real, id_sort_key, parse_rate
from drastic.errors import (DuplicateKey, DanglingReference, SchemaMismatch, NoRows, InvalidRequest)
from drastic.pareto import ObjectivePoint

logger = setup_logger('RVD')

MANIFEST = 'MANIFEST'
REFERENCE_DIR = os.path.join(os.path.dirname(__file__), 'data', 'rvd')
PROFILES = ('low', 'medium', 'high')
NULL = 'null'


@dataclass(frozen=True)
class Column:
    """A typed column

    kind is one of:
        text    non-empty string
        int     integer
        real    finite float
        switch  boolean written on/off
        rate    kbps float or None; input may carry bps/kbps/Mbps/Gbps units
    """
    name: str
    kind: str = 'text'


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: Tuple[Column, ...]
    references: Dict[str, str] = field(default_factory=dict)
    unique: Tuple[Tuple[str, ...], ...] = ()

    @property
    def key(self) -> str:
        return self.columns[0].name

    @property
    def column_names(self):
        return tuple(c.name for c in self.columns)

    @property
    def filename(self) -> str:
        return '{}.csv'.format(self.name)


def _columns(*spec):
    return tuple(Column(*item) if isinstance(item, tuple) else Column(item) for item in spec)


# Listed parents first so files load in dependency order
SCHEMA = OrderedDict((schema.name, schema) for schema in (
    TableSchema('videosource', _columns('Source_Id', 'Resolution', ('framerate', 'real'), 'uncvideoformat')),
    TableSchema('videoseg', _columns('Video_Id', 'Resolution', ('start_frame', 'int'), ('end_frame', 'int'),
                                     'Source_Id'),
                references={'Source_Id': 'videosource'}),
    TableSchema('softwareconfig', _columns('SW_Id', ('QPvalue', 'int'), 'GOPconfig', ('DBL', 'switch'),
                                           ('SAO', 'switch'))),
    TableSchema('paretofront', _columns('Pareto_Id', 'SW_Id', 'Video_Id', 'Enc_video_id', ('PSNR', 'real'),
                                        ('Enctime', 'real'), ('Bitrate', 'real')),
                references={'SW_Id': 'softwareconfig', 'Video_Id': 'videoseg'},
                unique=(('SW_Id', 'Video_Id'),)),
    TableSchema('deviceconfig', _columns('Dev_Id', 'Displayresolution', ('Maxplaybackframerate', 'int'),
                                         ('Maxencodeframerate', 'int'), 'Device_type', 'Networktypes')),
    TableSchema('network', _columns('Networktype', ('TheorDL', 'rate'), ('TheorUL', 'rate'), ('TypDL', 'rate'),
                                    ('TypUL', 'rate'))),
    TableSchema('userconfig', _columns('UserDevProf', 'Dev_Id', 'Profile', ('PSNR', 'real'), ('Enctime', 'real'),
                                       ('Bitrate', 'real')),
                references={'Dev_Id': 'deviceconfig'}),
))


def _coerce(column: Column, value):
    """Convert a raw or typed value to the column's type

    :raises ValueError:
    """
    if column.kind == 'text':
        text = str(value).strip()
        if not text:
            raise ValueError('{} must not be empty'.format(column.name))
        return text
    if column.kind == 'int':
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValueError('{} must be an integer, got {!r}'.format(column.name, value))
        return int(value)
    if column.kind == 'real':
        number = float(value)
        if not math.isfinite(number):
            raise ValueError('{} must be finite, got {!r}'.format(column.name, value))
        return number
    if column.kind == 'switch':
        if isinstance(value, bool):
            return value
        flags = {'on': True, 'off': False, '1': True, '0': False}
        try:
            return flags[str(value).strip().lower()]
        except KeyError:
            raise ValueError('{} must be on or off, got {!r}'.format(column.name, value))
    if column.kind == 'rate':
        if value is None:
            return None
        if isinstance(value, (int, float)):
            return float(value)
        return parse_rate(value)
    raise ValueError('unknown column kind {}'.format(column.kind))


def _render(column: Column, value) -> str:
    """Canonical text of a typed value"""
    if column.kind == 'real':
        return format_real(value)
    if column.kind == 'switch':
        return 'on' if value else 'off'
    if column.kind == 'rate':
        return NULL if value is None else format_real(value)
    return str(value)


def gop_config_tag(config) -> str:
    """GOPconfig column value: the mode tag, plus the refresh type for RA/LD
    ('AI', 'RA8/CRA', 'LD4/IDR')
    """
    if config.refresh is None:
        return config.mode.value
    return '{}/{}'.format(config.mode.value, config.refresh.value)


class RvdTables:
    """The seven tables with their integrity rules

    Writes are serialised by a lock.  Every read returns copies, so a reader
    never sees a half-applied insert.

    Instance attributes:
    -------------------
        _tables dict[str, OrderedDict[str, dict]]
            Rows per table keyed by primary key, in insertion order
        _unique dict[str, set]
            Values of each unique column group already present
    """

    def __init__(self):
        self._lock = threading.RLock()
        self._tables = OrderedDict((name, OrderedDict()) for name in SCHEMA)
        self._unique = {}

    def __eq__(self, other):
        if not isinstance(other, RvdTables):
            return NotImplemented
        return all(self.rows(name) == other.rows(name) for name in SCHEMA)

    @staticmethod
    def schema(table_name) -> TableSchema:
        try:
            return SCHEMA[table_name]
        except KeyError:
            raise SchemaMismatch("unknown table '{}'".format(table_name))

    def _typed(self, schema: TableSchema, record: dict) -> dict:
        missing = [name for name in schema.column_names if name not in record]
        extra = [name for name in record if name not in schema.column_names]
        if missing or extra:
            raise SchemaMismatch('{}: missing columns [{}], unexpected columns [{}]'.format(
                schema.name, ', '.join(missing), ', '.join(extra)))
        typed = OrderedDict()
        for column in schema.columns:
            try:
                typed[column.name] = _coerce(column, record[column.name])
            except (TypeError, ValueError) as e:
                raise SchemaMismatch('{}: {}'.format(schema.name, e))
        if schema.name == 'userconfig':
            if typed['Profile'].lower() not in PROFILES:
                raise SchemaMismatch("userconfig: Profile must be one of {}, got '{}'".format(
                    ', '.join(PROFILES), typed['Profile']))
        return typed

    def insert(self, table_name: str, record: dict) -> str:
        """Validate and add one record

        Nothing changes when any check fails.

        :returns: the record's primary key
        :raises SchemaMismatch: unknown table, wrong columns or bad values
        :raises DuplicateKey: primary key or unique group already present
        :raises DanglingReference: a foreign key does not resolve
        """
        schema = self.schema(table_name)
        typed = self._typed(schema, record)
        key = typed[schema.key]
        with self._lock:
            rows = self._tables[table_name]
            if key in rows:
                raise DuplicateKey("{}: {} '{}' already exists".format(table_name, schema.key, key))
            for group in schema.unique:
                values = tuple(typed[name] for name in group)
                if values in self._unique.get((table_name, group), set()):
                    raise DuplicateKey('{}: ({}) = ({}) already exists'.format(
                        table_name, ', '.join(group), ', '.join(str(v) for v in values)))
            for column_name, parent in schema.references.items():
                if typed[column_name] not in self._tables[parent]:
                    raise DanglingReference("{}: {} '{}' not found in {}".format(
                        table_name, column_name, typed[column_name], parent))
            rows[key] = typed
            for group in schema.unique:
                self._unique.setdefault((table_name, group), set()).add(tuple(typed[name] for name in group))
        return key

    def rows(self, table_name: str):
        """Copies of every record of a table, in insertion order"""
        self.schema(table_name)
        with self._lock:
            return [dict(row) for row in self._tables[table_name].values()]

    def get(self, table_name: str, key):
        self.schema(table_name)
        with self._lock:
            row = self._tables[table_name].get(key)
            return None if row is None else dict(row)

    def count(self, table_name: str) -> int:
        with self._lock:
            return len(self._tables[self.schema(table_name).name])

    def delete_rows(self, table_name: str, column_name: str, value) -> int:
        """Remove every record whose column_name equals value

        Nothing changes when another table still references one of the records.

        :returns: the number of records removed
        :raises DanglingReference: a removed key is referenced elsewhere
        """
        schema = self.schema(table_name)
        with self._lock:
            rows = self._tables[table_name]
            doomed = [key for key, row in rows.items() if row[column_name] == value]
            for child in SCHEMA.values():
                for child_column, parent in child.references.items():
                    if parent != table_name:
                        continue
                    for row in self._tables[child.name].values():
                        if row[child_column] in doomed:
                            raise DanglingReference("{}: {} '{}' is still referenced by {}".format(
                                table_name, schema.key, row[child_column], child.name))
            for key in doomed:
                row = rows.pop(key)
                for group in schema.unique:
                    self._unique.get((table_name, group), set()).discard(tuple(row[name] for name in group))
        return len(doomed)

    def next_id(self, table_name: str, prefix: str, column_name: str = None) -> str:
        """prefix followed by one more than the largest numeric suffix in use"""
        column_name = column_name or self.schema(table_name).key
        with self._lock:
            numbers = [int(row[column_name][len(prefix):]) for row in self._tables[table_name].values()
                       if row[column_name].startswith(prefix) and row[column_name][len(prefix):].isdigit()]
        return '{}{:04d}'.format(prefix, max(numbers, default=0) + 1)

    def pareto_rows(self, video_id: str):
        with self._lock:
            return [dict(row) for row in self._tables['paretofront'].values() if row['Video_Id'] == video_id]

    def pareto_points(self, video_id: str):
        """paretofront rows of a video as ObjectivePoints named by Pareto_Id"""
        return [ObjectivePoint(row['Pareto_Id'], row['PSNR'], row['Enctime'], row['Bitrate'])
                for row in self.pareto_rows(video_id)]

    def query_max_quality(self, video_id: str, r_max_kbps: float, t_max_s: float) -> dict:
        """Row with the highest PSNR where Bitrate <= r_max and Enctime <= t_max

        :raises NoRows:
        """
        rows = [row for row in self.pareto_rows(video_id)
                if row['Bitrate'] <= r_max_kbps and row['Enctime'] <= t_max_s]
        if not rows:
            raise NoRows('no paretofront row for {} with Bitrate <= {} and Enctime <= {}'.format(
                video_id, format_real(r_max_kbps), format_real(t_max_s)))
        return min(rows, key=lambda row: (-row['PSNR'], id_sort_key(row['Pareto_Id'])))

    def query_min_bitrate(self, video_id: str, q_min_db: float, t_max_s: float) -> dict:
        """Row with the lowest Bitrate where PSNR >= q_min and Enctime <= t_max

        :raises NoRows:
        """
        rows = [row for row in self.pareto_rows(video_id)
                if row['PSNR'] >= q_min_db and row['Enctime'] <= t_max_s]
        if not rows:
            raise NoRows('no paretofront row for {} with PSNR >= {} and Enctime <= {}'.format(
                video_id, format_real(q_min_db), format_real(t_max_s)))
        return min(rows, key=lambda row: (row['Bitrate'], id_sort_key(row['Pareto_Id'])))

    def lookup_profile(self, device_id: str, profile: str):
        """Userconfig thresholds of a device profile

        :rtype: (psnr_db, enc_time_s, bitrate_kbps)
        :raises NoRows: with stage 'profile'
        """
        with self._lock:
            for row in self._tables['userconfig'].values():
                if row['Dev_Id'] == device_id and row['Profile'].lower() == str(profile).lower():
                    return row['PSNR'], row['Enctime'], row['Bitrate']
        raise NoRows("no userconfig row for device '{}' profile '{}'".format(device_id, profile), stage='profile')

    def device_constrained_select(self, device_id: str, profile: str, mode, video_id: str) -> dict:
        """Bind a device profile's thresholds, then run the matching query

        max-quality: Bitrate -> r_max, Enctime -> t_max
        min-bitrate: PSNR -> q_min, Enctime -> t_max

        :raises NoRows: stage 'profile' or 'query'
        :raises InvalidRequest: mode is neither max-quality nor min-bitrate
        """
        mode = getattr(mode, 'value', mode)
        if mode not in ('max-quality', 'min-bitrate'):
            raise InvalidRequest("device selection supports max-quality and min-bitrate, not '{}'".format(mode),
                                 module='rvd_store')
        psnr, enctime, bitrate = self.lookup_profile(device_id, profile)
        logger.debug('device_constrained_select(): {} {} -> PSNR {} Enctime {} Bitrate {}'.format(
            device_id, profile, psnr, enctime, bitrate))
        if mode == 'max-quality':
            return self.query_max_quality(video_id, bitrate, enctime)
        return self.query_min_bitrate(video_id, psnr, enctime)


def write_table(tables: RvdTables, table_name: str, fp):
    schema = RvdTables.schema(table_name)
    writer = csv.writer(fp, lineterminator='\n')
    writer.writerow(schema.column_names)
    for row in tables.rows(table_name):
        writer.writerow([_render(column, row[column.name]) for column in schema.columns])


def export_tables(tables: RvdTables, path):
    """Write one canonical file per table and the manifest into directory path"""
    os.makedirs(path, exist_ok=True)
    for name, schema in SCHEMA.items():
        with open(os.path.join(path, schema.filename), 'w', encoding='utf-8', newline='') as fp:
            write_table(tables, name, fp)
    with open(os.path.join(path, MANIFEST), 'w', encoding='utf-8', newline='\n') as fp:
        fp.write(''.join('{}\n'.format(schema.filename) for schema in SCHEMA.values()))
    logger.debug('export_tables(): wrote {} tables to {}'.format(len(SCHEMA), path))


def _read_manifest(path):
    manifest = os.path.join(path, MANIFEST)
    if not os.path.isfile(manifest):
        return None
    with open(manifest, encoding='utf-8') as fp:
        listed = [line.strip() for line in fp if line.strip()]
    expected = [schema.filename for schema in SCHEMA.values()]
    if sorted(listed) != sorted(expected):
        raise SchemaMismatch('{} lists [{}], expected [{}]'.format(
            manifest, ', '.join(listed), ', '.join(expected)))
    return listed


def load_table(tables: RvdTables, table_name: str, filename):
    """Insert every row of one table file

    :raises SchemaMismatch: header differs from the table's columns
    """
    schema = RvdTables.schema(table_name)
    with open(filename, encoding='utf-8', newline='') as fp:
        reader = csv.reader(fp)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != schema.column_names:
            raise SchemaMismatch('{}: expected header {}'.format(filename, ','.join(schema.column_names)))
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(schema.columns):
                raise SchemaMismatch('{} row {}: expected {} columns, got {}'.format(
                    filename, row_number, len(schema.columns), len(row)))
            record = dict(zip(schema.column_names, row))
            for column in schema.columns:
                if column.kind == 'rate' and record[column.name].strip().lower() == NULL:
                    record[column.name] = None
            try:
                tables.insert(table_name, record)
            except (SchemaMismatch, DuplicateKey, DanglingReference) as e:
                e.message = '{} row {}: {}'.format(filename, row_number, e.message)
                e.args = (e.message,)
                raise


def import_tables(path, tables: RvdTables = None) -> RvdTables:
    """Load a table directory written by export_tables

    Tables missing from the directory are left empty only when no manifest is
    present; with a manifest all seven must exist.

    :rtype: RvdTables
    """
    tables = tables if tables is not None else RvdTables()
    listed = _read_manifest(path)
    for name, schema in SCHEMA.items():
        filename = os.path.join(path, schema.filename)
        if not os.path.isfile(filename):
            if listed is not None:
                raise SchemaMismatch('{} is listed in the manifest but missing'.format(schema.filename))
            continue
        load_table(tables, name, filename)
    logger.debug('import_tables(): loaded {}'.format(
        ', '.join('{} {}'.format(name, tables.count(name)) for name in SCHEMA)))
    return tables


def reference_tables() -> RvdTables:
    """Tables holding the shipped source, device, network and user profile rows"""
    return import_tables(REFERENCE_DIR)


def seed_tables(fronts, segments, catalog, tables: RvdTables = None) -> RvdTables:
    """Map Pareto fronts into the database

    softwareconfig gets the whole catalog, videoseg the segments that have a
    front, and paretofront exactly the front members.  Rows already stored for a
    seeded video are dropped first; new ids continue after the largest in use
    (P0001, EV0001 on an empty table).  Starts from reference_tables() unless
    tables is given.

    :param dict fronts: video_id -> ParetoFront
    :param dict segments: video_id -> VideoSegment
    :param dict catalog: config_id -> GopConfiguration
    :raises DanglingReference: a front has no segment, or a member is not in the catalog
    """
    tables = tables if tables is not None else reference_tables()

    for video_id in fronts:
        segment = segments.get(video_id)
        if segment is None:
            raise DanglingReference("no segment '{}' to attach its front to".format(video_id))
        if tables.get('videosource', segment.source_id) is None:
            tables.insert('videosource', {
                'Source_Id': segment.source_id,
                'Resolution': segment.resolution,
                'framerate': segment.framerate,
                'uncvideoformat': 'YUV'
            })
        if tables.get('videoseg', video_id) is None:
            tables.insert('videoseg', {
                'Video_Id': video_id,
                'Resolution': segment.resolution,
                'start_frame': segment.start_frame,
                'end_frame': segment.end_frame,
                'Source_Id': segment.source_id
            })

    for config_id in sorted(catalog, key=id_sort_key):
        if tables.get('softwareconfig', config_id) is None:
            config = catalog[config_id]
            tables.insert('softwareconfig', {
                'SW_Id': config_id,
                'QPvalue': config.qp,
                'GOPconfig': gop_config_tag(config),
                'DBL': config.dbl,
                'SAO': config.sao
            })

    # earlier rows of a seeded video go first
    for video_id in fronts:
        removed = tables.delete_rows('paretofront', 'Video_Id', video_id)
        if removed:
            logger.debug('seed_tables(): replaced {} paretofront rows of {}'.format(removed, video_id))

    for video_id, front in fronts.items():
        for point in front.members:
            tables.insert('paretofront', {
                'Pareto_Id': tables.next_id('paretofront', 'P'),
                'SW_Id': point.config_id,
                'Video_Id': video_id,
                'Enc_video_id': tables.next_id('paretofront', 'EV', 'Enc_video_id'),
                'PSNR': point.q,
                'Enctime': point.t,
                'Bitrate': point.r
            })
    logger.debug('seed_tables(): {} paretofront rows'.format(tables.count('paretofront')))
    return tables


def format_record(record: dict, table_name: str = 'paretofront') -> str:
    """One machine-readable line: the record's values in column order"""
    schema = RvdTables.schema(table_name)
    return ','.join(_render(column, record[column.name]) for column in schema.columns)
