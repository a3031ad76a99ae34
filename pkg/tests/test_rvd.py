import filecmp
import random
import threading

import pytest

from drastic.configspace import catalog, enumerate_extended, lookup
from drastic.errors import DuplicateKey, DanglingReference, SchemaMismatch, NoRows, Infeasible, InvalidRequest
from drastic.rvd import (SCHEMA, MANIFEST, RvdTables, import_tables, export_tables, reference_tables, seed_tables,
                         gop_config_tag, format_record)
from drastic.pareto import pareto_front
from drastic.solver import Mode, ModeRequest, solve


def _paretofront(pareto_id, sw_id, video_id='V001', psnr=43.0, enctime=107.0, bitrate=4867.0):
    return {'Pareto_Id': pareto_id, 'SW_Id': sw_id, 'Video_Id': video_id, 'Enc_video_id': 'E' + pareto_id,
            'PSNR': psnr, 'Enctime': enctime, 'Bitrate': bitrate}


@pytest.fixture
def tables(segments):
    tables = seed_tables({}, segments, catalog())
    tables.insert('videoseg', {'Video_Id': 'V001', 'Resolution': '416x240', 'start_frame': 1, 'end_frame': 100,
                               'Source_Id': 'SV001'})
    return tables


def test_reference_rows():
    tables = reference_tables()
    assert tables.count('deviceconfig') == 2
    assert tables.count('userconfig') == 6
    network = tables.get('network', '4G LTE')
    assert (network['TheorDL'], network['TheorUL'], network['TypDL']) == (1000000.0, 100000.0, None)
    assert tables.get('network', '3G')['TheorUL'] == 2000.0


def test_insert_paretofront_row(tables):
    assert tables.insert('paretofront', _paretofront('P001', 'S1')) == 'P001'
    assert tables.get('paretofront', 'P001')['Bitrate'] == 4867.0


def test_insert_rejections_are_atomic(tables):
    tables.insert('paretofront', _paretofront('P001', 'S1'))
    before = tables.rows('paretofront')
    with pytest.raises(DanglingReference):
        tables.insert('paretofront', _paretofront('P002', 'S999'))
    with pytest.raises(DanglingReference):
        tables.insert('paretofront', _paretofront('P002', 'S2', video_id='V404'))
    with pytest.raises(DuplicateKey):
        tables.insert('paretofront', _paretofront('P001', 'S2'))
    with pytest.raises(DuplicateKey):
        tables.insert('paretofront', _paretofront('P002', 'S1'))
    with pytest.raises(SchemaMismatch):
        tables.insert('paretofront', {'Pareto_Id': 'P003'})
    with pytest.raises(SchemaMismatch):
        tables.insert('paretofront', _paretofront('P003', 'S2', psnr='high'))
    with pytest.raises(SchemaMismatch):
        tables.insert('nosuchtable', {})
    with pytest.raises(SchemaMismatch):
        tables.insert('userconfig', {'UserDevProf': '9-9-9', 'Dev_Id': 'Nexus 5', 'Profile': 'ultra', 'PSNR': 1,
                                     'Enctime': 1, 'Bitrate': 1})
    assert tables.rows('paretofront') == before
    # the rejected (S1, V001) pair did not leak into the unique index
    tables.insert('paretofront', _paretofront('P002', 'S2'))


def test_readers_get_copies(tables):
    tables.insert('paretofront', _paretofront('P001', 'S1'))
    row = tables.get('paretofront', 'P001')
    row['PSNR'] = 0.0
    tables.rows('paretofront')[0]['PSNR'] = 0.0
    assert tables.get('paretofront', 'P001')['PSNR'] == 43.0


def test_concurrent_inserts_keep_keys_unique(tables):
    ids = ['S{}'.format(n) for n in range(1, 101)]
    errors = []

    def worker(offset):
        for i, sw_id in enumerate(ids):
            try:
                tables.insert('paretofront', _paretofront('P{:04d}'.format(i + 1), sw_id))
            except DuplicateKey:
                errors.append(offset)

    threads = [threading.Thread(target=worker, args=(n,)) for n in range(4)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert tables.count('paretofront') == 100
    assert len(errors) == 300


def test_gop_config_tag():
    assert gop_config_tag(lookup('S1')) == 'AI'
    assert gop_config_tag(lookup('S26')) == 'RA8/CRA'
    assert gop_config_tag(lookup('S73')) == 'LD4/IDR'
    assert len({gop_config_tag(c) + str(c.qp) + str(c.dbl) + str(c.sao) for c in enumerate_extended()}) == 216


def test_seeding_maps_front_members(seeded_tables, synthetic_fronts):
    for video_id, front in synthetic_fronts.items():
        rows = seeded_tables.pareto_rows(video_id)
        assert [row['SW_Id'] for row in rows] == front.ids
        assert [(row['PSNR'], row['Enctime'], row['Bitrate']) for row in rows] == [p.vector for p in front.members]
    assert seeded_tables.count('softwareconfig') == 216
    assert seeded_tables.count('videoseg') == 2
    first = seeded_tables.rows('paretofront')[0]
    assert (first['Pareto_Id'], first['Enc_video_id']) == ('P0001', 'EV0001')


def test_seeding_needs_segments(synthetic_fronts):
    with pytest.raises(DanglingReference):
        seed_tables(synthetic_fronts, {}, catalog())


def test_round_trip_is_byte_identical(seeded_tables, tmp_path):
    first, second = tmp_path / 'a', tmp_path / 'b'
    export_tables(seeded_tables, first)
    loaded = import_tables(first)
    assert loaded == seeded_tables
    export_tables(loaded, second)
    names = [schema.filename for schema in SCHEMA.values()] + [MANIFEST]
    match, mismatch, errors = filecmp.cmpfiles(first, second, names, shallow=False)
    assert (mismatch, errors) == ([], [])
    assert (first / 'network.csv').read_text(encoding='utf-8').splitlines()[4] == '4G LTE,1000000,100000,null,null'


def test_import_rejects_bad_files(seeded_tables, tmp_path):
    export_tables(seeded_tables, tmp_path)
    (tmp_path / 'videoseg.csv').write_text('Video_Id,Resolution\nV001,416x240\n', encoding='utf-8')
    with pytest.raises(SchemaMismatch):
        import_tables(tmp_path)
    (tmp_path / 'videoseg.csv').unlink()
    with pytest.raises(SchemaMismatch):
        import_tables(tmp_path)


def test_import_rejects_dangling_rows(seeded_tables, tmp_path):
    export_tables(seeded_tables, tmp_path)
    path = tmp_path / 'paretofront.csv'
    path.write_text(path.read_text(encoding='utf-8') + 'P9999,S999,V001,EV9999,40,100,500\n', encoding='utf-8')
    with pytest.raises(DanglingReference) as e:
        import_tables(tmp_path)
    assert 'S999' in e.value.message


def test_lookup_profile():
    tables = reference_tables()
    assert tables.lookup_profile('Nexus 5', 'high') == (40.0, 232.65, 450.0)
    assert tables.lookup_profile('Nexus 5', 'low') == (30.0, 60.56, 100.0)
    assert tables.lookup_profile('Nexus 5', 'HIGH') == (40.0, 232.65, 450.0)
    with pytest.raises(NoRows) as e:
        tables.lookup_profile('Pixel 9', 'high')
    assert e.value.stage == 'profile'


def test_queries(tables):
    tables.insert('paretofront', _paretofront('P0001', 'S1', psnr=43.0, enctime=107.0, bitrate=4867.0))
    tables.insert('paretofront', _paretofront('P0002', 'S32', psnr=41.35, enctime=332.2, bitrate=1085.0))
    tables.insert('paretofront', _paretofront('P0003', 'S74', psnr=38.0, enctime=302.0, bitrate=548.0))
    tables.insert('paretofront', _paretofront('P0004', 'S75', psnr=38.0, enctime=306.0, bitrate=315.0))
    assert tables.query_max_quality('V001', 600, 500)['Pareto_Id'] == 'P0003'
    assert tables.query_max_quality('V001', 548, 302)['Pareto_Id'] == 'P0003'
    assert tables.query_min_bitrate('V001', 40, 800)['Pareto_Id'] == 'P0002'
    assert tables.query_min_bitrate('V001', 38, 400)['Bitrate'] == 315.0
    with pytest.raises(NoRows) as e:
        tables.query_max_quality('V001', 100, 1000)
    assert e.value.stage == 'query'
    with pytest.raises(NoRows):
        tables.query_min_bitrate('V001', 50, 1000)
    assert format_record(tables.get('paretofront', 'P0002')) == 'P0002,S32,V001,EP0002,41.35,332.2,1085'


def test_device_select_matches_manual_composition(seeded_tables):
    psnr, enctime, bitrate = seeded_tables.lookup_profile('Nexus 5', 'high')
    assert (enctime, bitrate) == (232.65, 450.0)
    manual = seeded_tables.query_max_quality('V001', bitrate, enctime)
    assert seeded_tables.device_constrained_select('Nexus 5', 'high', 'max-quality', 'V001') == manual
    manual = seeded_tables.query_min_bitrate('V002', psnr, enctime)
    assert seeded_tables.device_constrained_select('Nexus 5', 'high', Mode.MIN_BITRATE, 'V002') == manual


def test_device_select_stages(seeded_tables):
    with pytest.raises(NoRows) as e:
        seeded_tables.device_constrained_select('Pixel 9', 'high', 'max-quality', 'V001')
    assert e.value.stage == 'profile'
    with pytest.raises(NoRows) as e:
        seeded_tables.device_constrained_select('Nexus 5', 'low', 'max-quality', 'V404')
    assert e.value.stage == 'query'
    with pytest.raises(InvalidRequest):
        seeded_tables.device_constrained_select('Nexus 5', 'low', 'min-time', 'V001')


def test_profile_bounds_admitting_one_row(tables):
    tables.insert('paretofront', _paretofront('P0001', 'S1', psnr=43.0, enctime=300.0, bitrate=4000.0))
    tables.insert('paretofront', _paretofront('P0002', 'S2', psnr=39.0, enctime=200.0, bitrate=400.0))
    selected = tables.device_constrained_select('Nexus 5', 'high', 'max-quality', 'V001')
    assert selected['Pareto_Id'] == 'P0002'


def test_queries_agree_with_solver(tables):
    rng = random.Random(314)
    sw_ids = rng.sample(sorted(catalog()), 150)
    for n, sw_id in enumerate(sw_ids, start=1):
        tables.insert('paretofront', _paretofront(
            'P{:04d}'.format(n), sw_id, psnr=round(rng.uniform(30, 44), 2), enctime=round(rng.uniform(50, 1200), 1),
            bitrate=float(rng.randrange(100, 5000, 5))))
    assert tables.count('paretofront') >= 100
    points = tables.pareto_points('V001')
    empty = {'max': 0, 'min': 0}

    for _ in range(50):
        r_max, t_max = rng.uniform(50, 5100), rng.uniform(40, 1300)
        try:
            row = tables.query_max_quality('V001', r_max, t_max)
        except NoRows:
            empty['max'] += 1
            with pytest.raises(Infeasible):
                solve(ModeRequest(Mode.MAX_QUALITY, t_max=t_max, r_max=r_max), points, inclusive=True)
        else:
            selection = solve(ModeRequest(Mode.MAX_QUALITY, t_max=t_max, r_max=r_max), points, inclusive=True)
            assert selection.objective_value == row['PSNR']

        q_min, t_max = rng.uniform(29, 45), rng.uniform(40, 1300)
        try:
            row = tables.query_min_bitrate('V001', q_min, t_max)
        except NoRows:
            empty['min'] += 1
            with pytest.raises(Infeasible):
                solve(ModeRequest(Mode.MIN_BITRATE, q_min=q_min, t_max=t_max), points, inclusive=True)
        else:
            selection = solve(ModeRequest(Mode.MIN_BITRATE, q_min=q_min, t_max=t_max), points, inclusive=True)
            assert selection.objective_value == row['Bitrate']
    assert empty['max'] < 50 and empty['min'] < 50


def test_empty_tables_compare_equal():
    assert RvdTables() == RvdTables()
    assert RvdTables() != reference_tables()


def test_next_id_follows_largest_suffix(tables):
    assert tables.next_id('paretofront', 'P') == 'P0001'
    tables.insert('paretofront', _paretofront('P0002', 'S1'))
    assert tables.next_id('paretofront', 'P') == 'P0003'
    tables.insert('paretofront', _paretofront('P0010', 'S2'))
    tables.insert('paretofront', _paretofront('PX7', 'S3'))
    assert tables.next_id('paretofront', 'P') == 'P0011'
    assert tables.next_id('paretofront', 'EP', 'Enc_video_id') == 'EP0011'
    assert tables.next_id('paretofront', 'EV', 'Enc_video_id') == 'EV0001'
    tables.insert('paretofront', _paretofront(tables.next_id('paretofront', 'P'), 'S4'))
    assert tables.count('paretofront') == 4


def test_seeding_twice_replaces_front_rows(seeded_tables, synthetic_fronts, segments):
    once = seed_tables(synthetic_fronts, segments, catalog())
    again = seed_tables(synthetic_fronts, segments, catalog(), seeded_tables)
    assert again == once
    assert again.count('paretofront') == sum(len(front) for front in synthetic_fronts.values())

    shrunk = pareto_front(synthetic_fronts['V001'].members[:3])
    seed_tables({'V001': shrunk}, segments, catalog(), again)
    assert [row['SW_Id'] for row in again.pareto_rows('V001')] == shrunk.ids
    assert again.pareto_rows('V002') == once.pareto_rows('V002')
    ids = [row['Pareto_Id'] for row in again.rows('paretofront')]
    assert len(set(ids)) == len(ids)


def test_delete_rows(tables):
    tables.insert('videoseg', {'Video_Id': 'V002', 'Resolution': '416x240', 'start_frame': 101, 'end_frame': 200,
                               'Source_Id': 'SV001'})
    tables.insert('paretofront', _paretofront('P0001', 'S1'))
    tables.insert('paretofront', _paretofront('P0002', 'S2', video_id='V002'))
    with pytest.raises(DanglingReference):
        tables.delete_rows('videoseg', 'Video_Id', 'V001')
    assert tables.count('videoseg') == 2
    assert tables.delete_rows('paretofront', 'Video_Id', 'V001') == 1
    assert tables.delete_rows('paretofront', 'Video_Id', 'V001') == 0
    # the (S1, V001) pair may come back once its row is gone
    tables.insert('paretofront', _paretofront('P0003', 'S1'))
    assert [row['Pareto_Id'] for row in tables.rows('paretofront')] == ['P0002', 'P0003']
