import io
import json
from importlib import resources

import numpy as np
import pytest

from mrfnhpp.grid import bin_points, build_grid
from mrfnhpp.ingest import (DEFAULT_NX, DEFAULT_NY, DEFAULT_REGION, ShotParseError, load_mapping,
                            parse_shot_csv, read_pattern_file, shot_summary, to_study_pattern,
                            write_pattern_file)

HEADER = "GAME_DATE,OPPONENT,PERIOD,MINUTES_REMAINING,SECONDS_REMAINING,SHOT_MADE_FLAG,ACTION_TYPE,SHOT_TYPE,SHOT_DISTANCE,LOC_X,LOC_Y\n"


def _fixture():
    return resources.files("mrfnhpp") / "data" / "synthetic_shots.csv"


def test_empty_body():
    records, errors = parse_shot_csv(io.StringIO(HEADER))
    assert records == [] and errors == []


def test_empty_file_rejected():
    with pytest.raises(ValueError, match="header"):
        parse_shot_csv(io.StringIO(""))


def test_rim_origin_row():
    records, _ = parse_shot_csv(io.StringIO("x,y\n0,0\n"))
    assert (records[0].x, records[0].y) == (0, 0)
    pat, dropped = to_study_pattern(records)
    assert dropped == 0
    g = build_grid(DEFAULT_REGION, DEFAULT_NX, DEFAULT_NY)
    # the rim sits in the middle column, five boxes up from the baseline
    assert bin_points(pat, g).box_of_point.tolist() == [5 * 50 + 25]


def test_fixture_has_753_shots():
    with _fixture().open() as fh:
        records, errors = parse_shot_csv(fh)
    assert len(records) == 753 and not errors
    summary = shot_summary(records)
    assert summary["shot_count"] == 753
    assert sum(summary["period_pct"]) == pytest.approx(100.0, abs=0.3)
    twos = sum(r.shot_type == 2 for r in records)
    assert summary["two_point_pct"] == round(100 * twos / 753, 1)


def test_fixture_region_conservation():
    with _fixture().open() as fh:
        records, _ = parse_shot_csv(fh)
    pat, dropped = to_study_pattern(records)
    assert pat.N + dropped == len(records)
    g = build_grid(DEFAULT_REGION, DEFAULT_NX, DEFAULT_NY)
    assert g.n == 1750 and g.box_area == pytest.approx(100.0)
    assert bin_points(pat, g).N == pat.N


def test_region_boundaries():
    records, _ = parse_shot_csv(io.StringIO("x,y\n0,350\n-250,-50\n250,300\n251,0\n"))
    pat, dropped = to_study_pattern(records)
    assert dropped == 2
    assert pat.points.tolist() == [[-250.0, -50.0], [250.0, 300.0]]


def test_strict_reports_line_number():
    text = HEADER + "2017-10-01,BOS,1,10,28,0,Jump Shot,3PT Field Goal,27,-245,111\n" \
                    "2017-10-01,BOS,9,10,28,0,Jump Shot,3PT Field Goal,27,-245,111\n"
    with pytest.raises(ShotParseError) as err:
        parse_shot_csv(io.StringIO(text))
    assert err.value.line == 3


def test_lenient_skips_bad_rows():
    text = "x,y,made\n1,2,1\nabc,3,0\n4,5,7\n6,7,0\n"
    records, errors = parse_shot_csv(io.StringIO(text), strict=False)
    assert [(r.x, r.y) for r in records] == [(1, 2), (6, 7)]
    assert [line for line, _ in errors] == [3, 4]


def test_missing_required_column():
    with pytest.raises(ValueError, match="missing"):
        parse_shot_csv(io.StringIO("x,z\n1,2\n"))


def test_mapping_file(tmp_path):
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps({"x": "horiz", "y": "depth", "period": "qtr"}))
    mapping = load_mapping(mp)
    records, _ = parse_shot_csv(io.StringIO("horiz,depth,qtr\n-10,40,2\n"), mapping)
    assert records[0].x == -10 and records[0].y == 40 and records[0].period == 2


def test_mapping_rejects_unknown_field(tmp_path):
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps({"colour": "c"}))
    with pytest.raises(ValueError):
        load_mapping(mp)


def test_pattern_file_roundtrip(tmp_path):
    records, _ = parse_shot_csv(io.StringIO("x,y\n1,2\n-30,250\n"))
    pat, dropped = to_study_pattern(records)
    path = tmp_path / "p.json"
    write_pattern_file(path, pat, (DEFAULT_NX, DEFAULT_NY), dropped, source="unit")
    back, shape, raw = read_pattern_file(path)
    assert np.array_equal(back.points, pat.points)
    assert shape == (50, 35) and raw["source"] == "unit" and raw["dropped"] == 0
