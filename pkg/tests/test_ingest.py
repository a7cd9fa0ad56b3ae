"""Parser filters, bookkeeping identity, dedup, SVI join, round-trips."""

import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sitecover.geo import Coordinate
from sitecover.ingest import (
    IngestError,
    dedupe_coordinates,
    join_svi,
    parse_facilities,
    parse_state_sites,
    parse_tracts,
    write_facilities,
    write_svi,
    write_tracts,
)
from sitecover.model import Facility, FacilitySet, GeocodeQuality, Tract

TRACT_HEADER = (
    "tract_id,state,lat,lon,adults_total,households_total,hh_lt_35k,hh_gt_100k,"
    "pop_total,pop_white,pop_black,pop_aapi,pop_other,pop_hispanic,pop_non_hispanic"
)
FAC_HEADER = "facility_id,chain,state,lat,lon,role,geocode_quality"


def tract_file(*rows):
    return io.StringIO("\n".join([TRACT_HEADER, *rows]) + "\n")

def fac_file(*rows, header=FAC_HEADER):
    return io.StringIO("\n".join([header, *rows]) + "\n")


GOOD_ROW = "20001000100,KS,39.0,-98.0,200,100,40,30,400,200,100,60,40,80,320"


def test_parse_tracts_accepts_valid_rows():
    tracts, report = parse_tracts(tract_file(
        GOOD_ROW,
        "20001000200,KS,39.0,-97.9,100,50,30,10,250,100,80,40,30,50,200",
        "01001000100,AL,33.0,-87.0,300,150,70,40,500,250,150,50,50,100,400",
    ))
    assert len(tracts) == 3
    assert report.records_read == 3
    assert report.records_accepted == 3
    assert report.records_rejected_by_reason == {}
    t = tracts[0]
    assert t.id == "20001000100" and t.state == "KS"
    assert t.centroid == Coordinate(39.0, -98.0)
    assert t.counts.pop_non_hispanic == 320
    assert t.svi is None


def test_parse_tracts_rejects_race_sum_breach():
    bad = "20001000100,KS,39.0,-98.0,200,100,40,30,400,201,100,60,40,80,320"
    tracts, report = parse_tracts(tract_file(bad))
    assert tracts == []
    assert report.records_rejected_by_reason == {"race-sum": 1}


def test_parse_tracts_header_only():
    tracts, report = parse_tracts(tract_file())
    assert tracts == [] and report.records_read == 0


def test_parse_tracts_missing_header_is_fatal():
    with pytest.raises(IngestError):
        parse_tracts(io.StringIO(""))
    with pytest.raises(IngestError):
        parse_tracts(io.StringIO("id,name\n1,x\n"))


def test_parse_tracts_rejection_reasons():
    rows = [
        "x1,KS,39.0",                                                        # malformed: short row
        "x2,KS,39.0,-98.0,a,100,40,30,400,200,100,60,40,80,320",             # malformed: bad int
        "x3,ZZ,39.0,-98.0,200,100,40,30,400,200,100,60,40,80,320",           # state-unknown
        "x4,KS,99.0,-98.0,200,100,40,30,400,200,100,60,40,80,320",           # coordinate-range
        "x5,KS,39.0,-98.0,-1,100,40,30,400,200,100,60,40,80,320",            # negative-count
        "x6,KS,39.0,-98.0,200,100,40,30,400,200,100,60,40,90,320",           # ethnicity-sum
        "x7,KS,39.0,-98.0,200,100,80,30,400,200,100,60,40,80,320",           # income-sum
        GOOD_ROW,
        GOOD_ROW,                                                            # duplicate-id
    ]
    tracts, report = parse_tracts(tract_file(*rows))
    assert [t.id for t in tracts] == ["20001000100"]
    assert report.records_read == 9
    assert report.records_accepted == 1
    assert report.records_rejected_by_reason == {
        "malformed": 2,
        "state-unknown": 1,
        "coordinate-range": 1,
        "negative-count": 1,
        "ethnicity-sum": 1,
        "income-sum": 1,
        "duplicate-id": 1,
    }


def test_parse_facilities_filters():
    fset, report = parse_facilities(fac_file(
        "F1,acme,KS,39.0,-98.0,retail,success",
        "F2,acme,KS,39.1,-98.0,headquarters,success",
        "F3,acme,KS,39.2,-98.0,distribution_center,success",
        "F4,acme,KS,39.3,-98.0,retail,failed",
        "F5,acme,KS,39.4,-98.0,retail,doubt",
        "F6,other,KS,39.5,-98.0,retail,success",
        "F7,acme,KS,39.6,-98.0,retail,authoritative",
    ), chain="acme")
    assert [f.id for f in fset.facilities] == ["F1", "F5", "F7"]
    assert fset.name == "acme"
    assert report.records_read == 7
    assert report.records_accepted == 3
    assert report.records_rejected_by_reason == {
        "non-retail": 2,
        "geocode-failed": 1,
        "chain-mismatch": 1,
    }
    assert report.doubt_accepted == 1
    assert fset.facilities[1].geocode_quality is GeocodeQuality.DOUBT


def test_parse_facilities_chain_match_is_case_insensitive():
    fset, _ = parse_facilities(fac_file("F1,  AcMe ,KS,39.0,-98.0,retail,success"), chain="acme")
    assert len(fset) == 1 and fset.facilities[0].chain == "acme"


def test_parse_facilities_state_override():
    fset, _ = parse_facilities(
        fac_file("F1,acme,KS,39.0,-98.0,retail,success"), chain="acme", state_override="ND"
    )
    assert fset.facilities[0].state == "ND"


def test_parse_facilities_optional_tract_column():
    fset, report = parse_facilities(fac_file(
        "F1,acme,KS,39.0,-98.0,retail,success,20001000100",
        "F2,acme,KS,39.1,-98.0,retail,success,",
        header=FAC_HEADER + ",tract_id",
    ), chain="acme")
    assert report.records_accepted == 2
    assert fset.facilities[0].tract_id == "20001000100"
    assert fset.facilities[1].tract_id is None


def test_parse_state_sites():
    fset, report = parse_state_sites(io.StringIO(
        "site_id,state,lat,lon,geocode_quality\n"
        "S1,CO,39.7,-105.0,success\n"
        "S2,CO,39.8,-105.1,failed\n"
        "S3,CO,39.9,-105.2,doubt\n"
    ), state="co")
    assert fset.name == "state:CO"
    assert [f.id for f in fset.facilities] == ["S1", "S3"]
    assert all(f.chain == "state:CO" for f in fset.facilities)
    assert report.records_rejected_by_reason == {"geocode-failed": 1}
    assert report.doubt_accepted == 1


def test_dedupe_keeps_smallest_id():
    f = lambda fid, lat, lon: Facility(id=fid, chain="c", state="KS", coordinate=Coordinate(lat, lon))
    fset = FacilitySet(name="c", facilities=(
        f("F2", 40.0, -75.0), f("F1", 40.0, -75.0), f("F3", 40.0, -75.000001),
    ))
    deduped = dedupe_coordinates(fset)
    assert [x.id for x in deduped.facilities] == ["F1", "F3"]
    again = dedupe_coordinates(deduped)
    assert again == deduped
    reversed_in = FacilitySet(name="c", facilities=tuple(reversed(fset.facilities)))
    assert dedupe_coordinates(reversed_in) == deduped
    assert dedupe_coordinates(FacilitySet(name="c", facilities=())).facilities == ()


def test_join_svi():
    tracts, _ = parse_tracts(tract_file(
        GOOD_ROW,
        "20001000200,KS,39.0,-97.9,100,50,30,10,250,100,80,40,30,50,200",
        "01001000100,AL,33.0,-87.0,300,150,70,40,500,250,150,50,50,100,400",
    ))
    joined, report = join_svi(tracts, io.StringIO(
        "tract_id,rpl_themes\n"
        "20001000100,0.95\n"
        "20001000200,-999\n"
        "99999999999,0.5\n"
        "01001000100,1.5\n"
    ))
    by_id = {t.id: t for t in joined}
    assert by_id["20001000100"].svi.value == 0.95
    assert by_id["20001000200"].svi is None
    assert by_id["01001000100"].svi is None
    assert report.records_read == 4
    assert report.records_accepted == 3
    assert report.records_rejected_by_reason == {"svi-range": 1}
    assert report.svi_matched == 1
    assert [t.id for t in joined] == [t.id for t in tracts]


def test_join_svi_boundary_values_match():
    tracts, _ = parse_tracts(tract_file(GOOD_ROW))
    joined, report = join_svi(tracts, io.StringIO("tract_id,rpl_themes\n20001000100,0.0\n"))
    assert joined[0].svi.value == 0.0 and report.svi_matched == 1
    joined, _ = join_svi(tracts, io.StringIO("tract_id,rpl_themes\n20001000100,1.0\n"))
    assert joined[0].svi.value == 1.0


def test_round_trip_tracts(tmp_path):
    tracts, _ = parse_tracts(tract_file(
        GOOD_ROW,
        "38001000100,ND,46.8,-100.78,120,60,25,15,260,130,60,0,70,40,220",
    ))
    path = tmp_path / "tracts.csv"
    write_tracts(tracts, path)
    reparsed, report = parse_tracts(path)
    assert reparsed == tracts
    assert report.records_accepted == 2


def test_round_trip_facilities(tmp_path):
    fset, _ = parse_facilities(fac_file(
        "F1,acme,KS,39.000001,-98.123456789,retail,success",
        "F5,acme,KS,39.4,-98.0,retail,doubt",
    ), chain="acme")
    path = tmp_path / "fac.csv"
    write_facilities(fset.facilities, path)
    reparsed, _ = parse_facilities(path, chain="acme")
    assert reparsed == fset


def test_round_trip_facilities_with_tract_ids(tmp_path):
    fset, _ = parse_facilities(fac_file(
        "F1,acme,KS,39.0,-98.0,retail,success,20001000100",
        "F2,acme,KS,39.1,-98.0,retail,success,",
        header=FAC_HEADER + ",tract_id",
    ), chain="acme")
    path = tmp_path / "fac.csv"
    write_facilities(fset.facilities, path)
    reparsed, _ = parse_facilities(path, chain="acme")
    assert reparsed == fset


def test_round_trip_svi(tmp_path):
    tracts, _ = parse_tracts(tract_file(GOOD_ROW))
    joined, _ = join_svi(tracts, io.StringIO("tract_id,rpl_themes\n20001000100,0.31\n"))
    path = tmp_path / "svi.csv"
    write_svi(joined, path)
    rejoined, report = join_svi(tracts, path)
    assert rejoined == joined and report.svi_matched == 1


states = st.sampled_from(["KS", "AL", "ND", "CA", "NY"])
small = st.integers(min_value=0, max_value=10_000)
lat_st = st.floats(min_value=-89.9, max_value=89.9, allow_nan=False)
lon_st = st.floats(min_value=-179.9, max_value=179.9, allow_nan=False)


@st.composite
def consistent_tract_rows(draw):
    n = draw(st.integers(min_value=0, max_value=8))
    rows = []
    for i in range(n):
        white, black, aapi, other = (draw(small) for _ in range(4))
        pop = white + black + aapi + other
        hisp = draw(st.integers(min_value=0, max_value=pop))
        hh = draw(small)
        low = draw(st.integers(min_value=0, max_value=hh))
        high = draw(st.integers(min_value=0, max_value=hh - low))
        rows.append(
            f"T{i:05d},{draw(states)},{draw(lat_st)!r},{draw(lon_st)!r},"
            f"{draw(small)},{hh},{low},{high},{pop},{white},{black},{aapi},{other},"
            f"{hisp},{pop - hisp}"
        )
    return rows


@given(consistent_tract_rows())
@settings(max_examples=50, deadline=None)
def test_round_trip_random_tracts(rows):
    tracts, report = parse_tracts(tract_file(*rows))
    assert report.records_accepted == len(rows)
    buf = io.StringIO()
    write_tracts(tracts, buf)
    buf.seek(0)
    reparsed, _ = parse_tracts(buf)
    assert reparsed == tracts


junk_cell = st.text(alphabet="ab,;-1.09x ", max_size=12)


@given(st.lists(st.one_of(st.just(GOOD_ROW), st.lists(junk_cell, max_size=18).map(",".join)), max_size=20))
@settings(max_examples=50, deadline=None)
def test_bookkeeping_identity_under_fuzz(rows):
    rows = [r for r in rows if r.strip()]
    _, report = parse_tracts(tract_file(*rows))
    rejected = sum(report.records_rejected_by_reason.values())
    assert report.records_read == report.records_accepted + rejected
    assert report.records_read == len(rows)
