from __future__ import annotations

import json
import struct
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from wxdiag.grid import (
    GridError,
    GridDataError,
    GridFormatError,
    GridField,
    GridSpec,
    Region,
    column_at,
    format_timestamp,
    gen_analytic,
    grd_bytes,
    parse_grd,
    parse_timestamp,
    point_value,
    read_grd,
    subset,
    to_local,
    to_utc,
    write_grd,
)

from conftest import T0, make_field


class TestTime:
    def test_beijing_evening_maps_to_noon_utc(self):
        stamp = to_utc("2014-05-08T20:00", 8)
        assert stamp == datetime(2014, 5, 8, 12, 0, tzinfo=timezone.utc)
        assert format_timestamp(stamp) == "2014-05-08T12:00Z"

    def test_roundtrip_through_local(self):
        rnd = np.random.default_rng(7)
        base = datetime(2020, 1, 1, tzinfo=timezone.utc)
        for _ in range(200):
            stamp = base + timedelta(minutes=int(rnd.integers(0, 10_000_000)))
            offset = float(rnd.integers(-12, 15))
            assert to_utc(to_local(stamp, offset), offset) == stamp

    def test_fractional_offset(self):
        assert to_utc("2020-06-01T10:45", 5.75).hour == 5

    @pytest.mark.parametrize("offset", [-12.5, 15, float("nan")])
    def test_bad_offset_rejected(self, offset):
        with pytest.raises(GridError):
            to_utc("2020-01-01T00:00", offset)

    def test_malformed_time_rejected(self):
        with pytest.raises(GridError):
            to_utc("May 8th, 8pm", 8)
        with pytest.raises(GridError):
            to_utc("2020-01-01T00:00:30", 0)   # second precision
        with pytest.raises(GridError):
            to_utc("2020-01-01T00:00Z", 0)     # non-naive local time

    def test_parse_accepts_z_and_offset_forms(self):
        assert parse_timestamp("2014-05-08T12:00Z") == parse_timestamp("2014-05-08T12:00+00:00")
        assert parse_timestamp("2014-05-08T20:00+08:00") == T0


class TestGridFieldValidation:
    def test_minimal_field_freezes_arrays(self):
        f = make_field()
        assert not f.values.flags.writeable
        with pytest.raises(ValueError):
            f.values[0, 0, 0, 0] = 1.0

    def test_non_monotonic_axis_rejected(self):
        with pytest.raises(GridDataError):
            make_field(lats=[10.0, 12.0, 11.0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(GridDataError):
            make_field(values=np.zeros((1, 1, 3, 3)))

    def test_nan_without_mask_rejected(self):
        values = np.zeros((1, 1, 11, 11))
        values[0, 0, 5, 5] = np.nan
        with pytest.raises(GridDataError):
            make_field(values=values)
        make_field(values=values, mask=True)   # allowed once declared

    def test_levels_must_descend(self):
        with pytest.raises(GridDataError):
            make_field(levels=(500.0, 850.0))

    def test_times_need_timezone_and_minute_precision(self):
        with pytest.raises(GridDataError):
            make_field(times=(datetime(2014, 5, 8, 12, 0),))
        with pytest.raises(GridDataError):
            make_field(times=(datetime(2014, 5, 8, 12, 0, 30, tzinfo=timezone.utc),))

    def test_longitude_domain(self):
        with pytest.raises(GridDataError):
            make_field(lons=[350.0, 355.0, 360.0])


class TestGrd1:
    def test_header_layout(self):
        f = make_field()
        blob = grd_bytes(f)
        assert blob[:4] == b"GRD1"
        (hlen,) = struct.unpack("<I", blob[4:8])
        header = json.loads(blob[8:8 + hlen])
        assert list(header) == ["name", "units", "times", "levels", "lats", "lons", "mask"]
        assert header["times"] == ["2014-05-08T12:00Z"]
        assert len(blob) == 8 + hlen + f.values.size * 8

    def test_roundtrip_random_fields_bit_exact(self):
        rnd = np.random.default_rng(42)
        for _ in range(30):
            nt, nl = int(rnd.integers(1, 3)), int(rnd.integers(1, 4))
            nlat, nlon = int(rnd.integers(1, 9)), int(rnd.integers(1, 9))
            lats = np.sort(rnd.uniform(-89, 89, nlat))
            while len(set(lats)) < nlat:
                lats = np.sort(rnd.uniform(-89, 89, nlat))
            lons = np.sort(rnd.uniform(-179, 359, nlon))
            while len(set(lons)) < nlon:
                lons = np.sort(rnd.uniform(-179, 359, nlon))
            times = tuple(T0 + timedelta(hours=6 * k) for k in range(nt))
            levels = tuple(sorted(rnd.choice([1000.0, 925, 850, 700, 500, 300], nl,
                                             replace=False), reverse=True))
            values = rnd.standard_normal((nt, nl, nlat, nlon)) * 1e3
            mask = bool(rnd.integers(0, 2))
            if mask:
                values[tuple(rnd.integers(0, s) for s in values.shape)] = np.nan
            f = make_field(times=times, levels=levels, lats=lats, lons=lons,
                           values=values, mask=mask)
            g = parse_grd(grd_bytes(f))
            assert g.values.tobytes() == f.values.tobytes()
            assert np.array_equal(g.lats, f.lats) and np.array_equal(g.lons, f.lons)
            assert g.times == f.times and g.levels == f.levels
            assert (g.name, g.units, g.mask) == (f.name, f.units, f.mask)
            assert grd_bytes(g) == grd_bytes(f)

    def test_file_roundtrip(self, tmp_path):
        f = make_field(values=np.arange(121.0).reshape(1, 1, 11, 11))
        path = write_grd(f, tmp_path / "t.grd")
        assert read_grd(path).values.tobytes() == f.values.tobytes()

    def test_bad_magic(self):
        with pytest.raises(GridFormatError):
            parse_grd(b"NOPE" + b"\x00" * 16)

    def test_truncated_header(self):
        blob = grd_bytes(make_field())
        with pytest.raises(GridFormatError):
            parse_grd(blob[:10])

    def test_payload_length_mismatch(self):
        blob = grd_bytes(make_field())
        with pytest.raises(GridFormatError):
            parse_grd(blob[:-8])

    def test_missing_header_key(self):
        header = json.dumps({"name": "x"}).encode()
        blob = b"GRD1" + struct.pack("<I", len(header)) + header
        with pytest.raises(GridFormatError):
            parse_grd(blob)

    def test_nan_payload_without_mask_flag_rejected(self):
        f = make_field()
        header = {"name": "t", "units": "K", "times": ["2014-05-08T12:00Z"],
                  "levels": [500.0], "lats": f.lats.tolist(), "lons": f.lons.tolist(),
                  "mask": False}
        blob = json.dumps(header).encode()
        payload = np.full(121, np.nan).tobytes()
        with pytest.raises(GridFormatError):
            parse_grd(b"GRD1" + struct.pack("<I", len(blob)) + blob + payload)


class TestSubset:
    def test_inclusive_bounds(self):
        f = make_field(values=np.arange(121.0).reshape(1, 1, 11, 11))
        g = subset(f, Region(22.0, 25.0, 103.0, 106.0))
        assert g.lats.tolist() == [22.0, 23.0, 24.0, 25.0]
        assert g.lons.tolist() == [103.0, 104.0, 105.0, 106.0]
        assert g.values[0, 0, 0, 0] == f.values[0, 0, 2, 3]

    def test_no_overlap_raises(self):
        f = make_field()
        with pytest.raises(GridError):
            subset(f, Region(50.0, 60.0, 100.0, 110.0))

    def test_level_list_and_range(self):
        f = make_field(levels=(1000.0, 850.0, 500.0, 200.0),
                       values=np.zeros((1, 4, 11, 11)))
        assert subset(f, levels=[850.0, 200.0]).levels == (850.0, 200.0)
        assert subset(f, levels=(1000.0, 300.0)).levels == (1000.0, 850.0, 500.0)
        with pytest.raises(GridError):
            subset(f, levels=[700.0])

    def test_time_selection(self):
        times = (T0, T0 + timedelta(hours=24))
        f = make_field(times=times, values=np.zeros((2, 1, 11, 11)))
        g = subset(f, times=[times[1]])
        assert g.times == (times[1],)
        with pytest.raises(GridError):
            subset(f, times=[T0 + timedelta(hours=6)])

    def test_point_lookup(self):
        f = make_field(values=np.arange(121.0).reshape(1, 1, 11, 11))
        levels, column = column_at(f, 25.0, 105.0)
        assert levels.tolist() == [500.0]
        assert column[0] == f.values[0, 0, 5, 5]
        assert point_value(f, 25.0, 105.0) == f.values[0, 0, 5, 5]
        with pytest.raises(GridError):
            point_value(f, 25.5, 105.0)


class TestGenerators:
    def test_uniform(self):
        spec = GridSpec(20, 30, 5, 100, 110, 5)
        f = gen_analytic("uniform", {"value": 7.5, "name": "q", "units": "kg kg-1"}, spec)
        assert float(f.values.min()) == float(f.values.max()) == 7.5
        assert f.name == "q"

    def test_unknown_kind(self):
        with pytest.raises(GridError):
            gen_analytic("swirl", {}, GridSpec(20, 30, 5, 100, 110, 5))

    def test_resolution_floor(self):
        with pytest.raises(GridError):
            gen_analytic("uniform", {"value": 1.0}, GridSpec(20, 30, 2, 100, 110, 5))

    def test_gaussian_bump_peak_on_node(self):
        spec = GridSpec(20, 30, 11, 100, 110, 11)
        f = gen_analytic("gaussian_bump",
                         {"base": 1000.0, "amplitude": -12.0, "center_lat": 25.0,
                          "center_lon": 105.0, "sigma_deg": 2.0}, spec)
        i, j = np.unravel_index(np.argmin(f.values[0, 0]), f.values[0, 0].shape)
        assert (f.lats[i], f.lons[j]) == (25.0, 105.0)
        assert f.values[0, 0, i, j] == pytest.approx(988.0)

    def test_solid_body_matches_closed_form(self):
        spec = GridSpec(30, 60, 7, 100, 130, 7)
        u, v = gen_analytic("solid_body_rotation", {"u0": 10.0}, spec)
        assert np.allclose(u.values[0, 0, :, 0], 10.0 * np.cos(np.deg2rad(u.lats)))
        assert float(np.abs(v.values).max()) == 0.0

    def test_lapse_profile_closed_form(self):
        spec = GridSpec(20, 30, 3, 100, 110, 3, levels=(1000.0, 850.0, 700.0, 500.0))
        t, z = gen_analytic("linear_lapse_profile",
                            {"t0": 288.15, "lapse": 0.0065, "scale_height": 8000.0}, spec)
        z_500 = 8000.0 * np.log(1000.0 / 500.0)
        assert z.values[0, 3, 0, 0] == pytest.approx(z_500)
        assert t.values[0, 3, 0, 0] == pytest.approx(288.15 - 0.0065 * z_500)
