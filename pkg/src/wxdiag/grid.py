"""Gridded-field container, GRD1 binary container I/O, time helpers, analytic generators.

A :class:`GridField` is an immutable 4-D block of float64 samples ordered
``(time, level, lat, lon)`` on strictly monotonic axes.  Surface-only fields
(mslp, 10-m wind, 2-m temperature) use the nominal level ``0.0``.

The GRD1 container is self-describing: ``b"GRD1"``, a little-endian uint32
header length, a UTF-8 JSON header (name, units, times, levels, lats, lons,
mask) and the raw row-major float64 payload.  Reading back a written field
reproduces it bit for bit.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAGIC = b"GRD1"

_MIN_UTC_OFFSET = -12.0
_MAX_UTC_OFFSET = 14.0


class GridError(ValueError):
    """Base error for grid construction, selection and container I/O."""


class GridFormatError(GridError):
    """Raised for malformed GRD1 bytes."""


class GridDataError(GridError):
    """Raised for inconsistent axes, shapes or mask violations."""


# ---------------------------------------------------------------------------
# timestamps (minute precision, always UTC-aware inside the package)

def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 instant; naive input is taken as UTC."""
    if not isinstance(text, str):
        raise GridError(f"timestamp must be a string, got {type(text).__name__}")
    cleaned = text.strip()
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1] + "+00:00"
    try:
        stamp = datetime.fromisoformat(cleaned)
    except ValueError as exc:
        raise GridError(f"malformed timestamp {text!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    stamp = stamp.astimezone(timezone.utc)
    if stamp.second or stamp.microsecond:
        raise GridError(f"timestamps carry minute precision, got {text!r}")
    return stamp


def format_timestamp(stamp: datetime) -> str:
    """Render a UTC-aware datetime as ``YYYY-MM-DDTHH:MMZ``."""
    if stamp.tzinfo is None:
        raise GridError("naive datetime; attach a timezone first")
    stamp = stamp.astimezone(timezone.utc)
    if stamp.second or stamp.microsecond:
        raise GridError("timestamps carry minute precision")
    return stamp.strftime("%Y-%m-%dT%H:%MZ")


def _check_offset(utc_offset_hours: float) -> float:
    offset = float(utc_offset_hours)
    if not math.isfinite(offset) or not _MIN_UTC_OFFSET <= offset <= _MAX_UTC_OFFSET:
        raise GridError(f"bad UTC offset {utc_offset_hours!r} (expected hours in [-12, +14])")
    return offset


def to_utc(local_time: str | datetime, utc_offset_hours: float) -> datetime:
    """Convert a local wall-clock instant with a fixed UTC offset to UTC.

    ``to_utc("2014-05-08T20:00", 8)`` -> 2014-05-08T12:00Z.
    """
    offset = _check_offset(utc_offset_hours)
    if isinstance(local_time, datetime):
        local = local_time
        if local.second or local.microsecond:
            raise GridError("timestamps carry minute precision")
    else:
        text = str(local_time).strip()
        if text.endswith("Z") or "+" in text[10:] or "-" in text[10:]:
            raise GridError(f"local time must be naive, got {local_time!r}")
        try:
            local = datetime.fromisoformat(text)
        except ValueError as exc:
            raise GridError(f"malformed local time {local_time!r}") from exc
        if local.second or local.microsecond:
            raise GridError("timestamps carry minute precision")
    if local.tzinfo is not None:
        raise GridError("local time must be naive; pass the offset separately")
    return (local - timedelta(hours=offset)).replace(tzinfo=timezone.utc)


def to_local(stamp: datetime, utc_offset_hours: float) -> str:
    """Inverse of :func:`to_utc`: UTC instant -> naive local ISO string."""
    offset = _check_offset(utc_offset_hours)
    if stamp.tzinfo is None:
        raise GridError("naive datetime; attach a timezone first")
    local = stamp.astimezone(timezone.utc) + timedelta(hours=offset)
    return local.replace(tzinfo=None).strftime("%Y-%m-%dT%H:%M")


# ---------------------------------------------------------------------------
# geographic region

@dataclass(frozen=True)
class Region:
    """Inclusive lat/lon bounding box in degrees."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat_min <= self.lat_max <= 90.0):
            raise GridError(f"bad latitude bounds [{self.lat_min}, {self.lat_max}]")
        if not (-180.0 <= self.lon_min <= self.lon_max < 360.0):
            raise GridError(f"bad longitude bounds [{self.lon_min}, {self.lon_max}]")

    @classmethod
    def from_mapping(cls, data: dict) -> "Region":
        try:
            return cls(float(data["lat_min"]), float(data["lat_max"]),
                       float(data["lon_min"]), float(data["lon_max"]))
        except KeyError as exc:
            raise GridError(f"region mapping missing key {exc}") from exc

    def as_mapping(self) -> dict:
        return {"lat_min": self.lat_min, "lat_max": self.lat_max,
                "lon_min": self.lon_min, "lon_max": self.lon_max}

    def overlap_fraction(self, other: "Region") -> float:
        """Area fraction of *other* covered by self (plate carree degrees)."""
        dlat = min(self.lat_max, other.lat_max) - max(self.lat_min, other.lat_min)
        dlon = min(self.lon_max, other.lon_max) - max(self.lon_min, other.lon_min)
        if dlat <= 0 or dlon <= 0:
            return 0.0
        area = (other.lat_max - other.lat_min) * (other.lon_max - other.lon_min)
        if area <= 0:
            return 1.0
        return (dlat * dlon) / area


def _strictly_monotonic(axis: np.ndarray) -> bool:
    if axis.size < 2:
        return True
    steps = np.diff(axis)
    return bool(np.all(steps > 0) or np.all(steps < 0))


@dataclass(frozen=True)
class GridField:
    """Immutable (time, level, lat, lon) float64 field."""

    name: str
    units: str
    times: tuple[datetime, ...]
    levels: tuple[float, ...]
    lats: np.ndarray
    lons: np.ndarray
    values: np.ndarray
    mask: bool = False

    def __post_init__(self) -> None:
        if not self.name or not isinstance(self.name, str):
            raise GridDataError("field name must be a non-empty string")
        if not isinstance(self.units, str):
            raise GridDataError("units must be a string")

        times = tuple(self.times)
        if not times:
            raise GridDataError("at least one timestamp required")
        for stamp in times:
            if stamp.tzinfo is None:
                raise GridDataError("timestamps must be UTC-aware")
            if stamp.second or stamp.microsecond:
                raise GridDataError("timestamps carry minute precision")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise GridDataError("times must be strictly increasing")

        levels = tuple(float(l) for l in self.levels)
        if not levels:
            raise GridDataError("at least one level required")
        if any(b >= a for a, b in zip(levels, levels[1:])):
            raise GridDataError("levels must be strictly decreasing (hPa)")

        lats = np.asarray(self.lats, dtype=np.float64).reshape(-1).copy()
        lons = np.asarray(self.lons, dtype=np.float64).reshape(-1).copy()
        if lats.size == 0 or lons.size == 0:
            raise GridDataError("empty horizontal axis")
        if lats.min() < -90.0 or lats.max() > 90.0:
            raise GridDataError("latitudes outside [-90, 90]")
        if lons.min() < -180.0 or lons.max() >= 360.0:
            raise GridDataError("longitudes outside [-180, 360)")
        if not _strictly_monotonic(lats) or not _strictly_monotonic(lons):
            raise GridDataError("horizontal axes must be strictly monotonic")

        values = np.asarray(self.values, dtype=np.float64)
        expected = (len(times), len(levels), lats.size, lons.size)
        if values.shape != expected:
            raise GridDataError(f"values shape {values.shape} != axes shape {expected}")
        values = np.ascontiguousarray(values).copy()
        if not self.mask and not np.isfinite(values).all():
            raise GridDataError("non-finite values present but mask flag not set")

        for arr in (lats, lons, values):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "lats", lats)
        object.__setattr__(self, "lons", lons)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", bool(self.mask))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.values.shape  # type: ignore[return-value]

    def with_values(self, values: np.ndarray, *, name: str | None = None,
                    units: str | None = None) -> "GridField":
        """Same grid, new payload (used by derived-field kernels)."""
        return GridField(name=name or self.name, units=self.units if units is None else units,
                         times=self.times, levels=self.levels, lats=self.lats,
                         lons=self.lons, values=values, mask=self.mask)

    def same_grid(self, other: "GridField") -> bool:
        return (self.times == other.times and self.levels == other.levels
                and np.array_equal(self.lats, other.lats)
                and np.array_equal(self.lons, other.lons))


def require_same_grid(*fields: GridField) -> None:
    first = fields[0]
    for other in fields[1:]:
        if not first.same_grid(other):
            raise GridDataError(
                f"fields {first.name!r} and {other.name!r} are not co-registered")


def require_unmasked(*fields: GridField) -> None:
    for field in fields:
        if field.mask:
            raise GridDataError(f"field {field.name!r} is masked; operation requires dense data")


# ---------------------------------------------------------------------------
# GRD1 container

def grd_bytes(field: GridField) -> bytes:
    header = {
        "name": field.name,
        "units": field.units,
        "times": [format_timestamp(t) for t in field.times],
        "levels": list(field.levels),
        "lats": field.lats.tolist(),
        "lons": field.lons.tolist(),
        "mask": field.mask,
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    return MAGIC + struct.pack("<I", len(blob)) + blob + payload


def parse_grd(data: bytes) -> GridField:
    if len(data) < 8 or data[:4] != MAGIC:
        raise GridFormatError("not a GRD1 container (bad magic)")
    (header_len,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + header_len:
        raise GridFormatError("truncated GRD1 header")
    try:
        header = json.loads(data[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise GridFormatError(f"malformed GRD1 header: {exc}") from exc
    missing = {"name", "units", "times", "levels", "lats", "lons", "mask"} - set(header)
    if missing:
        raise GridFormatError(f"GRD1 header missing keys {sorted(missing)}")

    times = tuple(parse_timestamp(t) for t in header["times"])
    levels = tuple(float(l) for l in header["levels"])
    lats = np.asarray(header["lats"], dtype=np.float64)
    lons = np.asarray(header["lons"], dtype=np.float64)
    count = len(times) * len(levels) * lats.size * lons.size
    payload = data[8 + header_len:]
    if len(payload) != count * 8:
        raise GridFormatError(
            f"payload holds {len(payload) // 8} float64 values, axes imply {count}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(
        len(times), len(levels), lats.size, lons.size)
    try:
        return GridField(name=header["name"], units=header["units"], times=times,
                         levels=levels, lats=lats, lons=lons, values=values,
                         mask=bool(header["mask"]))
    except GridDataError as exc:
        raise GridFormatError(f"inconsistent GRD1 content: {exc}") from exc


def write_grd(field: GridField, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(grd_bytes(field))
    return path


def read_grd(path: str | Path) -> GridField:
    return parse_grd(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# selection

def _axis_window(axis: np.ndarray, lo: float, hi: float, what: str) -> np.ndarray:
    keep = (axis >= lo) & (axis <= hi)
    if not keep.any():
        raise GridError(f"empty {what} selection [{lo}, {hi}] on axis "
                        f"[{axis.min()}, {axis.max()}]")
    return keep


def subset(field: GridField, region: Region | None = None,
           levels: Sequence[float] | tuple[float, float] | None = None,
           times: Iterable[datetime] | None = None) -> GridField:
    """Copy out an inclusive sub-block; raises on an empty selection."""
    t_idx = np.arange(len(field.times))
    if times is not None:
        wanted = [t if t.tzinfo else t.replace(tzinfo=timezone.utc) for t in times]
        positions = []
        for stamp in wanted:
            try:
                positions.append(field.times.index(stamp))
            except ValueError:
                raise GridError(f"time {format_timestamp(stamp)} not on the time axis")
        t_idx = np.asarray(sorted(set(positions)), dtype=int)

    l_axis = np.asarray(field.levels)
    if levels is None:
        l_keep = np.ones(l_axis.size, dtype=bool)
    elif isinstance(levels, tuple) and len(levels) == 2 and not isinstance(levels[0], (list, np.ndarray)):
        lo, hi = sorted(float(v) for v in levels)
        l_keep = _axis_window(l_axis, lo, hi, "level")
    else:
        l_keep = np.zeros(l_axis.size, dtype=bool)
        for lev in levels:
            hits = np.nonzero(np.isclose(l_axis, float(lev), rtol=0, atol=1e-9))[0]
            if hits.size == 0:
                raise GridError(f"level {lev} not on the level axis {l_axis.tolist()}")
            l_keep[hits] = True

    if region is None:
        lat_keep = np.ones(field.lats.size, dtype=bool)
        lon_keep = np.ones(field.lons.size, dtype=bool)
    else:
        lat_keep = _axis_window(field.lats, region.lat_min, region.lat_max, "latitude")
        lon_keep = _axis_window(field.lons, region.lon_min, region.lon_max, "longitude")

    values = field.values[np.ix_(t_idx, np.nonzero(l_keep)[0],
                                 np.nonzero(lat_keep)[0], np.nonzero(lon_keep)[0])]
    return GridField(name=field.name, units=field.units,
                     times=tuple(field.times[i] for i in t_idx),
                     levels=tuple(l_axis[l_keep].tolist()),
                     lats=field.lats[lat_keep], lons=field.lons[lon_keep],
                     values=values.copy(), mask=field.mask)


def column_at(field: GridField, lat: float, lon: float,
              time: datetime | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Exact-node vertical column: (levels hPa descending, values)."""
    stamp = time if time is not None else field.times[0]
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    try:
        t = field.times.index(stamp)
    except ValueError:
        raise GridError(f"time {format_timestamp(stamp)} not on the time axis")
    i = np.nonzero(np.isclose(field.lats, lat, rtol=0, atol=1e-9))[0]
    j = np.nonzero(np.isclose(field.lons, lon, rtol=0, atol=1e-9))[0]
    if i.size == 0 or j.size == 0:
        raise GridError(f"point ({lat}, {lon}) is not a grid node")
    return np.asarray(field.levels), field.values[t, :, i[0], j[0]].copy()


def point_value(field: GridField, lat: float, lon: float, level: float | None = None,
                time: datetime | None = None) -> float:
    levels, column = column_at(field, lat, lon, time)
    if level is None:
        if levels.size != 1:
            raise GridError("level must be given for multi-level fields")
        return float(column[0])
    hits = np.nonzero(np.isclose(levels, float(level), rtol=0, atol=1e-9))[0]
    if hits.size == 0:
        raise GridError(f"level {level} not on the level axis")
    return float(column[hits[0]])


# ---------------------------------------------------------------------------
# analytic generators

@dataclass(frozen=True)
class GridSpec:
    """Regular generation grid (inclusive endpoints, equal spacing)."""

    lat_start: float
    lat_stop: float
    nlat: int
    lon_start: float
    lon_stop: float
    nlon: int
    levels: tuple[float, ...] = (500.0,)
    times: tuple[datetime, ...] = (datetime(2014, 5, 8, 12, 0, tzinfo=timezone.utc),)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(self.lat_start, self.lat_stop, self.nlat),
                np.linspace(self.lon_start, self.lon_stop, self.nlon))


ANALYTIC_KINDS = ("uniform", "solid_body_rotation", "linear_lapse_profile",
                  "gaussian_bump", "pure_deformation")


def gen_analytic(kind: str, params: dict, gridspec: GridSpec):
    """Closed-form test fields; wind-like kinds return a (u, v) pair.

    ``linear_lapse_profile`` returns (temperature, height) fields whose
    columns obey T(z) = t0 - lapse * z with z = scale_height * ln(p0 / p).
    """
    from . import constants

    if kind not in ANALYTIC_KINDS:
        raise GridError(f"unknown analytic kind {kind!r} (one of {ANALYTIC_KINDS})")
    if gridspec.nlat < 3 or gridspec.nlon < 3:
        raise GridError("analytic grids need at least 3 nodes per horizontal axis")

    lats, lons = gridspec.axes()
    shape = (len(gridspec.times), len(gridspec.levels), lats.size, lons.size)
    phi = np.deg2rad(lats)[None, None, :, None]
    lam = np.deg2rad(lons)[None, None, None, :]

    def build(name: str, units: str, values: np.ndarray) -> GridField:
        return GridField(name=name, units=units, times=gridspec.times,
                         levels=gridspec.levels, lats=lats, lons=lons,
                         values=np.broadcast_to(values, shape).copy())

    if kind == "uniform":
        value = float(params["value"])
        return build(params.get("name", "uniform"), params.get("units", "1"),
                     np.full(shape, value))

    if kind == "solid_body_rotation":
        u0 = float(params["u0"])
        u = u0 * np.cos(phi) * np.ones_like(lam)
        return (build(params.get("u_name", "u"), "m s-1", u),
                build(params.get("v_name", "v"), "m s-1", np.zeros(shape)))

    if kind == "gaussian_bump":
        base = float(params.get("base", 0.0))
        amp = float(params["amplitude"])
        sigma = float(params.get("sigma_deg", 3.0))
        clat, clon = float(params["center_lat"]), float(params["center_lon"])
        d2 = (lats[None, None, :, None] - clat) ** 2 + (lons[None, None, None, :] - clon) ** 2
        values = base + amp * np.exp(-d2 / (2.0 * sigma * sigma))
        return build(params.get("name", "bump"), params.get("units", "1"), values)

    if kind == "pure_deformation":
        rate = float(params["rate"])
        clat, clon = float(params["center_lat"]), float(params["center_lon"])
        lam0, phi0 = math.radians(clon), math.radians(clat)
        u = rate * constants.EARTH_RADIUS * np.cos(phi) * (lam - lam0) * np.ones_like(phi)
        v = -rate * constants.EARTH_RADIUS * (phi - phi0) * np.ones_like(lam)
        return (build(params.get("u_name", "u"), "m s-1", np.broadcast_to(u, shape)),
                build(params.get("v_name", "v"), "m s-1", np.broadcast_to(v, shape)))

    # linear_lapse_profile
    if len(gridspec.levels) < 2:
        raise GridError("linear_lapse_profile needs at least 2 levels")
    t0 = float(params.get("t0", 288.15))
    lapse = float(params.get("lapse", 0.0065))
    p_ref = float(params.get("p0", max(gridspec.levels)))
    scale_height = float(params.get("scale_height", 8000.0))
    p = np.asarray(gridspec.levels)[None, :, None, None]
    z = scale_height * np.log(p_ref / p)
    t = t0 - lapse * z
    return (build(params.get("t_name", "t"), "K", np.broadcast_to(t, shape)),
            build(params.get("z_name", "z"), "m", np.broadcast_to(z, shape)))
