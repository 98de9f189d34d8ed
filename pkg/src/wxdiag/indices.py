"""Diagnostic index registry and the kernel dispatch behind every index id.

The registry is a versioned JSON resource mapping each of the 30 supported
index ids to a kernel name, a fixed reduction, required input variables and
output units.  ``compute_index`` is a thin dispatcher: every kernel is also
reachable directly, and dispatch must agree with the direct call bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime
from importlib import resources
from typing import Mapping

import numpy as np

from . import spherical, thermo
from .grid import GridError, GridField, Region, grd_bytes, point_value, subset
from .thermo import Sounding

VALID_TIERS = ("Easy", "Medium", "Hard")
VALID_REDUCTIONS = ("min", "max", "mean", "point", "integral")


class IndexComputationError(ValueError):
    """Unknown index id, missing inputs or unusable parameters."""


@dataclass(frozen=True)
class IndexSpec:
    index_id: str
    tier: str
    kernel: str
    reduction: str
    required_vars: tuple[str, ...]
    units_out: str
    description: str = ""


@dataclass(frozen=True)
class IndexResult:
    value: float
    units: str
    provenance: str
    index_id: str = ""


_REGISTRY_CACHE: dict[str, IndexSpec] | None = None


def load_registry(path: str | None = None) -> dict[str, IndexSpec]:
    """Load and validate the index registry (packaged resource by default)."""
    if path is None:
        raw = resources.files("wxdiag.resources").joinpath("registry.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    data = json.loads(raw)
    if data.get("schema") != "index-registry/1":
        raise IndexComputationError(f"unsupported registry schema {data.get('schema')!r}")
    out: dict[str, IndexSpec] = {}
    for rec in data["indices"]:
        spec = IndexSpec(index_id=rec["index_id"], tier=rec["tier"], kernel=rec["kernel"],
                         reduction=rec["reduction"],
                         required_vars=tuple(rec["required_vars"]),
                         units_out=rec["units_out"],
                         description=rec.get("description", ""))
        if spec.tier not in VALID_TIERS:
            raise IndexComputationError(f"{spec.index_id}: bad tier {spec.tier!r}")
        if spec.reduction not in VALID_REDUCTIONS:
            raise IndexComputationError(f"{spec.index_id}: bad reduction {spec.reduction!r}")
        if spec.kernel not in _KERNELS:
            raise IndexComputationError(f"{spec.index_id}: unknown kernel {spec.kernel!r}")
        if spec.index_id in out:
            raise IndexComputationError(f"duplicate index id {spec.index_id!r}")
        out[spec.index_id] = spec
    return out


def registry() -> dict[str, IndexSpec]:
    global _REGISTRY_CACHE
    if _REGISTRY_CACHE is None:
        _REGISTRY_CACHE = load_registry()
    return _REGISTRY_CACHE


# ---------------------------------------------------------------------------
# reductions and scalar helpers

def stat_reduce(field: GridField, op: str, region: Region | None = None,
                level: float | None = None, time: datetime | None = None,
                weighted: bool = False) -> float:
    """Reduce a field over a region (and optional level/time slice).

    ``weighted`` applies cos(lat) area weights; it only affects ``mean``.
    """
    if field.mask:
        raise IndexComputationError(f"field {field.name!r} is masked")
    block = subset(field, region=region,
                   levels=[level] if level is not None else None,
                   times=[time] if time is not None else None)
    values = block.values
    if op == "min":
        return float(values.min())
    if op == "max":
        return float(values.max())
    if op == "mean":
        if not weighted:
            return float(values.mean())
        w = np.cos(np.deg2rad(block.lats))[None, None, :, None]
        w = np.broadcast_to(w, values.shape)
        return float((values * w).sum() / w.sum())
    raise IndexComputationError(f"unknown reduction {op!r}")


def vertical_shear(u_lo, v_lo, u_hi, v_hi):
    """Bulk shear magnitude |(u_hi - u_lo, v_hi - v_lo)| (scalars or arrays)."""
    return np.hypot(np.asarray(u_hi) - np.asarray(u_lo),
                    np.asarray(v_hi) - np.asarray(v_lo))


def standardized_anomaly(value: float, mu: float, sigma: float) -> float:
    """(value - mu) / sigma; sigma must be strictly positive."""
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise IndexComputationError(f"climatological sigma must be positive, got {sigma}")
    return (float(value) - float(mu)) / float(sigma)


# ---------------------------------------------------------------------------
# kernel implementations (each takes (spec, inputs, params) -> float)

def _field(inputs: Mapping, name: str) -> GridField:
    try:
        field = inputs[name]
    except KeyError:
        raise IndexComputationError(f"missing required input {name!r}")
    if not isinstance(field, GridField):
        raise IndexComputationError(f"input {name!r} is not a GridField")
    if field.mask:
        raise IndexComputationError(f"input {name!r} is masked")
    return field


def _sounding(inputs: Mapping) -> Sounding:
    try:
        snd = inputs["sounding"]
    except KeyError:
        raise IndexComputationError("missing required input 'sounding'")
    if not isinstance(snd, Sounding):
        raise IndexComputationError("input 'sounding' is not a Sounding")
    return snd


def _region(params: Mapping) -> Region | None:
    reg = params.get("region")
    if reg is None:
        return None
    return reg if isinstance(reg, Region) else Region.from_mapping(reg)


def _time(params: Mapping, key: str = "time"):
    from .grid import parse_timestamp
    value = params.get(key)
    if value is None:
        return None
    return value if isinstance(value, datetime) else parse_timestamp(value)


def _reduce_kernel(spec: IndexSpec, inputs: Mapping, params: Mapping) -> float:
    return stat_reduce(_field(inputs, spec.required_vars[0]), spec.reduction,
                       region=_region(params), level=params.get("level"),
                       time=_time(params), weighted=bool(params.get("weighted", False)))


def _derived_reduce(spec: IndexSpec, inputs: Mapping, params: Mapping,
                    derived: GridField) -> float:
    return stat_reduce(derived, spec.reduction, region=_region(params),
                       level=params.get("level"), time=_time(params))


def _wind_speed_reduce(spec, inputs, params):
    speed = spherical.wind_speed(_field(inputs, "u"), _field(inputs, "v"))
    return _derived_reduce(spec, inputs, params, speed)


def _vorticity_reduce(spec, inputs, params):
    return _derived_reduce(spec, inputs, params,
                           spherical.vorticity(_field(inputs, "u"), _field(inputs, "v")))


def _divergence_reduce(spec, inputs, params):
    return _derived_reduce(spec, inputs, params,
                           spherical.divergence(_field(inputs, "u"), _field(inputs, "v")))


def _advection_reduce(spec, inputs, params):
    adv = spherical.advection(_field(inputs, spec.required_vars[0]),
                              _field(inputs, "u"), _field(inputs, "v"))
    return _derived_reduce(spec, inputs, params, adv)


def _gradient_mag_reduce(spec, inputs, params):
    gx, gy = spherical.horizontal_gradient(_field(inputs, spec.required_vars[0]))
    mag = gx.with_values(np.hypot(gx.values, gy.values), name="gradient_magnitude")
    return _derived_reduce(spec, inputs, params, mag)


def _frontogenesis_reduce(spec, inputs, params):
    front = spherical.frontogenesis(_field(inputs, "theta"),
                                    _field(inputs, "u"), _field(inputs, "v"))
    return _derived_reduce(spec, inputs, params, front)


def _mfd_field(inputs):
    return spherical.moisture_flux_divergence(_field(inputs, "q"),
                                              _field(inputs, "u"), _field(inputs, "v"))


def _mfd_reduce(spec, inputs, params):
    return _derived_reduce(spec, inputs, params, _mfd_field(inputs))


def _mfd_intensity(spec, inputs, params):
    # convergence reported as a positive intensity
    mfd = _mfd_field(inputs)
    return -stat_reduce(mfd, "min", region=_region(params),
                        level=params.get("level"), time=_time(params))


def _rh_layer_mean(spec, inputs, params):
    t = _field(inputs, "t")
    q = _field(inputs, "q")
    if not t.same_grid(q):
        raise IndexComputationError("t and q are not co-registered")
    p = np.asarray(t.levels)[None, :, None, None]
    rh_values = thermo.relative_humidity_from_q(np.broadcast_to(p, t.shape), t.values, q.values)
    rh = t.with_values(np.asarray(rh_values), name="rh", units="%")
    bounds = params.get("layer")
    block = subset(rh, region=_region(params),
                   levels=tuple(float(v) for v in bounds) if bounds else None,
                   times=[_time(params)] if params.get("time") else None)
    return float(block.values.mean())


def _point_params(params):
    point = params.get("point")
    if not point or len(point) != 2:
        raise IndexComputationError("params must carry point=[lat, lon]")
    return float(point[0]), float(point[1])


def _time_change_point(spec, inputs, params):
    field = _field(inputs, spec.required_vars[0])
    times = params.get("times")
    if not times or len(times) != 2:
        raise IndexComputationError("params must carry times=[earlier, later]")
    lat, lon = _point_params(params)
    level = params.get("level")
    from .grid import parse_timestamp
    t1, t2 = (v if isinstance(v, datetime) else parse_timestamp(v) for v in times)
    return (point_value(field, lat, lon, level=level, time=t2)
            - point_value(field, lat, lon, level=level, time=t1))


def _pressure_tendency_point(spec, inputs, params):
    from .grid import parse_timestamp
    times = params.get("times")
    if not times or len(times) != 2:
        raise IndexComputationError("params must carry times=[earlier, later]")
    t1, t2 = (v if isinstance(v, datetime) else parse_timestamp(v) for v in times)
    hours = (t2 - t1).total_seconds() / 3600.0
    if hours <= 0:
        raise IndexComputationError("times must be increasing")
    field = _field(inputs, "msl")
    lat, lon = _point_params(params)
    level = params.get("level")
    dp = (point_value(field, lat, lon, level=level, time=t2)
          - point_value(field, lat, lon, level=level, time=t1))
    return dp / hours


def _pressure_change_diff(spec, inputs, params):
    from .grid import parse_timestamp
    points = params.get("points")
    times = params.get("times")
    if not points or len(points) != 2:
        raise IndexComputationError("params must carry points=[[latA, lonA], [latB, lonB]]")
    if not times or len(times) != 2:
        raise IndexComputationError("params must carry times=[earlier, later]")
    t1, t2 = (v if isinstance(v, datetime) else parse_timestamp(v) for v in times)
    field = _field(inputs, "msl")
    level = params.get("level")

    def change(point):
        lat, lon = float(point[0]), float(point[1])
        return (point_value(field, lat, lon, level=level, time=t2)
                - point_value(field, lat, lon, level=level, time=t1))

    return change(points[0]) - change(points[1])


def _bulk_shear_point(spec, inputs, params):
    u, v = _field(inputs, "u"), _field(inputs, "v")
    pair = params.get("levels_pair")
    if not pair or len(pair) != 2:
        raise IndexComputationError("params must carry levels_pair=[lower_hPa, upper_hPa]")
    lo, hi = (float(x) for x in pair)
    lat, lon = _point_params(params)
    time = _time(params)
    return float(vertical_shear(point_value(u, lat, lon, level=lo, time=time),
                                point_value(v, lat, lon, level=lo, time=time),
                                point_value(u, lat, lon, level=hi, time=time),
                                point_value(v, lat, lon, level=hi, time=time)))


def _standardized_anomaly_point(spec, inputs, params):
    if "value" in params:
        value = float(params["value"])
    else:
        field = _field(inputs, spec.required_vars[0])
        lat, lon = _point_params(params)
        value = point_value(field, lat, lon, level=params.get("level"), time=_time(params))
    try:
        mu, sigma = float(params["mu"]), float(params["sigma"])
    except KeyError as exc:
        raise IndexComputationError(f"params must carry climatology {exc}")
    return standardized_anomaly(value, mu, sigma)


def _pwat_column(spec, inputs, params):
    return thermo.precipitable_water_mm(_sounding(inputs),
                                        bottom=params.get("bottom"), top=params.get("top"))


def _cape_column(spec, inputs, params):
    return thermo.cape_jkg(_sounding(inputs))


def _isotherm_height_column(spec, inputs, params):
    return thermo.isotherm_height_m(_sounding(inputs),
                                    target=float(params.get("target", 273.15)))


def _theta_e_diff_point(spec, inputs, params):
    snd = _sounding(inputs)
    pair = params.get("levels_pair", (850.0, 500.0))
    lo, hi = (float(x) for x in pair)
    if snd.td is None:
        raise IndexComputationError("theta-e difference needs dewpoints in the sounding")

    def level_theta_e(level):
        hits = np.nonzero(np.isclose(snd.p, level, rtol=0, atol=1e-9))[0]
        if hits.size == 0:
            raise IndexComputationError(f"level {level} hPa not in the sounding")
        k = hits[0]
        return float(thermo.theta_e(snd.p[k], snd.t[k], snd.td[k]))

    return level_theta_e(lo) - level_theta_e(hi)


_KERNELS = {
    "reduce": _reduce_kernel,
    "wind_speed_reduce": _wind_speed_reduce,
    "vorticity_reduce": _vorticity_reduce,
    "divergence_reduce": _divergence_reduce,
    "advection_reduce": _advection_reduce,
    "gradient_mag_reduce": _gradient_mag_reduce,
    "frontogenesis_reduce": _frontogenesis_reduce,
    "mfd_reduce": _mfd_reduce,
    "mfd_intensity": _mfd_intensity,
    "rh_layer_mean": _rh_layer_mean,
    "time_change_point": _time_change_point,
    "pressure_tendency_point": _pressure_tendency_point,
    "pressure_change_diff": _pressure_change_diff,
    "bulk_shear_point": _bulk_shear_point,
    "standardized_anomaly_point": _standardized_anomaly_point,
    "pwat_column": _pwat_column,
    "cape_column": _cape_column,
    "isotherm_height_column": _isotherm_height_column,
    "theta_e_diff_point": _theta_e_diff_point,
}


def _provenance(index_id: str, inputs: Mapping, params: Mapping) -> str:
    digest = hashlib.sha256()
    digest.update(index_id.encode("utf-8"))
    for name in sorted(inputs):
        digest.update(name.encode("utf-8"))
        item = inputs[name]
        if isinstance(item, GridField):
            digest.update(grd_bytes(item))
        elif isinstance(item, Sounding):
            digest.update(json.dumps(item.as_mapping(), sort_keys=True).encode("utf-8"))
        else:
            digest.update(repr(item).encode("utf-8"))
    digest.update(json.dumps({k: _param_repr(v) for k, v in sorted(params.items())},
                             sort_keys=True).encode("utf-8"))
    return digest.hexdigest()[:16]


def _param_repr(value):
    if isinstance(value, Region):
        return value.as_mapping()
    if isinstance(value, datetime):
        from .grid import format_timestamp
        return format_timestamp(value)
    if isinstance(value, (list, tuple)):
        return [_param_repr(v) for v in value]
    return value


def compute_index(index_id: str, inputs: Mapping, params: Mapping | None = None,
                  reg: Mapping[str, IndexSpec] | None = None) -> IndexResult:
    """Dispatch an index id to its kernel and wrap the scalar answer."""
    reg = reg if reg is not None else registry()
    try:
        spec = reg[index_id]
    except KeyError:
        raise IndexComputationError(f"unknown index id {index_id!r}")
    params = dict(params or {})
    missing = [v for v in spec.required_vars if v not in inputs]
    if missing:
        raise IndexComputationError(f"{index_id}: missing inputs {missing}")
    try:
        value = _KERNELS[spec.kernel](spec, inputs, params)
    except (GridError, thermo.SoundingError) as exc:
        raise IndexComputationError(f"{index_id}: {exc}") from exc
    return IndexResult(value=float(value), units=spec.units_out,
                       provenance=_provenance(index_id, inputs, params),
                       index_id=index_id)
