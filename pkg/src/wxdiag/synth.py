"""Deterministic synthetic cases for demos, tests, and benchmarks.

Every builder lays out a small closed-form atmosphere on an 11x11 grid over
20-30N, 100-110E, then engineers the per-index climatology so that each
evidence index lands at a chosen standardized anomaly: the climatology
sample is [mu - sigma] x 20 + [mu + sigma] x 20 with mu = value - k * sigma,
so the loop sees SA = k exactly.  Positive k at or past the significance
threshold scripts support; small k scripts a miss; None scripts an index
whose computation fails (the store simply lacks what it needs).
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .grid import GridField, Region, parse_timestamp
from .indices import compute_index, registry
from .store import CaseStore, write_store
from .thermo import Sounding

T0 = "2014-05-08T12:00Z"
T_MINUS_24H = "2014-05-07T12:00Z"

LATS = np.linspace(20.0, 30.0, 11)
LONS = np.linspace(100.0, 110.0, 11)

REGION = {"lat_min": 20.0, "lat_max": 30.0, "lon_min": 100.0, "lon_max": 110.0}

SCENARIOS = ("coldwave_accept", "rainstorm_replan", "heatwave_exhaust",
             "gale_accept", "rainstorm_moisture")

_TASKS = {
    "coldwave_accept": ("Diagnose the mechanisms behind the severe cold surge "
                        "over the study region on 8 May 2014 and verify the "
                        "leading driver."),
    "rainstorm_replan": ("Diagnose why the torrential rain event developed "
                         "over the study region and verify the responsible "
                         "mechanism."),
    "heatwave_exhaust": ("Diagnose the drivers of the extreme heat episode "
                         "over the study region and verify each candidate "
                         "mechanism."),
    "gale_accept": ("Diagnose the cause of the damaging wind episode over "
                    "the study region and verify the dominant mechanism."),
    "rainstorm_moisture": ("Diagnose the moisture supply behind the flooding "
                           "rain event over the study region and verify it."),
}


def scenario_task(name: str) -> str:
    try:
        return _TASKS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {SCENARIOS}")


# ---------------------------------------------------------------------------
# building blocks

def _unit_coords():
    y = (LATS - LATS[0]) / (LATS[-1] - LATS[0])
    x = (LONS - LONS[0]) / (LONS[-1] - LONS[0])
    return np.meshgrid(y, x, indexing="ij")


def _bump():
    yy, xx = _unit_coords()
    return np.sin(np.pi * yy) * np.sin(np.pi * xx)


def _field(name: str, units: str, levels: Sequence[float],
           per_level: Sequence[np.ndarray],
           times: Sequence[str] = (T0,)) -> GridField:
    """Stack per-(time, level) 2-D slabs into a GridField.

    ``per_level`` holds one slab per level when a single time is given, or
    time-major slabs (t0 level slabs, then t1 level slabs, ...) otherwise.
    """
    nt, nl = len(times), len(levels)
    slabs = [np.asarray(s, dtype=np.float64) for s in per_level]
    if len(slabs) == nl and nt > 1:
        slabs = slabs * nt
    if len(slabs) != nt * nl:
        raise ValueError(f"{name}: got {len(slabs)} slabs for {nt}x{nl}")
    values = np.stack(slabs).reshape(nt, nl, LATS.size, LONS.size)
    return GridField(name=name, units=units,
                     times=tuple(parse_timestamp(t) for t in times),
                     levels=tuple(float(l) for l in levels),
                     lats=LATS.copy(), lons=LONS.copy(), values=values)


def _wind(levels, u_amp=10.0, v_amp=6.0):
    bump = _bump()
    yy, _ = _unit_coords()
    u_slabs, v_slabs = [], []
    for level in levels:
        scale = (1000.0 / level) ** 0.6
        u_slabs.append((6.0 + u_amp * bump + 4.0 * yy) * scale)
        v_slabs.append((-3.0 + v_amp * bump * (1.0 - yy)) * scale)
    return (_field("u", "m s-1", levels, u_slabs),
            _field("v", "m s-1", levels, v_slabs))


def _temperature(levels, warm=0.0):
    bump = _bump()
    yy, _ = _unit_coords()
    slabs = [(300.0 + warm - 0.05 * (1000.0 - level)) + 8.0 * bump - 5.0 * yy
             for level in levels]
    return _field("t", "K", levels, slabs)


def _dewpoint(t: GridField):
    yy, _ = _unit_coords()
    depression = 4.0 + 3.0 * yy
    values = t.values - depression[None, None, :, :]
    return GridField(name="td", units="K", times=t.times, levels=t.levels,
                     lats=t.lats.copy(), lons=t.lons.copy(), values=values)


def _theta(t: GridField):
    p = np.asarray(t.levels)[None, :, None, None]
    values = t.values * (1000.0 / p) ** 0.2854
    return GridField(name="theta", units="K", times=t.times, levels=t.levels,
                     lats=t.lats.copy(), lons=t.lons.copy(), values=values)


def _humidity(levels):
    bump = _bump()
    slabs = [(0.014 - 8.0e-6 * (1000.0 - level)) * (0.5 + 0.8 * bump)
             for level in levels]
    return _field("q", "kg kg-1", levels, slabs)


def _geopotential_500(depth=120.0):
    bump = _bump()
    yy, _ = _unit_coords()
    return _field("z", "gpm", [500.0], [5760.0 - depth * bump + 30.0 * yy])


def _mslp_pair(amp0=10.0, amp1=16.0):
    bump = _bump()
    yy, _ = _unit_coords()
    return _field("msl", "hPa", [0.0],
                  [1012.0 + amp0 * bump - 4.0 * yy,
                   1008.0 + amp1 * bump - 6.0 * yy],
                  times=(T_MINUS_24H, T0))


def _mslp_single(amp=12.0):
    bump = _bump()
    yy, _ = _unit_coords()
    return _field("msl", "hPa", [0.0], [1010.0 + amp * bump - 5.0 * yy])


def _sounding():
    p = np.array([1000.0, 925.0, 850.0, 700.0, 600.0, 500.0, 400.0, 300.0])
    t = np.array([302.0, 298.0, 293.5, 284.0, 276.0, 266.5, 255.0, 241.0])
    td = t - np.array([2.0, 2.5, 3.0, 7.0, 12.0, 18.0, 26.0, 36.0])
    return Sounding(p=p, t=t, td=td)


def _clim_for(value: float, k: float) -> list[float]:
    sigma = max(abs(value) * 0.1, 1e-9)
    mu = value - k * sigma
    return [mu - sigma] * 20 + [mu + sigma] * 20


def _evidence_clims(plan: Mapping[str, float | None],
                    fields: Mapping[str, GridField],
                    sounding: Sounding | None,
                    index_params: Mapping[str, Mapping]) -> dict[str, list[float]]:
    reg = registry()
    clims: dict[str, list[float]] = {}
    for index_id, k in plan.items():
        if k is None:
            # the computation is scripted to fail; any sample will do
            clims[index_id] = [-1.0e-5] * 20 + [1.0e-5] * 20
            continue
        spec = reg[index_id]
        inputs = {var: (sounding if var == "sounding" else fields[var])
                  for var in spec.required_vars}
        value = compute_index(index_id, inputs,
                              index_params.get(index_id, {}), reg=reg).value
        clims[index_id] = _clim_for(value, k)
    return clims


def _meta(case_id: str, candidates: Mapping[str, float],
          index_params: Mapping[str, Mapping]) -> dict:
    return {"case_id": case_id, "valid_time": T0, "region": dict(REGION),
            "sounding_name": "sounding",
            "prescan_candidates": dict(candidates),
            "index_params": {k: dict(v) for k, v in index_params.items()}}


# ---------------------------------------------------------------------------
# scenarios

def _coldwave_accept():
    u, v = _wind([850.0])
    fields = {"u": u, "v": v, "z": _geopotential_500(depth=-160.0),
              "msl": _mslp_pair(amp0=8.0, amp1=22.0)}
    index_params = {
        "Cold High Pressure Intensity": {"region": REGION, "time": T0},
        "Polar Vortex Center Geopotential Height":
            {"region": REGION, "level": 500.0, "time": T0},
        "24-h Pressure Change Difference":
            {"points": [[28.0, 104.0], [22.0, 108.0]],
             "times": [T_MINUS_24H, T0]},
    }
    plan = {"Cold High Pressure Intensity": 3.0,
            "Polar Vortex Center Geopotential Height": 3.0,
            "24-h Pressure Change Difference": 0.5}
    clims = _evidence_clims(plan, fields, None, index_params)
    candidates = {"t2m_change_24h": -16.0}
    clims["t2m_change_24h"] = [-9.0 + 0.2 * i for i in range(40)]
    return fields, {}, clims, _meta("coldwave_accept", candidates, index_params)


def _rainstorm_replan():
    levels = [925.0, 850.0, 500.0]          # no 200 hPa: one index must fail
    u, v = _wind(levels, u_amp=14.0, v_amp=9.0)
    t = _temperature(levels, warm=4.0)
    fields = {"u": u, "v": v, "t": t, "td": _dewpoint(t), "theta": _theta(t),
              "z": _geopotential_500()}
    sounding = _sounding()
    index_params = {
        "Low-Level Divergence Extrema": {"region": REGION, "level": 925.0, "time": T0},
        "Positive Vorticity": {"region": REGION, "level": 850.0, "time": T0},
        "High-Level Convergence Extrema": {"region": REGION, "level": 200.0, "time": T0},
        "Vertical Wind Shear": {"point": [25.0, 105.0],
                                "levels_pair": [925.0, 500.0], "time": T0},
        "Frontogenesis Function Center Value":
            {"region": REGION, "level": 850.0, "time": T0},
        "CAPE": {},
        "Equiv. Potential Temp Diff (850-500hPa)": {"levels_pair": [850.0, 500.0]},
        "Warm Advection Center Intensity": {"region": REGION, "level": 850.0, "time": T0},
    }
    plan = {"Low-Level Divergence Extrema": 0.5,
            "Positive Vorticity": 3.0,
            "High-Level Convergence Extrema": None,
            "Vertical Wind Shear": 0.5,
            "Frontogenesis Function Center Value": 0.5,
            "CAPE": 3.0,
            "Equiv. Potential Temp Diff (850-500hPa)": 3.0,
            "Warm Advection Center Intensity": 3.0}
    clims = _evidence_clims(plan, fields, sounding, index_params)
    candidates = {"precip_24h": 180.0}
    clims["precip_24h"] = [20.0 + 2.0 * i for i in range(40)]
    return (fields, {"sounding": sounding}, clims,
            _meta("rainstorm_replan", candidates, index_params))


def _heatwave_exhaust():
    levels = [925.0, 850.0, 700.0]
    t = _temperature(levels, warm=8.0)
    bump = _bump()
    fields = {"z": _geopotential_500(depth=-140.0), "msl": _mslp_single(),
              "w": _field("w", "Pa s-1", [500.0], [-0.8 * bump + 0.2]),
              "t": t, "q": _humidity(levels)}
    index_params = {
        "500hPa Geopotential Height": {"region": REGION, "level": 500.0, "time": T0},
        "Surface Low-Pressure": {"region": REGION, "time": T0},
        "Maximum Vertical Velocity": {"region": REGION, "level": 500.0, "time": T0},
        "Temp Standardized Anomaly (SA)":
            {"point": [25.0, 105.0], "level": 850.0, "time": T0,
             "mu": 288.0, "sigma": 2.5},
        "Temperature": {"region": REGION, "level": 850.0, "time": T0},
        "Average Relative Humidity":
            {"region": REGION, "layer": [925.0, 700.0], "time": T0},
        "Specific Humidity": {"region": REGION, "level": 925.0, "time": T0},
    }
    plan = {"500hPa Geopotential Height": 0.5,
            "Surface Low-Pressure": 0.5,
            "Maximum Vertical Velocity": 3.0,
            "Temp Standardized Anomaly (SA)": 0.5,
            "Temperature": 0.5,
            "Average Relative Humidity": 0.5,
            "Specific Humidity": 0.5}
    clims = _evidence_clims(plan, fields, None, index_params)
    candidates = {"t2m_max": 312.0}
    clims["t2m_max"] = [295.0 + 0.3 * i for i in range(40)]
    return fields, {}, clims, _meta("heatwave_exhaust", candidates, index_params)


def _gale_accept():
    levels = [1000.0, 850.0, 200.0]
    u, v = _wind(levels, u_amp=16.0, v_amp=10.0)
    fields = {"u": u, "v": v, "z": _geopotential_500(),
              "msl": _mslp_pair(amp0=6.0, amp1=18.0)}
    index_params = {
        "Positive Vorticity": {"region": REGION, "level": 850.0, "time": T0},
        "Jet Intensity": {"region": REGION, "level": 200.0, "time": T0},
        "Surface Wind Speed": {"region": REGION, "level": 1000.0, "time": T0},
        "Vertical Wind Shear": {"point": [25.0, 105.0],
                                "levels_pair": [850.0, 200.0], "time": T0},
        "24-h Pressure Change Difference":
            {"points": [[27.0, 103.0], [23.0, 107.0]],
             "times": [T_MINUS_24H, T0]},
    }
    plan = {"Positive Vorticity": 3.0,
            "Jet Intensity": 3.0,
            "Surface Wind Speed": 3.0,
            "Vertical Wind Shear": 3.0,
            "24-h Pressure Change Difference": 0.5}
    clims = _evidence_clims(plan, fields, None, index_params)
    candidates = {"wind10_max": 28.0}
    clims["wind10_max"] = [10.0 + 0.25 * i for i in range(40)]
    return fields, {}, clims, _meta("gale_accept", candidates, index_params)


def _rainstorm_moisture():
    levels = [925.0, 850.0, 700.0, 500.0, 200.0]
    u, v = _wind(levels, u_amp=12.0, v_amp=8.0)
    t = _temperature(levels, warm=3.0)
    fields = {"u": u, "v": v, "t": t, "td": _dewpoint(t), "theta": _theta(t),
              "q": _humidity(levels), "z": _geopotential_500()}
    sounding = _sounding()
    index_params = {
        "Low-Level Divergence Extrema": {"region": REGION, "level": 925.0, "time": T0},
        "Positive Vorticity": {"region": REGION, "level": 850.0, "time": T0},
        "High-Level Convergence Extrema": {"region": REGION, "level": 200.0, "time": T0},
        "Vertical Wind Shear": {"point": [25.0, 105.0],
                                "levels_pair": [850.0, 200.0], "time": T0},
        "Frontogenesis Function Center Value":
            {"region": REGION, "level": 850.0, "time": T0},
        "CAPE": {},
        "Equiv. Potential Temp Diff (850-500hPa)": {"levels_pair": [850.0, 500.0]},
        "Warm Advection Center Intensity": {"region": REGION, "level": 850.0, "time": T0},
        "Precipitable Water (PWAT)": {},
        "Water Vapor Flux Convergence Intensity":
            {"region": REGION, "level": 925.0, "time": T0},
        "Moisture Flux Divergence": {"region": REGION, "level": 925.0, "time": T0},
        "Average Relative Humidity":
            {"region": REGION, "layer": [925.0, 700.0], "time": T0},
    }
    plan = {"Low-Level Divergence Extrema": 0.5,
            "Positive Vorticity": 3.0,
            "High-Level Convergence Extrema": 0.5,
            "Vertical Wind Shear": 0.5,
            "Frontogenesis Function Center Value": 0.5,
            "CAPE": 0.5,
            "Equiv. Potential Temp Diff (850-500hPa)": 0.5,
            "Warm Advection Center Intensity": 0.5,
            "Precipitable Water (PWAT)": 3.0,
            "Water Vapor Flux Convergence Intensity": 3.0,
            "Moisture Flux Divergence": 3.0,
            "Average Relative Humidity": 0.5}
    clims = _evidence_clims(plan, fields, sounding, index_params)
    candidates = {"precip_24h": 210.0}
    clims["precip_24h"] = [25.0 + 2.0 * i for i in range(40)]
    return (fields, {"sounding": sounding}, clims,
            _meta("rainstorm_moisture", candidates, index_params))


def _heatwave_insufficient():
    # same case as the exhaust run, but the vertical-velocity field is
    # simply absent, so cycle 1 cannot reach the completeness floor
    fields, soundings, clims, meta = _heatwave_exhaust()
    del fields["w"]
    meta["case_id"] = "heatwave_insufficient"
    return fields, soundings, clims, meta


_BUILDERS = {
    "coldwave_accept": _coldwave_accept,
    "rainstorm_replan": _rainstorm_replan,
    "heatwave_exhaust": _heatwave_exhaust,
    "gale_accept": _gale_accept,
    "rainstorm_moisture": _rainstorm_moisture,
    "heatwave_insufficient": _heatwave_insufficient,
}


def build_case(name: str, root) -> CaseStore:
    """Materialize the named scenario under `root` and open it."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
    fields, soundings, climatology, meta = builder()
    return write_store(root, fields=fields, soundings=soundings,
                       climatology=climatology, meta=meta)
