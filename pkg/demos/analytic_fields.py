"""Check the spherical operators against closed forms on analytic winds.

Solid-body rotation has a known vorticity and exactly zero divergence;
a smooth wave field exposes the second-order truncation error of the
central stencils, which should shrink about fourfold per halving of the
grid spacing.
"""

import numpy as np

from wxdiag.constants import EARTH_RADIUS
from wxdiag.grid import GridSpec, gen_analytic
from wxdiag.spherical import divergence, vorticity


def wave_pair(n):
    spec = GridSpec(20.0, 40.0, n, 100.0, 120.0, n)
    lam = np.deg2rad(np.linspace(100.0, 120.0, n))[None, :]
    phi = np.deg2rad(np.linspace(20.0, 40.0, n))[:, None]
    u_vals = 10.0 * np.sin(3 * lam) * np.cos(2 * phi) * np.ones_like(phi)
    v_vals = 5.0 * np.cos(2 * lam) * np.sin(3 * phi) * np.ones_like(lam)
    u, v = gen_analytic("solid_body_rotation", {"u0": 1.0}, spec)
    u = u.with_values(u_vals[None, None], name="u")
    v = v.with_values(v_vals[None, None], name="v")
    return u, v


def truth(u):
    lam = np.deg2rad(u.lons)[None, :]
    phi = np.deg2rad(u.lats)[:, None]
    cos, sin = np.cos(phi), np.sin(phi)
    zeta = (-10.0 * np.sin(2 * lam) * np.sin(3 * phi)
            - 10.0 * np.sin(3 * lam) * (-2 * np.sin(2 * phi) * cos
                                        - np.cos(2 * phi) * sin)) \
        / (EARTH_RADIUS * cos)
    div = (30.0 * np.cos(3 * lam) * np.cos(2 * phi)
           + 5.0 * np.cos(2 * lam) * (3 * np.cos(3 * phi) * cos
                                      - np.sin(3 * phi) * sin)) \
        / (EARTH_RADIUS * cos)
    return zeta, div


def main():
    spec = GridSpec(35.0, 55.0, 21, 100.0, 120.0, 21)
    u, v = gen_analytic("solid_body_rotation", {"u0": 10.0}, spec)
    i = int(np.nonzero(np.isclose(u.lats, 45.0))[0][0])
    got = vorticity(u, v).values[0, 0, i, 10]
    want = 2.0 * 10.0 * np.sin(np.deg2rad(45.0)) / EARTH_RADIUS
    print("solid-body rotation, 1-degree grid")
    print(f"  vorticity at 45N: {got:.6e} vs analytic {want:.6e} "
          f"({abs(got - want) / want * 100:.3f}% off)")
    print(f"  max |divergence|: {np.abs(divergence(u, v).values).max():.2e}\n")

    print("wave field truncation error (max over interior)")
    print(f"{'n':>4s} {'vorticity':>12s} {'divergence':>12s}")
    prev = None
    for n in (21, 41, 81):
        fu, fv = wave_pair(n)
        zeta_true, div_true = truth(fu)
        ez = np.abs(vorticity(fu, fv).values[0, 0] - zeta_true)[1:-1, 1:-1].max()
        ed = np.abs(divergence(fu, fv).values[0, 0] - div_true)[1:-1, 1:-1].max()
        note = ""
        if prev:
            note = f"   ratios {prev[0] / ez:.2f}, {prev[1] / ed:.2f}"
        print(f"{n:4d} {ez:12.3e} {ed:12.3e}{note}")
        prev = (ez, ed)


if __name__ == "__main__":
    main()
