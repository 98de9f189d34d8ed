"""Physical constants shared by every kernel (SI unless noted)."""

EARTH_RADIUS = 6.371e6        # mean earth radius, m
G0 = 9.80665                  # standard gravity, m s-2
RHO_WATER = 1000.0            # density of liquid water, kg m-3
RD = 287.04                   # dry-air gas constant, J kg-1 K-1
CP = 1004.6                   # dry-air specific heat (const p), J kg-1 K-1
KAPPA = RD / CP               # Poisson exponent
EPSILON = 0.622               # Rd / Rv, molecular weight ratio of water vapour to dry air
P0 = 1000.0                   # reference pressure, hPa
T0C = 273.15                  # 0 degC, K
