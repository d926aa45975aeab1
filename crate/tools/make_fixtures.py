#!/usr/bin/env python3
"""Regenerate the bundled reconstruction fixture under data/fixtures/.

The tables are a synthetic reconstruction of world primary-energy, GDP and
population series, 1820-2016. They are built from published aggregate
figures (period growth rates, epoch growth factors, approximate levels and
fuel mix) and from the documented shape of the 20th-century residual, not
copied from the original databases. See data/fixtures/README.md.

Usage: python3 tools/make_fixtures.py [OUT_DIR]
"""
import math
import sys
from pathlib import Path

import numpy as np

YEARS = np.arange(1820, 2017)


def loglin(anchors):
    """Geometric interpolation through (year, value) anchors onto YEARS."""
    ys = np.array([a[0] for a in anchors], dtype=float)
    vs = np.log(np.array([a[1] for a in anchors], dtype=float))
    return np.exp(np.interp(YEARS, ys, vs))


def lin(anchors):
    ys = np.array([a[0] for a in anchors], dtype=float)
    vs = np.array([a[1] for a in anchors], dtype=float)
    return np.interp(YEARS, ys, vs)


def idx(year):
    return int(year) - 1820


# ---------------------------------------------------------------- population
POP = [
    (1820, 1.040), (1850, 1.040 * 1.005 ** 30), (1870, None), (1880, 1.40),
    (1890, 1.49), (1900, None), (1910, 1.72), (1920, None), (1930, 2.05),
    (1940, 2.28), (1950, None), (1960, 3.02), (1970, 3.69), (1980, None),
    (1990, 5.32), (2000, 6.12), (2010, 6.93), (2016, None),
]
# Table-level period rates: 0.5, 0.3, 0.7, 0.8 | 1.04, 1.9, 1.42 %/yr
pop_anchor = {1820: 1.040}
pop_anchor[1850] = pop_anchor[1820] * 1.005 ** 30
pop_anchor[1870] = pop_anchor[1850] * 1.003 ** 20
pop_anchor[1900] = pop_anchor[1870] * 1.007 ** 30
pop_anchor[1920] = pop_anchor[1900] * 1.008 ** 20
pop_anchor[1950] = pop_anchor[1920] * 1.0104 ** 30
pop_anchor[1980] = pop_anchor[1950] * 1.019 ** 30
pop_anchor[2016] = pop_anchor[1980] * 1.0142 ** 36
pop_pts = sorted({**{y: v for y, v in POP if v is not None}, **pop_anchor}.items())
population = loglin(pop_pts) * 1e9

# -------------------------------------------------------------- total energy
e_anchor = {1820: 15.5}
e_anchor[1850] = e_anchor[1820] * 1.010 ** 30
e_anchor[1870] = e_anchor[1850] * 1.011 ** 20
e_anchor[1900] = e_anchor[1870] * 1.018 ** 30
e_anchor[1920] = e_anchor[1900] * 1.019 ** 20
e_anchor[1950] = e_anchor[1920] * 1.016 ** 30
e_anchor[1980] = e_anchor[1950] * 1.0375 ** 30
e_anchor[2016] = e_anchor[1980] * 1.019 ** 36
E_SHAPE = [
    (1830, 17.0), (1840, 18.8), (1860, 23.3), (1880, 30.5), (1890, 36.5),
    (1910, 55.0), (1913, 58.5), (1918, 60.0), (1929, 80.0), (1932, 72.0),
    (1937, 84.0), (1940, 90.0), (1944, 94.0), (1946, 88.0), (1960, 150.0),
    (1970, 232.0), (1973, 262.0), (1975, 265.0), (1979, 305.0), (1982, 305.0),
    (1990, 365.0), (2000, 420.0), (2008, 525.0), (2009, 520.0),
]
energy = loglin(sorted({**dict(E_SHAPE), **e_anchor}.items()))
e_norm = energy / energy[0]
cum_e = np.concatenate([[0.0], np.cumsum(0.5 * (e_norm[1:] + e_norm[:-1]))])

# ----------------------------------------------------------------- residual
# Anchor values of A follow from the period GDP and energy growth rates.
a_anchor = {1820: 1.0}
a_anchor[1850] = a_anchor[1820] * (1.009 / 1.010) ** 30
a_anchor[1870] = a_anchor[1850] * (1.012 / 1.011) ** 20
a_anchor[1900] = a_anchor[1870] * (1.018 / 1.018) ** 30
a_anchor[1920] = a_anchor[1900] * (1.015 / 1.019) ** 20
a_anchor[1950] = a_anchor[1920] * (1.0247 / 1.016) ** 30
a_anchor[1980] = a_anchor[1950] * (1.0442 / 1.0375) ** 30
a_anchor[2016] = a_anchor[1980] * (1.0316 / 1.019) ** 36

ln_a = np.zeros(len(YEARS))

# Epoch 1: slow drift between anchors plus a decadal business cycle that
# vanishes on every anchor year.
ep1 = YEARS <= 1920
drift = np.log(loglin(sorted(a_anchor.items())))
cycle = 0.012 * np.sin(2 * np.pi * (YEARS - 1820) / 10.0)
ln_a[ep1] = (drift + cycle)[ep1]

# Epoch 2: ln A = chi0 * cumE + D(year).
chi0 = 0.00047


def logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def step(center, height, width=0.55):
    return height * logistic((YEARS - center + 0.5) / width)


def dip(center, depth, recovery=(0.75, 0.45, 0.2)):
    out = np.zeros(len(YEARS))
    out[idx(center)] = -depth
    for k, frac in enumerate(recovery, start=1):
        out[idx(center) + k] = -depth * frac
    return out


def d_anchor(year):
    return math.log(a_anchor[year]) - chi0 * cum_e[idx(year)]


# Booms of the post-war era: steps of a few percent in A.
booms = [(1955, 0.010), (1964, 0.045), (1969, 0.008), (1974, 0.044),
         (1980, 0.045), (1988, 0.020), (1997, 0.055), (2006, 0.052)]
s_boom = sum(step(c, h) for c, h in booms)

# 1920s catch-up from the epoch-1 level to the new regime.
d1920 = d_anchor(1920)
catch_up = d1920 + (0.03 - d1920) * logistic((YEARS - 1923.5) / 1.4)
wars = dip(1931, 0.035, (0.8, 0.5, 0.2)) + dip(1940, 0.06) + dip(1945, 0.075, (0.7, 0.4, 0.15))

d = catch_up + wars + s_boom
# Pin D to its anchor values with a piecewise-linear (in years) correction.
knots = [1920, 1950, 1980, 2016]
corr = np.interp(YEARS, knots, [d_anchor(k) - d[idx(k)] for k in knots])
d = d + corr
ep2 = YEARS > 1920
ln_a[ep2] = (chi0 * cum_e + d)[ep2]
ln_a[idx(1920)] = math.log(a_anchor[1920])
residual = np.exp(ln_a)

Y1820 = 1.20
gdp = Y1820 * residual * e_norm

# ----------------------------------------------------------- energy breakdown
pc_food = lin([(1820, 3.3), (1900, 3.6), (1950, 3.8), (2016, 4.4)])  # GJ/person/yr
food = population * pc_food / 1e9
fodder = lin([(1820, 2.6), (1850, 3.3), (1900, 7.0), (1920, 9.5), (1950, 9.0),
              (1980, 6.0), (2016, 4.0)])
fuelwood = loglin([(1820, 8.6), (1850, 9.6), (1900, 13.0), (1950, 20.0),
                   (1980, 28.0), (2016, 40.0)])
modern = energy - food - fodder - fuelwood
assert (modern > 0).all(), "traditional sources exceed total"


def share(center, width, start):
    s = logistic((YEARS - center) / width)
    s[YEARS < start] = 0.0
    return s


w_coal = np.ones(len(YEARS))
w_oil = 2.2 * share(1955, 14.0, 1860)
w_gas = 1.3 * share(1975, 16.0, 1885)
w_ren = 0.12 * share(1935, 15.0, 1890) + 0.25 * share(2010, 6.0, 1890)
w_nuc = 0.22 * share(1978, 6.0, 1956)
w_sum = w_coal + w_oil + w_gas + w_ren + w_nuc
cats = {
    "food": food,
    "fuelwood": fuelwood,
    "fodder": fodder,
    "coal": modern * w_coal / w_sum,
    "oil": modern * w_oil / w_sum,
    "natural_gas": modern * w_gas / w_sum,
    "renewable_electricity": modern * w_ren / w_sum,
    "nuclear": modern * w_nuc / w_sum,
}
# Fix the last category so each row sums to the total exactly.
cats["nuclear"] = energy - sum(v for k, v in cats.items() if k != "nuclear")
cats["nuclear"][cats["nuclear"] < 0] = 0.0


def fmt(x):
    return repr(float(x))


def write(out, name, header, rows):
    path = out / name
    with path.open("w") as f:
        f.write(header + "\n")
        for r in rows:
            f.write(",".join(r) + "\n")


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    names = list(cats)
    write(out, "pec_breakdown.csv", "year," + ",".join(names),
          ([str(y)] + [f"{cats[n][i]:.6f}" for n in names] for i, y in enumerate(YEARS)))
    write(out, "gdp.csv", "year,value", ([str(y), f"{gdp[i]:.6f}"] for i, y in enumerate(YEARS)))
    write(out, "population.csv", "year,value",
          ([str(y), f"{population[i]:.0f}"] for i, y in enumerate(YEARS)))
    mass = fuelwood / 12.5
    write(out, "biomass_mass.csv", "year,mass_gt", ([str(y), f"{mass[i]:.6f}"] for i, y in enumerate(YEARS)))
    (out / "manifest.toml").write_text(MANIFEST)


MANIFEST = """# Reconstruction fixture, world 1820-2016.

[pec]
path = "pec_breakdown.csv"
unit = "EJ_per_year"
provenance = "reconstructed world PEC by source (eight categories), fuelwood at 33% RH"

[gdp]
path = "gdp.csv"
unit = "trillion_USD2011_PPP"
provenance = "reconstructed world GDP, constant 2011 USD PPP"

[population]
path = "population.csv"
unit = "persons"
provenance = "reconstructed world population"

[biomass_mass]
path = "biomass_mass.csv"
unit = "Gt_per_year"
provenance = "fuelwood mass implied by 12.5 MJ/kg"
"""

if __name__ == "__main__":
    main()
