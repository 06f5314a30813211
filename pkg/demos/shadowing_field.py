"""
A look at the PPP shadowing field
=================================

Shadowing values live on a Poisson point process and every link takes the
value of the nearest point to its key (here the link midpoint).
"""

import numpy as np

from bsdesign.channel import ScenarioParams, build_shadowing_field, channel_gain_db, ppp_intensity

params = ScenarioParams()

# intensity chosen so the mean nearest-neighbour distance equals d_cor
lam = ppp_intensity("midpoint-2d", params.d_cor)
print(f"intensity {lam:.3e} /m^2, about {lam * params.area_side**2:.2f} points per field")

field = build_shadowing_field(params, "midpoint-2d", seed=0)
print("points in this draw:", len(field))
print("values (dB):", np.round(field.values, 2))

# the same midpoint gives the same shadowing, whatever the endpoints
a = field.query([100.0, 100.0], [300.0, 300.0])
b = field.query([0.0, 400.0], [400.0, 0.0])
print("two links sharing a midpoint:", a, b)

# path loss plus shadowing along a line away from a transmitter
tx = np.array([500.0, 500.0])
for d in (5, 10, 50, 100, 300):
    g = channel_gain_db(params, field, tx, tx + [d, 0.0])
    print(f"d = {d:>3} m  gain {g:8.2f} dB")

# spread across many independent fields
vals = [build_shadowing_field(params, "midpoint-2d", s).query([200.0, 200.0], [800.0, 600.0]) for s in range(2000)]
print(f"std over 2000 fields: {np.std(vals):.2f} dB (sigma_s = {params.sigma_s})")
