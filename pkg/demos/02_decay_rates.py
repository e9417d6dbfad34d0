#!/usr/bin/env python3
"""Exponential approach to the far-field constant.

Solving the Laplace strip problem with data cos(2 pi y1) under growing
heights, the top-slice oscillation decays like exp(-2 pi R): the slowest
lateral Fourier mode of the data sets the rate.  For the direction
(1, 2) the slowest mode of cos(2 pi (y1 + y2)) has one period along the
boundary of length sqrt 5, so the rate drops to 2 pi / sqrt 5.
"""

import numpy as np

from effbc import boundary_layer_limit, cosine_field, identity_tensor, make_rational_direction
from effbc.reports import SvgPlot

I2 = identity_tensor(2)

print("== axis direction (0, 1), data cos(2 pi y1) ==")
res = boundary_layer_limit(
    I2, cosine_field(2, [1, 0]), make_rational_direction([0, 1]),
    tolerance=1e-30, h=1 / 32, R_ladder=[0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
    stop_on_tolerance=False,
)
for R, osc in zip(res.heights_used, res.oscillations):
    print(f"  R = {R:5.2f}: top oscillation {osc:.3e}")
print(f"  fitted rate {res.decay_rate:.4f}  (2 pi = {2 * np.pi:.4f})")

print("\n== rotated direction (1, 2), data cos(2 pi (y1 + y2)) ==")
M = np.sqrt(5.0)
res2 = boundary_layer_limit(
    I2, cosine_field(2, [1, 1]), make_rational_direction([1, 2]),
    tolerance=1e-30, h=M / 32, R_ladder=[0.5 * M, 0.75 * M, 1.0 * M, 1.25 * M],
    stop_on_tolerance=False,
)
for R, osc in zip(res2.heights_used, res2.oscillations):
    print(f"  R = {R:5.2f}: top oscillation {osc:.3e}")
print(f"  fitted rate {res2.decay_rate:.4f}  (2 pi / sqrt 5 = {2 * np.pi / M:.4f})")

plot = SvgPlot(title="top-slice oscillation vs strip height", xlabel="R",
               ylabel="oscillation", logy=True)
plot.add_points(res.heights_used, res.oscillations, label="(0,1)")
plot.add_points(res2.heights_used, res2.oscillations, color="#2ca02c", label="(1,2)")
with open("decay_rates.svg", "w") as f:
    f.write(plot.to_svg())
print("\nwrote decay_rates.svg")
