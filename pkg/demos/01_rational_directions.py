#!/usr/bin/env python3
"""Rational directions, boundary period lattices, Diophantine approximants.

A half-space with a rational normal xi in Z^d sees Z^d-periodic boundary
data as periodic along the boundary: the periods are a basis of the
lattice Z^d intersect xi-perp.  This script reduces a few directions,
prints their period bases and the length scale M that controls strip
widths, then approximates an irrational direction by rationals under a
growing denominator budget and watches the Dirichlet constant.
"""

import numpy as np

from effbc import brute_force_approximate, decompose_direction, dirichlet_approximate, make_rational_direction

print("== period lattices ==")
for v in ([2, 4], [1, 1], [1, 2], [0, 0, 1], [1, 1, 1], [2, 3, 5]):
    rd = make_rational_direction(v)
    periods = ", ".join(str(p.tolist()) for p in rd.periods)
    print(f"  {v} -> xi = {rd.xi.tolist()}, periods {periods}, M = {rd.period_bound:.4f}")

print("\n== splitting a nearby direction ==")
rd = make_rational_direction([0, 0, 1])
for eps in (0.2, 0.05, 0.01):
    n = np.array([0.0, -np.sin(eps), np.cos(eps)])
    da = decompose_direction(n, rd)
    err = np.linalg.norm(da.reconstruct() - n)
    print(f"  eps = {eps:5.2f}: split angle {da.epsilon:.4f}, eta = {da.eta.round(6)}, "
          f"reconstruction error {err:.1e}")

print("\n== Diophantine approximation of (1, golden ratio) ==")
phi = (1 + np.sqrt(5.0)) / 2.0
n = np.array([1.0, phi])
n /= np.linalg.norm(n)
for Q in (5, 10, 20, 50, 200):
    ap = dirichlet_approximate(n, Q)
    print(f"  Q = {Q:4d}: xi = {ap.xi.tolist()}, k = {ap.k:4d}, "
          f"error = {ap.error:.3e}, recorded constant = {ap.constant:.3f}")

print("\nexhaustive cross-check at Q = 12:", end=" ")
fast = dirichlet_approximate(n, 12)
brute = brute_force_approximate(n, 12)
print("scan equals enumeration" if abs(fast.error - brute.error) < 1e-14 else "MISMATCH")
