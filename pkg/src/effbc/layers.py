"""Boundary layer limits, shift profiles, and exponential decay fits.

The far-field constant of a strip solve is read from the top slice of a
Neumann-top solve: the natural condition converges to the free constant
without knowing it in advance.  Limits are extracted on a height ladder
R = 4M, 8M, 16M, ... (M the longest boundary period) until the top-slice
oscillation drops below tolerance; the reported error bar combines that
oscillation with the change of the constant across the last two rungs,
plus a small algebraic floor.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lattice import RationalDirection
from .solve import NEUMANN, StripProblem, solve_strip

__all__ = [
    "BoundaryLayerResult",
    "ShiftProfile",
    "boundary_layer_limit",
    "ladder_limit",
    "shift_profile",
    "fit_decay",
]

_OSC_FLOOR = 1e-13


def slice_stats(values):
    """(mean vector, oscillation) of a boundary-parallel slice (N, *lat)."""
    flat = values.reshape(values.shape[0], -1)
    mean = flat.mean(axis=1)
    osc = float((flat.max(axis=1) - flat.min(axis=1)).max())
    return mean, osc


@dataclass
class BoundaryLayerResult:
    value: np.ndarray  # far-field constant, (N,)
    decay_rate: float  # fitted rate per unit height; inf when degenerate
    error_bar: float
    heights_used: list
    converged: bool
    oscillations: list = field(default_factory=list)
    values_per_height: list = field(default_factory=list)
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    def summary(self):
        return {
            "value": np.asarray(self.value).tolist(),
            "decay_rate": None if not np.isfinite(self.decay_rate) else self.decay_rate,
            "error_bar": self.error_bar,
            "heights_used": list(self.heights_used),
            "converged": bool(self.converged),
            "oscillations": [float(o) for o in self.oscillations],
        }


def fit_decay(heights, oscillations, min_points=2):
    """Least-squares fit osc ~ C exp(-rate * R) on the log scale.

    Returns a dict with C, rate (per unit height), the fit residual and a
    ``degenerate`` flag (all oscillations at the floor, e.g. constant
    data).  Points at or below the floor are excluded from the fit.
    """
    heights = np.asarray(heights, dtype=float)
    osc = np.asarray(oscillations, dtype=float)
    floor = _OSC_FLOOR * max(1.0, float(osc.max(initial=0.0)))
    keep = osc > floor
    if keep.sum() < min_points:
        return {"C": 0.0, "rate": float("inf"), "residual": 0.0, "degenerate": True}
    x = heights[keep]
    y = np.log(osc[keep])
    coeffs, res = np.polyfit(x, y, 1, full=True)[:2]
    rate = -float(coeffs[0])
    C = float(np.exp(coeffs[1]))
    residual = float(np.sqrt(res[0] / keep.sum())) if len(res) else 0.0
    return {"C": C, "rate": rate, "residual": residual, "degenerate": False}


def ladder_limit(problem_for_height, ladder, tolerance, stop_on_tolerance=True, min_rungs=2):
    """Run strip solves over a height ladder and extract the far field.

    ``problem_for_height`` maps a height R to a StripProblem with a
    Neumann top.  Never silent: when the ladder is exhausted above
    tolerance the result carries converged=False plus diagnostics.
    """
    heights, means, oscs = [], [], []
    iters = 0
    solutions = []
    for R in ladder:
        problem = problem_for_height(R)
        sol = solve_strip(problem)
        solutions.append(sol)
        mean, osc = slice_stats(sol.top_slice())
        heights.append(float(R))
        means.append(mean)
        oscs.append(osc)
        iters += sol.iterations
        if stop_on_tolerance and len(heights) >= min_rungs and osc <= tolerance:
            break
    value = means[-1]
    ladder_term = float(np.max(np.abs(means[-1] - means[-2]))) if len(means) > 1 else 0.0
    floor = 1e-12 * (1.0 + float(np.max(np.abs(value))))
    bar = oscs[-1] + ladder_term + floor
    fit = fit_decay(heights, oscs)
    converged = oscs[-1] <= tolerance
    result = BoundaryLayerResult(
        value=value,
        decay_rate=fit["rate"],
        error_bar=bar,
        heights_used=heights,
        converged=converged,
        oscillations=oscs,
        values_per_height=[m.tolist() for m in means],
        iterations=iters,
        diagnostics={"decay_fit": fit},
    )
    return result, solutions


def _mesh_for(xi, R, h):
    """Mesh keywords for a ladder rung: exact divisibility when h allows
    it, otherwise per-direction cell counts rounded up (d=3 directions
    with incommensurable period lengths)."""
    import math

    lengths = [math.sqrt(float(ell @ ell)) for ell in xi.periods] + [float(R)]
    exact = all(abs(round(L / h) - L / h) <= 1e-9 * max(1.0, L / h) for L in lengths)
    if exact:
        return {"h": h}
    cells = tuple(max(2, math.ceil(L / h - 1e-9)) for L in lengths)
    return {"cells": cells}


def boundary_layer_limit(
    operator,
    data,
    xi: RationalDirection,
    s=0.0,
    tolerance=1e-8,
    h=None,
    tau=0.0,
    R_ladder=None,
    max_factor=64,
    rtol=1e-10,
    stop_on_tolerance=True,
    keep_solutions=False,
):
    """Far-field constant of the half-space problem in direction xi, shift s.

    The ladder defaults to R = 4M, 8M, ..., 64M.  Heights are multiples
    of M = max |ell_j| so a spacing h dividing the periods also divides
    every rung.
    """
    M = xi.period_bound
    if R_ladder is None:
        R_ladder = [4.0 * M]
        while R_ladder[-1] < max_factor * M - 1e-12:
            R_ladder.append(2.0 * R_ladder[-1])
    if h is None:
        h = min(0.125, M / 16.0)

    def make(R):
        return StripProblem(
            xi=xi, operator=operator, data=data, R=R, s=s,
            top_bc=NEUMANN, tau=tau, rtol=rtol, **_mesh_for(xi, R, h),
        )

    result, solutions = ladder_limit(make, R_ladder, tolerance, stop_on_tolerance)
    if keep_solutions:
        result.diagnostics["solutions"] = solutions
    return result


@dataclass
class ShiftProfile:
    """Sampled map s -> far-field constant over one period of shifts.

    The profile is 1/|xi| periodic; ``mean`` is the trapezoid average
    over the period, which on a uniform periodic grid is the plain sample
    average.
    """

    xi: RationalDirection
    shifts: np.ndarray
    samples: list  # list of (s, BoundaryLayerResult)
    period: float
    mean: np.ndarray
    n_components: int = 1

    @property
    def values(self):
        return np.stack([r.value for _, r in self.samples])  # (S, N)

    @property
    def max_error_bar(self):
        return max(r.error_bar for _, r in self.samples)

    def interpolator(self, kind="cubic"):
        """Periodic interpolant of the profile; returns f(t) -> (N,) array."""
        from scipy.interpolate import CubicSpline

        s = np.append(self.shifts, self.period)
        v = np.vstack([self.values, self.values[:1]])
        if kind == "cubic":
            spline = CubicSpline(s, v, axis=0, bc_type="periodic")
            return lambda t: spline(np.mod(t, self.period))
        if kind == "linear":
            def f(t):
                tm = np.mod(t, self.period)
                out = np.empty(np.shape(tm) + (v.shape[1],))
                for j in range(v.shape[1]):
                    out[..., j] = np.interp(tm, s, v[:, j])
                return out
            return f
        raise ValueError(f"unknown interpolation kind {kind!r}")

    def interpolation_gap(self):
        """Max difference between cubic and linear interpolants at midpoints;
        an honest computable proxy for the profile interpolation error."""
        mids = self.shifts + 0.5 * self.period / len(self.shifts)
        c = self.interpolator("cubic")(mids)
        l = self.interpolator("linear")(mids)
        return float(np.max(np.abs(c - l)))

    def all_converged(self):
        return all(r.converged for _, r in self.samples)


def shift_profile(
    operator,
    data,
    xi: RationalDirection,
    sample_count=16,
    tolerance=1e-8,
    h=None,
    tau=0.0,
    workers=1,
    **limit_kwargs,
) -> ShiftProfile:
    """Sample the far-field constant over shifts s in [0, 1/|xi|).

    Samples are independent solves; with ``workers`` > 1 they run on a
    thread pool with results assembled in deterministic s order.
    """
    if sample_count < 8:
        raise ValueError("sample_count must be at least 8")
    period = 1.0 / xi.norm
    shifts = np.arange(sample_count) * (period / sample_count)

    def one(s):
        return boundary_layer_limit(
            operator, data, xi, s=s, tolerance=tolerance, h=h, tau=tau, **limit_kwargs
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, shifts))
    else:
        results = [one(s) for s in shifts]
    values = np.stack([r.value for r in results])
    mean = values.mean(axis=0)
    return ShiftProfile(
        xi=xi,
        shifts=shifts,
        samples=list(zip(shifts.tolist(), results)),
        period=period,
        mean=mean,
        n_components=values.shape[1],
    )
