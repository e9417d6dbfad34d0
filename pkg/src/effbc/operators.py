"""Monotone operator specifications and their numerical validation.

Nonlinear operators are maps p -> a(y, p) that are uniformly monotone,

    (a(y, p) - a(y, q)) . (p - q) >= lam |p - q|^2,

Lipschitz in p, and (optionally) positively 1-homogeneous.  Validation is
sampling based: declared constants are checked against empirical
quotients with a recorded witness, never assumed.

The builtin ``root kink`` operator is the fixed 3-d map

    a(p) = (p1, p2, p3 + f(p1, p3)),   f = (sqrt(8 p1^2 + 9 p3^2) + p3) / 8,

whose flux has a 1-homogeneous square-root kink at the origin.  Its
defining algebraic identity 8 f^2 - 2 p3 f - (p1^2 + p3^2) = 0 is checked
in the tests.  Restricting to gradients orthogonal to e1 gives the scalar
2-d map (p1, (9/8) p2 + (3/8)|p2|), which is the gradient of the convex
potential p1^2/2 + (9/16) p2^2 + (3/16) p2 |p2|.
"""

from __future__ import annotations

import numpy as np

from .errors import OperatorInvalidError

__all__ = [
    "QuadraticPotential",
    "KinkPotential2D",
    "RootKinkOperator",
    "ReducedRootKink",
    "DirectMap",
    "validate_operator",
    "homogeneity_check",
    "potential_gradient_consistency",
    "huber_abs",
    "huber_abs_integral",
]


def huber_abs(t, tau):
    """C^1 surrogate for |t| with width tau; exact |t| when tau <= 0.

    Quadratic cap t^2/(2 tau) inside |t| <= tau, |t| - tau/2 outside, so
    the value at 0 stays exactly 0 and the slope stays within [-1, 1].
    """
    t = np.asarray(t, dtype=float)
    if tau <= 0.0:
        return np.abs(t)
    a = np.abs(t)
    return np.where(a <= tau, t * t / (2.0 * tau), a - tau / 2.0)


def huber_abs_prime(t, tau):
    t = np.asarray(t, dtype=float)
    if tau <= 0.0:
        return np.sign(t)
    return np.clip(t / tau, -1.0, 1.0)


def huber_abs_integral(t, tau):
    """Odd antiderivative of huber_abs, zero at 0 (t |t| / 2 when tau <= 0)."""
    t = np.asarray(t, dtype=float)
    if tau <= 0.0:
        return t * np.abs(t) / 2.0
    a = np.abs(t)
    inner = a**3 / (6.0 * tau)
    outer = a * a / 2.0 - tau * a / 2.0 + tau * tau / 6.0
    return np.sign(t) * np.where(a <= tau, inner, outer)


class QuadraticPotential:
    """F(y, p) = 1/2 p . A(y) p for a scalar symmetric tensor A.

    The gradient flux a(y, p) = A(y) p makes the nonlinear solve agree
    with the linear path on the same mesh, which the tests exploit.
    """

    is_variational = True
    homogeneous = True

    def __init__(self, tensor):
        if tensor.n_components != 1:
            raise ValueError("quadratic potentials are scalar (N = 1)")
        if not tensor.is_symmetric():
            raise ValueError("quadratic potential needs a symmetric tensor")
        self.tensor = tensor
        self.d = tensor.d
        self.lam = tensor.lam
        self.lip = 1.0
        self.y_dependent = any(
            len(tensor.entries[a][b][0][0].terms) > 0
            for a in range(self.d)
            for b in range(self.d)
        )

    def _matrix(self, y):
        if y is None:
            return self.tensor(np.zeros((self.d, 1)))[:, :, 0, 0, 0]
        return self.tensor(y)[:, :, 0, 0]

    def flux(self, p, y=None, tau=0.0):
        A = self._matrix(y)
        return np.einsum("ab...,b...->a...", A, p)

    def potential(self, p, y=None, tau=0.0):
        return 0.5 * np.einsum("a...,ab...,b...->...", p, self._matrix(y), p)

    def describe(self):
        return {"kind": "quadratic_potential", "tensor": self.tensor.describe()}


class KinkPotential2D:
    """Scalar 2-d energy density with an |p2| kink in the flux.

    F(p) = p1^2/2 + (9/16) p2^2 + (3/8) * int_0^{p2} |t| dt, smoothed by
    ``tau`` at solve time.  The flux derivative stays in [3/4, 3/2] for
    every tau >= 0, so smoothing never degrades the ellipticity constants.
    """

    is_variational = True
    homogeneous = True
    y_dependent = False
    d = 2
    lam = 0.75
    lip = 1.5

    def flux(self, p, y=None, tau=0.0):
        out = np.empty_like(np.asarray(p, dtype=float))
        out[0] = p[0]
        out[1] = (9.0 / 8.0) * p[1] + (3.0 / 8.0) * huber_abs(p[1], tau)
        return out

    def potential(self, p, y=None, tau=0.0):
        return (
            0.5 * p[0] ** 2
            + (9.0 / 16.0) * p[1] ** 2
            + (3.0 / 8.0) * huber_abs_integral(p[1], tau)
        )

    def describe(self):
        return {"kind": "builtin", "name": "section7_reduced"}


def _smoothed_root(q, tau):
    """sqrt(q + tau^2) - tau: vanishes with q and keeps the same slope bounds."""
    if tau <= 0.0:
        return np.sqrt(q)
    return np.sqrt(q + tau * tau) - tau


class RootKinkOperator:
    """The builtin 3-d monotone map with direction-dependent far fields.

    Not a gradient: the Jacobian of the third component has an asymmetric
    p1 coupling, so solves use the monotone fixed-point path rather than
    energy minimization.
    """

    is_variational = False
    homogeneous = True
    y_dependent = False
    d = 3
    lam = 0.75
    lip = 1.5

    @staticmethod
    def f(p1, p3, tau=0.0):
        q = 8.0 * np.asarray(p1, dtype=float) ** 2 + 9.0 * np.asarray(p3, dtype=float) ** 2
        return (_smoothed_root(q, tau) + p3) / 8.0

    def flux(self, p, y=None, tau=0.0):
        out = np.empty_like(np.asarray(p, dtype=float))
        out[0] = p[0]
        out[1] = p[1]
        out[2] = p[2] + self.f(p[0], p[2], tau)
        return out

    def reduced(self, eta):
        """2-d restriction for gradients in span(eta, e3), eta unit, eta . e3 = 0.

        Coordinates are (t, r) = (x . eta, x . e3).  The restriction is the
        gradient of a convex potential exactly when eta has no e1 part.
        """
        eta = np.asarray(eta, dtype=float)
        if abs(eta[2]) > 1e-12 or abs(np.linalg.norm(eta) - 1.0) > 1e-9:
            raise ValueError("eta must be a unit vector orthogonal to e3")
        mu = float(eta[0]) ** 2
        if mu < 1e-14:
            return KinkPotential2D()
        return ReducedRootKink(mu)

    def describe(self):
        return {"kind": "builtin", "name": "section7"}


class ReducedRootKink:
    """2-d restriction of the root-kink map with in-plane e1 weight mu."""

    is_variational = False
    homogeneous = True
    y_dependent = False
    d = 2
    lam = 0.75
    lip = 1.5

    def __init__(self, mu=1.0):
        self.mu = float(mu)

    def flux(self, p, y=None, tau=0.0):
        q = 8.0 * self.mu * np.asarray(p[0], dtype=float) ** 2 + 9.0 * np.asarray(p[1], dtype=float) ** 2
        f = (_smoothed_root(q, tau) + p[1]) / 8.0
        out = np.empty_like(np.asarray(p, dtype=float))
        out[0] = p[0]
        out[1] = p[1] + f
        return out

    def describe(self):
        return {"kind": "builtin", "name": "section7_reduced_skew", "mu": self.mu}


class DirectMap:
    """Wrap a plain callable flux p -> a(p) for validation experiments."""

    is_variational = False
    y_dependent = False

    def __init__(self, func, d, lam=0.0, lip=1.0, homogeneous=False, name="direct"):
        self._func = func
        self.d = d
        self.lam = lam
        self.lip = lip
        self.homogeneous = homogeneous
        self.name = name

    def flux(self, p, y=None, tau=0.0):
        return self._func(np.asarray(p, dtype=float))

    def describe(self):
        return {"kind": "direct", "name": self.name}


def _sample_pairs(d, sample_count, radius, rng):
    """Random pairs plus structured axis pairs that probe kink slopes."""
    p = rng.uniform(-radius, radius, size=(d, sample_count))
    q = rng.uniform(-radius, radius, size=(d, sample_count))
    mags = np.concatenate([np.geomspace(1e-6, radius, 8), [0.0]])
    extra_p, extra_q = [], []
    for axis in range(d):
        for a in mags:
            for b in mags:
                for sa in (-1.0, 1.0):
                    for sb in (-1.0, 1.0):
                        u = np.zeros(d)
                        v = np.zeros(d)
                        u[axis] = sa * a
                        v[axis] = sb * b
                        if np.allclose(u, v):
                            continue
                        extra_p.append(u)
                        extra_q.append(v)
    p = np.concatenate([p, np.array(extra_p).T], axis=1)
    q = np.concatenate([q, np.array(extra_q).T], axis=1)
    return p, q


def validate_operator(op, sample_count=2000, radius=2.0, seed=0, tau=0.0):
    """Empirical monotonicity and Lipschitz constants over sampled pairs.

    Returns ``(lambda_hat, lipschitz_hat, report)``.  A nonpositive
    monotonicity quotient raises OperatorInvalidError carrying the
    witness pair.
    """
    if sample_count < 10:
        raise ValueError("sample_count too small for a meaningful estimate")
    rng = np.random.default_rng(seed)
    p, q = _sample_pairs(op.d, sample_count, radius, rng)
    ap = op.flux(p, tau=tau)
    aq = op.flux(q, tau=tau)
    dp = p - q
    da = ap - aq
    den = np.sum(dp * dp, axis=0)
    keep = den > 1e-24
    dp, da, den = dp[:, keep], da[:, keep], den[keep]
    mono = np.sum(da * dp, axis=0) / den
    lips = np.sqrt(np.sum(da * da, axis=0) / den)
    i_min = int(np.argmin(mono))
    lambda_hat = float(mono[i_min])
    lipschitz_hat = float(lips.max())
    witness = (p[:, keep][:, i_min].copy(), q[:, keep][:, i_min].copy())
    if lambda_hat <= 0.0:
        raise OperatorInvalidError(
            f"monotonicity violated: quotient {lambda_hat:.3e}", witness=witness
        )
    report = {
        "lambda_hat": lambda_hat,
        "lipschitz_hat": lipschitz_hat,
        "declared_lambda": getattr(op, "lam", None),
        "declared_lipschitz": getattr(op, "lip", None),
        "pairs": int(den.shape[0]),
        "witness_min": [witness[0].tolist(), witness[1].tolist()],
    }
    return lambda_hat, lipschitz_hat, report


def homogeneity_check(op, sample_count=500, radius=2.0, seed=0):
    """Max relative defect of a(t p) = t a(p) over samples and t in [0.1, 10]."""
    if not getattr(op, "homogeneous", False):
        raise ValueError("operator is not flagged positively 1-homogeneous")
    rng = np.random.default_rng(seed)
    p = rng.uniform(-radius, radius, size=(op.d, sample_count))
    ts = np.geomspace(0.1, 10.0, 13)
    defect = 0.0
    base = op.flux(p)
    for t in ts:
        lhs = op.flux(t * p)
        rhs = t * base
        num = np.linalg.norm(lhs - rhs, axis=0)
        den = t * np.linalg.norm(p, axis=0) + 1e-30
        defect = max(defect, float((num / den).max()))
    return defect


def potential_gradient_consistency(op, sample_count=200, h=1e-4, seed=0, tau=0.0):
    """Max defect between the analytic flux and central differences of F."""
    if not op.is_variational:
        raise ValueError("operator has no potential")
    rng = np.random.default_rng(seed)
    p = rng.uniform(-2.0, 2.0, size=(op.d, sample_count))
    a = op.flux(p, tau=tau)
    defect = 0.0
    for axis in range(op.d):
        e = np.zeros((op.d, 1))
        e[axis] = h
        fd = (op.potential(p + e, tau=tau) - op.potential(p - e, tau=tau)) / (2.0 * h)
        defect = max(defect, float(np.max(np.abs(fd - a[axis]))))
    return defect


def root_kink_identity_residual(sample_count=10000, seed=0):
    """Relative residual of 8 f^2 - 2 p3 f - (p1^2 + p3^2) on random samples."""
    rng = np.random.default_rng(seed)
    p1 = rng.uniform(-3.0, 3.0, sample_count)
    p3 = rng.uniform(-3.0, 3.0, sample_count)
    f = RootKinkOperator.f(p1, p3)
    res = 8.0 * f * f - 2.0 * p3 * f - (p1 * p1 + p3 * p3)
    scale = p1 * p1 + p3 * p3 + 1e-30
    return float(np.max(np.abs(res) / scale))
