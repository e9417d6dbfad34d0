"""Exactly evaluable Z^d-periodic boundary data and coefficient fields.

Fields are trigonometric polynomials plus a constant: each term is
``coef * trig(2 pi k . y)`` with an integer frequency vector k.  This
keeps every derivative analytic and C^m norm bounds available in closed
form, so no quadrature of the data itself is ever needed.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PeriodicFieldExpr",
    "LinearTensorField",
    "evaluate_field",
    "constant_field",
    "cosine_field",
    "identity_tensor",
    "isotropic_tensor",
    "validate_tensor",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PeriodicFieldExpr:
    """Trigonometric polynomial R^d -> R^N.

    terms: tuple of (coef, freq, phase) with coef an (N,) array, freq an
    integer d-vector and phase "cos" or "sin".  constant: (N,) array.
    Scalar fields use N = 1 and evaluate with the component axis squeezed
    away when N == 1.
    """

    d: int
    n_components: int
    constant: np.ndarray
    terms: tuple

    def __post_init__(self):
        self.constant.setflags(write=False)

    def __call__(self, y, derivative=None):
        return evaluate_field(self, y, derivative)

    def scale_argument(self, factor: int) -> "PeriodicFieldExpr":
        """Field y -> f(factor * y); factor must be a positive integer
        so the result stays Z^d periodic."""
        if int(factor) != factor or factor < 1:
            raise ValueError("argument scale must be a positive integer")
        terms = tuple(
            (c, (np.asarray(k, dtype=np.int64) * int(factor)), ph) for c, k, ph in self.terms
        )
        return PeriodicFieldExpr(self.d, self.n_components, self.constant.copy(), terms)

    def c_norm_bound(self, m: int) -> float:
        """Upper bound for the C^m norm: sum over terms of
        |coef| (2 pi |k|_1)^j, maximized over 0 <= j <= m."""
        best = float(np.max(np.abs(self.constant))) if m >= 0 else 0.0
        for j in range(m + 1):
            s = 0.0 if j > 0 else float(np.max(np.abs(self.constant)))
            for c, k, _ in self.terms:
                s += float(np.max(np.abs(c))) * (_TWO_PI * float(np.sum(np.abs(k)))) ** j
            best = max(best, s)
        return best

    def grad_sup_bound(self) -> float:
        """Upper bound for sup |grad f|."""
        s = 0.0
        for c, k, _ in self.terms:
            s += float(np.max(np.abs(c))) * _TWO_PI * float(np.linalg.norm(k))
        return s

    def describe(self):
        return {
            "d": self.d,
            "n_components": self.n_components,
            "constant": self.constant.tolist(),
            "terms": [
                {"coef": c.tolist(), "freq": np.asarray(k).tolist(), "phase": ph}
                for c, k, ph in self.terms
            ],
        }


def _as_coef(c, n_components):
    arr = np.atleast_1d(np.asarray(c, dtype=float))
    if arr.shape != (n_components,):
        raise ValueError(f"coefficient shape {arr.shape} != ({n_components},)")
    arr.setflags(write=False)
    return arr


def make_field(d, terms=(), constant=0.0, n_components=1) -> PeriodicFieldExpr:
    const = _as_coef(constant if np.ndim(constant) else [constant] * n_components, n_components)
    packed = []
    for coef, freq, phase in terms:
        if phase not in ("cos", "sin"):
            raise ValueError(f"phase must be cos or sin, got {phase!r}")
        k = np.asarray(freq, dtype=np.int64)
        if k.shape != (d,):
            raise ValueError(f"frequency shape {k.shape} != ({d},)")
        packed.append((_as_coef(coef if np.ndim(coef) else [coef] * n_components, n_components), k, phase))
    return PeriodicFieldExpr(d=d, n_components=n_components, constant=const, terms=tuple(packed))


def constant_field(d, value, n_components=1):
    return make_field(d, terms=(), constant=value, n_components=n_components)


def cosine_field(d, freq, amplitude=1.0, constant=0.0, phase="cos", n_components=1):
    return make_field(
        d,
        terms=[(amplitude, freq, phase)],
        constant=constant,
        n_components=n_components,
    )


def evaluate_field(field: PeriodicFieldExpr, y, derivative=None):
    """Evaluate the field (or a partial derivative) at points y.

    y has shape (d, ...); the result has shape (N, ...) or (...) when the
    field is scalar.  ``derivative`` is a multi-index of total order <= 5,
    matching the regularity budget the rest of the pipeline assumes.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[0] != field.d:
        raise ValueError(f"points have dimension {y.shape[0]}, field expects {field.d}")
    out_shape = (field.n_components,) + y.shape[1:]
    out = np.zeros(out_shape)
    order = 0
    if derivative is not None:
        derivative = tuple(int(a) for a in derivative)
        order = sum(derivative)
        if order > 5:
            raise ValueError("derivative order above the supported budget (5)")
    if order == 0:
        out += field.constant.reshape((field.n_components,) + (1,) * (y.ndim - 1))
    for coef, k, phase in field.terms:
        arg = np.tensordot(k.astype(float) * _TWO_PI, y, axes=(0, 0))
        # differentiating rotates the phase by pi/2 per order and scales by 2 pi k_j
        shift = 0 if phase == "cos" else 3  # cos = shift 0, sin = shift 3 of the cycle d/dx cos
        factor = 1.0
        if order:
            for j, a in enumerate(derivative):
                factor *= (_TWO_PI * float(k[j])) ** a
            shift = (shift + order) % 4
        trig = (np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin)[shift % 4]
        vals = trig(arg) * factor
        out += coef.reshape((field.n_components,) + (1,) * (y.ndim - 1)) * vals
    if field.n_components == 1:
        return out[0]
    return out


@dataclass(frozen=True)
class LinearTensorField:
    """Coefficient tensor A^{alpha beta}_{ij}(y) for an N-component system.

    ``entries[alpha][beta][i][j]`` is a scalar PeriodicFieldExpr.  The
    declared ellipticity is lambda |xi|^2 <= xi^T A xi <= |xi|^2 for
    matrix-valued xi, which normalizes the upper bound to 1.
    """

    d: int
    n_components: int
    entries: tuple
    lam: float

    def __call__(self, y):
        """Evaluate at points y (d, ...) -> array (d, d, N, N, ...)."""
        y = np.asarray(y, dtype=float)
        out = np.empty((self.d, self.d, self.n_components, self.n_components) + y.shape[1:])
        for a in range(self.d):
            for b in range(self.d):
                for i in range(self.n_components):
                    for j in range(self.n_components):
                        out[a, b, i, j] = evaluate_field(self.entries[a][b][i][j], y)
        return out

    def scale_argument(self, factor: int) -> "LinearTensorField":
        ent = tuple(
            tuple(
                tuple(tuple(e.scale_argument(factor) for e in row_j) for row_j in row_i)
                for row_i in row_b
            )
            for row_b in self.entries
        )
        return LinearTensorField(self.d, self.n_components, ent, self.lam)

    def is_symmetric(self, samples=64, seed=0):
        rng = np.random.default_rng(seed)
        y = rng.random((self.d, samples))
        A = self(y)
        return bool(np.allclose(A, A.transpose(1, 0, 3, 2, 4), atol=1e-12))

    def describe(self):
        return {
            "kind": "linear_tensor",
            "d": self.d,
            "n_components": self.n_components,
            "lambda": self.lam,
            "entries": [
                [
                    [[self.entries[a][b][i][j].describe() for j in range(self.n_components)]
                     for i in range(self.n_components)]
                    for b in range(self.d)
                ]
                for a in range(self.d)
            ],
        }

    def digest(self):
        import json

        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def identity_tensor(d, n_components=1, scale=1.0) -> LinearTensorField:
    """Constant tensor A = scale * I (the Laplacian when scale = 1)."""
    zero = constant_field(d, 0.0)
    one = constant_field(d, scale)
    ent = tuple(
        tuple(
            tuple(
                tuple(
                    one if (a == b and i == j) else zero
                    for j in range(n_components)
                )
                for i in range(n_components)
            )
            for b in range(d)
        )
        for a in range(d)
    )
    return LinearTensorField(d, n_components, ent, lam=scale)


def isotropic_tensor(profile: PeriodicFieldExpr, lam, n_components=1) -> LinearTensorField:
    """A(y) = a(y) * I for a scalar profile a."""
    d = profile.d
    zero = constant_field(d, 0.0)
    ent = tuple(
        tuple(
            tuple(
                tuple(
                    profile if (a == b and i == j) else zero
                    for j in range(n_components)
                )
                for i in range(n_components)
            )
            for b in range(d)
        )
        for a in range(d)
    )
    return LinearTensorField(d, n_components, ent, lam=lam)


def laminate_tensor(d=2, amplitude=0.5, mean_scale=2.0 / 3.0, axis=0, n_components=1):
    """Scalar laminate a(y) = mean_scale * (1 + amplitude cos(2 pi y_axis)) I.

    The default scaling keeps the upper ellipticity bound at 1.
    """
    freq = [0] * d
    freq[axis] = 1
    profile = make_field(
        d,
        terms=[(mean_scale * amplitude, freq, "cos")],
        constant=mean_scale,
    )
    lam = mean_scale * (1.0 - amplitude)
    A = isotropic_tensor(profile, lam=lam, n_components=n_components)
    return A


def validate_tensor(A: LinearTensorField, sample_count=1024, seed=0):
    """Check lambda |xi|^2 <= xi^T A xi <= |xi|^2 on random samples.

    Returns (lam_hat, upper_hat); raises ValueError when the declared
    bounds fail on a sample.
    """
    rng = np.random.default_rng(seed)
    y = rng.random((A.d, sample_count))
    Av = A(y)  # (d, d, N, N, S)
    xi = rng.standard_normal((A.d, A.n_components, sample_count))
    sq = np.einsum("ais,ais->s", xi, xi)
    quad = np.einsum("ais,abijs,bjs->s", xi, Av, xi)
    ratios = quad / sq
    lam_hat = float(ratios.min())
    upper_hat = float(ratios.max())
    if lam_hat < A.lam - 1e-9:
        raise ValueError(f"ellipticity below declared lambda: {lam_hat} < {A.lam}")
    if upper_hat > 1.0 + 1e-9:
        raise ValueError(f"upper ellipticity bound exceeded: {upper_hat} > 1")
    return lam_hat, upper_hat
