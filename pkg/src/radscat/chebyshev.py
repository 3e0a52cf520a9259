"""Chebyshev panels: nodes, quadrature, interpolation and spectral integration.

Panels use Chebyshev points of the first kind (the roots of ``T_n``), so no
node ever sits on a panel endpoint.  That keeps the origin and potential
jumps off the grid.  Quadrature weights are Fejér's first rule, which is
exact for polynomials of degree ``n - 1`` and integrates the interpolant.

Coefficients use the usual normalization ``f(x) = sum_k c_k T_k(x)`` with
``x`` the affine image of the panel on ``[-1, 1]``, so a constant has
``c_0`` equal to its value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DEFAULT_ORDER = 48
# 0-based index of the first coefficient counted in the tail measure
TAIL_START = 12


@lru_cache(maxsize=8)
def _reference(n: int):
    """Nodes, weights, values->coeffs, left-integration and antiderivative matrices on [-1, 1]."""
    j = np.arange(n)
    theta = np.pi - (2 * j + 1) * np.pi / (2 * n)  # ascending x = cos(theta)
    x = np.cos(theta)

    lmax = n // 2
    l = np.arange(1, lmax + 1)
    w = (2.0 / n) * (1.0 - 2.0 * np.sum(np.cos(2 * np.outer(theta, l)) / (4 * l * l - 1), axis=1))

    k = np.arange(n)
    T = np.cos(np.outer(theta, k))  # T[j, k] = T_k(x_j)
    scale = np.full(n, 2.0 / n)
    scale[0] = 1.0 / n
    v2c = (T.T * scale[:, None])  # c = v2c @ f

    # antiderivative in coefficient space, then anchor at x = -1
    integ = np.zeros((n + 1, n))
    integ[1, 0] = 1.0
    if n > 1:
        integ[2, 1] = 0.25
    for kk in range(2, n):
        integ[kk + 1, kk] += 1.0 / (2 * (kk + 1))
        integ[kk - 1, kk] -= 1.0 / (2 * (kk - 1))
    kk = np.arange(n + 1)
    at_minus_one = (-1.0) ** kk
    integ[0, :] -= at_minus_one @ integ
    T_ext = np.cos(np.outer(theta, kk))
    left = T_ext @ integ @ v2c

    for arr in (x, w, v2c, left, integ):
        arr.setflags(write=False)
    return x, w, v2c, left, integ


@dataclass(frozen=True)
class ChebPanel:
    """First-kind Chebyshev panel on ``[lo, hi]``."""

    lo: float
    hi: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def to_reference(self, r):
        return (2.0 * np.asarray(r, dtype=float) - (self.lo + self.hi)) / (self.hi - self.lo)

    def left_integration(self) -> np.ndarray:
        """Matrix taking node samples of f to ``int_lo^{r_i} f`` at each node."""
        return 0.5 * self.length * _reference(self.n)[3]

    def right_integration(self) -> np.ndarray:
        """Matrix taking node samples of f to ``int_{r_i}^hi f`` at each node."""
        return np.broadcast_to(self.weights, (self.n, self.n)) - self.left_integration()


def cheb_nodes_weights(lo: float, hi: float, n: int = DEFAULT_ORDER) -> ChebPanel:
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    if n < 2:
        raise ValueError("panel order must be at least 2")
    x, w = _reference(n)[:2]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x + 1.0)
    weights = half * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return ChebPanel(float(lo), float(hi), nodes, weights)


def reference_nodes(n: int = DEFAULT_ORDER) -> np.ndarray:
    return _reference(n)[0]


def reference_weights(n: int = DEFAULT_ORDER) -> np.ndarray:
    return _reference(n)[1]


def values_to_coeffs_matrix(n: int = DEFAULT_ORDER) -> np.ndarray:
    return _reference(n)[2]


def left_integration_matrix(n: int = DEFAULT_ORDER) -> np.ndarray:
    """Spectral ``int_{-1}^{x_i}`` matrix on the reference interval."""
    return _reference(n)[3]


@dataclass(frozen=True)
class ChebExpansion:
    panel: ChebPanel
    coeffs: np.ndarray

    def __call__(self, r):
        return cheb_eval(self, r)


def cheb_coeffs(panel: ChebPanel, samples) -> ChebExpansion:
    """Interpolating Chebyshev coefficients from samples at ``panel.nodes``.

    ``samples`` may carry trailing axes; coefficients run along axis 0.
    """
    samples = np.asarray(samples)
    if samples.shape[0] != panel.n:
        raise ValueError(f"expected {panel.n} samples, got {samples.shape[0]}")
    c = np.tensordot(_reference(panel.n)[2], samples, axes=(1, 0))
    return ChebExpansion(panel, c)


def clenshaw(coeffs, x):
    """Evaluate ``sum_k c_k T_k(x)`` for ``x`` in ``[-1, 1]``."""
    coeffs = np.asarray(coeffs)
    x = np.asarray(x, dtype=float)
    b1 = np.zeros(np.broadcast_shapes(x.shape, coeffs.shape[1:]), dtype=np.result_type(coeffs, x))
    b2 = np.zeros_like(b1)
    two_x = 2.0 * x
    for c in coeffs[:0:-1]:
        b1, b2 = c + two_x * b1 - b2, b1
    return coeffs[0] + x * b1 - b2


def cheb_eval(exp: ChebExpansion, r):
    """Evaluate an expansion at radii inside its panel (endpoints allowed)."""
    r = np.asarray(r, dtype=float)
    p = exp.panel
    tol = 1e-13 * max(abs(p.lo), abs(p.hi), p.length)
    if np.any(r < p.lo - tol) or np.any(r > p.hi + tol):
        raise ValueError(f"evaluation point outside panel [{p.lo}, {p.hi}]")
    x = np.clip(p.to_reference(r), -1.0, 1.0)
    out = clenshaw(exp.coeffs, x)
    return out[()] if out.ndim == 0 else out


def antiderivative_coeffs(coeffs):
    """Coefficients (length ``n + 1``) of ``int_{-1}^x`` of a reference-interval series."""
    coeffs = np.asarray(coeffs)
    return np.tensordot(_reference(coeffs.shape[0])[4], coeffs, axes=(1, 0))


def derivative_coeffs(coeffs):
    """Coefficients of ``d/dx`` of a series on the reference interval."""
    c = np.asarray(coeffs)
    n = c.shape[0]
    d = np.zeros_like(c)
    if n < 2:
        return d
    d[n - 2] = 2 * (n - 1) * c[n - 1]
    for j in range(n - 3, -1, -1):
        d[j] = (d[j + 2] if j + 2 < n else 0) + 2 * (j + 1) * c[j + 1]
    d[0] = d[0] / 2
    return d


def cheb_derivative(exp: ChebExpansion) -> ChebExpansion:
    """Expansion of ``d/dr`` on the same panel."""
    return ChebExpansion(exp.panel, derivative_coeffs(exp.coeffs) * (2.0 / exp.panel.length))


def tail_measure(samples, fn_max: float, panel_length: float) -> float:
    """``panel_length * max_{j >= 12} |c_j| / fn_max`` (0 when ``fn_max == 0``)."""
    samples = np.asarray(samples)
    if fn_max == 0.0:
        return 0.0
    c = _reference(samples.shape[0])[2] @ samples
    return float(panel_length * np.max(np.abs(c[TAIL_START:])) / fn_max)


def resolved(fn_samples, fn_max: float, panel_length: float, eps: float) -> tuple[bool, float]:
    """Whether the tail measure is within ``eps / 10``; also returns the measure."""
    if fn_max < 0:
        raise ValueError("fn_max must be non-negative")
    e = tail_measure(fn_samples, fn_max, panel_length)
    return e <= eps / 10.0, e
