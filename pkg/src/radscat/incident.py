"""Incident fields and their angular mode coefficients.

Mode conventions: the angular transform is unnormalized,
``f_m(r) = int_0^{2 pi} e^{-i m theta} u_i(r, theta) d theta``, and for a field
solving the free Helmholtz equation near the origin ``f_m(r) = c_m J_|m|(k r)``.
Ring samples are reduced with ``u_hat = fft(u) / n`` so that
``f_m = 2 pi u_hat_m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special as sp

from .specfun import _jy


@dataclass(frozen=True)
class IncidentField:
    """A free-space solution ``u_i(x, y)`` at wavenumber ``k``.

    ``modes``, when present, maps an integer array of orders to the exact
    coefficients ``c_m``.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    k: float
    kind: str
    params: dict = field(default_factory=dict)
    modes: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.func(x, y)


def _check_k(k):
    if not (np.isfinite(k) and k > 0):
        raise ValueError(f"wavenumber must be positive, got {k}")
    return float(k)


def plane_wave(k: float, angle: float = np.pi / 3) -> IncidentField:
    """``exp(i k (x cos a + y sin a))``; the default direction is ``(1/2, sqrt(3)/2)``."""
    k = _check_k(k)
    ca, sa = np.cos(angle), np.sin(angle)

    def func(x, y):
        return np.exp(1j * k * (x * ca + y * sa))

    def modes(m):
        m = np.asarray(m)
        return 2 * np.pi * (1j ** (np.abs(m) % 4)) * np.exp(-1j * m * angle)

    return IncidentField(func, k, "plane_wave", {"angle": float(angle)}, modes)


def gaussian_beam(k: float, shift: complex = 16 - 8j, damping: float = 7.859) -> IncidentField:
    """Complex-source beam ``H_0(k sqrt((x + shift)^2 + y^2)) exp(-damping k)``.

    The principal square root is used, so the field has a branch cut on the
    segment ``x = -Re(shift)``, ``|y| < -Im(shift)``; evaluation there raises.
    Computed with the exponentially scaled Hankel function to avoid overflow.
    """
    k = _check_k(k)
    shift = complex(shift)

    def func(x, y):
        w2 = (x + shift) ** 2 + y * y
        on_cut = (np.imag(w2) == 0) & (np.real(w2) <= 0)
        if np.any(on_cut):
            raise ValueError("Gaussian beam evaluated on its branch cut")
        w = np.sqrt(w2)
        z = k * w
        return sp.hankel1e(0, z) * np.exp(1j * z - damping * k)

    return IncidentField(func, k, "gaussian_beam", {"shift": shift, "damping": damping})


def point_source(k: float, location=(10.0, 10.0), amplitude: complex = 1.0) -> IncidentField:
    """``amplitude * (-i/4) H_0(k |x - location|)``, the outgoing solution of
    ``(Delta + k^2) u = amplitude * delta_location``.
    """
    k = _check_k(k)
    x0, y0 = map(float, location)
    r0 = np.hypot(x0, y0)
    th0 = np.arctan2(y0, x0)
    amp = complex(amplitude)

    def func(x, y):
        d = np.hypot(x - x0, y - y0)
        if np.any(d == 0):
            raise ValueError("point source evaluated at its own location")
        return amp * (-0.25j) * sp.hankel1(0, k * d)

    def modes(m):
        # Graf addition theorem, valid for r < |location|
        m = np.asarray(m)
        out = np.empty(m.shape, complex)
        for i, mm in np.ndenumerate(m):
            j, y = _jy(abs(int(mm)), np.array([k * r0]))
            out[i] = 2 * np.pi * amp * (-0.25j) * (j[0] + 1j * y[0]) * np.exp(-1j * mm * th0)
        return out

    return IncidentField(func, k, "point_source",
                         {"location": (x0, y0), "amplitude": amp}, modes)


def point_source_incident(k: float, location, spectrum_amplitude: complex,
                          support_radius: float = 2 * np.pi) -> IncidentField:
    """Point source that must lie outside the scatterer ball."""
    if np.hypot(*location) <= support_radius:
        raise ValueError("point source must lie outside the support of the potential")
    return point_source(k, location, spectrum_amplitude)


def from_function(func: Callable, k: float, kind: str = "custom") -> IncidentField:
    return IncidentField(func, _check_k(k), kind)


# -- ring sampling and mode extraction ---------------------------------------

@dataclass(frozen=True)
class RingModes:
    """Result of ring sampling: truncation order and coefficients for ``|m| <= M``."""

    M: int
    orders: np.ndarray
    coeffs: np.ndarray
    n_samples: int
    threshold: float

    @property
    def count(self) -> int:
        """Number of retained modes, ``2 M + 1``."""
        return 2 * self.M + 1

    def coeff(self, m: int) -> complex:
        return complex(self.coeffs[m + self.M])


def _ring_fft(field_: IncidentField, R: float, n: int):
    theta = 2 * np.pi * np.arange(n) / n
    u = field_(R * np.cos(theta), R * np.sin(theta))
    return np.fft.fft(u) / n, u


def truncation_order(u_hat: np.ndarray, threshold: float) -> Optional[int]:
    """Smallest ``M`` with ``|u_hat_j| < threshold`` for all ``M < |j| <= n/2``.

    Returns ``None`` when the band is not resolved with a 2x oversampling
    margin (``2M + 1 > n/2``).
    """
    n = u_hat.size
    m = np.fft.fftfreq(n, 1.0 / n).astype(int)
    big = np.abs(u_hat) >= threshold
    M = int(np.max(np.abs(m[big]))) if np.any(big) else 0
    if 2 * M + 1 > n // 2:
        return None
    return M


def ring_modes(field_: IncidentField, R: float, eps: float, n0: int = 4000,
               max_doublings: int = 4, probe_factors=(1.0, 1.05, 1.15),
               use_analytic: bool = True) -> RingModes:
    """Sample on the circle of radius ``R``, pick ``M`` and compute ``c_m``.

    ``M`` is the largest order whose ring coefficient reaches
    ``(eps/10) * max|u_i|`` on the ring.  The coefficients ``c_m`` come from
    the field's closed form when available, otherwise from a least-squares
    fit of ``2 pi u_hat_m(R_p) = c_m J_|m|(k R_p)`` over the probe radii.
    """
    if R <= 0 or eps <= 0:
        raise ValueError("ring radius and eps must be positive")
    n = int(n0)
    for _ in range(max_doublings + 1):
        u_hat, samples = _ring_fft(field_, R, n)
        thr = 0.1 * eps * float(np.max(np.abs(samples)))
        M = truncation_order(u_hat, thr)
        if M is not None:
            break
        n *= 2
    else:
        raise RuntimeError(f"mode tail not below eps/10 after {max_doublings} doublings")

    orders = np.arange(-M, M + 1)
    if use_analytic and field_.modes is not None:
        coeffs = np.asarray(field_.modes(orders), dtype=complex)
    else:
        coeffs = _fit_coefficients(field_, R, n, orders, probe_factors)
    return RingModes(M, orders, coeffs, n, thr)


def _fit_coefficients(field_, R, n, orders, probe_factors):
    k = field_.k
    num = np.zeros(orders.size, complex)
    den = np.zeros(orders.size)
    idx = np.mod(orders, n)
    for f in probe_factors:
        Rp = R * f
        u_hat, _ = _ring_fft(field_, Rp, n)
        fm = 2 * np.pi * u_hat[idx]
        jm = np.array([_jy(abs(int(m)), np.array([k * Rp]))[0][0] for m in orders])
        num += fm * jm
        den += jm * jm
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def ring_reconstruct(modes: RingModes, k: float, R: float, theta) -> np.ndarray:
    """``(1/2 pi) sum_m c_m J_|m|(k R) e^{i m theta}``."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape, complex)
    for m, c in zip(modes.orders, modes.coeffs):
        j = _jy(abs(int(m)), np.array([k * R]))[0][0]
        out += c * j * np.exp(1j * m * theta)
    return out / (2 * np.pi)


def by_name(name: str, k: float, **params) -> IncidentField:
    name = name.strip().lower()
    if name in ("plane", "plane_wave"):
        return plane_wave(k, float(params.get("angle", np.pi / 3)))
    if name in ("beam", "gaussian_beam"):
        return gaussian_beam(k)
    if name in ("point", "point_source"):
        loc = params.get("location", (10.0, 10.0))
        return point_source(k, loc, complex(params.get("amplitude", 1.0)))
    raise ValueError(f"unknown incident field {name!r}")
