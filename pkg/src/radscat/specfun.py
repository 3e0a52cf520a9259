"""Cylindrical Bessel and Hankel functions of integer order and real argument.

The evaluators are thin, carefully partitioned wrappers around the AMOS
routines shipped with :mod:`scipy.special`:

* for ``x > m`` (oscillatory regime) ``J_m`` and ``Y_m`` are taken from a single
  ``hankel1`` call, so both share one phase computation and the Wronskian
  ``J Y' - J' Y = 2/(pi x)`` holds to a few units in 1e-13;
* for ``x <= m`` (below the turning point) ``J_m`` comes from ``jv`` with a
  log-scaled ascending series taking over where AMOS underflows early, and
  ``Y_m`` from the imaginary part of ``hankel1``;
* derivatives use ``J_m' = J_{m-1} - (m/x) J_m`` which never needs the
  (smaller, possibly underflowed) order ``m + 1``.

Values with ``|J_m(x)| < 1e-300`` are flushed to zero.  Negative orders are
not accepted; callers apply ``Z_{-m} = (-1)^m Z_m`` themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

UNDERFLOW = 1e-300
# AMOS flushes J to zero somewhat above the double underflow limit.
_SERIES_SWITCH = 1e-280


@dataclass(frozen=True)
class BesselPair:
    """Values and first derivatives of ``J_m`` and ``Y_m`` at one argument."""

    j: float
    y: float
    jp: float
    yp: float

    @property
    def wronskian(self) -> float:
        return self.j * self.yp - self.jp * self.y


def _check_order(m) -> int:
    if int(m) != m:
        raise ValueError(f"order must be an integer, got {m!r}")
    m = int(m)
    if m < 0:
        raise ValueError(f"negative order {m} not supported; use the reflection identity")
    return m


def _j_series(m: int, x: np.ndarray) -> np.ndarray:
    """Ascending series ``(x/2)^m / m! * sum (-x^2/4)^j / (j! (m+1)_j)``, log-scaled."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        logpre = m * np.log(x / 2.0) - sp.gammaln(m + 1.0)
    z = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for j in range(1, 400):
        term = term * z / (j * (m + j))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    with np.errstate(under="ignore"):
        return np.exp(logpre) * total


def _jy(m: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(J_m(x), Y_m(x))`` for ``x > 0``; no argument checking."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        h = sp.hankel1(m, x)
    j = np.array(h.real, copy=True)
    y = np.array(h.imag, copy=True)
    # AMOS reports overflow as nan/inf; below the turning point Y_m -> -inf.
    y[~np.isfinite(y)] = -np.inf
    low = x <= m
    if np.any(low):
        jl = sp.jv(m, x[low])
        small = np.abs(jl) < _SERIES_SWITCH
        if np.any(small):
            jl[small] = _j_series(m, x[low][small])
        j[low] = jl
    j[np.abs(j) < UNDERFLOW] = 0.0
    return j, y


def bessel_jy(m, x):
    """Return ``(J_m(x), Y_m(x))`` as float arrays for ``x > 0``.

    This is the vectorized workhorse used by the solver; ``m`` is a scalar
    non-negative integer and ``x`` any array-like of positive reals.
    """
    m = _check_order(m)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(np.isnan(x)):
        raise ValueError("bessel_jy requires x > 0")
    return _jy(m, x)


def bessel_j(m, x):
    """``J_m(x)`` for integer ``m >= 0`` and ``x >= 0``.

    Returns a float for scalar input and an array otherwise.
    """
    m = _check_order(m)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise ValueError("bessel_j requires x >= 0")
    out = np.zeros(xa.shape)
    pos = xa > 0
    if np.any(pos):
        out[pos] = _jy(m, xa[pos])[0]
    out[~pos] = 1.0 if m == 0 else 0.0
    return float(out) if out.ndim == 0 else out


def bessel_y(m, x):
    """``Y_m(x)`` for integer ``m >= 0`` and ``x > 0``."""
    m = _check_order(m)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0) or np.any(np.isnan(xa)):
        raise ValueError("bessel_y requires x > 0 (logarithmic singularity at 0)")
    out = _jy(m, xa)[1]
    return float(out) if out.ndim == 0 else out


def hankel1(m, x):
    """``H_m(x) = J_m(x) + i Y_m(x)`` for ``x > 0``."""
    j, y = bessel_jy(m, x)
    out = j + 1j * y
    return complex(out) if out.ndim == 0 else out


def bessel_jy_derivs(m, x):
    """Return ``(J, Y, J', Y')`` arrays for ``x > 0``."""
    m = _check_order(m)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("derivatives require x > 0")
    j, y = _jy(m, x)
    if m == 0:
        j1, y1 = _jy(1, x)
        return j, y, -j1, -y1
    jm1, ym1 = _jy(m - 1, x)
    with np.errstate(over="ignore", invalid="ignore"):
        jp = jm1 - (m / x) * j
        yp = ym1 - (m / x) * y
    return j, y, jp, yp


def bessel_pair(m, x: float) -> BesselPair:
    j, y, jp, yp = bessel_jy_derivs(m, np.array([float(x)]))
    return BesselPair(float(j[0]), float(y[0]), float(jp[0]), float(yp[0]))


# below this |J_m| the scaled pair is built from the series and Y recurrence
_SCALED_SWITCH = 1e-200


def _series_sum(m: int, x: float) -> float:
    """``sum_j (-x^2/4)^j / (j! (m+1)_j)``; no cancellation for ``x^2 / 4 < m + 1``."""
    z = -0.25 * x * x
    term = total = 1.0
    for j in range(1, 400):
        term *= z / (j * (m + j))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def _y_recurrence(m: int, x: float) -> tuple[float, float, float]:
    """``(y_{m-1}, y_m, log_scale)`` with ``Y_n = y_n exp(log_scale)``, by forward recurrence."""
    lo, hi = float(sp.y0(x)), float(sp.y1(x))
    log_scale = 0.0
    for n in range(1, m):
        lo, hi = hi, (2.0 * n / x) * hi - lo
        if abs(hi) > 1e250:
            lo, hi = lo * 1e-250, hi * 1e-250
            log_scale += 250.0 * np.log(10.0)
    return lo, hi, log_scale


def bessel_pair_scaled(m, x: float) -> tuple[BesselPair, float]:
    """Pair with ``J, J'`` divided by ``exp(s)`` and ``Y, Y'`` multiplied by it.

    Returns ``(pair, s)``.  The Wronskian is unchanged by this scaling, which
    lets it be checked where ``J_m`` underflows and ``Y_m`` overflows.
    ``s = 0`` whenever the plain values are representable.
    """
    m = _check_order(m)
    x = float(x)
    if not x > 0:
        raise ValueError("bessel_pair_scaled requires x > 0")
    plain = bessel_pair(m, x)
    if m == 0 or (abs(plain.j) >= _SCALED_SWITCH and np.isfinite(plain.yp)):
        return plain, 0.0
    s = m * np.log(x / 2.0) - float(sp.gammaln(m + 1.0))
    t_m = _series_sum(m, x)
    t_prev = _series_sum(m - 1, x)
    j = t_m
    jp = (2.0 * m / x) * t_prev - (m / x) * t_m
    y_prev, y_m, ys = _y_recurrence(m, x)
    f = np.exp(ys + s)
    y = y_m * f
    yp = (y_prev - (m / x) * y_m) * f
    return BesselPair(j, y, jp, yp), s


def _scan_points(x_lo: float, x_hi: float, n: int) -> np.ndarray:
    if not (0 <= x_lo < x_hi):
        raise ValueError(f"need 0 <= x_lo < x_hi, got [{x_lo}, {x_hi}]")
    if n < 100:
        raise ValueError("scan needs at least 100 interior points")
    return np.linspace(x_lo, x_hi, n + 2)


def bessel_j_scan_max(m, x_lo: float, x_hi: float, n: int = 100) -> float:
    """Max of ``|J_m|`` over ``n`` interior samples plus both endpoints."""
    xs = _scan_points(x_lo, x_hi, n)
    return float(np.max(np.abs(bessel_j(m, xs))))


def hankel_scan_max(m, x_lo: float, x_hi: float, n: int = 100) -> float:
    """Max of ``|H_m|`` over a dense sampling of ``[x_lo, x_hi]``.

    ``|H_m|`` is infinite at 0, so a zero lower end is replaced by the
    smallest positive sample ``1e-14 * x_hi``.
    """
    xs = _scan_points(x_lo, x_hi, n)
    if xs[0] == 0.0:
        xs[0] = 1e-14 * x_hi
    j, y = bessel_jy(m, xs)
    with np.errstate(over="ignore"):
        return float(np.max(np.hypot(j, y)))


def _series_top_order(nmax: int, x: np.ndarray, log_floor: float) -> np.ndarray:
    """Largest ``m <= nmax`` with ``(x/2)^m/m! >= exp(log_floor)``, at least ``min(ceil(x), nmax)``.

    ``|J_m(x)| <= (x/2)^m / m!`` so orders above the returned value are
    below ``exp(log_floor)``.
    """
    lx = np.log(x / 2.0)

    def bound(m):
        return m * lx - sp.gammaln(m + 1.0)

    lo = np.minimum(np.ceil(x), nmax).astype(np.int64)
    hi = np.full(x.shape, nmax, dtype=np.int64)
    done = bound(hi) >= log_floor
    res = np.where(done, hi, lo)
    lo = lo.copy()
    hi = hi.copy()
    active = ~done
    # bound() decreases monotonically in m for m >= x/2
    while np.any(active & (hi - lo > 1)):
        mid = (lo + hi) // 2
        ok = bound(mid) >= log_floor
        lo = np.where(active & ok, mid, lo)
        hi = np.where(active & ~ok, mid, hi)
    res = np.where(active, lo, res)
    return res


def bessel_jy_orders(nmax: int, x, block: int = 48) -> tuple[np.ndarray, np.ndarray]:
    """``J_m(x)`` and ``Y_m(x)`` for all orders ``0..nmax`` at once.

    Returns arrays of shape ``(nmax + 1, len(x))``.  ``Y`` is built by forward
    recurrence and ``J`` by backward recurrence, both restarted from direct
    evaluations every ``block`` orders so rounding cannot accumulate over
    thousands of steps.  Entries of ``J`` below about ``1e-250`` are set to 0
    and overflowing ``Y`` entries to ``-inf``.
    """
    nmax = _check_order(nmax)
    x = np.asarray(x, dtype=float).ravel()
    if np.any(x <= 0):
        raise ValueError("bessel_jy_orders requires x > 0")
    npts = x.size
    J = np.zeros((nmax + 1, npts))
    Y = np.empty((nmax + 1, npts))
    top_ok = _series_top_order(nmax + 1, x, np.log(1e-250))

    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, nmax + 1, block):
            stop = min(start + block, nmax + 1)
            # forward recurrence for Y
            y_prev = _jy(start, x)[1]
            Y[start] = y_prev
            if stop - start > 1:
                y_cur = _jy(start + 1, x)[1]
                Y[start + 1] = y_cur
                for m in range(start + 1, stop - 1):
                    y_next = (2.0 * m / x) * y_cur - y_prev
                    y_next[~np.isfinite(y_next)] = -np.inf
                    Y[m + 1] = y_next
                    y_prev, y_cur = y_cur, y_next

            # backward recurrence for J from a per-point starting order
            top = stop - 1
            t_p = np.minimum(top_ok, top)
            live = t_p >= start
            j_up = np.zeros(npts)
            j_cur = np.zeros(npts)
            for m in range(top, start - 1, -1):
                inject = live & (t_p == m)
                if np.any(inject):
                    xi = x[inject]
                    j_up[inject] = _jy(m + 1, xi)[0]
                    j_cur[inject] = _jy(m, xi)[0]
                J[m] = np.where(live & (t_p >= m), j_cur, 0.0)
                if m > start:
                    j_down = (2.0 * m / x) * j_cur - j_up
                    j_up, j_cur = j_cur, j_down
    J[np.abs(J) < UNDERFLOW] = 0.0
    return J, Y
