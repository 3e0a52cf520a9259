"""Radially symmetric, compactly supported contrast functions ``q(r)``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RadialPotential:
    """A contrast ``q(r)`` vanishing for ``r > support_radius``.

    ``profile`` only needs to be valid on ``[0, support_radius]``; calling the
    potential applies the cut-off.  ``breakpoints`` lists radii strictly
    inside the support where ``q`` or its derivatives jump.
    """

    profile: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    support_radius: float
    breakpoints: tuple[float, ...] = ()
    label: str = "custom"
    identically_zero: bool = False

    def __post_init__(self):
        b = self.support_radius
        if not (np.isfinite(b) and b > 0):
            raise ValueError(f"support radius must be positive, got {b}")
        bp = tuple(float(x) for x in self.breakpoints)
        if any(not (0.0 < x < b) for x in bp):
            raise ValueError("breakpoints must lie strictly inside (0, b)")
        if any(x2 <= x1 for x1, x2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be sorted and distinct")
        object.__setattr__(self, "breakpoints", bp)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = r <= self.support_radius
        out = np.zeros(r.shape)
        if np.any(inside):
            out[inside] = self.profile(r[inside])
        return out[()] if out.ndim == 0 else out


def gaussian_bump(b: float = TWO_PI) -> RadialPotential:
    """``q(r) = exp(-r^2)`` cut off at ``b``."""
    return RadialPotential(lambda r: np.exp(-r * r), b, (), "gaussian")


def luneburg_lens(b: float = TWO_PI) -> RadialPotential:
    """``q(r) = 1 - r^2 / b^2``; continuous at the rim."""
    return RadialPotential(lambda r: 1.0 - (r / b) ** 2, b, (), "luneburg")


def constant_disk(c: float, b: float = 1.0) -> RadialPotential:
    if not 1.0 + c > 0:
        raise ValueError("constant disk needs 1 + c > 0")
    c = float(c)
    return RadialPotential(lambda r: np.full(r.shape, c), b, (), f"disk(c={c:g},b={b:g})",
                           identically_zero=(c == 0.0))


def zero_potential(b: float = TWO_PI) -> RadialPotential:
    return constant_disk(0.0, b)


# -- random discontinuous medium ---------------------------------------------

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64: ``s += 0x9E3779B97F4A7C15`` then a xor-shift-multiply finalizer.

    ``uniform()`` returns ``(z >> 11) * 2**-53`` in ``[0, 1)``.  Pure integer
    arithmetic, so the stream is identical on every platform.
    """

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53


def random_discontinuous(seed: int, n_switches: int = 20, b: float = TWO_PI) -> RadialPotential:
    """Piecewise-constant medium switching between 0 and 1 at random radii.

    ``q = 0`` on ``[0, first switch)`` and toggles at each switch radius.
    """
    rng = SplitMix64(seed)
    pts = sorted(b * rng.uniform() for _ in range(n_switches))
    if pts[0] == 0.0 or len(set(pts)) != len(pts):
        raise ValueError(f"seed {seed} produced a degenerate switch set; pick another seed")
    edges = np.array(pts)

    def profile(r):
        return (np.searchsorted(edges, r, side="right") % 2).astype(float)

    return RadialPotential(profile, b, tuple(pts), f"random(seed={seed})")


# -- Eaton lens -----------------------------------------------------------------

def eaton_index(r, b: float = TWO_PI, tol: float = 1e-15, max_iter: int = 100):
    """Refractive index ``s = sqrt(1 + q)`` of the Eaton lens for ``0 < r <= b``.

    Eliminating the square root from the defining relation gives
    ``r = 2 b s / (s^4 + 1)``, monotone decreasing for ``s >= 1``.  Newton on
    ``r (s^4 + 1) - 2 b s`` started at ``(2 b / r)^{1/3}`` (where the residual
    is positive and the function convex) decreases monotonically to the root.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r > b * (1 + 1e-15)):
        raise ValueError("Eaton index requires 0 < r <= b")
    s = np.cbrt(2.0 * b / r)
    for _ in range(max_iter):
        g = r * (s**4 + 1.0) - 2.0 * b * s
        dg = 4.0 * r * s**3 - 2.0 * b
        step = g / dg
        s_new = np.maximum(s - step, 1.0)
        if np.all(np.abs(s_new - s) <= tol * s_new):
            return s_new
        s = s_new
    raise RuntimeError("Eaton index iteration did not converge")


def eaton_residual(r, q, b: float = TWO_PI):
    """Relative residual of ``1 + q = a + sqrt(a^2 - 1)`` with ``a = b / (sqrt(1+q) r)``."""
    r = np.asarray(r, dtype=float)
    n2 = 1.0 + np.asarray(q, dtype=float)
    a = b / (np.sqrt(n2) * r)
    return (n2 - (a + np.sqrt(np.maximum(a * a - 1.0, 0.0)))) / n2


def eaton_lens(b: float = TWO_PI) -> RadialPotential:
    """Eaton lens of radius ``b``; ``q`` blows up like ``r^{-2/3}`` at the centre.

    Radii below ``1e-14 b`` are clamped to that value.
    """
    floor = 1e-14 * b

    def profile(r):
        s = eaton_index(np.maximum(r, floor), b)
        return s * s - 1.0

    return RadialPotential(profile, b, (), "eaton")


# -- tabulated potentials -----------------------------------------------------

def table_potential(r_samples, q_samples, breakpoints=(), label: str = "table") -> RadialPotential:
    """Cubic-spline potential through samples, with jumps allowed at ``breakpoints``.

    The support radius is the last sample radius.  Every interior sample is
    reported as a breakpoint so panels never straddle a spline knot.  A
    breakpoint may appear twice in ``r_samples`` to give left and right
    values.
    """
    from scipy.interpolate import CubicSpline

    r = np.asarray(r_samples, dtype=float)
    q = np.asarray(q_samples, dtype=float)
    if r.ndim != 1 or r.shape != q.shape or r.size < 2:
        raise ValueError("need matching 1-D sample arrays with at least 2 points")
    if r[0] < 0 or np.any(np.diff(r) < 0):
        raise ValueError("sample radii must be non-negative and sorted")
    b = float(r[-1])
    cuts = sorted(set(float(x) for x in breakpoints))
    if any(not (r[0] < x < b) for x in cuts):
        raise ValueError("table breakpoints must lie strictly inside the sampled range")
    bounds = [float(r[0])] + cuts + [b]
    pieces = []
    for lo, hi in zip(bounds, bounds[1:]):
        sel = (r >= lo) & (r <= hi)
        rs, qs = r[sel], q[sel]
        # duplicated radius at a jump: keep the value belonging to this side
        if rs.size >= 2 and rs[0] == rs[1]:
            rs, qs = rs[1:], qs[1:]
        if rs.size >= 2 and rs[-1] == rs[-2]:
            rs, qs = rs[:-1], qs[:-1]
        if rs.size < 2:
            raise ValueError(f"segment [{lo}, {hi}] has fewer than two samples")
        fit = CubicSpline(rs, qs) if rs.size >= 3 else (lambda x, a=rs, v=qs: np.interp(x, a, v))
        pieces.append(fit)
    edges = np.array(cuts)
    r0 = float(r[0])

    def profile(x):
        idx = np.searchsorted(edges, x, side="right")
        out = np.empty(x.shape)
        for i, fit in enumerate(pieces):
            sel = idx == i
            if np.any(sel):
                out[sel] = fit(np.maximum(x[sel], r0))
        return out

    knots = sorted({float(x) for x in r if 0.0 < x < b} | set(cuts))
    return RadialPotential(profile, b, tuple(knots), label)


def load_table_potential(path: str, breakpoints=()) -> RadialPotential:
    """Read a two-column ``r q`` text file (``#`` comments allowed)."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (r q), got {data.shape[1]}")
    return table_potential(data[:, 0], data[:, 1], breakpoints, label=f"table({path})")


def by_name(name: str, **params) -> RadialPotential:
    name = name.strip().lower()
    if name == "gaussian":
        return gaussian_bump()
    if name == "random":
        return random_discontinuous(int(params.get("seed", 1234)))
    if name == "eaton":
        return eaton_lens()
    if name == "luneburg":
        return luneburg_lens()
    if name == "disk":
        return constant_disk(float(params.get("c", 0.5)), float(params.get("b", 1.0)))
    if name == "zero":
        return zero_potential(float(params.get("b", TWO_PI)))
    if name == "table":
        if "file" not in params:
            raise ValueError("table potential needs a 'file' parameter")
        return load_table_potential(params["file"], params.get("breakpoints", ()))
    raise ValueError(f"unknown potential {name!r}")
