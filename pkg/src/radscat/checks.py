"""Independent reference computations and the self-test suite.

The oracles here avoid the hierarchical machinery they are used to check:
the disk series uses scipy's Bessel routines and a 2x2 matching solve per
order, the monolithic density is one dense Nystrom solve, and the free-space
pulse is a direct time-domain quadrature.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import special as sp
from scipy.integrate import quad

from . import chebyshev as cb
from .specfun import bessel_jy


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name}: {self.value:.3e} (tol {self.tolerance:.1e}, {self.seconds:.1f} s)"


# -- oracles ---------------------------------------------------------------------

def disk_series_total(c: float, b: float, k: float, x, y, angle: float = np.pi / 3,
                      mmax: int = 40) -> np.ndarray:
    """Total field for a plane wave on the disk ``q = c`` (``r < b``) by mode matching.

    Per order: ``u = beta J_m(k_in r)`` inside and ``J_m(k r) + mu H_m(k r)``
    outside, with ``u`` and ``u_r`` continuous at ``b``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    k_in = k * np.sqrt(1.0 + c)
    out = np.zeros(r.shape, complex)
    for m in range(-mmax, mmax + 1):
        am = abs(m)
        A = np.array([[sp.jv(am, k_in * b), -sp.hankel1(am, k * b)],
                      [k_in * sp.jvp(am, k_in * b), -k * sp.h1vp(am, k * b)]])
        beta, mu = np.linalg.solve(A, [sp.jv(am, k * b), k * sp.jvp(am, k * b)])
        coeff = 1j**am * np.exp(-1j * m * angle)
        radial = np.where(r <= b, beta * sp.jv(am, k_in * r),
                          sp.jv(am, k * r) + mu * sp.hankel1(am, k * r))
        out += coeff * radial * np.exp(1j * m * th)
    return out


def dense_density(order: int, k: float, q, edges: np.ndarray, n: int = 48) -> tuple:
    """Density on the Chebyshev nodes of ``edges`` from one dense global solve.

    Returns ``(nodes, rho)`` with ``nodes`` of shape ``(P, n)``.
    """
    x = cb.reference_nodes(n)
    wr = cb.reference_weights(n)
    left = cb.left_integration_matrix(n)
    edges = np.asarray(edges, dtype=float)
    P = edges.size - 1
    half = 0.5 * np.diff(edges)
    nodes = edges[:-1, None] + half[:, None] * (x + 1.0)
    t = nodes.ravel()
    N = t.size
    below = np.zeros((N, N))
    for p in range(P):
        rows = slice(p * n, (p + 1) * n)
        for p2 in range(p):
            below[rows, p2 * n:(p2 + 1) * n] = half[p2] * wr
        below[rows, rows] = half[p] * left
    w = (half[:, None] * wr).ravel()
    above = w[None, :] - below
    j, y = bessel_jy(order, k * t)
    h = 0.5 * np.pi * y - 0.5j * np.pi * j
    qv = q(t)
    F = np.eye(N) + k * k * qv[:, None] * (h[:, None] * below * (j * t)[None, :]
                                           + j[:, None] * above * (h * t)[None, :])
    rho = np.linalg.solve(F, -k * k * qv * j)
    return nodes, rho.reshape(P, n)


def free_space_pulse(spectrum, x: float, y: float, t: float) -> float:
    """``u = -(1/2 pi) int_0^inf f(t - d cosh s) ds`` for a point source in free space."""
    d = float(np.hypot(x - spectrum.location[0], y - spectrum.location[1]))
    # beyond this delay the Gaussian profile is below double precision
    reach = t - spectrum.t0 + 8.0 * spectrum.width
    if reach <= d:
        return 0.0
    s_max = float(np.arccosh(reach / d))
    val, _ = quad(lambda s: spectrum.profile(t - d * np.cosh(s)), 0.0, s_max,
                  epsabs=1e-14, epsrel=1e-13, limit=400)
    return -val / (2 * np.pi)


def greens_convergence(order: int, k: float, coeffs, support=(0.5, 2.5), h0: float = 0.02,
                       levels: int = 4, probe=None) -> tuple:
    """Observed order of the 3-point residual ``L u - g`` under h-halving.

    ``g(t) = sum_j a_j sin(j pi s) (s (1 - s))^4`` with ``s`` the normalized
    position in ``support``.  Returns ``(orders, errors)``.
    """
    from .modesolver import greens_apply

    a, b = support
    coeffs = np.asarray(coeffs, dtype=float)
    jj = np.arange(1, coeffs.size + 1)

    def g(t):
        t = np.asarray(t, dtype=float)
        s = np.clip((t - a) / (b - a), 0.0, 1.0)
        return (np.sin(np.pi * np.multiply.outer(s, jj)) @ coeffs) * (s * (1 - s)) ** 4

    u = greens_apply(order, k, g, support)
    r = np.linspace(a + 0.2, b - 0.2, 41) if probe is None else np.asarray(probe, dtype=float)
    errs = []
    for lvl in range(levels):
        h = h0 / 2**lvl
        up, u0, um = u(r + h), u(r), u(r - h)
        d2 = (up - 2 * u0 + um) / h**2
        d1 = (up - um) / (2 * h)
        Lu = d2 + d1 / r + (k * k - order * order / r**2) * u0
        errs.append(float(np.max(np.abs(Lu - g(r)))))
    errs = np.array(errs)
    return np.log2(errs[:-1] / errs[1:]), errs


# -- self-test suite ----------------------------------------------------------------

def _timed(name, tol, fn):
    t0 = time.perf_counter()
    value = float(fn())
    return CheckResult(name, bool(value <= tol), value, tol, time.perf_counter() - t0)


def check_wronskian(samples: int = 2000, seed: int = 0) -> CheckResult:
    from .specfun import bessel_pair_scaled

    def run():
        rng = np.random.default_rng(seed)
        m = rng.integers(0, 201, samples)
        x = np.exp(rng.uniform(np.log(1e-2), np.log(2e3), samples))
        worst = 0.0
        for mm, xx in zip(m, x):
            pair, _ = bessel_pair_scaled(int(mm), xx)
            target = 2.0 / (np.pi * xx)
            worst = max(worst, abs(pair.wronskian - target) / target)
        return worst

    return _timed("Bessel Wronskian", 1e-12, run)


def check_greens(seed: int = 0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        orders, _ = greens_convergence(3, 5.0, rng.normal(size=4))
        return abs(orders[-1] - 2.0)

    return _timed("Green's function order |p - 2|", 0.2, run)


def check_zero_potential(k: float = 10.0, eps: float = 1e-13) -> CheckResult:
    from .assembly import solve_scattering
    from .incident import plane_wave
    from .potentials import zero_potential

    def run():
        st = solve_scattering(zero_potential(), plane_wave(k), eps)
        rng = np.random.default_rng(1)
        pts = rng.uniform(-10, 10, (2, 1000))
        return np.max(np.abs(st.scattered(pts[0], pts[1])))

    return _timed("zero potential |u_s|", 10 * eps, run)


def check_monolithic(order: int = 5, k: float = 10.0) -> CheckResult:
    from .modesolver import _node_rho, solve_mode
    from .potentials import gaussian_bump

    def run():
        q = gaussian_bump()
        sol = solve_mode(order, k, q, 1e-13)
        _, rho = dense_density(order, k, q, sol.edges)
        mine = _node_rho(sol)
        return np.max(np.abs(mine - rho)) / np.max(np.abs(rho))

    return _timed("hierarchical vs dense density", 1e-11, run)


def check_disk(k: float = 10.0) -> CheckResult:
    from .assembly import solve_scattering
    from .incident import plane_wave
    from .potentials import constant_disk

    def run():
        st = solve_scattering(constant_disk(0.5, 1.0), plane_wave(k))
        rng = np.random.default_rng(3)
        rr = 2 * np.sqrt(rng.uniform(0, 1, 200))
        th = rng.uniform(0, 2 * np.pi, 200)
        x, y = rr * np.cos(th), rr * np.sin(th)
        ref = disk_series_total(0.5, 1.0, k, x, y)
        return np.max(np.abs(st.total(x, y) - ref)) / np.max(np.abs(ref))

    return _timed("disk series oracle", 1e-9, run)


def run_selftest() -> list:
    return [check_wronskian(), check_greens(), check_zero_potential(),
            check_monolithic(), check_disk()]
