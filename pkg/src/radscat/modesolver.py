"""Per-mode radial solver.

For one angular order ``m`` the scattered mode ``u_m`` is represented as

    u_m(r) = int_0^b G(r, t) rho(t) dt,
    G(r, t) = t J_m(k min(r, t)) Hh(k max(r, t)),   Hh = -(i pi / 2) H_m,

and the density solves ``rho + k^2 q int G rho = -k^2 q c J_m(k r)``.  The
radial interval is split into Chebyshev panels; each panel is solved locally
for the responses to unit incoming H- and J-waves, reduced to a 2x2
scattering matrix, and the panels are glued together by a sequential merge
sweep followed by a downward pass.

Conventions used throughout (``<f, g>`` is the bilinear form
``int f g t dt`` over a panel ``A = [lo, hi]``):

* incoming coefficients ``phi_l(A) = int_0^lo J t rho``,
  ``phi_r(A) = int_hi^b Hh t rho``;
* outgoing coefficients ``alpha_l(A) = <J, rho>``, ``alpha_r(A) = <Hh, rho>``;
* ``alpha = S phi + chi`` on every panel and every merged interval.

All per-mode quantities are computed for a unit incident coefficient and the
scale ``c_m`` is applied on evaluation.  The kernel for ``-m`` equals the
kernel for ``m``, so negative orders reuse the ``|m|`` solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import chebyshev as cb
from .potentials import RadialPotential
from .specfun import _jy, bessel_jy

HALF_PI_I = 0.5j * np.pi
_BATCH = 128


def _hhat(j, y):
    """``-(i pi/2)(J + iY)`` from real ``J``, ``Y`` arrays."""
    return 0.5 * np.pi * y - HALF_PI_I * j


# -- kernel and free-space Green's operator -------------------------------------

def kernel(m, k: float, r, t):
    """``G_m(r, t) = -(i pi/2) t J_m(k min) H_m(k max)`` for ``r, t > 0``."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(r <= 0) or np.any(t <= 0):
        raise ValueError("kernel requires r, t > 0")
    m = abs(int(m))
    lo = np.minimum(r, t)
    hi = np.maximum(r, t)
    j_lo, _ = bessel_jy(m, k * lo)
    j_hi, y_hi = bessel_jy(m, k * hi)
    out = t * j_lo * _hhat(j_hi, y_hi)
    return out[()] if out.ndim == 0 else out


def _panel_grid(a: float, b: float, max_len: float, n: int):
    npan = max(1, int(np.ceil((b - a) / max_len)))
    edges = np.linspace(a, b, npan + 1)
    x = cb.reference_nodes(n)
    half = 0.5 * np.diff(edges)
    nodes = edges[:-1, None] + half[:, None] * (x + 1.0)
    weights = half[:, None] * cb.reference_weights(n)
    return edges, nodes, weights


def greens_apply(m, k: float, g: Callable, support: tuple[float, float], n: int = 48,
                 max_panel: Optional[float] = None) -> Callable:
    """Return ``u(r) = int G_m(r, t) g(t) dt`` for ``g`` supported in ``support``.

    ``u`` solves ``u'' + u'/r + (k^2 - m^2/r^2) u = g`` and is outgoing.  The
    integrals are computed with composite Chebyshev panels and spectral
    antiderivatives, so ``u`` may be evaluated at any ``r > 0``.
    """
    a, b = map(float, support)
    if not 0 <= a < b:
        raise ValueError("support must satisfy 0 <= a < b")
    m = abs(int(m))
    if max_panel is None:
        max_panel = min(np.pi / k, (b - a) / 8.0)
    edges, nodes, weights = _panel_grid(a, b, max_panel, n)
    jn, yn = bessel_jy(m, k * nodes)
    hn = _hhat(jn, yn)
    gv = np.asarray(g(nodes), dtype=complex)
    fj = jn * nodes * gv
    fh = hn * nodes * gv
    v2c = cb.values_to_coeffs_matrix(n)
    cj = fj @ v2c.T  # per-panel coefficients, shape (P, n)
    ch = fh @ v2c.T
    tot_j = np.sum(weights * fj, axis=1)
    tot_h = np.sum(weights * fh, axis=1)
    below_j = np.concatenate([[0.0], np.cumsum(tot_j)])  # int_a^{edge_i}
    above_h = np.concatenate([np.cumsum(tot_h[::-1])[::-1], [0.0]])  # int_{edge_i}^b
    anti_j = cb.antiderivative_coeffs(cj.T)  # (n+1, P)
    anti_h = cb.antiderivative_coeffs(ch.T)

    def u(r):
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        if np.any(flat <= 0):
            raise ValueError("evaluation requires r > 0")
        jr, yr = bessel_jy(m, k * flat)
        hr = _hhat(jr, yr)
        p = np.clip(np.searchsorted(edges, flat, side="right") - 1, 0, len(edges) - 2)
        inside = (flat >= a) & (flat <= b)
        half = 0.5 * (edges[p + 1] - edges[p])
        x = np.clip((flat - edges[p]) / half - 1.0, -1.0, 1.0)
        part_j = half * cb.clenshaw(anti_j[:, p], x)
        part_h = half * (cb.clenshaw(anti_h[:, p], np.ones_like(x)) - cb.clenshaw(anti_h[:, p], x))
        left = np.where(flat > b, below_j[-1], np.where(inside, below_j[p] + part_j, 0.0))
        right = np.where(flat < a, above_h[0], np.where(inside, above_h[p + 1] + part_h, 0.0))
        out = (hr * left + jr * right).reshape(r.shape)
        return out[()] if out.ndim == 0 else out

    return u


# -- inner cut-off and adaptive partition -----------------------------------

def inner_cutoff(m, k: float, eps: float) -> float:
    """Largest radius below which ``|J_m(k r)| < eps/10`` throughout (0 for ``m = 0``)."""
    m = abs(int(m))
    thr = eps / 10.0
    if m == 0:
        return 0.0
    # |J_m| increases monotonically on [0, m] and J_m(m) > thr
    f = lambda x: _jy(m, np.array([x]))[0][0] - thr
    if f(float(m)) <= 0:
        raise RuntimeError(f"unexpected: J_{m}({m}) below threshold")
    x_lo = 0.0
    x = float(m)
    # bracket from below so brentq never evaluates at 0
    while True:
        x_try = 0.5 * x
        if x_try == 0.0 or f(x_try) < 0:
            x_lo = x_try
            break
        x = x_try
    if x_lo == 0.0:
        return 0.0
    root = brentq(f, x_lo, x, xtol=1e-15 * x, rtol=4 * np.finfo(float).eps, maxiter=200)
    return root / k


@dataclass
class Partition:
    """Panel edges (ascending) for one mode, with the samples used to accept them."""

    m: int
    k: float
    eps: float
    r_min: float
    edges: np.ndarray
    nodes: np.ndarray  # (P, n)
    j: np.ndarray  # J_m(k * nodes)
    y: np.ndarray  # Y_m(k * nodes)
    q: np.ndarray  # q(nodes)
    tails: np.ndarray  # accepted tail measure per panel

    @property
    def n_panels(self) -> int:
        return self.edges.size - 1


def adaptive_partition(m, k: float, q: RadialPotential, eps: float, n: int = 48) -> Partition:
    """March inward from the support radius choosing resolved Chebyshev panels.

    Candidate panels are at most half a wavelength long and never straddle a
    breakpoint of ``q``.  A candidate is halved until the combined tail
    measure of ``q``, ``J_m(k r)`` and ``H_m(k r)`` is at most ``eps / 10``.
    """
    m = abs(int(m))
    b = q.support_radius
    rmin = inner_cutoff(m, k, eps)
    if rmin >= b:
        empty = np.empty((0, n))
        return Partition(m, k, eps, b, np.array([b]), empty, empty, empty, empty, np.empty(0))
    thresh = eps / 10.0
    step = np.pi / k
    snap = 1e-12 * b
    too_small = 1e-14 * b
    x_ref = cb.reference_nodes(n)
    v2c = cb.values_to_coeffs_matrix(n)
    tail = cb.TAIL_START
    bps = [p for p in q.breakpoints if p > rmin]
    bi = len(bps) - 1

    cur = b
    edges, nodes_l, j_l, y_l, q_l, tails = [b], [], [], [], [], []
    while cur > rmin:
        while bi >= 0 and bps[bi] >= cur - snap:
            bi -= 1
        floor = max(rmin, bps[bi]) if bi >= 0 else rmin
        target = max(cur - step, floor)
        while True:
            if target - floor < snap:
                target = floor
            length = cur - target
            if length < too_small:
                raise RuntimeError(
                    f"mode {m}: panel below {cur:.6g} shrank to {length:.3g} without resolving")
            nodes = target + 0.5 * length * (x_ref + 1.0)
            with_lo = target > 0.0
            pts = np.concatenate(([target], nodes, [cur])) if with_lo else np.append(nodes, cur)
            jv, yv = _jy(m, k * pts)
            sl = slice(1, -1) if with_lo else slice(0, -1)
            jn, yn = jv[sl], yv[sl]
            qn = q(nodes)
            coef = v2c @ np.column_stack((qn, jn, jn + 1j * yn))
            tails_abs = np.max(np.abs(coef[tail:]), axis=0)
            scales = np.array([np.max(np.abs(qn)), np.max(np.abs(jv)), np.max(np.hypot(jv, yv))])
            ratio = np.divide(tails_abs, scales, out=np.zeros(3), where=scales > 0)
            e = length * float(np.max(ratio))
            if e <= thresh:
                break
            if target == floor and cur - floor < 2.0 * snap:
                # remainder too short to split further; accept it
                break
            target = 0.5 * (target + cur)
        edges.append(target)
        nodes_l.append(nodes)
        j_l.append(jn)
        y_l.append(yn)
        q_l.append(qn)
        tails.append(e)
        cur = target

    return Partition(m, k, eps, rmin, np.array(edges[::-1]), np.array(nodes_l[::-1]),
                     np.array(j_l[::-1]), np.array(y_l[::-1]), np.array(q_l[::-1]),
                     np.array(tails[::-1]))


# -- local panel solves --------------------------------------------------------

def _panel_operators(nodes, lengths, n):
    half = 0.5 * lengths
    il = half[:, None, None] * cb.left_integration_matrix(n)[None]
    w = half[:, None] * cb.reference_weights(n)[None]
    ir = w[:, None, :] - il
    return il, ir, w


def _solve_batch(k, nodes, jn, yn, qn, lengths, n):
    """Local solves for a batch of panels.

    Returns ``sol_h, sol_j, v`` of shape (P, n) and ``S`` (P, 2, 2), ``chi`` (P, 2).
    """
    hn = _hhat(jn, yn)
    il, ir, w = _panel_operators(nodes, lengths, n)
    k2q = (k * k) * qn
    jt = jn * nodes
    ht = hn * nodes
    op = hn[:, :, None] * il * jt[:, None, :] + jn[:, :, None] * ir * ht[:, None, :]
    fmat = k2q[:, :, None] * op
    idx = np.arange(n)
    fmat[:, idx, idx] += 1.0
    rhs = np.stack((k2q * hn, k2q * jn, -k2q * jn), axis=2).astype(complex)
    sol = np.linalg.solve(fmat, rhs)
    sol_h, sol_j, v = sol[..., 0], sol[..., 1], sol[..., 2]
    wj = w * jt
    wh = w * ht
    S = np.empty((nodes.shape[0], 2, 2), dtype=complex)
    S[:, 0, 0] = -np.sum(wj * sol_h, axis=1)
    S[:, 0, 1] = -np.sum(wj * sol_j, axis=1)
    S[:, 1, 0] = -np.sum(wh * sol_h, axis=1)
    S[:, 1, 1] = -np.sum(wh * sol_j, axis=1)
    chi = np.stack((np.sum(wj * v, axis=1), np.sum(wh * v, axis=1)), axis=1)
    return sol_h, sol_j, v, S, chi


@dataclass
class IntervalData:
    """Local data of one panel: responses, scattering matrix and coefficients."""

    panel: cb.ChebPanel
    sol_H: np.ndarray
    sol_J: np.ndarray
    V: Optional[np.ndarray]
    S: np.ndarray
    chi: np.ndarray
    phi: np.ndarray = field(default_factory=lambda: np.zeros(2, complex))
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(2, complex))


def build_interval(m, k: float, panel: cb.ChebPanel, q: RadialPotential,
                   include_source: bool = True) -> IntervalData:
    """Discretize and solve the local equation on one panel.

    ``sol_H`` and ``sol_J`` are the responses ``F^{-1}(k^2 q Hh)`` and
    ``F^{-1}(k^2 q J)``; ``V = -k^2 F^{-1}(q J)`` is the response to a unit
    incident mode.
    """
    m = abs(int(m))
    if panel.lo < 0:
        raise ValueError("panel must lie in r >= 0")
    nodes = np.asarray(panel.nodes)[None]
    jn, yn = bessel_jy(m, k * nodes)
    qn = q(nodes)
    try:
        sol_h, sol_j, v, S, chi = _solve_batch(k, nodes, jn, yn, qn, np.array([panel.length]),
                                               panel.n)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"singular panel matrix on [{panel.lo}, {panel.hi}] for mode {m}") from exc
    return IntervalData(panel, sol_h[0], sol_j[0], v[0] if include_source else None, S[0],
                        chi[0] if include_source else np.zeros(2, complex))


# -- merge and downward pass -------------------------------------------------

@dataclass(frozen=True)
class MergeData:
    """What the downward pass needs from one merge: ``x = X phi_U + z``."""

    X: np.ndarray  # (4, 2)
    z: np.ndarray  # (4,)


def _merge_scalar(sa, ca, sb, cb_):
    """Merge with Python complex scalars; ``sa = (a11, a12, a21, a22)``."""
    a11, a12, a21, a22 = sa
    b11, b12, b21, b22 = sb
    d = 1.0 - a12 * b21
    if d == 0 or not np.isfinite(abs(d)) or abs(d) < 1e-14:
        raise np.linalg.LinAlgError("singular coupling matrix in merge")

    def solve(y1, y2, y3, y4):
        x1 = (y1 + a12 * y4) / d
        x4 = y4 + b21 * x1
        return x1, y2 + a22 * x4, y3 + b11 * x1, x4

    # columns of diag(S_A, S_B) L
    c1 = solve(a11, a21, b11, b21)
    c2 = solve(a12, a22, b12, b22)
    z = solve(ca[0], ca[1], cb_[0], cb_[1])
    su = (c1[0] + c1[2], c2[0] + c2[2], c1[1] + c1[3], c2[1] + c2[3])
    chiu = (z[0] + z[2], z[1] + z[3])
    return su, chiu, (c1, c2, z)


def merge(S_A, chi_A, S_B, chi_B):
    """Merge an inner interval ``A`` with the adjacent outer interval ``B``.

    Returns ``(S_U, chi_U, MergeData)`` for ``U = A u B``.
    """
    S_A = np.asarray(S_A, dtype=complex)
    S_B = np.asarray(S_B, dtype=complex)
    sa = (S_A[0, 0], S_A[0, 1], S_A[1, 0], S_A[1, 1])
    sb = (S_B[0, 0], S_B[0, 1], S_B[1, 0], S_B[1, 1])
    su, chiu, (c1, c2, z) = _merge_scalar(sa, tuple(np.asarray(chi_A, complex)), sb,
                                          tuple(np.asarray(chi_B, complex)))
    X = np.array([c1, c2], dtype=complex).T
    return (np.array([[su[0], su[1]], [su[2], su[3]]]), np.array(chiu),
            MergeData(X, np.array(z, dtype=complex)))


def coupling_matrix(S_A, S_B):
    """The 4x4 matrix ``K`` with ``K (alpha_A, alpha_B) = diag(S_A, S_B) L phi_U + chi``."""
    S_A = np.asarray(S_A)
    S_B = np.asarray(S_B)
    K = np.eye(4, dtype=complex)
    K[0, 3] = -S_A[0, 1]
    K[1, 3] = -S_A[1, 1]
    K[2, 0] = -S_B[0, 0]
    K[3, 0] = -S_B[1, 0]
    return K


def split(data: MergeData, phi_U):
    """Incoming coefficients of ``A`` and ``B`` from those of ``A u B``."""
    phi_U = np.asarray(phi_U, dtype=complex)
    x = data.X @ phi_U + data.z
    return np.array([phi_U[0], phi_U[1] + x[3]]), np.array([phi_U[0] + x[0], phi_U[1]])


def sweep(S, chi, root_phi=(0.0, 0.0), record: bool = False):
    """Merge panels ``0..P-1`` (ascending radius) outermost first, then pass down.

    Returns ``(phi, S_root, chi_root, nodes)`` where ``phi`` is (P, 2) and
    ``nodes`` (only when ``record``) lists ``(S_U, chi_U, phi_U)`` for the
    merged interval ``[edge_i, b]`` for each ``i``.
    """
    P = S.shape[0]
    if P == 0:
        return np.zeros((0, 2), complex), np.zeros((2, 2), complex), np.zeros(2, complex), []
    s_list = [tuple(x) for x in S.reshape(P, 4).tolist()]
    c_list = [tuple(x) for x in chi.tolist()]
    su, cu = s_list[P - 1], c_list[P - 1]
    merges = [None] * P
    merged = [None] * P
    merged[P - 1] = (su, cu)
    for i in range(P - 2, -1, -1):
        su, cu, merges[i] = _merge_scalar(s_list[i], c_list[i], su, cu)
        merged[i] = (su, cu)

    phi = np.empty((P, 2), dtype=complex)
    pl, pr = complex(root_phi[0]), complex(root_phi[1])
    nodes = []
    for i in range(P - 1):
        if record:
            s_u, c_u = merged[i]
            nodes.append((np.array(s_u).reshape(2, 2), np.array(c_u), np.array([pl, pr])))
        c1, c2, z = merges[i]
        x1 = c1[0] * pl + c2[0] * pr + z[0]
        x4 = c1[3] * pl + c2[3] * pr + z[3]
        phi[i] = (pl, pr + x4)
        pl = pl + x1
    phi[P - 1] = (pl, pr)
    if record:
        s_u, c_u = merged[P - 1]
        nodes.append((np.array(s_u).reshape(2, 2), np.array(c_u), np.array([pl, pr])))
    s0, c0 = merged[0]
    return phi, np.array(s0).reshape(2, 2), np.array(c0), nodes


def downward_pass(merges: list[MergeData], root_phi):
    """Caterpillar split: ``merges[i]`` joins panel ``i`` with ``[edge_{i+1}, b]``.

    Returns incoming coefficients for panels ``0..len(merges)``.
    """
    phi_u = np.asarray(root_phi, dtype=complex)
    out = []
    for data in merges:
        phi_a, phi_u = split(data, phi_u)
        out.append(phi_a)
    out.append(phi_u)
    return np.array(out)


# -- full per-mode solve -------------------------------------------------------

@dataclass
class ModeSolution:
    """Solution of one angular mode; radial values scale with ``scale``.

    ``rho_coeffs`` and ``u_coeffs`` hold the unit-scale Chebyshev
    coefficients per panel (shape (P, n)).
    """

    m: int
    k: float
    eps: float
    b: float
    scale: complex
    r_min: float
    edges: np.ndarray
    rho_coeffs: np.ndarray
    u_coeffs: np.ndarray
    S: np.ndarray
    chi: np.ndarray
    phi: np.ndarray
    alpha: np.ndarray
    S_root: np.ndarray
    chi_root: np.ndarray
    tails: np.ndarray
    intervals: Optional[list] = None
    merge_nodes: Optional[list] = None

    @property
    def order(self) -> int:
        return abs(self.m)

    @property
    def n_panels(self) -> int:
        return self.edges.size - 1

    @property
    def exterior_coeff(self) -> complex:
        """``mu`` with ``u_m = mu H_m(k r)`` for ``r >= b``."""
        return self.scale * (-HALF_PI_I) * self.chi_root[0]

    @property
    def interior_coeff(self) -> complex:
        """``beta`` with ``u_m = beta J_m(k r)`` for ``r <= r_min``."""
        return self.scale * self.chi_root[1]

    def panel(self, i: int) -> cb.ChebPanel:
        return cb.cheb_nodes_weights(self.edges[i], self.edges[i + 1], self.rho_coeffs.shape[1])

    def _piecewise(self, coeffs, r):
        p = np.clip(np.searchsorted(self.edges, r, side="right") - 1, 0, self.n_panels - 1)
        lo, hi = self.edges[p], self.edges[p + 1]
        x = np.clip((2.0 * r - (lo + hi)) / (hi - lo), -1.0, 1.0)
        return cb.clenshaw(coeffs[p].T, x)

    def rho(self, r):
        """Density at radii ``r`` (zero outside the panels)."""
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        out = np.zeros(flat.shape, complex)
        if self.n_panels:
            ins = (flat >= self.edges[0]) & (flat <= self.edges[-1])
            out[ins] = self._piecewise(self.rho_coeffs, flat[ins])
        out = self.scale * out.reshape(r.shape)
        return out[()] if out.ndim == 0 else out

    def u(self, r, unit: bool = False):
        """Scattered mode ``u_m(r)`` for ``r > 0`` (``unit`` drops the scale)."""
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        if np.any(flat <= 0):
            raise ValueError("u_m is evaluated at r > 0")
        out = np.zeros(flat.shape, complex)
        if self.n_panels:
            outer = flat > self.b
            inner = flat < self.edges[0]
            mid = ~outer & ~inner
            if np.any(outer):
                j, y = _jy(self.order, self.k * flat[outer])
                out[outer] = (-HALF_PI_I) * self.chi_root[0] * (j + 1j * y)
            if np.any(inner):
                j, _ = _jy(self.order, self.k * flat[inner])
                out[inner] = self.chi_root[1] * j
            if np.any(mid):
                out[mid] = self._piecewise(self.u_coeffs, flat[mid])
        if not unit:
            out = self.scale * out
        out = out.reshape(r.shape)
        return out[()] if out.ndim == 0 else out

    def with_scale(self, m: int, scale: complex) -> "ModeSolution":
        """The same radial solution reused for order ``m`` (same ``|m|``) and a new scale."""
        if abs(int(m)) != self.order:
            raise ValueError("reuse requires the same |m|")
        clone = ModeSolution(**{**self.__dict__})
        clone.m = int(m)
        clone.scale = complex(scale)
        return clone


def solve_mode(m, k: float, q: RadialPotential, eps: float = 1e-13, c_m: complex = 1.0,
               n: int = 48, keep_internals: bool = False,
               partition: Optional[Partition] = None) -> ModeSolution:
    """Solve the radial integral equation for mode ``m`` with incident scale ``c_m``."""
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    if eps <= 0:
        raise ValueError("eps must be positive")
    order = abs(int(m))
    b = q.support_radius
    if partition is not None:
        part = partition
    elif q.identically_zero:
        empty = np.empty((0, n))
        part = Partition(order, k, eps, b, np.array([b]), empty, empty, empty, empty, np.empty(0))
    else:
        part = adaptive_partition(order, k, q, eps, n)
    P = part.n_panels
    if P == 0:
        z2 = np.zeros((0, 2), complex)
        return ModeSolution(int(m), k, eps, b, complex(c_m), part.r_min, part.edges,
                            np.zeros((0, n), complex), np.zeros((0, n), complex),
                            np.zeros((0, 2, 2), complex), z2, z2, z2,
                            np.zeros((2, 2), complex), np.zeros(2, complex), part.tails,
                            [] if keep_internals else None, [] if keep_internals else None)

    lengths = np.diff(part.edges)
    sol_h = np.empty((P, n), complex)
    sol_j = np.empty((P, n), complex)
    V = np.empty((P, n), complex)
    S = np.empty((P, 2, 2), complex)
    chi = np.empty((P, 2), complex)
    for s in range(0, P, _BATCH):
        e = min(s + _BATCH, P)
        try:
            out = _solve_batch(k, part.nodes[s:e], part.j[s:e], part.y[s:e], part.q[s:e],
                               lengths[s:e], n)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"mode {m}: singular panel matrix in panels {s}..{e - 1}") from exc
        sol_h[s:e], sol_j[s:e], V[s:e], S[s:e], chi[s:e] = out

    phi, S_root, chi_root, rec = sweep(S, chi, record=keep_internals)
    alpha = np.einsum("pij,pj->pi", S, phi) + chi
    rho = -phi[:, :1] * sol_h - phi[:, 1:] * sol_j + V

    # u at the nodes from the local integrals plus incoming coefficients
    hn = _hhat(part.j, part.y)
    jn = part.j
    t = part.nodes
    il, ir, _ = _panel_operators(t, lengths, n)
    left = phi[:, :1] + np.einsum("pij,pj->pi", il, jn * t * rho)
    right = phi[:, 1:] + np.einsum("pij,pj->pi", ir, hn * t * rho)
    u_nodes = hn * left + jn * right

    v2c = cb.values_to_coeffs_matrix(n)
    rho_c = rho @ v2c.T
    u_c = u_nodes @ v2c.T

    intervals = None
    if keep_internals:
        intervals = []
        for i in range(P):
            pan = cb.cheb_nodes_weights(part.edges[i], part.edges[i + 1], n)
            intervals.append(IntervalData(pan, sol_h[i], sol_j[i], V[i], S[i], chi[i],
                                          phi[i].copy(), alpha[i].copy()))
    return ModeSolution(int(m), k, eps, b, complex(c_m), part.r_min, part.edges, rho_c, u_c,
                        S, chi, phi, alpha, S_root, chi_root, part.tails, intervals, rec)


def eval_mode(sol: ModeSolution, r):
    """``u_m(r)`` including the incident scale."""
    return sol.u(r)


# -- independent residual check ----------------------------------------------

def integral_equation_residual(sol: ModeSolution, q: RadialPotential, r, n_gl: int = 64):
    """``|rho + k^2 q (u + J)| / max|rho|`` at radii ``r`` inside the panels (unit scale).

    ``u`` is recomputed from the Chebyshev density by Gauss-Legendre
    quadrature on every panel, split at the target radius, so this check
    does not reuse the spectral integration matrices of the solver.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    m, k = sol.order, sol.k
    if sol.n_panels == 0:
        return np.zeros(r.shape)
    g, gw = np.polynomial.legendre.leggauss(n_gl)
    edges = sol.edges

    def integrals(lo, hi):
        half = 0.5 * (hi - lo)
        t = lo[:, None] + half[:, None] * (g + 1.0)
        rho_t = sol._piecewise(sol.rho_coeffs, t.ravel()).reshape(t.shape)
        j, y = _jy(m, k * t)
        w = half[:, None] * gw
        return (np.sum(w * j * t * rho_t, axis=1), np.sum(w * _hhat(j, y) * t * rho_t, axis=1))

    lo_e, hi_e = edges[:-1], edges[1:]
    full_j, full_h = integrals(lo_e, hi_e)
    below = np.concatenate([[0.0], np.cumsum(full_j)])
    above = np.concatenate([np.cumsum(full_h[::-1])[::-1], [0.0]])
    p = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, sol.n_panels - 1)
    pj, _ = integrals(edges[p], r)
    _, ph = integrals(r, edges[p + 1])
    left = below[p] + pj
    right = above[p + 1] + ph
    jr, yr = _jy(m, k * r)
    u = _hhat(jr, yr) * left + jr * right
    rho_r = sol._piecewise(sol.rho_coeffs, r)
    res = rho_r + k * k * q(r) * (u + jr)
    scale = np.max(np.abs(_node_rho(sol)))
    return np.abs(res) / scale if scale > 0 else np.abs(res)


def _node_rho(sol: ModeSolution):
    """Unit-scale density at the panel nodes."""
    x = cb.reference_nodes(sol.rho_coeffs.shape[1])
    return cb.clenshaw(sol.rho_coeffs.T[:, :, None], x[None, :])
