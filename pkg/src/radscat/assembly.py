"""Full two-dimensional solve: mode loop, field evaluation, residual maps, grid I/O."""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import factorial
from typing import Optional

import numpy as np

from .incident import IncidentField, RingModes, ring_modes
from .modesolver import ModeSolution, solve_mode
from .potentials import RadialPotential, zero_potential


@dataclass(frozen=True)
class Grid:
    """Uniform ``nx`` by ``ny`` lattice including both end points in each axis."""

    nx: int
    ny: int
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("grid extent must be positive")

    @classmethod
    def square(cls, n: int, extent: float) -> "Grid":
        """``n x n`` points on ``[-extent, extent]^2``."""
        return cls(n, n, -extent, extent, -extent, extent)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.ymin, self.ymax, self.ny)

    @property
    def hx(self) -> float:
        return (self.xmax - self.xmin) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.ymax - self.ymin) / (self.ny - 1)

    def mesh(self):
        """``(X, Y)`` of shape ``(ny, nx)``; row index is ``y``."""
        return np.meshgrid(self.x, self.y)

    def padded(self, p: int) -> "Grid":
        return Grid(self.nx + 2 * p, self.ny + 2 * p, self.xmin - p * self.hx,
                    self.xmax + p * self.hx, self.ymin - p * self.hy, self.ymax + p * self.hy)


@dataclass
class WaveField:
    grid: Grid
    values: np.ndarray  # complex, shape (ny, nx)
    k: float
    meta: dict = field(default_factory=dict)


@dataclass
class ResidualMap:
    grid: Grid
    values: np.ndarray  # real, shape (ny, nx)
    k: float
    mask: Optional[np.ndarray] = None  # True where the point counts in statistics
    meta: dict = field(default_factory=dict)


@dataclass
class ScatteringState:
    """Everything needed to evaluate ``u_s`` anywhere in the plane.

    ``solutions[j]`` is the unit-scale radial solution for order ``|m| = j``;
    the incident coefficients live in ``modes``.
    """

    q: RadialPotential
    source: IncidentField
    k: float
    eps: float
    modes: RingModes
    solutions: list
    timings: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.modes.M

    def panel_counts(self) -> list:
        return [s.n_panels for s in self.solutions]

    def mode(self, m: int) -> ModeSolution:
        """Scaled solution for signed order ``m``."""
        return self.solutions[abs(m)].with_scale(m, self.modes.coeff(m))

    def scattered(self, x, y):
        return eval_scattered(self, x, y)

    def total(self, x, y):
        return self.source(x, y) + eval_scattered(self, x, y)


def solve_scattering(q: RadialPotential, src: IncidentField, eps: float = 1e-13,
                     threads: int = 1, ring_radius: Optional[float] = None,
                     n_ring: int = 4000, keep_internals: bool = False) -> ScatteringState:
    """Mode decomposition of the incident field, then one radial solve per ``|m| <= M``.

    Orders ``-m`` reuse the ``+m`` radial solution because the kernels agree.
    """
    k = src.k
    t0 = time.perf_counter()
    R = q.support_radius if ring_radius is None else ring_radius
    modes = ring_modes(src, R, eps, n0=n_ring)
    t1 = time.perf_counter()

    def one(order):
        try:
            return solve_mode(order, k, q, eps, 1.0, keep_internals=keep_internals)
        except Exception as exc:
            raise RuntimeError(f"mode m = {order} (k = {k:g}) failed: {exc}") from exc

    orders = range(modes.M + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            sols = list(ex.map(one, orders))
    else:
        sols = [one(o) for o in orders]
    t2 = time.perf_counter()
    timings = {"ring_modes": t1 - t0, "mode_solves": t2 - t1, "total": t2 - t0}
    return ScatteringState(q, src, k, eps, modes, sols, timings)


def _radial_table(sol: ModeSolution, r_unique: np.ndarray) -> np.ndarray:
    """Unit-scale ``u_m`` at sorted unique radii, with ``r = 0`` allowed."""
    out = np.zeros(r_unique.shape, complex)
    pos = r_unique > 0
    if np.any(pos):
        out[pos] = sol.u(r_unique[pos], unit=True)
    if not np.all(pos) and sol.order == 0 and sol.n_panels:
        out[~pos] = sol.chi_root[1]  # beta * J_0(0)
    return out


def eval_scattered(state: ScatteringState, x, y) -> np.ndarray:
    """``u_s = (1/2 pi) sum_{|m| <= M} c_m u_m(r) e^{i m theta}``.

    Phases are built by repeated multiplication with ``e^{i theta}`` and the
    modes are summed in increasing ``|m|``, so results are reproducible.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(x.shape, y.shape)
    xf = np.broadcast_to(x, shape).ravel()
    yf = np.broadcast_to(y, shape).ravel()
    r = np.hypot(xf, yf)
    z = np.where(r > 0, (xf + 1j * yf) / np.where(r > 0, r, 1.0), 1.0)
    r_u, inv = np.unique(r, return_inverse=True)
    acc = np.zeros(r.shape, complex)
    zp = np.ones(r.shape, complex)
    for order, sol in enumerate(state.solutions):
        if order > 0:
            zp = zp * z
        if sol.n_panels == 0:
            # u_m vanishes; c_m may be huge (point sources at low k)
            continue
        vals = _radial_table(sol, r_u)[inv]
        if order == 0:
            acc += state.modes.coeff(0) * vals
        else:
            acc += vals * (state.modes.coeff(order) * zp + state.modes.coeff(-order) * np.conj(zp))
    out = (acc / (2 * np.pi)).reshape(shape)
    return out[()] if out.ndim == 0 else out


def field_on_grid(state: ScatteringState, grid: Grid, which: str = "total") -> WaveField:
    X, Y = grid.mesh()
    us = eval_scattered(state, X, Y)
    if which == "scattered":
        vals = us
    elif which == "total":
        vals = state.source(X, Y) + us
    elif which == "incident":
        vals = state.source(X, Y)
    else:
        raise ValueError(f"unknown field kind {which!r}")
    meta = {"field": which, "potential": state.q.label, "source": state.source.kind,
            "eps": state.eps, "M": state.M}
    return WaveField(grid, vals, state.k, meta)


# -- residual maps ---------------------------------------------------------------

def second_derivative_stencil(p: int) -> np.ndarray:
    """Central weights ``a_0..a_p`` of order ``2p`` for ``h^2 f''``."""
    if p < 1:
        raise ValueError("stencil half-width must be >= 1")
    a = np.zeros(p + 1)
    for j in range(1, p + 1):
        a[j] = 2.0 * (-1) ** (j + 1) * factorial(p) ** 2 / (j * j * factorial(p - j) * factorial(p + j))
    a[0] = -2.0 * np.sum(a[1:])
    return a


def laplacian(u: np.ndarray, hx: float, hy: float, p: int = 1) -> np.ndarray:
    """Discrete Laplacian on the interior of a grid padded by ``p`` points."""
    a = second_derivative_stencil(p)
    ny, nx = u.shape
    core = u[p:ny - p, p:nx - p]
    dxx = a[0] * core
    dyy = a[0] * core
    for j in range(1, p + 1):
        dxx = dxx + a[j] * (u[p:ny - p, p + j:nx - p + j] + u[p:ny - p, p - j:nx - p - j])
        dyy = dyy + a[j] * (u[p + j:ny - p + j, p:nx - p] + u[p - j:ny - p - j, p:nx - p])
    return dxx / hx**2 + dyy / hy**2


def residual_from_values(u_padded: np.ndarray, q_core: np.ndarray, k: float, hx: float,
                         hy: float, p: int) -> np.ndarray:
    """``|(1/k^2) Delta u + (1 + q) u|`` on the unpadded core."""
    ny, nx = u_padded.shape
    core = u_padded[p:ny - p, p:nx - p]
    return np.abs(laplacian(u_padded, hx, hy, p) / k**2 + (1.0 + q_core) * core)


def residual_map(state: ScatteringState, grid: Grid, stencil: int = 1,
                 control: bool = True, exclude_width: Optional[float] = None) -> ResidualMap:
    """Residual of the total field; ``stencil`` is the half-width ``p`` (1 = 5-point).

    With ``control`` the same computation is run on the incident field with
    ``q = 0``; its residual is the finite-difference floor and is stored in
    ``meta['floor']``.  Points within ``exclude_width`` (default
    ``max(2, p) h``) of a breakpoint radius, or of ``b`` when ``q`` jumps
    there, are masked out of statistics.
    """
    p = int(stencil)
    big = grid.padded(p)
    X, Y = big.mesh()
    ui = state.source(X, Y)
    u = ui + eval_scattered(state, X, Y)
    Xc, Yc = grid.mesh()
    rc = np.hypot(Xc, Yc)
    qc = state.q(rc)
    E = residual_from_values(u, qc, state.k, grid.hx, grid.hy, p)
    meta = {"stencil_half_width": p}
    if control:
        meta["floor"] = residual_from_values(ui, np.zeros_like(qc), state.k, grid.hx, grid.hy, p)
    width = exclude_width if exclude_width is not None else max(2, p) * max(grid.hx, grid.hy)
    radii = list(state.q.breakpoints)
    b = state.q.support_radius
    inside_edge = float(state.q(np.array([b * (1 - 1e-12)]))[0])
    if abs(inside_edge) > 1e-12:
        radii.append(b)
    mask = np.ones(rc.shape, bool)
    for rad in radii:
        mask &= np.abs(rc - rad) > width
    return ResidualMap(grid, E, state.k, mask, meta)


def solver_attributed(res: ResidualMap) -> np.ndarray:
    """``max(E - floor, 0)``; needs a map computed with ``control=True``."""
    return np.maximum(res.values - res.meta["floor"], 0.0)


# -- files -----------------------------------------------------------------------

def _header(grid: Grid, k: float) -> str:
    return (f"# nx ny xmin xmax ymin ymax k\n"
            f"# {grid.nx} {grid.ny} {grid.xmin:.17e} {grid.xmax:.17e} "
            f"{grid.ymin:.17e} {grid.ymax:.17e} {k:.17e}\n")


def write_grid(path: str, wf: WaveField) -> None:
    """Text grid: two header lines, then ``x y re im`` rows (x fastest)."""
    X, Y = wf.grid.mesh()
    data = np.column_stack((X.ravel(), Y.ravel(), wf.values.real.ravel(), wf.values.imag.ravel()))
    with open(path, "w") as fh:
        fh.write(_header(wf.grid, wf.k))
        np.savetxt(fh, data, fmt="%.17e")


def write_scalar_grid(path: str, grid: Grid, k: float, values: np.ndarray) -> None:
    """Text grid of real values: two header lines, then ``x y value`` rows."""
    X, Y = grid.mesh()
    data = np.column_stack((X.ravel(), Y.ravel(), np.asarray(values, dtype=float).ravel()))
    with open(path, "w") as fh:
        fh.write(_header(grid, k))
        np.savetxt(fh, data, fmt="%.17e")


def write_residual(path: str, rm: ResidualMap, values: Optional[np.ndarray] = None) -> None:
    write_scalar_grid(path, rm.grid, rm.k, rm.values if values is None else values)


def read_grid(path: str):
    """Return ``(Grid, k, values)``; ``values`` is complex for field files, real for residuals."""
    with open(path) as fh:
        fh.readline()
        parts = fh.readline().lstrip("#").split()
    nx, ny = int(parts[0]), int(parts[1])
    xmin, xmax, ymin, ymax, k = map(float, parts[2:7])
    data = np.loadtxt(path, comments="#", ndmin=2)
    grid = Grid(nx, ny, xmin, xmax, ymin, ymax)
    if data.shape[1] == 4:
        vals = (data[:, 2] + 1j * data[:, 3]).reshape(ny, nx)
    else:
        vals = data[:, 2].reshape(ny, nx)
    return grid, k, vals


def metadata(state: ScatteringState) -> dict:
    """Deterministic run summary (no timings)."""
    return {
        "potential": state.q.label,
        "source": state.source.kind,
        "k": state.k,
        "eps": state.eps,
        "M": state.M,
        "ring_samples": state.modes.n_samples,
        "panel_counts": state.panel_counts(),
    }


def write_metadata(path: str, meta: dict) -> None:
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_mode_table(path: str, state: ScatteringState) -> None:
    """CSV of radial discretization size per order: ``m,panels,radial_points,r_min``."""
    with open(path, "w") as fh:
        fh.write("m,panels,radial_points,r_min\n")
        for s in state.solutions:
            npts = s.n_panels * s.rho_coeffs.shape[1]
            fh.write(f"{s.order},{s.n_panels},{npts},{s.r_min:.17e}\n")


def zero_state(src: IncidentField, eps: float = 1e-13, b: float = 2 * np.pi) -> ScatteringState:
    """Convenience: solve with ``q = 0`` (a control run)."""
    return solve_scattering(zero_potential(b), src, eps)
