"""Hydrodynamic images of distribution functions.

Momentum density, generalized entropy densities s_a = int f (log f)^a dp,
Tsallis densities int f^(1+xi) dp, the polynomial map int f^(1+a) dp,
kinetic velocity/temperature and unipotent gauge shifts of the entropies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .grid import PhaseGrid, integrate_p, integrate_q

LOG_FLOOR = 1e-300
XI_INTERVAL = (-0.5, 1.0)
DEFAULT_MAX_ORDER = 8


def _safe_log(x):
    return np.log(np.maximum(x, LOG_FLOOR))


def y_a(x, a: int):
    """x (log x)^a, continuous at x = 0."""
    if a < 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("y_a is defined for x >= 0 only")
    if a == 0:
        return x.copy() if x.ndim else float(x)
    out = x * _safe_log(x) ** a
    return out if out.ndim else float(out)


def dy_a(x, a: int):
    """First derivative (log x)^a + a (log x)^(a-1)."""
    x = np.asarray(x, dtype=float)
    if a == 0:
        return np.ones_like(x)
    L = _safe_log(x)
    return L**a + a * L ** (a - 1)


def x_d2y_a(x, a: int):
    """x * y_a''(x) = a (log x)^(a-1) + a (a-1) (log x)^(a-2); finite as x -> 0 for a = 1."""
    x = np.asarray(x, dtype=float)
    if a == 0:
        return np.zeros_like(x)
    L = _safe_log(x)
    out = a * L ** (a - 1)
    if a >= 2:
        out = out + a * (a - 1) * L ** (a - 2)
    return out


@dataclass
class HydroState:
    """Point of s*_A: momentum density m (shape (n,)+qshape) and s[0..A]."""

    grid: PhaseGrid
    m: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.s = np.asarray(self.s, dtype=float)
        q = self.grid.qshape
        if self.m.shape != (self.grid.n,) + q or self.s.shape[1:] != q:
            raise ValueError(f"state shapes {self.m.shape}, {self.s.shape} do not match grid {q}")

    @property
    def A(self) -> int:
        return self.s.shape[0] - 1

    @property
    def rho(self) -> np.ndarray:
        return self.s[0]

    def truncate(self, A: int) -> "HydroState":
        return HydroState(self.grid, self.m, self.s[: A + 1])

    def totals(self) -> np.ndarray:
        return np.array([integrate_q(self.grid, sa) for sa in self.s])

    def to_csv(self, path) -> None:
        n = self.grid.n
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q_index"] + [f"m{i}" for i in range(n)] + [f"s{a}" for a in range(self.A + 1)])
            for idx in np.ndindex(*self.grid.qshape):
                row = ["-".join(map(str, idx))]
                row += [f"{self.m[(i,) + idx]:.17g}" for i in range(n)]
                row += [f"{self.s[(a,) + idx]:.17g}" for a in range(self.A + 1)]
                w.writerow(row)


def mass_density(grid: PhaseGrid, f) -> np.ndarray:
    return integrate_p(grid, f)


def momentum_density(grid: PhaseGrid, f) -> np.ndarray:
    return np.stack([integrate_p(grid, grid.pcoord(i) * f) for i in range(grid.n)])


def generalized_entropy_density(grid: PhaseGrid, f, a: int) -> np.ndarray:
    return integrate_p(grid, y_a(f, a))


def tsallis_density(grid: PhaseGrid, f, xi: float) -> np.ndarray:
    lo, hi = XI_INTERVAL
    if not lo <= xi <= hi:
        raise ValueError(f"xi={xi} outside the supported interval [{lo}, {hi}]")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("Tsallis density needs f >= 0")
    return integrate_p(grid, f ** (1.0 + xi))


def poisson_map_JA(grid: PhaseGrid, f, A: int) -> HydroState:
    s = np.stack([generalized_entropy_density(grid, f, a) for a in range(A + 1)])
    return HydroState(grid, momentum_density(grid, f), s)


def poisson_map_Jxi(grid: PhaseGrid, f, xi: float) -> HydroState:
    """Image in s*_0 with the Tsallis density in the single scalar slot."""
    return HydroState(grid, momentum_density(grid, f), tsallis_density(grid, f, xi)[None])


def poisson_map_Jpol(grid: PhaseGrid, f, A: int) -> HydroState:
    f = np.asarray(f, dtype=float)
    s = np.stack([integrate_p(grid, f ** (1 + a)) for a in range(A + 1)])
    return HydroState(grid, momentum_density(grid, f), s)


def kinetic_velocity_temperature(grid: PhaseGrid, f):
    """Mean velocity u = m/rho and kinetic temperature theta."""
    rho = mass_density(grid, f)
    if np.any(rho <= 0):
        raise ValueError("mass density must be positive")
    u = momentum_density(grid, f) / rho
    c2 = 0.0
    for i in range(grid.n):
        c2 = c2 + (grid.pcoord(i) - grid.spatial_to_phase(u[i])) ** 2
    theta = integrate_p(grid, c2 * f) / (grid.n * rho)
    return u, theta


def _check_gauge(Lam: np.ndarray) -> np.ndarray:
    Lam = np.asarray(Lam, dtype=float)
    if Lam.ndim != 2 or Lam.shape[0] != Lam.shape[1]:
        raise ValueError("gauge matrix must be square")
    if np.any(np.tril(Lam) != 0):
        raise ValueError("gauge matrix must be strictly upper triangular")
    return Lam


def gauge_shift(state: HydroState, Lam) -> HydroState:
    """s~_a = s_a + sum_{b<a} s_b Lam[b, a]; m unchanged."""
    Lam = _check_gauge(Lam)
    if Lam.shape[0] != state.A + 1:
        raise ValueError(f"gauge matrix must be {state.A + 1}x{state.A + 1}")
    U = np.eye(state.A + 1) + Lam
    s = np.tensordot(U.T, state.s, axes=1)
    return HydroState(state.grid, state.m.copy(), s)


def inverse_gauge(Lam) -> np.ndarray:
    """Strictly upper-triangular Lam' with gauge_shift(., Lam') undoing gauge_shift(., Lam)."""
    Lam = _check_gauge(Lam)
    U = np.eye(Lam.shape[0]) + Lam
    return np.triu(np.linalg.inv(U), 1)


def gauged_y(x, Lam, a: int):
    """y~_a = y_a + sum_{b<a} y_b Lam[b, a]."""
    Lam = _check_gauge(Lam)
    out = y_a(x, a)
    for b in range(a):
        out = out + Lam[b, a] * y_a(x, b)
    return out


def smooth_bump(x, width: float = 1.0):
    """C-infinity bump exp(-1/(1-(x/w)^2)) supported on |x| < width."""
    z = np.asarray(x, dtype=float) / width
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


def bimodal_counterexample(grid: PhaseGrid, c: float, width: float = 1.0, amplitude: float = 1.0):
    """(B(p-c) + B(p+c))/2 with B a bump of half-width ``width``; constant in q (n = 1)."""
    if grid.n != 1:
        raise ValueError("bimodal counterexample is defined for n = 1")
    if c < width:
        raise ValueError(f"c={c} must be >= the bump half-width {width} for disjoint supports")
    if c + width > grid.Pmax:
        raise ValueError("bump pair does not fit inside the p box")
    p = grid.p
    row = 0.5 * amplitude * (smooth_bump(p - c, width) + smooth_bump(p + c, width))
    return np.broadcast_to(row, grid.shape).copy()


def taylor_remainder(grid: PhaseGrid, f, xi: float, A: int) -> np.ndarray:
    """rho_xi - sum_{a<=A} xi^a s_a / a! as a spatial field."""
    total = tsallis_density(grid, f, xi)
    for a in range(A + 1):
        total = total - xi**a / math.factorial(a) * generalized_entropy_density(grid, f, a)
    return total
