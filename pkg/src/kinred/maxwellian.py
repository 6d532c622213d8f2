"""Local and global Maxwellians, relative entropies and the ideal-gas EOS."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grid import PhaseGrid, integrate_p, integrate_q, integrate_qp
from .moments import (
    LOG_FLOOR,
    generalized_entropy_density,
    kinetic_velocity_temperature,
    mass_density,
    y_a,
)

LOG_2PIE = np.log(2.0 * np.pi * np.e)


@dataclass(frozen=True)
class MeanState:
    rho0: float
    u0: np.ndarray
    theta0: float

    def __post_init__(self):
        if not (self.rho0 > 0 and self.theta0 > 0):
            raise ValueError(f"mean state needs rho0 > 0 and theta0 > 0, got {self.rho0}, {self.theta0}")


def maxwellian(grid: PhaseGrid, rho, u, theta) -> np.ndarray:
    """rho/(2 pi theta)^(n/2) exp(-|p-u|^2/(2 theta)) on the phase grid.

    ``rho`` and ``theta`` are scalars or spatial fields; ``u`` is a length-n
    vector or a (n,)+qshape vector field.
    """
    n = grid.n
    rho = np.broadcast_to(np.asarray(rho, dtype=float), grid.qshape)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), grid.qshape)
    u = np.asarray(u, dtype=float)
    if u.ndim == 1 or u.ndim == 0:
        u = np.broadcast_to(u.reshape((n,) + (1,) * n), (n,) + grid.qshape)
    if np.any(theta <= 0):
        raise ValueError("temperature must be positive everywhere")
    th = grid.spatial_to_phase(theta)
    c2 = sum((grid.pcoord(i) - grid.spatial_to_phase(u[i])) ** 2 for i in range(n))
    return grid.spatial_to_phase(rho) / (2.0 * np.pi * th) ** (n / 2) * np.exp(-c2 / (2.0 * th))


def local_moments(grid: PhaseGrid, f):
    """(rho, u, theta) of f."""
    u, theta = kinetic_velocity_temperature(grid, f)
    return mass_density(grid, f), u, theta


def local_maxwellian(grid: PhaseGrid, f) -> np.ndarray:
    rho, u, theta = local_moments(grid, f)
    return maxwellian(grid, rho, u, theta)


def mean_state(grid: PhaseGrid, f) -> MeanState:
    """Domain means rho0, u0, theta0 of f on the torus."""
    vol = grid.volume
    rho0 = integrate_qp(grid, f) / vol
    u0 = np.array([integrate_qp(grid, grid.pcoord(i) * f) for i in range(grid.n)]) / (vol * rho0)
    p2 = integrate_qp(grid, grid.psquared() * f) / vol
    theta0 = (p2 / rho0 - float(u0 @ u0)) / grid.n
    return MeanState(rho0, u0, theta0)


def global_maxwellian(grid: PhaseGrid, f, domain: str = "torus"):
    if domain != "torus":
        raise ValueError("the global Maxwellian is only defined on the torus")
    ms = mean_state(grid, f)
    return maxwellian(grid, ms.rho0, ms.u0, ms.theta0), ms


def relative_entropy_density(grid: PhaseGrid, f1, f2, threshold: float = 1e-14) -> np.ndarray:
    """r[f1|f2] = int (f1 log(f1/f2) - f1 + f2) dp, non-negative for any pair.

    For f2 = f_m or f_M the mass term integrates to zero, so its sign does not
    matter there; this is the sign that keeps r >= 0 in general.
    """
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    bad = (f2 <= 0) & (f1 > threshold)
    if np.any(bad):
        warnings.warn("f2 vanishes where f1 is positive; relative entropy is unbounded", RuntimeWarning, stacklevel=2)
    cross = np.where(f1 > 0, f1 * np.log(np.maximum(f2, LOG_FLOOR)), 0.0)
    return integrate_p(grid, y_a(f1, 1) - cross - f1 + f2)


def relative_entropy_total(grid: PhaseGrid, f1, f2) -> float:
    return integrate_q(grid, relative_entropy_density(grid, f1, f2))


def eos_temperature(rho, s, n: int):
    """Ideal-gas temperature rho^(2/n)/(2 pi e) exp(-(2/n) s/rho)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("density must be positive")
    out = rho ** (2.0 / n) / (2.0 * np.pi * np.e) * np.exp(-(2.0 / n) * np.asarray(s) / rho)
    return out if np.ndim(out) else float(out)


def eos_specific_entropy(rho, T, n: int):
    """Inverse of eos_temperature: s/rho = log(rho T^(-n/2)) - (n/2) log(2 pi e)."""
    return np.log(np.asarray(rho) * np.asarray(T) ** (-n / 2.0)) - 0.5 * n * LOG_2PIE


def theta_identity_check(grid: PhaseGrid, f):
    """Three evaluations of the kinetic temperature and their residuals.

    Returns (theta, T(rho, s[f_m]), T(rho, s) exp((2/n) r/rho), residuals) where
    residuals are the max relative deviations of the second and third from theta.
    """
    n = grid.n
    rho, u, theta = local_moments(grid, f)
    fm = maxwellian(grid, rho, u, theta)
    s = generalized_entropy_density(grid, f, 1)
    s_m = generalized_entropy_density(grid, fm, 1)
    r = relative_entropy_density(grid, f, fm)
    T_fm = eos_temperature(rho, s_m, n)
    T_rel = eos_temperature(rho, s, n) * np.exp((2.0 / n) * r / rho)
    res = (float(np.max(np.abs(T_fm / theta - 1))), float(np.max(np.abs(T_rel / theta - 1))))
    return theta, T_fm, T_rel, res


def h_func(z):
    """(1+z) log(1+z) - z, series for |z| < 1e-4."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-4
    zs = np.where(small, z, 0.0)
    series = zs**2 / 2 - zs**3 / 6 + zs**4 / 12
    zl = np.where(small, 1.0, z)
    direct = (1 + zl) * np.log1p(zl) - zl
    return np.where(small, series, direct)


def k_func(z):
    """z - log(1+z), series for |z| < 1e-4."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-4
    zs = np.where(small, z, 0.0)
    series = zs**2 / 2 - zs**3 / 3 + zs**4 / 4
    zl = np.where(small, 1.0, z)
    direct = zl - np.log1p(zl)
    return np.where(small, series, direct)


def local_global_entropy_terms(grid: PhaseGrid, f):
    """Density, thermal and velocity pieces of R[f_m|f_M] as spatial fields."""
    n = grid.n
    rho, u, theta = local_moments(grid, f)
    ms = mean_state(grid, f)
    dens = ms.rho0 * h_func((rho - ms.rho0) / ms.rho0)
    therm = 0.5 * n * rho * k_func((theta - ms.theta0) / ms.theta0)
    du2 = sum((u[i] - ms.u0[i]) ** 2 for i in range(n))
    vel = rho * du2 / (2.0 * ms.theta0)
    return dens, therm, vel
