"""Kinetic, fluid and mean-field Hamiltonians and the decomposition
H_KT = H_fluids(J_1 f) + Delta H."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PhaseGrid, integrate_q, integrate_qp
from .maxwellian import eos_temperature, local_moments, maxwellian, relative_entropy_density
from .moments import HydroState, mass_density, poisson_map_JA

MODES = ("neutral", "electrostatic", "selfgravitating")


@dataclass(frozen=True)
class CouplingConstants:
    mode: str = "neutral"
    e2: float = 0.0
    G_grav: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown coupling mode {self.mode!r}")
        if self.e2 < 0 or self.G_grav < 0:
            raise ValueError("couplings must be non-negative")

    @property
    def signed(self) -> float:
        """Coefficient of the pair interaction: +e^2, -G or 0."""
        if self.mode == "electrostatic":
            return self.e2
        if self.mode == "selfgravitating":
            return -self.G_grav
        return 0.0


def h_kinetic(grid: PhaseGrid, f) -> float:
    return 0.5 * integrate_qp(grid, grid.psquared() * f)


def h_kinetic_split(grid: PhaseGrid, f) -> float:
    """Same energy through the mean-flow/thermal split of the moments."""
    rho, u, theta = local_moments(grid, f)
    m2 = sum((rho * u[i]) ** 2 for i in range(grid.n))
    return integrate_q(grid, m2 / (2 * rho) + 0.5 * grid.n * rho * theta)


def h_fluids(state: HydroState) -> float:
    if state.A < 1:
        raise ValueError("H_fluids needs the entropy density (A >= 1)")
    grid = state.grid
    rho = state.rho
    T = eos_temperature(rho, state.s[1], grid.n)
    m2 = np.sum(state.m**2, axis=0)
    return integrate_q(grid, m2 / (2 * rho) + 0.5 * grid.n * rho * T)


def delta_h(grid: PhaseGrid, f) -> float:
    """(n/2) int rho theta (1 - exp(-(2/n) r[f|f_m]/rho)); computed directly, not as a difference."""
    n = grid.n
    rho, u, theta = local_moments(grid, f)
    fm = maxwellian(grid, rho, u, theta)
    r = relative_entropy_density(grid, f, fm)
    return integrate_q(grid, 0.5 * n * rho * theta * -np.expm1(-(2.0 / n) * r / rho))


def decompose(grid: PhaseGrid, f) -> dict:
    """H_KT, J_1^* H_fluids, Delta H and the decomposition residual."""
    hkt = h_kinetic(grid, f)
    hfl = h_fluids(poisson_map_JA(grid, f, 1))
    dh = delta_h(grid, f)
    return {"H_KT": hkt, "H_fluids_J1": hfl, "DeltaH": dh, "residual": hkt - hfl - dh}


def greens_solve(grid: PhaseGrid, rho, coupling: float = 1.0):
    """Solve -lap(phi) = coupling (rho - mean rho) on the torus with zero-mean phi.

    Returns (phi, energy) with energy = (1/2) int (rho - mean) phi.
    """
    rho = np.asarray(rho, dtype=float)
    n = grid.n
    k = grid.wavenumbers()
    ks = np.meshgrid(*([k] * n), indexing="ij")
    k2 = sum(kk**2 for kk in ks)
    rh = np.fft.fftn(rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        ph = np.where(k2 > 0, coupling * rh / k2, 0.0)
    phi = np.fft.ifftn(ph).real
    drho = rho - integrate_q(grid, rho) / grid.volume
    return phi, 0.5 * integrate_q(grid, drho * phi)


def field_energy(grid: PhaseGrid, f, couplings: CouplingConstants) -> float:
    if couplings.signed == 0.0:
        return 0.0
    return greens_solve(grid, mass_density(grid, f), couplings.signed)[1]


def h_static(state: HydroState, couplings: CouplingConstants) -> float:
    if couplings.signed == 0.0:
        return 0.0
    return greens_solve(state.grid, state.rho, couplings.signed)[1]


def h_vlasov(grid: PhaseGrid, f, couplings: CouplingConstants) -> float:
    if couplings.mode != "electrostatic":
        couplings = CouplingConstants("electrostatic", e2=couplings.e2)
    return h_kinetic(grid, f) + field_energy(grid, f, couplings)


def h_selfgrav(grid: PhaseGrid, f, couplings: CouplingConstants) -> float:
    if couplings.mode != "selfgravitating":
        couplings = CouplingConstants("selfgravitating", G_grav=couplings.G_grav)
    return h_kinetic(grid, f) + field_energy(grid, f, couplings)


def h_total(grid: PhaseGrid, f, couplings: CouplingConstants) -> float:
    return h_kinetic(grid, f) + field_energy(grid, f, couplings)


def corollary_residual(grid: PhaseGrid, f, couplings: CouplingConstants) -> float:
    """H_VP - (H_fluids + H_static)(J_1 f) - Delta H."""
    state = poisson_map_JA(grid, f, 1)
    return h_total(grid, f, couplings) - h_fluids(state) - h_static(state, couplings) - delta_h(grid, f)
