"""Constants of motion and a-priori bounds on Delta H.

Neutral gas: Delta H <= 2 theta_0 R_in with R_in = R[f | f_M].
Vlasov-Poisson: Delta H <= 2 Phi_0 S_in, where Phi_0 replaces theta_0 by the
total-energy temperature and S_in is R_in evaluated with Phi_0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PhaseGrid, integrate_q, integrate_qp
from .hamiltonians import CouplingConstants, delta_h, field_energy, h_kinetic
from .maxwellian import (
    LOG_2PIE,
    MeanState,
    local_global_entropy_terms,
    local_moments,
    maxwellian,
    mean_state,
    relative_entropy_density,
    relative_entropy_total,
)
from .moments import y_a

SLACK = 1e-12
NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class ConservedSet:
    mean: MeanState
    H: float
    R_in: float
    R_m: float
    R_M: float
    Phi0: float | None = None
    S_in: float | None = None

    def as_dict(self) -> dict:
        out = {
            "rho0": self.mean.rho0,
            "theta0": self.mean.theta0,
            "H": self.H,
            "R_in": self.R_in,
            "R_m": self.R_m,
            "R_M": self.R_M,
            "Phi0": self.Phi0,
            "S_in": self.S_in,
        }
        for i, ui in enumerate(self.mean.u0):
            out[f"u0_{i}"] = float(ui)
        return out


def maxwellian_cross_entropy(grid: PhaseGrid, f, temperature: float | None = None) -> float:
    """int f log f + rho_0 vol (-log rho_0 + (n/2) log T + (n/2) log(2 pi e)).

    With T = theta_0 (default) this is R_in in closed form; with T = Phi_0 it is S_in.
    """
    ms = mean_state(grid, f)
    T = ms.theta0 if temperature is None else temperature
    n = grid.n
    flogf = integrate_qp(grid, y_a(f, 1))
    return flogf + ms.rho0 * grid.volume * (-np.log(ms.rho0) + 0.5 * n * np.log(T) + 0.5 * n * LOG_2PIE)


def modified_temperature(grid: PhaseGrid, f, couplings: CouplingConstants) -> float:
    """Phi_0 from rho_0 (|u_0|^2 + n Phi_0) vol = 2 H_VP."""
    ms = mean_state(grid, f)
    H = h_kinetic(grid, f) + field_energy(grid, f, couplings)
    return (2 * H / (grid.volume * ms.rho0) - float(ms.u0 @ ms.u0)) / grid.n


def conserved_set(grid: PhaseGrid, f, couplings: CouplingConstants | None = None) -> ConservedSet:
    couplings = couplings or CouplingConstants()
    ms = mean_state(grid, f)
    fM = maxwellian(grid, ms.rho0, ms.u0, ms.theta0)
    fm = maxwellian(grid, *local_moments(grid, f))
    R_in = relative_entropy_total(grid, f, fM)
    R_m = relative_entropy_total(grid, f, fm)
    R_M = sum(integrate_q(grid, t) for t in local_global_entropy_terms(grid, f))
    H = h_kinetic(grid, f) + field_energy(grid, f, couplings)
    Phi0 = S_in = None
    if couplings.mode == "electrostatic":
        Phi0 = modified_temperature(grid, f, couplings)
        S_in = maxwellian_cross_entropy(grid, f, Phi0)
    return ConservedSet(ms, H, R_in, R_m, R_M, Phi0, S_in)


@dataclass(frozen=True)
class BoundResult:
    delta_h: float
    bound_rhs: float
    margin: float
    passed: bool | str


def check_bound(grid: PhaseGrid, f, couplings: CouplingConstants | None = None, slack: float = SLACK) -> BoundResult:
    """Delta H against 2 theta_0 R_in (neutral) or 2 Phi_0 S_in (electrostatic).

    The self-gravitating case has no such bound; it reports 2 theta_0 R_in with
    ``passed = "not-applicable"``.
    """
    couplings = couplings or CouplingConstants()
    dH = delta_h(grid, f)
    cs = conserved_set(grid, f, couplings)
    if couplings.mode == "electrostatic":
        rhs = 2 * cs.Phi0 * cs.S_in
    else:
        rhs = 2 * cs.mean.theta0 * cs.R_in
    margin = rhs - dH
    passed: bool | str = bool(dH <= rhs + slack)
    if couplings.mode == "selfgravitating":
        passed = NOT_APPLICABLE
    return BoundResult(dH, rhs, margin, passed)


@dataclass(frozen=True)
class ProofSteps:
    """Left and right sides of each intermediate inequality."""

    eta_powers: dict  # a -> (int rho eta^a, (2/n) R_m)
    renormalized: tuple  # (int rho theta_hat^2, int rho k(z), (2/n) R_M)
    assembly: tuple  # (Delta H, 2 theta_0 (R_M + R_m), 2 theta_0 R_in)
    mach: tuple  # (int rho |u-u0|^2/(2 theta_0), R_in)

    def violations(self, slack: float = SLACK) -> list:
        bad = []
        for a, (lhs, rhs) in self.eta_powers.items():
            if lhs > rhs + slack:
                bad.append(f"eta^{a}")
        t2, kz, rM = self.renormalized
        if t2 > kz + slack or kz > rM + slack:
            bad.append("renormalized")
        dH, mid, top = self.assembly
        if dH > mid + slack or mid > top + slack * max(1.0, abs(top)):
            bad.append("assembly")
        if self.mach[0] > self.mach[1] + slack:
            bad.append("mach")
        return bad


def proof_step_inequalities(grid: PhaseGrid, f, powers=(1, 2)) -> ProofSteps:
    n = grid.n
    rho, u, theta = local_moments(grid, f)
    fm = maxwellian(grid, rho, u, theta)
    r = relative_entropy_density(grid, f, fm)
    R_m = integrate_q(grid, r)
    eta = -np.expm1(-(2.0 / n) * r / rho)
    eta_powers = {a: (integrate_q(grid, rho * eta**a), 2.0 / n * R_m) for a in powers}
    dens, therm, vel = local_global_entropy_terms(grid, f)
    R_M = integrate_q(grid, dens + therm + vel)
    ms = mean_state(grid, f)
    theta_hat = np.sqrt(theta / ms.theta0) - 1
    renorm = (integrate_q(grid, rho * theta_hat**2), integrate_q(grid, therm) * 2.0 / n, 2.0 / n * R_M)
    R_in = relative_entropy_total(grid, f, maxwellian(grid, ms.rho0, ms.u0, ms.theta0))
    dH = delta_h(grid, f)
    assembly = (dH, 2 * ms.theta0 * (R_M + R_m), 2 * ms.theta0 * R_in)
    mach = (integrate_q(grid, vel), R_in)
    return ProofSteps(eta_powers, renorm, assembly, mach)
