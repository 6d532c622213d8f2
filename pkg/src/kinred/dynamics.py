"""Trajectories: free streaming, Vlasov-Poisson (Strang splitting) and a
finite-volume compressible Euler reference solver, plus the diagnostic driver."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import PhaseGrid, ddq, integrate_q, integrate_qp, make_phase_grid, shift_p, shift_q
from .hamiltonians import CouplingConstants, delta_h, field_energy, greens_solve, h_kinetic
from .maxwellian import LOG_2PIE, eos_temperature, maxwellian, mean_state, relative_entropy_total
from .moments import generalized_entropy_density, mass_density, momentum_density

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-10


class SolverAbort(RuntimeError):
    """Raised when a trajectory leaves the physical state space."""

    def __init__(self, message: str, t: float):
        super().__init__(f"t={t:.6g}: {message}")
        self.t = t


# ---------------------------------------------------------------- kinetic steps


def free_stream_step(grid: PhaseGrid, f, dt: float) -> np.ndarray:
    """f(q, p) <- f(q - p dt, p), one Fourier phase shift per p node."""
    out = np.asarray(f, dtype=float)
    for i in range(grid.n):
        out = shift_q(grid, out, i, grid.pcoord(i) * dt)
    return out


def potential(grid: PhaseGrid, f, couplings: CouplingConstants) -> np.ndarray:
    """phi with -lap phi = (+e^2 or -G)(rho - mean rho)."""
    return greens_solve(grid, mass_density(grid, f), couplings.signed)[0]


def kick(grid: PhaseGrid, f, dt: float, couplings: CouplingConstants) -> np.ndarray:
    """Solve f_t - dphi/dq . f_p = 0 for dt at frozen phi: f(q, p) <- f(q, p + dt dphi/dq)."""
    phi = potential(grid, f, couplings)
    out = np.asarray(f, dtype=float)
    for i in range(grid.n):
        out = shift_p(grid, out, i, -dt * grid.spatial_to_phase(ddq(grid, phi, i)))
    return out


def vlasov_poisson_step(grid: PhaseGrid, f, dt: float, couplings: CouplingConstants) -> np.ndarray:
    """Strang splitting: half free stream, full kick, half free stream."""
    f = free_stream_step(grid, f, 0.5 * dt)
    if couplings.signed != 0.0:
        f = kick(grid, f, dt, couplings)
    return free_stream_step(grid, f, 0.5 * dt)


def clamp_negative(grid: PhaseGrid, f):
    """(max(f, 0), clamped mass as a fraction of the total)."""
    neg = np.minimum(f, 0.0)
    if not np.any(neg):
        return f, 0.0
    lost = -integrate_qp(grid, neg)
    total = integrate_qp(grid, np.abs(f))
    return np.maximum(f, 0.0), float(lost / total)


# ---------------------------------------------------------------- compressible Euler (n = 1)


@dataclass
class EulerState:
    rho: np.ndarray
    m: np.ndarray
    s: np.ndarray

    def conserved(self) -> np.ndarray:
        return np.stack([self.rho, self.m, self.s])


def euler_temperature(rho, s, n: int = 1):
    return eos_temperature(rho, s, n)


def _euler_flux(U, n):
    rho, m, s = U
    u = m / rho
    P = rho * euler_temperature(rho, s, n)
    return np.stack([m, m * u + P, u * s])


def _wave_speed(U, n):
    rho, m, s = U
    T = euler_temperature(rho, s, n)
    return np.abs(m / rho) + np.sqrt((1 + 2.0 / n) * T)


def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _rhs(U, dx, n):
    # MUSCL reconstruction on the conserved variables, minmod-limited
    dl = U - np.roll(U, 1, axis=1)
    dr = np.roll(U, -1, axis=1) - U
    slope = _minmod(dl, dr)
    UL = U + 0.5 * slope  # left state at interface i+1/2
    UR = np.roll(U - 0.5 * slope, -1, axis=1)  # right state at i+1/2
    a = np.maximum(_wave_speed(UL, n), _wave_speed(UR, n))
    F = 0.5 * (_euler_flux(UL, n) + _euler_flux(UR, n)) - 0.5 * a * (UR - UL)
    return -(F - np.roll(F, 1, axis=1)) / dx


def _check_euler(U, t, n):
    if np.any(U[0] <= 0) or not np.all(np.isfinite(U)):
        raise SolverAbort("density became non-positive", t)
    if np.any(euler_temperature(U[0], U[2], n) <= 0):
        raise SolverAbort("temperature became non-positive", t)


def euler_cfl_dt(grid: PhaseGrid, state: EulerState, cfl: float = 0.45) -> float:
    U = state.conserved()
    return cfl * grid.dq / float(np.max(_wave_speed(U, 1)))


def euler_step(grid: PhaseGrid, state: EulerState, dt: float, t: float = 0.0, cfl: float = 0.45) -> EulerState:
    """SSP-RK2 step of the Rusanov finite-volume scheme for (rho, m, s)."""
    if grid.n != 1:
        raise ValueError("the Euler reference solver is one-dimensional")
    U = state.conserved()
    _check_euler(U, t, 1)
    limit = euler_cfl_dt(grid, state, cfl)
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the CFL limit {limit}")
    dx = grid.dq
    U1 = U + dt * _rhs(U, dx, 1)
    _check_euler(U1, t + dt, 1)
    U2 = 0.5 * (U + U1 + dt * _rhs(U1, dx, 1))
    _check_euler(U2, t + dt, 1)
    return EulerState(*U2)


def euler_energy(grid: PhaseGrid, state: EulerState) -> float:
    T = euler_temperature(state.rho, state.s, grid.n)
    return integrate_q(grid, state.m**2 / (2 * state.rho) + 0.5 * grid.n * state.rho * T)


def euler_from_kinetic(grid: PhaseGrid, f) -> EulerState:
    return EulerState(mass_density(grid, f), momentum_density(grid, f)[0], generalized_entropy_density(grid, f, 1))


# ---------------------------------------------------------------- scenarios


INITIAL_FAMILIES = ("landau", "maxwellian", "random", "near_maxwellian")
METHODS = ("free_stream", "vlasov_poisson", "euler")


@dataclass
class Scenario:
    n: int = 1
    Lq: float = 2 * np.pi
    Nq: int = 64
    Pmax: float = 10.0
    Np: int = 128
    initial: dict = field(default_factory=lambda: {"family": "landau"})
    method: str = "free_stream"
    couplings: CouplingConstants = field(default_factory=CouplingConstants)
    dt: float = 1.0 / 64
    T_end: float = 1.0
    cadence: int = 8
    seed: int = 0
    max_order: int = 4

    def __post_init__(self):
        if self.dt <= 0 or self.T_end < 0:
            raise ValueError("dt must be positive and T_end non-negative")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.initial.get("family") not in INITIAL_FAMILIES:
            raise ValueError(f"unknown initial family {self.initial.get('family')!r}")
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")

    def grid(self) -> PhaseGrid:
        return make_phase_grid(self.n, self.Lq, self.Nq, self.Pmax, self.Np)

    @property
    def nsteps(self) -> int:
        return int(round(self.T_end / self.dt))

    def splitting_ok(self) -> bool:
        """dt <= 0.5 dq / Pmax, the bookkeeping bound on splitting error."""
        return self.dt <= 0.5 * (self.Lq / self.Nq) / self.Pmax


def initial_condition(grid: PhaseGrid, init: dict, seed: int = 0) -> np.ndarray:
    family = init.get("family", "landau")
    n = grid.n
    if family == "landau":
        eps = init.get("eps", 0.01)
        k = init.get("k", 2 * np.pi / grid.Lq)
        theta = init.get("theta", 1.0)
        pert = 1 + eps * sum(np.cos(k * grid.qmesh()[i]) for i in range(n))
        return maxwellian(grid, init.get("rho", 1.0), np.zeros(n), theta) * grid.spatial_to_phase(pert)
    if family == "maxwellian":
        return maxwellian(grid, init.get("rho", 1.0), np.asarray(init.get("u", [0.0] * n), float), init.get("theta", 1.0))
    from .samples import near_maxwellian, random_distribution

    rng = np.random.default_rng(seed)
    if family == "random":
        kw = {k: v for k, v in init.items() if k != "family"}
        return random_distribution(rng, n=n, Lq=grid.Lq, **kw)(grid)
    return near_maxwellian(rng, n=n, eps=init.get("eps", 0.01), Lq=grid.Lq)(grid)


@dataclass
class DiagnosticSeries:
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)

    def relative_drift(self, name: str, scale: float | None = None) -> float:
        """max |c(t) - c(0)| / scale, with scale = |c(0)| unless given."""
        c = self.column(name)
        scale = max(abs(c[0]), 1e-300) if scale is None else scale
        return float(np.max(np.abs(c - c[0])) / scale)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([f"{x:.17g}" for x in r])


def kinetic_diagnostics(grid: PhaseGrid, f, couplings: CouplingConstants, max_order: int = 4) -> dict:
    """Everything the conservation and bound tests look at, for one snapshot."""
    fc, clamp = clamp_negative(grid, f)
    if clamp > CLAMP_TOL:
        warnings.warn(f"clamped negative mass fraction {clamp:.2e}", RuntimeWarning, stacklevel=2)
    n = grid.n
    ms = mean_state(grid, fc)
    out = {"mass": integrate_qp(grid, fc)}
    for i in range(n):
        out[f"momentum_{i}"] = integrate_qp(grid, grid.pcoord(i) * fc)
    out["H_KT"] = h_kinetic(grid, fc)
    out["field_energy"] = field_energy(grid, fc, couplings)
    out["H"] = out["H_KT"] + out["field_energy"]
    out["DeltaH"] = delta_h(grid, fc)
    out["rho0"] = ms.rho0
    for i in range(n):
        out[f"u0_{i}"] = float(ms.u0[i])
    out["theta0"] = ms.theta0
    out["R_in"] = relative_entropy_total(grid, fc, maxwellian(grid, ms.rho0, ms.u0, ms.theta0))
    if couplings.mode == "electrostatic":
        phi0 = (2 * out["H"] / (grid.volume * ms.rho0) - float(ms.u0 @ ms.u0)) / n
        flogf = integrate_q(grid, generalized_entropy_density(grid, fc, 1))
        s_in = flogf + ms.rho0 * grid.volume * (-np.log(ms.rho0) + 0.5 * n * np.log(phi0) + 0.5 * n * LOG_2PIE)
        out["Phi0"], out["S_in"] = phi0, s_in
        out["bound_rhs"] = 2 * phi0 * s_in
    else:
        out["Phi0"], out["S_in"] = np.nan, np.nan
        out["bound_rhs"] = 2 * ms.theta0 * out["R_in"]
    out["margin"] = out["bound_rhs"] - out["DeltaH"]
    for a in range(max_order + 1):
        out[f"s{a}"] = integrate_q(grid, generalized_entropy_density(grid, fc, a))
    out["clamp_fraction"] = clamp
    return out


def drift_summary(series: DiagnosticSeries) -> dict:
    """Relative drift of every conserved column.

    Momenta and mean velocities vanish for symmetric data, so they are scaled
    by the thermal momentum sqrt(mass * 2 H_KT) and sqrt(theta_0) instead.
    """
    skip = ("t", "DeltaH", "margin", "clamp_fraction", "field_energy", "H_KT")
    first = dict(zip(series.columns, series.rows[0]))
    out = {}
    for c in series.columns:
        if c in skip or not np.all(np.isfinite(series.column(c))):
            continue
        scale = None
        if c.startswith("momentum_"):
            scale = float(np.sqrt(first["mass"] * 2 * first["H_KT"]))
        elif c.startswith("u0_"):
            scale = float(np.sqrt(first["theta0"]))
        out[c] = series.relative_drift(c, scale)
    return out


def run_simulation(scenario: Scenario, f0=None) -> DiagnosticSeries:
    """Integrate the scenario and sample diagnostics every ``cadence`` steps (and at the end)."""
    grid = scenario.grid()
    if scenario.method == "euler":
        return _run_euler(scenario, grid, f0)
    f = initial_condition(grid, scenario.initial, scenario.seed) if f0 is None else np.asarray(f0, dtype=float)
    couplings = scenario.couplings if scenario.method == "vlasov_poisson" else CouplingConstants()
    if not scenario.splitting_ok():
        log.info("dt exceeds 0.5 dq/Pmax; splitting error bookkeeping bound not met")
    first = kinetic_diagnostics(grid, f, couplings, scenario.max_order)
    series = DiagnosticSeries(["t"] + list(first))
    series.rows.append([0.0] + list(first.values()))
    steps = scenario.nsteps
    for k in range(1, steps + 1):
        if scenario.method == "free_stream":
            f = free_stream_step(grid, f, scenario.dt)
        else:
            f = vlasov_poisson_step(grid, f, scenario.dt, couplings)
        if not np.all(np.isfinite(f)):
            raise SolverAbort("non-finite distribution", k * scenario.dt)
        if k % scenario.cadence == 0 or k == steps:
            d = kinetic_diagnostics(grid, f, couplings, scenario.max_order)
            series.rows.append([k * scenario.dt] + list(d.values()))
    series.summary = drift_summary(series)
    series.summary["max_clamp_fraction"] = float(np.max(series.column("clamp_fraction")))
    series.summary["min_margin"] = float(np.min(series.column("margin")))
    return series


def _run_euler(scenario: Scenario, grid: PhaseGrid, f0=None) -> DiagnosticSeries:
    if f0 is None:
        f0 = initial_condition(grid, scenario.initial, scenario.seed)
    state = euler_from_kinetic(grid, f0)
    cols = ["t", "mass", "momentum", "entropy", "H_fluids"]

    def row(t, st):
        return [t, integrate_q(grid, st.rho), integrate_q(grid, st.m), integrate_q(grid, st.s), euler_energy(grid, st)]

    series = DiagnosticSeries(cols, [row(0.0, state)])
    t, k = 0.0, 0
    while t < scenario.T_end - 1e-14:
        dt = min(scenario.dt, euler_cfl_dt(grid, state), scenario.T_end - t)
        state = euler_step(grid, state, dt, t)
        t += dt
        k += 1
        if k % scenario.cadence == 0 or t >= scenario.T_end - 1e-14:
            series.rows.append(row(t, state))
    series.summary = {c: series.relative_drift(c) for c in cols[1:] if c != "momentum"}
    series.summary["momentum_abs_drift"] = float(np.max(np.abs(series.column("momentum") - series.column("momentum")[0])))
    return series
