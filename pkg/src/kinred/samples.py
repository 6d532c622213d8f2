"""Seeded random inputs: trigonometric fields on the torus and smooth
positive distribution functions.

Every sample is stored analytically (Fourier coefficients, parameters) so the
same draw can be evaluated on grids of different resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PhaseGrid


@dataclass(frozen=True)
class TrigSeries:
    """sum_k c_k exp(i k.q 2pi/Lq), stored as real cos/sin pairs over wave vectors."""

    kvecs: np.ndarray  # (K, n) integer wave vectors
    a: np.ndarray  # cos coefficients
    b: np.ndarray  # sin coefficients
    mean: float = 0.0

    @property
    def kmax(self) -> int:
        return int(np.max(np.abs(self.kvecs))) if len(self.kvecs) else 0

    def __call__(self, grid: PhaseGrid) -> np.ndarray:
        qs = grid.qmesh()
        out = np.full(grid.qshape, float(self.mean))
        for k, a, b in zip(self.kvecs, self.a, self.b):
            arg = sum(2 * np.pi * k[i] * qs[i] / grid.Lq for i in range(grid.n))
            out += a * np.cos(arg) + b * np.sin(arg)
        return out

    def bound(self) -> float:
        """Upper bound on |series - mean|."""
        return float(np.sum(np.abs(self.a)) + np.sum(np.abs(self.b)))


def _kvecs(n: int, kmax: int) -> np.ndarray:
    if n == 1:
        return np.arange(1, kmax + 1).reshape(-1, 1)
    ks = [(i, j) for i in range(0, kmax + 1) for j in range(-kmax, kmax + 1) if (i > 0 or j > 0)]
    return np.array(ks)


def random_trig(rng: np.random.Generator, n: int, kmax: int, amp: float = 1.0, mean: float = 0.0, decay: float = 0.0) -> TrigSeries:
    """Random series with modes |k_i| <= kmax; coefficients scaled to sum of |c| = amp."""
    ks = _kvecs(n, kmax)
    w = np.exp(-decay * np.linalg.norm(ks, axis=1))
    a = rng.standard_normal(len(ks)) * w
    b = rng.standard_normal(len(ks)) * w
    norm = np.sum(np.abs(a)) + np.sum(np.abs(b))
    scale = amp / norm if norm > 0 else 0.0
    return TrigSeries(ks, a * scale, b * scale, mean)


@dataclass(frozen=True)
class PeriodicBump:
    """Periodized Gaussian bump of width w centered at c on each q-axis product."""

    center: tuple
    width: float
    amp: float

    def __call__(self, grid: PhaseGrid) -> np.ndarray:
        qs = grid.qmesh()
        out = np.ones(grid.qshape)
        for i in range(grid.n):
            d = np.zeros(grid.qshape)
            for shift in (-2, -1, 0, 1, 2):
                d += np.exp(-((qs[i] - self.center[i] + shift * grid.Lq) ** 2) / (2 * self.width**2))
            out *= d
        return self.amp * out


@dataclass(frozen=True)
class RandomDistribution:
    """f = M[rho, u, theta](q, p) * (1 + delta(q, p)), strictly positive.

    rho = rho0 exp(log-density series), theta = theta0 exp(log-temperature series),
    u = velocity series; delta = sum_j T_j(q) psi_j((p - u)/sqrt(theta)) with
    |delta| <= pert_amp <= 0.5. Optional q-localized bumps add resolution-limited
    structure to the log density.
    """

    n: int
    rho0: float
    theta0: float
    log_rho: TrigSeries
    log_theta: TrigSeries
    u: tuple  # n TrigSeries
    pert_q: tuple  # TrigSeries per perturbation term
    pert_freq: np.ndarray
    pert_phase: np.ndarray
    pert_amp: float
    bumps: tuple = field(default=())

    def moments(self, grid: PhaseGrid):
        lr = self.log_rho(grid)
        for bump in self.bumps:
            lr = lr + bump(grid)
        rho = self.rho0 * np.exp(lr)
        theta = self.theta0 * np.exp(self.log_theta(grid))
        u = np.stack([ui(grid) for ui in self.u])
        return rho, u, theta

    def __call__(self, grid: PhaseGrid) -> np.ndarray:
        from .maxwellian import maxwellian

        if grid.n != self.n:
            raise ValueError("dimension mismatch")
        rho, u, theta = self.moments(grid)
        f = maxwellian(grid, rho, u, theta)
        if self.pert_amp == 0.0 or not self.pert_q:
            return f
        th = grid.spatial_to_phase(np.sqrt(theta))
        z = [(grid.pcoord(i) - grid.spatial_to_phase(u[i])) / th for i in range(grid.n)]
        env = np.exp(-sum(zi**2 for zi in z) / 4.0)
        delta = 0.0
        for j, tq in enumerate(self.pert_q):
            arg = sum(self.pert_freq[j, i] * z[i] for i in range(grid.n)) + self.pert_phase[j]
            delta = delta + grid.spatial_to_phase(tq(grid)) * np.sin(arg)
        # |tq| <= 1 and |sin| <= 1 so |delta| <= nterms before scaling
        delta = delta * env * (self.pert_amp / len(self.pert_q))
        return f * (1.0 + delta)

    def pmax_needed(self, margin: float = 8.0) -> float:
        """Smallest Pmax holding max|u| + margin*sqrt(max theta)."""
        thmax = self.theta0 * np.exp(self.log_theta.bound())
        umax = max(s.bound() + abs(s.mean) for s in self.u)
        return umax + margin * np.sqrt(thmax)


def random_distribution(
    rng: np.random.Generator,
    n: int = 1,
    kmax: int = 3,
    rho_amp: float = 0.3,
    u_amp: float = 0.3,
    theta_amp: float = 0.15,
    pert_amp: float = 0.3,
    pert_terms: int = 3,
    theta0: float = 1.0,
    rho0: float = 1.0,
    n_bumps: int = 0,
    bump_width: tuple = (0.2, 0.3),
    bump_amp: float = 0.2,
    Lq: float = 2 * np.pi,
) -> RandomDistribution:
    if pert_amp > 0.5:
        raise ValueError("perturbation amplitude must be <= 0.5 to keep f > 0")
    log_rho = random_trig(rng, n, kmax, rho_amp)
    log_theta = random_trig(rng, n, kmax, theta_amp)
    u = tuple(random_trig(rng, n, kmax, u_amp) for _ in range(n))
    pert_q = tuple(random_trig(rng, n, kmax, 1.0) for _ in range(pert_terms))
    freq = rng.uniform(0.5, 2.0, size=(pert_terms, n)) * rng.choice([-1, 1], size=(pert_terms, n))
    phase = rng.uniform(0, 2 * np.pi, size=pert_terms)
    bumps = tuple(
        PeriodicBump(tuple(rng.uniform(0, Lq, size=n)), float(rng.uniform(*bump_width)), float(bump_amp * rng.choice([-1, 1])))
        for _ in range(n_bumps)
    )
    return RandomDistribution(n, rho0, theta0, log_rho, log_theta, u, pert_q, freq, phase, pert_amp, bumps)


def random_maxwellian(rng: np.random.Generator, n: int = 1, kmax: int = 3, **kw) -> RandomDistribution:
    """A local Maxwellian with random smooth moments (no kinetic perturbation)."""
    kw.setdefault("pert_amp", 0.0)
    return random_distribution(rng, n=n, kmax=kmax, **kw)


def near_maxwellian(rng: np.random.Generator, n: int = 1, kmax: int = 2, eps: float = 0.01, **kw) -> RandomDistribution:
    """Global Maxwellian with small smooth moment fluctuations and kinetic perturbation."""
    return random_distribution(
        rng, n=n, kmax=kmax, rho_amp=eps, u_amp=eps, theta_amp=eps, pert_amp=min(0.5, eps), **kw
    )
