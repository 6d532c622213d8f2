"""Numerical check that the moment maps are Poisson maps.

For linear functionals F, G on s*_A the pulled-back functionals F o J are
evaluated on the kinetic side with the (+)-Lie-Poisson bracket
int f {dF/df, dG/df} dV and compared with the (-)-Lie-Poisson bracket of
s*_A evaluated at J[f].

Gradients of the kinetic variational derivatives are formed by the chain rule
(y_a'(f))' = y_a''(f) f' with spectral derivatives of f only. Differentiating
(log f)^a spectrally would alias, since it grows polynomially in p.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PhaseGrid, ddp, ddp_quadratic_tail, ddq, integrate_q, integrate_qp
from .moments import (
    LOG_FLOOR,
    HydroState,
    dy_a,
    poisson_map_JA,
    poisson_map_Jpol,
    poisson_map_Jxi,
    x_d2y_a,
    y_a,
)
from .samples import random_trig

VARIANTS = ("J_A", "J_xi", "J_pol", "J_energy")
PASS_THRESHOLD = 1e-7


@dataclass
class LinearTestFunctional:
    """(u, (g_0..g_A)): F(m, s) = int (m.u + sum_a s_a g_a) dq."""

    u: np.ndarray  # (n,)+qshape
    g: np.ndarray  # (A+1,)+qshape

    @property
    def A(self) -> int:
        return self.g.shape[0] - 1

    def scaled(self, c: float) -> "LinearTestFunctional":
        return LinearTestFunctional(c * self.u, c * self.g)


@dataclass
class PhaseFunction:
    """Phase-space function with its q and p gradients."""

    values: np.ndarray
    dq: list
    dp: list


@dataclass
class BracketReport:
    variant: str
    order: float
    lhs: float
    rhs: float
    seed: int | None = None
    grid_shape: tuple = field(default=())

    @property
    def abs_err(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def rel_err(self) -> float:
        return self.abs_err / max(abs(self.lhs), abs(self.rhs), 1e-30)

    @property
    def passed(self) -> bool:
        return self.rel_err < PASS_THRESHOLD


def functional_value(F: LinearTestFunctional, state: HydroState) -> float:
    grid = state.grid
    if F.u.shape != state.m.shape or F.g.shape != state.s.shape:
        raise ValueError("functional and state live on different grids or orders")
    return integrate_q(grid, np.sum(state.m * F.u, axis=0) + np.sum(state.s * F.g, axis=0))


def fibrewise_affine(grid: PhaseGrid, u, g) -> PhaseFunction:
    """<u, p> + g(q) with exact gradients."""
    n = grid.n
    u = np.asarray(u, dtype=float)
    g = np.asarray(g, dtype=float)
    P = [grid.pcoord(i) for i in range(n)]
    U = [grid.spatial_to_phase(u[i]) for i in range(n)]
    vals = sum(U[i] * P[i] for i in range(n)) + grid.spatial_to_phase(g)
    dq = []
    for j in range(n):
        dq.append(sum(grid.spatial_to_phase(ddq(grid, u[i], j)) * P[i] for i in range(n)) + grid.spatial_to_phase(ddq(grid, g, j)))
    dp = [U[i] * np.ones(grid.shape) for i in range(n)]
    return PhaseFunction(vals, dq, dp)


def _f_gradients(grid: PhaseGrid, f):
    """Gradients of f.

    For strictly positive f they come from log f, so they keep relative
    accuracy in the Gaussian tails where f^xi or (log f)^a is large. A plain
    spectral derivative there has an absolute error set by max f.
    """
    f = np.asarray(f, dtype=float)
    if np.min(f) > LOG_FLOOR:
        L = np.log(f)
        fq = [f * ddq(grid, L, i) for i in range(grid.n)]
        fp = [f * ddp_quadratic_tail(grid, L, i) for i in range(grid.n)]
        return fq, fp
    fq = [ddq(grid, f, i) for i in range(grid.n)]
    fp = [ddp(grid, f, i) for i in range(grid.n)]
    return fq, fp


def kt_variational_derivative(
    grid: PhaseGrid,
    F: LinearTestFunctional,
    f,
    variant: str = "J_A",
    xi: float | None = None,
    _fgrad=None,
) -> PhaseFunction:
    """dF~/df for F~ = F o J, with gradients.

    J_A:      <u,p> + sum_a y_a'(f) g_a
    J_xi:     <u,p> + (1+xi) f^xi g
    J_pol:    <u,p> + sum_a (1+a) f^a g_a
    J_energy: <u,p> + g_0 + |p|^2/2 g_1   (not a Poisson map; negative control)
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    n = grid.n
    f = np.asarray(f, dtype=float)
    base = fibrewise_affine(grid, F.u, np.zeros(grid.qshape))
    vals, dq, dp = base.values, list(base.dq), list(base.dp)
    fq, fp = _f_gradients(grid, f) if _fgrad is None else _fgrad

    def add(coef, dcoef_f, ga):
        # term coef(f) * g_a(q); dcoef_f = coef'(f) * grad f, supplied per axis
        nonlocal vals
        G = grid.spatial_to_phase(ga)
        vals = vals + coef * G
        for j in range(n):
            dq[j] = dq[j] + dcoef_f[0][j] * G + coef * grid.spatial_to_phase(ddq(grid, ga, j))
            dp[j] = dp[j] + dcoef_f[1][j] * G

    if variant == "J_A":
        inv = 1.0 / np.maximum(np.abs(f), LOG_FLOOR)
        for a in range(F.A + 1):
            if not np.any(F.g[a]):
                continue
            coef = dy_a(f, a)
            xd2 = x_d2y_a(f, a)
            add(coef, ([xd2 * fq[j] * inv for j in range(n)], [xd2 * fp[j] * inv for j in range(n)]), F.g[a])
    elif variant == "J_xi":
        if xi is None:
            raise ValueError("J_xi needs xi")
        inv = 1.0 / np.maximum(f, LOG_FLOOR)
        fx = f**xi
        coef = (1 + xi) * fx
        d = (1 + xi) * xi * fx * inv
        add(coef, ([d * fq[j] for j in range(n)], [d * fp[j] for j in range(n)]), F.g[0])
    elif variant == "J_pol":
        for a in range(F.A + 1):
            coef = (1 + a) * f**a
            d = (1 + a) * a * f ** (a - 1) if a >= 1 else np.zeros_like(f)
            add(coef, ([d * fq[j] for j in range(n)], [d * fp[j] for j in range(n)]), F.g[a])
    else:  # J_energy
        one = np.ones(grid.shape)
        zero = [np.zeros(grid.shape)] * n
        add(one, (zero, zero), F.g[0])
        if F.A >= 1:
            half_p2 = 0.5 * grid.psquared() * one
            add(half_p2, (zero, [grid.pcoord(j) * one for j in range(n)]), F.g[1])
    return PhaseFunction(vals, dq, dp)


def _grad(grid: PhaseGrid, a):
    if isinstance(a, PhaseFunction):
        return a.dq, a.dp
    a = np.asarray(a, dtype=float)
    return [ddq(grid, a, i) for i in range(grid.n)], [ddp(grid, a, i) for i in range(grid.n)]


def canonical_bracket(grid: PhaseGrid, a, b) -> np.ndarray:
    """{a, b} = da/dq^i db/dp_i - db/dq^i da/dp_i.

    Plain arrays are differentiated spectrally; PhaseFunction operands use
    their own gradients.
    """
    aq, ap = _grad(grid, a)
    bq, bp = _grad(grid, b)
    return sum(aq[i] * bp[i] - bq[i] * ap[i] for i in range(grid.n))


def kt_bracket(grid: PhaseGrid, F: LinearTestFunctional, G: LinearTestFunctional, f, variant="J_A", xi=None) -> float:
    """{F o J, G o J}_KT = int f {dF/df, dG/df} dV."""
    fg = _f_gradients(grid, f)
    dF = kt_variational_derivative(grid, F, f, variant, xi, _fgrad=fg)
    dG = kt_variational_derivative(grid, G, f, variant, xi, _fgrad=fg)
    return integrate_qp(grid, np.asarray(f) * canonical_bracket(grid, dF, dG))


def lie_bracket_vect(grid: PhaseGrid, u, v) -> np.ndarray:
    """[u, v]^i = u^j d_j v^i - v^j d_j u^i."""
    n = grid.n
    out = np.zeros((n,) + grid.qshape)
    for i in range(n):
        for j in range(n):
            out[i] += u[j] * ddq(grid, v[i], j) - v[j] * ddq(grid, u[i], j)
    return out


def lie_derivative(grid: PhaseGrid, u, g) -> np.ndarray:
    return sum(u[j] * ddq(grid, g, j) for j in range(grid.n))


def lie_poisson_bracket_sA(F: LinearTestFunctional, G: LinearTestFunctional, state: HydroState, corrupt: bool = False) -> float:
    """-<m, [u, v]> - sum_a <s_a, L_u h_a - L_v g_a>.

    ``corrupt`` flips the sign of the entropy-advection sum (test hook for
    negative controls).
    """
    grid = state.grid
    uv = lie_bracket_vect(grid, F.u, G.u)
    total = -integrate_q(grid, np.sum(state.m * uv, axis=0))
    adv = 0.0
    for a in range(state.A + 1):
        adv += integrate_q(grid, state.s[a] * (lie_derivative(grid, F.u, G.g[a]) - lie_derivative(grid, G.u, F.g[a])))
    return total + adv if corrupt else total - adv


def kinetic_functional_value(grid: PhaseGrid, F: LinearTestFunctional, f, variant="J_A", xi=None) -> float:
    """F(J f) integrated directly over phase space (independent of HydroState)."""
    f = np.asarray(f, dtype=float)
    P = [grid.pcoord(i) for i in range(grid.n)]
    dens = sum(grid.spatial_to_phase(F.u[i]) * P[i] for i in range(grid.n)) * f
    for a in range(F.A + 1):
        G = grid.spatial_to_phase(F.g[a])
        if variant == "J_A":
            dens = dens + y_a(f, a) * G
        elif variant == "J_xi":
            dens = dens + f ** (1 + xi) * G
        elif variant == "J_pol":
            dens = dens + f ** (1 + a) * G
        else:
            dens = dens + (f if a == 0 else 0.5 * grid.psquared() * f) * G
    return integrate_qp(grid, dens)


def map_image(grid: PhaseGrid, f, variant: str, A: int = 1, xi: float | None = None) -> HydroState:
    if variant == "J_A":
        return poisson_map_JA(grid, f, A)
    if variant == "J_xi":
        return poisson_map_Jxi(grid, f, xi)
    if variant == "J_pol":
        return poisson_map_Jpol(grid, f, A)
    if variant == "J_energy":
        from .grid import integrate_p

        state = poisson_map_JA(grid, f, 0)
        s = [state.s[0]]
        if A >= 1:
            s.append(0.5 * integrate_p(grid, grid.psquared() * f))
        return HydroState(grid, state.m, np.stack(s))
    raise ValueError(f"unknown variant {variant!r}")


def verify_poisson_map(
    grid: PhaseGrid,
    F: LinearTestFunctional,
    G: LinearTestFunctional,
    f,
    variant: str = "J_A",
    xi: float | None = None,
    outer=None,
    corrupt: bool = False,
    seed: int | None = None,
) -> BracketReport:
    """Compare {F o J, G o J}_KT with {F, G}_{s*_A} o J.

    ``outer`` is the derivative of a scalar function Phi applied to F; by the
    chain rule both sides acquire Phi'(F), evaluated on each side from its own
    value of F.
    """
    A = F.A
    state = map_image(grid, f, variant, A, xi)
    Fk, Fs = F, F
    if outer is not None:
        Fk = F.scaled(outer(kinetic_functional_value(grid, F, f, variant, xi)))
        Fs = F.scaled(outer(functional_value(F, state)))
    lhs = kt_bracket(grid, Fk, G, f, variant, xi)
    rhs = lie_poisson_bracket_sA(Fs, G, state, corrupt=corrupt)
    order = xi if variant == "J_xi" else A
    return BracketReport(variant, order, lhs, rhs, seed, grid.shape)


def jacobi_cyclic_sum(grid: PhaseGrid, f, a, b, c) -> float:
    """int f ({{a,b},c} + {{b,c},a} + {{c,a},b}) for decaying phase functions."""
    ab = canonical_bracket(grid, a, b)
    bc = canonical_bracket(grid, b, c)
    ca = canonical_bracket(grid, c, a)
    cyc = canonical_bracket(grid, ab, c) + canonical_bracket(grid, bc, a) + canonical_bracket(grid, ca, b)
    return integrate_qp(grid, np.asarray(f) * cyc)


def bracket_functional(grid: PhaseGrid, F: LinearTestFunctional, G: LinearTestFunctional) -> LinearTestFunctional:
    """{F, G}_{s*_A} of linear functionals, itself linear: (-[u, v], -(L_u h_a - L_v g_a))."""
    u = -lie_bracket_vect(grid, F.u, G.u)
    g = np.stack([-(lie_derivative(grid, F.u, G.g[a]) - lie_derivative(grid, G.u, F.g[a])) for a in range(F.A + 1)])
    return LinearTestFunctional(u, g)


def jacobi_nested(grid: PhaseGrid, F, G, H, f, variant="J_A", xi=None) -> float:
    """Cyclic sum of nested kinetic brackets {{F,G},H} + {{G,H},F} + {{H,F},G}."""
    total = 0.0
    for a, b, c in ((F, G, H), (G, H, F), (H, F, G)):
        total += kt_bracket(grid, bracket_functional(grid, a, b), c, f, variant, xi)
    return total


def random_functional(rng: np.random.Generator, n: int, A: int, kmax: int, amp: float = 1.0):
    """Band-limited (u, g_0..g_A) as analytic series."""
    u = [random_trig(rng, n, kmax, amp, mean=rng.standard_normal() * 0.3) for _ in range(n)]
    g = [random_trig(rng, n, kmax, amp, mean=rng.standard_normal() * 0.3) for _ in range(A + 1)]
    return u, g


def evaluate_functional(grid: PhaseGrid, series) -> LinearTestFunctional:
    u, g = series
    return LinearTestFunctional(np.stack([s(grid) for s in u]), np.stack([s(grid) for s in g]))


def band_limit(grid: PhaseGrid) -> int:
    """Largest mode kept when the top third of the Fourier modes is zero."""
    return max(1, grid.Nq // 3)


__all__ = [
    "BracketReport",
    "LinearTestFunctional",
    "PhaseFunction",
    "canonical_bracket",
    "fibrewise_affine",
    "functional_value",
    "bracket_functional",
    "jacobi_cyclic_sum",
    "jacobi_nested",
    "kt_bracket",
    "kt_variational_derivative",
    "lie_poisson_bracket_sA",
    "verify_poisson_map",
]
