"""Isotropic Laguerre closure of Delta H.

For f = f_m (1 + eps h) with h isotropic in chi = |p-u|^2/(2 theta), h is
expanded in generalized Laguerre polynomials L_b^(n/2-1)(chi), b >= 2. The
entropy ratios eta_a = s_a/rho then satisfy, to first order in eps,

    eta_a - eta_bar_a(eta_1) = eps sum_b M(eta_1)_ab beta_b

with M lower triangular. Every chi-integral against F_n is a polynomial
expectation, reduced to the Gamma moments g_k = E[chi^k] = prod_{j<k}(n/2 + j).
The same code runs in exact rational arithmetic (Fraction inputs) or in floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .grid import PhaseGrid, integrate_p, integrate_q, shift_p
from .maxwellian import eos_temperature, local_moments, maxwellian
from .moments import HydroState

# ---------------------------------------------------------------- polynomials in chi
# Coefficient lists, lowest degree first; entries may be Fraction, float or arrays.


def _pmul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _ppow(a, k: int):
    out = [1]
    for _ in range(k):
        out = _pmul(out, a)
    return out


def _half(n):
    return Fraction(n, 2) if isinstance(n, int) else n / 2


def gamma_moments(n, kmax: int):
    """g_k = Gamma(n/2 + k)/Gamma(n/2) for k = 0..kmax, by g_{k+1} = g_k (n/2 + k)."""
    h = _half(n)
    g = [h**0 if not isinstance(h, Fraction) else Fraction(1)]
    for k in range(kmax):
        g.append(g[-1] * (h + k))
    return g


def _expect(poly, n):
    """int F_n(chi) poly(chi) dchi."""
    g = gamma_moments(n, len(poly) - 1)
    return sum(c * gk for c, gk in zip(poly, g))


def chi_weight(n, chi):
    """F_n(chi) = chi^(n/2-1) exp(-chi) / Gamma(n/2)."""
    chi = np.asarray(chi, dtype=float)
    if np.any(chi < 0):
        raise ValueError("chi must be non-negative")
    with np.errstate(divide="ignore"):
        return chi ** (n / 2 - 1) * np.exp(-chi) / math.gamma(n / 2)


def laguerre(alpha, b: int, chi):
    """Generalized Laguerre polynomial L_b^(alpha)(chi) by the three-term recurrence."""
    if alpha <= -1:
        raise ValueError("alpha must exceed -1")
    if b < 0:
        raise ValueError("degree must be non-negative")
    chi = np.asarray(chi, dtype=float)
    prev = np.ones_like(chi)
    if b == 0:
        return prev
    cur = 1.0 + alpha - chi
    for k in range(1, b):
        prev, cur = cur, ((2 * k + 1 + alpha - chi) * cur - (k + alpha) * prev) / (k + 1)
    return cur


def laguerre_coefficients(alpha, b: int):
    """Monomial coefficients of L_b^(alpha): (-1)^k binom(b+alpha, b-k) / k!."""
    out = []
    for k in range(b + 1):
        num = 1.0 if isinstance(alpha, float) else Fraction(1)
        for j in range(1, b - k + 1):
            num = num * (alpha + k + j)
        out.append((-1) ** k * num / (math.factorial(b - k) * math.factorial(k)))
    return out


def laguerre_norm(n, b: int):
    """int F_n (L_b^(n/2-1))^2 = Gamma(b + n/2) / (Gamma(b+1) Gamma(n/2))."""
    return gamma_moments(n, b)[b] / math.factorial(b)


def _alpha(n):
    return _half(n) - 1


# ---------------------------------------------------------------- eta_bar, M, beta_tilde


def _c(eta1, n):
    return eta1 + _half(n)


def eta_bar(a: int, eta1, n):
    """Maxwellian value of eta_a: int F_n (c - chi)^a with c = eta_1 + n/2."""
    if a < 0:
        raise ValueError("a must be non-negative")
    return _expect(_ppow([_c(eta1, n), -1], a), n)


def closure_matrix_entry(a: int, b: int, eta1, n):
    """M_ab = int F_n L_b (c - chi)^(a-1) (c + a - chi)."""
    c = _c(eta1, n)
    poly = _pmul(_ppow([c, -1], a - 1), [c + a, -1])
    return _expect(_pmul(poly, laguerre_coefficients(_alpha(n), b)), n)


def _is_zero(x) -> bool:
    # symbolic entries compare structurally, so only a literal 0 counts
    return bool(np.any(np.asarray(x) == 0))


def closure_matrix(A: int, eta1, n):
    """Rows and columns indexed by a, b = 2..A, as nested lists (exact) or an array."""
    if A < 2:
        raise ValueError("closure needs A >= 2")
    M = [[closure_matrix_entry(a, b, eta1, n) if b <= a else 0 * eta1 for b in range(2, A + 1)] for a in range(2, A + 1)]
    for i in range(A - 1):
        if _is_zero(M[i][i]):
            raise ZeroDivisionError(f"zero diagonal entry at a = {i + 2}")
    return M


def forward_substitute(M, rhs):
    """Solve the lower-triangular system M x = rhs."""
    x = []
    for i in range(len(rhs)):
        acc = rhs[i]
        for j in range(i):
            acc = acc - M[i][j] * x[j]
        x.append(acc / M[i][i])
    return x


def closure_matrix_inverse(M):
    """Lower-triangular inverse by forward substitution on the unit columns."""
    m = len(M)
    cols = []
    for j in range(m):
        e = [M[0][0] * 0 for _ in range(m)]
        e[j] = e[j] + 1
        cols.append(forward_substitute(M, e))
    return [[cols[j][i] for j in range(m)] for i in range(m)]


def beta_tilde_from_eta(eta, n):
    """beta_tilde_2..A from eta = (eta_1, ..., eta_A) (eta[0] is eta_1)."""
    A = len(eta)
    eta1 = eta[0]
    M = closure_matrix(A, eta1, n)
    rhs = [eta[a - 1] - eta_bar(a, eta1, n) for a in range(2, A + 1)]
    return forward_substitute(M, rhs)


def eta_from_state(state: HydroState):
    rho = state.rho
    if np.any(rho <= 0):
        raise ValueError("density must be positive")
    return [state.s[a] / rho for a in range(1, state.A + 1)]


def beta_tilde(state: HydroState, n: int | None = None):
    """Array of beta_tilde_b fields, b = 2..A, from the entropy ratios of ``state``."""
    if state.A < 2:
        raise ValueError("closure needs A >= 2")
    n = state.grid.n if n is None else n
    return np.stack(beta_tilde_from_eta(eta_from_state(state), float(n)))


def delta_h_truncated_density(rho, s, n: int):
    """(1/2) rho T(rho, s_1) sum_b norm_b beta_tilde_b^2 for s = (s_0.., s_A) arrays.

    Built from analytic operations only, so complex inputs propagate (used for
    complex-step derivatives).
    """
    A = len(s) - 1
    eta = [s[a] / rho for a in range(1, A + 1)]
    bt = beta_tilde_from_eta(eta, float(n))
    T = rho ** (2.0 / n) / (2 * np.pi * np.e) * np.exp(-(2.0 / n) * s[1] / rho)
    total = 0.0
    for b, beta in zip(range(2, A + 1), bt):
        total = total + float(laguerre_norm(n, b)) * beta**2
    return 0.5 * rho * T * total


def delta_h_truncated(state: HydroState, A: int | None = None, n: int | None = None) -> float:
    """Delta H_A = (1/2) int rho T(rho, s_1) sum_{b=2}^A norm_b beta_tilde_b^2."""
    A = state.A if A is None else A
    if A < 2 or A > state.A:
        raise ValueError(f"need 2 <= A <= {state.A}")
    n = state.grid.n if n is None else n
    s = [state.s[a] for a in range(A + 1)]
    return integrate_q(state.grid, delta_h_truncated_density(state.rho, s, n))


def delta_h_truncated_gradient(state: HydroState, A: int | None = None, h: float = 1e-30):
    """Pointwise derivatives of the Delta H_A density in (s_0, ..., s_A), by complex step."""
    A = state.A if A is None else A
    n = state.grid.n
    base = [state.s[a].astype(complex) for a in range(A + 1)]
    out = []
    for a in range(A + 1):
        s = list(base)
        s[a] = s[a] + 1j * h
        out.append(np.imag(delta_h_truncated_density(s[0], s, n)) / h)
    return np.stack(out)


def closing_hamiltonian(state: HydroState, A: int | None = None) -> float:
    """H_fluids + Delta H_A on s*_A."""
    from .hamiltonians import h_fluids

    return h_fluids(state) + delta_h_truncated(state, A)


def closing_hamiltonian_s2_display(grid: PhaseGrid, m, rho, s1, s2) -> float:
    """The A = 2 Hamiltonian written with (2 s_2 - 2 s_1^2 - n rho)^2 / (2 n^2 (n+2) rho^2).

    This literal form agrees with H_fluids + Delta H_2 only where rho = 1; see
    closing_hamiltonian_s2 for the version valid at any density.
    """
    n = grid.n
    T = eos_temperature(rho, s1, n)
    m2 = np.sum(np.asarray(m) ** 2, axis=0)
    corr = (2 * s2 - 2 * s1**2 - n * rho) ** 2 / (2 * n**2 * (n + 2) * rho**2)
    return integrate_q(grid, m2 / (2 * rho) + 0.5 * n * rho * T * (1 + corr))


def closing_hamiltonian_s2(grid: PhaseGrid, m, rho, s1, s2) -> float:
    """A = 2 Hamiltonian in entropy ratios: correction (2 eta_2 - 2 eta_1^2 - n)^2 / (2 n^2 (n+2))."""
    n = grid.n
    T = eos_temperature(rho, s1, n)
    e1, e2 = s1 / rho, s2 / rho
    m2 = np.sum(np.asarray(m) ** 2, axis=0)
    corr = (2 * e2 - 2 * e1**2 - n) ** 2 / (2 * n**2 * (n + 2))
    return integrate_q(grid, m2 / (2 * rho) + 0.5 * n * rho * T * (1 + corr))


# ---------------------------------------------------------------- phase-space side


def _centered(grid: PhaseGrid, f):
    """f(q, p + u(q)): each q column shifted so its mean velocity sits at p = 0."""
    rho, u, theta = local_moments(grid, f)
    g = np.asarray(f, dtype=float)
    for i in range(grid.n):
        g = shift_p(grid, g, i, -grid.spatial_to_phase(u[i]))
    return g, rho, u, theta


def isotropy_defect(grid: PhaseGrid, f) -> float:
    """Max deviation of centered f from its p-reflections (and axis swap for n = 2), relative to max f.

    For n = 1 isotropy means evenness in p - u. For n = 2 the reflections and
    the swap are necessary conditions only.
    """
    g, *_ = _centered(grid, f)
    top = np.max(np.abs(g))
    n = grid.n
    dev = 0.0
    for i in range(n):
        dev = max(dev, np.max(np.abs(g - np.flip(g, axis=g.ndim - n + i))))
    if n == 2:
        dev = max(dev, np.max(np.abs(g - np.swapaxes(g, -1, -2))))
    return float(dev / top)


def laguerre_project(grid: PhaseGrid, f, bmax: int = 6, isotropy_tol: float = 1e-8):
    """beta_b, b = 0..bmax, of h = f/f_m - 1 in the L_b^(n/2-1)(chi) basis.

    Raises ValueError when f is not isotropic about its mean velocity.
    """
    defect = isotropy_defect(grid, f)
    if defect > isotropy_tol:
        raise ValueError(f"f is not isotropic (defect {defect:.2e})")
    n = grid.n
    rho, u, theta = local_moments(grid, f)
    fm = maxwellian(grid, rho, u, theta)
    th = grid.spatial_to_phase(theta)
    chi = sum((grid.pcoord(i) - grid.spatial_to_phase(u[i])) ** 2 for i in range(n)) / (2 * th)
    dev = np.asarray(f, dtype=float) - fm  # f_m h
    out = []
    for b in range(bmax + 1):
        proj = integrate_p(grid, dev * laguerre(n / 2 - 1, b, chi))
        out.append(proj / (rho * float(laguerre_norm(n, b))))
    return np.stack(out)


def synthesize_isotropic(grid: PhaseGrid, rho, u, theta, betas: dict, eps: float):
    """f = f_m (1 + eps sum_b beta_b L_b^(n/2-1)(chi)); betas maps b >= 2 to scalars or fields."""
    n = grid.n
    fm = maxwellian(grid, rho, u, theta)
    uu = np.asarray(u, dtype=float)
    if uu.ndim <= 1:
        uu = np.broadcast_to(uu.reshape((n,) + (1,) * n), (n,) + grid.qshape)
    th = grid.spatial_to_phase(np.broadcast_to(np.asarray(theta, dtype=float), grid.qshape))
    chi = sum((grid.pcoord(i) - grid.spatial_to_phase(uu[i])) ** 2 for i in range(n)) / (2 * th)
    h = 0.0
    for b, beta in betas.items():
        if b < 2:
            raise ValueError("only b >= 2 keeps the local moments of f_m")
        beta = np.broadcast_to(np.asarray(beta, dtype=float), grid.qshape)
        h = h + grid.spatial_to_phase(beta) * laguerre(n / 2 - 1, b, chi)
    f = fm * (1 + eps * h)
    if np.any(f <= 0):
        raise ValueError("synthesized f is not positive; reduce eps or adjust betas")
    return f


def chi_quadrature_eta(n, c, betas: dict, eps: float, A: int, nodes: int = 200):
    """eta_1..eta_A of the isotropic f by Gauss-Laguerre quadrature in chi.

    c = log(rho/(2 pi theta)^(n/2)); independent of any phase grid.
    """
    from scipy.special import roots_genlaguerre

    x, w = roots_genlaguerre(nodes, n / 2 - 1)
    w = w / math.gamma(n / 2)
    h = sum(beta * laguerre(n / 2 - 1, b, x) for b, beta in betas.items())
    one = 1 + eps * h
    if np.any(one <= 0):
        raise ValueError("1 + eps h must stay positive")
    logf = c - x + np.log(one)
    return [float(np.sum(w * one * logf**a)) for a in range(1, A + 1)]


# ---------------------------------------------------------------- model object


@dataclass
class ClosureModel:
    """Tables for dimension n and order A; exact=True keeps everything rational."""

    n: int
    A: int
    exact: bool = False
    gamma_table: list = field(init=False)

    def __post_init__(self):
        if self.A < 2:
            raise ValueError("closure needs A >= 2")
        if self.n < 1:
            raise ValueError("dimension must be positive")
        g = gamma_moments(self.n, 2 * self.A + 2)
        self.gamma_table = g if self.exact else [float(x) for x in g]

    def _eta1(self, eta1):
        return Fraction(eta1) if self.exact else float(eta1)

    def eta_bar(self, a: int, eta1):
        return eta_bar(a, self._eta1(eta1), self.n)

    def matrix(self, eta1):
        M = closure_matrix(self.A, self._eta1(eta1), self.n)
        return M if self.exact else np.array(M, dtype=float)

    def matrix_inverse(self, eta1):
        Minv = closure_matrix_inverse(closure_matrix(self.A, self._eta1(eta1), self.n))
        return Minv if self.exact else np.array(Minv, dtype=float)

    def beta_tilde(self, eta):
        eta = [Fraction(e) for e in eta] if self.exact else [float(e) for e in eta]
        return beta_tilde_from_eta(eta[: self.A], self.n)

    def norms(self):
        return [laguerre_norm(self.n if self.exact else float(self.n), b) for b in range(2, self.A + 1)]
