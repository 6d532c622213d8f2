"""Phase-space grid on T^n x [-Pmax, Pmax]^n.

Fields are plain numpy arrays. A phase field has shape ``qshape + pshape``
(q axes first, then p axes); a spatial field has shape ``qshape``; a vector
field on the torus carries a leading axis of length ``n``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

BOUNDARY_DECAY_TOL = 1e-10


class GridError(ValueError):
    """Invalid grid configuration or incompatible field shape."""


class AliasingWarning(RuntimeWarning):
    """Field does not decay at the p boundary; spectral p-derivatives alias."""


def _is_pow2(k: int) -> bool:
    return k > 0 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class PhaseGrid:
    n: int
    Lq: float
    Nq: int
    Pmax: float
    Np: int
    q: np.ndarray = field(repr=False, compare=False)
    p: np.ndarray = field(repr=False, compare=False)
    wq: np.ndarray = field(repr=False, compare=False)
    wp: np.ndarray = field(repr=False, compare=False)

    @property
    def qshape(self) -> tuple[int, ...]:
        return (self.Nq,) * self.n

    @property
    def pshape(self) -> tuple[int, ...]:
        return (self.Np,) * self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return self.qshape + self.pshape

    @property
    def dq(self) -> float:
        return self.Lq / self.Nq

    @property
    def dp(self) -> float:
        return 2.0 * self.Pmax / (self.Np - 1)

    @property
    def volume(self) -> float:
        """Volume of the torus."""
        return self.Lq**self.n

    def qcoord(self, i: int) -> np.ndarray:
        """q^i broadcastable against a phase field."""
        shape = [1] * (2 * self.n)
        shape[i] = self.Nq
        return self.q.reshape(shape)

    def pcoord(self, i: int) -> np.ndarray:
        """p_i broadcastable against a phase field."""
        shape = [1] * (2 * self.n)
        shape[self.n + i] = self.Np
        return self.p.reshape(shape)

    def qmesh(self) -> list[np.ndarray]:
        """Coordinate arrays of shape ``qshape``."""
        return list(np.meshgrid(*([self.q] * self.n), indexing="ij"))

    def pmesh(self) -> list[np.ndarray]:
        """p_i broadcastable against a phase field (alias of pcoord)."""
        return [self.pcoord(i) for i in range(self.n)]

    def psquared(self) -> np.ndarray:
        return sum(self.pcoord(i) ** 2 for i in range(self.n))

    def spatial_to_phase(self, a: np.ndarray) -> np.ndarray:
        """Broadcast a spatial field against the p axes."""
        return np.asarray(a).reshape(self.qshape + (1,) * self.n)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.Nq, d=self.dq)

    def pwavenumbers(self) -> np.ndarray:
        # [-Pmax, Pmax] is treated as one period of length Np*dp
        return 2.0 * np.pi * np.fft.fftfreq(self.Np, d=self.dp)


def make_phase_grid(n: int, Lq: float, Nq: int, Pmax: float, Np: int) -> PhaseGrid:
    if n not in (1, 2):
        raise GridError(f"n must be 1 or 2, got {n}")
    if Nq < 8 or Np < 8 or not _is_pow2(Nq) or not _is_pow2(Np):
        raise GridError(f"Nq and Np must be powers of two >= 8, got {Nq}, {Np}")
    if not (Lq > 0 and Pmax > 0):
        raise GridError("Lq and Pmax must be positive")
    q = np.arange(Nq) * (Lq / Nq)
    p = np.linspace(-Pmax, Pmax, Np)
    dq = Lq / Nq
    dp = 2.0 * Pmax / (Np - 1)
    w1p = np.full(Np, dp)
    w1p[0] = w1p[-1] = 0.5 * dp
    wq = np.full((Nq,) * n, dq**n)
    wp = w1p
    for _ in range(n - 1):
        wp = np.multiply.outer(wp, w1p)
    return PhaseGrid(n, float(Lq), Nq, float(Pmax), Np, q, p, wq, wp)


def grid_for_state(n, Lq, Nq, Np, umax, thetamax, margin=8.0):
    """Grid whose p-box holds the Maxwellian tails: Pmax >= umax + margin*sqrt(thetamax)."""
    Pmax = umax + margin * np.sqrt(thetamax)
    return make_phase_grid(n, Lq, Nq, Pmax, Np)


def _check_phase(grid: PhaseGrid, field: np.ndarray) -> np.ndarray:
    field = np.asarray(field)
    if field.shape[-2 * grid.n:] != grid.shape:
        raise GridError(f"phase field shape {field.shape} does not match grid {grid.shape}")
    return field


def integrate_p(grid: PhaseGrid, field: np.ndarray) -> np.ndarray:
    """Trapezoid sum over the momentum axes; returns a spatial field."""
    field = _check_phase(grid, field)
    n = grid.n
    return np.tensordot(field, grid.wp, axes=(list(range(field.ndim - n, field.ndim)), list(range(n))))


def integrate_q(grid: PhaseGrid, field: np.ndarray) -> float | np.ndarray:
    """Rectangle sum over the torus (trailing ``n`` axes)."""
    field = np.asarray(field)
    n = grid.n
    if field.shape[-n:] != grid.qshape:
        raise GridError(f"spatial field shape {field.shape} does not match {grid.qshape}")
    out = np.tensordot(field, grid.wq, axes=(list(range(field.ndim - n, field.ndim)), list(range(n))))
    return float(out) if np.ndim(out) == 0 else out


def integrate_qp(grid: PhaseGrid, field: np.ndarray) -> float:
    return integrate_q(grid, integrate_p(grid, field))


def _spectral_derivative(a: np.ndarray, axis: int, k: np.ndarray) -> np.ndarray:
    N = a.shape[axis]
    ik = 1j * k.copy()
    if N % 2 == 0:
        ik[N // 2] = 0.0  # Nyquist mode has no well-defined derivative
    shape = [1] * a.ndim
    shape[axis] = N
    return np.fft.ifft(np.fft.fft(a, axis=axis) * ik.reshape(shape), axis=axis).real


def ddq(grid: PhaseGrid, field: np.ndarray, axis: int = 0) -> np.ndarray:
    """Spectral derivative along q^axis of a spatial or phase field.

    The q axes are located by matching the grid shape at the front of the
    trailing dimensions, so vector fields with a leading component axis work.
    """
    field = np.asarray(field, dtype=float)
    n = grid.n
    if field.shape[-2 * n:] == grid.shape and field.ndim >= 2 * n:
        ax = field.ndim - 2 * n + axis
    elif field.shape[-n:] == grid.qshape:
        ax = field.ndim - n + axis
    else:
        raise GridError(f"cannot locate q axes in shape {field.shape}")
    return _spectral_derivative(field, ax, grid.wavenumbers())


def boundary_fraction(grid: PhaseGrid, field: np.ndarray) -> float:
    """max |field| on the p boundary relative to max |field|."""
    field = _check_phase(grid, field)
    top = np.max(np.abs(field))
    if top == 0.0:
        return 0.0
    n = grid.n
    edge = 0.0
    for i in range(n):
        ax = field.ndim - n + i
        edge = max(edge, np.max(np.abs(np.take(field, [0, -1], axis=ax))))
    return float(edge / top)


def ddp(grid: PhaseGrid, field: np.ndarray, axis: int = 0, warn: bool = True) -> np.ndarray:
    """Spectral derivative along p_axis, treating the p-box as periodic."""
    field = _check_phase(grid, np.asarray(field, dtype=float))
    if warn:
        frac = boundary_fraction(grid, field)
        if frac > BOUNDARY_DECAY_TOL:
            warnings.warn(f"field at p boundary is {frac:.2e} of its maximum", AliasingWarning, stacklevel=2)
    ax = field.ndim - grid.n + axis
    return _spectral_derivative(field, ax, grid.pwavenumbers())


def ddp_quadratic_tail(grid: PhaseGrid, field: np.ndarray, axis: int = 0) -> np.ndarray:
    """p-derivative of a field that is quadratic in p near both ends of the box.

    Meant for log f with Gaussian tails. Along each p-line the parabola through
    the two lowest nodes and the top node is removed. Its derivative is taken
    exactly, and the decaying remainder is differentiated spectrally.
    """
    field = _check_phase(grid, np.asarray(field, dtype=float))
    ax = field.ndim - grid.n + axis
    p = grid.p
    x0, x1, x2 = p[0], p[1], p[-1]
    y0, y1, y2 = (np.take(field, [i], axis=ax) for i in (0, 1, -1))
    # Newton form of the interpolating parabola
    d01 = (y1 - y0) / (x1 - x0)
    d12 = (y2 - y1) / (x2 - x1)
    c2 = (d12 - d01) / (x2 - x0)
    shape = [1] * field.ndim
    shape[ax] = grid.Np
    pp = p.reshape(shape)
    quad = y0 + d01 * (pp - x0) + c2 * (pp - x0) * (pp - x1)
    dquad = d01 + c2 * (2 * pp - x0 - x1)
    return dquad + _spectral_derivative(field - quad, ax, grid.pwavenumbers())


def shift_q(grid: PhaseGrid, field: np.ndarray, axis: int, shift) -> np.ndarray:
    """Evaluate field(q - shift) by a Fourier phase shift along q^axis.

    ``shift`` may be an array broadcastable against the phase field (e.g. p*dt),
    in which case each p node is shifted by its own amount.
    """
    field = np.asarray(field, dtype=float)
    ax = field.ndim - 2 * grid.n + axis
    k = grid.wavenumbers()
    shape = [1] * field.ndim
    shape[ax] = grid.Nq
    kk = k.reshape(shape)
    fh = np.fft.fft(field, axis=ax)
    # taking the real part keeps the Nyquist mode as cos(k*shift)
    phase = np.exp(-1j * kk * shift)
    return np.fft.ifft(fh * phase, axis=ax).real


def shift_p(grid: PhaseGrid, field: np.ndarray, axis: int, shift) -> np.ndarray:
    """Evaluate field(p - shift) by spectral interpolation along p_axis.

    Valid when the field decays at the p boundary; the box is treated as periodic.
    """
    field = np.asarray(field, dtype=float)
    ax = field.ndim - grid.n + axis
    k = grid.pwavenumbers()
    shape = [1] * field.ndim
    shape[ax] = grid.Np
    kk = k.reshape(shape)
    fh = np.fft.fft(field, axis=ax)
    phase = np.exp(-1j * kk * shift)
    return np.fft.ifft(fh * phase, axis=ax).real


def check_finite(field: np.ndarray, name: str = "field") -> np.ndarray:
    field = np.asarray(field)
    if not np.all(np.isfinite(field)):
        raise GridError(f"{name} contains NaN or Inf")
    return field
