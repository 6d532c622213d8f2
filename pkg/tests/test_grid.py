import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinred.grid import (
    AliasingWarning,
    GridError,
    check_finite,
    ddp,
    ddp_quadratic_tail,
    ddq,
    integrate_p,
    integrate_q,
    integrate_qp,
    make_phase_grid,
    shift_p,
    shift_q,
)


def gaussian(grid, scale=1.0):
    return np.broadcast_to(np.exp(-grid.p**2 / (2 * scale)) / np.sqrt(2 * np.pi * scale), grid.shape)


@pytest.mark.parametrize(
    "args, total",
    [((1, 2 * np.pi, 64, 8.0, 128), 2 * np.pi * 16), ((2, 2 * np.pi, 32, 8.0, 64), (2 * np.pi) ** 2 * 16**2)],
)
def test_weight_totals(args, total):
    g = make_phase_grid(*args)
    assert np.isclose(g.wq.sum() * g.wp.sum(), total, rtol=1e-14)
    assert np.isclose(g.wq.sum(), g.Lq**g.n, rtol=1e-14)
    assert np.isclose(g.wp.sum(), (2 * g.Pmax) ** g.n, rtol=1e-14)


def test_small_grid_layout():
    g = make_phase_grid(1, 1.0, 8, 4.0, 16)
    assert g.shape == (8, 16)
    assert np.allclose(g.wq, 1 / 8)
    assert g.wp[0] == g.wp[-1] == 0.5 * g.dp
    assert g.p[0] == -4.0 and g.p[-1] == 4.0


@pytest.mark.parametrize(
    "args",
    [(3, 1.0, 8, 4.0, 16), (1, 1.0, 12, 4.0, 16), (1, 1.0, 8, 4.0, 4), (1, -1.0, 8, 4.0, 16), (1, 1.0, 8, 0.0, 16)],
)
def test_invalid_grids(args):
    with pytest.raises(GridError):
        make_phase_grid(*args)


def test_integrate_p_constant_and_gaussian():
    g = make_phase_grid(1, 2 * np.pi, 64, 8.0, 128)
    assert np.allclose(integrate_p(g, np.ones(g.shape)), 16.0, rtol=1e-14)
    assert np.max(np.abs(integrate_p(g, gaussian(g)) - 1.0)) < 1e-12
    odd = np.broadcast_to(g.p * np.exp(-g.p**2 / 2), g.shape)
    assert np.max(np.abs(integrate_p(g, odd))) < 1e-14


def test_integrate_q_and_qp():
    g = make_phase_grid(1, 2 * np.pi, 64, 8.0, 128)
    assert np.isclose(integrate_qp(g, np.ones(g.shape)), 32 * np.pi, rtol=1e-14)
    assert abs(integrate_q(g, np.sin(g.q))) < 1e-14
    assert abs(integrate_qp(g, gaussian(g)) - 2 * np.pi) < 1e-11


def test_integrate_qp_2d_gaussian():
    g = make_phase_grid(2, 2 * np.pi, 16, 8.0, 64)
    P1, P2 = g.pcoord(0), g.pcoord(1)
    f = np.broadcast_to(np.exp(-(P1**2 + P2**2) / 2) / (2 * np.pi), g.shape)
    assert abs(integrate_qp(g, f) / (2 * np.pi) ** 2 - 1) < 1e-10


def test_quadrature_band_limited_closed_form():
    g = make_phase_grid(1, 2 * np.pi, 32, 10.0, 128)
    q = g.spatial_to_phase(g.q)
    f = (1 + 0.5 * np.cos(2 * q) + 0.3 * np.sin(q)) ** 2 * np.exp(-(g.p**2) / 2)
    exact = 2 * np.pi * (1 + 0.5**2 / 2 + 0.3**2 / 2) * np.sqrt(2 * np.pi)
    assert abs(integrate_qp(g, f) / exact - 1) < 1e-10


def test_derivatives_examples():
    g = make_phase_grid(1, 2 * np.pi, 64, 8.0, 128)
    assert np.max(np.abs(ddq(g, np.sin(g.q)) - np.cos(g.q))) < 1e-12
    assert np.all(ddq(g, np.full(g.qshape, 3.0)) == 0.0)
    e = np.broadcast_to(np.exp(-g.p**2 / 2), g.shape)
    assert np.max(np.abs(ddp(g, e) - (-g.p * e))) < 1e-10


def test_ddp_warns_on_undecayed_field():
    g = make_phase_grid(1, 2 * np.pi, 16, 4.0, 32)
    with pytest.warns(AliasingWarning):
        ddp(g, np.broadcast_to(g.p**2, g.shape))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ddp(g, np.broadcast_to(g.p**2, g.shape), warn=False)


def test_ddp_quadratic_tail_on_log_gaussian():
    g = make_phase_grid(1, 2 * np.pi, 8, 12.0, 128)
    logf = np.broadcast_to(-(g.p - 0.3) ** 2 / 2.4 + 0.2 * np.exp(-(g.p**2)), g.shape)
    exact = -(g.p - 0.3) / 1.2 - 0.4 * g.p * np.exp(-(g.p**2))
    assert np.max(np.abs(ddp_quadratic_tail(g, logf) - exact)) < 1e-11


def test_integration_by_parts():
    g = make_phase_grid(1, 2 * np.pi, 64, 10.0, 128)
    q = g.spatial_to_phase(g.q)
    a = (1 + 0.3 * np.sin(q)) * np.exp(-(g.p**2) / 2)
    b = np.cos(2 * q) * np.exp(-((g.p - 1) ** 2) / 3)
    lhs = integrate_qp(g, a * ddq(g, b))
    rhs = -integrate_qp(g, ddq(g, a) * b)
    assert abs(lhs - rhs) < 1e-10
    lhs = integrate_qp(g, a * ddp(g, b))
    rhs = -integrate_qp(g, ddp(g, a) * b)
    assert abs(lhs - rhs) < 1e-10


def test_refinement_convergence_until_floor():
    errs = []
    for Np in (16, 32, 64):
        g = make_phase_grid(1, 2 * np.pi, 8, 8.0, Np)
        errs.append(abs(integrate_qp(g, gaussian(g)) / (2 * np.pi) - 1))
    assert errs[1] <= errs[0] / 4 or errs[1] < 1e-13
    assert errs[2] <= errs[1] / 4 or errs[2] < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-1.5, 1.5))
def test_shift_roundtrip_and_exactness(sq, sp):
    g = make_phase_grid(1, 2 * np.pi, 32, 12.0, 128)
    q = g.spatial_to_phase(g.q)
    f = (1 + 0.2 * np.cos(q)) * np.exp(-(g.p**2) / 2)
    shifted = shift_q(g, f, 0, sq)
    assert np.max(np.abs(shifted - (1 + 0.2 * np.cos(q - sq)) * np.exp(-(g.p**2) / 2))) < 1e-12
    fp = shift_p(g, f, 0, sp)
    assert np.max(np.abs(fp - (1 + 0.2 * np.cos(q)) * np.exp(-((g.p - sp) ** 2) / 2))) < 1e-10
    assert np.max(np.abs(shift_p(g, fp, 0, -sp) - f)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_integrals_are_linear(a, b):
    g = make_phase_grid(1, 2 * np.pi, 16, 8.0, 32)
    x = gaussian(g) * g.spatial_to_phase(1 + np.sin(g.q))
    y = gaussian(g, 2.0)
    assert np.isclose(integrate_qp(g, a * x + b * y), a * integrate_qp(g, x) + b * integrate_qp(g, y), atol=1e-12)


def test_check_finite():
    with pytest.raises(GridError):
        check_finite(np.array([1.0, np.nan]))
    assert check_finite(np.ones(3)).shape == (3,)
