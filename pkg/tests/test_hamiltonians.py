import math

import numpy as np
import pytest

from conftest import random_f
from kinred.grid import integrate_qp, make_phase_grid, shift_p
from kinred.hamiltonians import (
    CouplingConstants,
    corollary_residual,
    decompose,
    delta_h,
    field_energy,
    greens_solve,
    h_fluids,
    h_kinetic,
    h_kinetic_split,
    h_selfgrav,
    h_vlasov,
)
from kinred.maxwellian import local_moments, maxwellian
from kinred.moments import HydroState, bimodal_counterexample, momentum_density, poisson_map_JA

LOG_2PIE = math.log(2 * math.pi * math.e)


def test_h_kinetic_global_maxwellian():
    g = make_phase_grid(1, 2 * np.pi, 16, 12.0, 128)
    assert abs(h_kinetic(g, maxwellian(g, 1.0, [0.0], 1.0)) - np.pi) < 1e-12


def test_h_kinetic_shift(grid1):
    f = random_f(grid1, 0)
    c = 0.4
    fs = shift_p(grid1, f, 0, c)
    rho_tot = integrate_qp(grid1, f)
    m_tot = integrate_qp(grid1, grid1.pcoord(0) * f)
    assert abs(h_kinetic(grid1, fs) - h_kinetic(grid1, f) - (c * m_tot + c**2 * rho_tot / 2)) < 1e-9


def test_h_kinetic_split_residual():
    g = make_phase_grid(1, 2 * np.pi, 32, 12.0, 128)
    for seed in range(50):
        f = random_f(g, seed, kmax=2)
        assert abs(h_kinetic(g, f) - h_kinetic_split(g, f)) < 1e-10 * h_kinetic(g, f)


def test_h_fluids_examples():
    g = make_phase_grid(1, 2 * np.pi, 16, 12.0, 128)
    st = HydroState(g, np.zeros((1, 16)), np.stack([np.ones(16), np.full(16, -0.5 * LOG_2PIE)]))
    assert abs(h_fluids(st) - np.pi) < 1e-12
    f = maxwellian(g, 1 + 0.2 * np.sin(g.q), [0.3 * np.cos(g.q)], 1 + 0.1 * np.cos(g.q))
    st = poisson_map_JA(g, f, 1)
    assert abs(h_fluids(st) - h_kinetic(g, f)) < 1e-9
    flipped = HydroState(g, -st.m, st.s)
    assert h_fluids(flipped) == h_fluids(st)
    with pytest.raises(ValueError):
        h_fluids(st.truncate(0))


def test_delta_h_maxwellian_and_bimodal():
    g = make_phase_grid(1, 2 * np.pi, 16, 12.0, 128)
    f = maxwellian(g, 1 + 0.2 * np.sin(g.q), [0.3 * np.cos(g.q)], 1.0)
    assert abs(delta_h(g, f)) < 1e-10
    ga = make_phase_grid(1, 2 * np.pi, 8, 255 / 32, 256)
    vals = [delta_h(ga, bimodal_counterexample(ga, c)) for c in (1.0, 2.0, 4.0)]
    assert 0 < vals[0] < vals[1] < vals[2]


@pytest.mark.parametrize("seed", range(50))
def test_decomposition_exact(grid1, seed):
    d = decompose(grid1, random_f(grid1, seed))
    assert abs(d["residual"]) / d["H_KT"] < 1e-9
    assert d["DeltaH"] >= -1e-12


def test_delta_h_strictly_positive_off_maxwellian():
    g = make_phase_grid(1, 2 * np.pi, 16, 12.0, 128)
    for seed in range(100):
        assert delta_h(g, random_f(g, seed, kmax=2)) > 0


def test_delta_h_near_maxwellian_scaling():
    g = make_phase_grid(1, 2 * np.pi, 16, 12.0, 256)
    fm = maxwellian(g, 1 + 0.2 * np.sin(g.q), [0.3 * np.cos(g.q)], 1 + 0.1 * np.cos(2 * g.q))
    rho, u, theta = local_moments(g, fm)
    # h orthogonal to 1, p, p^2 under f_m: odd cubic Hermite in the scaled velocity
    z = (g.pcoord(0) - g.spatial_to_phase(u[0])) / g.spatial_to_phase(np.sqrt(theta))
    h = z**3 - 3 * z
    vals = [delta_h(g, fm * (1 + e * h * np.exp(-(z**2) / 8))) for e in (0.04, 0.02, 0.01)]
    r = [vals[0] / vals[1], vals[1] / vals[2]]
    assert all(3.5 <= x <= 4.5 for x in r), r


def test_greens_solve_examples():
    g = make_phase_grid(1, 2 * np.pi, 32, 8.0, 16)
    phi, E = greens_solve(g, np.full(32, 1.3))
    assert np.max(np.abs(phi)) < 1e-14 and abs(E) < 1e-14
    for coupling in (1.0, 2.5):
        phi, E = greens_solve(g, 1.0 + np.cos(g.q), coupling)
        assert np.max(np.abs(phi - coupling * np.cos(g.q))) < 1e-13
        assert abs(E - coupling * np.pi / 2) < 1e-12


def test_greens_energy_nonnegative():
    g = make_phase_grid(2, 2 * np.pi, 16, 8.0, 16)
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert greens_solve(g, 1 + 0.3 * rng.standard_normal(g.qshape))[1] >= 0


def test_vlasov_and_selfgrav(grid1):
    f = random_f(grid1, 2)
    assert h_vlasov(grid1, f, CouplingConstants("electrostatic", e2=0.0)) == h_kinetic(grid1, f)
    c = CouplingConstants("electrostatic", e2=1.0)
    assert abs(corollary_residual(grid1, f, c)) < 1e-9 * h_kinetic(grid1, f)
    assert field_energy(grid1, f, c) > 0
    sg = CouplingConstants("selfgravitating", G_grav=1.0)
    assert h_selfgrav(grid1, f, sg) < h_kinetic(grid1, f)
    assert abs(corollary_residual(grid1, f, sg)) < 1e-9 * h_kinetic(grid1, f)


def test_coupling_validation():
    with pytest.raises(ValueError):
        CouplingConstants("magnetic")
    with pytest.raises(ValueError):
        CouplingConstants("electrostatic", e2=-1.0)
    assert CouplingConstants().signed == 0.0


def test_decompose_2d(grid2):
    f = random_f(grid2, 1, kmax=2, pert_amp=0.2)
    d = decompose(grid2, f)
    assert abs(d["residual"]) / d["H_KT"] < 1e-9 and d["DeltaH"] > 0
    assert np.allclose(momentum_density(grid2, f).shape, (2, 16, 16))
