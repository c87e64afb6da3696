import numpy as np
import pytest

from deltashell.dirac import dirac_rep
from deltashell.fiber import (NU, FiberOperator, WeakDecayError, fiber_panels, fiber_resolvent_gap,
                              kernel_difference_hs, line_b0_norm, line_cauchy_symbol, max_fiber_gap,
                              truncation_radius)
from deltashell.layer import profile, renormalized_coefficient

REP = dirac_rep(2)
V = 0.5 * np.eye(2)
Z, M = 0.2j, 1.0


def shell_and_layer(xi, eps, z=Z, V=V, prof=None):
    Fe = FiberOperator(xi, z, M, V, eps, prof)
    F0 = FiberOperator(xi, z, M, V, 0.0, prof, Vt=renormalized_coefficient(V, NU, REP))
    return Fe, F0


def brute_hs(F1, F2, R, n):
    """Midpoint rule on [-R, R]^2; diagonal cells average the two one-sided values."""
    h = 2 * R / n
    t = -R + (np.arange(n) + 0.5) * h
    f1, f2 = F1.factors(t), F2.factors(t)
    up = np.einsum("ia,jb->ijab", f1[0], f1[2]) - np.einsum("ia,jb->ijab", f2[0], f2[2])
    lo = np.einsum("ia,jb->ijab", f1[1], f1[3]) - np.einsum("ia,jb->ijab", f2[1], f2[3])
    u = np.sum(np.abs(up) ** 2, axis=(2, 3))
    l = np.sum(np.abs(lo) ** 2, axis=(2, 3))
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    w = np.where(i > j, u, np.where(i < j, l, 0.5 * (u + l)))
    return np.sqrt(w.sum()) * h


def test_truncation_radius_value():
    assert abs(truncation_radius(Z, M) - np.log(1e6) / np.sqrt(1.04)) < 1e-12
    with pytest.raises(WeakDecayError):
        truncation_radius(0.0, 1e-4)


def test_essential_spectrum_is_rejected():
    with pytest.raises(WeakDecayError):
        FiberOperator(0.0, 2.0, 1.0, V, 0.0)


def test_panels_contain_layer_edges():
    e = fiber_panels(2.0**-6, 5.0, 1.0)
    assert {-(2.0**-6), 0.0, 2.0**-6, -5.0, 5.0} <= set(e.tolist())
    assert np.all(np.diff(e) > 0)


def test_kernel_adjoint_symmetry():
    F = FiberOperator(0.7, Z, M, V, 2.0**-4)
    Fc = FiberOperator(0.7, np.conj(Z), M, V, 2.0**-4)
    for a, b in ((0.3, -0.5), (0.01, -0.02), (1.2, 0.4), (-0.05, 0.02)):
        assert np.max(np.abs(F.kernel(a, b).conj().T - Fc.kernel(b, a))) < 1e-13


def test_kernel_jump_on_the_diagonal():
    F = FiberOperator(0.7, Z, M, V, 2.0**-4)
    for a in (-1.0, 0.3, 2.5):
        jump = F.kernel(a + 1e-12, a) - F.kernel(a - 1e-12, a)
        assert np.max(np.abs(jump - 1j * REP.alphas[1])) < 1e-9


def test_solutions_decay_on_their_side():
    F = FiberOperator(0.0, Z, M, V, 2.0**-4)
    phiR, phiL = F.solutions(np.array([-6.0, -3.0, 3.0, 6.0]))
    k = F._kappa.real
    assert abs(np.linalg.norm(phiR[3]) / np.linalg.norm(phiR[2]) - np.exp(-3 * k)) < 1e-12
    assert abs(np.linalg.norm(phiL[0]) / np.linalg.norm(phiL[1]) - np.exp(-3 * k)) < 1e-12


def test_hs_norm_matches_brute_force_grid():
    Fe, F0 = shell_and_layer(0.0, 2.0**-4)
    R = 3.0
    hs = kernel_difference_hs(Fe, F0, R, 32)
    b1, b2 = brute_hs(Fe, F0, R, 800), brute_hs(Fe, F0, R, 1600)
    rich = (4 * b2 - b1) / 3
    assert abs(hs - rich) < 1e-4 * hs


def test_zero_potential_gap_vanishes():
    for xi in (0.0, 2.5):
        assert fiber_resolvent_gap(xi, 2.0**-8, Z, M, np.zeros((2, 2))) < 1e-6


def test_gap_decreases_under_halving():
    gaps = [fiber_resolvent_gap(0.0, 2.0**-k, Z, M, V) for k in range(6, 11)]
    assert np.all(np.diff(gaps) < 0)
    slope = np.polyfit(np.log(2.0 ** -np.arange(6, 11)), np.log(gaps), 1)[0]
    assert abs(slope - 0.5) < 0.05


def test_naive_coefficient_leaves_a_floor():
    naive = [fiber_resolvent_gap(0.0, 2.0**-k, Z, M, V, mode="naive") for k in (16, 20)]
    ren = fiber_resolvent_gap(0.0, 2.0**-20, Z, M, V)
    assert abs(naive[1] - naive[0]) < 0.05 * naive[0]
    assert naive[1] > 10 * ren
    with pytest.raises(ValueError):
        fiber_resolvent_gap(0.0, 0.1, Z, M, V, mode="bare")


def test_smooth_profile_gap_also_converges():
    par = profile("parabolic")
    g = [fiber_resolvent_gap(0.0, 2.0**-k, Z, M, V, prof=par) for k in (6, 10)]
    assert g[1] < 0.5 * g[0]


def test_max_over_grid():
    xis = np.linspace(-2, 2, 5)
    best, gaps = max_fiber_gap(xis, 2.0**-6, Z, M, V)
    assert best == max(gaps) and len(gaps) == 5


def test_line_symbol_closed_form():
    for xi in (0.0, 1.3, -4.0):
        k = np.sqrt(xi * xi + M * M - Z * Z)
        ref = (xi * REP.alphas[0] + M * REP.beta + Z * np.eye(2)) / (2 * k)
        assert np.max(np.abs(line_cauchy_symbol(xi, Z, M) - ref)) < 1e-12


def test_line_b0_norm_is_order_one():
    val = line_b0_norm(0.0, 1.0, np.linspace(-8, 8, 17))
    assert 2 / np.pi < val < 2.0
