import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian
from deltashell.dirac import alpha_dot, dirac_rep
from deltashell.layer import (PROFILES, SingularJumpError, apply_T, constant_inverse, free_generator,
                              invert_layer_operator, jump_matrix, layer_grid, layer_operator_apply,
                              layer_propagator, layer_transfer, profile, profile_Q, renormalized_coefficient,
                              scaling_from_quadrature)
from deltashell.matfun import scaling_matrix

REP = dirac_rep(2)
NU = np.array([0.0, 1.0])
TAU = np.array([1.0, 0.0])
AN = alpha_dot(REP, NU)
V0 = np.array([[0.5, 0.2j], [-0.2j, -0.3]])


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_profiles_are_normalized(name):
    p = profile(name)
    assert np.allclose(p.Q(np.array([-1.0, 1.0])), [-0.5, 0.5], atol=1e-15)
    val, _ = scipy.integrate.quad(p.q, -1, 1, points=list(p.breaks) or None, epsabs=1e-14)
    assert abs(val - 1) < 1e-12
    t = np.linspace(-0.99, 0.99, 41)
    assert p.q_sup >= np.max(p.q(t)) - 1e-14


def test_parabolic_primitive_matches_quadrature():
    p = profile("parabolic")
    for t in (-0.7, 0.0, 0.3, 0.95):
        ref = -0.5 + scipy.integrate.quad(p.q, -1, t, epsabs=1e-15)[0]
        assert abs(p.Q(np.array([t]))[0] - ref) < 1e-13


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_custom_profile_and_normalization_error():
    p = profile_Q(lambda t: 0.5 + 0.25 * np.asarray(t), "tilted")
    assert abs(p.Q(np.array([0.0]))[0] - (-0.5 + 0.5 - 0.125)) < 1e-10
    with pytest.raises(ValueError):
        profile_Q(lambda t: np.ones_like(t), "unit")
    with pytest.raises(ValueError):
        profile("triangle")


def test_sign_kernel_examples():
    t, _ = layer_grid(16)
    phi = np.array([1.0, -2j])
    assert np.max(np.abs(apply_T(np.tile(phi, (16, 1))) - 1j * np.outer(t, phi))) < 1e-13
    assert np.max(np.abs(apply_T(np.outer(t, phi)) - 0.5j * np.outer(t**2 - 1, phi))) < 1e-13


def smooth_data(rng, t, degree=6):
    c = rng.normal(size=(degree, 2)) + 1j * rng.normal(size=(degree, 2))
    return sum(np.outer(np.cos(k * np.arccos(t)), c[k]) for k in range(degree))


def test_inverse_of_free_layer_operator_is_identity(rng):
    t, _ = layer_grid(24)
    f = smooth_data(rng, t)
    assert np.array_equal(invert_layer_operator(f, np.zeros((2, 2)), NU, profile("parabolic"), REP), f)


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_inverse_residual_on_smooth_data(name, rng):
    prof = profile(name)
    t, _ = layer_grid(48)
    for _ in range(5):
        V = random_hermitian(rng, 2, 0.5)
        f = smooth_data(rng, t)
        g = invert_layer_operator(f, V, NU, prof, REP)
        assert np.max(np.abs(layer_operator_apply(g, V, NU, prof, REP) - f)) < 1e-9 * np.max(np.abs(f))


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_inverse_on_constants_has_closed_form(name, rng):
    prof = profile(name)
    t, _ = layer_grid(32)
    V = random_hermitian(rng, 2, 0.8)
    phi = rng.normal(size=2) + 1j * rng.normal(size=2)
    g = invert_layer_operator(np.tile(phi, (32, 1)), V, NU, prof, REP)
    assert np.max(np.abs(g - constant_inverse(phi, V, NU, prof, t, REP))) < 1e-10


def test_scaling_quadrature_zero_and_electrostatic():
    p = profile("parabolic")
    assert np.allclose(scaling_from_quadrature(np.zeros((2, 2)), NU, p, REP), np.eye(2), atol=1e-15)
    # electrostatic V = I: V S = 2 tan(1/2) I
    S = scaling_from_quadrature(np.eye(2), NU, p, REP)
    assert np.max(np.abs(S - 2 * np.tan(0.5) * np.eye(2))) < 1e-12


@settings(max_examples=15)
@given(st.integers(0, 2**31 - 1))
def test_scaling_is_profile_independent(seed):
    rng = np.random.default_rng(seed)
    V = random_hermitian(rng, 2, rng.uniform(0.05, 1.5))
    S = scaling_matrix(V, NU, REP).S
    for name in PROFILES:
        assert np.max(np.abs(scaling_from_quadrature(V, NU, profile(name), REP) - S)) < 1e-9


def test_free_transfer_is_free_flow():
    G0 = free_generator(0.2j, 1.0, 0.7, NU, TAU, REP)
    for name in PROFILES:
        for eps in (1e-1, 1e-3):
            M = layer_transfer(np.zeros((2, 2)), profile(name), 0.2j, 1.0, 0.7, eps, REP)
            # exact for the indicator, RK4 with step 5e-3 otherwise
            assert np.max(np.abs(M - scipy.linalg.expm(2 * eps * G0))) < 1e-10
            assert np.linalg.norm(M - np.eye(2), 2) < 3 * eps * np.linalg.norm(G0, 2)


def test_indicator_transfer_at_zero_frequency_is_exponential(rng):
    # with z = m = xi = 0 the layer ODE is u' = -i (alpha.nu) V q u exactly
    for _ in range(10):
        V = random_hermitian(rng, 2, rng.uniform(0.1, 1.2))
        M = layer_transfer(V, profile("indicator"), eps=2.0**-6, rep=REP)
        assert np.max(np.abs(M - scipy.linalg.expm(-1j * AN @ V))) < 1e-13
        J = jump_matrix(renormalized_coefficient(V, NU, REP), NU, REP)
        assert np.max(np.abs(M - np.linalg.inv(J))) < 1e-10


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_transfer_converges_to_inverse_jump_at_first_order(name):
    Jinv = np.linalg.inv(jump_matrix(renormalized_coefficient(V0, NU, REP), NU, REP))
    es = 2.0 ** -np.arange(3, 11)
    err = [np.linalg.norm(layer_transfer(V0, profile(name), 0.2j, 1.0, 0.7, e, REP) - Jinv, 2) for e in es]
    slope = np.polyfit(np.log(es), np.log(err), 1)[0]
    assert 0.9 < slope < 1.1


def test_propagator_at_output_points_is_consistent():
    prof = profile("parabolic")
    s = np.array([-1.0, -0.3, 0.4, 1.0])
    U = layer_propagator(V0, prof, 0.2j, 1.0, 0.7, 0.05, REP, NU, TAU, s_out=s)
    assert np.max(np.abs(U[0] - np.eye(2))) < 1e-15
    assert np.max(np.abs(U[-1] - layer_transfer(V0, prof, 0.2j, 1.0, 0.7, 0.05, REP))) < 1e-10


def test_jump_matrix_examples():
    assert np.allclose(jump_matrix(np.zeros((2, 2)), NU, REP), np.eye(2), atol=1e-15)
    for eta in (0.3, 0.8, 1.5):
        J = jump_matrix(2 * np.tan(eta / 2) * np.eye(2), NU, REP)
        assert np.max(np.abs(J - (np.cos(eta) * np.eye(2) + 1j * np.sin(eta) * AN))) < 1e-14


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1))
def test_jump_matrix_is_unimodular_for_hermitian_coefficients(seed):
    rng = np.random.default_rng(seed)
    J = jump_matrix(random_hermitian(rng, 2, rng.uniform(0.0, 5.0)), NU, REP)
    assert abs(abs(np.linalg.det(J)) - 1) < 1e-12


def test_singular_jump_raises():
    # i(alpha.nu) + (eta + tau beta)/2 is singular when tau^2 - eta^2 = 4
    with pytest.raises(SingularJumpError):
        jump_matrix(2 * REP.beta, NU, REP)
    with pytest.raises(SingularJumpError):
        jump_matrix(np.sqrt(5) * REP.beta + np.eye(2), NU, REP)
