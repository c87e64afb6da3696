import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltashell.dirac import dirac_rep
from deltashell.kernels import KernelParams, dirac_apply_fd, green_kernel, sqrt_branch


def test_sqrt_branch():
    assert sqrt_branch(-1.0) == 1j
    assert sqrt_branch(-1 - 1e-3j).imag > 0
    with pytest.raises(ValueError):
        sqrt_branch(2.0)


def test_params_validation():
    with pytest.raises(ValueError):
        KernelParams(1.5, 1.0)
    p = KernelParams(0.3 + 0.1j, 1.0)
    assert p.k.imag > 0 and p.mu.real > 0
    assert p.conj().z == 0.3 - 0.1j


def _fd_order(params, x0):
    f = lambda x: green_kernel(params, x)  # noqa: E731
    hs = np.array([1e-2, 5e-3, 2.5e-3])
    r = [np.max(np.abs(dirac_apply_fd(params, f, x0, h))) for h in hs]
    return np.polyfit(np.log(hs), np.log(r), 1)[0]


@pytest.mark.parametrize("theta", [2, 3])
@pytest.mark.parametrize("z", [0.0, 0.4 + 0.3j, -0.7j])
def test_pde_residual_second_order(theta, z):
    params = KernelParams(z, 1.0, theta)
    x0 = np.array([0.4, -0.3, 0.25][:theta])
    assert _fd_order(params, x0) >= 1.8


@pytest.mark.parametrize("theta", [2, 3])
def test_adjoint_reflection(theta, rng):
    params = KernelParams(0.35 + 0.2j, 1.0, theta)
    x = rng.normal(size=(100, theta))
    lhs = np.conj(np.swapaxes(green_kernel(params, x), -1, -2))
    assert np.max(np.abs(lhs - green_kernel(params.conj(), -x))) < 1e-12


def test_two_dimensional_formula():
    import scipy.special as sp

    params = KernelParams(0.2, 1.0)
    rep = dirac_rep(2)
    x = np.array([0.6, 0.8])
    k, mu = params.k, params.mu
    expect = (k / (2 * np.pi)) * sp.kv(1, mu) * (0.6 * rep.alphas[0] + 0.8 * rep.alphas[1]) \
        + sp.kv(0, mu) / (2 * np.pi) * (rep.beta + 0.2 * rep.identity)
    assert np.allclose(green_kernel(params, x), expect, atol=1e-14)


@given(st.floats(0.2, 5.0), st.floats(0, 2 * np.pi))
def test_decay_and_batching(r, a):
    params = KernelParams(0.1j, 1.0)
    x = r * np.array([np.cos(a), np.sin(a)])
    G = green_kernel(params, x[None])[0]
    assert np.max(np.abs(G)) < 2 * np.exp(-0.9 * r) / np.sqrt(r) + 1.0 / r
    assert np.allclose(G, green_kernel(params, x))


def test_errors():
    params = KernelParams(0.0, 1.0)
    with pytest.raises(ValueError):
        green_kernel(params, np.zeros(2))
    with pytest.raises(ValueError):
        green_kernel(params, np.ones(3))
