"""Quadrature helpers: Gauss-Legendre panels, spectral integration, trig resampling."""

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L


@lru_cache(maxsize=64)
def _gauss(n):
    x, w = L.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a=-1.0, b=1.0):
    x, w = _gauss(n)
    h = 0.5 * (b - a)
    return a + h * (x + 1), h * w


@lru_cache(maxsize=64)
def cumulative_matrix(n):
    """Q with (Q f)_i = int_{-1}^{x_i} p(s) ds, p the interpolant of f at Gauss nodes."""
    x, _ = _gauss(n)
    V = L.legvander(x, n - 1)
    # integrate each Legendre basis polynomial from -1
    E = np.eye(n)
    integ = np.stack([L.legval(x, L.legint(E[k], lbnd=-1)) for k in range(n)], axis=1)
    Q = integ @ np.linalg.inv(V)
    Q.setflags(write=False)
    return Q


def sign_kernel_matrix(n):
    """(T f)_i = (i/2) int_{-1}^{1} sign(x_i - s) f(s) ds on Gauss nodes."""
    _, w = _gauss(n)
    Q = cumulative_matrix(n)
    return 0.5j * (2 * Q - w[None, :])


def trig_resample(values, n_out):
    """Resample periodic samples (axis 0) onto ``n_out`` equispaced nodes."""
    values = np.asarray(values)
    n = values.shape[0]
    if n_out == n:
        return values.copy()
    c = np.fft.fft(values, axis=0) / n
    out = np.zeros((n_out,) + values.shape[1:], dtype=complex)
    m = min(n, n_out)
    half = (m - 1) // 2
    out[: half + 1] = c[: half + 1]
    out[n_out - half:] = c[n - half:]
    if m % 2 == 0:
        # split (or fold) the Nyquist coefficient symmetrically
        if n_out > n:
            out[half + 1] = 0.5 * c[half + 1]
            out[n_out - half - 1] = 0.5 * c[half + 1]
        else:
            out[half + 1] = c[half + 1] + c[n - half - 1]
    return np.fft.ifft(out, axis=0) * n_out


def lagrange_weights_at_zero(nodes):
    """Weights w_k with p(0) = sum_k w_k p(nodes_k) for polynomials of degree < len(nodes)."""
    x = np.asarray(nodes, dtype=float)
    w = np.ones_like(x)
    for k in range(len(x)):
        for j in range(len(x)):
            if j != k:
                w[k] *= x[j] / (x[j] - x[k])
    return w
