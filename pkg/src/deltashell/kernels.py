"""Green kernels of the free Dirac operator -i alpha.grad + m beta - z.

2D:  G_z(x) = k/(2 pi) K_1(-i k|x|) (alpha.x)/|x| + 1/(2 pi) K_0(-i k|x|) (m beta + z)
3D:  G_z(x) = (z + m beta + i(1 - i k|x|)(alpha.x)/|x|^2) exp(i k|x|)/(4 pi |x|)

with k = sqrt(z^2 - m^2) on the branch Im k > 0.
"""

from dataclasses import dataclass

import numpy as np

from .bessel import bessel_k012
from .dirac import alpha_dot, dirac_rep


def sqrt_branch(w):
    """Square root with positive imaginary part; the cut is [0, inf)."""
    w = complex(w)
    if w.imag == 0 and w.real >= 0:
        raise ValueError(f"sqrt_branch: {w} lies on the cut [0, inf)")
    r = np.sqrt(w)
    return r if r.imag > 0 else -r


@dataclass(frozen=True)
class KernelParams:
    z: complex
    m: float = 1.0
    theta: int = 2

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "m", float(self.m))
        z, m = self.z, self.m
        if z.imag == 0 and abs(z.real) >= abs(m):
            raise ValueError(f"z = {z} lies in the essential spectrum (|Re z| >= |m|)")

    @property
    def k(self):
        return sqrt_branch(self.z**2 - self.m**2)

    @property
    def mu(self):
        """Decay rate -i k (Re mu = Im k > 0)."""
        return -1j * self.k

    def conj(self):
        return KernelParams(np.conj(self.z), self.m, self.theta)


def green_kernel(params, x, rep=None):
    """G_z(x) for points ``x`` of shape (..., theta); returns (..., N, N)."""
    rep = rep or dirac_rep(params.theta)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.theta or rep.theta != params.theta:
        raise ValueError("dimension mismatch between x, params and rep")
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ValueError("the Green kernel is singular at x = 0")
    ax = alpha_dot(rep, x / r[..., None])
    M = params.m * rep.beta + params.z * rep.identity
    k = params.k
    if params.theta == 2:
        K0, K1, _ = bessel_k012(params.mu * r, want_k2=False)
        return (k / (2 * np.pi)) * K1[..., None, None] * ax + K0[..., None, None] / (2 * np.pi) * M
    e = np.exp(1j * k * r) / (4 * np.pi * r)
    return e[..., None, None] * (M + (1j * (1 - 1j * k * r) / r)[..., None, None] * ax)


def dirac_apply_fd(params, fun, x, h, rep=None):
    """(-i alpha.grad + m beta - z) applied to a matrix field by central differences."""
    rep = rep or dirac_rep(params.theta)
    x = np.asarray(x, dtype=float)
    out = (params.m * rep.beta - params.z * rep.identity) @ fun(x)
    for j in range(params.theta):
        e = np.zeros(params.theta)
        e[j] = h
        d = (fun(x + e) - fun(x - e)) / (2 * h)
        out = out - 1j * rep.alphas[j] @ d
    return out
