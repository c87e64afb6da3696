"""Dirac matrices in two and three space dimensions.

Conventions: for theta = 2 the matrices are the Pauli matrices
alpha_1 = sigma_1, alpha_2 = sigma_2, beta = sigma_3.  For theta = 3 the
standard block form alpha_j = [[0, sigma_j], [sigma_j, 0]] and
beta = diag(I_2, -I_2) is used.  All arrays are dense complex128 with the
usual row/column (matrix acting on column spinors) convention.
"""

from dataclasses import dataclass

import numpy as np

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True, eq=False)
class DiracRep:
    """Dirac matrices for spatial dimension ``theta`` and spinor size ``n``."""

    theta: int
    n: int
    alphas: tuple
    beta: np.ndarray

    @property
    def identity(self):
        return np.eye(self.n, dtype=complex)

    def __hash__(self):
        return hash((self.theta, self.n))

    def __eq__(self, other):
        return isinstance(other, DiracRep) and (self.theta, self.n) == (other.theta, other.n)


def _freeze(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def dirac_rep(theta):
    """Return the Dirac matrices for ``theta`` in {2, 3}."""
    if theta == 2:
        alphas = (SIGMA[0], SIGMA[1])
        beta = SIGMA[2]
        n = 2
    elif theta == 3:
        z2 = np.zeros((2, 2), dtype=complex)
        alphas = tuple(np.block([[z2, s], [s, z2]]) for s in SIGMA)
        beta = np.diag([1, 1, -1, -1]).astype(complex)
        n = 4
    else:
        raise ValueError(f"unsupported dimension theta={theta!r}, expected 2 or 3")
    return DiracRep(theta, n, tuple(_freeze(a) for a in alphas), _freeze(beta))


def alpha_dot(rep, v):
    """Contraction alpha . v = sum_j alpha_j v_j.

    ``v`` may carry leading batch axes; the last axis must have length
    ``rep.theta``.  The result has shape ``v.shape[:-1] + (N, N)``.
    """
    v = np.asarray(v)
    if v.shape[-1:] != (rep.theta,):
        raise ValueError(f"vector has {v.shape[-1:]} components, expected {rep.theta}")
    A = np.stack(rep.alphas)
    return np.tensordot(v, A, axes=([-1], [0]))


def anticommutator(a, b):
    return a @ b + b @ a
