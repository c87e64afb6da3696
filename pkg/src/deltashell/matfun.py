"""Functions of small complex matrices and the shell renormalization maps.

The renormalization of a squeezed coefficient V is
``Vt = V S`` with ``S = sinc(A/2) cos(A/2)^{-1}`` and ``A = (alpha.nu) V``;
its inverse is ``V = 2 (alpha.nu) arctan((alpha.nu) Vt / 2)``.

Matrix functions are evaluated by eigendecomposition when the eigenvector
basis is well conditioned, and otherwise by scaled power series (exp,
cos, sin, sinc) or by matrix logarithms (arctan).  Nilpotent arguments such
as ``(alpha.nu) V`` with ``d = 0`` in the electrostatic/scalar/magnetic
family are the typical case where the fallback is needed.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dirac import alpha_dot

EIG_COND_MAX = 1e3
SERIES_RTOL = 1e-16
SERIES_MAX_TERMS = 200
COS_TOL = 1e-8
ARCTAN_MARGIN = 1e-10

FUNCTIONS = ("exp", "cos", "sin", "sinc", "arctan")


class SingularCosineError(ValueError):
    """cos((alpha.nu) V / 2) is numerically singular."""


class ArctanDomainError(ValueError):
    """Spectral radius of the arctan argument is not below one."""


class SeriesConvergenceError(RuntimeError):
    pass


def _scalar(f, w):
    if f == "exp":
        return np.exp(w)
    if f == "cos":
        return np.cos(w)
    if f == "sin":
        return np.sin(w)
    if f == "sinc":
        small = np.abs(w) < 1e-4
        ws = np.where(small, 1.0, w)
        w2 = w * w
        return np.where(small, 1 - w2 / 6 + w2 * w2 / 120, np.sin(ws) / ws)
    if f == "arctan":
        return np.arctan(w)
    raise ValueError(f"unknown function {f!r}; expected one of {FUNCTIONS}")


def _series(terms_of, n):
    """Sum a matrix series given a generator of successive terms."""
    total = np.zeros((n, n), dtype=complex)
    for k, term in enumerate(terms_of()):
        total = total + term
        if np.linalg.norm(term) <= SERIES_RTOL * np.linalg.norm(total):
            return total
        if k + 1 >= SERIES_MAX_TERMS:
            break
    raise SeriesConvergenceError("matrix power series did not converge")


def _taylor_exp(X):
    n = X.shape[0]

    def terms():
        t = np.eye(n, dtype=complex)
        k = 0
        while True:
            yield t
            k += 1
            t = t @ X / k

    return _series(terms, n)


def _trig_series(X):
    """cos(X), sin(X), sinc(X) by their power series (for small ||X||)."""
    n = X.shape[0]
    X2 = X @ X

    def cos_terms():
        t = np.eye(n, dtype=complex)
        k = 0
        while True:
            yield t
            t = -t @ X2 / ((2 * k + 1) * (2 * k + 2))
            k += 1

    def sinc_terms():
        t = np.eye(n, dtype=complex)
        k = 0
        while True:
            yield t
            t = -t @ X2 / ((2 * k + 2) * (2 * k + 3))
            k += 1

    c = _series(cos_terms, n)
    sc = _series(sinc_terms, n)
    return c, X @ sc, sc


def _fallback(f, A):
    n = A.shape[0]
    I = np.eye(n, dtype=complex)
    nrm = np.linalg.norm(A, 2)
    if f == "arctan":
        return (scipy.linalg.logm(I + 1j * A) - scipy.linalg.logm(I - 1j * A)) / 2j
    # scale so that the series argument has norm <= 1/2
    s = max(0, int(np.ceil(np.log2(nrm / 0.5)))) if nrm > 0.5 else 0
    X = A / 2.0**s
    if f == "exp":
        E = _taylor_exp(X)
        for _ in range(s):
            E = E @ E
        return E
    c, sn, sc = _trig_series(X)
    for _ in range(s):
        # double-angle formulas; all factors commute
        sc = sc @ c
        sn = 2 * sn @ c
        c = 2 * c @ c - I
    return {"cos": c, "sin": sn, "sinc": sc}[f]


def mat_fun(f, A, eig_cond_max=EIG_COND_MAX):
    """Evaluate the holomorphic function ``f`` at the square matrix ``A``.

    ``f`` is one of 'exp', 'cos', 'sin', 'sinc', 'arctan'.  For arctan the
    spectral radius of ``A`` must be below one.
    """
    if f not in FUNCTIONS:
        raise ValueError(f"unknown function {f!r}; expected one of {FUNCTIONS}")
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if not np.any(A):
        return np.diag(_scalar(f, np.zeros(n, dtype=complex))).astype(complex)
    w, P = np.linalg.eig(A)
    if f == "arctan":
        rho = np.max(np.abs(w))
        if rho >= 1 - ARCTAN_MARGIN:
            raise ArctanDomainError(f"spectral radius {rho:.16g} is not below 1")
    if np.linalg.cond(P) < eig_cond_max:
        return (P * _scalar(f, w)) @ np.linalg.inv(P)
    return _fallback(f, A)


@dataclass(frozen=True)
class ScalingResult:
    S: np.ndarray
    cos_half: np.ndarray
    cos_cond: float


def scaling_matrix(V, nu, rep, cos_tol=COS_TOL):
    """Renormalization matrix S = sinc(A/2) cos(A/2)^{-1}, A = (alpha.nu) V.

    Raises SingularCosineError when the smallest singular value of
    cos(A/2) is below ``cos_tol`` times max(||cos(A/2)||, 1).
    """
    V = np.asarray(V, dtype=complex)
    A = alpha_dot(rep, nu) @ V
    c = mat_fun("cos", A / 2)
    sv = np.linalg.svd(c, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    # relative to max(||cos||, 1) so that an all-but-zero cosine is also caught
    if sv[-1] < cos_tol * max(sv[0], 1.0):
        raise SingularCosineError(f"cos((alpha.nu)V/2) is singular (condition {cond:.3g})")
    S = np.linalg.solve(c.T, mat_fun("sinc", A / 2).T).T
    return ScalingResult(S, c, float(cond))


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Matrix-valued shell coefficient sampled at boundary parameters.

    ``values`` has shape (n_samples, N, N).  A constant field stores one
    sample and broadcasts.
    """

    values: np.ndarray
    rep: object
    constant: bool = False
    params: np.ndarray = field(default=None)

    @classmethod
    def constant_field(cls, V, rep, params=None):
        V = np.asarray(V, dtype=complex).reshape(1, rep.n, rep.n)
        return cls(V, rep, True, params)

    def at(self, i):
        return self.values[0 if self.constant else i]

    def sampled(self, n):
        """Values at ``n`` samples, materialising a constant field."""
        if self.constant:
            return np.broadcast_to(self.values[0], (n, self.rep.n, self.rep.n)).copy()
        if len(self.values) != n:
            raise ValueError(f"field has {len(self.values)} samples, expected {n}")
        return self.values

    def hermitian_defect(self):
        v = self.values
        return float(np.max(np.abs(v - np.conj(np.swapaxes(v, -1, -2)))))


def _normals_for(field_, nu):
    nu = np.asarray(nu, dtype=float)
    if nu.ndim == 1:
        return np.broadcast_to(nu, (len(field_.values), nu.size))
    if field_.constant and len(nu) > 1:
        raise ValueError("constant field needs a single normal")
    if len(nu) != len(field_.values):
        raise ValueError("one normal per field sample is required")
    return nu


def renormalize(field_, nu, cos_tol=COS_TOL):
    """Return the shell coefficient Vt = V S sample by sample."""
    normals = _normals_for(field_, nu)
    out = np.empty_like(field_.values)
    for i, (V, n_i) in enumerate(zip(field_.values, normals)):
        try:
            out[i] = V @ scaling_matrix(V, n_i, field_.rep, cos_tol).S
        except SingularCosineError as exc:
            raise SingularCosineError(f"sample {i}: {exc}") from None
    return CoefficientField(out, field_.rep, field_.constant, field_.params)


def inverse_renormalize(field_, nu):
    """Recover V from Vt via V = 2 (alpha.nu) arctan((alpha.nu) Vt / 2)."""
    normals = _normals_for(field_, nu)
    out = np.empty_like(field_.values)
    for i, (Vt, n_i) in enumerate(zip(field_.values, normals)):
        an = alpha_dot(field_.rep, n_i)
        try:
            out[i] = 2 * an @ mat_fun("arctan", an @ Vt / 2)
        except ArctanDomainError as exc:
            raise ArctanDomainError(f"sample {i}: {exc}") from None
    return CoefficientField(out, field_.rep, field_.constant, field_.params)


def closed_form_scaling(eta, tau, lam, tol=1e-8):
    """Scalar s with Vt = s V for V = eta I + tau beta + lam i (alpha.nu) beta.

    s = (2/sqrt(d)) tan(sqrt(d)/2), d = eta^2 - tau^2 - lam^2, continued
    analytically to d <= 0 through the even function tan(x)/x.
    """
    d = float(eta) ** 2 - float(tau) ** 2 - float(lam) ** 2
    if d > 0:
        k = np.round((np.sqrt(d) / np.pi - 1) / 2)
        crit = ((2 * max(k, 0) + 1) * np.pi) ** 2
        if abs(crit - d) < tol * max(1.0, crit):
            raise SingularCosineError(f"d = {d!r} is at the critical value {crit!r}")
    x2 = d / 4
    if abs(x2) < 1e-3:
        # tan(x)/x = 1 + x^2/3 + 2x^4/15 + 17x^6/315 + 62x^8/2835 + ...
        return 1 + x2 / 3 + 2 * x2**2 / 15 + 17 * x2**3 / 315 + 62 * x2**4 / 2835
    if d > 0:
        x = np.sqrt(x2)
        return float(np.tan(x) / x)
    x = np.sqrt(-x2)
    return float(np.tanh(x) / x)


def family_matrix(eta, tau, lam, nu, rep):
    """eta I + tau beta + lam i (alpha.nu) beta."""
    an = alpha_dot(rep, nu)
    return eta * rep.identity + tau * rep.beta + 1j * lam * an @ rep.beta
