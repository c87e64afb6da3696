"""Layer calculus across a squeezed potential.

On the transverse interval (-1, 1) with a profile q (int q = 1) and its
primitive Q (Q(-1) = -1/2) this module provides the sign-kernel operator

    T f(t) = (i/2) int_{-1}^{1} sign(t - s) f(s) ds,

the explicit inverse of I + T (alpha.nu) V q, the quadrature form of the
renormalization matrix, transfer matrices of the transverse Dirac ODE
across the layer, and the jump matrix of the limiting transmission
condition.

Orientation: t < 0 is the Omega_+ side and t > 0 the Omega_- side, so the
layer transfer M maps trace_+ to trace_-, while J maps trace_- to trace_+.
The limit identity is therefore M -> J(V S)^{-1}.
"""

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .dirac import alpha_dot, dirac_rep
from .matfun import COS_TOL, SingularCosineError, mat_fun, scaling_matrix
from .quad import cumulative_matrix, gauss_legendre, sign_kernel_matrix

NORMALIZATION_TOL = 1e-10
RK4_STEP = 5e-3  # h * ||generator|| per step
MIN_STEP = 1e-14


class SingularJumpError(np.linalg.LinAlgError):
    pass


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class LayerProfile:
    """Transverse profile q on (-1, 1) with primitive Q, Q(-1) = -1/2."""

    name: str
    q: object
    Q: object
    q_sup: float
    breaks: tuple = ()
    piecewise_constant: bool = False
    eps: float = None

    def with_eps(self, eps):
        return LayerProfile(self.name, self.q, self.Q, self.q_sup, self.breaks,
                            self.piecewise_constant, float(eps))


def _indicator_q(t):
    return np.full(np.shape(t), 0.5)


def _parabolic_q(t):
    t = np.asarray(t, dtype=float)
    return 0.75 * (1 - t * t)


def _parabolic_Q(t):
    t = np.asarray(t, dtype=float)
    return 0.75 * t - 0.25 * t**3


def _cosine_q(t):
    return 0.25 * np.pi * np.cos(0.5 * np.pi * np.asarray(t, dtype=float))


def _cosine_Q(t):
    return 0.5 * np.sin(0.5 * np.pi * np.asarray(t, dtype=float))


PROFILES = {
    "indicator": lambda: LayerProfile("indicator", _indicator_q, lambda t: 0.5 * np.asarray(t, dtype=float),
                                      0.5, piecewise_constant=True),
    "parabolic": lambda: LayerProfile("parabolic", _parabolic_q, _parabolic_Q, 0.75),
    "cosine": lambda: LayerProfile("cosine", _cosine_q, _cosine_Q, 0.25 * np.pi),
}


def profile(name, eps=None):
    """One of the built-in profiles 'indicator', 'parabolic', 'cosine'."""
    try:
        p = PROFILES[name]()
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}") from None
    return p if eps is None else p.with_eps(eps)


def profile_Q(q, name="custom", breaks=(), eps=None, tol=NORMALIZATION_TOL):
    """LayerProfile for a callable profile ``q`` with Q by cumulative quadrature."""
    pts = sorted(b for b in breaks if -1 < b < 1)
    total = sum(scipy.integrate.quad(q, a, b, epsabs=1e-14, epsrel=1e-14, limit=200)[0]
                for a, b in zip([-1.0] + pts, pts + [1.0]))
    if abs(total - 1) > tol:
        raise ValueError(f"profile is not normalized: int q = {total!r}")
    grid = np.linspace(-1, 1, 2001)
    q_sup = float(np.max(np.abs(q(grid))))

    def Q(t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape)
        for idx, ti in np.ndenumerate(t):
            if ti <= -1:
                out[idx] = -0.5
            elif ti >= 1:
                out[idx] = 0.5
            else:
                cuts = [b for b in pts if b < ti]
                edges = [-1.0] + cuts + [float(ti)]
                out[idx] = -0.5 + sum(scipy.integrate.quad(q, a, b, epsabs=1e-15, epsrel=1e-14)[0]
                                      for a, b in zip(edges[:-1], edges[1:]))
        return out

    return LayerProfile(name, q, Q, q_sup, tuple(pts), False, eps)


# ---------------------------------------------------------------------------
# sign-kernel operator and its explicit inverse on a Gauss grid
# ---------------------------------------------------------------------------
def layer_grid(nt):
    """Gauss-Legendre nodes and weights on (-1, 1)."""
    return gauss_legendre(nt)


def _apply_rows(M, f):
    f = np.asarray(f)
    return np.tensordot(M, f, axes=(1, 0))


def apply_T(f, nu=None, rep=None):
    """T f on the Gauss grid; ``f`` has shape (nt, ...).

    With ``nu`` given the operator T (alpha.nu) is applied instead.
    """
    f = np.asarray(f, dtype=complex)
    if nu is not None:
        rep = rep or dirac_rep(len(nu))
        f = np.einsum("ab,tb...->ta...", alpha_dot(rep, nu), f)
    return _apply_rows(sign_kernel_matrix(f.shape[0]), f)


def layer_operator_apply(g, V, nu, prof, rep=None):
    """(I + T (alpha.nu) V q) g on the Gauss grid; g has shape (nt, N[, K])."""
    rep = rep or dirac_rep(len(nu))
    g = np.asarray(g, dtype=complex)
    t, _ = layer_grid(g.shape[0])
    A = alpha_dot(rep, nu) @ np.asarray(V, dtype=complex)
    qg = prof.q(t).reshape((-1,) + (1,) * (g.ndim - 1)) * g
    return g + apply_T(np.einsum("ab,tb...->ta...", A, qg))


def _cos_half_inverse(A, cos_tol=COS_TOL):
    c = mat_fun("cos", A / 2)
    sv = np.linalg.svd(c, compute_uv=False)
    if sv[-1] < cos_tol * max(sv[0], 1.0):
        raise SingularCosineError(f"cos((alpha.nu)V/2) is singular (sigma_min {sv[-1]:.3e})")
    return np.linalg.inv(c)


def _exp_iAQ(A, Qv, sign):
    """exp(sign * i A Q_k) for every sample Q_k (shape (nt, N, N))."""
    return scipy.linalg.expm(sign * 1j * np.asarray(Qv)[:, None, None] * A[None])


def invert_layer_operator(f, V, nu, prof, rep=None):
    """g with (I + T (alpha.nu) V q) g = f via the explicit inverse operator.

    O f = f + exp(-iAQ) Xi f - iA int_{-1}^{t} exp(iA(Q(s) - Q(t))) q(s) f(s) ds,
    Xi f = (1/2) cos(A/2)^{-1} iA int_{-1}^{1} exp(iA(Q(s) - 1/2)) q(s) f(s) ds,
    with A = (alpha.nu) V; integrals use the spectral Gauss quadrature.
    """
    rep = rep or dirac_rep(len(nu))
    f = np.asarray(f, dtype=complex)
    nt = f.shape[0]
    t, w = layer_grid(nt)
    A = alpha_dot(rep, nu) @ np.asarray(V, dtype=complex)
    cinv = _cos_half_inverse(A)
    Qt, qt = prof.Q(t), prof.q(t)
    Ep, Em = _exp_iAQ(A, Qt, +1), _exp_iAQ(A, Qt, -1)
    h = np.einsum("tab,tb...->ta...", Ep, qt.reshape((-1,) + (1,) * (f.ndim - 1)) * f)
    cum = _apply_rows(cumulative_matrix(nt), h)
    full = np.tensordot(w, h, axes=(0, 0))
    xi = 0.5 * cinv @ (1j * A) @ mat_fun("exp", -0.5j * A) @ full.reshape(A.shape[0], -1)
    xi = xi.reshape(full.shape)
    g = f + np.einsum("tab,b...->ta...", Em, xi)
    g = g - 1j * np.einsum("ab,tbc,tc...->ta...", A, Em, cum)
    return g


def constant_inverse(phi, V, nu, prof, t, rep=None):
    """Closed form cos(A/2)^{-1} exp(-iAQ(t)) phi of the inverse on constant data."""
    rep = rep or dirac_rep(len(nu))
    A = alpha_dot(rep, nu) @ np.asarray(V, dtype=complex)
    cinv = _cos_half_inverse(A)
    E = _exp_iAQ(A, prof.Q(np.asarray(t, dtype=float)), -1)
    return np.einsum("ab,tbc,c...->ta...", cinv, E, np.asarray(phi, dtype=complex))


def scaling_from_quadrature(V, nu, prof, rep=None, nt=64):
    """S = int_{-1}^{1} q(t) cos(A/2)^{-1} exp(-iA Q(t)) dt, A = (alpha.nu) V."""
    rep = rep or dirac_rep(len(nu))
    A = alpha_dot(rep, nu) @ np.asarray(V, dtype=complex)
    cinv = _cos_half_inverse(A)
    edges = [-1.0] + list(prof.breaks) + [1.0]
    total = np.zeros_like(A)
    for a, b in zip(edges[:-1], edges[1:]):
        t, w = gauss_legendre(nt, a, b)
        total += np.einsum("t,tab->ab", w * prof.q(t), _exp_iAQ(A, prof.Q(t), -1))
    return cinv @ total


# ---------------------------------------------------------------------------
# transfer matrices and jump matrix
# ---------------------------------------------------------------------------
def free_generator(z, m, xi, nu, tau, rep):
    """i(alpha.nu)(z - xi alpha.tau - m beta) of the transverse ODE."""
    an = alpha_dot(rep, nu)
    return 1j * an @ (z * rep.identity - xi * alpha_dot(rep, tau) - m * rep.beta)


def _default_frame(rep, nu, tau):
    if nu is None:
        nu = np.eye(rep.theta)[1]
    if tau is None:
        tau = np.eye(rep.theta)[0]
    return np.asarray(nu, dtype=float), np.asarray(tau, dtype=float)


def _rk4(gen, s0, s1, U0, gen_norm):
    """Propagate U' = gen(s) U from s0 to s1 with classical RK4."""
    length = s1 - s0
    if length == 0:
        return U0
    steps = max(1, int(np.ceil(abs(length) * gen_norm / RK4_STEP)))
    h = length / steps
    if abs(h) < MIN_STEP:
        raise FloatingPointError("RK4 step size underflow")
    U = U0
    s = s0
    for _ in range(steps):
        k1 = gen(s) @ U
        k2 = gen(s + h / 2) @ (U + (h / 2) * k1)
        k3 = gen(s + h / 2) @ (U + (h / 2) * k2)
        k4 = gen(s + h) @ (U + h * k3)
        U = U + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    return U


def layer_propagator(V, prof, z, m, xi, eps, rep=None, nu=None, tau=None, s_out=None):
    """Fundamental matrix U(s) of u' = G(s) u in the stretched variable s = t/eps.

    G(s) = i(alpha.nu)(eps(z - xi alpha.tau - m beta) - V q(s)), U(-1) = I.
    Returns U at the sorted points ``s_out`` in [-1, 1] (default: s = 1 only).
    """
    rep = rep or dirac_rep(2)
    nu, tau = _default_frame(rep, nu, tau)
    V = np.asarray(V, dtype=complex)
    G0 = eps * free_generator(z, m, xi, nu, tau, rep)
    AV = 1j * alpha_dot(rep, nu) @ V
    s_out = np.array([1.0]) if s_out is None else np.asarray(s_out, dtype=float)
    if np.any(np.diff(s_out) < 0) or np.any(np.abs(s_out) > 1):
        raise ValueError("s_out must be sorted inside [-1, 1]")

    def gen(s):
        return G0 - AV * prof.q(s)

    if prof.piecewise_constant and not prof.breaks:
        Gc = gen(0.0)
        return scipy.linalg.expm((s_out + 1)[:, None, None] * Gc[None])
    gnorm = np.linalg.norm(G0, 2) + np.linalg.norm(AV, 2) * prof.q_sup
    stops = sorted(set(prof.breaks) | set(s_out.tolist()))  # integrate panel by panel
    out = {}
    U = rep.identity.astype(complex)
    s = -1.0
    for stop in stops:
        U = _rk4(gen, s, stop, U, gnorm)
        s = stop
        out[stop] = U
    return np.stack([out[x] if x in out else U for x in s_out.tolist()])


def layer_transfer(V, prof, z=0.0, m=0.0, xi=0.0, eps=None, rep=None, nu=None, tau=None):
    """Transfer matrix M_eps with u(+eps) = M_eps u(-eps) across the layer."""
    eps = prof.eps if eps is None else eps
    if eps is None or eps <= 0:
        raise ValueError("layer half-width eps must be positive")
    return layer_propagator(V, prof, z, m, xi, eps, rep, nu, tau)[-1]


def jump_matrix(Vt, nu, rep=None, cond_max=1e12):
    """J = (i(alpha.nu) + Vt/2)^{-1} (i(alpha.nu) - Vt/2), trace_+ = J trace_-."""
    rep = rep or dirac_rep(len(nu))
    an = alpha_dot(rep, nu)
    Vt = np.asarray(Vt, dtype=complex)
    P = 1j * an + 0.5 * Vt
    if np.linalg.cond(P) > cond_max:
        raise SingularJumpError("i(alpha.nu) + Vt/2 is singular")
    return np.linalg.solve(P, 1j * an - 0.5 * Vt)


def renormalized_coefficient(V, nu, rep=None):
    """Vt = V S with the S of the renormalization."""
    rep = rep or dirac_rep(len(nu))
    V = np.asarray(V, dtype=complex)
    return V @ scaling_matrix(V, nu, rep).S
