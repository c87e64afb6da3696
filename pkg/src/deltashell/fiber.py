"""Fourier fibers of the straight-line problem and their resolvent gap.

Sigma is the line x_2 = 0 with nu = e_2, tau = e_1; the Omega_+ side is
t = x_2 < 0.  For longitudinal momentum xi the transverse operator is

    h(xi) = -i alpha_2 d/dt + xi alpha_1 + m beta + eps^{-1} V q(t/eps)

and its resolvent kernel is g(t, t') = phi_R(t) a(t')^T for t > t' and
phi_L(t) b(t')^T for t < t', with phi_R (phi_L) the solution decaying at
+inf (-inf) and [a^T; -b^T] = [phi_R, phi_L]^{-1} i alpha_2.  The shell
operator replaces the layer by the jump condition trace_+ = J trace_-.

The Hilbert-Schmidt norm of the kernel difference on [-R, R]^2 is computed
from the separable structure: on {t > t'} the difference is sum_k A_k(t)
B_k(t')^T, so |.|_F^2 = sum_kl (A_l^H A_k)(t) (B_l^H B_k)(t') and the t'
integral is a cumulative Gauss quadrature on panels that resolve the layer.
"""

from dataclasses import dataclass

import numpy as np

from .dirac import alpha_dot, dirac_rep
from .kernels import sqrt_branch
from .layer import free_generator, jump_matrix, layer_propagator, profile, renormalized_coefficient
from .quad import cumulative_matrix, gauss_legendre

NU = np.array([0.0, 1.0])
TAU = np.array([1.0, 0.0])
TAIL_TOL = 1e-6


class WeakDecayError(ValueError):
    pass


def truncation_radius(z, m, tail_tol=TAIL_TOL):
    """R with exp(-Im sqrt(z^2 - m^2) R) = tail_tol."""
    k = sqrt_branch(complex(z) ** 2 - m * m)
    if k.imag < 1e-3:
        raise WeakDecayError(f"decay rate Im k = {k.imag:.3g} is too small for truncation")
    return float(np.log(1 / tail_tol) / k.imag)


@dataclass(frozen=True, eq=False)
class FiberOperator:
    """Transverse resolvent data of one fiber; eps = 0 means the shell operator."""

    xi: float
    z: complex
    m: float
    V: np.ndarray
    eps: float
    prof: object = None
    Vt: np.ndarray = None
    rep: object = None

    def __post_init__(self):
        object.__setattr__(self, "rep", self.rep or dirac_rep(2))
        object.__setattr__(self, "V", np.asarray(self.V, dtype=complex))
        object.__setattr__(self, "prof", self.prof or profile("indicator"))
        G0 = free_generator(self.z, self.m, self.xi, NU, TAU, self.rep)
        kappa = np.sqrt(complex(self.xi**2 + self.m**2 - self.z**2))
        if kappa.real <= 0:
            raise WeakDecayError("z lies in the fiber essential spectrum")
        object.__setattr__(self, "_G0", G0)
        object.__setattr__(self, "_kappa", kappa)
        I = self.rep.identity
        Pp, Pm = 0.5 * (I + G0 / kappa), 0.5 * (I - G0 / kappa)
        object.__setattr__(self, "_P", (Pp, Pm))
        # decaying directions: column of largest norm of each spectral projector
        vR = Pm[:, np.argmax(np.linalg.norm(Pm, axis=0))]
        vL = Pp[:, np.argmax(np.linalg.norm(Pp, axis=0))]
        object.__setattr__(self, "_v", (vR / np.linalg.norm(vR), vL / np.linalg.norm(vL)))
        if self.eps == 0:
            Vt = self.V if self.Vt is None else np.asarray(self.Vt, dtype=complex)
            object.__setattr__(self, "Vt", Vt)
            object.__setattr__(self, "_M", np.linalg.inv(jump_matrix(Vt, NU, self.rep)))
        else:
            M = layer_propagator(self.V, self.prof, self.z, self.m, self.xi, self.eps, self.rep, NU, TAU)[-1]
            object.__setattr__(self, "_M", M)

    @property
    def transfer(self):
        """Map from the t = -eps (Omega_+) trace to the t = +eps trace."""
        return self._M

    def free_flow(self, t):
        """exp(G0 t) for an array of t."""
        Pp, Pm = self._P
        t = np.asarray(t, dtype=float)[..., None, None]
        return np.exp(self._kappa * t) * Pp + np.exp(-self._kappa * t) * Pm

    def solutions(self, t):
        """phi_R(t), phi_L(t) at sorted points t; arrays of shape (len(t), N)."""
        t = np.asarray(t, dtype=float)
        vR, vL = self._v
        e = self.eps
        M = self._M
        Minv = np.linalg.inv(M)
        phiR = np.empty((t.size, self.rep.n), dtype=complex)
        phiL = np.empty_like(phiR)
        right, left = t >= e, t <= -e
        mid = ~(right | left)
        phiR[right] = np.exp(-self._kappa * (t[right] - e))[:, None] * vR
        phiL[left] = np.exp(self._kappa * (t[left] + e))[:, None] * vL
        phiR[left] = np.einsum("tab,b->ta", self.free_flow(t[left] + e), Minv @ vR)
        phiL[right] = np.einsum("tab,b->ta", self.free_flow(t[right] - e), M @ vL)
        if mid.any():
            U = layer_propagator(self.V, self.prof, self.z, self.m, self.xi, e, self.rep, NU, TAU,
                                 s_out=t[mid] / e)
            phiR[mid] = np.einsum("tab,b->ta", U, Minv @ vR)
            phiL[mid] = np.einsum("tab,b->ta", U, vL)
        return phiR, phiL

    def factors(self, t):
        """phi_R, phi_L, a, b at points t (the separable pieces of the kernel)."""
        phiR, phiL = self.solutions(t)
        Phi = np.stack([phiR, phiL], axis=-1)
        X = np.linalg.solve(Phi, np.broadcast_to(1j * self.rep.alphas[1], Phi.shape))
        return phiR, phiL, X[:, 0, :], -X[:, 1, :]

    def kernel(self, t, tp):
        """Resolvent kernel g(t, t') for scalar t != t'."""
        phiR, phiL, a, b = self.factors(np.array(sorted([t, tp])))
        i, j = (1, 0) if t > tp else (0, 1)
        if t > tp:
            return np.outer(phiR[i], a[j])
        return np.outer(phiL[i], b[j])


def fiber_panels(eps, R, width=1.0):
    """Panel breakpoints resolving the layer and the shell at t = 0."""
    core = [-eps, 0.0, eps] if eps > 0 else [0.0]
    outer = np.arange(width, R, width)
    pts = sorted(set([-R, R] + core + list(outer) + list(-outer)))
    return np.array(pts)


def _panel_nodes(edges, p):
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        t, w = gauss_legendre(p, a, b)
        ts.append(t)
        ws.append(w)
    return np.concatenate(ts), np.concatenate(ws)


def _cumulative(values, edges, p, reverse=False):
    """Cumulative integral of panel-Gauss samples up to (or from) each node."""
    npan = len(edges) - 1
    h = 0.5 * np.diff(edges)
    Qm = cumulative_matrix(p)
    _, w0 = gauss_legendre(p)
    v = values.reshape((npan, p) + values.shape[1:])
    part = np.einsum("ij,pj...->pi...", Qm, v) * h.reshape((-1, 1) + (1,) * (values.ndim - 1))
    tot = np.einsum("j,pj...->p...", w0, v) * h.reshape((-1,) + (1,) * (values.ndim - 1))
    zero = np.zeros((1,) + tot.shape[1:], dtype=tot.dtype)
    if reverse:
        # accumulate from the right so that large far-left values never cancel
        after = np.concatenate([np.cumsum(tot[::-1], axis=0)[::-1][1:], zero])
        return ((tot[:, None] - part) + after[:, None]).reshape(values.shape)
    before = np.concatenate([zero, np.cumsum(tot, axis=0)[:-1]])
    return (part + before[:, None]).reshape(values.shape)


def kernel_difference_hs(F1, F2, R, p=16, width=None):
    """Hilbert-Schmidt norm of g_1 - g_2 on [-R, R]^2.

    Panels have width about 1/Re(kappa) so that the exponential factors of
    the separable pieces vary by O(1) within a panel.
    """
    width = width or min(1.0, 1.0 / F1._kappa.real)
    eps = max(F1.eps, F2.eps)
    edges = fiber_panels(eps, R, width)
    if F1.eps != F2.eps and min(F1.eps, F2.eps) > 0:
        edges = np.array(sorted(set(edges) | set(fiber_panels(min(F1.eps, F2.eps), R, width))))
    t, w = _panel_nodes(edges, p)
    r1, l1, a1, b1 = F1.factors(t)
    r2, l2, a2, b2 = F2.factors(t)
    total = 0.0
    for A, B, rev in (((r1, -r2), (a1, a2), False), ((l1, -l2), (b1, b2), True)):
        Aa = np.stack(A, axis=1)  # (nt, 2, N)
        Bb = np.stack(B, axis=1)
        GA = np.einsum("tla,tka->tkl", Aa.conj(), Aa)
        GB = np.einsum("tla,tka->tkl", Bb.conj(), Bb)
        cum = _cumulative(GB, edges, p, reverse=rev)
        total += np.real(np.sum(w * np.einsum("tkl,tkl->t", GA, cum)))
    return float(np.sqrt(max(total, 0.0)))


def fiber_resolvent_gap(xi, eps, z, m, V, R=None, p=16, prof=None, mode="renormalized", rep=None,
                        refine_tol=0.01, p_max=64):
    """HS norm of the squeezed-minus-shell fiber resolvent difference on [-R, R]^2.

    ``mode`` selects the shell coefficient: 'renormalized' uses Vt = V S,
    'naive' uses Vt = V.  The panel order is doubled from ``p`` until the
    estimate changes by less than ``refine_tol`` (relative).
    """
    rep = rep or dirac_rep(2)
    V = np.asarray(V, dtype=complex)
    if mode not in ("renormalized", "naive"):
        raise ValueError("mode must be 'renormalized' or 'naive'")
    R = R if R is not None else truncation_radius(z, m)
    prof = prof or profile("indicator")
    Vt = renormalized_coefficient(V, NU, rep) if mode == "renormalized" else V
    Fe = FiberOperator(xi, z, m, V, eps, prof, rep=rep)
    F0 = FiberOperator(xi, z, m, V, 0.0, prof, Vt=Vt, rep=rep)
    gap = kernel_difference_hs(Fe, F0, R, p)
    while p < p_max:
        p *= 2
        new = kernel_difference_hs(Fe, F0, R, p)
        done = abs(new - gap) <= refine_tol * max(abs(new), 1e-300)
        gap = new
        if done:
            break
    return gap


def max_fiber_gap(xis, eps, z, m, V, **kw):
    gaps = [fiber_resolvent_gap(x, eps, z, m, V, **kw) for x in xis]
    return float(max(gaps)), gaps


def line_cauchy_symbol(xi, z, m, rep=None):
    """Fiber symbol of C_z on the line: mean of the free kernel traces at t = 0."""
    F = FiberOperator(xi, z, m, np.zeros((2, 2)), 0.0, Vt=np.zeros((2, 2)), rep=rep)
    h = 1e-13
    return 0.5 * (F.kernel(h, 0.0) + F.kernel(-h, 0.0))


def line_b0_norm(z, m, xis, nt=16, rep=None):
    """sup over the xi-grid of the L^2 norm of the fiber B_0 = T (alpha.nu) + J C J^*."""
    from .quad import sign_kernel_matrix

    rep = rep or dirac_rep(2)
    _, wt = gauss_legendre(nt)
    Tm = sign_kernel_matrix(nt)
    an = alpha_dot(rep, NU)
    sw = np.sqrt(np.repeat(wt, rep.n))
    best = 0.0
    for xi in xis:
        B = np.kron(Tm, an) + np.kron(np.outer(np.ones(nt), wt), line_cauchy_symbol(xi, z, m, rep))
        best = max(best, float(np.linalg.norm(sw[:, None] * B / sw[None, :], 2)))
    return best
