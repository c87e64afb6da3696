"""Boundary integral operators of the 2D Dirac shell problem on closed curves.

Discretization
--------------
Densities live on the periodic trapezoid nodes s_j = 2 pi j / n and are
stored node-major as arrays of shape (n, N); flattened operators act on
vectors indexed by ``j * N + a``.

The boundary kernel G_z(gamma(s) - gamma(sigma)) |gamma'(sigma)| is split as

    L1 log(4 sin^2((s - sigma)/2)) + L2 + (i/2pi) alpha.(x - y)|gamma'|/|x - y|^2

with L1, L2 smooth.  The logarithmic part uses Kress product weights and the
Cauchy part is written as -(i/2pi) alpha.T(s) (1/2) cot((sigma - s)/2) plus a
smooth remainder; the principal value of the cotangent term is taken with
the spectrally exact odd-offset rule on the periodic grid (the symmetric
cancellation of the punctured trapezoid, corrected for its diagonal term).

One-sided traces are obtained independently by evaluating the single layer
at iota(s, -+ delta_k) with an upsampled trapezoid rule and extrapolating
delta -> 0.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .bessel import EULER_GAMMA, bessel_i, bessel_k012
from .dirac import alpha_dot, dirac_rep
from .geometry import normal, tangent, tubular_map
from .kernels import KernelParams, green_kernel
from .matfun import CoefficientField
from .quad import lagrange_weights_at_zero, trig_resample


class SingularShellError(np.linalg.LinAlgError):
    def __init__(self, msg, sigma_min):
        super().__init__(msg)
        self.sigma_min = sigma_min


# ---------------------------------------------------------------------------
# geometry of the discretization
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class BoundaryGeometry:
    curve: object
    n: int
    s: np.ndarray
    points: np.ndarray
    d2: np.ndarray
    speed: np.ndarray
    T: np.ndarray
    nu: np.ndarray
    weights: np.ndarray
    d: np.ndarray  # x_i - y_j
    r: np.ndarray  # |x_i - y_j|, diagonal set to 1
    logsin: np.ndarray  # log(4 sin^2((s_i - s_j)/2)), diagonal 0
    kress: np.ndarray  # Kress log weights R_ij
    pv: np.ndarray  # odd-offset principal-value weights for (1/2)cot((s_j - s_i)/2)
    cauchy_rem: np.ndarray  # smooth remainder D_ij


def _kress_weights(n):
    if n % 2:
        raise ValueError("the Kress rule needs an even number of nodes")
    N = n // 2
    j = np.arange(n)
    theta = 2 * np.pi * j / n
    m = np.arange(1, N)
    R = -(2 * np.pi / N) * (np.cos(np.outer(theta, m)) / m).sum(1) - (np.pi / N**2) * np.cos(N * theta)
    idx = (j[:, None] - j[None, :]) % n
    return R[idx]


@lru_cache(maxsize=16)
def boundary_geometry(curve, n):
    if not curve.closed:
        raise ValueError("boundary integral operators need a closed curve")
    s = 2 * np.pi * np.arange(n) / n
    X, d1, d2 = curve.derivatives(s)
    speed = np.linalg.norm(d1, axis=-1)
    T = tangent(curve, s)
    nu = normal(curve, s)
    w = (2 * np.pi / n) * speed
    d = X[:, None, :] - X[None, :, :]
    r = np.linalg.norm(d, axis=-1)
    np.fill_diagonal(r, 1.0)
    diff = s[:, None] - s[None, :]
    offd = ~np.eye(n, dtype=bool)
    logsin = np.zeros((n, n))
    logsin[offd] = np.log(4 * np.sin(diff[offd] / 2) ** 2)
    half_cot = np.zeros((n, n))
    half_cot[offd] = 0.5 / np.tan(-diff[offd] / 2)  # (1/2)cot((s_j - s_i)/2)
    odd = ((np.arange(n)[:, None] - np.arange(n)[None, :]) % 2) == 1
    pv = np.where(odd, (4 * np.pi / n) * half_cot, 0.0)
    D = d * speed[None, :, None] / (r**2)[..., None] + T[:, None, :] * half_cot[..., None]
    idx = np.arange(n)
    D[idx, idx] = -d2 / (2 * speed[:, None])
    if curve.flip:
        # nu points inwards; the Cauchy kernel is orientation free, nothing changes
        pass
    geo = BoundaryGeometry(curve, n, s, X, d2, speed, T, nu, w, d, r, logsin, _kress_weights(n), pv, D)
    return geo


# ---------------------------------------------------------------------------
# kernel values cached per node pair
# ---------------------------------------------------------------------------
_BESSEL_CACHE = {}
_BESSEL_CACHE_MAX = 8


def _pair_bessel(geo, mu):
    """K0, K1, I0, I1 of mu r_ij on the upper triangle, mirrored (r_ij = r_ji)."""
    key = (id(geo), geo.n, complex(mu))
    hit = _BESSEL_CACHE.get(key)
    if hit is not None and hit[0] is geo:
        return hit[1]
    n = geo.n
    iu = np.triu_indices(n, 1)
    w = mu * geo.r[iu]
    K0, K1, _ = bessel_k012(w, want_k2=False)
    I0, I1 = bessel_i(0, w), bessel_i(1, w)
    out = []
    for v in (K0, K1, I0, I1):
        a = np.zeros((n, n), dtype=complex)
        a[iu] = v
        a = a + a.T
        out.append(a)
    if len(_BESSEL_CACHE) >= _BESSEL_CACHE_MAX:
        _BESSEL_CACHE.pop(next(iter(_BESSEL_CACHE)))
    _BESSEL_CACHE[key] = (geo, tuple(out))
    return tuple(out)


def clear_kernel_cache():
    _BESSEL_CACHE.clear()


# ---------------------------------------------------------------------------
# C_z
# ---------------------------------------------------------------------------
def cauchy_blocks(curve, params, n, rep=None):
    """Discrete C_z as an (n, n, N, N) block array."""
    rep = rep or dirac_rep(2)
    if params.theta != 2:
        raise ValueError("boundary assembly is two-dimensional")
    geo = boundary_geometry(curve, n)
    k, mu = params.k, params.mu
    K0, K1, I0, I1 = _pair_bessel(geo, mu)
    r = geo.r
    M = params.m * rep.beta + params.z * rep.identity
    ad = alpha_dot(rep, geo.d / r[..., None])  # alpha.(x-y)/|x-y|
    sp_j = geo.speed[None, :, None, None]
    c1 = (k / (2 * np.pi)) * I1
    L1 = 0.5 * (c1[..., None, None] * ad - (I0 / (2 * np.pi))[..., None, None] * M) * sp_j
    G = ((k / (2 * np.pi)) * (K1 - 1 / (mu * r)))[..., None, None] * ad + (K0 / (2 * np.pi))[..., None, None] * M
    L2 = G * sp_j - L1 * geo.logsin[..., None, None]
    idx = np.arange(n)
    sp = geo.speed
    L1[idx, idx] = -M[None] * (sp / (4 * np.pi))[:, None, None]
    L2[idx, idx] = M[None] * ((-EULER_GAMMA - np.log(mu / 2) - np.log(sp)) * sp / (2 * np.pi))[:, None, None]
    C = L1 * geo.kress[..., None, None] + (2 * np.pi / n) * L2
    C += (2 * np.pi / n) * (1j / (2 * np.pi)) * alpha_dot(rep, geo.cauchy_rem)
    C += (1j / (2 * np.pi)) * (-alpha_dot(rep, geo.T))[:, None] * geo.pv[..., None, None]
    return C


def blocks_to_matrix(B):
    n, _, N, _ = B.shape
    return B.transpose(0, 2, 1, 3).reshape(n * N, n * N)


def assemble_cauchy(curve, params, n, rep=None):
    """Discrete C_z (nN x nN, node-major) on the periodic trapezoid grid."""
    return blocks_to_matrix(cauchy_blocks(curve, params, n, rep))


def normal_matrix(geo, rep):
    """Block diagonal alpha.nu as an (nN x nN) matrix."""
    return scipy.linalg.block_diag(*alpha_dot(rep, geo.nu))


# ---------------------------------------------------------------------------
# single layer off the boundary and one-sided traces
# ---------------------------------------------------------------------------
def _fine_count(geo, points):
    x = np.asarray(points, dtype=float).reshape(-1, 2)
    dist = np.min(np.linalg.norm(x[:, None] - geo.points[None], axis=-1))
    # parameter distance of the nearest complex singularity ~ dist / max speed
    need = 24 * geo.speed.max() / max(dist, 1e-12)
    nf = geo.n
    while nf < need and nf < 2**16:
        nf *= 2
    return nf


@dataclass(frozen=True, eq=False)
class SingleLayer:
    """Single-layer potential Phi_z for densities sampled on n boundary nodes."""

    curve: object
    params: KernelParams
    n: int
    rep: object = field(default_factory=lambda: dirac_rep(2))

    @property
    def geometry(self):
        return boundary_geometry(self.curve, self.n)

    def field(self, points, phi, n_fine=None, chunk=2**20):
        """Phi_z phi at points off the boundary (trig-upsampled trapezoid rule).

        ``phi`` has shape (n, N) or (n, N, K) for a batch of K densities.
        """
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        x = points.reshape(-1, 2)
        phi = np.asarray(phi, dtype=complex)
        batch = phi.shape[2:] if phi.ndim == 3 else ()
        phi = phi.reshape((self.n, self.rep.n) + batch)
        nf = n_fine or _fine_count(self.geometry, x)
        fine = boundary_geometry_light(self.curve, nf)
        pf = trig_resample(phi, nf) * fine["weights"].reshape((-1,) + (1,) * (phi.ndim - 1))
        out = _field_2d(self.params, self.rep, x, fine["points"], pf, chunk)
        return out.reshape(shape + (self.rep.n,) + batch)

    def boundary_to_field(self, points):
        """Dense (P N x n N) matrix of Phi_z at off-boundary points (base grid)."""
        geo = self.geometry
        x = np.asarray(points, dtype=float).reshape(-1, 2)
        G = green_kernel(self.params, x[:, None] - geo.points[None], self.rep) * geo.weights[None, :, None, None]
        return blocks_to_matrix_rect(G)


def _field_2d(params, rep, x, y, wphi, chunk=2**20):
    """sum_j G_z(x_p - y_j) wphi_j for the 2D kernel, via matrix products.

    ``wphi`` has shape (ny, 2) or (ny, 2, K).
    """
    k, mu = params.k, params.mu
    M = params.m * rep.beta + params.z * rep.identity
    out = np.zeros((len(x),) + wphi.shape[1:], dtype=complex)
    step = max(1, chunk // len(y))
    for a in range(0, len(x), step):
        d = x[a:a + step, None, :] - y[None]
        r = np.hypot(d[..., 0], d[..., 1])
        if np.any(r < 1e-13):
            raise ValueError("field point on the boundary; use the C_z path")
        K0, K1, _ = bessel_k012(mu * r, want_k2=False)
        e = K1 / r
        # alpha.d = [[0, dx - i dy], [dx + i dy, 0]]
        em = e * (d[..., 0] - 1j * d[..., 1])
        ep = e * (d[..., 0] + 1j * d[..., 1])
        s0 = np.tensordot(K0, wphi, axes=(1, 0))
        out[a:a + step, 0] = (k / (2 * np.pi)) * np.tensordot(em, wphi[:, 1], axes=(1, 0))
        out[a:a + step, 1] = (k / (2 * np.pi)) * np.tensordot(ep, wphi[:, 0], axes=(1, 0))
        out[a:a + step] += np.einsum("ab,pb...->pa...", M, s0) / (2 * np.pi)
    return out


def blocks_to_matrix_rect(B):
    p, n, N, _ = B.shape
    return B.transpose(0, 2, 1, 3).reshape(p * N, n * N)


@lru_cache(maxsize=8)
def _light(curve, n):
    s = 2 * np.pi * np.arange(n) / n
    X, d1, _ = curve.derivatives(s)
    return {"points": X, "weights": (2 * np.pi / n) * np.linalg.norm(d1, axis=-1)}


def boundary_geometry_light(curve, n):
    return _light(curve, n)


def default_deltas(geo, order=8, scale=0.25):
    h = geo.weights.max()
    return scale * h * np.arange(1, order + 1)


def one_sided_trace(layer, phi, side, deltas=None, n_fine=None):
    """Trace of Phi_z phi from Omega_+ (side='+') or Omega_- (side='-').

    Evaluated at iota(s_i, -+delta_k) and extrapolated polynomially to
    delta = 0.
    """
    geo = layer.geometry
    deltas = default_deltas(geo) if deltas is None else np.asarray(deltas, dtype=float)
    sgn = {"+": -1.0, "-": 1.0}[side]
    w = lagrange_weights_at_zero(deltas)
    nf = n_fine or _fine_count(geo, tubular_map(geo.curve, geo.s, np.full(geo.n, deltas.min())))
    phi = np.asarray(phi, dtype=complex)
    out = np.zeros((geo.n, layer.rep.n) + phi.shape[2:], dtype=complex)
    for wk, dk in zip(w, deltas):
        pts = tubular_map(geo.curve, geo.s, np.full(geo.n, sgn * dk))
        out += wk * layer.field(pts, phi, n_fine=nf)
    return out


def one_sided_cauchy(layer, phi, side, deltas=None):
    """C_z phi = +-(i/2)(alpha.nu) phi + t^{+-} Phi_z phi."""
    geo = layer.geometry
    an = alpha_dot(layer.rep, geo.nu)
    sgn = 1.0 if side == "+" else -1.0
    phi = np.asarray(phi, dtype=complex)
    phi = phi.reshape((geo.n, layer.rep.n) + phi.shape[2:])
    return sgn * 0.5j * np.einsum("iab,ib...->ia...", an, phi) + one_sided_trace(layer, phi, side, deltas)


# ---------------------------------------------------------------------------
# shell system and solves
# ---------------------------------------------------------------------------
def coefficient_blocks(Vt, n, N):
    if isinstance(Vt, CoefficientField):
        return Vt.sampled(n)
    a = np.asarray(Vt, dtype=complex)
    if a.ndim == 0:
        return np.broadcast_to(a * np.eye(N), (n, N, N)).copy()
    if a.shape == (N, N):
        return np.broadcast_to(a, (n, N, N)).copy()
    if a.shape == (n, N, N):
        return a
    raise ValueError(f"coefficient shape {a.shape} incompatible with n={n}, N={N}")


@dataclass(eq=False)
class ShellSystem:
    """Discrete boundary operators of the shell problem for one (curve, z)."""

    curve: object
    params: KernelParams
    n: int
    rep: object = None
    C_matrix: np.ndarray = None
    _lu: tuple = field(default=None, repr=False)
    _vt: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.rep = self.rep or dirac_rep(2)
        if self.C_matrix is None:
            self.C_matrix = assemble_cauchy(self.curve, self.params, self.n, self.rep)

    @property
    def geometry(self):
        return boundary_geometry(self.curve, self.n)

    @property
    def nodes(self):
        return self.geometry.s

    @property
    def weights(self):
        return self.geometry.weights

    @property
    def layer(self):
        return SingleLayer(self.curve, self.params, self.n, self.rep)

    def system_matrix(self, Vt):
        """I + C_z Vt with Vt block diagonal."""
        N = self.rep.n
        V = coefficient_blocks(Vt, self.n, N)
        Cb = self.C_matrix.reshape(self.n, N, self.n, N)
        CV = np.einsum("iajc,jcb->iajb", Cb, V).reshape(self.n * N, self.n * N)
        return np.eye(self.n * N) + CV

    def factor(self, Vt):
        V = coefficient_blocks(Vt, self.n, self.rep.n)
        if self._vt is not None and self._vt.shape == V.shape and np.array_equal(self._vt, V):
            return self._lu
        A = self.system_matrix(V)
        lu = scipy.linalg.lu_factor(A, check_finite=False)
        self._lu, self._vt = (lu, A), V.copy()
        return self._lu


def smallest_singular_value(A, lu=None, iters=30):
    """sigma_min(A) by inverse iteration on A^H A using an LU factorization."""
    lu = lu if lu is not None else scipy.linalg.lu_factor(A, check_finite=False)
    x = np.random.default_rng(12345).normal(size=A.shape[0]) + 0j
    x /= np.linalg.norm(x)
    sig = np.inf
    for _ in range(iters):
        y = scipy.linalg.lu_solve(lu, x, trans=2, check_finite=False)
        y = scipy.linalg.lu_solve(lu, y, check_finite=False)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0:
            return 0.0
        new = 1 / np.sqrt(ny)
        x = y / ny
        if abs(new - sig) <= 1e-12 * new:
            sig = new
            break
        sig = new
    return float(np.linalg.norm(A @ x))


def solve_shell(system, Vt, phi, rtol=1e-10):
    """Solve (I + C_z Vt) psi = phi; raises SingularShellError near eigenvalues."""
    N = system.rep.n
    lu, A = system.factor(Vt)
    b = np.asarray(phi, dtype=complex).reshape(-1)
    psi = scipy.linalg.lu_solve(lu, b, check_finite=False)
    res = np.linalg.norm(A @ psi - b)
    if not np.all(np.isfinite(psi)) or res > rtol * max(np.linalg.norm(b), 1e-300):
        smin = smallest_singular_value(A, lu)
        raise SingularShellError(
            f"I + C_z Vt is numerically singular (sigma_min = {smin:.3e}, residual {res:.3e})", smin)
    return psi.reshape(system.n, N)


# ---------------------------------------------------------------------------
# free resolvent by FFT convolution and the Krein formula
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class FreeResolvent:
    """R_z = (H_0 - z)^{-1} applied on a periodic box [-L, L)^2 (spectral)."""

    params: KernelParams
    L: float = 24.0
    npts: int = 256
    rep: object = field(default_factory=lambda: dirac_rep(2))

    @property
    def grid(self):
        x = -self.L + 2 * self.L * np.arange(self.npts) / self.npts
        return np.meshgrid(x, x, indexing="ij")

    @property
    def freqs(self):
        return 2 * np.pi * np.fft.fftfreq(self.npts, d=2 * self.L / self.npts)

    def symbol(self):
        k = self.freqs
        K1, K2 = np.meshgrid(k, k, indexing="ij")
        z, m = self.params.z, self.params.m
        num = (K1[..., None, None] * self.rep.alphas[0] + K2[..., None, None] * self.rep.alphas[1]
               + m * self.rep.beta + z * self.rep.identity)
        return num / (K1**2 + K2**2 + m * m - z * z)[..., None, None]

    def coefficients(self, u):
        """Fourier coefficients of R_z u for u sampled on the grid, shape (npts, npts, N)."""
        uh = np.fft.fft2(np.asarray(u, dtype=complex), axes=(0, 1))
        return np.einsum("xyab,xyb->xya", self.symbol(), uh) / self.npts**2

    def evaluate(self, coef, points):
        """Trigonometric interpolant with coefficients ``coef`` at arbitrary points."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        k = self.freqs
        # coefficients refer to the grid starting at -L
        Ex = np.exp(1j * np.outer(pts[:, 0] + self.L, k))
        Ey = np.exp(1j * np.outer(pts[:, 1] + self.L, k))
        tmp = np.einsum("px,xya->pya", Ex, coef)
        out = np.einsum("pya,py->pa", tmp, Ey)
        return out.reshape(np.shape(points)[:-1] + (self.rep.n,))

    def inner(self, u, v):
        """L^2(box) pairing <u, v> = int u . conj(v) (trapezoid)."""
        h = 2 * self.L / self.npts
        return np.sum(np.asarray(u) * np.conj(v)) * h * h


def gaussian_spinor(res, center, width, spinor):
    X, Y = res.grid
    g = np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2 * width**2))
    return g[..., None] * np.asarray(spinor, dtype=complex)


def resolvent_apply(system, Vt, u, points, free=None):
    """(H_Vt - z)^{-1} u at off-boundary points via the Krein formula.

    R_z u - Phi_z Vt (I + C_z Vt)^{-1} t_Sigma R_z u, with R_z applied by FFT
    on the periodic box of ``free`` and u sampled on that box grid.
    """
    free = free or FreeResolvent(system.params, rep=system.rep)
    pts = np.asarray(points, dtype=float)
    geo = system.geometry
    if np.min(np.linalg.norm(pts.reshape(-1, 2)[:, None] - geo.points[None], axis=-1)) < 1e-12:
        raise ValueError("evaluation point on the boundary")
    coef = free.coefficients(u)
    out = free.evaluate(coef, pts)
    V = coefficient_blocks(Vt, system.n, system.rep.n)
    if not np.any(V):
        return out
    g = free.evaluate(coef, geo.points)
    psi = solve_shell(system, V, g)
    dens = np.einsum("iab,ib->ia", V, psi)
    return out - system.layer.field(pts, dens)


def krein_density(system, Vt, u, free=None):
    """Boundary density Vt (I + C_z Vt)^{-1} t_Sigma R_z u and the trace t_Sigma R_z u."""
    free = free or FreeResolvent(system.params, rep=system.rep)
    coef = free.coefficients(u)
    g = free.evaluate(coef, system.geometry.points)
    V = coefficient_blocks(Vt, system.n, system.rep.n)
    psi = solve_shell(system, V, g)
    return np.einsum("iab,ib->ia", V, psi), g, coef


def resolvent_pairing(system, Vt, u, v, free=None):
    """<(H_Vt - z)^{-1} u, v>_{L^2(R^2)} reduced to the box and the boundary."""
    free = free or FreeResolvent(system.params, rep=system.rep)
    dens, _, coef_u = krein_density(system, Vt, u, free)
    free_c = FreeResolvent(system.params.conj(), free.L, free.npts, free.rep)
    ru = np.fft.ifft2(coef_u * free.npts**2, axes=(0, 1))
    coef_v = free_c.coefficients(v)
    h = free_c.evaluate(coef_v, system.geometry.points)
    boundary = np.sum(dens * np.conj(h) * system.weights[:, None])
    return free.inner(ru, v) - boundary


def transmission_residual(system, Vt, u, free=None, deltas=None):
    """Residual of i(alpha.nu)(u_+ - u_-) + (Vt/2)(u_+ + u_-) for the Krein solution."""
    free = free or FreeResolvent(system.params, rep=system.rep)
    geo = system.geometry
    dens, g, coef = krein_density(system, Vt, u, free)
    layer = system.layer
    tp = g - one_sided_trace(layer, dens, "+", deltas)
    tm = g - one_sided_trace(layer, dens, "-", deltas)
    an = alpha_dot(system.rep, geo.nu)
    V = coefficient_blocks(Vt, system.n, system.rep.n)
    res = 1j * np.einsum("iab,ib->ia", an, tp - tm) + 0.5 * np.einsum("iab,ib->ia", V, tp + tm)
    return float(np.max(np.abs(res)) / max(np.max(np.abs(g)), 1e-300))


# ---------------------------------------------------------------------------
# gap eigenvalues
# ---------------------------------------------------------------------------
def _min_eig(A, lu):
    """Eigenvalue of A closest to zero (inverse iteration)."""
    x = np.random.default_rng(7).normal(size=A.shape[0]) + 0j
    lam = None
    for _ in range(60):
        y = scipy.linalg.lu_solve(lu, x, check_finite=False)
        x_new = y / np.linalg.norm(y)
        new = np.vdot(x_new, A @ x_new)
        x = x_new
        if lam is not None and abs(new - lam) < 1e-14 * max(1.0, abs(new)):
            return new
        lam = new
    return lam


def eigenvalue_search(curve, m, Vt, interval=None, n=512, n_scan=128, n_grid=81,
                      tol=1e-8, ztol=1e-10, rep=None):
    """Gap eigenvalues of H_Vt on ``curve``: zeros of I + C_z Vt for real z.

    The smallest singular value is scanned on a coarse grid with ``n_scan``
    nodes; each local minimum is refined at ``n`` nodes by root finding on
    the real part of the eigenvalue of I + C_z Vt nearest zero, and accepted
    when sigma_min < tol * ||I + C_z Vt||.
    """
    import scipy.optimize

    rep = rep or dirac_rep(2)
    m = abs(float(m))
    lo, hi = interval if interval is not None else (-m + 1e-3, m - 1e-3)
    if not (-m < lo < hi < m):
        raise ValueError("interval must lie inside the gap (-|m|, |m|)")
    sampled = isinstance(Vt, CoefficientField) and not Vt.constant or np.ndim(Vt) == 3
    if isinstance(Vt, CoefficientField) and Vt.constant:
        Vt = Vt.values[0]
    if not np.any(Vt.values if isinstance(Vt, CoefficientField) else Vt):
        return []
    # a sampled coefficient fixes the node count; constants allow a cheap scan
    ns = n if sampled else min(n, n_scan)

    def mats(z, nn):
        A = ShellSystem(curve, KernelParams(z, m), nn, rep).system_matrix(Vt)
        return A, scipy.linalg.lu_factor(A, check_finite=False)

    zs = np.linspace(lo, hi, n_grid)
    sig = np.array([smallest_singular_value(*mats(z, ns)) for z in zs])
    cands = [i for i in range(1, n_grid - 1) if sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1]]
    found = []
    for i in cands:
        a, b = zs[i - 1], zs[i + 1]

        def f(z):
            A, lu = mats(z, n)
            return _min_eig(A, lu).real

        fa, fb = f(a), f(b)
        if np.sign(fa) != np.sign(fb):
            z0 = scipy.optimize.brentq(f, a, b, xtol=ztol, rtol=4 * np.finfo(float).eps)
        else:
            res = scipy.optimize.minimize_scalar(lambda z: smallest_singular_value(*mats(z, n)),
                                                 bounds=(a, b), method="bounded",
                                                 options={"xatol": ztol})
            z0 = float(res.x)
        A, lu = mats(z0, n)
        smin = smallest_singular_value(A, lu)
        if smin < tol * np.linalg.norm(A, 2):
            found.append(float(z0))
    return sorted(found)


# ---------------------------------------------------------------------------
# B_0 on L^2((-1,1); L^2(Sigma)) and its norms
# ---------------------------------------------------------------------------
def b0_assemble_and_norm(curve, params, q_sup=None, V=None, n=64, nt=16, rep=None):
    """Discrete B_0(z) = T (alpha.nu) + J C_z J^* and norm estimates.

    Returns a dict with the matrix, its L^2 norm, the H^{1/2}-weighted norm
    (Fourier weights (1 + k^2)^{1/4} in the angular index), the norm of the
    sign-kernel part alone and, when V and ||q||_inf are given, the
    smallness diagnostic ||V|| ||q||_inf * ||B_0||.
    """
    from .quad import gauss_legendre, sign_kernel_matrix
    import scipy.sparse.linalg as spla

    rep = rep or dirac_rep(2)
    N = rep.n
    geo = boundary_geometry(curve, n)
    C = assemble_cauchy(curve, params, n, rep)
    AN = normal_matrix(geo, rep)
    _, wt = gauss_legendre(nt)
    Tm = sign_kernel_matrix(nt)
    B = np.kron(Tm, AN) + np.kron(np.outer(np.ones(nt), wt), C)

    # L^2 weights: sqrt(w_t) x sqrt(arclength weights)
    ws = np.sqrt(np.kron(wt, np.repeat(geo.weights, N)))
    BL2 = ws[:, None] * B / ws[None, :]
    # H^{1/2}: unitary DFT along the nodes per (t, component), then Fourier weights
    F = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    kk = np.fft.fftfreq(n, 1.0 / n)
    Dk = (1 + kk**2) ** 0.25
    sw = np.sqrt(geo.weights)
    U1 = np.kron(np.diag(np.sqrt(wt)), np.kron((Dk[:, None] * F) * sw[None, :], np.eye(N)))
    U1inv = np.kron(np.diag(1 / np.sqrt(wt)), np.kron((F.conj().T / Dk[None, :]) / sw[:, None], np.eye(N)))
    BH = U1 @ B @ U1inv

    def top_sv(X):
        try:
            return float(spla.svds(X, k=1, return_singular_vectors=False, tol=1e-10)[0])
        except Exception:  # pragma: no cover - fallback on ARPACK failure
            return float(np.linalg.norm(X, 2))

    TL2 = np.sqrt(wt)[:, None] * Tm / np.sqrt(wt)[None, :]
    out = {
        "matrix": B,
        "norm_l2": top_sv(BL2),
        "norm_h12": top_sv(BH),
        "sign_kernel_norm": float(np.linalg.norm(TL2, 2)),
    }
    if V is not None and q_sup is not None:
        vn = float(np.linalg.norm(np.asarray(V, dtype=complex), 2))
        out["smallness"] = {
            "V_norm_times_q_sup": vn * q_sup,
            "inverse_B0_h12": 1.0 / out["norm_h12"],
            "inverse_B0_l2": 1.0 / out["norm_l2"],
            "neumann_proxy_ok": bool(vn * q_sup * out["norm_l2"] < 1.0),
        }
    return out
