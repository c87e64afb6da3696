"""Closed and graph curves in the plane, tubular coordinates, quadrature.

Orientation conventions
-----------------------
``nu`` is the unit normal pointing out of Omega_+.  For a closed curve
parametrized counter-clockwise with Omega_+ the bounded interior,
``nu = (y', -x') / |gamma'|``.  For a graph (s, zeta(s)) with Omega_+ below
the graph, ``nu = (-zeta', 1) / sqrt(1 + zeta'^2)``.  The ``flip`` flag
exchanges the two sides.

The Weingarten map is defined by ``W dx = -d nu`` along the curve; on the
one-dimensional tangent space it is multiplication by the signed curvature
kappa, so that ``d nu / d(arclength) = -kappa T``.  With this convention a
counter-clockwise circle of radius R with Omega_+ the disk has
``kappa = -1/R`` and the tubular Jacobian ``det(I - tW) = 1 - t kappa = 1 + t/R``
is the exact area factor of the map ``(s, t) -> gamma(s) + t nu(s)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

CLOSED = "closed"
GRAPH = "graph"


@dataclass(frozen=True)
class Curve:
    """A C^2 curve given by a named family and its parameters.

    kind: 'closed' (s in [0, 2 pi), periodic) or 'graph' (s in R).
    family: 'circle' (radius,), 'ellipse' (a, b), 'polar' (r0, (c_k, s_k) ...),
    or for graphs 'poly' (coefficients of zeta, lowest order first) and
    'line' ().  ``window`` bounds the sampled parameter range of graphs.
    """

    kind: str
    family: str
    params: tuple = ()
    flip: bool = False
    center: tuple = (0.0, 0.0)
    window: float = 10.0

    # ---- parametrization -------------------------------------------------
    def derivatives(self, s):
        """Return gamma, gamma', gamma'' at ``s`` (arrays of shape (..., 2))."""
        s = np.asarray(s, dtype=float)
        f = self.family
        if f == "circle":
            (R,) = self.params
            c, sn = np.cos(s), np.sin(s)
            g = R * np.stack([c, sn], -1)
            d1 = R * np.stack([-sn, c], -1)
            d2 = -g
        elif f == "ellipse":
            a, b = self.params
            c, sn = np.cos(s), np.sin(s)
            g = np.stack([a * c, b * sn], -1)
            d1 = np.stack([-a * sn, b * c], -1)
            d2 = -g
        elif f == "polar":
            # r(s) = r0 + sum_k (c_k cos ks + s_k sin ks)
            r0, *modes = self.params
            r, r1, r2 = r0 + 0 * s, 0 * s, 0 * s
            for k, (ck, sk) in enumerate(modes, start=1):
                c, sn = np.cos(k * s), np.sin(k * s)
                r = r + ck * c + sk * sn
                r1 = r1 + k * (-ck * sn + sk * c)
                r2 = r2 - k * k * (ck * c + sk * sn)
            c, sn = np.cos(s), np.sin(s)
            g = np.stack([r * c, r * sn], -1)
            d1 = np.stack([r1 * c - r * sn, r1 * sn + r * c], -1)
            d2 = np.stack([r2 * c - 2 * r1 * sn - r * c, r2 * sn + 2 * r1 * c - r * sn], -1)
        elif f in ("poly", "line"):
            coef = np.asarray(self.params if f == "poly" else (0.0,), dtype=float)
            p = np.polynomial.Polynomial(coef)
            z0, z1, z2 = p(s), p.deriv(1)(s), p.deriv(2)(s)
            g = np.stack([s, z0], -1)
            d1 = np.stack([np.ones_like(s), z1], -1)
            d2 = np.stack([np.zeros_like(s), z2], -1)
        else:
            raise ValueError(f"unknown curve family {f!r}")
        return g + np.asarray(self.center), d1, d2

    def point(self, s):
        return self.derivatives(s)[0]

    @property
    def closed(self):
        return self.kind == CLOSED


def circle(R=1.0, center=(0.0, 0.0), flip=False):
    return Curve(CLOSED, "circle", (float(R),), flip, tuple(center))


def ellipse(a, b, flip=False):
    return Curve(CLOSED, "ellipse", (float(a), float(b)), flip)


def line(window=10.0, flip=False):
    return Curve(GRAPH, "line", (), flip, window=window)


def graph(coefficients, window=10.0, flip=False):
    return Curve(GRAPH, "poly", tuple(float(c) for c in coefficients), flip, window=window)


def curve_from_config(cfg):
    """Build a curve from flat keys ``curve.kind``, ``curve.radius`` ..."""
    kind = cfg.get("curve.kind", "circle")
    flip = bool(cfg.get("curve.flip", False))
    if kind == "circle":
        return circle(cfg.get("curve.radius", 1.0), flip=flip)
    if kind == "ellipse":
        return ellipse(cfg.get("curve.a", 2.0), cfg.get("curve.b", 1.0), flip=flip)
    if kind == "line":
        return line(cfg.get("curve.window", 10.0), flip=flip)
    if kind == "graph":
        return graph(cfg.get("curve.coefficients", [0.0]), cfg.get("curve.window", 10.0), flip=flip)
    raise ValueError(f"unknown curve kind {kind!r}")


# ---- local frame ----------------------------------------------------------
def _speed(d1):
    sp = np.linalg.norm(d1, axis=-1)
    if np.any(sp <= 1e-14):
        raise ValueError("degenerate tangent (|gamma'| = 0)")
    return sp


def tangent(curve, s):
    _, d1, _ = curve.derivatives(s)
    return d1 / _speed(d1)[..., None]


def normal(curve, s):
    """Unit normal pointing out of Omega_+."""
    T = tangent(curve, s)
    if curve.closed:
        nu = np.stack([T[..., 1], -T[..., 0]], -1)
    else:
        nu = np.stack([-T[..., 1], T[..., 0]], -1)
    return -nu if curve.flip else nu


def weingarten(curve, s):
    """Signed curvature kappa with W dx = -d nu, i.e. nu_s = -kappa |gamma'| T."""
    _, d1, d2 = curve.derivatives(s)
    sp = _speed(d1)
    cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    k_ccw = cross / sp**3  # curvature with respect to the left normal
    # Frenet: d(left normal)/ds = -k_ccw T; nu is minus the left normal for
    # closed curves and the left normal for graphs
    kappa = -k_ccw if curve.closed else k_ccw
    return -kappa if curve.flip else kappa


def tubular_map(curve, s, t, eps1=None):
    """iota(s, t) = gamma(s) + t nu(s); t > 0 lies in Omega_-."""
    t = np.asarray(t, dtype=float)
    if eps1 is not None and np.any(np.abs(t) > eps1):
        raise ValueError(f"|t| exceeds the validated half-width {eps1}")
    return curve.point(s) + t[..., None] * normal(curve, s)


def jacobian_weight(curve, s, t, eps1=None):
    """det(I - tW) = 1 - t kappa(s)."""
    t = np.asarray(t, dtype=float)
    if eps1 is not None and np.any(np.abs(t) > eps1):
        raise ValueError(f"|t| exceeds the validated half-width {eps1}")
    return 1.0 - t * weingarten(curve, s)


@dataclass(frozen=True)
class TubularData:
    eps1: float
    bilipschitz_lower: float
    bilipschitz_upper: float
    max_det_defect: float


def validate_tubular(curve, eps, n_s=96, n_t=31, floor=1e-2, safety=0.9):
    """Sample the bi-Lipschitz ratio of iota on [0,2pi) x [-eps, eps].

    Raises ValueError if some sampled ratio
    |iota(x,t) - iota(y,r)| / (|x - y| + |t - r|) falls below ``floor``.
    The returned half-width is ``safety * eps``; the Jacobian condition
    |1 - det(I - tW)| < 1/2 is checked for |t| <= eps1.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if curve.closed:
        s = np.linspace(0, 2 * np.pi, n_s, endpoint=False)
    else:
        s = np.linspace(-curve.window, curve.window, n_s)
    t = np.linspace(-eps, eps, n_t)
    S, T = np.meshgrid(s, t, indexing="ij")
    S, T = S.ravel(), T.ravel()
    P = tubular_map(curve, S, T)
    base = curve.point(S)
    num = pdist(P)
    den = pdist(base) + pdist(T[:, None], "cityblock")
    off = den > 0
    ratio = num[off] / den[off]
    lo, hi = float(ratio.min()), float(ratio.max())
    if lo < floor:
        raise ValueError(f"tubular map not injective at eps={eps}: sampled ratio {lo:.3g} < {floor}")
    eps1 = safety * eps
    tt = np.linspace(-eps1, eps1, n_t)
    defect = float(np.max(np.abs(1 - jacobian_weight(curve, s[:, None], tt[None]))))
    if defect >= 0.5:
        raise ValueError(f"|1 - det(I - tW)| = {defect:.3g} >= 1/2 within eps1={eps1}")
    return TubularData(eps1, lo, hi, defect)


def eps2_proxy(curve, eps1, n=512):
    """min(eps1/2, 1/(2 max|kappa|)), with max |kappa| standing in for |D nu|."""
    s = quadrature(curve, n)[0]
    kmax = float(np.max(np.abs(weingarten(curve, s))))
    return min(eps1 / 2, np.inf if kmax == 0 else 1 / (2 * kmax))


def quadrature(curve, n):
    """Periodic trapezoid nodes and arclength weights (closed curves).

    For graphs the trapezoid rule on the window [-L, L] is returned.
    """
    if n < 8:
        raise ValueError("need n >= 8 nodes")
    if curve.closed:
        s = 2 * np.pi * np.arange(n) / n
        h = 2 * np.pi / n
        w = h * _speed(curve.derivatives(s)[1])
    else:
        s = np.linspace(-curve.window, curve.window, n)
        h = s[1] - s[0]
        w = h * _speed(curve.derivatives(s)[1])
        w[[0, -1]] *= 0.5
    return s, w


def winding_number(curve, p, n=2048):
    """Winding number of a closed curve around points ``p`` (shape (..., 2))."""
    s = 2 * np.pi * np.arange(n + 1) / n
    g = curve.point(s)
    d = g[None] - np.asarray(p, dtype=float).reshape(-1, 1, 2)
    ang = np.arctan2(d[..., 1], d[..., 0])
    dang = np.diff(ang, axis=-1)
    dang = (dang + np.pi) % (2 * np.pi) - np.pi
    return np.round(dang.sum(-1) / (2 * np.pi)).astype(int).reshape(np.shape(p)[:-1])


def in_omega_plus(curve, p):
    """Side location of points: True in Omega_+."""
    p = np.asarray(p, dtype=float)
    if curve.closed:
        inside = winding_number(curve, p) != 0
    else:
        coef = np.asarray(curve.params if curve.family == "poly" else (0.0,))
        inside = p[..., 1] < np.polynomial.Polynomial(coef)(p[..., 0])
    return ~inside if curve.flip else inside


def tubular_width(curve, eps_max=2.0, n_grid=20, **kw):
    """Largest accepted eps on a geometric grid in (0, eps_max] and its TubularData."""
    for eps in eps_max * 0.8 ** np.arange(n_grid):
        try:
            return float(eps), validate_tubular(curve, float(eps), **kw)
        except ValueError:
            continue
    raise ValueError("no admissible tubular half-width found on the grid")
