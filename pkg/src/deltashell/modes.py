"""Gap eigenvalues of the electrostatic shell on a circle by mode matching.

In polar coordinates the 2D operator decouples into angular channels
psi = (u(r) e^{i l phi}, v(r) e^{i(l+1) phi}).  Regular solutions inside
and decaying solutions outside are

    inside : (I_l(mu r), -i mu I_{l+1}(mu r) / (m + z))
    outside: (K_l(mu r),  i mu K_{l+1}(mu r) / (m + z)),   mu = sqrt(m^2 - z^2),

and alpha.nu acts as sigma_1 on the channel amplitudes.  The transmission
condition i(alpha.nu)(u_+ - u_-) + (eta/2)(u_+ + u_-) = 0 at r = R gives a
real secular function per channel.  This module uses scipy's Bessel
functions and serves as an independent reference for the boundary integral
eigenvalue search.
"""

import numpy as np
import scipy.optimize
import scipy.special as sp


def secular(z, l, eta, m=1.0, R=1.0):
    """Real secular function of channel ``l``; zeros are gap eigenvalues."""
    mu = np.sqrt(m * m - z * z)
    x = mu * R
    A = sp.ive(l, x)
    B = mu * sp.ive(l + 1, x) / (m + z)
    C = sp.kve(l, x)
    D = mu * sp.kve(l + 1, x) / (m + z)
    h = eta / 2
    # exponential scalings cancel in the product I * K
    return (B + h * A) * (C - h * D) + (D + h * C) * (A - h * B)


def circle_eigenvalues(eta, m=1.0, R=1.0, lmax=40, n_grid=4000, margin=1e-9):
    """All gap eigenvalues in (-m, m) for V~ = eta I on the circle of radius R."""
    m = abs(float(m))
    zs = np.linspace(-m + margin, m - margin, n_grid)
    roots = []
    for l in range(-lmax, lmax + 1):
        f = secular(zs, l, eta, m, R)
        idx = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
        for i in idx:
            z0 = scipy.optimize.brentq(secular, zs[i], zs[i + 1], args=(l, eta, m, R), xtol=1e-14)
            roots.append((float(z0), l))
    roots.sort()
    return roots


def distinct(values, tol=1e-9):
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out
