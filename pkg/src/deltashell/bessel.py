"""Modified Bessel functions K_0, K_1, K_2 (and I_0, I_1) of complex argument.

Validated on the sector Re w >= 0, |arg w| <= 1.45.  Three regimes:

* |w| <= 2: ascending series with digamma coefficients,
* 2 < |w| < 25: Steed's evaluation of the Thompson-Barnett continued
  fraction (CF2), run separately for orders (0, 1) and (1, 2),
* |w| >= 25: Hankel asymptotic expansion truncated at its smallest term.

The K_2 value is computed independently of K_0 and K_1 in every regime so
that the recurrence K_2 = K_0 + (2/w) K_1 is a genuine check.
"""

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
SERIES_RADIUS = 2.0
ASYMPTOTIC_RADIUS = 25.0
MAX_ARG = 1.45
_EPS = 1e-17


def _digamma_int(kmax):
    """psi(k) for k = 1..kmax."""
    h = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, kmax))])
    return -EULER_GAMMA + h


def _kmax(absw):
    # number of series terms needed for |w| up to absw (terms ~ (|w|/2)^{2k}/k!^2)
    k = 8
    while (absw / 2) ** (2 * k) / math.factorial(k) ** 2 > _EPS * 1e-3:
        k += 1
    return k + 2


def _as_arg(w):
    """Real float array when every argument is real, complex otherwise."""
    w = np.asarray(w)
    if np.iscomplexobj(w) and np.all(w.imag == 0):
        return np.ascontiguousarray(w.real)
    return w.astype(complex if np.iscomplexobj(w) else float)


def bessel_i(n, w):
    """I_n(w), n in {0, 1, 2}, by the ascending series (entire function)."""
    w = _as_arg(w)
    if w.size == 0:
        return w.copy()
    kmax = _kmax(float(np.max(np.abs(w))))
    w2 = w * w / 4
    t = np.full_like(w, 1.0 / math.factorial(n))
    total = np.zeros_like(w)
    for k in range(kmax):
        total += t
        t = t * (w2 / ((k + 1) * (k + 1 + n)))
    return (w / 2) ** n * total


def _k_series(w, want_k2=True):
    kmax = _kmax(SERIES_RADIUS)
    psi = _digamma_int(kmax + 3)  # psi[j] = psi(j+1)
    w2 = w * w / 4
    lg = np.log(w / 2)
    # running terms (w^2/4)^k / (k! (k+n)!) for n = 0, 1, 2
    t0 = np.ones_like(w)
    t1 = np.ones_like(w)
    t2 = np.full_like(w, 0.5)
    I0 = np.zeros_like(w)
    I1 = np.zeros_like(w)
    S0 = np.zeros_like(w)
    S1 = np.zeros_like(w)
    I2 = np.zeros_like(w)
    S2 = np.zeros_like(w)
    for k in range(kmax):
        I0 += t0
        S0 += psi[k] * t0
        I1 += t1
        S1 += (psi[k] + psi[k + 1]) * t1
        t0 = t0 * (w2 / ((k + 1) * (k + 1)))
        t1 = t1 * (w2 / ((k + 1) * (k + 2)))
        if want_k2:
            I2 += t2
            S2 += (psi[k] + psi[k + 2]) * t2
            t2 = t2 * (w2 / ((k + 1) * (k + 3)))
    K0 = S0 - lg * I0
    K1 = 1 / w + lg * (w / 2) * I1 - (w / 4) * S1
    if not want_k2:
        return K0, K1, None
    K2 = 2 / (w * w) - 0.5 - lg * (w * w / 4) * I2 + (w * w / 8) * S2
    return K0, K1, K2


def _k_cf2(w, nu):
    """Steed's CF2: returns K_nu(w), K_{nu+1}(w) for |w| >= 2, Re w > 0."""
    x = w
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - nu * nu
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, 5000):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = np.where(active, h + delh, h)
        dels = q * delh
        s = np.where(active, s + dels, s)
        active &= np.abs(dels) > 1e-17 * np.abs(s)
        if not active.any():
            break
    else:  # pragma: no cover - guarded by the validated sector
        raise RuntimeError("continued fraction for K did not converge")
    knu = np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) / s
    knu1 = knu * (nu + x + 0.5 - a1 * h) / x
    return knu, knu1


def _k_asymptotic(w, nu):
    mu = 4.0 * nu * nu
    total = np.ones_like(w)
    term = np.ones_like(w)
    done = np.zeros(w.shape, dtype=bool)
    prev = np.full(w.shape, np.inf)
    for k in range(1, 200):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * w)
        mag = np.abs(term)
        done |= mag >= prev  # stop at the smallest term
        total = np.where(done, total, total + term)
        done |= mag < _EPS
        prev = mag
        if done.all():
            break
    return np.sqrt(np.pi / (2 * w)) * np.exp(-w) * total


def bessel_k012(w, want_k2=True):
    """K_0(w), K_1(w), K_2(w) for complex ``w`` with Re w >= 0, w != 0.

    With ``want_k2=False`` only K_0, K_1 are computed (K_2 returned as None).
    """
    w = _as_arg(w)
    shape = w.shape
    w = w.ravel()
    if np.any(w == 0):
        raise ValueError("K_n is singular at w = 0")
    if np.any(w.real < -1e-14 * np.abs(w)):
        raise ValueError("bessel_k is restricted to Re w >= 0")
    out = np.empty((3, w.size), dtype=w.dtype)
    r = np.abs(w)
    m_ser = r <= SERIES_RADIUS
    m_asy = r >= ASYMPTOTIC_RADIUS
    m_cf = ~(m_ser | m_asy)
    orders = 3 if want_k2 else 2
    if m_ser.any():
        res = _k_series(w[m_ser], want_k2)
        for n in range(orders):
            out[n, m_ser] = res[n]
    if m_cf.any():
        wc = w[m_cf]
        k0, k1 = _k_cf2(wc, 0.0)
        if want_k2:
            k1b, k2 = _k_cf2(wc, 1.0)
            out[0, m_cf], out[1, m_cf], out[2, m_cf] = k0, 0.5 * (k1 + k1b), k2
        else:
            out[0, m_cf], out[1, m_cf] = k0, k1
    if m_asy.any():
        wa = w[m_asy]
        for n in range(orders):
            out[n, m_asy] = _k_asymptotic(wa, float(n))
    res = tuple(o.reshape(shape) for o in out[:orders])
    return res if want_k2 else res + (None,)


def bessel_k(n, w):
    """Modified Bessel function of the second kind K_n(w), n in {0, 1, 2}."""
    if n not in (0, 1, 2):
        raise ValueError("only orders 0, 1, 2 are implemented")
    res = bessel_k012(w)[n]
    return res[()] if np.ndim(res) == 0 else res


def in_working_sector(w):
    w = np.asarray(w, dtype=complex)
    return (w != 0) & (np.abs(np.angle(w)) <= MAX_ARG)
