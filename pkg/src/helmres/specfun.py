"""Complex-argument Bessel J_n and Hankel H^(1)_n functions.

Method contract:

* J_n: ascending power series for |z| <= 12, Miller backward recurrence
  normalized by J_0 + 2*sum J_{2m} = 1 otherwise.
* H^(1)_n: seeds from the logarithmic ascending series for Y_0, Y_1 when
  |z| <= 12, and from Steed's continued fraction for H'/H combined with
  the Wronskian otherwise; orders above 1 by forward recurrence.  The
  recurrence is run only where H^(1) starts out recessive (Im z >= 0); in
  the lower half-plane the stable combination H^(1) = 2J - H^(2) with
  H^(2)_n(z) = conj(H^(1)_n(conj z)) is used instead, and the left
  half-plane reduces to the right one via the integer-order reflection
  formulas.
* Real zeros of J_n by scanning for sign changes and Newton polishing.

The supported envelope is |z| <= 50 and n <= 200; outside it an
AccuracyEnvelopeError is raised instead of silently degrading.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import AccuracyEnvelopeError, SingularityError

_SERIES_RADIUS = 12.0
_MAX_ABS_Z = 50.0
_MAX_ORDER = 200
_EULER_GAMMA = 0.5772156649015328606


def _check_envelope(n: int, z: complex) -> None:
    if n < 0:
        raise ValueError("order must be nonnegative")
    if n > _MAX_ORDER or abs(z) > _MAX_ABS_Z:
        raise AccuracyEnvelopeError(
            f"(n={n}, |z|={abs(z):.3g}) outside the accuracy envelope "
            f"n <= {_MAX_ORDER}, |z| <= {_MAX_ABS_Z}"
        )


# ---------------------------------------------------------------------------
# J_n sequences
# ---------------------------------------------------------------------------
def _jn_series_one(n: int, z: complex) -> complex:
    """Ascending series for J_n, intended for |z| <= 12."""
    z = complex(z)
    if z == 0:
        return 1.0 + 0.0j if n == 0 else 0.0 + 0.0j
    half = 0.5 * z
    try:
        term = half**n / math.factorial(n)
    except OverflowError:
        return 0.0 + 0.0j
    q = half * half
    total = term
    for m in range(1, 200):
        term *= -q / (m * (n + m))
        total += term
        if abs(term) < 1e-18 * (abs(total) + 1e-300):
            break
    return total


def _jn_seq_miller(nmax: int, z: complex) -> np.ndarray:
    """J_0..J_nmax at a single complex z via Miller's backward recurrence.

    Normalized against e^{iz} = J_0 + 2*sum_n i^n J_n (or its conjugate
    counterpart), with the sign of the exponent chosen so the normalization
    sum is the large quantity; this avoids the catastrophic cancellation the
    classic even-order sum suffers for large |Im z|.
    """
    z = complex(z)
    za = abs(z)
    top = max(nmax, int(za)) + int(math.sqrt(40.0 * (max(nmax, int(za)) + 1))) + 14
    if top % 2:
        top += 1
    sgn = 1.0 if z.imag <= 0 else -1.0
    w = sgn * 1j
    out = np.zeros(nmax + 1, dtype=complex)
    fp = 0.0 + 0.0j  # f_{n+1}
    fc = 1e-290 + 0.0j  # f_n
    norm = 0.0 + 0.0j
    for n in range(top, 0, -1):
        fm = (2.0 * n / z) * fc - fp
        fp, fc = fc, fm
        # fc now holds f_{n-1}
        m = n - 1
        if m <= nmax:
            out[m] = fc
        if m >= 1:
            norm += 2.0 * w**m * fc
        big = abs(fc)
        if big > 1e250:
            fc /= big
            fp /= big
            norm /= big
            out /= big
    norm += fc  # f_0 term
    return out * (np.exp(sgn * 1j * z) / norm)


def jn_sequence(nmax: int, z: complex) -> np.ndarray:
    """Array [J_0(z), ..., J_nmax(z)] (no envelope guard; internal use)."""
    z = complex(z)
    if abs(z) <= _SERIES_RADIUS:
        return np.array([_jn_series_one(n, z) for n in range(nmax + 1)])
    return _jn_seq_miller(nmax, z)


def jn_many(nmax: int, z: np.ndarray) -> np.ndarray:
    """J_0..J_nmax for an array of arguments; returns shape (nmax+1, len(z)).

    Vectorized Miller recurrence for the large-argument points, vectorized
    ascending series for the small ones.
    """
    z = np.asarray(z, dtype=complex).ravel()
    out = np.zeros((nmax + 1, len(z)), dtype=complex)
    small = np.abs(z) <= _SERIES_RADIUS
    if small.any():
        zs = z[small]
        half = 0.5 * zs
        q = half * half
        for n in range(nmax + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                term = half**n / math.factorial(n)
            term = np.where(np.isfinite(term), term, 0.0)
            total = term.copy()
            for m in range(1, 80):
                term = term * (-q) / (m * (n + m))
                total += term
                if np.max(np.abs(term)) < 1e-18:
                    break
            out[n, np.nonzero(small)[0]] = total
        # exact value at the origin
        zero = small & (z == 0)
        if zero.any():
            out[:, np.nonzero(zero)[0]] = 0.0
            out[0, np.nonzero(zero)[0]] = 1.0
    large = ~small
    if large.any():
        zl = z[large]
        za = np.max(np.abs(zl))
        top = max(nmax, int(za)) + int(math.sqrt(40.0 * (max(nmax, int(za)) + 1))) + 14
        if top % 2:
            top += 1
        sgn = np.where(zl.imag <= 0, 1.0, -1.0)
        w = sgn * 1j
        cols = np.zeros((nmax + 1, len(zl)), dtype=complex)
        fp = np.zeros(len(zl), dtype=complex)
        fc = np.full(len(zl), 1e-290, dtype=complex)
        norm = np.zeros(len(zl), dtype=complex)
        wp = np.ones(len(zl), dtype=complex)  # w^m, updated on the way down
        wtop = w ** (top - 1)
        wp = wtop.copy()
        for n in range(top, 0, -1):
            fm = (2.0 * n / zl) * fc - fp
            fp, fc = fc, fm
            m = n - 1
            if m <= nmax:
                cols[m] = fc
            if m >= 1:
                norm += 2.0 * wp * fc
            wp = wp / w
            big = np.abs(fc)
            mask = big > 1e250
            if mask.any():
                scale = np.where(mask, big, 1.0)
                fc /= scale
                fp /= scale
                norm /= scale
                cols[:, mask] /= scale[mask]
        norm += fc
        out[:, np.nonzero(large)[0]] = cols * (np.exp(sgn * 1j * zl) / norm)
    return out


# ---------------------------------------------------------------------------
# Hankel sequences
# ---------------------------------------------------------------------------
def _psi(m: int) -> float:
    """Digamma at positive integers: psi(m) = -gamma + H_{m-1}."""
    return -_EULER_GAMMA + sum(1.0 / j for j in range(1, m))


def _y01_series(z: complex) -> tuple:
    """Y_0(z), Y_1(z) by the ascending logarithmic series (|z| <= 12)."""
    z = complex(z)
    lg = np.log(0.5 * z)
    q = 0.25 * z * z
    j0 = _jn_series_one(0, z)
    j1 = _jn_series_one(1, z)
    # sum for n = 0: sum_k 2*psi(k+1) (-q)^k / (k!)^2
    s0 = 0.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(0, 120):
        if k > 0:
            term *= -q / (k * k)
        s0 += 2.0 * _psi(k + 1) * term
        if abs(term) < 1e-18:
            break
    y0 = (2.0 / math.pi) * lg * j0 - s0 / math.pi
    # sum for n = 1: sum_k (psi(k+1) + psi(k+2)) (-q)^k / (k! (k+1)!)
    s1 = 0.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(0, 120):
        if k > 0:
            term *= -q / (k * (k + 1))
        s1 += (_psi(k + 1) + _psi(k + 2)) * term
        if abs(term) < 1e-18:
            break
    y1 = (2.0 / math.pi) * lg * j1 - (2.0 / (math.pi * z)) - (0.5 * z / math.pi) * s1
    return y0, y1


def _h1_ratio_cf(nu: int, z: complex) -> complex:
    """H^(1)_nu'(z)/H^(1)_nu(z) by Steed's continued fraction (Im z >= 0)."""
    tiny = 1e-290
    f = tiny + 0.0j
    c = f
    d = 0.0 + 0.0j
    for k in range(1, 10000):
        a = (k - 0.5) ** 2 - nu * nu
        b = 2.0 * (z + 1j * k)
        d = b + a * d
        if d == 0:
            d = tiny
        c = b + a / c
        if c == 0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1j - 1.0 / (2.0 * z) + (1j / z) * f


def _h1_seq_upper(nmax: int, z: complex) -> np.ndarray:
    """H^(1)_0..H^(1)_nmax for Im z >= 0, Re z >= 0 via Steed's method.

    The Wronskian J_nu H' - J_nu' H = 2i/(pi z) turns the continued-fraction
    ratio into fully accurate seed values of H itself, even where H^(1) is
    the exponentially small solution (Im z > 0) and J + iY would cancel.
    Forward recurrence in the order is then stable: the relative size of the
    contaminating H^(2) component only shrinks as the order grows.
    """
    seq = jn_sequence(1, z)
    j0, j1 = seq
    j0p = -j1
    j1p = j0 - j1 / z
    w = 2j / (math.pi * z)
    out = np.zeros(nmax + 1, dtype=complex)
    out[0] = w / (j0 * _h1_ratio_cf(0, z) - j0p)
    if nmax >= 1:
        out[1] = w / (j1 * _h1_ratio_cf(1, z) - j1p)
    for n in range(1, nmax):
        out[n + 1] = (2.0 * n / z) * out[n] - out[n - 1]
    return out


def _h1_seq_series(nmax: int, z: complex) -> np.ndarray:
    """H^(1) sequence from the ascending-series seeds (|z| <= 12, Im z >= 0)."""
    y0, y1 = _y01_series(z)
    out = np.zeros(nmax + 1, dtype=complex)
    out[0] = _jn_series_one(0, z) + 1j * y0
    if nmax >= 1:
        out[1] = _jn_series_one(1, z) + 1j * y1
    for n in range(1, nmax):
        out[n + 1] = (2.0 * n / z) * out[n] - out[n - 1]
    return out


def _h1_seq_upper_right(nmax: int, z: complex) -> np.ndarray:
    """H^(1) sequence for Re z >= 0, Im z >= 0: series or CF seeds.

    The ascending series forms H = J + iY from two terms of size e^{Im z}
    while H^(1) itself is of size e^{-Im z}, losing about e^{2 Im z} to
    cancellation; it is therefore used only for shallow arguments, and the
    continued-fraction route (which computes H directly) takes over both
    for Im z > 3 and outside the series radius.
    """
    if z.imag > 3.0 or abs(z) > _SERIES_RADIUS:
        return _h1_seq_upper(nmax, z)
    return _h1_seq_series(nmax, z)


def h1_sequence(nmax: int, z: complex) -> np.ndarray:
    """Array [H^(1)_0(z), ..., H^(1)_nmax(z)] (internal, no envelope guard)."""
    z = complex(z)
    if z == 0:
        raise SingularityError("Hankel function is singular at z = 0")
    upper = math.copysign(1.0, z.imag) > 0.0
    if not upper:
        # Forward recurrence on H^(1) is unstable in the lower half-plane:
        # H^(1) starts out exponentially dominant over H^(2), and the
        # contamination ratio grows by about e^{2|Im z|} through the
        # transition orders n ~ |z|.  Use H^(1)_n = 2 J_n - H^(2)_n with
        # H^(2)_n(z) = conj(H^(1)_n(conj z)) evaluated in the upper
        # half-plane, where H^(1) is the recessive solution and everything
        # is stable.  Neither term exceeds the result by more than an O(1)
        # factor, so the difference does not cancel.
        h2 = np.conj(h1_sequence(nmax, np.conj(z)))
        return 2.0 * jn_sequence(nmax, z) - h2
    if z.real >= 0.0:
        return _h1_seq_upper_right(nmax, z)
    # Second quadrant (including Im z = +0.0, the upper side of the cut):
    # the continuation H^(1)_n(z) = -(-1)^n H^(2)_n(z e^{-i pi}) combined
    # with the reflection H^(2)_nu(w) = conj(H^(1)_nu(conj w)) gives
    #     H^(1)_n(z) = -(-1)^n conj(H^(1)_n(-conj z)),
    # with -conj z in the first quadrant: a single cancellation-free
    # identity.
    signs = np.where(np.arange(nmax + 1) % 2 == 0, 1.0, -1.0)
    return -signs * np.conj(_h1_seq_upper_right(nmax, -np.conj(z)))


# ---------------------------------------------------------------------------
# Public scalar operations
# ---------------------------------------------------------------------------
def bessel_j(n: int, z: complex) -> complex:
    """Bessel function of the first kind, complex argument."""
    _check_envelope(n, z)
    return complex(jn_sequence(n, z)[n])


def hankel1(n: int, z: complex) -> complex:
    """Hankel function of the first kind H^(1)_n = J_n + i Y_n."""
    _check_envelope(n, z)
    if z == 0:
        raise SingularityError("Hankel function is singular at z = 0")
    return complex(h1_sequence(n, z)[n])


def bessel_j_prime(n: int, z: complex) -> complex:
    """Derivative J_n'(z) via J_{n-1} - (n/z) J_n (series limit at z = 0)."""
    _check_envelope(n, z)
    z = complex(z)
    if z == 0:
        if n == 1:
            return 0.5 + 0.0j
        return 0.0 + 0.0j
    seq = jn_sequence(n + 1, z)
    if n == 0:
        return complex(-seq[1])
    return complex(seq[n - 1] - (n / z) * seq[n])


def hankel1_prime(n: int, z: complex) -> complex:
    """Derivative of H^(1)_n via the same recurrence identity."""
    _check_envelope(n, z)
    if z == 0:
        raise SingularityError("Hankel function is singular at z = 0")
    z = complex(z)
    seq = h1_sequence(max(n, 1), z)
    if n == 0:
        return complex(-seq[1])
    return complex(seq[n - 1] - (n / z) * seq[n])


def bessel_zero(n: int, m: int) -> float:
    """m-th positive zero of J_n on the real axis, to about 1e-10."""
    if not (0 <= n <= 50 and 1 <= m <= 50):
        raise ValueError("supported range is n <= 50, m <= 50")

    def jn(x: float) -> float:
        return jn_sequence(n, complex(x)).real[n]

    # all zeros lie above the turning point x = n; spacing is > pi
    x = max(n, 0.5)
    step = 0.5
    prev = jn(x)
    found = 0
    a = b = None
    for _ in range(20000):
        x += step
        cur = jn(x)
        if prev == 0.0:
            prev = cur
            continue
        if (prev < 0) != (cur < 0):
            found += 1
            if found == m:
                a, b = x - step, x
                break
        prev = cur
    if a is None:
        raise RuntimeError("zero bracketing failed")
    fa = jn(a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = jn(mid)
        if (fa < 0) != (fm < 0):
            b = mid
        else:
            a, fa = mid, fm
        if b - a < 1e-9:
            break
    x = 0.5 * (a + b)
    for _ in range(30):
        seq = jn_sequence(max(n, 1), complex(x)).real
        f = seq[n]
        fp = -seq[1] if n == 0 else seq[n - 1] - (n / x) * seq[n]
        dx = f / fp
        x -= dx
        if abs(dx) < 1e-13 * x:
            break
    return float(x)
