"""
Truncated power-series arithmetic on coefficient arrays (lowest order first).

Used for Taylor expansions of exponential-rational terms, for the ``Φ`` series in ``1/θ``
and for the logarithmic derivatives behind the cumulant tails.
"""
import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import gammaln


def pad(coefficients, order):
    out = np.zeros(order + 1, dtype=complex)
    coefficients = np.asarray(coefficients, dtype=complex)[: order + 1]
    out[: len(coefficients)] = coefficients
    return out


def exp_series(alpha, order):
    """Coefficients of exp(alpha * d) up to d**order."""
    i = np.arange(order + 1)
    if alpha == 0:
        out = np.zeros(order + 1, dtype=complex)
        out[0] = 1.0
        return out
    return np.exp(i * np.log(complex(alpha)) - gammaln(i + 1))


def mul(a, b, order):
    return pad(np.convolve(pad(a, order), pad(b, order)), order)


def div(a, b, order):
    """Coefficients c with a = b * c, requires b[0] != 0."""
    a = pad(a, order)
    b = pad(b, order)
    if b[0] == 0:
        raise ZeroDivisionError("series division by a series vanishing at the origin")
    c = np.zeros(order + 1, dtype=complex)
    for k in range(order + 1):
        c[k] = (a[k] - np.dot(b[1 : k + 1][::-1], c[:k])) / b[0]
    return c


def log_coefficients(c, order):
    """
    Coefficients l_1..l_order of log(C(d) / C(0)).

    Follows from k c_k = sum_{i=1..k} i l_i c_{k-i}.
    """
    c = pad(c, order)
    l = np.zeros(order + 1, dtype=complex)
    for k in range(1, order + 1):
        acc = c[k] - sum((i / k) * l[i] * c[k - i] for i in range(1, k))
        l[k] = acc / c[0]
    return l


def shifted(poly, theta0):
    """The polynomial d -> poly(theta0 + d)."""
    return poly(Polynomial([theta0, 1.0]))


def reversed_coefficients(poly):
    """Coefficients of s**deg * poly(1/s) (highest power of poly first)."""
    return np.asarray(poly.coef, dtype=complex)[::-1]


def trim(poly, tol=1e-14):
    """Drop negligible leading coefficients."""
    coef = np.asarray(poly.coef)
    scale = max(np.max(np.abs(coef)), 1.0) if coef.size else 1.0
    keep = len(coef)
    while keep > 1 and abs(coef[keep - 1]) <= tol * scale:
        keep -= 1
    return Polynomial(coef[:keep])


def lowest_order(coef, tol=1e-14):
    """Index of the first non-negligible coefficient."""
    coef = np.asarray(coef)
    scale = max(np.max(np.abs(coef)), 1e-300)
    for i, value in enumerate(coef):
        if abs(value) > tol * scale:
            return i
    return len(coef)
