"""
Spectral expansion of the workload transform

    ψ(θ) = exp(−α0θ/2) / Π_k (1 − θ/z_k)^{k_k}

over the left zeroes z_k of F, with the helper H used to telescope the slowly converging
tail sums and products.
"""
import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

from . import series
from .exceptions import (
    CoefficientOverflow,
    HelperMismatch,
    ImaginaryLeak,
    NonProbability,
    RepeatedRoot,
    Unsupported,
)
from .rootfinder import (
    DUPLICATE_TOLERANCE,
    NEWTON_EPS,
    NEWTON_MAX_ITER,
    count_zeros,
    dominant_cores,
    extend_ladder,
    polish_zeros,
    search_window,
    start_ladder,
)
from .transforms import ExponentDecomposition

logger = logging.getLogger(__name__)

HELPER_SERIES_ORDER = 5
HELPER_TAYLOR_ORDER = 4
ORIGIN_SERIES_ORDER = 40
ORIGIN_SERIES_RADIUS = 1e-3
IMAGINARY_WARNING = 1e-9
IMAGINARY_LIMIT = 1e-7
REPEATED_ROOT_TOLERANCE = 1e-9
TAIL_TERMS = 1000
TELESCOPE_TERMS = 200
CUMULANT_SPLIT = 1000


@dataclass(frozen=True)
class HelperPrefactor:
    """q(θ) = q0·θ^e·Π_U(1 − θ/u) / Π_p(1 − θ/p)^o."""

    scale: complex
    power: int
    zeros: tuple
    poles: tuple

    def __call__(self, theta):
        value = self.scale * theta**self.power
        for u in self.zeros:
            value *= 1.0 - theta / u
        for p, o in self.poles:
            value /= (1.0 - theta / p) ** o
        return value

    @property
    def excess(self):
        """Growth order of q at infinity: |U| + e − Σo."""
        return len(self.zeros) + self.power - sum(o for _, o in self.poles)

    def nearest_zero(self, theta, tol=1e-6):
        """Index of a zero of q within tol (relative) of theta, or None."""
        for i, u in enumerate(self.zeros):
            if abs(theta - u) <= tol * max(1.0, abs(u)):
                return i
        return None

    def without(self, index):
        return replace(self, zeros=self.zeros[:index] + self.zeros[index + 1 :])

    def limit_factor(self):
        """q(θ)·θ^(−excess) as |θ| → ∞."""
        value = complex(self.scale)
        for u in self.zeros:
            value *= -1.0 / u
        for p, o in self.poles:
            value /= (-1.0 / p) ** o
        return value


@dataclass(frozen=True)
class HelperFunction:
    """
    H: the terms of F that do not vanish as Re θ → −∞, plus the constant −1.

    ``h`` is the entire stand-in H(θ)·θ^M·D(θ) where D clears the finite non-zero poles.
    """

    terms: tuple
    alpha0: float
    cores: tuple
    height: float
    radius: float
    starts: tuple
    pole_order: int
    clearing: Polynomial
    clearing_poles: tuple
    exact: bool
    prefactor: HelperPrefactor = None

    @property
    def left_terms(self):
        return self.terms

    @property
    def core(self):
        return self.cores[0]

    @property
    def alpha(self):
        return self.alpha0

    def evaluate(self, theta):
        return complex(sum(t.evaluate(theta) for t in self.terms) - 1.0)

    def derivative(self, theta):
        return complex(sum(t.derivative(theta) for t in self.terms))

    def magnitude(self, theta):
        return float(sum(abs(t.evaluate(theta)) for t in self.terms) + 1.0)

    def taylor(self, theta0, order=HELPER_TAYLOR_ORDER):
        coef = sum(t.taylor(theta0, order) for t in self.terms)
        coef = np.array(coef, dtype=complex)
        coef[0] -= 1.0
        return coef

    @cached_property
    def origin_series(self):
        """Taylor coefficients of h about 0."""
        order = ORIGIN_SERIES_ORDER
        x = Polynomial([0.0, 1.0])
        total = np.zeros(order + 1, dtype=complex)
        for t in self.terms:
            numerator = t.numerator * x ** (self.pole_order - t.pole_order) * self.clearing
            ratio = series.div(numerator.coef, t.denominator.coef, order)
            total += series.mul(series.exp_series(t.alpha, order), ratio, order)
        total -= series.pad((x**self.pole_order * self.clearing).coef, order)
        return total

    @cached_property
    def origin_order(self):
        """(ν, t_ν): order and leading coefficient of the zero of h at 0."""
        coef = self.origin_series
        nu = series.lowest_order(coef, tol=1e-10)
        if nu > len(coef) - 5:
            raise HelperMismatch("the helper vanishes identically near the origin")
        return nu, coef[nu]

    def h(self, theta):
        theta = complex(theta)
        if abs(theta) < ORIGIN_SERIES_RADIUS:
            return complex(Polynomial(self.origin_series)(theta))
        return self.evaluate(theta) * theta**self.pole_order * complex(self.clearing(theta))

    def h_derivative(self, theta):
        theta = complex(theta)
        if abs(theta) < ORIGIN_SERIES_RADIUS:
            return complex(Polynomial(self.origin_series).deriv()(theta))
        big_m = self.pole_order
        d = complex(self.clearing(theta))
        dd = complex(self.clearing.deriv()(theta))
        value = self.evaluate(theta)
        power = theta**big_m
        dpower = big_m * theta ** (big_m - 1) if big_m else 0.0
        return self.derivative(theta) * power * d + value * (dpower * d + power * dd)

    def h_magnitude(self, theta):
        theta = complex(theta)
        return self.magnitude(theta) * abs(theta) ** self.pole_order * max(abs(complex(self.clearing(theta))), 1e-300)

    def check_origin_count(self, found):
        """The zero count at the origin must balance the prefactor's growth."""
        if self.prefactor.excess != found:
            raise HelperMismatch(
                f"helper prefactor has growth order {self.prefactor.excess} but F has {found} origin zeroes"
            )


def _clearing_poles(terms):
    found = []
    for term in terms:
        for location, order in term.poles():
            for i, (known, known_order) in enumerate(found):
                if abs(known - location) <= DUPLICATE_TOLERANCE * max(1.0, abs(known)):
                    found[i] = (known, max(order, known_order))
                    break
            else:
                found.append((location, order))
    return tuple(found)


def build_helper(model):
    """
    Helper H of a model: the left terms of the decomposition, with non-finite Φ series cut
    at order κ_p, its dominant cores, search window and origin prefactor q.
    """
    decomposition = model.decomposition
    order = decomposition.kappa_p
    terms = []
    for term in decomposition.left_terms:
        if order is not None and not term.is_polynomial_in_inverse:
            term = term.truncated(min(order, HELPER_SERIES_ORDER))
        terms.append(term)
    terms = tuple(terms)
    cores = tuple(dominant_cores(ExponentDecomposition(terms)))
    height, radius, starts = search_window(cores)
    poles = _clearing_poles(terms)
    clearing = Polynomial.fromroots([p for p, o in poles for _ in range(o)]) if poles else Polynomial([1.0])
    helper = HelperFunction(
        terms=terms,
        alpha0=decomposition.alpha0,
        cores=cores,
        height=height,
        radius=radius,
        starts=starts,
        pole_order=max(t.pole_order for t in terms),
        clearing=clearing,
        clearing_poles=poles,
        exact=not decomposition.right_terms,
    )
    nu, leading = helper.origin_order
    rectangle = (-radius, radius, -height, height)
    expected = count_zeros(helper.h, rectangle) - nu
    zeros = polish_zeros(
        helper.h,
        helper.h_derivative,
        rectangle,
        expected,
        scale=helper.h_magnitude,
        exclude=(0.0,),
    )
    prefactor = HelperPrefactor(
        scale=leading / complex(clearing(0.0)),
        power=nu - helper.pole_order,
        zeros=tuple(z for r in zeros for z in [r.z] * r.multiplicity),
        poles=poles,
    )
    logger.info(
        f"helper of {model.name or 'model'}: {len(cores)} core(s), window {height:.4g} x {radius:.4g}, "
        f"{len(prefactor.zeros)} origin zero(s), q ~ theta^{prefactor.power}"
    )
    return replace(helper, prefactor=prefactor)


def solve_model(model, count=TAIL_TERMS, eps=NEWTON_EPS, max_iter=NEWTON_MAX_ITER):
    """Helper and a root ladder holding at least ``count`` upper-half-plane zeroes."""
    helper = build_helper(model)
    ladder = start_ladder(model, helper, 0, eps=eps, max_iter=max_iter)
    found = sum(r.multiplicity for r in ladder.origin) + sum(
        r.multiplicity for r in ladder.origin if r.z.imag > 0
    )
    helper.check_origin_count(found)
    ladder = extend_ladder(ladder, model, helper, max(count - len(ladder), 0), eps=eps, max_iter=max_iter)
    return helper, ladder


def _conjugate_closure(z, k):
    upper = np.abs(z.imag) > 0
    return np.concatenate([z, z[upper].conj()]), np.concatenate([k, k[upper]])


def _upper_roots(ladder, limit):
    if limit > len(ladder):
        raise ValueError(f"{limit} roots needed but the ladder holds {len(ladder)}")
    z, k = ladder.roots
    return z[:limit], k[:limit]


def _others(ladder, n, limit):
    """Zeroes with upper index < limit, conjugates included, without root n itself."""
    z, k = _upper_roots(ladder, limit)
    own = z[n]
    rest_z = np.delete(z, n)
    rest_k = np.delete(k, n)
    full_z, full_k = _conjugate_closure(rest_z, rest_k)
    if own.imag != 0:
        full_z = np.append(full_z, own.conjugate())
        full_k = np.append(full_k, k[n])
    if full_z.size and np.min(np.abs(full_z - own)) < REPEATED_ROOT_TOLERANCE:
        raise RepeatedRoot(f"zero {own} at index {n} repeats within {REPEATED_ROOT_TOLERANCE}")
    return own, full_z, full_k


def _log_e_value(own, full_z, full_k, alpha0):
    """log of exp(−α0·z_n/2)/Π(1 − z_n/z_k)^{k_k}; the product itself under/overflows."""
    return -alpha0 * own / 2 - np.sum(full_k * np.log(1.0 - own / full_z))


def _log_coefficient_naive(ladder, alpha0, n, K):
    z, k = ladder.roots
    if k[n] != 1:
        raise RepeatedRoot(f"zero at index {n} has multiplicity {k[n]}; use double_root_coefficients")
    own, full_z, full_k = _others(ladder, n, n + K + 1)
    return complex(_log_e_value(own, full_z, full_k, alpha0))


def coefficients_naive(ladder, alpha0, n, K):
    """a_{n,1} from the product over the zeroes with index up to n + K."""
    return complex(np.exp(_log_coefficient_naive(ladder, alpha0, n, K)))


def _double_root_logs(ladder, alpha0, n, K):
    z, k = ladder.roots
    if k[n] > 2:
        raise Unsupported(f"zero at index {n} has multiplicity {k[n]}")
    own, full_z, full_k = _others(ladder, n, n + K + 1)
    upsilon = -alpha0 / 2 + np.sum(full_k / (full_z - own))
    return own, complex(upsilon), complex(_log_e_value(own, full_z, full_k, alpha0))


def double_root_coefficients(ladder, alpha0, n, K, log_divisor=0.0):
    """(a_{n,1}, a_{n,2}) for a zero of multiplicity 2, optionally divided by exp(log_divisor)."""
    own, upsilon, log_e = _double_root_logs(ladder, alpha0, n, K)
    e_value = np.exp(log_e - log_divisor)
    return complex(-own * e_value * upsilon), complex(e_value)


def _log_taylor_numerator(helper, anchor, own):
    t = helper.taylor(anchor, HELPER_TAYLOR_ORDER)
    delta = own - anchor
    return np.log(-anchor * (t[1] + t[2] * delta + t[3] * delta**2 + t[4] * delta**3))


def _log_tail_product(ladder, helper, n, k):
    """log of the helper estimate of Π over the zeroes beyond index n + k."""
    z_all, _ = ladder.roots
    own = z_all[n]
    last = n + k + 1 - ladder.n1
    ws = ladder.w[: max(last, 0)]
    if n >= ladder.n1:
        i = n - ladder.n1
        w_n = ladder.w[i]
        log_numerator = _log_taylor_numerator(helper, w_n, own)
        others = np.delete(ws, i)
        log_finite = np.sum(np.log(1.0 - own / others) + np.log(1.0 - own / others.conj()))
        log_finite += np.log(1.0 - own / w_n.conjugate())
        q = helper.prefactor(own)
    else:
        log_finite = np.sum(np.log(1.0 - own / ws) + np.log(1.0 - own / ws.conj()))
        match = helper.prefactor.nearest_zero(own)
        if match is None:
            log_numerator = np.log(helper.evaluate(own))
            q = helper.prefactor(own)
        else:
            # the origin zero is shared with q: cancel the common factor through H's Taylor series
            u = helper.prefactor.zeros[match]
            log_numerator = _log_taylor_numerator(helper, u, own)
            q = helper.prefactor.without(match)(own)
    return complex(log_numerator - helper.alpha0 * own / 2 - np.log(q) - log_finite)


def coefficients_telescoped(ladder, helper, alpha0, n, k, self_test=False, reference_terms=5000):
    """
    a_{n,1} from the finite product to index n + k divided by the helper's estimate of the
    remaining infinite product; the division is done on logarithms.
    """
    log_estimate = _log_coefficient_naive(ladder, alpha0, n, k) - _log_tail_product(ladder, helper, n, k)
    estimate = complex(np.exp(log_estimate))
    if self_test:
        reference = coefficients_naive(ladder, alpha0, n, min(reference_terms, len(ladder) - n - 1))
        if abs(1.0 - estimate / reference) > 1e-3:
            raise HelperMismatch(f"telescoped coefficient {estimate} disagrees with {reference} at index {n}")
    return estimate


@dataclass(frozen=True)
class SpectralExpansion:
    """
    Upper-half-plane zeroes z_n with multiplicities and coefficients a_{n,1}, a_{n,2};
    the coefficients of conjugate zeroes are the conjugates.
    """

    alpha0: float
    z: np.ndarray
    multiplicity: np.ndarray
    a: np.ndarray
    idle: float
    telescope: int = None

    def __len__(self):
        return len(self.z)


def build_expansion(model, helper, ladder, terms=TAIL_TERMS, telescope=TELESCOPE_TERMS, naive_terms=None):
    """
    Coefficients for the first ``terms`` upper-half-plane zeroes (indices 0..terms−1);
    telescoped over ``telescope`` extra zeroes, or from the plain product over
    ``naive_terms`` extra zeroes when telescope is None.
    """
    extra = telescope if telescope is not None else naive_terms
    if extra is None:
        raise ValueError("either telescope or naive_terms is required")
    needed = terms + extra
    if len(ladder) < needed:
        ladder = extend_ladder(ladder, model, helper, needed - len(ladder))
    z, k = ladder.roots
    a = np.zeros((terms, 2), dtype=complex)
    for n in range(terms):
        if k[n] == 2:
            divisor = _log_tail_product(ladder, helper, n, extra) if telescope is not None else 0.0
            a[n] = double_root_coefficients(ladder, helper.alpha0, n, extra, log_divisor=divisor)
        elif telescope is not None:
            a[n, 0] = coefficients_telescoped(ladder, helper, helper.alpha0, n, extra)
        else:
            a[n, 0] = coefficients_naive(ladder, helper.alpha0, n, extra)
    if not np.all(np.isfinite(a)):
        raise CoefficientOverflow(f"non-finite coefficient at index {int(np.argmin(np.isfinite(a).all(axis=1)))}")
    idle = idle_probability(ladder, helper)
    logger.debug(f"expansion over {terms} zero(s), {extra} extra, telescoped={telescope is not None}")
    return SpectralExpansion(
        alpha0=helper.alpha0,
        z=z[:terms],
        multiplicity=k[:terms],
        a=a,
        idle=idle,
        telescope=telescope,
    )


def _weights(z):
    """1 for real zeroes, 2 for a zero standing in for its conjugate pair."""
    return np.where(np.abs(z.imag) > 0, 2.0, 1.0)


def _check_real(value, what):
    leak = abs(value.imag)
    if leak > IMAGINARY_LIMIT:
        raise ImaginaryLeak(f"{what} has imaginary part {leak:.3g}")
    if leak > IMAGINARY_WARNING:
        logger.warning(f"{what} has imaginary part {leak:.3g}")


def _real_sum(contributions, z):
    real_mask = np.abs(z.imag) == 0
    _check_real(np.sum(contributions[real_mask]), "real-zero contribution")
    return float(np.sum(_weights(z) * contributions.real))


def tail_probability(expansion, t, terms=None):
    """P(W > t); t = 0 is answered by the idle-probability complement."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0:
        return 1.0 - expansion.idle
    count = len(expansion) if terms is None else min(terms, len(expansion))
    z = expansion.z[:count]
    a = expansion.a[:count]
    base = np.exp(z * t)
    contributions = a[:, 0] * base + a[:, 1] * base * (1.0 - t * z)
    return _real_sum(contributions, z)


def psi_partial_fractions(expansion, theta, terms=None):
    """ψ(θ) = 1 + Σ a_{n,j}((1 − θ/z_n)^{−j} − 1) for real θ."""
    count = len(expansion) if terms is None else min(terms, len(expansion))
    z = expansion.z[:count]
    a = expansion.a[:count]
    ratio = 1.0 / (1.0 - theta / z)
    contributions = a[:, 0] * (ratio - 1.0) + a[:, 1] * (ratio**2 - 1.0)
    return 1.0 + _real_sum(contributions, z)


def psi_direct_md1(lam, theta):
    """Workload transform of M/D/1 with unit service from the Pollaczek–Khinchine formula."""
    if theta == 0:
        return 1.0
    return (1.0 - lam) * theta / (theta - lam + lam * math.exp(-theta))


def idle_probability(ladder, helper, terms=None):
    """
    P(W = 0) from the limit of the helper prefactor and the product of |z_k|²/|w_k|².
    """
    count = len(ladder.z) if terms is None else min(terms, len(ladder.z))
    origin = [z for r in ladder.origin for z in ([r.z, r.z.conjugate()] if r.z.imag else [r.z]) for _ in range(r.multiplicity)]
    found = len(origin)
    helper.check_origin_count(found)
    limit = helper.prefactor.limit_factor()
    for z in origin:
        limit /= -1.0 / z
    ratio = np.prod(np.abs(ladder.z[:count]) ** 2 / np.abs(ladder.w[:count]) ** 2)
    value = -limit * ratio
    _check_real(complex(value), "idle probability")
    value = float(np.real(value))
    if not -1e-9 <= value <= 1.0 + 1e-6:
        raise NonProbability(f"idle probability {value} is not a probability")
    return value


def _power_sums(ladder, j, split):
    """Σ z^{−j} over the zeroes with index < split, conjugates included."""
    z, k = _upper_roots(ladder, split)
    return complex(np.sum(_weights(z) * k * (z ** (-j)).real))


def helper_power_sum(helper, j):
    """Σ over every helper zero w_k (k ≥ n0, conjugates included) of w^{−j}."""
    nu, leading = helper.origin_order
    coef = helper.origin_series[nu:] / leading
    logs = series.log_coefficients(coef, j)
    delta = helper.alpha0 / 2 if j == 1 else 0.0
    zeros = np.asarray(helper.prefactor.zeros, dtype=complex)
    return complex(delta - j * logs[j] - np.sum(zeros ** (-j)))


def cumulants(ladder, helper, alpha0, j, n_split=CUMULANT_SPLIT, telescoped=True):
    """
    κ_j from the power sums of the zeroes below ``n_split``, plus the helper's telescoped
    estimate of the rest when ``telescoped``.
    """
    if j < 1:
        raise ValueError(f"cumulant order must be positive, got {j}")
    if telescoped and n_split < ladder.n1:
        raise ValueError(f"split {n_split} falls inside the origin zeroes (n0 = {ladder.n1})")
    total = _power_sums(ladder, j, n_split)
    if telescoped:
        ws = ladder.w[: n_split - ladder.n1]
        partial = complex(np.sum(2.0 * (ws ** (-j)).real))
        total += helper_power_sum(helper, j) - partial
    _check_real(complex(total), f"cumulant {j}")
    value = math.factorial(j - 1) * (-1) ** j * total.real
    if j == 1:
        value += alpha0 / 2
    return float(value)


def moments_from_cumulants(k1, k2, k3):
    return k1, k2 + k1**2, k3 + 3 * k1 * k2 + k1**3


def cumulants_from_moments(m1, m2, m3):
    return m1, m2 - m1**2, m3 - 3 * m1 * m2 + 2 * m1**3


def moments_spectral(expansion, nu, terms=None):
    """E[W^ν] = (−1)^ν Σ a_{n,j} z_n^{−ν} (ν+j−1)!/(j−1)!."""
    if nu < 1:
        raise ValueError(f"moment order must be positive, got {nu}")
    count = len(expansion) if terms is None else min(terms, len(expansion))
    z = expansion.z[:count]
    a = expansion.a[:count]
    contributions = (a[:, 0] * math.factorial(nu) + a[:, 1] * math.factorial(nu + 1)) * z ** (-nu)
    return (-1) ** nu * _real_sum(contributions, z)


def euler_omega(b):
    """Σ_{j≥1} 1/(b² + 4π²j²)."""
    if abs(b) < 1e-3:
        return 1.0 / 24 - b * b / 1440
    half = b / 2
    return (half / math.tanh(half) - 1.0) / (2 * b * b)


def euler_sum(b):
    """Σ_{j≥1} 1/(b² + j²)."""
    if abs(b) < 1e-3:
        return math.pi**2 / 6 - b * b * math.pi**4 / 90
    x = b * math.pi
    return (x / math.tanh(x) - 1.0) / (2 * b * b)


@dataclass(frozen=True)
class EulerTools:
    omega: float
    tail_product: float


def euler_tools(b, n, weight=1.0):
    """
    Ω(b) and the telescoped product Π_{j≥n}(1 + weight/(b² + 4π²j²)) ≈
    exp(weight·(Ω(b) − Σ_{1≤j<n} 1/(b² + 4π²j²))).
    """
    if not b > 0:
        raise ValueError(f"b must be positive, got {b}")
    omega = euler_omega(b)
    j = np.arange(1, max(n, 1))
    partial = float(np.sum(1.0 / (b * b + 4 * math.pi**2 * j**2)))
    return EulerTools(omega, math.exp(weight * (omega - partial)))
