"""
Interarrival and service distributions, their Laplace transforms, and the
exponential-term decomposition of F(θ) = B(θ)A(−θ) − 1.

Every distribution except the gated Poisson batch is a finite sum of terms
exp(αθ)·N(θ)/(θ^K·P(θ)) with polynomial N and P; the decomposition of F is built
by multiplying those term lists rather than by symbolic manipulation.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import groupby

import numpy as np
from numpy.polynomial import Polynomial

from . import series
from .exceptions import InvalidModel, NonAnalytic, PoleEvaluation, Unsupported

logger = logging.getLogger(__name__)

# |θ|·(support width) below which the removable singularity at 0 is expanded in series
SERIES_SWITCH = 1e-3
SERIES_TERMS = 8
# polynomial densities switch to their moment series below this |θ|·(support width)
POLYNOMIAL_SERIES_SWITCH = 1.0
POLYNOMIAL_SERIES_TERMS = 30
COEFFICIENT_FLOOR = 1e-14
ALPHA_TOLERANCE = 1e-12
DENSITY_CHECK_POINTS = 1001
NORMALISATION_TOLERANCE = 1e-12


def _reflect(poly):
    """poly(−θ) as a polynomial in θ."""
    coef = np.asarray(poly.coef, dtype=complex)
    return Polynomial(coef * (-1.0) ** np.arange(len(coef)))


def _clean(poly):
    coef = np.asarray(poly.coef, dtype=complex)
    if np.all(np.abs(coef.imag) <= COEFFICIENT_FLOOR * max(1.0, np.max(np.abs(coef)))):
        coef = coef.real
    return series.trim(Polynomial(coef), COEFFICIENT_FLOOR)


def _check_pole(theta, pole):
    if np.any(np.abs(np.asarray(theta) - pole) <= 1e-14 * max(1.0, abs(pole))):
        raise PoleEvaluation(f"transform evaluated at its pole {pole}")


@dataclass(frozen=True)
class ExpTerm:
    """
    One term exp(αθ)·N(θ)/(θ^K·P(θ)).

    ``k`` is the order of decay at infinity, K + deg P − deg N, and ``phi`` the power
    series of θ^k·N(θ)/(θ^K·P(θ)) in 1/θ.
    """

    alpha: float
    numerator: Polynomial
    pole_order: int = 0
    denominator: Polynomial = field(default_factory=lambda: Polynomial([1.0]))

    @property
    def k(self):
        return self.pole_order + self.denominator.degree() - self.numerator.degree()

    @property
    def leading(self):
        """The constant c_j = φ_0 of the term."""
        return self.numerator.coef[-1] / self.denominator.coef[-1]

    @property
    def is_polynomial_in_inverse(self):
        return self.denominator.degree() == 0

    def _q(self, theta):
        return theta**self.pole_order * self.denominator(theta)

    def evaluate(self, theta):
        q = self._q(theta)
        if np.any(q == 0):
            raise PoleEvaluation(f"exponential term evaluated at a pole ({theta})")
        return np.exp(self.alpha * theta) * self.numerator(theta) / q

    def derivative(self, theta):
        n = self.numerator(theta)
        dn = self.numerator.deriv()(theta)
        d = self.denominator(theta)
        dd = self.denominator.deriv()(theta)
        big_k = self.pole_order
        q = theta**big_k * d
        if np.any(q == 0):
            raise PoleEvaluation(f"exponential term evaluated at a pole ({theta})")
        dq = theta**big_k * dd
        if big_k:
            dq = dq + big_k * theta ** (big_k - 1) * d
        return np.exp(self.alpha * theta) * (self.alpha * n / q + (dn * q - n * dq) / q**2)

    def taylor(self, theta0, order):
        """Taylor coefficients about theta0, which must not be a pole."""
        n = series.shifted(self.numerator, theta0)
        q = series.shifted(Polynomial([0.0, 1.0]) ** self.pole_order * self.denominator, theta0)
        ratio = series.div(n.coef, q.coef, order)
        expo = series.exp_series(self.alpha, order) * np.exp(self.alpha * theta0)
        return series.mul(expo, ratio, order)

    def phi(self, order):
        """Coefficients φ_0..φ_order of Φ(1/θ)."""
        return series.div(
            series.reversed_coefficients(self.numerator),
            series.reversed_coefficients(self.denominator),
            order,
        )

    def truncated(self, order):
        """The term with Φ replaced by its first ``order + 1`` coefficients."""
        phi = self.phi(order)
        if np.all(np.abs(phi.imag) < COEFFICIENT_FLOOR):
            phi = phi.real
        # exp(αθ)·Σ φ_i θ^(−k−i) = exp(αθ)·(Σ φ_i θ^(order−i)) / θ^(k+order)
        return ExpTerm(self.alpha, _clean(Polynomial(phi[::-1])), self.k + order)

    def reflected(self):
        """The same term as a function of −θ."""
        sign = (-1.0) ** self.pole_order
        return ExpTerm(
            -self.alpha + 0.0,
            _reflect(self.numerator) * sign,
            self.pole_order,
            _reflect(self.denominator),
        )

    def scaled(self, weight):
        return ExpTerm(self.alpha, self.numerator * weight, self.pole_order, self.denominator)

    def __mul__(self, other):
        return ExpTerm(
            self.alpha + other.alpha,
            self.numerator * other.numerator,
            self.pole_order + other.pole_order,
            self.denominator * other.denominator,
        )

    def poles(self):
        """Finite non-zero poles as (location, order) pairs."""
        if self.denominator.degree() == 0:
            return []
        roots = np.sort_complex(self.denominator.roots())
        return _group_roots(roots)


def _group_roots(roots, tol=1e-7):
    grouped = []
    for root in roots:
        for i, (location, order) in enumerate(grouped):
            if abs(root - location) <= tol * max(1.0, abs(location)):
                grouped[i] = (location, order + 1)
                break
        else:
            grouped.append((root, 1))
    return [(complex(location).real if abs(complex(location).imag) < tol else complex(location), order)
            for location, order in grouped]


def _combine(first, second):
    """Sum of two terms sharing the same exponent."""
    big_k = max(first.pole_order, second.pole_order)
    x = Polynomial([0.0, 1.0])
    lift_first = x ** (big_k - first.pole_order)
    lift_second = x ** (big_k - second.pole_order)
    same_denominator = len(first.denominator.coef) == len(second.denominator.coef) and np.allclose(
        first.denominator.coef, second.denominator.coef, rtol=1e-13, atol=0.0
    )
    if same_denominator:
        numerator = first.numerator * lift_first + second.numerator * lift_second
        denominator = first.denominator
    else:
        numerator = (
            first.numerator * lift_first * second.denominator
            + second.numerator * lift_second * first.denominator
        )
        denominator = first.denominator * second.denominator
    return ExpTerm(first.alpha, numerator, big_k, denominator)


def _normalise(term):
    """Trim negligible coefficients and cancel common powers of θ; None if the term vanishes."""
    coef = np.asarray(term.numerator.coef)
    if coef.size == 0 or np.all(np.abs(coef) <= COEFFICIENT_FLOOR * max(1.0, np.max(np.abs(term.denominator.coef)))):
        return None
    numerator = _clean(term.numerator)
    coef = np.asarray(numerator.coef)
    scale = max(1.0, np.max(np.abs(coef)))
    pole_order = term.pole_order
    while pole_order > 0 and len(coef) > 1 and abs(coef[0]) <= COEFFICIENT_FLOOR * scale:
        coef = coef[1:]
        pole_order -= 1
    return ExpTerm(term.alpha, Polynomial(coef), pole_order, _clean(term.denominator))


def merge_terms(terms):
    """Merge terms with equal exponents, drop vanishing ones, sort by exponent."""
    ordered = sorted(terms, key=lambda t: t.alpha)
    merged = []
    for _, group in groupby(ordered, key=lambda t: round(t.alpha / ALPHA_TOLERANCE) * ALPHA_TOLERANCE):
        group = list(group)
        total = group[0]
        for term in group[1:]:
            total = _combine(total, term)
        total = _normalise(total)
        if total is not None:
            merged.append(total)
    return tuple(merged)


class TransformSpec:
    """
    A distribution on [0, ∞) described through its Laplace transform E[exp(−θX)].
    """

    kind = None

    def evaluate(self, theta):
        raise NotImplementedError

    def derivative(self, theta):
        raise NotImplementedError

    @property
    def mean(self):
        raise NotImplementedError

    def terms(self):
        raise NotImplementedError

    def poles(self):
        return []

    def sample(self, rng, size):
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Deterministic(TransformSpec):
    d: float
    kind = "deterministic"

    def __post_init__(self):
        if not self.d >= 0:
            raise InvalidModel(f"deterministic time must be nonnegative, got {self.d}")

    def evaluate(self, theta):
        return np.exp(-self.d * np.asarray(theta, dtype=complex))

    def derivative(self, theta):
        return -self.d * self.evaluate(theta)

    @property
    def mean(self):
        return float(self.d)

    def terms(self):
        return (ExpTerm(-self.d + 0.0, Polynomial([1.0])),)

    def sample(self, rng, size):
        return np.full(size, float(self.d))

    def describe(self):
        return f"deterministic {self.d:g}"


@dataclass(frozen=True)
class Exponential(TransformSpec):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidModel(f"exponential rate must be positive, got {self.rate}")

    def evaluate(self, theta):
        _check_pole(theta, -self.rate)
        return self.rate / (self.rate + np.asarray(theta, dtype=complex))

    def derivative(self, theta):
        _check_pole(theta, -self.rate)
        return -self.rate / (self.rate + np.asarray(theta, dtype=complex)) ** 2

    @property
    def mean(self):
        return 1.0 / self.rate

    def terms(self):
        return (ExpTerm(0.0, Polynomial([self.rate]), 0, Polynomial([self.rate, 1.0])),)

    def poles(self):
        return [(-self.rate, 1)]

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def describe(self):
        return f"exponential {self.rate:g}"


@dataclass(frozen=True)
class Erlang(TransformSpec):
    shape: int
    rate: float
    kind = "erlang"

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise InvalidModel(f"erlang shape must be a positive integer, got {self.shape}")
        if not self.rate > 0:
            raise InvalidModel(f"erlang rate must be positive, got {self.rate}")

    def evaluate(self, theta):
        _check_pole(theta, -self.rate)
        return (self.rate / (self.rate + np.asarray(theta, dtype=complex))) ** self.shape

    def derivative(self, theta):
        _check_pole(theta, -self.rate)
        theta = np.asarray(theta, dtype=complex)
        return -self.shape * self.rate**self.shape / (self.rate + theta) ** (self.shape + 1)

    @property
    def mean(self):
        return self.shape / self.rate

    def terms(self):
        return (
            ExpTerm(
                0.0,
                Polynomial([self.rate**self.shape]),
                0,
                Polynomial([self.rate, 1.0]) ** int(self.shape),
            ),
        )

    def poles(self):
        return [(-self.rate, int(self.shape))]

    def sample(self, rng, size):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def describe(self):
        return f"erlang {int(self.shape)} {self.rate:g}"


def _difference_quotient(x):
    """(1 − exp(−x))/x and its derivative, with the series form near 0."""
    x = np.asarray(x, dtype=complex)
    flat = np.atleast_1d(x).ravel()
    small = np.abs(flat) < SERIES_SWITCH
    safe = np.where(small, 1.0, flat)
    value = (1.0 - np.exp(-safe)) / safe
    slope = (np.exp(-safe) * (1.0 + safe) - 1.0) / safe**2
    if np.any(small):
        k = np.arange(SERIES_TERMS)
        factorials = np.array([math.factorial(i + 1) for i in k], dtype=float)
        xs = flat[small][:, None]
        value[small] = np.sum((-xs) ** k / factorials, axis=-1)
        slope[small] = np.sum(k[1:] * (-1.0) ** k[1:] * xs ** (k[1:] - 1) / factorials[1:], axis=-1)
    return value.reshape(x.shape), slope.reshape(x.shape)


@dataclass(frozen=True)
class Uniform(TransformSpec):
    lo: float
    hi: float
    kind = "uniform"

    def __post_init__(self):
        if not 0 <= self.lo < self.hi:
            raise InvalidModel(f"uniform needs 0 <= lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self):
        return self.hi - self.lo

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=complex)
        value, _ = _difference_quotient(self.width * theta)
        return np.exp(-self.lo * theta) * value

    def derivative(self, theta):
        theta = np.asarray(theta, dtype=complex)
        value, slope = _difference_quotient(self.width * theta)
        return np.exp(-self.lo * theta) * (-self.lo * value + self.width * slope)

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def terms(self):
        w = self.width
        return (
            ExpTerm(-self.lo + 0.0, Polynomial([1.0 / w]), 1),
            ExpTerm(-self.hi + 0.0, Polynomial([-1.0 / w]), 1),
        )

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size)

    def describe(self):
        return f"uniform {self.lo:g} {self.hi:g}"


def _polynomial_laplace(poly, p0, p1, theta, moments):
    """∫_{p0}^{p1} exp(−θx) poly(x) dx, by moment series near 0 and by parts elsewhere."""
    theta = np.asarray(theta, dtype=complex)
    width = p1 - p0
    small = np.abs(theta) * width < POLYNOMIAL_SERIES_SWITCH
    out = np.zeros(theta.shape, dtype=complex)
    if np.any(small):
        ts = theta[small] if theta.ndim else theta
        k = np.arange(len(moments))
        factorials = np.array([math.factorial(i) for i in k], dtype=float)
        terms = (-np.asarray(ts)[..., None]) ** k * moments / factorials
        values = np.exp(-p0 * ts) * np.sum(terms, axis=-1)
        if theta.ndim:
            out[small] = values
        else:
            out = np.asarray(values)
    if np.any(~small):
        tl = theta[~small] if theta.ndim else theta
        acc = np.zeros(np.shape(tl), dtype=complex)
        derivative = poly
        power = 1
        while True:
            acc = acc + (np.exp(-tl * p0) * derivative(p0) - np.exp(-tl * p1) * derivative(p1)) / tl**power
            if derivative.degree() == 0:
                break
            derivative = derivative.deriv()
            power += 1
        if theta.ndim:
            out[~small] = acc
        else:
            out = np.asarray(acc)
    return out if theta.ndim else complex(out)


def _shifted_moments(poly, p0, p1, count):
    """∫_0^w u^k poly(u + p0) du for k < count."""
    shifted = poly(Polynomial([p0, 1.0]))
    width = p1 - p0
    u = Polynomial([0.0, 1.0])
    moments = []
    for k in range(count):
        integral = (u**k * shifted).integ()
        moments.append(integral(width) - integral(0.0))
    return np.array(moments, dtype=float)


@dataclass(frozen=True)
class PolynomialDensity(TransformSpec):
    """Density Σ c_i x^i on [p0, p1] (coefficients in ascending powers of x)."""

    p0: float
    p1: float
    coeffs: tuple
    kind = "polydensity"

    def __post_init__(self):
        if not 0 <= self.p0 < self.p1:
            raise InvalidModel(f"polynomial density needs 0 <= p0 < p1, got [{self.p0}, {self.p1}]")
        if not len(self.coeffs):
            raise InvalidModel("polynomial density needs at least one coefficient")
        grid = np.linspace(self.p0, self.p1, DENSITY_CHECK_POINTS)
        if np.min(self.density(grid)) < -NORMALISATION_TOLERANCE:
            raise InvalidModel("polynomial density is negative somewhere on its support")
        total = self.polynomial.integ()
        mass = total(self.p1) - total(self.p0)
        if abs(mass - 1.0) > NORMALISATION_TOLERANCE:
            raise InvalidModel(f"polynomial density integrates to {mass!r}, not 1")

    @cached_property
    def polynomial(self):
        return Polynomial(np.asarray(self.coeffs, dtype=float))

    @cached_property
    def _moments(self):
        return _shifted_moments(self.polynomial, self.p0, self.p1, POLYNOMIAL_SERIES_TERMS)

    @cached_property
    def _first_moment_polynomial(self):
        return Polynomial([0.0, 1.0]) * self.polynomial

    @cached_property
    def _first_moments(self):
        return _shifted_moments(self._first_moment_polynomial, self.p0, self.p1, POLYNOMIAL_SERIES_TERMS)

    def density(self, x):
        return self.polynomial(x)

    def evaluate(self, theta):
        return _polynomial_laplace(self.polynomial, self.p0, self.p1, theta, self._moments)

    def derivative(self, theta):
        return -_polynomial_laplace(
            self._first_moment_polynomial, self.p0, self.p1, theta, self._first_moments
        )

    @property
    def mean(self):
        integral = self._first_moment_polynomial.integ()
        return float(integral(self.p1) - integral(self.p0))

    def terms(self):
        degree = self.polynomial.degree()
        derivatives = [self.polynomial.deriv(i) for i in range(degree + 1)]
        at_start = Polynomial([derivatives[degree - j](self.p0) for j in range(degree + 1)])
        at_end = Polynomial([-derivatives[degree - j](self.p1) for j in range(degree + 1)])
        return (
            ExpTerm(-self.p0 + 0.0, at_start, degree + 1),
            ExpTerm(-self.p1 + 0.0, at_end, degree + 1),
        )

    @cached_property
    def _envelope(self):
        critical = [
            r.real
            for r in self.polynomial.deriv().roots()
            if abs(r.imag) < 1e-12 and self.p0 <= r.real <= self.p1
        ] if self.polynomial.degree() > 0 else []
        points = np.array([self.p0, self.p1, *critical])
        return float(np.max(self.density(points)))

    def sample(self, rng, size):
        out = np.empty(size)
        filled = 0
        while filled < size:
            batch = max(2 * (size - filled), 64)
            x = rng.uniform(self.p0, self.p1, batch)
            accept = x[rng.uniform(0.0, self._envelope, batch) <= self.density(x)]
            take = min(len(accept), size - filled)
            out[filled : filled + take] = accept[:take]
            filled += take
        return out

    def describe(self):
        return f"polydensity {self.p0:g} {self.p1:g} : " + " ".join(f"{c:g}" for c in self.coeffs)


@dataclass(frozen=True)
class Mixture(TransformSpec):
    weights: tuple
    components: tuple
    kind = "mixture"

    def __post_init__(self):
        if len(self.weights) != len(self.components) or not self.components:
            raise InvalidModel("mixture needs one weight per component")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > NORMALISATION_TOLERANCE:
            raise InvalidModel(f"mixture weights must be nonnegative and sum to 1, got {self.weights}")

    def evaluate(self, theta):
        return sum(w * c.evaluate(theta) for w, c in zip(self.weights, self.components))

    def derivative(self, theta):
        return sum(w * c.derivative(theta) for w, c in zip(self.weights, self.components))

    @property
    def mean(self):
        return sum(w * c.mean for w, c in zip(self.weights, self.components))

    def terms(self):
        return merge_terms(
            term.scaled(w) for w, c in zip(self.weights, self.components) for term in c.terms()
        )

    def poles(self):
        found = {}
        for component in self.components:
            for location, order in component.poles():
                found[location] = max(order, found.get(location, 0))
        return sorted(found.items(), key=lambda item: complex(item[0]).real)

    def sample(self, rng, size):
        choice = rng.choice(len(self.components), size=size, p=np.asarray(self.weights, dtype=float))
        out = np.empty(size)
        for i, component in enumerate(self.components):
            mask = choice == i
            out[mask] = component.sample(rng, int(mask.sum()))
        return out

    def describe(self):
        return "mixture " + " | ".join(f"{w:g} {c.describe()}" for w, c in zip(self.weights, self.components))


@dataclass(frozen=True)
class GatedPoissonBatch(TransformSpec):
    """Work admitted at a gate: a Poisson(λ) number of per-customer requirements."""

    arrival_rate: float
    per_customer: TransformSpec
    kind = "gated"

    def __post_init__(self):
        if not self.arrival_rate >= 0:
            raise InvalidModel(f"arrival rate must be nonnegative, got {self.arrival_rate}")

    def _inner(self, theta):
        try:
            return self.per_customer.evaluate(theta)
        except PoleEvaluation as exc:
            raise NonAnalytic(f"essential singularity of the batch transform at {theta}") from exc

    def evaluate(self, theta):
        lam = self.arrival_rate
        return np.exp(-lam + lam * self._inner(theta))

    def derivative(self, theta):
        return self.arrival_rate * self.per_customer.derivative(theta) * self.evaluate(theta)

    @property
    def mean(self):
        return self.arrival_rate * self.per_customer.mean

    def terms(self):
        raise Unsupported("gated Poisson batches have no finite exponential-term decomposition")

    def singularities(self):
        return [location for location, _ in self.per_customer.poles()]

    def sample(self, rng, size):
        counts = rng.poisson(self.arrival_rate, size)
        draws = self.per_customer.sample(rng, int(counts.sum()))
        owners = np.repeat(np.arange(size), counts)
        return np.bincount(owners, weights=draws, minlength=size)

    def describe(self):
        return f"gated {self.arrival_rate:g} {self.per_customer.describe()}"


@dataclass(frozen=True)
class ExponentDecomposition:
    """
    F(θ) = Σ_j exp(α_jθ)Φ_j(1/θ)θ^(−k_j) − 1 with the terms sorted by α_j.
    """

    terms: tuple

    @property
    def alphas(self):
        return tuple(t.alpha for t in self.terms)

    @property
    def alpha0(self):
        return self.terms[0].alpha

    @property
    def jp(self):
        return sum(1 for t in self.terms if t.alpha <= 0) - 1

    @property
    def left_terms(self):
        return tuple(t for t in self.terms if t.alpha <= 0)

    @property
    def right_terms(self):
        return tuple(t for t in self.terms if t.alpha > 0)

    @property
    def kappa_p(self):
        right = self.right_terms
        return min(t.k for t in right) if right else None

    def evaluate(self, theta):
        return sum(t.evaluate(theta) for t in self.terms) - 1.0

    def derivative(self, theta):
        return sum(t.derivative(theta) for t in self.terms)

    def magnitude(self, theta):
        return sum(abs(t.evaluate(theta)) for t in self.terms) + 1.0


@dataclass(frozen=True)
class QueueModel:
    interarrival: TransformSpec
    service: TransformSpec
    name: str = ""

    def __post_init__(self):
        if not self.rho < 1:
            raise InvalidModel(f"unstable queue: traffic intensity {self.rho:.6g} >= 1")

    @property
    def rho(self):
        return self.service.mean / self.interarrival.mean

    def F(self, theta, order=0):
        theta = np.asarray(theta, dtype=complex)
        if order == 0:
            return self.service.evaluate(theta) * self.interarrival.evaluate(-theta) - 1.0
        if order == 1:
            return self.service.derivative(theta) * self.interarrival.evaluate(
                -theta
            ) - self.service.evaluate(theta) * self.interarrival.derivative(-theta)
        raise ValueError(f"order must be 0 or 1, got {order}")

    def left_poles(self):
        """Poles of F with negative real part: those of the service transform."""
        return [(p, o) for p, o in self.service.poles() if complex(p).real < 0]

    @cached_property
    def decomposition(self):
        return decompose_F(self)

    def magnitude(self, theta):
        """Size of the summands of F, used to normalise residuals."""
        try:
            return self.decomposition.magnitude(theta)
        except Unsupported:
            return abs(self.service.evaluate(theta) * self.interarrival.evaluate(-theta)) + 1.0


def eval_transform(spec, theta, order=0):
    """E[exp(−θX)] (order 0) or its derivative (order 1)."""
    if order == 0:
        return spec.evaluate(theta)
    if order == 1:
        return spec.derivative(theta)
    raise ValueError(f"order must be 0 or 1, got {order}")


def eval_F(model, theta, order=0):
    return model.F(theta, order)


def decompose_F(model):
    service_terms = model.service.terms()
    arrival_terms = [t.reflected() for t in model.interarrival.terms()]
    terms = merge_terms(s * a for s in service_terms for a in arrival_terms)
    if not terms or max(t.k for t in terms) < 1:
        raise Unsupported("F has no decaying exponential term (degenerate, e.g. D/D/1)")
    if terms[0].alpha >= 0:
        raise Unsupported("F has no exponential term with a negative exponent")
    logger.debug(
        f"decomposed F of {model.name or 'model'}: "
        + ", ".join(f"(alpha={t.alpha:g}, k={t.k})" for t in terms)
    )
    return ExponentDecomposition(terms)
