"""
Time-gated M/M/1: Poisson arrivals admitted only at the end of each unit interval,
exponential service. Every zero of F is known in closed form, so the spectral expansion
needs no root search.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidModel, NonProbability
from .spectral import euler_omega
from .transforms import Deterministic, Exponential, GatedPoissonBatch, QueueModel

logger = logging.getLogger(__name__)

GATED_TERMS = 60
GATED_FACTORS = 2000
MEAN_TERMS = 1000


@dataclass(frozen=True)
class GatedModel:
    lam: float
    mu: float

    def __post_init__(self):
        if not 0 <= self.lam < self.mu:
            raise InvalidModel(f"gated M/M/1 needs 0 <= lambda < mu, got {self.lam}, {self.mu}")

    @property
    def rho(self):
        return self.lam / self.mu

    @property
    def a(self):
        """λ² + 2λμ."""
        return self.lam**2 + 2 * self.lam * self.mu

    def as_queue_model(self):
        """The equivalent D/G/1 queue: unit gate intervals, Poisson batches of work."""
        return QueueModel(
            Deterministic(1.0),
            GatedPoissonBatch(self.lam, Exponential(self.mu)),
            name=f"gated M/M/1 lambda={self.lam:g} mu={self.mu:g}",
        )

    def F_derivative_factor(self, s):
        """F′(s) at a zero s of F: 1 − ρ(1 + s/μ)^(−2)."""
        return 1.0 - self.rho * (1.0 + s / self.mu) ** (-2)


def root_arrays(model, count):
    """(r_n, s_n) for n = 1..count, vectorised form of ``rootfinder.gated_roots``."""
    lam, mu = model.lam, model.mu
    n = np.arange(1, count + 1)
    b = n * math.pi
    center = (lam - mu) / 2 + 1j * b
    root = np.sqrt(((lam - mu) ** 2 / 4 - b * b) + 1j * (mu + lam) * b)
    return center + root, center - root


def _euler_tails(model, factors):
    n = np.arange(1, factors + 1)
    four_pi_sq = 4 * math.pi**2 * n**2
    first = euler_omega(model.lam) - np.sum(1.0 / (model.lam**2 + four_pi_sq)) if model.lam else 0.0
    second = euler_omega(math.sqrt(model.a)) - np.sum(1.0 / (four_pi_sq + model.a)) if model.lam else 0.0
    return first, second


def chi(model, theta, factors=GATED_FACTORS):
    """χ(θ) = (1−ρ)exp(θ/2)Π_n(1 − θ/r_n)(1 − θ/r̄_n), completed beyond ``factors``."""
    theta = np.asarray(theta, dtype=complex)
    r, _ = root_arrays(model, factors)
    partial = np.prod((1.0 - theta[..., None] / r) * (1.0 - theta[..., None] / r.conj()), axis=-1)
    first, second = _euler_tails(model, factors)
    tail = np.exp(-2 * theta * model.lam * first + theta**2 * second)
    return (1.0 - model.rho) * np.exp(theta / 2) * partial * tail


def residues(model, terms=GATED_TERMS, factors=GATED_FACTORS):
    """(s_j, p_j) for the first ``terms`` residues, j = 0..terms−1; p_{−j} is the conjugate of p_j."""
    if terms < 1:
        raise ValueError(f"at least one residue is needed, got {terms}")
    _, s = root_arrays(model, terms - 1)
    s = np.concatenate([[complex(model.lam - model.mu)], s])
    p = -chi(model, s, factors) / model.F_derivative_factor(s)
    return s, p


def gated_tail(model, t, terms=GATED_TERMS, factors=GATED_FACTORS):
    """
    P(V > t) = Σ_{|j|<terms} p_j exp(s_j t).

    At t = 0 the series converges only conditionally; its truncation is not 1 − W0.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    s, p = residues(model, terms, factors)
    contributions = p * np.exp(s * t)
    value = contributions[0].real + 2.0 * np.sum(contributions[1:].real)
    logger.debug(f"gated tail at t={t}: {value:.9f} from {terms} residues")
    return float(value)


def gated_idle(model, factors=GATED_FACTORS):
    """
    W0 = (1−ρ)exp(λ/2)Π 4π²n²/|r_n|², the product finished by its Euler-telescoped tail.
    """
    if factors < 1:
        raise ValueError("at least one factor is needed")
    lam = model.lam
    if lam == 0:
        return 1.0
    r, _ = root_arrays(model, factors)
    n = np.arange(1, factors + 1)
    four_pi_sq = 4 * math.pi**2 * n**2
    partial = np.prod(four_pi_sq / np.abs(r) ** 2)
    half = lam / 2
    # Π_{n>K} 4π²n²/(λ²+4π²n²) exactly, divided by the exp-approximated extra factor
    shift_tail = (half / math.sinh(half)) / np.prod(four_pi_sq / (lam**2 + four_pi_sq))
    extra_tail = math.exp(2 * lam * model.mu * (euler_omega(lam) - np.sum(1.0 / (lam**2 + four_pi_sq))))
    value = float((1.0 - model.rho) * math.exp(half) * partial * shift_tail / extra_tail)
    if not 0.0 <= value <= 1.0:
        raise NonProbability(f"idle probability {value} is not a probability")
    return value


def gated_mean(model, m=MEAN_TERMS, method="viaS"):
    """−ψ′(0) from the s_n sum or the r_n sum, each with its Euler extrapolation."""
    lam, mu, rho = model.lam, model.mu, model.rho
    base = -rho / 2 + rho / (mu - lam)
    if lam == 0:
        return 0.0
    r, s = root_arrays(model, m)
    n = np.arange(1, m + 1)
    if method == "viaS":
        body = np.sum(2.0 * (1.0 / mu + 1.0 / s).real + lam / (2 * math.pi**2 * n**2))
        return float(base - body + lam / 12)
    if method == "viaR":
        body = np.sum(2.0 * r.real / np.abs(r) ** 2 - 2.0 * lam / (4 * math.pi**2 * n**2 + model.a))
        return float(base + body + 2 * lam * euler_omega(math.sqrt(model.a)))
    raise ValueError(f"method must be 'viaS' or 'viaR', got {method!r}")


def gated_psi(model, theta, factors=GATED_FACTORS):
    """ψ(θ) from its product form, truncated after ``factors`` conjugate pairs."""
    lam, mu, rho = model.lam, model.mu, model.rho
    theta = complex(theta)
    h0 = (1.0 - rho) / (1.0 - lam / (mu + theta))
    h1 = lam / 2 * (1.0 - mu / (mu + theta))
    r, s = root_arrays(model, factors)
    n = np.arange(1, factors + 1)
    upsilon = (theta + mu) / (theta - s) * (2j * math.pi * n) / r
    upsilon_conj = (theta + mu) / (theta - s.conj()) * (-2j * math.pi * n) / r.conj()
    return complex(h0 * np.exp(h1) * np.prod(upsilon * upsilon_conj))
