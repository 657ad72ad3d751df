"""
Independent reference values: the exact M/D/1 waiting-time law, a finite-queue Markov
chain for the gated M/M/1 queue and a Monte Carlo Lindley recursion for any model.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, lambertw
from scipy.stats import poisson

from .exceptions import InvalidModel, InvalidParameter, NoStationaryConvergence

logger = logging.getLogger(__name__)

MARKOV_QMAX = 200
MARKOV_QMAX_MIN = 50
MARKOV_TOL = 1e-10
MARKOV_MAX_ITER = 10000
SIMULATION_SEED = 20240601
SIMULATION_CHUNK = 1_000_000
SIMULATION_BATCHES = 20
WARMUP_FRACTION = 0.1


def takacs_md1_tail(lam, t):
    """
    P(V > t) for M/D/1 with unit service:
    1 − (1−λ)Σ_{n≤⌊t⌋} exp(−λ(n−t))(λ(n−t))^n/n!.
    """
    if not 0 < lam < 1:
        raise InvalidModel(f"M/D/1 needs 0 < lambda < 1, got {lam}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    n = np.arange(math.floor(t) + 1)
    x = lam * (t - n)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_magnitude = n * np.log(x) - gammaln(n + 1) + x
    log_magnitude = np.where((n == 0), x, log_magnitude)
    terms = np.where((x == 0) & (n > 0), 0.0, (-1.0) ** n * np.exp(log_magnitude))
    return float(1.0 - (1.0 - lam) * math.fsum(terms))


def lambert_md1_root(lam, branch=-1):
    """
    Zero λ + W_k(−λe^{−λ}) of the M/D/1 F: branch −1 is the negative real zero, branch
    k ≥ 1 a complex one (returned in the upper half-plane).
    """
    if not 0 < lam < 1:
        raise InvalidModel(f"M/D/1 needs 0 < lambda < 1, got {lam}")
    if branch == 0:
        raise ValueError("branch 0 gives the trivial zero at the origin")
    root = complex(lam + lambertw(-lam * math.exp(-lam), branch))
    if branch == -1:
        return root.real
    return root if root.imag >= 0 else root.conjugate()


@dataclass(frozen=True)
class MarkovResult:
    """Queue-length law just before a gate opens."""

    pi: np.ndarray
    mu: float
    iterations: int

    @property
    def mean(self):
        return float(np.dot(np.arange(len(self.pi)), self.pi) / self.mu)

    @property
    def idle(self):
        return float(self.pi[0])

    def tail(self, t):
        """P(V > t): each waiting customer holds an exponential amount of work."""
        k = np.arange(len(self.pi))
        if t == 0:
            return float(1.0 - self.pi[0])
        survival = np.where(k > 0, poisson.cdf(k - 1, self.mu * t), 0.0)
        return float(np.dot(self.pi, survival))


def _admission_matrix(lam, qmax):
    states = np.arange(qmax + 1)
    jumps = states[None, :] - states[:, None]
    matrix = np.where(jumps >= 0, poisson.pmf(np.maximum(jumps, 0), lam), 0.0)
    matrix[:, -1] += 1.0 - matrix.sum(axis=1)
    return matrix


def _service_matrix(mu, qmax):
    states = np.arange(qmax + 1)
    served = states[:, None] - states[None, :]
    matrix = np.where((served >= 0) & (states[None, :] > 0), poisson.pmf(np.maximum(served, 0), mu), 0.0)
    matrix[:, 0] = poisson.sf(states - 1, mu)
    return matrix


def gated_markov(model, qmax=MARKOV_QMAX, tol=MARKOV_TOL, max_iter=MARKOV_MAX_ITER):
    """
    Stationary law of the gate-epoch chain: admit a Poisson(λ) batch (lumped at qmax), then
    serve for one time unit.
    """
    if qmax < MARKOV_QMAX_MIN:
        raise InvalidParameter(f"qmax must be at least {MARKOV_QMAX_MIN}, got {qmax}")
    transition = _admission_matrix(model.lam, qmax) @ _service_matrix(model.mu, qmax)
    pi = np.zeros(qmax + 1)
    pi[0] = 1.0
    for iteration in range(1, max_iter + 1):
        updated = pi @ transition
        change = np.abs(updated - pi).sum()
        pi = updated
        if change < tol:
            logger.debug(f"markov chain settled after {iteration} steps (L1 change {change:.2e})")
            return MarkovResult(pi / pi.sum(), model.mu, iteration)
    raise NoStationaryConvergence(f"L1 change {change:.3g} still above {tol} after {max_iter} steps")


@dataclass(frozen=True)
class LindleyResult:
    grid: np.ndarray
    tail: np.ndarray
    tail_se: np.ndarray
    moments: np.ndarray
    moments_se: np.ndarray
    n_customers: int
    seed: int
    shards: int = 1

    def tail_at(self, t):
        """Estimate and standard error at a grid point."""
        index = np.flatnonzero(np.isclose(self.grid, t))
        if not index.size:
            raise ValueError(f"{t} is not on the simulation grid")
        return float(self.tail[index[0]]), float(self.tail_se[index[0]])


def _waits(uncarried, start):
    """Lindley waits for the increments of one chunk, starting from the carried wait."""
    walk = np.concatenate([[0.0], np.cumsum(uncarried)])
    floor = np.minimum.accumulate(walk)
    return walk + np.maximum(start, -floor)


def _simulate_shard(model, count, seed_sequence, grid, batches):
    rng = np.random.default_rng(seed_sequence)
    warmup = int(count * WARMUP_FRACTION)
    kept = count - warmup
    batch_size = max(kept // batches, 1)
    sums = np.zeros((batches, len(grid) + 3))
    sizes = np.zeros(batches)
    wait = 0.0
    done = 0
    while done < count:
        size = min(SIMULATION_CHUNK, count - done)
        increments = model.service.sample(rng, size) - model.interarrival.sample(rng, size)
        waits = _waits(increments, wait)
        wait = waits[-1]
        waits = waits[:-1]
        index = np.arange(done, done + size) - warmup
        keep = (index >= 0) & (index < batch_size * batches)
        owner = index[keep] // batch_size
        w = waits[keep]
        columns = [(w > t).astype(float) for t in grid] + [w, w**2, w**3]
        for c, values in enumerate(columns):
            sums[:, c] += np.bincount(owner, weights=values, minlength=batches)
        sizes += np.bincount(owner, minlength=batches)
        done += size
    return sums, sizes


def lindley_simulate(model, n_customers, seed=SIMULATION_SEED, shards=1, grid=None, batches=SIMULATION_BATCHES):
    """
    Waiting times from W_{k+1} = max(0, W_k + Y_k − X_k) over independent streams, the
    first tenth of each stream discarded; standard errors from batch means.
    """
    if n_customers < shards * batches * 2:
        raise ValueError(f"{n_customers} customers are too few for {shards} shard(s) of {batches} batches")
    grid = np.arange(0.0, 5.01, 0.25) if grid is None else np.asarray(grid, dtype=float)
    children = np.random.SeedSequence(seed).spawn(shards)
    counts = [n_customers // shards + (1 if i < n_customers % shards else 0) for i in range(shards)]
    sums, sizes = [], []
    for count, child in zip(counts, children):
        shard_sums, shard_sizes = _simulate_shard(model, count, child, grid, batches)
        sums.append(shard_sums)
        sizes.append(shard_sizes)
    sums = np.concatenate(sums)
    sizes = np.concatenate(sizes)
    means = sums / sizes[:, None]
    weights = sizes / sizes.sum()
    estimate = weights @ means
    se = np.std(means, axis=0, ddof=1) / math.sqrt(len(sizes))
    logger.info(f"simulated {n_customers} customers of {model.name or 'model'} with seed {seed} over {shards} shard(s)")
    return LindleyResult(
        grid=grid,
        tail=estimate[: len(grid)],
        tail_se=se[: len(grid)],
        moments=estimate[len(grid) :],
        moments_se=se[len(grid) :],
        n_customers=n_customers,
        seed=seed,
        shards=shards,
    )
