"""
Zeroes of F in the left half-plane.

* core roots from the real ρ-system of exp(θ+β) ∓ θ^m,
* Newton refinement and the helper-seeded root ladder,
* near-origin roots by argument-principle counting on a rectangle plus Newton polishing,
* closed-form roots of the gated M/M/1 queue.
"""
import cmath
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from more_itertools import pairwise
from scipy.optimize import brentq

from .exceptions import (
    CountMismatch,
    DerivativeVanished,
    InvalidModel,
    NoBracket,
    NoConvergence,
    NonAnalytic,
    PoleEvaluation,
    Unsupported,
)

logger = logging.getLogger(__name__)

NEWTON_EPS = 1e-11
NEWTON_MAX_ITER = 50
DERIVATIVE_FLOOR = 1e-300
RHO_XTOL = 1e-13
POLISH_STEPS = 3
DUPLICATE_TOLERANCE = 1e-7
# half-width of the box in which a polished zero is counted again
MULTIPLICITY_BOX = 1e-4
# largest phase change accepted between two boundary samples before bisecting
PHASE_STEP = 1.0


@dataclass(frozen=True)
class CoreTerm:
    """
    T(θ) = c·exp(αθ)·θ^(−m) − 1.

    With θ = αz the roots become those of exp(θ+β) − θ^m (parity 0, c·α^m > 0) or of
    exp(θ+β) + θ^m (parity 1), β = ln|c·α^m|.
    """

    c: float
    alpha: float
    m: int

    def __post_init__(self):
        if not self.alpha < 0:
            raise InvalidModel(f"core exponent must be negative, got {self.alpha}")
        if int(self.m) != self.m or self.m < 1:
            raise Unsupported(f"core power must be a positive integer, got {self.m}")
        if self.c == 0:
            raise InvalidModel("core coefficient must be non-zero")

    @property
    def beta(self):
        return math.log(abs(self.c)) + self.m * math.log(abs(self.alpha))

    @property
    def parity(self):
        return 0 if self.c * self.alpha**self.m > 0 else 1

    @property
    def spacing(self):
        """Asymptotic distance between consecutive roots."""
        return 2 * math.pi / abs(self.alpha)

    def evaluate(self, theta):
        return self.c * cmath.exp(self.alpha * theta) * theta ** (-self.m) - 1.0

    def derivative(self, theta):
        return self.c * cmath.exp(self.alpha * theta) * theta ** (-self.m) * (self.alpha - self.m / theta)

    def t(self, z):
        """The polynomial-cleared form c·exp(αz) − z^m."""
        return self.c * cmath.exp(self.alpha * z) - z**self.m

    def t_magnitude(self, z):
        return abs(self.c * cmath.exp(self.alpha * z)) + abs(z) ** self.m

    def root(self, n):
        """Upper-half-plane root on branch n."""
        theta = sigma_root(self.beta, self.m, self.parity, n)
        return (theta / self.alpha).conjugate()


def _x(rho, beta, m):
    return m * math.log(rho) - beta


def _h(rho, beta, m):
    x = _x(rho, beta, m)
    y = math.sqrt(max(rho * rho - x * x, 0.0))
    omega = math.acos(min(1.0, max(-1.0, x / rho)))
    return y - m * omega


def _expand_upwards(func, start, target):
    hi = max(start * 2.0, start + 1.0)
    for _ in range(200):
        if func(hi) > target:
            return hi
        hi *= 2.0
    raise NoBracket(f"could not bracket level {target}")


def _bracketed(func, lo, hi, target):
    flo, fhi = func(lo) - target, func(hi) - target
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise NoBracket(f"level {target} not bracketed on [{lo}, {hi}]")
    return brentq(lambda r: func(r) - target, lo, hi, xtol=RHO_XTOL, rtol=4 * np.finfo(float).eps)


def admissible_set(beta, m):
    """
    (r0, r1, r2) describing where |x(ρ)| ≤ ρ; r1 and r2 are None when there is no gap.
    """
    lower = 1e-12
    while lower + m * math.log(lower) - beta > 0:
        lower *= 1e-6
        if lower < 1e-300:
            raise NoBracket(f"no admissible radius for beta={beta}, m={m}")
    upper = _expand_upwards(lambda r: r + m * math.log(r) - beta, 1.0, 0.0)
    r0 = _bracketed(lambda r: r + m * math.log(r) - beta, lower, upper, 0.0)
    if m - m * math.log(m) + beta >= 0:
        return r0, None, None

    def gap(r):
        return r - m * math.log(r) + beta

    small = min(m, 1.0) * 1e-12
    while gap(small) < 0:
        small *= 1e-6
    r1 = _bracketed(gap, small, float(m), 0.0)
    r2 = _bracketed(gap, float(m), _expand_upwards(gap, float(m), 0.0), 0.0)
    return r0, r1, r2


def _sigma(theta, beta, m, parity):
    sign = 1.0 if parity == 0 else -1.0
    return cmath.exp(theta + beta) - sign * theta**m


def _sigma_prime(theta, beta, m, parity):
    sign = 1.0 if parity == 0 else -1.0
    return cmath.exp(theta + beta) - sign * m * theta ** (m - 1)


def sigma_root(beta, m, parity, n):
    """
    Root θ = x + iy (y ≥ 0) of exp(θ+β) − (−1)^parity·θ^m on branch n, i.e. with
    y − m·arccos(x/ρ) = (2n + parity)π.
    """
    target = (2 * n + parity) * math.pi
    r0, r1, r2 = admissible_set(beta, m)
    floor = -m * math.pi

    def h(rho):
        return _h(rho, beta, m)

    if target < floor - 1e-12:
        raise NoBracket(f"branch {n} lies below the admissible range of h")
    if abs(target - floor) <= 1e-12:
        rho = r0
    elif r1 is not None and target < 0:
        rho = _bracketed(h, r0, r1, target)
    elif r1 is not None and target == 0:
        rho = r2
    else:
        start = r2 if r1 is not None else r0
        rho = _bracketed(h, start, _expand_upwards(h, max(start, target + m * math.pi + 1.0), target), target)
    x = _x(rho, beta, m)
    theta = complex(x, math.sqrt(max(rho * rho - x * x, 0.0)))
    for _ in range(POLISH_STEPS):
        derivative = _sigma_prime(theta, beta, m, parity)
        if derivative == 0:
            break
        step = _sigma(theta, beta, m, parity) / derivative
        candidate = theta - step
        if abs(_sigma(candidate, beta, m, parity)) > abs(_sigma(theta, beta, m, parity)):
            break
        theta = candidate
    if abs(theta.imag) < 1e-14 * max(1.0, abs(theta)):
        theta = complex(theta.real, 0.0)
    return theta


def core_roots(core, n_from, n_to):
    """Upper-half-plane roots of the core term on branches n_from..n_to."""
    if n_from < 0 or n_to < n_from:
        raise NoBracket(f"invalid branch range {n_from}..{n_to}")
    return np.array([core.root(n) for n in range(n_from, n_to + 1)], dtype=complex)


def sigma_roots(beta, m, parity, n_from, n_to):
    return np.array([sigma_root(beta, m, parity, n) for n in range(n_from, n_to + 1)], dtype=complex)


def e_m_d1_right_roots(m, lam):
    """
    Zeroes of F with positive real part for the E_m/D/1 queue (Erlang(m, λ) interarrivals,
    unit service), via z = λ − θ and exp(z + β) = z^m with β = m·ln λ − λ.
    """
    beta = m * math.log(lam) - lam
    r0, r1, r2 = admissible_set(beta, m)
    candidates = []
    for n in range(-(m // 2), 1):
        target = 2 * n * math.pi
        if target == 0 and r1 is not None:
            candidates.extend([complex(r1, 0.0), complex(r2, 0.0)])
        elif target >= -m * math.pi:
            candidates.append(sigma_root(beta, m, 0, n))
    roots = []
    for z in candidates:
        for zz in {z, z.conjugate()}:
            theta = lam - zz
            if theta.real > 1e-9 and not any(abs(theta - r) < DUPLICATE_TOLERANCE for r in roots):
                roots.append(theta)
    return sorted(roots, key=lambda r: (r.real, r.imag))


def newton_steps(func, dfunc, z0, eps=NEWTON_EPS, max_iter=NEWTON_MAX_ITER, scale=None):
    """
    Newton–Raphson from z0 until |f(z)| < eps·scale(z); returns (z, steps).
    """
    if eps <= 0 or max_iter < 1:
        raise ValueError("eps must be positive and max_iter at least 1")
    z = complex(z0)
    for step in range(max_iter + 1):
        value = complex(func(z))
        size = scale(z) if scale is not None else 1.0
        if abs(value) < eps * size:
            return z, step
        if step == max_iter or not np.isfinite(value):
            break
        slope = complex(dfunc(z))
        if abs(slope) < DERIVATIVE_FLOOR:
            raise DerivativeVanished(f"derivative vanished at {z}", last=z)
        z = z - value / slope
    raise NoConvergence(f"no convergence from {z0} after {max_iter} steps", last=z)


def newton_refine(func, dfunc, z0, eps=NEWTON_EPS, max_iter=NEWTON_MAX_ITER, scale=None):
    return newton_steps(func, dfunc, z0, eps, max_iter, scale)[0]


@dataclass(frozen=True)
class OriginRoot:
    z: complex
    multiplicity: int = 1


def _phase_change(func, a, b, fa, fb, depth):
    if fa == 0 or fb == 0:
        raise CountMismatch(f"zero on the counting contour near {a if fa == 0 else b}")
    change = cmath.phase(fb / fa)
    if abs(change) <= PHASE_STEP or depth == 0:
        return change
    mid = 0.5 * (a + b)
    fm = complex(func(mid))
    return _phase_change(func, a, mid, fa, fm, depth - 1) + _phase_change(func, mid, b, fm, fb, depth - 1)


def count_zeros(func, rectangle, segments=64, depth=24):
    """
    Zeroes (with multiplicity) of an analytic function inside a rectangle
    (x0, x1, y0, y1), by the argument principle.
    """
    x0, x1, y0, y1 = rectangle
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    total = 0.0
    with np.errstate(all="ignore"):
        for a, b in pairwise(corners):
            points = a + (b - a) * np.linspace(0.0, 1.0, segments + 1)
            values = [complex(func(p)) for p in points]
            for (pa, pb), (fa, fb) in zip(pairwise(points), pairwise(values)):
                total += _phase_change(func, pa, pb, fa, fb, depth)
    winding = total / (2 * math.pi)
    count = int(round(winding))
    if abs(winding - count) > 0.1:
        raise CountMismatch(f"winding number {winding:.4f} is not close to an integer")
    return count


def _inside(z, rectangle, slack=1e-9):
    x0, x1, y0, y1 = rectangle
    return x0 - slack <= z.real <= x1 + slack and y0 - slack <= z.imag <= y1 + slack


def polish_zeros(func, dfunc, rectangle, expected, scale=None, eps=NEWTON_EPS, exclude=(), rounds=4):
    """
    Locate ``expected`` zeroes (with multiplicity) of a real-on-the-real-axis function inside
    the rectangle by Newton iteration from successively finer seed grids.
    """
    x0, x1, y0, y1 = rectangle
    found = []

    def known(z):
        return any(abs(z - r.z) <= DUPLICATE_TOLERANCE * max(1.0, abs(z)) for r in found) or any(
            abs(z - e) <= DUPLICATE_TOLERANCE * max(1.0, abs(e)) for e in exclude
        )

    def total():
        return sum(r.multiplicity for r in found)

    with np.errstate(all="ignore"):
        for level in range(rounds):
            if total() >= expected:
                break
            size = 8 * 2**level
            for re in np.linspace(x0, x1, size + 2)[1:-1]:
                for im in np.linspace(0.0, y1, size // 2 + 2)[:-1]:
                    if total() >= expected:
                        break
                    z, multiplicity = _polish(func, dfunc, complex(re, im), scale, eps)
                    if z is None or not _inside(z, rectangle):
                        continue
                    if abs(z.imag) < 1e-9 * max(1.0, abs(z)):
                        z = complex(z.real, 0.0)
                    if known(z):
                        continue
                    found.append(OriginRoot(z, multiplicity))
                    if z.imag != 0.0:
                        found.append(OriginRoot(z.conjugate(), multiplicity))
            logger.debug(f"zero polishing round {level}: {total()} of {expected} found")
    if total() != expected:
        raise CountMismatch(
            f"winding count {expected} but {total()} zeroes polished", expected=expected, found=total()
        )
    return sorted(found, key=lambda r: (abs(r.z.imag), r.z.imag, -r.z.real))


def _polish(func, dfunc, seed, scale, eps):
    try:
        z, _ = newton_steps(func, dfunc, seed, eps=eps, max_iter=60, scale=scale)
    except (NoConvergence, PoleEvaluation, NonAnalytic, ZeroDivisionError, OverflowError):
        # a double zero only attracts Newton linearly; the doubled step restores quadratic speed
        try:
            z, _ = newton_steps(
                func, lambda t: 0.5 * complex(dfunc(t)), seed, eps=eps, max_iter=60, scale=scale
            )
        except (NoConvergence, PoleEvaluation, NonAnalytic, ZeroDivisionError, OverflowError):
            return None, 0
    return z, _multiplicity(func, z)


def _multiplicity(func, z):
    """Zeroes counted in a small box around a polished zero."""
    delta = MULTIPLICITY_BOX * max(1.0, abs(z))
    box = (z.real - delta, z.real + delta, z.imag - delta, z.imag + delta)
    try:
        return max(count_zeros(func, box, segments=16), 1)
    except (CountMismatch, PoleEvaluation, NonAnalytic):
        return 1


def _cleared_F(model):
    """θ ↦ F(θ)·Π(θ − p)^o/θ: analytic in the closed left half-plane."""
    poles = model.left_poles()
    slope_at_zero = complex(model.F(0.0, 1))

    def cleared(theta):
        factor = 1.0
        for pole, order in poles:
            factor *= (theta - pole) ** order
        if abs(theta) < 1e-10:
            return slope_at_zero * factor
        return complex(model.F(theta)) * factor / theta

    return cleared


def origin_roots(model, search_radius, height=None, eps=NEWTON_EPS):
    """
    Zeroes of F in [−R, 0) × [−Y, Y] with their multiplicities (conjugates included).
    """
    height = search_radius if height is None else height
    rectangle = (-search_radius, 0.0, -height, height)
    expected = count_zeros(_cleared_F(model), rectangle)
    logger.info(f"{expected} zeroes of F counted in the origin rectangle {rectangle}")
    return polish_zeros(
        lambda t: model.F(t),
        lambda t: model.F(t, 1),
        (-search_radius, -1e-12, -height, height),
        expected,
        scale=model.magnitude,
        eps=eps,
        exclude=(0.0,),
    )


def dominant_cores(decomposition):
    """
    Core terms of the helper: edges of the upper convex hull of (α_j, −k_j) over the terms
    with negative exponent together with the constant −1 at (0, 0).
    """
    points = [(t.alpha, t.k, float(np.real(t.leading))) for t in decomposition.left_terms if t.alpha < 0]
    points.append((0.0, 0, -1.0))
    points.sort(key=lambda p: p[0])
    hull = []
    for point in points:
        while len(hull) >= 2:
            (ax, ak, _), (bx, bk, _) = hull[-2], hull[-1]
            cross = (bx - ax) * (-point[1] + ak) - (-bk + ak) * (point[0] - ax)
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(point)
    cores = []
    for (ai, ki, ci), (aj, kj, cj) in pairwise(hull):
        cores.append(CoreTerm(-ci / cj, ai - aj, ki - kj))
    return cores


def search_window(cores):
    """
    (height Y, radius R, first branch per core) separating near-origin roots from ladders.
    """
    height = max(core.root(1).imag - core.spacing / 2 for core in cores)
    starts = []
    for core in cores:
        n = 1
        while core.root(n).imag <= height:
            n += 1
        starts.append(n)
    radius = 1.5 * max(abs(core.root(n)) for core, n in zip(cores, starts)) + 2.0
    return height, radius, tuple(starts)


@dataclass(frozen=True)
class LadderChain:
    core: CoreTerm
    next_branch: int
    offset: complex = 0j
    shift: complex = 0j


@dataclass(frozen=True)
class RootLadder:
    """
    Upper-half-plane zeroes of F: the near-origin ones followed by helper-tracked pairs
    (w_n, z_n) seeded from core roots u_n, ordered by increasing imaginary part.
    """

    origin: tuple
    u: np.ndarray
    w: np.ndarray
    z: np.ndarray
    steps: np.ndarray
    residuals: np.ndarray
    chain_index: np.ndarray
    branches: np.ndarray
    chains: tuple
    epsilon: float = NEWTON_EPS

    @property
    def n1(self):
        """Index of the first ladder root."""
        return len(self.origin)

    def __len__(self):
        return len(self.origin) + len(self.z)

    @property
    def roots(self):
        """All stored zeroes (origin then ladder) with multiplicities."""
        z = np.concatenate([[r.z for r in self.origin], self.z]).astype(complex)
        k = np.concatenate([[r.multiplicity for r in self.origin], np.ones(len(self.z), dtype=int)])
        return z, k.astype(int)


def start_ladder(model, helper, count=0, eps=NEWTON_EPS, max_iter=NEWTON_MAX_ITER):
    """Origin roots of F inside the helper's window plus ``count`` ladder pairs."""
    found = origin_roots(model, helper.radius, helper.height, eps=eps)
    upper = tuple(r for r in found if r.z.imag >= 0)
    chains = tuple(LadderChain(core, start) for core, start in zip(helper.cores, helper.starts))
    empty = np.zeros(0, dtype=complex)
    ladder = RootLadder(
        origin=upper,
        u=empty,
        w=empty,
        z=empty,
        steps=np.zeros((0, 2), dtype=int),
        residuals=np.zeros(0),
        chain_index=np.zeros(0, dtype=int),
        branches=np.zeros(0, dtype=int),
        chains=chains,
        epsilon=eps,
    )
    return extend_ladder(ladder, model, helper, count, eps=eps, max_iter=max_iter)


def _track(func, dfunc, seed, anchor, spacing, scale, eps, max_iter):
    try:
        root, steps = newton_steps(func, dfunc, seed, eps, max_iter, scale)
        if abs(root - anchor) < 0.5 * spacing:
            return root, steps
    except NoConvergence:
        pass
    logger.warning(f"re-seeding ladder step at {anchor}")
    return newton_steps(func, dfunc, anchor, eps, max_iter, scale)


def extend_ladder(ladder, model, helper, count, eps=None, max_iter=NEWTON_MAX_ITER):
    """Append ``count`` (w, z) pairs, always taking the chain whose next root is lowest."""
    if count <= 0:
        return ladder
    eps = ladder.epsilon if eps is None else eps
    chains = list(ladder.chains)
    u, w, z = list(ladder.u), list(ladder.w), list(ladder.z)
    steps, residuals = [tuple(s) for s in ladder.steps], list(ladder.residuals)
    chain_index, branches = list(ladder.chain_index), list(ladder.branches)
    for _ in range(count):
        upcoming = [chain.core.root(chain.next_branch) for chain in chains]
        pick = int(np.argmin([r.imag for r in upcoming]))
        chain = chains[pick]
        anchor = upcoming[pick]
        # offsets from the core root to w and from w to z drift slowly along a chain
        seed = anchor + chain.offset
        index = ladder.n1 + len(z)
        try:
            w_root, w_steps = _track(
                helper.evaluate, helper.derivative, seed, anchor, chain.core.spacing, helper.magnitude, eps, max_iter
            )
            z_root, z_steps = _track(
                lambda t: model.F(t),
                lambda t: model.F(t, 1),
                w_root + chain.shift,
                w_root,
                chain.core.spacing,
                model.magnitude,
                eps,
                max_iter,
            )
        except NoConvergence as exc:
            exc.index = index
            raise
        if not z_root.real < 0:
            raise NoConvergence(f"ladder root {z_root} at index {index} left the left half-plane", index=index)
        logger.debug(f"ladder index {index}: w steps {w_steps}, z steps {z_steps}")
        u.append(anchor)
        w.append(w_root)
        z.append(z_root)
        steps.append((w_steps, z_steps))
        residuals.append(abs(complex(model.F(z_root))) / model.magnitude(z_root))
        chain_index.append(pick)
        branches.append(chain.next_branch)
        chains[pick] = replace(
            chain, next_branch=chain.next_branch + 1, offset=w_root - anchor, shift=z_root - w_root
        )
    return replace(
        ladder,
        u=np.array(u, dtype=complex),
        w=np.array(w, dtype=complex),
        z=np.array(z, dtype=complex),
        steps=np.array(steps, dtype=int).reshape(-1, 2),
        residuals=np.array(residuals),
        chain_index=np.array(chain_index, dtype=int),
        branches=np.array(branches, dtype=int),
        chains=tuple(chains),
    )


def gated_roots(lam, mu, n):
    """
    (r_n, s_n) solving θ² + θ(μ − λ − 2πin) − 2iμnπ = 0, Re r_n ≥ 0 > Re s_n.
    """
    if not 0 < lam < mu:
        raise InvalidModel(f"gated M/M/1 needs 0 < lambda < mu, got {lam}, {mu}")
    if n < 0:
        r, s = gated_roots(lam, mu, -n)
        return r.conjugate(), s.conjugate()
    if n == 0:
        return 0j, complex(lam - mu)
    a = (lam - mu) / 2
    b = n * math.pi
    x = (lam - mu) ** 2 / 4 - b * b
    y = (mu + lam) * b
    root = cmath.sqrt(complex(x, y))
    return complex(a, b) + root, complex(a, b) - root


def chain_root(model, helper, core, branch, eps=NEWTON_EPS, max_iter=NEWTON_MAX_ITER):
    """(u, w, z) on one branch of one core, each stage seeded by the previous one."""
    u = core.root(branch)
    w = newton_refine(helper.evaluate, helper.derivative, u, eps, max_iter, helper.magnitude)
    z = newton_refine(lambda t: model.F(t), lambda t: model.F(t, 1), w, eps, max_iter, model.magnitude)
    return u, w, z
