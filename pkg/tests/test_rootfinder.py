import cmath

import numpy as np
import pytest
from scipy.special import lambertw

from queueing.exceptions import DerivativeVanished, InvalidModel, NoConvergence, Unsupported
from queueing.oracles import lambert_md1_root
from queueing.rootfinder import (
    CoreTerm,
    admissible_set,
    core_roots,
    count_zeros,
    dominant_cores,
    e_m_d1_right_roots,
    gated_roots,
    newton_steps,
    polish_zeros,
)
from queueing.spectral import build_helper
from queueing.transforms import Deterministic, Exponential, GatedPoissonBatch, QueueModel

U_U_1_F_ZEROES = [
    -1.112636162915984,
    -2.362945135569372 + 4.24463938127872j,
    -2.894232391480601 + 7.457728791764555j,
    -3.214439899719532 + 10.723473915095289j,
]
U_U_1_H_ZEROES = [
    -0.329175737104105,
    -1.107062156887795,
    -2.3629486802831456 + 4.244641429104492j,
    -2.8942321368738169 + 7.457728708110446j,
    -3.2144399507792216 + 10.723473898300561j,
]


def _cubic(z):
    return (z - 0.5) * (z + 0.5) * (z - 3.0)


def _cubic_derivative(z):
    return 3 * z**2 - 6 * z - 0.25


def test__newton_converges_quadratically_to_i():
    root, steps = newton_steps(lambda z: z * z + 1, lambda z: 2 * z, 1 + 1j, eps=1e-14)
    assert abs(root - 1j) < 1e-13
    assert steps < 8


def test__newton_reports_stalling():
    with pytest.raises(NoConvergence) as exc:
        newton_steps(lambda z: z * z + 1, lambda z: 2 * z, 100 + 1j, max_iter=2)
    assert exc.value.last is not None


def test__newton_reports_vanishing_derivative():
    with pytest.raises(DerivativeVanished):
        newton_steps(lambda z: z * z + 1, lambda z: 2 * z, 0j)


def test__argument_principle_counts_inside_rectangle():
    assert count_zeros(_cubic, (-1.0, 1.0, -1.0, 1.0)) == 2
    assert count_zeros(_cubic, (-4.0, 4.0, -1.0, 1.0)) == 3
    assert count_zeros(_cubic, (1.0, 2.0, -1.0, 1.0)) == 0


def test__polish_finds_counted_zeroes():
    found = polish_zeros(_cubic, _cubic_derivative, (-1.0, 1.0, -1.0, 1.0), 2)
    assert sorted(r.z.real for r in found) == pytest.approx([-0.5, 0.5])
    assert all(r.multiplicity == 1 for r in found)


def test__polish_flags_double_zero():
    found = polish_zeros(
        lambda z: (z + 0.5) ** 2 * (z - 3.0), lambda z: (z + 0.5) * (3 * z - 5.5), (-1.0, 1.0, -1.0, 1.0), 2
    )
    (root,) = found
    assert root.multiplicity == 2
    assert abs(root.z + 0.5) < 1e-5


CORES = [(1 / 6, -1.0, 1), (-1 / 6, -1.0, 1), (0.25, -2.0, 2), (-4 / 7, -3 / 8, 1), (7 / 4, -1 / 8, 1)]


@pytest.mark.parametrize("c,alpha,m", CORES)
def test__core_roots_solve_the_core_equation(c, alpha, m):
    """
    Every core root is a zero of c·exp(αz) - z^m, in the upper half-plane, with increasing height.
    """
    core = CoreTerm(c, alpha, m)
    roots = core_roots(core, 1, 40)
    for z in roots:
        assert abs(core.t(z)) < 1e-10 * core.t_magnitude(z)
        assert z.imag > 0
    assert np.all(np.diff(roots.imag) > 0)
    spacing = np.diff(roots.imag)[-5:]
    assert spacing == pytest.approx(core.spacing, rel=1e-2)


def test__core_parity_follows_sign():
    assert CoreTerm(7 / 4, -1 / 8, 1).parity == 1
    assert CoreTerm(-4 / 7, -3 / 8, 1).parity == 0


def test__core_rejects_positive_exponent():
    with pytest.raises(InvalidModel):
        CoreTerm(1.0, 0.5, 1)
    with pytest.raises(Unsupported):
        CoreTerm(1.0, -0.5, 0)


def test__admissible_set_without_gap():
    r0, r1, r2 = admissible_set(5.0, 1)
    assert r0 > 0
    assert r1 is None and r2 is None


def test__admissible_set_with_gap():
    """
    For β below m·ln m − m the band |x(ρ)| ≤ ρ breaks between r1 and r2 around ρ = m.
    """
    r0, r1, r2 = admissible_set(-5.0, 1)
    assert r1 < 1.0 < r2
    assert r0 + np.log(r0) + 5.0 == pytest.approx(0.0, abs=1e-9)
    assert r1 - np.log(r1) - 5.0 == pytest.approx(0.0, abs=1e-9)
    assert r2 - np.log(r2) - 5.0 == pytest.approx(0.0, abs=1e-9)


def test__lambert_root_zeroes_md1_F():
    model = QueueModel(Exponential(1 / 3), Deterministic(1.0))
    for branch in (-1, 1, 2, 7):
        root = lambert_md1_root(1 / 3, branch)
        assert abs(complex(model.F(root))) < 1e-10
        assert complex(root).real < 0


def test__md1_core_roots_are_lambert_values():
    """
    The M/D/1 core is -λ·exp(-z)/z - 1, whose zeroes are W_k(-λ).

    :return:
    """
    model = QueueModel(Exponential(1 / 3), Deterministic(1.0))
    helper = build_helper(model)
    assert helper.exact
    (core,) = helper.cores
    assert (core.c, core.alpha, core.m) == pytest.approx((-1 / 3, -1.0, 1))
    roots = core_roots(core, 1, 12)
    for branch in (1, 5, 10):
        expected = complex(lambertw(-1 / 3, branch))
        assert np.min(np.abs(roots - expected)) < 1e-8


def test__md1_zeroes_on_lambert_branches(md1):
    _, _, ladder, _ = md1
    z, _ = ladder.roots
    for branch in (-1, 1, 5, 40):
        assert np.min(np.abs(z - lambert_md1_root(1 / 3, branch))) < 1e-9


def test__uu1_helper_cores_and_zeroes(uu1):
    model, helper, ladder, _ = uu1
    assert len(helper.cores) >= 1
    assert not helper.exact
    z, _ = ladder.roots
    for expected in U_U_1_F_ZEROES:
        assert np.min(np.abs(z - expected)) < 1e-8
    h_zeroes = np.concatenate([np.asarray(helper.prefactor.zeros, dtype=complex), ladder.w])
    for expected in U_U_1_H_ZEROES:
        assert np.min(np.abs(h_zeroes - expected)) < 1e-7


def test__ladder_is_ordered_and_refined(ud1):
    model, helper, ladder, _ = ud1
    assert np.all(np.diff(ladder.z.imag) > 0)
    assert np.all(ladder.z.real < 0)
    assert np.all(ladder.residuals < 1e-10)
    for z in ladder.z[::97]:
        assert abs(complex(model.F(z))) < 1e-10 * model.magnitude(z)


def test__mixture_cores_from_upper_hull(model_dir):
    from queueing.model_files import load_model

    model = load_model(model_dir / "mixture.model")
    cores = dominant_cores(model.decomposition)
    assert len(cores) == 2
    first, second = cores
    assert (first.c, first.alpha, first.m) == pytest.approx((7 / 4, -1 / 8, 1))
    assert (second.c, second.alpha, second.m) == pytest.approx((-4 / 7, -3 / 8, 1))


def test__e2d1_right_root():
    (root,) = e_m_d1_right_roots(2, 1.0)
    assert root.imag == 0
    assert root.real == pytest.approx(1.477670, abs=1e-5)
    assert abs(cmath.exp(-root) - (1 - root) ** 2) < 1e-12


def test__gated_roots_are_zeroes_of_F():
    lam, mu = 3.0, 4.0
    model = QueueModel(Deterministic(1.0), GatedPoissonBatch(lam, Exponential(mu)))
    for n in (1, 2, 10, -3):
        r, s = gated_roots(lam, mu, n)
        assert r.real >= 0 > s.real
        assert abs(complex(model.F(s))) < 1e-10
    assert gated_roots(lam, mu, 0) == (0j, complex(lam - mu))


@pytest.mark.parametrize("name", ["ud1", "uu1"])
def test__ladder_extension_takes_few_newton_steps(request, name):
    """
    Seeded from the neighbouring offsets, neither the helper stage nor the F stage needs
    more than three Newton steps beyond index 10.
    """
    _, _, ladder, _ = request.getfixturevalue(name)
    index = ladder.n1 + np.arange(len(ladder.z))
    late = ladder.steps[index >= 10]
    assert late.size
    assert late[:, 0].max() <= 3
    assert late[:, 1].max() <= 3
