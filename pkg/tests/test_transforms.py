import numpy as np
import pytest

from queueing import series
from queueing.exceptions import InvalidModel, Unsupported
from queueing.model_files import load_model
from queueing.transforms import (
    Deterministic,
    Erlang,
    Exponential,
    GatedPoissonBatch,
    Mixture,
    PolynomialDensity,
    QueueModel,
    Uniform,
    eval_F,
    eval_transform,
)

DISTRIBUTIONS = [
    Deterministic(1.0),
    Exponential(1 / 3),
    Erlang(2, 1.0),
    Uniform(0.0, 6.0),
    Uniform(1.0, 2.0),
    PolynomialDensity(0.0, 1.0, (2.0, -2.0)),
    Mixture((0.5, 0.5), (Uniform(0.0, 7 / 8), PolynomialDensity(0.0, 1.0, (2.0, -2.0)))),
]


@pytest.mark.parametrize("spec", DISTRIBUTIONS, ids=lambda s: s.describe())
def test__transform_is_one_at_origin_with_slope_minus_mean(spec):
    """
    Every Laplace transform is 1 at the origin and its derivative there is minus the mean.
    """
    assert abs(complex(eval_transform(spec, 0.0)) - 1.0) < 1e-12
    assert abs(complex(eval_transform(spec, 0.0, order=1)) + spec.mean) < 1e-10


@pytest.mark.parametrize("spec", DISTRIBUTIONS, ids=lambda s: s.describe())
def test__series_branch_joins_closed_form(spec):
    """
    Near the removable singularity the series and the closed form must agree.
    """
    for theta in (2e-3, 0.5 + 0.5j, 3.0 - 2.0j):
        value = complex(spec.evaluate(theta))
        terms = sum(t.evaluate(theta) for t in spec.terms())
        assert abs(value - complex(terms)) < 1e-8


def test__polynomial_density_must_integrate_to_one():
    with pytest.raises(InvalidModel):
        PolynomialDensity(0.0, 1.0, (22 / 15, -6 / 15, -12 / 15 + 0.1))


def test__polynomial_density_must_be_nonnegative():
    with pytest.raises(InvalidModel):
        PolynomialDensity(0.0, 1.0, (-1.0, 4.0))


def test__mixture_weights_must_sum_to_one():
    with pytest.raises(InvalidModel):
        Mixture((0.5, 0.4), (Deterministic(1.0), Deterministic(2.0)))


def test__unstable_queue_is_rejected():
    with pytest.raises(InvalidModel):
        QueueModel(Deterministic(1.0), Uniform(0.0, 3.0))


def test__F_vanishes_at_origin_with_positive_slope():
    """
    F(0) = 0 and F'(0) = E[A] - E[B] > 0 for a stable queue.

    :return:
    """
    model = QueueModel(Uniform(0.0, 5.0), Uniform(1.0, 2.0))
    assert abs(complex(model.F(0.0))) < 1e-14
    assert abs(complex(model.F(0.0, 1)) - (2.5 - 1.5)) < 1e-10


def test__ud1_decomposition():
    """
    U[0,6]/D/1: F = exp(5θ)/(6θ) - exp(-θ)/(6θ) - 1.
    """
    model = QueueModel(Uniform(0.0, 6.0), Deterministic(1.0))
    decomposition = model.decomposition
    assert decomposition.alphas == pytest.approx((-1.0, 5.0))
    assert decomposition.alpha0 == pytest.approx(-1.0)
    assert decomposition.kappa_p == 1
    left = decomposition.left_terms[0]
    assert left.k == 1
    assert complex(left.leading) == pytest.approx(-1 / 6)
    for theta in (-0.7 + 2j, 0.3 - 1.1j, -4.0 + 0.5j):
        assert abs(complex(decomposition.evaluate(theta)) - complex(model.F(theta))) < 1e-12


def test__uu1_decomposition_matches_F():
    model = QueueModel(Uniform(0.0, 5.0), Uniform(1.0, 2.0))
    decomposition = model.decomposition
    assert decomposition.alpha0 == pytest.approx(-2.0)
    assert all(t.k == 2 for t in decomposition.terms)
    for theta in (-0.7 + 2j, -3.0 + 7.5j):
        assert abs(complex(decomposition.evaluate(theta)) - complex(model.F(theta))) < 1e-10


def test__md1_decomposition_has_rational_term():
    model = QueueModel(Exponential(1 / 3), Deterministic(1.0))
    (term,) = model.decomposition.terms
    assert term.alpha == pytest.approx(-1.0)
    assert term.k == 1
    assert not term.is_polynomial_in_inverse
    assert model.left_poles() == []


def test__truncated_term_keeps_leading_phi():
    """
    Cutting Φ after a few coefficients leaves the term unchanged to that order at large |θ|.
    """
    model = QueueModel(Exponential(1 / 3), Deterministic(1.0))
    (term,) = model.decomposition.terms
    short = term.truncated(3)
    theta = -2.0 + 400j
    assert abs(complex(short.evaluate(theta)) / complex(term.evaluate(theta)) - 1.0) < 1e-9


def test__gated_batch_has_no_decomposition():
    model = QueueModel(Deterministic(1.0), GatedPoissonBatch(3.0, Exponential(4.0)))
    with pytest.raises(Unsupported):
        model.decomposition
    assert abs(complex(model.F(0.0))) < 1e-14
    assert model.rho == pytest.approx(0.75)


def test__deterministic_queue_is_degenerate():
    model = QueueModel(Deterministic(2.0), Deterministic(1.0))
    with pytest.raises(Unsupported):
        model.decomposition


def test__exponential_series_coefficients():
    coef = series.exp_series(2.0, 4)
    assert np.allclose(coef, [1.0, 2.0, 2.0, 4 / 3, 2 / 3])


def test__series_division_inverts_multiplication():
    a = np.array([1.0, 2.0, -1.0, 0.5])
    b = np.array([2.0, -1.0, 0.25])
    product = series.mul(a, b, 3)
    assert np.allclose(series.div(product, b, 3), a)


def test__log_coefficients_of_one_plus_d():
    coef = series.log_coefficients([1.0, 1.0], 4)
    assert np.allclose(coef[1:], [1.0, -1 / 2, 1 / 3, -1 / 4])


SMALL_ARGUMENT_KINDS = DISTRIBUTIONS + [GatedPoissonBatch(3.0, Exponential(4.0))]
BUNDLED_MODELS = ["md1", "ud1", "uu1", "e2d1", "mixture", "polydensity"]


@pytest.mark.parametrize("spec", SMALL_ARGUMENT_KINDS, ids=lambda s: s.describe())
@pytest.mark.parametrize("theta", [0.0, 1e-9, 1e-5])
def test__scalar_evaluation_near_origin(spec, theta):
    """
    Plain float arguments at and next to the removable singularity give finite values
    that follow 1 - mean·θ.
    """
    value = complex(eval_transform(spec, theta))
    slope = complex(eval_transform(spec, theta, order=1))
    assert np.isfinite(value) and np.isfinite(slope)
    assert abs(value - (1.0 - spec.mean * theta)) < 1e-8
    assert abs(slope + spec.mean) < 2e-3


def test__F_slope_at_origin_for_uniform_arrivals():
    model = QueueModel(Uniform(0.0, 6.0), Deterministic(1.0))
    assert abs(complex(eval_F(model, 0.0, order=1)) - 2.0) < 1e-12
    assert abs(complex(eval_F(model, 1e-5, order=1)) - 2.0) < 1e-3


def _poles_of_F(model):
    return [complex(p) for p, _ in model.service.poles()] + [-complex(p) for p, _ in model.interarrival.poles()]


def _random_thetas(rng, count, model):
    poles = _poles_of_F(model)
    thetas = []
    while len(thetas) < count:
        theta = complex(rng.uniform(-3.0, 3.0), rng.uniform(-20.0, 20.0))
        if all(abs(theta - p) > 0.5 for p in poles):
            thetas.append(theta)
    return thetas


@pytest.mark.parametrize("name", BUNDLED_MODELS)
def test__F_derivative_matches_central_differences(model_dir, name):
    model = load_model(model_dir / f"{name}.model")
    rng = np.random.default_rng(2024)
    for theta in _random_thetas(rng, 100, model):
        h = 1e-6 * max(1.0, abs(theta))
        numeric = (complex(model.F(theta + h)) - complex(model.F(theta - h))) / (2 * h)
        exact = complex(eval_F(model, theta, order=1))
        assert abs(numeric - exact) <= 1e-6 * max(abs(exact), model.magnitude(theta))


@pytest.mark.parametrize("name", BUNDLED_MODELS)
def test__F_has_conjugate_symmetry(model_dir, name):
    model = load_model(model_dir / f"{name}.model")
    rng = np.random.default_rng(7)
    for theta in _random_thetas(rng, 50, model):
        left = complex(eval_F(model, theta.conjugate()))
        right = complex(eval_F(model, theta)).conjugate()
        assert abs(left - right) <= 1e-12 * model.magnitude(theta)


@pytest.mark.parametrize("name", BUNDLED_MODELS)
def test__F_is_convex_on_negative_axis_with_one_zero(model_dir, name):
    """
    F(x) = E[exp(-xU)] - 1 is real and convex for x < 0 and crosses zero once there.
    """
    model = load_model(model_dir / f"{name}.model")
    grid = np.linspace(-10.0, -0.01, 2000)
    values = np.array([complex(model.F(x)) for x in grid])
    scale = np.array([model.magnitude(x) for x in grid])
    assert np.all(np.abs(values.imag) <= 1e-12 * scale)
    real = values.real
    assert np.all(real[:-2] - 2 * real[1:-1] + real[2:] >= -1e-9 * scale[1:-1])
    assert np.count_nonzero(np.diff(np.sign(real))) == 1


@pytest.mark.parametrize("name", BUNDLED_MODELS)
def test__decomposition_reassembles_F_far_from_origin(model_dir, name):
    model = load_model(model_dir / f"{name}.model")
    rng = np.random.default_rng(31)
    decomposition = model.decomposition
    for _ in range(50):
        theta = rng.uniform(5.0, 50.0) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        assembled = complex(decomposition.evaluate(theta))
        direct = complex(model.F(theta))
        assert abs(assembled - direct) <= 1e-10 * max(abs(direct), model.magnitude(theta))
