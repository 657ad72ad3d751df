import numpy as np
import pytest

from queueing.exceptions import InvalidModel, InvalidParameter
from queueing.gated_mm1 import GatedModel, gated_mean
from queueing.model_files import load_model
from queueing.oracles import gated_markov, lindley_simulate, takacs_md1_tail
from queueing.reproduce import MD1_TAILS
from queueing.spectral import tail_probability


@pytest.mark.parametrize("t,approximation,exact,error", MD1_TAILS[10])
def test__takacs_reproduces_exact_md1_tail(t, approximation, exact, error):
    assert takacs_md1_tail(1 / 3, t) == pytest.approx(exact, abs=1e-9)


def test__takacs_at_origin_is_rho():
    assert takacs_md1_tail(0.4, 0.0) == pytest.approx(0.4, abs=1e-15)


def test__takacs_rejects_bad_input():
    with pytest.raises(InvalidModel):
        takacs_md1_tail(1.0, 1.0)
    with pytest.raises(ValueError):
        takacs_md1_tail(0.5, -1.0)


def test__takacs_is_decreasing():
    values = [takacs_md1_tail(0.7, t) for t in np.linspace(0.0, 6.0, 49)]
    assert np.all(np.diff(values) <= 1e-12)


def test__markov_chain_is_a_distribution():
    result = gated_markov(GatedModel(3.0, 4.0), qmax=120)
    assert result.pi.sum() == pytest.approx(1.0)
    assert np.all(result.pi >= 0)
    assert result.iterations > 1
    assert 0.0 < result.idle < 1.0


def test__markov_mean_matches_spectral_mean():
    """
    The finite chain with a long queue and a tight tolerance agrees with the closed-form sums.

    :return:
    """
    model = GatedModel(3.0, 4.0)
    result = gated_markov(model, tol=1e-12)
    assert result.mean == pytest.approx(gated_mean(model), abs=1e-6)


@pytest.mark.parametrize("qmax", [0, 1, 49])
def test__markov_rejects_short_queue(qmax):
    with pytest.raises(InvalidParameter):
        gated_markov(GatedModel(3.0, 4.0), qmax=qmax)


def test__markov_accepts_shortest_allowed_queue():
    assert gated_markov(GatedModel(3.0, 4.0), qmax=50).pi.sum() == pytest.approx(1.0)


@pytest.fixture(scope="module")
def md1_simulation(model_dir):
    model = load_model(model_dir / "md1.model")
    return lindley_simulate(model, 200_000, seed=7, shards=2, grid=[0.0, 0.5, 1.0, 2.0])


def test__simulation_agrees_with_takacs(md1_simulation):
    for t in (0.5, 1.0, 2.0):
        estimate, se = md1_simulation.tail_at(t)
        assert abs(estimate - takacs_md1_tail(1 / 3, t)) < 5 * se + 2e-3


def test__simulation_mean_waiting_time(md1_simulation):
    """
    Pollaczek–Khinchine: E[W] = λE[S²]/(2(1 - ρ)) = 1/4.
    """
    assert md1_simulation.moments[0] == pytest.approx(0.25, abs=5 * md1_simulation.moments_se[0] + 5e-3)


def test__simulation_is_reproducible(model_dir, md1_simulation):
    model = load_model(model_dir / "md1.model")
    again = lindley_simulate(model, 200_000, seed=7, shards=2, grid=[0.0, 0.5, 1.0, 2.0])
    assert np.array_equal(again.tail, md1_simulation.tail)
    assert again.seed == 7 and again.shards == 2


def test__simulation_grid_lookup(md1_simulation):
    with pytest.raises(ValueError):
        md1_simulation.tail_at(0.3)


def test__simulation_needs_enough_customers(model_dir):
    model = load_model(model_dir / "md1.model")
    with pytest.raises(ValueError):
        lindley_simulate(model, 10, shards=2)


SIMULATION_GRID = [0.25, 0.5, 1.0, 1.5, 2.0]


@pytest.mark.parametrize("name", ["md1", "ud1", "uu1", "e2d1"])
def test__simulation_agrees_with_spectral_tail(request, name):
    """
    Lindley recursion and the spectral expansion agree within four standard errors.
    """
    model, _, _, expansion = request.getfixturevalue(name)
    simulated = lindley_simulate(model, 400_000, seed=11, shards=2, grid=SIMULATION_GRID)
    for t in SIMULATION_GRID:
        estimate, se = simulated.tail_at(t)
        assert abs(estimate - tail_probability(expansion, t)) <= 4 * se
