import pytest

from queueing.exceptions import InvalidModel
from queueing.model_files import QueueModelSerializer, load_model, model_path, parse_model, parse_spec
from queueing.transforms import Erlang, Mixture, PolynomialDensity, Uniform

RHO = {
    "ud1": 1 / 3,
    "uu1": 0.6,
    "md1": 1 / 3,
    "e2d1": 0.5,
    "mixture": (0.5 * 7 / 16 + 0.5 / 3) / 0.5,
    "polydensity": 0.8,
}


@pytest.mark.parametrize("name", sorted(RHO))
def test__shipped_models_load(model_dir, name):
    model = load_model(model_dir / f"{name}.model")
    assert model.name == name
    assert model.rho == pytest.approx(RHO[name])


def test__rational_parameters_and_comments():
    text = """
    # comment line
    name = example
    interarrival = erlang 2 3/2   # trailing comment
    service = uniform 1/4 1/2
    """
    model = parse_model(text)
    assert model.name == "example"
    assert model.interarrival == Erlang(2, 1.5)
    assert model.service == Uniform(0.25, 0.5)


def test__default_name_from_file(tmp_path):
    path = tmp_path / "custom.model"
    path.write_text("interarrival = exponential 1\nservice = deterministic 1/2\n")
    assert load_model(path).name == "custom"


def test__mixture_and_polydensity_grammar():
    spec = parse_spec("mixture 1/2 uniform 0 7/8 | 1/2 polydensity 0 1 : 2 -2")
    assert isinstance(spec, Mixture)
    assert spec.weights == (0.5, 0.5)
    assert spec.components[1] == PolynomialDensity(0.0, 1.0, (2.0, -2.0))
    assert parse_spec(spec.describe()) == spec


@pytest.mark.parametrize(
    "text",
    [
        "interarrival = uniform 0 6\nservice = deterministic 1\ncolour = blue\n",
        "interarrival = uniform 0 6\ninterarrival = uniform 0 5\nservice = deterministic 1\n",
        "interarrival = uniform 0 6\nservice = lognormal 0 1\n",
        "interarrival = uniform 0 6\nservice = deterministic 1 2\n",
        "interarrival = erlang 2.5 1\nservice = deterministic 1\n",
        "interarrival = uniform 0 6\nservice = deterministic x\n",
        "interarrival = uniform 0 1\nservice = deterministic 1\n",
        "interarrival = uniform 0 6\n",
        "interarrival = uniform 0 6\nservice = polydensity 0 1 2 -2\n",
    ],
    ids=[
        "unknown-key",
        "duplicate-key",
        "unknown-kind",
        "parameter-count",
        "erlang-shape",
        "not-a-number",
        "unstable",
        "missing-service",
        "polydensity-separator",
    ],
)
def test__invalid_model_files(text):
    with pytest.raises(InvalidModel):
        parse_model(text, name="broken")


def test__serializer_reports_field_errors():
    serializer = QueueModelSerializer(data={"interarrival": "uniform 0 6", "service": "uniform 2 1"})
    assert not serializer.is_valid()
    assert "service" in serializer.errors


def test__model_path_resolution(model_dir, tmp_path):
    assert model_path("ud1", model_dir) == model_dir / "ud1.model"
    assert model_path("md1.model", model_dir) == model_dir / "md1.model"
    with pytest.raises(InvalidModel):
        model_path("nosuch", tmp_path)
