"""
Model files: ``key = value`` lines naming the interarrival and service distributions.

    # U/D/1 with traffic intensity 1/3
    name = ud1
    interarrival = uniform 0 6
    service = deterministic 1
"""
import logging
from fractions import Fraction
from pathlib import Path

from more_itertools import split_at
from rest_framework import serializers
from rest_framework.exceptions import ValidationError

from .exceptions import InvalidModel
from .transforms import (
    Deterministic,
    Erlang,
    Exponential,
    GatedPoissonBatch,
    Mixture,
    PolynomialDensity,
    QueueModel,
    Uniform,
)

logger = logging.getLogger(__name__)

MODEL_KEYS = ("interarrival", "service", "name")


def parse_number(token):
    """Decimal or rational ``p/q`` literal."""
    try:
        return float(Fraction(token))
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"'{token}' is not a number", code="invalid")


def _numbers(tokens, count, kind):
    if len(tokens) != count:
        raise ValidationError(f"'{kind}' takes {count} parameter(s), got {len(tokens)}", code="invalid")
    return [parse_number(t) for t in tokens]


def parse_spec(text):
    """A TransformSpec from its one-line description, e.g. ``erlang 2 1``."""
    tokens = text.split()
    if not tokens:
        raise ValidationError("empty distribution", code="invalid")
    kind, args = tokens[0].lower(), tokens[1:]
    try:
        if kind == "deterministic":
            return Deterministic(*_numbers(args, 1, kind))
        if kind == "exponential":
            return Exponential(*_numbers(args, 1, kind))
        if kind == "erlang":
            shape, rate = _numbers(args, 2, kind)
            if shape != int(shape):
                raise ValidationError(f"erlang shape must be an integer, got {shape:g}", code="invalid")
            return Erlang(int(shape), rate)
        if kind == "uniform":
            return Uniform(*_numbers(args, 2, kind))
        if kind == "polydensity":
            parts = list(split_at(args, lambda token: token == ":"))
            if len(parts) != 2 or not parts[1]:
                raise ValidationError("polydensity needs 'p0 p1 : c0 c1 ...'", code="invalid")
            p0, p1 = _numbers(parts[0], 2, kind)
            return PolynomialDensity(p0, p1, tuple(parse_number(t) for t in parts[1]))
        if kind == "mixture":
            weights, components = [], []
            for part in split_at(args, lambda token: token == "|"):
                if len(part) < 2:
                    raise ValidationError("mixture parts need 'weight kind ...'", code="invalid")
                weights.append(parse_number(part[0]))
                components.append(parse_spec(" ".join(part[1:])))
            return Mixture(tuple(weights), tuple(components))
        if kind == "gated":
            if len(args) < 2:
                raise ValidationError("gated needs 'lambda kind ...'", code="invalid")
            return GatedPoissonBatch(parse_number(args[0]), parse_spec(" ".join(args[1:])))
    except InvalidModel as exc:
        raise ValidationError(str(exc), code="invalid")
    raise ValidationError(f"unknown distribution kind '{kind}'", code="invalid")


class TransformSpecField(serializers.Field):
    """A distribution written as a single line of the model-file grammar."""

    def to_internal_value(self, data):
        if not isinstance(data, str):
            raise ValidationError("distribution must be a string", code="invalid")
        return parse_spec(data)

    def to_representation(self, value):
        return value.describe()


class QueueModelSerializer(serializers.Serializer):
    name = serializers.CharField(required=False, allow_blank=True, default="")
    interarrival = TransformSpecField()
    service = TransformSpecField()

    def validate(self, attrs):
        try:
            QueueModel(attrs["interarrival"], attrs["service"], attrs.get("name", ""))
        except InvalidModel as exc:
            raise ValidationError(str(exc), code="invalid")
        return attrs

    def create(self, validated_data):
        return QueueModel(
            validated_data["interarrival"], validated_data["service"], validated_data.get("name", "")
        )


def read_pairs(text):
    """``key = value`` pairs of a model file, comments and blank lines skipped."""
    pairs = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or key not in MODEL_KEYS:
            raise InvalidModel(f"line {number}: expected one of {', '.join(MODEL_KEYS)} = value")
        if key in pairs:
            raise InvalidModel(f"line {number}: '{key}' given twice")
        pairs[key] = value.strip()
    return pairs


def parse_model(text, name=""):
    pairs = read_pairs(text)
    pairs.setdefault("name", name)
    serializer = QueueModelSerializer(data=pairs)
    if not serializer.is_valid():
        raise InvalidModel(f"invalid model {name}: {serializer.errors}")
    return serializer.save()


def load_model(path):
    """QueueModel from a model file; the file stem is the default name."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidModel(f"cannot read model file {path}: {exc}") from exc
    model = parse_model(text, name=path.stem)
    logger.debug(f"loaded {model.name}: {model.interarrival.describe()} / {model.service.describe()}")
    return model


def model_path(name, model_dir):
    """Resolve a bare model name (``ud1``) against the model directory."""
    path = Path(name)
    if path.exists():
        return path
    candidate = Path(model_dir) / (name if name.endswith(".model") else f"{name}.model")
    if candidate.exists():
        return candidate
    raise InvalidModel(f"no model file '{name}' (looked in {model_dir})")
