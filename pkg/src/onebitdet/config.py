"""JSON experiment configuration.

A config document is a flat JSON object.  Model keys are the ``ModelParams``
fields; experiment keys are the remaining ``ExperimentConfig`` fields.  Missing
keys take the defaults of the standard simulation setting.  When ``snr_db`` is
not null it determines ``noise_std`` and any ``noise_std`` given is ignored.
"""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

from .errors import ValidationError
from .model import ModelParams, default_params
from .simulator import ExperimentConfig, Perturbation

MODEL_KEYS = tuple(f.name for f in fields(ModelParams))
EXPERIMENT_KEYS = tuple(f.name for f in fields(ExperimentConfig) if f.name != "params")
KNOWN_KEYS = MODEL_KEYS + EXPERIMENT_KEYS
_TUPLE_KEYS = ("corr_grid", "snr_grid_db")
_PERTURBATION_KEYS = ("name", "p_hat_factor", "a_factor")


def _perturbations(value) -> tuple:
    if not isinstance(value, list) or not value:
        raise ValidationError("param_perturbations must be a non-empty list of objects")
    out = []
    for item in value:
        if not isinstance(item, dict):
            raise ValidationError("each perturbation must be an object")
        for key in item:
            if key not in _PERTURBATION_KEYS:
                raise ValidationError(f"unknown perturbation key {key!r}")
        if "name" not in item:
            raise ValidationError("each perturbation needs a name")
        out.append(Perturbation(name=str(item["name"]),
                                p_hat_factor=float(item.get("p_hat_factor", 1.0)),
                                a_factor=float(item.get("a_factor", 1.0))))
    return tuple(out)


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config document must be a JSON object")
    for key in doc:
        if key not in KNOWN_KEYS:
            raise ValidationError(f"unknown config key {key!r}")
    model = {k: doc[k] for k in MODEL_KEYS if k in doc}
    try:
        params = default_params(snr_db=None, **model)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None
    kwargs = {}
    for key in EXPERIMENT_KEYS:
        if key not in doc:
            continue
        value = doc[key]
        if key in _TUPLE_KEYS:
            if not isinstance(value, list):
                raise ValidationError(f"{key} must be a list")
            value = tuple(float(v) for v in value)
        elif key == "param_perturbations":
            value = _perturbations(value)
        kwargs[key] = value
    return ExperimentConfig(params=params, **kwargs)


def config_to_dict(config: ExperimentConfig) -> dict:
    doc = config.params.to_dict()
    for key in EXPERIMENT_KEYS:
        value = getattr(config, key)
        if key in _TUPLE_KEYS:
            value = list(value)
        elif key == "param_perturbations":
            value = [{"name": p.name, "p_hat_factor": p.p_hat_factor, "a_factor": p.a_factor}
                     for p in value]
        doc[key] = value
    return doc


def parse_override(text: str) -> tuple[str, object]:
    """Split ``key=value``; the value is parsed as JSON when possible, else kept as text."""
    if "=" not in text:
        raise ValidationError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if key not in KNOWN_KEYS:
        raise ValidationError(f"override references unknown key {key!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def load_config(path=None, overrides=()) -> ExperimentConfig:
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ValidationError(f"{path}: config document must be a JSON object")
        for key in doc:
            if key not in KNOWN_KEYS:
                raise ValidationError(f"{path}: unknown config key {key!r}")
    for text in overrides:
        key, value = parse_override(text)
        doc[key] = value
    return config_from_dict(doc)
