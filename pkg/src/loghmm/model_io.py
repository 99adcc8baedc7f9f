"""JSON model persistence and delimited-text sequence ingestion.

Model documents are flat and human-editable: the emission parameters are
stored as name->number maps keyed by the canonical parameter names.  Floats
round-trip exactly (shortest repr), so save/load is bit-faithful and loading
a saved document reproduces the model including regression-test runs.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from .distributions import deserialize_params, serialize_params
from .inference import HmmModel

__all__ = [
    "ModelFormatError",
    "SCHEMA_VERSION",
    "model_to_json",
    "model_from_json",
    "save_model",
    "load_model",
    "read_sequences",
]

SCHEMA_VERSION = "1"

_TOP_LEVEL_KEYS = {"schema_version", "num_states", "initial", "transitions", "emissions"}
_EMISSION_KEYS = {"family", "params"}


class ModelFormatError(ValueError):
    """A model document violated the schema; the message names the field."""


def model_to_json(model: HmmModel) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "num_states": model.num_states,
        "initial": list(model.initial),
        "transitions": [list(row) for row in model.transitions],
        "emissions": [
            {"family": dist.family, "params": serialize_params(dist)}
            for dist in model.emissions
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ModelFormatError(message)


def _as_number_list(value, path: str) -> list[float]:
    _require(isinstance(value, list), f"{path} must be an array of numbers")
    out = []
    for i, v in enumerate(value):
        _require(isinstance(v, (int, float)) and not isinstance(v, bool), f"{path}[{i}] must be a number")
        out.append(float(v))
    return out


def model_from_json(text: str) -> HmmModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "document root must be an object")

    extra = set(doc) - _TOP_LEVEL_KEYS
    if extra:
        warnings.warn(f"ignoring unknown model document keys: {sorted(extra)}")

    version = doc.get("schema_version")
    _require(version is not None, "schema_version is missing")
    _require(
        version == SCHEMA_VERSION,
        f"unsupported schema_version {version!r}; this reader supports {SCHEMA_VERSION!r}",
    )

    _require("num_states" in doc, "num_states is missing")
    num_states = doc["num_states"]
    _require(
        isinstance(num_states, int) and num_states >= 1,
        "num_states must be a positive integer",
    )

    initial = _as_number_list(doc.get("initial"), "initial")
    _require(len(initial) == num_states, f"initial must have length {num_states}")

    transitions = doc.get("transitions")
    _require(isinstance(transitions, list) and len(transitions) == num_states,
             f"transitions must be a {num_states}x{num_states} array")
    rows = [_as_number_list(row, f"transitions[{i}]") for i, row in enumerate(transitions)]
    for i, row in enumerate(rows):
        _require(len(row) == num_states, f"transitions[{i}] must have length {num_states}")

    emissions_doc = doc.get("emissions")
    _require(isinstance(emissions_doc, list) and len(emissions_doc) == num_states,
             f"emissions must be an array of {num_states} entries")
    emissions = []
    for i, entry in enumerate(emissions_doc):
        _require(isinstance(entry, dict), f"emissions[{i}] must be an object")
        unknown = set(entry) - _EMISSION_KEYS
        if unknown:
            warnings.warn(f"ignoring unknown keys in emissions[{i}]: {sorted(unknown)}")
        _require("family" in entry, f"emissions[{i}].family is missing")
        _require("params" in entry, f"emissions[{i}].params is missing")
        params = entry["params"]
        _require(isinstance(params, dict), f"emissions[{i}].params must be an object")
        try:
            emissions.append(deserialize_params(entry["family"], params))
        except ValueError as exc:
            raise ModelFormatError(f"emissions[{i}]: {exc}") from exc

    try:
        return HmmModel(np.array(initial), np.array(rows), tuple(emissions))
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc


def save_model(model: HmmModel, destination) -> str:
    """Serialize the model; write it to ``destination`` when given."""
    text = model_to_json(model)
    if destination is not None:
        try:
            Path(destination).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"could not write model to {destination}: {exc}") from exc
    return text


def load_model(source) -> HmmModel:
    """Read a model document from a path (or parse a raw JSON string)."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise OSError(f"could not read model from {source}: {exc}") from exc
    else:
        text = source
    return model_from_json(text)


def read_sequences(source, column: int = 0, delimiter: str = ",") -> list[np.ndarray]:
    """Parse blank-line-delimited observation sequences from delimited text.

    One sequence per block of non-blank lines; ``column`` selects the cell in
    each row.  A leading non-numeric row is treated as a header and skipped;
    any other non-numeric cell is an error naming the line.
    """
    if isinstance(source, (str, Path)):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise OSError(f"could not read sequences from {source}: {exc}") from exc
    else:
        text = source.read()

    sequences: list[np.ndarray] = []
    block: list[float] = []
    seen_data_row = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            if block:
                sequences.append(np.array(block))
                block = []
            continue
        cells = line.split(delimiter)
        if column >= len(cells):
            raise ValueError(
                f"line {lineno}: row has {len(cells)} column(s), need column {column}"
            )
        cell = cells[column].strip()
        try:
            value = float(cell)
        except ValueError:
            if not seen_data_row:
                continue  # header row
            raise ValueError(f"line {lineno}: could not parse {cell!r} as a number") from None
        if np.isnan(value):
            raise ValueError(f"line {lineno}: NaN observation")
        seen_data_row = True
        block.append(value)
    if block:
        sequences.append(np.array(block))
    if not sequences:
        raise ValueError("no observation sequences found in input")
    return sequences
