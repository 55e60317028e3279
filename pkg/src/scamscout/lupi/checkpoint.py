"""Checkpoint (de)serialization for teacher and student models.

Parameters are stored as shape-annotated flat float lists in JSON.  Python
round-trips floats exactly through repr, so a saved model reloads
bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Union

from ..errors import SchemaError
from .encoder import EncoderConfig
from .models import PrivilegedConfig, StudentModel, TeacherModel
from .tokenizer import TokenizerConfig

import numpy as np

CHECKPOINT_FORMAT_VERSION = 1


def _params_to_dict(params: dict) -> dict:
    return {name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in sorted(params.items())}


def _load_params(model, blob: dict) -> None:
    params = model.parameters()
    if set(blob) != set(params):
        missing = sorted(set(params) - set(blob))
        extra = sorted(set(blob) - set(params))
        raise SchemaError(f"parameter mismatch: missing={missing} extra={extra}")
    for name, entry in blob.items():
        arr = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if arr.shape != params[name].shape:
            raise SchemaError(
                f"shape mismatch for {name}: {arr.shape} vs {params[name].shape}")
        params[name][...] = arr


def model_to_dict(model: Union[TeacherModel, StudentModel]) -> dict:
    kind = "teacher" if isinstance(model, TeacherModel) else "student"
    out = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": kind,
        "tokenizer": asdict(model.tok_cfg),
        "encoder": asdict(model.enc_cfg),
        "seed": model.seed,
        "params": _params_to_dict(model.parameters()),
    }
    if kind == "teacher":
        out["privileged"] = asdict(model.priv)
    return out


def model_from_dict(blob: dict) -> Union[TeacherModel, StudentModel]:
    if blob.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise SchemaError(
            f"unsupported checkpoint format: {blob.get('format_version')!r}")
    tok_cfg = TokenizerConfig(**blob["tokenizer"])
    enc_cfg = EncoderConfig(**blob["encoder"])
    kind = blob.get("kind")
    if kind == "teacher":
        priv = PrivilegedConfig(**blob["privileged"])
        model = TeacherModel(tok_cfg, enc_cfg, priv, seed=blob.get("seed", 0))
    elif kind == "student":
        model = StudentModel(tok_cfg, enc_cfg, seed=blob.get("seed", 0))
    else:
        raise SchemaError(f"unknown checkpoint kind: {kind!r}")
    _load_params(model, blob["params"])
    return model


def save_checkpoint(model: Union[TeacherModel, StudentModel],
                    path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True))


def load_checkpoint(path: Union[str, Path]) -> Union[TeacherModel, StudentModel]:
    return model_from_dict(json.loads(Path(path).read_text()))


def load_student(path: Union[str, Path]) -> StudentModel:
    model = load_checkpoint(path)
    if not isinstance(model, StudentModel):
        raise SchemaError("checkpoint does not contain a student model")
    return model


def load_teacher(path: Union[str, Path]) -> TeacherModel:
    model = load_checkpoint(path)
    if not isinstance(model, TeacherModel):
        raise SchemaError("checkpoint does not contain a teacher model")
    return model
