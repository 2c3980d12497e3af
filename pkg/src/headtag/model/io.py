"""Model serialization: one self-describing JSON container.

Parameter tensors are stored as base64-encoded little-endian float64 bytes,
which keeps save/load byte-exact and the file diffable at the header level.
"""
from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from ..data import DomainId, Vocabulary
from .params import ModelDims, TaggerModel

MODEL_FORMAT = "headtag-model"
MODEL_VERSION = 1


def model_to_json(model: TaggerModel) -> str:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "dims": model.dims.to_dict(),
        "use_crf": model.use_crf,
        "domains": [
            {"name": d.name, "index": d.index}
            for d in sorted(model.domains.values(), key=lambda d: d.index)
        ],
        "vocab": {
            "min_freq": model.vocab.min_freq,
            "word_to_id": model.vocab.word_to_id,
            "char_to_id": model.vocab.char_to_id,
        },
        "params": {
            name: {
                "shape": list(arr.shape),
                "dtype": "float64",
                "data": base64.b64encode(
                    np.ascontiguousarray(arr, dtype="<f8").tobytes()
                ).decode("ascii"),
            }
            for name, arr in sorted(model.params.items())
        },
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def model_from_json(text: str) -> TaggerModel:
    payload = json.loads(text)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {payload.get('version')!r}")
    dims = ModelDims(**payload["dims"])
    vocab = Vocabulary(
        word_to_id={k: int(v) for k, v in payload["vocab"]["word_to_id"].items()},
        char_to_id={k: int(v) for k, v in payload["vocab"]["char_to_id"].items()},
        min_freq=int(payload["vocab"]["min_freq"]),
    )
    domains = {
        d["name"]: DomainId(d["name"], int(d["index"])) for d in payload["domains"]
    }
    params = {}
    for name, spec in payload["params"].items():
        raw = base64.b64decode(spec["data"])
        arr = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(spec["shape"])
        params[name] = np.ascontiguousarray(arr)
    return TaggerModel(
        dims=dims,
        vocab=vocab,
        domains=domains,
        params=params,
        use_crf=bool(payload["use_crf"]),
    )


def save_model(model: TaggerModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: str | Path) -> TaggerModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))
