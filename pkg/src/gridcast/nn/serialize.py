"""Model persistence.

Format: a .npz archive holding a JSON layer specification under "spec"
and the parameter arrays under "param_0", "param_1", ... in network
order. float64 arrays round-trip bit-exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from gridcast.nn.layers import LSTM, Dense, Dropout, Network


def save_model(model: Network, path: str | Path, metadata: dict | None = None) -> None:
    payload = {"layers": model.spec(), "metadata": metadata or {}}
    arrays = {f"param_{i}": p for i, p in enumerate(model.params())}
    np.savez(path, spec=np.array(json.dumps(payload)), **arrays)


def _build_layer(entry: dict):
    kind = entry["kind"]
    if kind == "dense":
        return Dense(entry["n_in"], entry["n_out"], entry["activation"])
    if kind == "lstm":
        return LSTM(entry["n_in"], entry["hidden"], entry["activation"])
    if kind == "dropout":
        return Dropout(entry["rate"])
    raise ValueError(f"unknown layer kind in model file: {kind!r}")


def load_model(path: str | Path) -> tuple[Network, dict]:
    """Rebuild a saved network; returns (model, metadata)."""
    with np.load(path, allow_pickle=False) as archive:
        payload = json.loads(str(archive["spec"]))
        model = Network([_build_layer(e) for e in payload["layers"]])
        weights = [archive[f"param_{i}"] for i in range(len(model.params()))]
    model.set_weights(weights)
    return model, payload.get("metadata", {})
