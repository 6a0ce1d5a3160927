"""File ingestion: NPY tensors, CSV score tables, JSON layer manifests."""

import json
import os

import numpy as np

from .errors import InputError
from .rescale import layer_from_dict


def _load_array(path):
    if not os.path.exists(path):
        raise InputError(f"no such file: {path}")
    try:
        if path.endswith(".csv"):
            arr = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=np.float64)
            if arr.ndim == 1:
                arr = arr[None, :] if arr.size else arr
            return np.atleast_2d(arr)
        arr = np.load(path, allow_pickle=False)
    except InputError:
        raise
    except Exception as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    if arr.dtype not in (np.float32, np.float64):
        raise InputError(f"{path}: expected float32/float64 data, got {arr.dtype}")
    return np.ascontiguousarray(arr, dtype=np.float64)


def load_matrix(path):
    arr = _load_array(path)
    if arr.ndim != 2:
        raise InputError(f"{path}: expected a 2-D matrix, got shape {arr.shape}")
    return arr


def load_filter(path):
    arr = _load_array(path)
    if arr.ndim != 4:
        raise InputError(f"{path}: expected a 4-D filter (c_out, c_in, k, k), "
                         f"got shape {arr.shape}")
    return arr


def load_scores(path):
    arr = _load_array(path)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 2:
        raise InputError(f"{path}: expected an (n, c) score table, got {arr.shape}")
    return arr


def load_vector(path):
    arr = _load_array(path)
    arr = np.squeeze(arr)
    if arr.ndim != 1:
        raise InputError(f"{path}: expected a 1-D vector")
    return arr


def load_manifest(path):
    if not os.path.exists(path):
        raise InputError(f"no such file: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except Exception as exc:
        raise InputError(f"cannot parse manifest {path}: {exc}") from exc
    if isinstance(obj, dict):
        layers = obj.get("layers")
    else:
        layers = obj
    if not isinstance(layers, list) or not layers:
        raise InputError("manifest must contain a nonempty 'layers' list")
    base = os.path.dirname(os.path.abspath(path))
    resolved = []
    for entry in layers:
        if isinstance(entry, dict):
            entry = dict(entry)
            for key, loader in (("matrix", load_matrix), ("filter", load_filter)):
                val = entry.get(key)
                if isinstance(val, str):
                    entry[key] = loader(os.path.join(base, val))
        resolved.append(entry)
    try:
        return [layer_from_dict(entry) for entry in resolved]
    except KeyError as exc:
        raise InputError(f"manifest layer missing field {exc}") from exc
