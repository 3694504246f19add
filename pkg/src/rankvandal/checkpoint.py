"""Byte-stable parameter dumps: JSON shape manifest plus raw float64 bytes.

torch.save and numpy's zip containers are not specified to be byte-identical
across runs, and reproducibility here is checked at the byte level, so model
checkpoints use this explicit format instead.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParseError

_MAGIC = b"RVCKPT1\n"


def save_params(path: str | Path, arrays: dict[str, np.ndarray], config: dict) -> None:
    names = list(arrays)
    manifest = {
        "version": 1,
        "config": config,
        "arrays": [
            {"name": n, "shape": list(arrays[n].shape), "dtype": "float64"}
            for n in names
        ],
    }
    header = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for n in names:
            arr = np.ascontiguousarray(arrays[n], dtype=np.float64)
            fh.write(arr.tobytes())


def load_params(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ParseError(f"not a parameter dump: {path}")
        header_len = int.from_bytes(fh.read(8), "little")
        manifest = json.loads(fh.read(header_len).decode("utf-8"))
        arrays: dict[str, np.ndarray] = {}
        for entry in manifest["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ParseError(f"truncated parameter dump: {path}")
            arrays[entry["name"]] = np.frombuffer(buf, dtype=np.float64).reshape(shape).copy()
    return arrays, manifest["config"]
