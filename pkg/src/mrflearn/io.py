"""File formats: model JSON, sample text, joint-table JSON.

Model files carry tensors as row-major flat value lists (JSON floats
round-trip at full precision).  Sample files are line oriented: a header
``n=<n> arities=<csv> seed=<u64>`` then one row per sample with 1-based
states and ``?`` for erased cells.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .inference import JointTable
from .model import CliqueTensor, MarkovRandomField
from .sampling import ERASED, SampleSet


def model_to_json_dict(model: MarkovRandomField) -> dict:
    return {
        "n": model.n,
        "arities": list(model.arities),
        "r": model.r,
        "tensors": [
            {
                "vertices": list(verts),
                "shape": list(tensor.values.shape),
                "values": tensor.values.ravel().tolist(),
            }
            for verts, tensor in sorted(model.potentials.items())
        ],
    }


def model_from_json_dict(payload: dict) -> MarkovRandomField:
    potentials = {}
    for entry in payload["tensors"]:
        verts = tuple(int(v) for v in entry["vertices"])
        values = np.array(entry["values"], dtype=float).reshape(entry["shape"])
        potentials[verts] = CliqueTensor(verts, values)
    return MarkovRandomField(
        n=int(payload["n"]),
        arities=tuple(int(k) for k in payload["arities"]),
        potentials=potentials,
        r=int(payload["r"]),
    )


def save_model(model: MarkovRandomField, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_json_dict(model), indent=2))


def load_model(path: str | Path) -> MarkovRandomField:
    return model_from_json_dict(json.loads(Path(path).read_text()))


def samples_to_text(samples: SampleSet) -> str:
    header = "n={} arities={} seed={}".format(
        samples.n, ",".join(str(k) for k in samples.arities), samples.seed
    )
    lines = [header]
    for row in samples.data:
        lines.append(
            " ".join("?" if cell == ERASED else str(int(cell) + 1) for cell in row)
        )
    return "\n".join(lines) + "\n"


def samples_from_text(text: str) -> SampleSet:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty sample file")
    fields = dict(part.split("=", 1) for part in lines[0].split())
    n = int(fields["n"])
    arities = tuple(int(k) for k in fields["arities"].split(","))
    seed = int(fields.get("seed", "0"))
    if len(arities) != n:
        raise ValueError("header arity count does not match n")
    rows = []
    for line in lines[1:]:
        cells = line.split()
        if len(cells) != n:
            raise ValueError(f"row has {len(cells)} cells, expected {n}")
        rows.append([ERASED if c == "?" else int(c) - 1 for c in cells])
    return SampleSet(np.array(rows, dtype=np.int64), arities, seed=seed)


def save_samples(samples: SampleSet, path: str | Path) -> None:
    Path(path).write_text(samples_to_text(samples))


def load_samples(path: str | Path) -> SampleSet:
    return samples_from_text(Path(path).read_text())


def joint_to_json_dict(joint: JointTable) -> dict:
    """Serialize a joint table for regression comparisons; probabilities
    are flattened in the mixed-radix (node 0 most significant) order."""
    return {
        "arities": list(joint.arities),
        "log_partition": joint.log_partition,
        "probs": joint.probs.ravel().tolist(),
    }


def joint_from_json_dict(payload: dict, model: MarkovRandomField) -> JointTable:
    arities = tuple(int(k) for k in payload["arities"])
    if arities != model.arities:
        raise ValueError("joint table arities do not match the model")
    probs = np.array(payload["probs"], dtype=float).reshape(arities)
    probs.flags.writeable = False
    return JointTable(
        model=model, probs=probs, log_partition=float(payload["log_partition"])
    )
