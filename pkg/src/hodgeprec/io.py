"""JSON interchange format for complexes and preconditioner dumps.

A complex document is a JSON object::

    {
      "format": "hodgeprec.complex/1",
      "n_vertices": 4,
      "edges": [[0, 1], [0, 2], ...],
      "triangles": [[0, 1, 2], ...],
      "w0": [1.0, ...], "w1": [...], "w2": [...],
      "provenance": {...}
    }

``format``, the weight lists and ``provenance`` are optional on input.
Indices are 0-based.  Simplices may be listed unsorted and with any vertex
order; they are canonicalized on load.  Weights are written with
``repr`` precision so load -> save -> load is the identity.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Union

from .complex import SimplicialComplex2, build_complex

COMPLEX_FORMAT = "hodgeprec.complex/1"
PRECONDITIONER_FORMAT = "hodgeprec.hecs/1"

PathLike = Union[str, Path]


def complex_to_dict(K: SimplicialComplex2, provenance: Optional[dict] = None) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "format": COMPLEX_FORMAT,
        "n_vertices": K.n_vertices,
        "edges": K.edges.tolist(),
        "triangles": K.triangles.tolist(),
        "w0": K.w0.tolist(),
        "w1": K.w1.tolist(),
        "w2": K.w2.tolist(),
    }
    if provenance is not None:
        doc["provenance"] = provenance
    return doc


def complex_from_dict(doc: dict[str, Any]) -> SimplicialComplex2:
    fmt = doc.get("format", COMPLEX_FORMAT)
    if fmt != COMPLEX_FORMAT:
        raise ValueError(f"unsupported format {fmt!r}")
    missing = [k for k in ("n_vertices", "edges") if k not in doc]
    if missing:
        raise ValueError(f"complex document lacks fields {missing}")
    return build_complex(
        doc["n_vertices"],
        doc["edges"],
        doc.get("triangles", []),
        doc.get("w0"),
        doc.get("w1"),
        doc.get("w2"),
    )


def dumps(doc: dict[str, Any]) -> str:
    # one simplex per line keeps large files diffable
    lines = ["{"]
    items = list(doc.items())
    for n, (key, value) in enumerate(items):
        sep = "," if n < len(items) - 1 else ""
        if isinstance(value, list) and value and isinstance(value[0], list):
            body = ",\n    ".join(json.dumps(v) for v in value)
            lines.append(f'  "{key}": [\n    {body}\n  ]{sep}')
        else:
            lines.append(f'  "{key}": {json.dumps(value, sort_keys=True)}{sep}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_complex(K: SimplicialComplex2, path: PathLike, provenance: Optional[dict] = None) -> None:
    Path(path).write_text(dumps(complex_to_dict(K, provenance)))


def load_document(path: PathLike) -> dict[str, Any]:
    return json.loads(Path(path).read_text())


def load_complex(path: PathLike) -> SimplicialComplex2:
    return complex_from_dict(load_document(path))


def load_complex_with_provenance(path: PathLike) -> tuple[SimplicialComplex2, dict]:
    doc = load_document(path)
    return complex_from_dict(doc), doc.get("provenance", {})


def preconditioner_to_dict(P) -> dict[str, Any]:
    rows, cols, vals = P.factor.triplets()
    return {
        "format": PRECONDITIONER_FORMAT,
        "m1": int(P.factor.n_rows),
        "m2": int(len(P.pi)),
        "r": int(P.r),
        "edge_perm": P.edge_perm.tolist(),
        "tri_perm": P.tri_perm.tolist(),
        "pi": P.pi.astype(int).tolist(),
        "factor": [[int(i), int(j), float(v)] for i, j, v in zip(rows, cols, vals)],
    }


def save_preconditioner(P, path: PathLike) -> None:
    Path(path).write_text(dumps(preconditioner_to_dict(P)))
