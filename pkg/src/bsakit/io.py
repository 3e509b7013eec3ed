"""JSON serialization of states and decompositions.

Matrix objects are ``{"m": M, "n": N, "matrix": rows}`` where ``rows`` holds
``M*N`` rows of ``M*N`` ``[re, im]`` pairs in Kronecker order
(``index = i_A * N + i_B``). Floats are written with ``repr`` precision so a
write/read round trip is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .states import BipartiteDims, DensityMatrix, ProductVector


def complex_to_pairs(arr) -> list:
    a = np.asarray(arr, dtype=complex)
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [complex_to_pairs(row) for row in a]


def pairs_to_complex(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.shape[-1] != 2:
        raise InvalidInput("complex entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def density_to_dict(rho: DensityMatrix) -> dict:
    return {"m": rho.m, "n": rho.n, "matrix": complex_to_pairs(rho.mat)}


def density_from_dict(obj: dict, tol: float = 1e-9) -> DensityMatrix:
    """Parse and validate a matrix object; the diagnostic names the failed invariant."""
    try:
        m, n = int(obj["m"]), int(obj["n"])
        mat = pairs_to_complex(obj["matrix"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed density-matrix object: {exc}") from exc
    d = m * n
    if mat.shape != (d, d):
        raise InvalidInput(f"dimension invariant violated: expected {d}x{d} entries, got {mat.shape}")
    return DensityMatrix(mat, BipartiteDims(m, n), tol)


def product_vector_to_dict(w: float, pv: ProductVector) -> dict:
    return {"w": float(w), "e": complex_to_pairs(pv.e), "f": complex_to_pairs(pv.f)}


def product_vector_from_dict(obj: dict) -> tuple[float, ProductVector]:
    return float(obj["w"]), ProductVector(pairs_to_complex(obj["e"]), pairs_to_complex(obj["f"]))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc


def load_density(path, tol: float = 1e-9) -> DensityMatrix:
    return density_from_dict(read_json(path), tol)


def save_density(rho: DensityMatrix, path) -> None:
    write_json(density_to_dict(rho), path)


def load_upb_fixture() -> DensityMatrix:
    """3x3 PPT entangled state built from the Tiles unextendible product basis."""
    from importlib.resources import files

    text = files("bsakit").joinpath("data/upb_tiles_3x3.json").read_text()
    return density_from_dict(json.loads(text))
