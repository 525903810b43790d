"""Flat binary point files: little-endian float64, row-major, with a JSON sidecar.

``points.bin`` holds n*d doubles; ``points.bin.json`` holds
``{"n": ..., "d": ..., "seed": ..., "spec": ...}`` plus any extra fields.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .distributions import DistributionSpec, Sample
from .nets import EpsilonNet

__all__ = ["write_points", "read_points", "write_sample", "read_sample", "write_net", "sidecar_path"]

_DTYPE = np.dtype("<f8")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_points(path, points: np.ndarray, header: dict) -> Path:
    path = Path(path)
    pts = np.ascontiguousarray(np.asarray(points, dtype=_DTYPE))
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array")
    path.parent.mkdir(parents=True, exist_ok=True)
    pts.tofile(path)
    meta = {"n": int(pts.shape[0]), "d": int(pts.shape[1]), **header}
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_points(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    pts = np.fromfile(path, dtype=_DTYPE)
    n, d = int(meta["n"]), int(meta["d"])
    if pts.size != n * d:
        raise ValueError(f"{path}: expected {n * d} doubles, found {pts.size}")
    return pts.reshape(n, d), meta


def write_sample(path, smp: Sample) -> Path:
    spec = smp.spec.to_dict() if smp.spec is not None else None
    return write_points(path, smp.points, {"seed": smp.seed, "spec": spec, "stream": smp.stream})


def read_sample(path) -> Sample:
    pts, meta = read_points(path)
    spec = DistributionSpec.from_dict(meta["spec"]) if meta.get("spec") else None
    return Sample(pts, int(meta["seed"]), spec, int(meta.get("stream", 0)))


def write_net(path, net: EpsilonNet) -> Path:
    return write_points(
        path,
        net.members,
        {
            "seed": None,
            "spec": None,
            "mesh": net.mesh,
            "rho": net.rho,
            "k": net.k,
            "codebook_d": net.d,
            "epsilon": net.epsilon,
            "lipschitz_L": net.lipschitz_L,
        },
    )
