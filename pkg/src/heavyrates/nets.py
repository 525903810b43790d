"""Grid epsilon-nets over the codebook box and the entropy-bound check.

A grid net is not minimal, but its cardinality has the right scaling
(eps^{-dk}), which is all the entropy assumption needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .distributions import DistributionSpec, Family
from .quantization import Codebook

__all__ = ["EpsilonNet", "EntropyCheck", "build_net", "net_from_mesh", "entropy_check", "certified_lipschitz", "MAX_MEMBERS"]

MAX_MEMBERS = 10**8


@dataclass(frozen=True)
class EpsilonNet:
    """Axis-aligned grid of cell centers in (-rho, rho)^{d k}.

    ``per_axis`` cells of width ``2 rho / per_axis <= mesh`` tile each axis,
    so every codebook is within ``mesh/2`` of its projection per coordinate.
    """

    mesh: float
    rho: float
    d: int
    k: int
    epsilon: float
    lipschitz_L: float

    @property
    def per_axis(self) -> int:
        return max(1, math.ceil(2 * self.rho / self.mesh - 1e-12))

    @property
    def dim(self) -> int:
        return self.d * self.k

    @property
    def size(self) -> int:
        return self.per_axis**self.dim

    @property
    def spacing(self) -> float:
        return 2 * self.rho / self.per_axis

    @property
    def axis(self) -> np.ndarray:
        return -self.rho + self.spacing * (np.arange(self.per_axis) + 0.5)

    @cached_property
    def members(self) -> np.ndarray:
        """All members as rows of a (size, d*k) array, row-major over axes."""
        grids = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def member(self, index: int) -> Codebook:
        return Codebook(self.members[index].reshape(self.k, self.d), self.rho)

    def project_index(self, codebook: Codebook) -> np.ndarray:
        """Per-coordinate grid index of the nearest member; ties go to the lower index."""
        t = (codebook.flat + self.rho) / self.spacing - 0.5
        idx = np.ceil(t - 0.5).astype(int)
        return np.clip(idx, 0, self.per_axis - 1)

    def project(self, codebook: Codebook) -> Codebook:
        if codebook.d != self.d or codebook.k != self.k:
            raise ValueError("codebook shape does not match the net")
        flat = self.axis[self.project_index(codebook)]
        return Codebook(flat.reshape(self.k, self.d), self.rho)

    def flat_index(self, codebook: Codebook) -> int:
        idx = self.project_index(codebook)
        out = 0
        for i in idx:
            out = out * self.per_axis + int(i)
        return out

    @property
    def param_radius(self) -> float:
        """Certified parameter-space distance to the projection, mesh sqrt(dk)/2."""
        return self.mesh * math.sqrt(self.dim) / 2


def certified_lipschitz(spec: DistributionSpec, rho: float) -> float:
    """L with E[l(C) - l(C')]^2 <= L ||C - C'||^2, certified for bounded support.

    Per point |l(C, x) - l(C', x)| <= 2 (||x|| + rho sqrt(d)) ||C - C'||, so
    L = 4 (R + rho sqrt(d))^2 with R = sup ||x||. Unbounded laws give inf.
    """
    d = spec.dim
    if spec.family is Family.POINT_MASS_MIXTURE:
        R = float(np.max(np.linalg.norm(spec.atoms, axis=1)))
    elif spec.family is Family.UNIFORM:
        R = math.sqrt(d) * max(abs(spec.params["low"]), abs(spec.params["high"]))
    else:
        return math.inf
    return 4 * (R + rho * math.sqrt(d)) ** 2


def build_net(rho: float, d: int, k: int, epsilon: float, lipschitz_L: float) -> EpsilonNet:
    """Grid net whose projection moves the loss by at most ``epsilon`` in L2(P).

    With E[l(C) - l(C')]^2 <= L ||C - C'||^2 the mesh is
    2 epsilon / (sqrt(L) sqrt(dk)).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    if not (rho > 0 and math.isfinite(rho)):
        raise ValueError("rho must be finite and > 0")
    if not lipschitz_L > 0:
        raise ValueError("lipschitz_L must be > 0")
    mesh = 2 * epsilon / (math.sqrt(lipschitz_L) * math.sqrt(d * k))
    net = EpsilonNet(mesh, rho, d, k, epsilon, lipschitz_L)
    if net.per_axis ** net.dim > MAX_MEMBERS:
        raise OverflowError(
            f"net would have {net.per_axis}^{net.dim} members (> {MAX_MEMBERS:.0e}); increase epsilon"
        )
    return net


def net_from_mesh(rho: float, d: int, k: int, mesh: float, lipschitz_L: float = 1.0) -> EpsilonNet:
    """Net with a given mesh; epsilon = sqrt(L) mesh sqrt(dk) / 2."""
    eps = math.sqrt(lipschitz_L) * mesh * math.sqrt(d * k) / 2
    return build_net(rho, d, k, eps, lipschitz_L)


@dataclass(frozen=True)
class EntropyCheck:
    log_count: float
    bound: float
    holds: bool
    K_min: float  # smallest K that makes the bound hold at C = k(d+1)


def entropy_check(net: EpsilonNet, C_entropy: float, K_entropy: float) -> EntropyCheck:
    """log |net| <= C log(K / epsilon)."""
    if not net.epsilon <= K_entropy:
        raise ValueError("epsilon must not exceed K")
    log_count = net.dim * math.log(net.per_axis)
    bound = C_entropy * math.log(K_entropy / net.epsilon)
    vc = net.k * (net.d + 1)
    return EntropyCheck(log_count, bound, log_count <= bound, net.epsilon * math.exp(log_count / vc))
