"""Closed-form evaluators for the rate exponents and tail inequalities.

All functions are pure. Exponent helpers return a :class:`BetaInterval`
describing the admissible open interval (0, beta_max); an empty interval
carries a diagnostic instead of raising, so sweeps can report it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "BoundParams",
    "BernsteinPiece",
    "BernsteinProfile",
    "BetaInterval",
    "TailBound",
    "HolderCheck",
    "FarField",
    "exponent_A",
    "admissible_beta",
    "lederer_constant",
    "lederer_tail",
    "reverse_holder_check",
    "implicit_bound",
    "implicit_bound_constants",
    "guaranteed_rate",
    "kmeans_rate",
    "far_field_bernstein",
]


@dataclass(frozen=True)
class BoundParams:
    """Theory constants: moment order r, entropy constants, envelope W, etc."""

    r: float
    C_entropy: float = 1.0
    K_entropy: float = 1.0
    W: float = 1.0
    rho: float = 1.0
    delta: float = 0.1
    n: float = 1.0

    def __post_init__(self):
        for name in ("r", "C_entropy", "K_entropy", "W", "rho", "n"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.C_entropy < 1 or self.K_entropy < 1:
            raise ValueError("entropy constants need C >= 1 and K >= 1")
        if self.r < self.C_entropy + 1:
            raise ValueError(f"need r >= C + 1 (got r={self.r}, C={self.C_entropy})")

    @property
    def supports_rates(self) -> bool:
        return self.r >= 4 * self.C_entropy


@dataclass(frozen=True)
class BernsteinPiece:
    label: str
    B: float
    gamma: float

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("B must be > 0")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")


@dataclass(frozen=True)
class BernsteinProfile:
    pieces: tuple[BernsteinPiece, ...]
    provenance: str = "Assumed"  # or "Estimated"

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise ValueError("profile needs at least one piece")
        if self.provenance not in ("Assumed", "Estimated"):
            raise ValueError("provenance is Assumed or Estimated")

    @classmethod
    def from_gammas(cls, gammas: Sequence[float], B: float = 1.0, provenance="Assumed"):
        return cls(tuple(BernsteinPiece(f"piece{i}", B, g) for i, g in enumerate(gammas)), provenance)

    @property
    def min_gamma(self) -> float:
        return min(p.gamma for p in self.pieces)


@dataclass(frozen=True)
class BetaInterval:
    """The open interval (0, beta_max) of admissible rate exponents."""

    beta_max: float
    r: float
    diagnostic: str = ""

    @property
    def empty(self) -> bool:
        return not self.beta_max > 0

    def contains(self, beta: float) -> bool:
        return 0 < beta < self.beta_max

    def witness_l(self, beta: float) -> float:
        """l = r(1 - beta)/2, the choice that makes the exponent negative."""
        return self.r * (1 - beta) / 2


@dataclass(frozen=True)
class TailBound:
    value: float
    argmin_l: float


@dataclass(frozen=True)
class HolderCheck:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class FarField:
    B: float
    gamma: float
    M: float
    threshold: float  # risk ratio R(f)/R(f*) above which (B, gamma) applies


def exponent_A(l: float, params: BoundParams, beta: float, alpha: float) -> float:
    """max{ l^2/r - (1-beta) l + beta C,  [beta(1 - alpha/2) - 1/2] l + beta C }."""
    if not l > 0:
        raise ValueError("l must be > 0")
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    r, C = params.r, params.C_entropy
    first = l * l / r - (1 - beta) * l + beta * C
    second = (beta * (1 - alpha / 2) - 0.5) * l + beta * C
    return max(first, second)


def admissible_beta(params: BoundParams, alpha: float) -> BetaInterval:
    """Largest beta keeping exponent_A(r(1-beta)/2) negative.

    (1 - 2 sqrt(C/r)) / (2 - alpha) for alpha <= 1, else 1 - 2 sqrt(C/r).
    """
    r, C = params.r, params.C_entropy
    if r < 4 * C:
        return BetaInterval(0.0, r, f"empty: r={r} < 4C={4 * C}")
    base = 1 - 2 * math.sqrt(C / r)
    beta_max = base / (2 - alpha) if alpha <= 1 else base
    diag = "" if beta_max > 0 else "empty: r = 4C"
    return BetaInterval(beta_max, r, diag)


def guaranteed_rate(params: BoundParams, profile: BernsteinProfile) -> BetaInterval:
    """min over Bernstein pieces of admissible_beta(alpha = gamma_i)."""
    intervals = [admissible_beta(params, p.gamma) for p in profile.pieces]
    return min(intervals, key=lambda iv: iv.beta_max)


def kmeans_rate(r: float, k: int, d: int) -> BetaInterval:
    """((r-1)/r)(1 - 2 sqrt(k(d+1)/r)) for k-means with r finite moments."""
    vc = k * (d + 1)
    if r < 4 * vc:
        return BetaInterval(0.0, r, f"empty: r={r} < 4k(d+1)={4 * vc}")
    beta_max = (r - 1) / r * (1 - 2 * math.sqrt(vc / r))
    return BetaInterval(beta_max, r, "" if beta_max > 0 else "empty: r = 4k(d+1)")


def lederer_constant(zeta: float) -> float:
    return 64 / zeta + zeta + 7


def lederer_tail(
    params: BoundParams,
    M: float,
    sigma: float,
    zeta: float,
    x: float,
    *,
    grid: int = 512,
    constant: float | None = None,
) -> TailBound:
    """Polynomial tail bound for the supremum of an empirical process.

    min over l in [1, r] of (1/x)^l [c (l/n)^{1 - l/r} M + 4 sigma sqrt(l/n)]^l,
    with c = 64/zeta + zeta + 7 unless ``constant`` overrides it. l ranges over
    a uniform grid plus the integers in [1, r]. The value can exceed 1.
    """
    if not (x > 0 and zeta > 0 and params.r >= 1):
        raise ValueError("need x > 0, zeta > 0, r >= 1")
    if M < 0 or sigma < 0:
        raise ValueError("M and sigma must be nonnegative")
    r, n = params.r, params.n
    if M == 0 and sigma == 0:
        return TailBound(0.0, 1.0)
    c = lederer_constant(zeta) if constant is None else constant
    ls = np.union1d(np.linspace(1.0, r, grid), np.arange(1, math.floor(r) + 1, dtype=float))
    base = c * (ls / n) ** (1 - ls / r) * M + 4 * sigma * np.sqrt(ls / n)
    logs = ls * (np.log(base) - math.log(x))
    i = int(np.argmin(logs))
    return TailBound(float(math.exp(logs[i])) if logs[i] < 700 else math.inf, float(ls[i]))


def reverse_holder_check(u, r: float, weights=None, *, slack: float = 1e-12) -> HolderCheck:
    """||u||_2 <= ||u||_1^{(r-2)/(2r-2)} ||u||_r^{r/(2r-2)} under the weighted empirical measure.

    Both sides are degree-one homogeneous, so the comparison is made after
    scaling u by its maximum; ``slack`` is therefore relative.
    """
    if not r > 2:
        raise ValueError("r must be > 2")
    u = np.asarray(u, dtype=float).ravel()
    if u.size == 0 or np.any(u < 0):
        raise ValueError("u must be a nonempty nonnegative sample")
    w = np.full(u.size, 1.0 / u.size) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    top = u.max()
    if top == 0:
        return HolderCheck(0.0, 0.0, True)
    v = u / top
    l1 = math.fsum(w * v)
    l2 = math.sqrt(math.fsum(w * v * v))
    lr = math.fsum(w * v**r) ** (1 / r)
    rhs = l1 ** ((r - 2) / (2 * r - 2)) * lr ** (r / (2 * r - 2))
    return HolderCheck(l2 * top, rhs * top, l2 <= rhs + slack)


def implicit_bound_constants(nu: float) -> tuple[float, float]:
    """(C1, C2) with x <= a x^nu + b  =>  x <= C1 a^{1/(1-nu)} + C2 b.

    From Young's inequality with exponents 1/nu and 1/(1-nu):
    C1 = 2(1-nu)(2 nu)^{nu/(1-nu)}, C2 = 2.
    """
    if not 0 < nu < 1:
        raise ValueError("nu must lie in (0, 1)")
    return 2 * (1 - nu) * (2 * nu) ** (nu / (1 - nu)), 2.0


def implicit_bound(a: float, b: float, nu: float) -> float:
    if a < 0 or b < 0:
        raise ValueError("a and b must be nonnegative")
    c1, c2 = implicit_bound_constants(nu)
    return c1 * a ** (1 / (1 - nu)) + c2 * b


def far_field_bernstein(W: float, r: float, alpha: float) -> FarField:
    """Bernstein constants valid far from the optimum under an L^r envelope.

    M = W^{r/(r-2)}, gamma = (r-2)/(r-1), B = 2 alpha^gamma, applicable when
    R(f) >= alpha/(alpha - M) R(f*).
    """
    if not r > 2:
        raise ValueError("r must be > 2")
    M = W ** (r / (r - 2))
    if not alpha > M:
        raise ValueError(f"alpha={alpha} must exceed M={M}")
    gamma = (r - 2) / (r - 1)
    return FarField(2 * alpha**gamma, gamma, M, alpha / (alpha - M))
