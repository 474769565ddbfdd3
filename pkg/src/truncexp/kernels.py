"""Kernel functions and the moment constants entering bias and variance formulas.

All kernels are symmetric densities on [-1, 1].  Interior local linear fits are
governed by (mu2, kappa0); one-sided fits at a support boundary by the
equivalent pair (mubar, kappabar) built from the one-sided moments
mubar_j = int_0^1 v^j k(v) dv.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class Side(enum.Enum):
    """Which observations a local fit may use, relative to the evaluation point."""

    TWO_SIDED = "two_sided"
    LEFT_OF_CUTOFF = "left_of_cutoff"
    RIGHT_OF_CUTOFF = "right_of_cutoff"


class KernelId(enum.Enum):
    TRIANGULAR = "triangular"
    UNIFORM = "uniform"
    EPANECHNIKOV = "epanechnikov"


def _onesided_moment(kid: KernelId, j: int) -> Fraction:
    # int_0^1 v^j k(v) dv, exact
    if kid is KernelId.TRIANGULAR:
        return Fraction(1, (j + 1) * (j + 2))
    if kid is KernelId.UNIFORM:
        return Fraction(1, 2 * (j + 1))
    return Fraction(3, 4) * (Fraction(1, j + 1) - Fraction(1, j + 3))


# kappabar = int_0^1 (k(v)(mubar_1 v - mubar_2))^2 dv / (mubar_2 mubar_0 - mubar_1^2)^2
_KAPPA_BAR = {
    KernelId.TRIANGULAR: Fraction(24, 5),
    KernelId.UNIFORM: Fraction(4),
    KernelId.EPANECHNIKOV: Fraction(56832, 12635),
}

_KAPPA0 = {
    KernelId.TRIANGULAR: Fraction(2, 3),
    KernelId.UNIFORM: Fraction(1, 2),
    KernelId.EPANECHNIKOV: Fraction(3, 5),
}


@dataclass(frozen=True)
class KernelConstants:
    """Moment constants of a kernel, precomputed once."""

    mu2: float
    kappa0: float
    mu_bar: float
    kappa_bar: float
    mu_bar_j: tuple[float, float, float, float]


@dataclass(frozen=True)
class KernelSpec:
    """A kernel identity together with its precomputed moment constants."""

    id: KernelId
    constants: KernelConstants = field(init=False)

    def __post_init__(self):
        mbj = [_onesided_moment(self.id, j) for j in range(4)]
        den = mbj[2] * mbj[0] - mbj[1] ** 2
        if den <= 0:
            raise ValueError("degenerate kernel moments")
        mu_bar = (mbj[2] ** 2 - mbj[1] * mbj[3]) / den
        object.__setattr__(
            self,
            "constants",
            KernelConstants(
                mu2=float(2 * _onesided_moment(self.id, 2)),
                kappa0=float(_KAPPA0[self.id]),
                mu_bar=float(mu_bar),
                kappa_bar=float(_KAPPA_BAR[self.id]),
                mu_bar_j=tuple(float(m) for m in mbj),
            ),
        )

    @property
    def code(self) -> int:
        """Integer code used by the compiled kernels."""
        return {KernelId.TRIANGULAR: 0, KernelId.UNIFORM: 1, KernelId.EPANECHNIKOV: 2}[self.id]

    def __call__(self, v: float) -> float:
        return kernel_eval(self, v)


TRIANGULAR = KernelSpec(KernelId.TRIANGULAR)
UNIFORM = KernelSpec(KernelId.UNIFORM)
EPANECHNIKOV = KernelSpec(KernelId.EPANECHNIKOV)

_BY_NAME = {k.id.value: k for k in (TRIANGULAR, UNIFORM, EPANECHNIKOV)}


def kernel_by_name(name: str) -> KernelSpec:
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(_BY_NAME)}") from None


def kernel_eval(kernel: KernelSpec, v: float) -> float:
    """Evaluate the kernel at v; zero outside [-1, 1]."""
    a = abs(v)
    if a > 1.0:
        return 0.0
    if kernel.id is KernelId.TRIANGULAR:
        return 1.0 - a
    if kernel.id is KernelId.UNIFORM:
        return 0.5
    return 0.75 * (1.0 - a * a)


def kernel_moment(kernel: KernelSpec, j: int, domain: str = "two_sided") -> float:
    """Exact j-th kernel moment over [-1, 1] ("two_sided") or [0, 1] ("one_sided")."""
    if j < 0:
        raise ValueError("moment order must be nonnegative")
    one = _onesided_moment(kernel.id, j)
    if domain == "one_sided":
        return float(one)
    if domain == "two_sided":
        return 0.0 if j % 2 else float(2 * one)
    raise ValueError("domain must be 'two_sided' or 'one_sided'")


def equivalent_constants(kernel: KernelSpec, side: str = "interior") -> tuple[float, float]:
    """(mu, kappa) governing bias and variance: interior (mu2, kappa0), boundary (mubar, kappabar)."""
    c = kernel.constants
    if side == "interior":
        return c.mu2, c.kappa0
    if side == "boundary":
        return c.mu_bar, c.kappa_bar
    raise ValueError("side must be 'interior' or 'boundary'")


def equivalent_constants_for(kernel: KernelSpec, side: Side) -> tuple[float, float]:
    """Dispatch on an evaluation side: one-sided fits use the boundary pair."""
    return equivalent_constants(kernel, "interior" if side is Side.TWO_SIDED else "boundary")


def side_mask(v, side: Side) -> np.ndarray:
    """Boolean mask of observations usable on the given side of the cutoff.

    Left-of-cutoff keeps v < 0 strictly; right-of-cutoff keeps v >= 0.
    """
    v = np.asarray(v)
    if side is Side.TWO_SIDED:
        return np.ones(v.shape, dtype=bool)
    if side is Side.LEFT_OF_CUTOFF:
        return v < 0.0
    return v >= 0.0


SUPPORT = (-1.0, 1.0)
