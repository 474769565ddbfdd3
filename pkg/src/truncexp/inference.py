"""Confidence intervals, bandwidth selection, and the rule-of-thumb curvature bound.

Intervals are either undersmoothed (normal quantile times the sandwich
standard error) or bias-aware: the critical value is the 1-alpha quantile of a
folded normal |N(t, 1)| at t = worst-case-bias / se, so the interval stays
honest over all functions with |second derivative| <= M.

The worst-case-RMSE bandwidth minimizes, over a log-spaced grid,

    ((M/2) sum |w_eff(h)| t^2)^2 + sigma2_psi * sum w_eff(h)^2,

where sigma2_psi is a pilot residual variance estimated once from a local
linear fit at a pilot bandwidth (a quarter of the covariate range).  The
reported standard error at the selected bandwidth is still the EHW sandwich
of the actual fit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from . import _fast
from .data import Sample
from .errors import AllBandwidthsFailed, DegenerateBias, RankDeficient
from .estimator import EstimatorKind, Tail, TruncSpec, psi
from .kernels import KernelSpec, Side, TRIANGULAR
from .quantfit import global_poly_quantile, local_quantile_fit

GRID_SIZE = 181
SELECTOR_FLOOR = 5
PILOT_FRACTION = 0.25


class CiMethod(enum.Enum):
    UNDERSMOOTH = "undersmooth"
    BIAS_AWARE = "bias_aware"


@dataclass(frozen=True)
class CiSpec:
    alpha: float = 0.05
    method: CiMethod = CiMethod.BIAS_AWARE
    M: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        if self.M < 0.0:
            raise ValueError("smoothness bound must be nonnegative")
        if not isinstance(self.method, CiMethod):
            object.__setattr__(self, "method", CiMethod(self.method))


@dataclass(frozen=True)
class BandwidthChoice:
    h: float
    criterion: str
    inputs_used: dict


def folded_normal_cv(t: float, alpha: float = 0.05) -> float:
    """1-alpha quantile of |N(t, 1)|, by bisection on the defining equation
    Phi(c - t) - Phi(-c - t) = 1 - alpha."""
    if t < 0.0:
        raise ValueError("noncentrality must be nonnegative")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    z_lo = float(ndtri(1.0 - alpha))
    z_hi = float(ndtri(1.0 - alpha / 2.0))
    return float(_fast.folded_normal_cv_impl(float(t), float(alpha), z_hi, z_lo))


def build_ci(value: float, se: float, bias_bound: float, spec: CiSpec) -> tuple[float, float]:
    """Interval endpoints for a point estimate with the given sandwich se."""
    if se <= 0.0:
        raise ValueError("standard error must be positive")
    if spec.method is CiMethod.UNDERSMOOTH:
        half = float(ndtri(1.0 - spec.alpha / 2.0)) * se
    else:
        half = folded_normal_cv(bias_bound / se, spec.alpha) * se
    return value - half, value + half


def bandwidth_amse(B_hat: float, V_hat: float, n: int) -> BandwidthChoice:
    """Closed-form AMSE-optimal bandwidth (V / (4 B^2))^(1/5) n^(-1/5)."""
    if V_hat <= 0.0:
        raise ValueError("variance constant must be positive")
    if n < 1:
        raise ValueError("sample size must be positive")
    if B_hat == 0.0:
        raise DegenerateBias("zero bias constant; use the worst-case selector instead")
    h = (V_hat / (4.0 * B_hat * B_hat)) ** 0.2 * n ** -0.2
    return BandwidthChoice(h=float(h), criterion="amse",
                           inputs_used={"B": B_hat, "V": V_hat, "n": n})


def candidate_grid(x: np.ndarray, size: int = GRID_SIZE) -> np.ndarray:
    """Log-spaced bandwidth grid from twice the smallest covariate gap to the range."""
    xs = np.unique(x)
    if xs.size < 2:
        raise AllBandwidthsFailed("degenerate covariate: no positive range")
    span = float(xs[-1] - xs[0])
    lo = 2.0 * float(np.min(np.diff(xs)))
    lo = min(max(lo, span * 1e-8), span)
    return np.geomspace(lo, span, size)


def _pilot_psi_variance(sample, x0, spec, kind, kernel, side, true_quantile, h0):
    xs = sample.x
    side_code = {Side.TWO_SIDED: 0, Side.LEFT_OF_CUTOFF: 1, Side.RIGHT_OF_CUTOFF: 2}[side]
    if kind is EstimatorKind.INFEASIBLE:
        if true_quantile is None:
            raise ValueError("infeasible selector requires the true quantile function")
        qvals = np.asarray(true_quantile(xs), dtype=float)
    else:
        qfit = local_quantile_fit(sample, x0, h0, spec.quantile_level, 1, kernel, side,
                                  max_enum=0)
        qvals = qfit.predict(xs)
    out = psi(spec, qvals, sample.y)
    var, status = _fast.pilot_resid_var(xs, np.ascontiguousarray(out), float(x0),
                                        float(h0), kernel.code, side_code)
    if status != 0:
        raise AllBandwidthsFailed("pilot variance fit failed: too few points near x0")
    return float(var)


def bandwidth_worstcase_rmse(
    sample: Sample,
    x0: float,
    spec: TruncSpec,
    M: float,
    kernel: KernelSpec = TRIANGULAR,
    side: Side = Side.TWO_SIDED,
    kind: EstimatorKind = EstimatorKind.ORTHOGONAL,
    true_quantile: Callable | None = None,
    grid: np.ndarray | None = None,
) -> BandwidthChoice:
    """Grid minimizer of worst-case squared bias plus pilot variance.

    The sample must be sorted by x (use ``np.argsort`` upstream) or unsorted;
    sorting happens here.  M > 0 is required: with no curvature bound every
    criterion is minimized at the largest window.
    """
    if M <= 0.0:
        raise ValueError("worst-case selector needs a positive smoothness bound")
    order = np.argsort(sample.x, kind="stable")
    srt = sample.subset(order)
    xs = srt.x
    if grid is None:
        grid = candidate_grid(xs)
    h0 = PILOT_FRACTION * float(xs[-1] - xs[0])
    s2 = _pilot_psi_variance(srt, x0, spec, kind, kernel, side, true_quantile, h0)
    side_code = {Side.TWO_SIDED: 0, Side.LEFT_OF_CUTOFF: 1, Side.RIGHT_OF_CUTOFF: 2}[side]
    h, crit, status = _fast.select_bandwidth(
        xs, float(x0), np.ascontiguousarray(grid, dtype=float), kernel.code,
        side_code, float(M), s2, SELECTOR_FLOOR,
    )
    if status != 0:
        raise AllBandwidthsFailed("no candidate bandwidth admitted a valid fit")
    return BandwidthChoice(
        h=float(h),
        criterion="worstcase_rmse",
        inputs_used={"M": M, "sigma2_psi": s2, "n": sample.n, "criterion_value": float(crit)},
    )


def rot_smoothness(sample: Sample, spec: TruncSpec) -> float:
    """Rule-of-thumb bound on the curvature of the truncated mean.

    Quartic quantile fit at the cut level, orthogonal transform of the
    outcomes against that fitted quartic, quartic least squares on the
    transformed values, and the maximum absolute second derivative over the
    observed covariates.
    """
    if sample.n < 5:
        raise RankDeficient("rule of thumb needs at least 5 observations")
    upper = 0 if spec.tail is Tail.LOWER else 1
    val, status = _fast.rot_smoothness_impl(
        np.ascontiguousarray(sample.x), np.ascontiguousarray(sample.y), spec.eta, upper
    )
    if status != 0:
        raise RankDeficient("rule-of-thumb quartic fit failed")
    return float(val)


def bivariate_rect_prob(c: float, rho: float, nodes: int = 96) -> float:
    """P(|Z1| <= c, |Z2| <= c) for standard bivariate normal with correlation rho.

    Deterministic Gauss-Legendre quadrature over the conditional slice.
    """
    if c <= 0.0:
        return 0.0
    rho = min(max(rho, -1.0), 1.0)
    if abs(rho) >= 1.0 - 1e-12:
        return float(2.0 * ndtr(c) - 1.0)
    z, wq = np.polynomial.legendre.leggauss(nodes)
    z = 0.5 * (z + 1.0) * (2.0 * c) - c
    wq = wq * c
    s = math.sqrt(1.0 - rho * rho)
    inner = ndtr((c - rho * z) / s) - ndtr((-c - rho * z) / s)
    dens = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return float(np.sum(wq * dens * inner))


def joint_cv(rho: float, alpha: float = 0.05) -> float:
    """Critical value c with P(|Z1| <= c, |Z2| <= c) = 1 - alpha under correlation rho."""
    lo = float(ndtri(1.0 - alpha / 2.0))
    hi = float(ndtri(1.0 - alpha / 4.0)) + 1e-9
    target = 1.0 - alpha
    if bivariate_rect_prob(lo, rho) >= target:
        return lo
    for _ in range(200):
        c = 0.5 * (lo + hi)
        if bivariate_rect_prob(c, rho) < target:
            lo = c
        else:
            hi = c
        if hi - lo < 1e-10:
            break
    return 0.5 * (lo + hi)
