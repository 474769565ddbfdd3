"""Truncated-conditional-mean estimators.

The main estimator regresses an orthogonalized generated outcome on the
covariate: the first stage fits a local linear conditional quantile, the
second stage runs a local linear regression of psi(eta, Qhat(x)) on x.  The
orthogonal moment makes the result first-order insensitive to the first
stage.  Alternatives kept for comparison: the infeasible version using the
true quantile function, a non-orthogonal version (drops the correction term),
a truncated-sample version (regression on the kept subsample), and a weighted
Nadaraya-Watson cdf-inversion estimator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import Sample
from .errors import BoundaryUnsupported, EmptyWindow, RankDeficient
from .kernels import KernelSpec, Side, TRIANGULAR
from .locfit import LocalFit, ehw_variance, local_poly_fit, window_weights, worstcase_bias
from .quantfit import QuantileFit, local_quantile_fit


class Tail(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


class EstimatorKind(enum.Enum):
    ORTHOGONAL = "orthogonal"
    INFEASIBLE = "infeasible"
    NON_ORTHOGONAL = "non_orthogonal"
    TRUNCATED_SAMPLE = "truncated_sample"
    WNW = "wnw"


@dataclass(frozen=True)
class TruncSpec:
    """Which tail is kept and how much mass it carries.

    ``eta`` is always the kept-mass proportion: lower keeps Y <= Q(eta, x),
    upper keeps Y >= Q(1 - eta, x).
    """

    eta: float
    tail: Tail = Tail.LOWER

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ValueError("kept-mass level eta must lie strictly inside (0, 1)")
        if not isinstance(self.tail, Tail):
            object.__setattr__(self, "tail", Tail(self.tail))

    @property
    def quantile_level(self) -> float:
        """Level of the conditional quantile at which the outcome is cut."""
        return self.eta if self.tail is Tail.LOWER else 1.0 - self.eta


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    bias_bound: float
    ci_lo: float
    ci_hi: float
    h_used: float
    a_used: float
    method: EstimatorKind
    n_eff: int


def psi(spec: TruncSpec, q, y):
    """Orthogonal generated outcome.

    Lower tail: (y - (1-eta) q)/eta below the threshold, q above it; the upper
    tail mirrors with the inequality reversed.  Ties sit on the kept side, and
    psi(q, q) = q in both tails.
    """
    q = np.asarray(q, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = (y <= q) if spec.tail is Tail.LOWER else (y >= q)
    out = np.where(inside, (y - (1.0 - spec.eta) * q) / spec.eta, q)
    return out if out.ndim else float(out)


def _first_stage(sample, x0, a, spec, kernel, side, max_enum=None) -> QuantileFit:
    kwargs = {} if max_enum is None else {"max_enum": max_enum}
    return local_quantile_fit(sample, x0, a, spec.quantile_level, 1, kernel, side, **kwargs)


def _kept_mask(y, q, tail):
    """Tail membership with ties kept: a small relative tolerance keeps the
    first-stage interpolated points (whose residuals are rounding noise) on
    the kept side regardless of outcome shifts."""
    tol = 1e-9 * (1.0 + np.abs(q))
    return (y <= q + tol) if tail is Tail.LOWER else (y >= q - tol)


def _ci_fields(value, se, bias_bound, alpha):
    from .inference import folded_normal_cv

    if se > 0.0 and math.isfinite(se):
        cv = folded_normal_cv(bias_bound / se, alpha)
        return value - cv * se, value + cv * se
    return value, value


def estimate(
    sample: Sample,
    x0: float,
    h: float,
    spec: TruncSpec,
    kind: EstimatorKind = EstimatorKind.ORTHOGONAL,
    a: float | None = None,
    kernel: KernelSpec = TRIANGULAR,
    side: Side = Side.TWO_SIDED,
    true_quantile: Callable[[np.ndarray], np.ndarray] | None = None,
    M: float = 0.0,
    alpha: float = 0.05,
    max_enum: int | None = None,
) -> Estimate:
    """Truncated conditional mean at x0 with the requested estimator.

    ``a`` defaults to ``h``.  ``kind=INFEASIBLE`` ignores ``a`` and requires
    ``true_quantile``, a callable returning the exact threshold quantile
    Q(level, x) at the spec's cut level.  The standard error is the EHW
    sandwich of the final fit; the interval is bias-aware through the exact
    conditional worst-case bias under |m''| <= M (undersmoothed z interval
    when M = 0).
    """
    if kind is EstimatorKind.WNW:
        return wnw_estimate(sample, x0, h, spec, kernel, alpha=alpha)
    a_used = h if a is None else a
    x, y = sample.x, sample.y

    if kind is EstimatorKind.INFEASIBLE:
        if true_quantile is None:
            raise ValueError("infeasible estimator requires the true quantile function")
        qvals = np.asarray(true_quantile(x), dtype=float)
        a_used = float("nan")
    else:
        qfit = _first_stage(sample, x0, a_used, spec, kernel, side, max_enum)
        qvals = qfit.predict(x)

    if kind in (EstimatorKind.ORTHOGONAL, EstimatorKind.INFEASIBLE):
        outcome = psi(spec, qvals, y)
        fit = local_poly_fit(sample, outcome, x0, h, 1, kernel, side)
    elif kind is EstimatorKind.NON_ORTHOGONAL:
        outcome = y * _kept_mask(y, qvals, spec.tail) / spec.eta
        fit = local_poly_fit(sample, outcome, x0, h, 1, kernel, side)
    elif kind is EstimatorKind.TRUNCATED_SAMPLE:
        kept = sample.subset(_kept_mask(y, qvals, spec.tail))
        fit = local_poly_fit(kept, kept.y, x0, h, 1, kernel, side)
    else:
        raise ValueError(f"unsupported estimator kind {kind}")

    se = math.sqrt(ehw_variance(fit))
    bias = worstcase_bias(fit, M) if M > 0.0 else 0.0
    lo, hi = _ci_fields(fit.beta[0], se, bias, alpha)
    return Estimate(
        value=float(fit.beta[0]),
        se=se,
        bias_bound=bias,
        ci_lo=lo,
        ci_hi=hi,
        h_used=float(h),
        a_used=float(a_used),
        method=kind,
        n_eff=fit.n_eff,
    )


def el_weights(sample: Sample, x0: float, h: float, kernel: KernelSpec = TRIANGULAR) -> np.ndarray:
    """Empirical likelihood weights for the weighted Nadaraya-Watson smoother.

    Maximize sum log p_i subject to sum p_i = 1 and
    sum p_i (x_i - x0) k_h(x_i - x0) = 0; the solution is
    p_i = 1 / (n (1 + lam * c_i)) with c_i = (x_i - x0) k_h(x_i - x0) and
    lam a root found by safeguarded bisection/Newton to |constraint| <= 1e-12.
    """
    x = sample.x
    n = x.size
    c = (x - x0) * window_weights(x, x0, h, kernel, Side.TWO_SIDED) / h
    cmax, cmin = float(c.max()), float(c.min())
    if not (cmax > 0.0 and cmin < 0.0):
        raise BoundaryUnsupported(
            "weighted Nadaraya-Watson weights need in-window points on both sides of x0"
        )

    def g(lam):
        return float(np.sum(c / (1.0 + lam * c)))

    lo = -1.0 / cmax
    hi = -1.0 / cmin
    pad = 1e-12 * (hi - lo)
    lo, hi = lo + pad, hi - pad
    lam = 0.0
    if not lo < 0.0 < hi:
        lam = 0.5 * (lo + hi)
    # g is strictly decreasing on (lo, hi)
    for _ in range(200):
        val = g(lam)
        if abs(val) <= 1e-12:
            break
        if val > 0.0:
            lo = lam
        else:
            hi = lam
        slope = -float(np.sum(c * c / (1.0 + lam * c) ** 2))
        step = lam - val / slope if slope < 0.0 else None
        lam = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
    p = 1.0 / (n * (1.0 + lam * c))
    return p


def wnw_estimate(
    sample: Sample,
    x0: float,
    h: float,
    spec: TruncSpec,
    kernel: KernelSpec = TRIANGULAR,
    alpha: float = 0.05,
) -> Estimate:
    """Weighted Nadaraya-Watson estimator: invert the smoothed conditional cdf
    at the cut level, then take the weighted mean of the kept tail.

    Interior points only.  The standard error is the sandwich of the weighted
    mean over the kept observations (no quantile-estimation component).
    """
    x, y = sample.x, sample.y
    p = el_weights(sample, x0, h, kernel)
    kw = window_weights(x, x0, h, kernel, Side.TWO_SIDED)
    a = p * kw
    mass = a.sum()
    if mass <= 0.0:
        raise EmptyWindow("no observation with positive weight")

    level = spec.quantile_level
    order = np.argsort(y, kind="stable")
    cdf = np.cumsum(a[order]) / mass
    pos = int(np.searchsorted(cdf, level - 1e-12 * (1.0 + level)))
    qhat = float(y[order[min(pos, y.size - 1)]])

    inside = (y <= qhat) if spec.tail is Tail.LOWER else (y >= qhat)
    sel = a * inside
    sel_mass = sel.sum()
    if sel_mass <= 0.0:
        raise EmptyWindow("no kept observation below the estimated threshold")
    value = float(np.sum(sel * y) / sel_mass)

    v = sel / sel_mass
    se = math.sqrt(float(np.sum(v * v * (y - value) ** 2)))
    from .inference import folded_normal_cv

    cv = folded_normal_cv(0.0, alpha)
    return Estimate(
        value=value,
        se=se,
        bias_bound=0.0,
        ci_lo=value - cv * se,
        ci_hi=value + cv * se,
        h_used=float(h),
        a_used=float(h),
        method=EstimatorKind.WNW,
        n_eff=int(np.count_nonzero(kw > 0.0)),
    )


def estimate_derivative(
    sample: Sample,
    x0: float,
    h: float,
    spec: TruncSpec,
    p: int,
    r: int,
    a: float | None = None,
    kernel: KernelSpec = TRIANGULAR,
    side: Side = Side.TWO_SIDED,
    true_quantile: Callable[[np.ndarray], np.ndarray] | None = None,
) -> float:
    """r-th derivative of the truncated conditional mean via an order-p fit.

    Both stages run at order p; the first stage's fitted polynomial feeds the
    orthogonal transform, and the result is r! times the (r+1)-th coefficient
    of the second stage.
    """
    if not 1 <= p <= 3:
        raise ValueError("polynomial order must be 1, 2, or 3")
    if not 0 <= r <= p:
        raise ValueError("derivative order must not exceed the polynomial order")
    a_used = h if a is None else a
    if true_quantile is not None:
        qvals = np.asarray(true_quantile(sample.x), dtype=float)
    else:
        qfit = local_quantile_fit(sample, x0, a_used, spec.quantile_level, p, kernel, side)
        qvals = qfit.predict(sample.x)
    outcome = psi(spec, qvals, sample.y)
    fit = local_poly_fit(sample, outcome, x0, h, p, kernel, side)
    return float(math.factorial(r) * fit.beta[r])
