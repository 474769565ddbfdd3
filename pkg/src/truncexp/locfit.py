"""Weighted local polynomial least squares at a point.

Fits are parameterized in powers of (x - x0), so ``beta[j]`` estimates the
j-th derivative divided by j!.  The intercept is a linear smoother; its
effective weights drive the sandwich variance and the exact worst-case bias
bound used by bias-aware intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Sample
from .errors import EmptyWindow, RankDeficient
from .kernels import KernelSpec, Side, TRIANGULAR, side_mask

_SV_RTOL = 1e-10


@dataclass(frozen=True)
class LocalFit:
    """Result of a kernel-weighted polynomial fit centered at x0.

    ``weights`` has full sample length (zero outside the window) and
    reproduces polynomials up to the fit order: sum w = 1 and
    sum w (x - x0)^j = 0 for 1 <= j <= p.  ``residuals`` aligns with ``idx``,
    the in-window observation indices.
    """

    x0: float
    h: float
    p: int
    beta: np.ndarray
    weights: np.ndarray
    idx: np.ndarray
    t: np.ndarray
    residuals: np.ndarray
    n_eff: int

    def predict(self, x) -> np.ndarray:
        u = np.asarray(x, dtype=float) - self.x0
        return sum(self.beta[j] * u**j for j in range(self.p + 1))


def window_weights(x: np.ndarray, x0: float, h: float, kernel: KernelSpec, side: Side):
    """Kernel weights k((x - x0)/h) with the side restriction applied."""
    u = (x - x0) / h
    a = np.abs(u)
    if kernel.code == 0:
        w = np.maximum(1.0 - a, 0.0)
    elif kernel.code == 1:
        w = np.where(a <= 1.0, 0.5, 0.0)
    else:
        w = np.maximum(0.75 * (1.0 - a * a), 0.0)
    w = np.where(a > 1.0, 0.0, w)
    return np.where(side_mask(x - x0, side), w, 0.0)


def local_poly_fit(
    sample: Sample,
    outcome: np.ndarray,
    x0: float,
    h: float,
    p: int = 1,
    kernel: KernelSpec = TRIANGULAR,
    side: Side = Side.TWO_SIDED,
) -> LocalFit:
    """Kernel-weighted polynomial least squares of ``outcome`` on (x - x0).

    Raises EmptyWindow when no observation has positive weight and
    RankDeficient when fewer than p+1 distinct covariate values fall in the
    window (smallest singular value below 1e-10 of the largest).
    """
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    if p < 0:
        raise ValueError("polynomial order must be nonnegative")
    x = sample.x
    outcome = np.asarray(outcome, dtype=float)
    if outcome.shape != x.shape:
        raise ValueError("outcome must have the same length as the sample")
    w = window_weights(x, x0, h, kernel, side)
    idx = np.nonzero(w > 0.0)[0]
    if idx.size == 0:
        raise EmptyWindow(f"no observation with positive weight in [{x0 - h}, {x0 + h}]")

    u = (x[idx] - x0) / h
    sw = np.sqrt(w[idx])
    Z = np.vander(u, p + 1, increasing=True)
    A = Z * sw[:, None]
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size < p + 1 or sv[-1] <= _SV_RTOL * sv[0]:
        raise RankDeficient(
            f"window design is singular at x0={x0}, h={h}: need {p + 1} distinct x values"
        )

    b = outcome[idx] * sw
    coef_scaled, *_ = np.linalg.lstsq(A, b, rcond=None)
    beta = coef_scaled / h ** np.arange(p + 1)

    # intercept smoother weights: e1' (Z'WZ)^-1 Z'W
    G = A.T @ A
    first_row = np.linalg.solve(G, np.eye(p + 1)[:, 0])
    weights = np.zeros(x.size)
    weights[idx] = (Z * w[idx][:, None]) @ first_row

    fitted = Z @ coef_scaled
    residuals = outcome[idx] - fitted
    return LocalFit(
        x0=float(x0),
        h=float(h),
        p=int(p),
        beta=beta,
        weights=weights,
        idx=idx,
        t=x[idx] - x0,
        residuals=residuals,
        n_eff=int(idx.size),
    )


def ehw_variance(fit: LocalFit) -> float:
    """Heteroskedasticity-robust variance of the intercept: sum(w_i^2 u_i^2)."""
    w = fit.weights[fit.idx]
    return float(np.sum(w * w * fit.residuals * fit.residuals))


def worstcase_bias(fit: LocalFit, M: float) -> float:
    """Sharp conditional bias bound (M/2) sum(|w_i| (x_i - x0)^2).

    Valid over outcome functions whose Taylor remainder about x0 is pointwise
    bounded by (M/2)(x - x0)^2, i.e. |second derivative| <= M.
    """
    if M < 0:
        raise ValueError("smoothness bound must be nonnegative")
    if fit.p != 1:
        raise ValueError("worst-case bias bound is defined for local linear fits")
    return 0.5 * M * float(np.sum(np.abs(fit.weights[fit.idx]) * fit.t * fit.t))
