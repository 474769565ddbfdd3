"""First-stage conditional quantile estimation.

Local linear fits minimize the kernel-weighted check loss exactly: pair
enumeration up to ``max_enum`` in-window points (deterministic tie-breaking),
and an IRLS warm start followed by exact vertex pivoting beyond that.  Higher
orders (needed only for derivative estimation) use IRLS with a local
tuple-interpolation polish on small windows.  A brute-force reference solver
and a global polynomial quantile fit (for the rule-of-thumb smoothness
constant) live here as well.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _fast
from .data import Sample
from .errors import EmptyWindow, RankDeficient, TooLarge
from .kernels import KernelSpec, Side, TRIANGULAR
from .locfit import window_weights

DEFAULT_MAX_ENUM = 400
_POLISH_CAP = 60


@dataclass(frozen=True)
class QuantileFit:
    """Local polynomial quantile fit at x0; coeffs[j] multiplies (x - x0)^j."""

    eta: float
    x0: float
    a: float
    p: int
    coeffs: np.ndarray
    loss: float
    n_eff: int

    @property
    def q0_hat(self) -> float:
        return float(self.coeffs[0])

    @property
    def q1_hat(self) -> float:
        return float(self.coeffs[1]) if self.p >= 1 else 0.0

    def predict(self, x) -> np.ndarray:
        u = np.asarray(x, dtype=float) - self.x0
        return sum(self.coeffs[j] * u**j for j in range(self.p + 1))


def check_loss(t, y, w, eta, coeffs) -> float:
    """Weighted check loss of the polynomial with the given coefficients."""
    r = y - sum(c * t**j for j, c in enumerate(coeffs))
    return float(np.sum(w * r * np.where(r > 0.0, eta, eta - 1.0)))


def _validate(eta, a):
    if not 0.0 < eta < 1.0:
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    if a <= 0:
        raise ValueError("bandwidth must be positive")


def _window_arrays(sample, x0, a, kernel, side):
    w = window_weights(sample.x, x0, a, kernel, side)
    idx = np.nonzero(w > 0.0)[0]
    if idx.size == 0:
        raise EmptyWindow(f"no observation with positive weight in [{x0 - a}, {x0 + a}]")
    return sample.x[idx] - x0, sample.y[idx], w[idx]


def local_quantile_fit(
    sample: Sample,
    x0: float,
    a: float,
    eta: float,
    p: int = 1,
    kernel: KernelSpec = TRIANGULAR,
    side: Side = Side.TWO_SIDED,
    max_enum: int = DEFAULT_MAX_ENUM,
) -> QuantileFit:
    """Kernel-weighted local polynomial check-loss minimizer at x0.

    For p = 1 the solution is an exact vertex of the piecewise-linear program
    (it interpolates at most two in-window points).
    """
    _validate(eta, a)
    t, y, w = _window_arrays(sample, x0, a, kernel, side)
    if np.unique(t).size < p + 1:
        raise RankDeficient(f"need {p + 1} distinct in-window x values, have {np.unique(t).size}")

    if p == 1:
        q0, q1, loss, status = _fast.solve_qr_p1(t, y, w, eta, max_enum, 0.0, 0.0, False)
        if status != 0:
            raise RankDeficient("quantile window design is singular")
        return QuantileFit(eta, float(x0), float(a), 1, np.array([q0, q1]), loss, t.size)

    if p == 0:
        order = np.argsort(y, kind="stable")
        cum = np.cumsum(w[order])
        pos = int(np.searchsorted(cum, eta * cum[-1] - 1e-12 * (1.0 + cum[-1])))
        q0 = y[order[min(pos, t.size - 1)]]
        return QuantileFit(eta, float(x0), float(a), 0,
                           np.array([q0]), check_loss(t, y, w, eta, [q0]), t.size)

    coeffs = _irls_poly(t, y, w, eta, p)
    coeffs = _tuple_polish(t, y, w, eta, p, coeffs)
    return QuantileFit(eta, float(x0), float(a), p, coeffs,
                       check_loss(t, y, w, eta, coeffs), t.size)


def _irls_poly(t, y, w, eta, p):
    """IRLS on the smoothed check loss (width 1e-6 * IQR of in-window y)."""
    q75, q25 = np.percentile(y, [75, 25])
    eps = 1e-6 * max(q75 - q25, 1e-12)
    scale = max(np.max(np.abs(t)), 1e-300)
    Z = np.vander(t / scale, p + 1, increasing=True)
    sw = np.sqrt(w)
    beta, *_ = np.linalg.lstsq(Z * sw[:, None], y * sw, rcond=None)
    for _ in range(200):
        r = y - Z @ beta
        om = w * np.where(r > 0.0, eta, 1.0 - eta) / np.maximum(np.abs(r), eps)
        so = np.sqrt(om)
        nb, *_ = np.linalg.lstsq(Z * so[:, None], y * so, rcond=None)
        done = np.sum(np.abs(nb - beta)) <= 1e-11 * (1.0 + np.sum(np.abs(beta)))
        beta = nb
        if done:
            break
    return beta / scale ** np.arange(p + 1)


def _tuple_polish(t, y, w, eta, p, coeffs):
    """Replace the IRLS solution by the best interpolating (p+1)-tuple nearby.

    Candidate points are the lowest-|residual| observations; enumeration is
    skipped on windows larger than the polish cap.
    """
    n = t.size
    if n > _POLISH_CAP:
        return coeffs
    best_loss = check_loss(t, y, w, eta, coeffs)
    best = np.asarray(coeffs, dtype=float)
    r = np.abs(y - sum(c * t**j for j, c in enumerate(coeffs)))
    cand = np.argsort(r, kind="stable")[: min(n, 4 * (p + 1))]
    for combo in itertools.combinations(cand, p + 1):
        ts = t[list(combo)]
        if np.unique(ts).size < p + 1:
            continue
        V = np.vander(ts, p + 1, increasing=True)
        try:
            c = np.linalg.solve(V, y[list(combo)])
        except np.linalg.LinAlgError:
            continue
        L = check_loss(t, y, w, eta, c)
        if L < best_loss - 1e-14 * (1.0 + abs(best_loss)):
            best_loss = L
            best = c
    return best


def quantile_fit_oracle(
    sample: Sample,
    x0: float,
    a: float,
    eta: float,
    kernel: KernelSpec = TRIANGULAR,
    side: Side = Side.TWO_SIDED,
) -> QuantileFit:
    """Exact reference solver: enumerate every pair line and every horizontal
    single-point line, evaluate the weighted check loss, return the minimizer.

    Ties break toward the smallest |slope|, then the smallest |intercept|.
    Only for p = 1 and windows of at most 200 points.
    """
    _validate(eta, a)
    t, y, w = _window_arrays(sample, x0, a, kernel, side)
    if t.size > 200:
        raise TooLarge(f"oracle accepts at most 200 in-window points, got {t.size}")
    if np.unique(t).size < 2:
        raise RankDeficient("need 2 distinct in-window x values")

    b0s = [y.copy()]
    b1s = [np.zeros(t.size)]
    for i in range(t.size):
        keep = t != t[i]
        if not keep.any():
            continue
        slope = (y[keep] - y[i]) / (t[keep] - t[i])
        b1s.append(slope)
        b0s.append(y[i] - slope * t[i])
    b0s = np.concatenate(b0s)
    b1s = np.concatenate(b1s)
    r = y[None, :] - b0s[:, None] - b1s[:, None] * t[None, :]
    losses = np.sum(w[None, :] * r * np.where(r > 0.0, eta, eta - 1.0), axis=1)
    best = losses.min()
    tied = np.nonzero(losses == best)[0]
    tied = tied[np.abs(b1s[tied]) == np.abs(b1s[tied]).min()]
    pick = tied[int(np.argmin(np.abs(b0s[tied])))]
    return QuantileFit(eta, float(x0), float(a), 1,
                       np.array([b0s[pick], b1s[pick]]), float(best), t.size)


def global_poly_quantile(sample: Sample, eta: float, degree: int = 4) -> np.ndarray:
    """Unweighted polynomial check-loss minimizer on the full sample.

    Returns coefficients in increasing powers of x (not centered).  IRLS on
    the smoothed loss, with the tuple polish on samples small enough to
    enumerate.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    x, y = sample.x, sample.y
    if x.size < degree + 1 or np.unique(x).size < degree + 1:
        raise RankDeficient(f"need at least {degree + 1} distinct covariate values")
    w = np.ones(x.size)
    coeffs = _irls_poly(x, y, w, eta, degree)
    coeffs = _tuple_polish(x, y, w, eta, degree, coeffs)
    return coeffs


def foc_gap(fit: QuantileFit, sample: Sample, kernel: KernelSpec = TRIANGULAR,
            side: Side = Side.TWO_SIDED) -> tuple[float, float]:
    """Largest first-order-condition sum over j in {0, 1}, and its bound.

    At an exact solution, |1/n sum k_a_i ((x_i-x0)/a)^j (eta - 1{y <= qhat})|
    cannot exceed (2/n) max_i k_a_i max(1, |x_i-x0|/a) because at most two
    points are interpolated.
    """
    x, y = sample.x, sample.y
    n = x.size
    u = (x - fit.x0) / fit.a
    w = window_weights(x, fit.x0, fit.a, kernel, side) / fit.a
    ind = (y <= fit.predict(x)).astype(float)
    gap = max(
        abs(float(np.sum(w * u**j * (fit.eta - ind)))) / n for j in (0, 1)
    )
    bound = 2.0 / n * float(np.max(w * np.maximum(1.0, np.abs(u))))
    return gap, bound
