"""Pure-numpy twins of the compiled kernels in ``_fast_numba``.

Selected by setting TRUNCEXP_NO_NUMBA=1 (or automatically when numba is not
importable).  Slower, but algorithmically identical; the test suite asserts
agreement between the two backends.
"""

import math

import numpy as np
from scipy.special import ndtr

NUMBA_BACKEND = False


def kernel_weight(u, code):
    a = abs(u)
    if a > 1.0:
        return 0.0
    if code == 0:
        return 1.0 - a
    if code == 1:
        return 0.5
    return 0.75 * (1.0 - a * a)


def _weights_arr(u, code):
    a = np.abs(u)
    if code == 0:
        w = 1.0 - a
    elif code == 1:
        w = np.full_like(a, 0.5)
    else:
        w = 0.75 * (1.0 - a * a)
    return np.where(a > 1.0, 0.0, w)


def check_loss(t, y, w, eta, b0, b1):
    r = y - b0 - b1 * t
    return float(np.sum(w * r * np.where(r > 0.0, eta, eta - 1.0)))


def _rotate(t, y, w, eta, anchor):
    c = t - t[anchor]
    mask = c != 0.0
    if not mask.any():
        return 0.0, -1
    cm = c[mask]
    u = w[mask] * np.abs(cm)
    s = (y[mask] - y[anchor]) / cm
    idx = np.nonzero(mask)[0]
    theta = float(np.sum(np.where(cm > 0.0, eta * u, (1.0 - eta) * u)))
    order = np.argsort(s, kind="stable")
    cum = np.cumsum(u[order])
    tol = 1e-12 * (1.0 + theta)
    pos = int(np.searchsorted(cum, theta - tol))
    if pos >= order.size:
        pos = order.size - 1
    pick = order[pos]
    return float(s[pick]), int(idx[pick])


def solve_qr_p1_pivot(t, y, w, eta, b0_init, b1_init, use_init):
    pos = w > 0.0
    if not pos.any() or np.ptp(t[pos]) <= 0.0:
        return 0.0, 0.0, np.nan, 1
    if use_init:
        r = np.abs(y - b0_init - b1_init * t)
        r[~pos] = np.inf
        anchor = int(np.argmin(r))
    else:
        anchor = int(np.argmax(w))
    b1, j = _rotate(t, y, w, eta, anchor)
    if j < 0:
        return 0.0, 0.0, np.nan, 1
    i = anchor
    b0 = y[i] - b1 * t[i]
    L = check_loss(t, y, w, eta, b0, b1)
    about_i = False
    stale = 0
    for _ in range(4 * t.size + 16):
        a = i if about_i else j
        s, k = _rotate(t, y, w, eta, a)
        if k >= 0:
            nb0 = y[a] - s * t[a]
            nL = check_loss(t, y, w, eta, nb0, s)
            if nL < L - 1e-14 * (1.0 + abs(L)):
                L, b0, b1 = nL, nb0, s
                if about_i:
                    j = k
                else:
                    i = k
                stale = 0
            else:
                stale += 1
        else:
            stale += 1
        if stale >= 2:
            break
        about_i = not about_i
    return float(b0), float(b1), float(L), 0


def _loss_many(t, y, w, eta, b0s, b1s):
    r = y[None, :] - b0s[:, None] - b1s[:, None] * t[None, :]
    return np.sum(w[None, :] * r * np.where(r > 0.0, eta, eta - 1.0), axis=1)


def solve_qr_p1_enum(t, y, w, eta):
    n = t.size
    b0s = [y.copy()]
    b1s = [np.zeros(n)]
    for i in range(n):
        keep = t != t[i]
        if not keep.any():
            continue
        slope = (y[keep] - y[i]) / (t[keep] - t[i])
        b1s.append(slope)
        b0s.append(y[i] - slope * t[i])
    b0s = np.concatenate(b0s)
    b1s = np.concatenate(b1s)
    losses = _loss_many(t, y, w, eta, b0s, b1s)
    Lmin = losses.min()
    tied = np.nonzero(losses == Lmin)[0]
    a1 = np.abs(b1s[tied])
    tied = tied[a1 == a1.min()]
    a0 = np.abs(b0s[tied])
    pick = tied[int(np.argmin(a0))]
    pos = w > 0.0
    if not pos.any() or np.ptp(t[pos]) <= 0.0:
        return 0.0, 0.0, np.nan, 1
    return float(b0s[pick]), float(b1s[pick]), float(Lmin), 0


def irls_qr_p1(t, y, w, eta, eps, max_iter):
    S0, S1, S2 = np.sum(w), np.sum(w * t), np.sum(w * t * t)
    T0, T1 = np.sum(w * y), np.sum(w * t * y)
    den = S0 * S2 - S1 * S1
    if den <= 0.0:
        return 0.0, 0.0, 1
    b1 = (S0 * T1 - S1 * T0) / den
    b0 = (S2 * T0 - S1 * T1) / den
    for _ in range(max_iter):
        r = y - b0 - b1 * t
        om = w * np.where(r > 0.0, eta, 1.0 - eta) / np.maximum(np.abs(r), eps)
        A0, A1, A2 = np.sum(om), np.sum(om * t), np.sum(om * t * t)
        C0, C1 = np.sum(om * y), np.sum(om * t * y)
        d = A0 * A2 - A1 * A1
        if d <= 0.0:
            break
        nb1 = (A0 * C1 - A1 * C0) / d
        nb0 = (A2 * C0 - A1 * C1) / d
        done = abs(nb0 - b0) + abs(nb1 - b1) <= 1e-11 * (1.0 + abs(b0) + abs(b1))
        b0, b1 = nb0, nb1
        if done:
            break
    return float(b0), float(b1), 0


def solve_qr_p1(t, y, w, eta, max_enum, b0_init, b1_init, use_init):
    n_eff = int(np.count_nonzero(w > 0.0))
    if n_eff <= max_enum:
        return solve_qr_p1_enum(t, y, w, eta)
    if not use_init:
        ypos = y[w > 0.0]
        eps = 1e-6 * max(float(ypos.max() - ypos.min()), 1e-12)
        b0_init, b1_init, st = irls_qr_p1(t, y, w, eta, eps, 80)
        if st != 0:
            return 0.0, 0.0, np.nan, 1
    return solve_qr_p1_pivot(t, y, w, eta, b0_init, b1_init, True)


def wls_linear_stats(t, out, w, M):
    scale = float(np.max(np.abs(t))) if t.size else 0.0
    if scale == 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 1
    u = t / scale
    S0, S1, S2 = np.sum(w), np.sum(w * u), np.sum(w * u * u)
    den = S0 * S2 - S1 * S1
    if den <= 1e-10 * S0 * S2 or den <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 1
    T0, T1 = np.sum(w * out), np.sum(w * u * out)
    b1u = (S0 * T1 - S1 * T0) / den
    b0 = (S2 * T0 - S1 * T1) / den
    weff = w * (S2 - S1 * u) / den
    r = out - b0 - b1u * u
    ehw = float(np.sum(weff**2 * r**2))
    worst = 0.5 * M * float(np.sum(np.abs(weff) * t * t))
    sw2 = float(np.sum(weff**2))
    return float(b0), float(b1u / scale), ehw, worst, sw2, 0


def _window(xs, x0, h, side_code):
    lo = int(np.searchsorted(xs, x0 - h, side="left"))
    hi = int(np.searchsorted(xs, x0 + h, side="right"))
    if side_code == 1:
        hi = min(hi, int(np.searchsorted(xs, x0, side="left")))
    elif side_code == 2:
        lo = max(lo, int(np.searchsorted(xs, x0, side="left")))
    return lo, hi


def pilot_resid_var(xs, out, x0, h0, kcode, side_code):
    lo, hi = _window(xs, x0, h0, side_code)
    if hi - lo < 4:
        return np.nan, 1
    u = (xs[lo:hi] - x0) / h0
    w = _weights_arr(u, kcode)
    keep = w > 0.0
    ne = int(keep.sum())
    if ne < 4:
        return np.nan, 1
    uk, wk, ok = u[keep], w[keep], out[lo:hi][keep]
    S0, S1, S2 = np.sum(wk), np.sum(wk * uk), np.sum(wk * uk * uk)
    den = S0 * S2 - S1 * S1
    if den <= 1e-10 * S0 * S2 or den <= 0.0:
        return np.nan, 1
    T0, T1 = np.sum(wk * ok), np.sum(wk * uk * ok)
    b1 = (S0 * T1 - S1 * T0) / den
    b0 = (S2 * T0 - S1 * T1) / den
    r = ok - b0 - b1 * uk
    return float(np.sum(wk * r * r) / S0 * ne / (ne - 2.0)), 0


def select_bandwidth(xs, x0, grid, kcode, side_code, M, s2psi, floor):
    best = np.inf
    hbest = np.nan
    for h in grid:
        lo, hi = _window(xs, x0, h, side_code)
        if hi - lo < floor:
            continue
        t = xs[lo:hi] - x0
        w = _weights_arr(t / h, kcode)
        keep = w > 0.0
        if int(keep.sum()) < floor:
            continue
        tk, wk = t[keep], w[keep]
        if np.ptp(tk) <= 0.0:
            continue
        u = tk / h
        S0, S1, S2 = np.sum(wk), np.sum(wk * u), np.sum(wk * u * u)
        den = S0 * S2 - S1 * S1
        if den <= 1e-10 * S0 * S2 or den <= 0.0:
            continue
        weff = wk * (S2 - S1 * u) / den
        crit = (0.5 * M * np.sum(np.abs(weff) * tk * tk)) ** 2 + s2psi * np.sum(weff**2)
        if crit < best:
            best = crit
            hbest = float(h)
    if not np.isfinite(hbest):
        return np.nan, np.nan, 1
    return hbest, float(best), 0


def norm_cdf(x):
    return float(ndtr(x))


def folded_normal_cv_impl(t, alpha, z_hi, z_lo):
    lo = z_lo
    hi = t + z_hi + 1.0
    target = 1.0 - alpha
    for _ in range(200):
        c = 0.5 * (lo + hi)
        if norm_cdf(c - t) - norm_cdf(-c - t) < target:
            lo = c
        else:
            hi = c
        if hi - lo < 1e-10:
            break
    return 0.5 * (lo + hi)


def psi_fill(y, q, eta, upper, out):
    if upper == 0:
        np.copyto(out, np.where(y <= q, (y - (1.0 - eta) * q) / eta, q))
    else:
        np.copyto(out, np.where(y >= q, (y - (1.0 - eta) * q) / eta, q))


def quartic_quantile_irls(z, yc, eta, eps, max_iter):
    X = np.vander(z, 5, increasing=True)
    beta = np.linalg.solve(X.T @ X, X.T @ yc)
    for _ in range(max_iter):
        r = yc - X @ beta
        om = np.where(r > 0.0, eta, 1.0 - eta) / np.maximum(np.abs(r), eps)
        Xw = X * om[:, None]
        nb = np.linalg.solve(X.T @ Xw, Xw.T @ yc)
        done = np.sum(np.abs(nb - beta)) <= 1e-11 * (1.0 + np.sum(np.abs(beta)))
        beta = nb
        if done:
            break
    return beta


def rot_smoothness_impl(x, y, eta, upper):
    n = x.size
    if n < 5:
        return np.nan, 1
    sx = float(np.std(x, ddof=1))
    if sx <= 0.0:
        return np.nan, 1
    z = (x - float(np.mean(x))) / sx
    ys = np.sort(y)
    iqr = max(float(ys[int(0.75 * (n - 1))] - ys[int(0.25 * (n - 1))]), 1e-12)
    eps = 1e-6 * iqr
    level = eta if upper == 0 else 1.0 - eta
    beta_q = quartic_quantile_irls(z, y, level, eps, 200)
    qfit = np.vander(z, 5, increasing=True) @ beta_q
    psi = np.empty(n)
    psi_fill(y, qfit, eta, upper, psi)
    X = np.vander(z, 5, increasing=True)
    beta = np.linalg.solve(X.T @ X, X.T @ psi)
    d2 = np.abs(2.0 * beta[2] + 6.0 * beta[3] * z + 12.0 * beta[4] * z * z) / (sx * sx)
    return float(d2.max()), 0


def run_rep_tables(xs, ys, psit, eta, M, truth, alpha, z_hi, z_lo, grid,
                   kcode, floor, h0_frac, max_enum):
    out = np.full(14, np.nan)
    n = xs.size
    span = xs[-1] - xs[0]
    if span <= 0.0:
        out[0] = 1.0
        return out
    h0 = h0_frac * span

    s2_inf, st = pilot_resid_var(xs, psit, 0.0, h0, kcode, 0)
    if st != 0:
        out[0] = 2.0
        return out
    h_inf, _, st = select_bandwidth(xs, 0.0, grid, kcode, 0, M, s2_inf, floor)
    if st != 0:
        out[0] = 3.0
        return out

    lo, hi = _window(xs, 0.0, h0, 0)
    t0 = xs[lo:hi]
    w0 = _weights_arr(t0 / h0, kcode)
    q0p, q1p, _, st = solve_qr_p1(t0, ys[lo:hi], w0, eta, max_enum, 0.0, 0.0, False)
    if st != 0:
        out[0] = 4.0
        return out
    psip = np.empty(n)
    psi_fill(ys, q0p + q1p * xs, eta, 0, psip)
    s2_feas, st = pilot_resid_var(xs, psip, 0.0, h0, kcode, 0)
    if st != 0:
        out[0] = 5.0
        return out
    h_feas, _, st = select_bandwidth(xs, 0.0, grid, kcode, 0, M, s2_feas, floor)
    if st != 0:
        out[0] = 6.0
        return out

    lo, hi = _window(xs, 0.0, h_inf, 0)
    t = xs[lo:hi]
    w = _weights_arr(t / h_inf, kcode)
    b0, _, ehw, worst, _, st = wls_linear_stats(t, psit[lo:hi], w, M)
    if st != 0 or ehw <= 0.0:
        out[0] = 7.0
        return out
    se = math.sqrt(ehw)
    cv = folded_normal_cv_impl(worst / se, alpha, z_hi, z_lo)
    out[1:7] = (h_inf, b0, se, worst, 1.0 if abs(b0 - truth) <= cv * se else 0.0, cv * se)

    for which in range(2):
        h = h_inf if which == 0 else h_feas
        lo, hi = _window(xs, 0.0, h, 0)
        t = xs[lo:hi]
        yw = ys[lo:hi]
        w = _weights_arr(t / h, kcode)
        q0, q1, _, st = solve_qr_p1(t, yw, w, eta, max_enum, q0p, q1p, True)
        if st != 0:
            out[0] = 8.0
            return out
        psih = np.empty(t.size)
        psi_fill(yw, q0 + q1 * t, eta, 0, psih)
        b0f, _, ehwf, worstf, _, st = wls_linear_stats(t, psih, w, M)
        if st != 0 or ehwf <= 0.0:
            out[0] = 9.0
            return out
        if which == 0:
            out[7] = b0f
        else:
            sef = math.sqrt(ehwf)
            cvf = folded_normal_cv_impl(worstf / sef, alpha, z_hi, z_lo)
            out[8:14] = (h_feas, b0f, sef, worstf,
                         1.0 if abs(b0f - truth) <= cvf * sef else 0.0, cvf * sef)
    out[0] = 0.0
    return out
