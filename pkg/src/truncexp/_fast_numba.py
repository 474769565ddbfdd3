"""Compiled hot kernels: check-loss solvers, weighted fits, and the table runner.

Every function here has a vectorized twin in ``_fast_numpy`` with identical
signatures and semantics; ``_fast`` picks the backend at import time.
"""

import math

import numpy as np
from numba import njit

NUMBA_BACKEND = True

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def kernel_weight(u, code):
    a = abs(u)
    if a > 1.0:
        return 0.0
    if code == 0:
        return 1.0 - a
    if code == 1:
        return 0.5
    return 0.75 * (1.0 - a * a)


@njit(**_JIT)
def check_loss(t, y, w, eta, b0, b1):
    L = 0.0
    for i in range(t.size):
        r = y[i] - b0 - b1 * t[i]
        L += w[i] * r * (eta if r > 0.0 else eta - 1.0)
    return L


@njit(**_JIT)
def _rotate(t, y, w, eta, anchor):
    """Exact line search over lines through point ``anchor``.

    The profiled check loss is piecewise linear in the slope with kinks at the
    pairwise slopes; the minimizer is a weighted quantile of those kinks.
    Returns (slope, partner_index) or partner -1 when no second abscissa exists.
    """
    n = t.size
    s = np.empty(n)
    u = np.empty(n)
    idx = np.empty(n, np.int64)
    m = 0
    theta = 0.0
    for k in range(n):
        c = t[k] - t[anchor]
        if c == 0.0:
            continue
        uk = w[k] * abs(c)
        s[m] = (y[k] - y[anchor]) / c
        u[m] = uk
        idx[m] = k
        m += 1
        theta += eta * uk if c > 0.0 else (1.0 - eta) * uk
    if m == 0:
        return 0.0, -1
    order = np.argsort(s[:m])
    cum = 0.0
    tol = 1e-12 * (1.0 + theta)
    pick = order[m - 1]
    for p in range(m):
        o = order[p]
        cum += u[o]
        if cum >= theta - tol:
            pick = o
            break
    return s[pick], idx[pick]


@njit(**_JIT)
def solve_qr_p1_pivot(t, y, w, eta, b0_init, b1_init, use_init):
    """Exact weighted local linear quantile fit by vertex pivoting.

    Starts from the vertex nearest the supplied line (or a central point) and
    alternates exact rotations about the two interpolated points until neither
    improves; on a convex piecewise-linear objective that terminates at a
    global minimizer.  Returns (q0, q1, loss, status), status 1 when fewer
    than two distinct abscissae carry positive weight.
    """
    n = t.size
    tmin = np.inf
    tmax = -np.inf
    for k in range(n):
        if w[k] > 0.0:
            if t[k] < tmin:
                tmin = t[k]
            if t[k] > tmax:
                tmax = t[k]
    if not (tmax > tmin):
        return 0.0, 0.0, np.nan, 1

    if use_init:
        anchor = 0
        best = np.inf
        for k in range(n):
            r = abs(y[k] - b0_init - b1_init * t[k])
            if w[k] > 0.0 and r < best:
                best = r
                anchor = k
    else:
        anchor = 0
        best = -np.inf
        for k in range(n):
            if w[k] > best:
                best = w[k]
                anchor = k

    b1, j = _rotate(t, y, w, eta, anchor)
    if j < 0:
        return 0.0, 0.0, np.nan, 1
    i = anchor
    b0 = y[i] - b1 * t[i]
    L = check_loss(t, y, w, eta, b0, b1)
    about_i = False
    stale = 0
    for _ in range(4 * n + 16):
        a = i if about_i else j
        s, k = _rotate(t, y, w, eta, a)
        if k >= 0:
            nb0 = y[a] - s * t[a]
            nL = check_loss(t, y, w, eta, nb0, s)
            if nL < L - 1e-14 * (1.0 + abs(L)):
                L = nL
                b0 = nb0
                b1 = s
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
    return b0, b1, L, 0


@njit(**_JIT)
def solve_qr_p1_enum(t, y, w, eta):
    """Exact fit by enumerating all pair lines plus horizontal single-point lines.

    Ties in the loss break toward the smallest |slope|, then smallest
    |intercept|.  Returns (q0, q1, loss, status).
    """
    n = t.size
    bL = np.inf
    bq0 = np.nan
    bq1 = np.nan
    found = False
    for i in range(n):
        L = check_loss(t, y, w, eta, y[i], 0.0)
        if (not found or L < bL
                or (L == bL and (abs(0.0) < abs(bq1)
                                 or (abs(0.0) == abs(bq1) and abs(y[i]) < abs(bq0))))):
            bL = L
            bq0 = y[i]
            bq1 = 0.0
            found = True
        for j in range(i + 1, n):
            if t[j] == t[i]:
                continue
            b1 = (y[j] - y[i]) / (t[j] - t[i])
            b0 = y[i] - b1 * t[i]
            L = check_loss(t, y, w, eta, b0, b1)
            if (L < bL
                    or (L == bL and (abs(b1) < abs(bq1)
                                     or (abs(b1) == abs(bq1) and abs(b0) < abs(bq0))))):
                bL = L
                bq0 = b0
                bq1 = b1
    tmin = np.inf
    tmax = -np.inf
    for k in range(n):
        if w[k] > 0.0:
            if t[k] < tmin:
                tmin = t[k]
            if t[k] > tmax:
                tmax = t[k]
    if not (tmax > tmin):
        return 0.0, 0.0, np.nan, 1
    return bq0, bq1, bL, 0


@njit(**_JIT)
def irls_qr_p1(t, y, w, eta, eps, max_iter):
    """Smoothed check-loss minimization by iteratively reweighted least squares."""
    n = t.size
    S0 = S1 = S2 = T0 = T1 = 0.0
    for i in range(n):
        S0 += w[i]
        S1 += w[i] * t[i]
        S2 += w[i] * t[i] * t[i]
        T0 += w[i] * y[i]
        T1 += w[i] * t[i] * y[i]
    den = S0 * S2 - S1 * S1
    if den <= 0.0:
        return 0.0, 0.0, 1
    b1 = (S0 * T1 - S1 * T0) / den
    b0 = (S2 * T0 - S1 * T1) / den
    for _ in range(max_iter):
        A0 = A1 = A2 = C0 = C1 = 0.0
        for i in range(n):
            r = y[i] - b0 - b1 * t[i]
            g = eta if r > 0.0 else 1.0 - eta
            om = w[i] * g / max(abs(r), eps)
            A0 += om
            A1 += om * t[i]
            A2 += om * t[i] * t[i]
            C0 += om * y[i]
            C1 += om * t[i] * y[i]
        d = A0 * A2 - A1 * A1
        if d <= 0.0:
            break
        nb1 = (A0 * C1 - A1 * C0) / d
        nb0 = (A2 * C0 - A1 * C1) / d
        if abs(nb0 - b0) + abs(nb1 - b1) <= 1e-11 * (1.0 + abs(b0) + abs(b1)):
            b0, b1 = nb0, nb1
            break
        b0, b1 = nb0, nb1
    return b0, b1, 0


@njit(**_JIT)
def solve_qr_p1(t, y, w, eta, max_enum, b0_init, b1_init, use_init):
    """Weighted local linear quantile fit: enumeration up to ``max_enum``
    positive-weight points, otherwise IRLS warm start plus exact pivoting."""
    n_eff = 0
    for i in range(w.size):
        if w[i] > 0.0:
            n_eff += 1
    if n_eff <= max_enum:
        return solve_qr_p1_enum(t, y, w, eta)
    if not use_init:
        lo = np.inf
        hi = -np.inf
        for i in range(y.size):
            if w[i] > 0.0:
                if y[i] < lo:
                    lo = y[i]
                if y[i] > hi:
                    hi = y[i]
        eps = 1e-6 * max(hi - lo, 1e-12)
        b0_init, b1_init, st = irls_qr_p1(t, y, w, eta, eps, 80)
        if st != 0:
            return 0.0, 0.0, np.nan, 1
    return solve_qr_p1_pivot(t, y, w, eta, b0_init, b1_init, True)


@njit(**_JIT)
def wls_linear_stats(t, out, w, M):
    """Local linear WLS intercept plus its sandwich and worst-case-bias sums.

    Returns (b0, b1, ehw, worst_bias, sum_weff_sq, status).  ``ehw`` is
    sum(w_eff^2 r^2); ``worst_bias`` is (M/2) sum(|w_eff| t^2).
    """
    n = t.size
    S0 = S1 = S2 = T0 = T1 = 0.0
    scale = 0.0
    for i in range(n):
        if abs(t[i]) > scale:
            scale = abs(t[i])
    if scale == 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 1
    for i in range(n):
        u = t[i] / scale
        S0 += w[i]
        S1 += w[i] * u
        S2 += w[i] * u * u
        T0 += w[i] * out[i]
        T1 += w[i] * u * out[i]
    den = S0 * S2 - S1 * S1
    if den <= 1e-10 * S0 * S2 or den <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 1
    b1u = (S0 * T1 - S1 * T0) / den
    b0 = (S2 * T0 - S1 * T1) / den
    ehw = 0.0
    worst = 0.0
    sw2 = 0.0
    for i in range(n):
        u = t[i] / scale
        weff = w[i] * (S2 - S1 * u) / den
        r = out[i] - b0 - b1u * u
        ehw += weff * weff * r * r
        worst += abs(weff) * t[i] * t[i]
        sw2 += weff * weff
    return b0, b1u / scale, ehw, 0.5 * M * worst, sw2, 0


@njit(**_JIT)
def _window(xs, x0, h, side_code):
    """Index range [lo, hi) of the sorted covariate within the h-window.

    side_code: 0 two-sided, 1 left of cutoff (x < x0), 2 right (x >= x0).
    """
    lo = np.searchsorted(xs, x0 - h, side="left")
    hi = np.searchsorted(xs, x0 + h, side="right")
    if side_code == 1:
        hi = min(hi, np.searchsorted(xs, x0, side="left"))
    elif side_code == 2:
        lo = max(lo, np.searchsorted(xs, x0, side="left"))
    return lo, hi


@njit(**_JIT)
def pilot_resid_var(xs, out, x0, h0, kcode, side_code):
    """Kernel-weighted mean squared residual of a local linear fit at h0,
    with an n/(n-2) degrees-of-freedom correction.  Returns (var, status)."""
    lo, hi = _window(xs, x0, h0, side_code)
    m = hi - lo
    if m < 4:
        return np.nan, 1
    S0 = S1 = S2 = T0 = T1 = 0.0
    ne = 0
    for i in range(lo, hi):
        u = (xs[i] - x0) / h0
        wi = kernel_weight(u, kcode)
        if wi <= 0.0:
            continue
        ne += 1
        S0 += wi
        S1 += wi * u
        S2 += wi * u * u
        T0 += wi * out[i]
        T1 += wi * u * out[i]
    den = S0 * S2 - S1 * S1
    if ne < 4 or den <= 1e-10 * S0 * S2 or den <= 0.0:
        return np.nan, 1
    b1 = (S0 * T1 - S1 * T0) / den
    b0 = (S2 * T0 - S1 * T1) / den
    acc = 0.0
    for i in range(lo, hi):
        u = (xs[i] - x0) / h0
        wi = kernel_weight(u, kcode)
        if wi <= 0.0:
            continue
        r = out[i] - b0 - b1 * u
        acc += wi * r * r
    return acc / S0 * ne / (ne - 2.0), 0


@njit(**_JIT)
def select_bandwidth(xs, x0, grid, kcode, side_code, M, s2psi, floor):
    """Grid minimizer of worst-case squared bias plus pilot variance.

    criterion(h) = ((M/2) sum |w_eff| t^2)^2 + s2psi * sum w_eff^2.
    Candidates with fewer than ``floor`` positive-weight points, fewer than
    two distinct abscissae, or a singular design are skipped.
    Returns (h, criterion, status); status 1 when every candidate failed.
    """
    best = np.inf
    hbest = np.nan
    for g in range(grid.size):
        h = grid[g]
        lo, hi = _window(xs, x0, h, side_code)
        if hi - lo < floor:
            continue
        S0 = S1 = S2 = 0.0
        ne = 0
        tmin = np.inf
        tmax = -np.inf
        for i in range(lo, hi):
            t = xs[i] - x0
            wi = kernel_weight(t / h, kcode)
            if wi <= 0.0:
                continue
            ne += 1
            if t < tmin:
                tmin = t
            if t > tmax:
                tmax = t
            u = t / h
            S0 += wi
            S1 += wi * u
            S2 += wi * u * u
        if ne < floor or not (tmax > tmin):
            continue
        den = S0 * S2 - S1 * S1
        if den <= 1e-10 * S0 * S2 or den <= 0.0:
            continue
        worst = 0.0
        sw2 = 0.0
        for i in range(lo, hi):
            t = xs[i] - x0
            wi = kernel_weight(t / h, kcode)
            if wi <= 0.0:
                continue
            u = t / h
            weff = wi * (S2 - S1 * u) / den
            worst += abs(weff) * t * t
            sw2 += weff * weff
        crit = (0.5 * M * worst) ** 2 + s2psi * sw2
        if crit < best:
            best = crit
            hbest = h
    if not np.isfinite(hbest):
        return np.nan, np.nan, 1
    return hbest, best, 0


@njit(**_JIT)
def norm_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@njit(**_JIT)
def folded_normal_cv_impl(t, alpha, z_hi, z_lo):
    """1-alpha quantile of |N(t,1)| by bisection on [z_lo, t + z_hi + 1]."""
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


@njit(**_JIT)
def psi_fill(y, q, eta, upper, out):
    """Orthogonal generated outcome; eta is the kept-mass level for both tails."""
    for i in range(y.size):
        if upper == 0:
            out[i] = (y[i] - (1.0 - eta) * q[i]) / eta if y[i] <= q[i] else q[i]
        else:
            out[i] = (y[i] - (1.0 - eta) * q[i]) / eta if y[i] >= q[i] else q[i]


@njit(**_JIT)
def _solve5(A, b):
    return np.linalg.solve(A, b)


@njit(**_JIT)
def quartic_quantile_irls(z, yc, eta, eps, max_iter):
    """Unweighted quartic check-loss fit on standardized data via IRLS.

    Returns the 5 polynomial coefficients in the standardized covariate.
    """
    n = z.size
    X = np.empty((n, 5))
    for i in range(n):
        X[i, 0] = 1.0
        for j in range(1, 5):
            X[i, j] = X[i, j - 1] * z[i]
    A = X.T @ X
    b = X.T @ yc
    beta = _solve5(A, b)
    for _ in range(max_iter):
        Aw = np.zeros((5, 5))
        bw = np.zeros(5)
        for i in range(n):
            r = yc[i]
            for j in range(5):
                r -= X[i, j] * beta[j]
            g = eta if r > 0.0 else 1.0 - eta
            om = g / max(abs(r), eps)
            for j in range(5):
                bw[j] += om * X[i, j] * yc[i]
                for k in range(j, 5):
                    Aw[j, k] += om * X[i, j] * X[i, k]
        for j in range(5):
            for k in range(j):
                Aw[j, k] = Aw[k, j]
        nb = _solve5(Aw, bw)
        delta = 0.0
        mag = 1.0
        for j in range(5):
            delta += abs(nb[j] - beta[j])
            mag += abs(beta[j])
        beta = nb
        if delta <= 1e-11 * mag:
            break
    return beta


@njit(**_JIT)
def rot_smoothness_impl(x, y, eta, upper):
    """Rule-of-thumb curvature bound: quartic quantile fit, orthogonal
    transform, quartic least squares, max |second derivative| over observed x.

    Returns (M, status)."""
    n = x.size
    if n < 5:
        return np.nan, 1
    mx = 0.0
    for i in range(n):
        mx += x[i]
    mx /= n
    sx = 0.0
    for i in range(n):
        sx += (x[i] - mx) ** 2
    sx = math.sqrt(sx / max(n - 1, 1))
    if sx <= 0.0:
        return np.nan, 1
    z = np.empty(n)
    for i in range(n):
        z[i] = (x[i] - mx) / sx

    ys = np.sort(y)
    q25 = ys[int(0.25 * (n - 1))]
    q75 = ys[int(0.75 * (n - 1))]
    iqr = max(q75 - q25, 1e-12)
    eps = 1e-6 * iqr

    level = eta if upper == 0 else 1.0 - eta
    beta_q = quartic_quantile_irls(z, y, level, eps, 200)

    qfit = np.empty(n)
    for i in range(n):
        acc = 0.0
        p = 1.0
        for j in range(5):
            acc += beta_q[j] * p
            p *= z[i]
        qfit[i] = acc
    psi = np.empty(n)
    psi_fill(y, qfit, eta, upper, psi)

    X = np.empty((n, 5))
    for i in range(n):
        X[i, 0] = 1.0
        for j in range(1, 5):
            X[i, j] = X[i, j - 1] * z[i]
    beta = _solve5(X.T @ X, X.T @ psi)

    best = 0.0
    for i in range(n):
        d2 = 2.0 * beta[2] + 6.0 * beta[3] * z[i] + 12.0 * beta[4] * z[i] * z[i]
        v = abs(d2) / (sx * sx)
        if v > best:
            best = v
    return best, 0


@njit(**_JIT)
def run_rep_tables(xs, ys, psit, eta, M, truth, alpha, z_hi, z_lo, grid,
                   kcode, floor, h0_frac, max_enum):
    """Single Monte Carlo replication of the simulation-table protocol.

    Selects worst-case-RMSE bandwidths for the infeasible and feasible
    estimators, evaluates both, and forms bias-aware intervals with the exact
    conditional worst-case bias.  Returns a 14-vector:
    [status, h_inf, m_inf, se_inf, bias_inf, cover_inf, cihalf_inf,
     m_feas_at_hinf, h_feas, m_feas, se_feas, bias_feas, cover_feas,
     cihalf_feas].
    """
    out = np.full(14, np.nan)
    n = xs.size
    span = xs[n - 1] - xs[0]
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
    w0 = np.empty(t0.size)
    for i in range(t0.size):
        w0[i] = kernel_weight(t0[i] / h0, kcode)
    q0p, q1p, _, st = solve_qr_p1(t0, ys[lo:hi], w0, eta, max_enum, 0.0, 0.0, False)
    if st != 0:
        out[0] = 4.0
        return out
    psip = np.empty(n)
    qlin = np.empty(n)
    for i in range(n):
        qlin[i] = q0p + q1p * xs[i]
    psi_fill(ys, qlin, eta, 0, psip)
    s2_feas, st = pilot_resid_var(xs, psip, 0.0, h0, kcode, 0)
    if st != 0:
        out[0] = 5.0
        return out
    h_feas, _, st = select_bandwidth(xs, 0.0, grid, kcode, 0, M, s2_feas, floor)
    if st != 0:
        out[0] = 6.0
        return out

    # infeasible at its bandwidth
    lo, hi = _window(xs, 0.0, h_inf, 0)
    t = xs[lo:hi]
    w = np.empty(t.size)
    for i in range(t.size):
        w[i] = kernel_weight(t[i] / h_inf, kcode)
    b0, _, ehw, worst, _, st = wls_linear_stats(t, psit[lo:hi], w, M)
    if st != 0 or ehw <= 0.0:
        out[0] = 7.0
        return out
    se = math.sqrt(ehw)
    cv = folded_normal_cv_impl(worst / se, alpha, z_hi, z_lo)
    out[1] = h_inf
    out[2] = b0
    out[3] = se
    out[4] = worst
    out[5] = 1.0 if abs(b0 - truth) <= cv * se else 0.0
    out[6] = cv * se

    # feasible two-stage fit at a bandwidth
    for which in range(2):
        h = h_inf if which == 0 else h_feas
        lo, hi = _window(xs, 0.0, h, 0)
        t = xs[lo:hi]
        yw = ys[lo:hi]
        w = np.empty(t.size)
        for i in range(t.size):
            w[i] = kernel_weight(t[i] / h, kcode)
        q0, q1, _, st = solve_qr_p1(t, yw, w, eta, max_enum, q0p, q1p, True)
        if st != 0:
            out[0] = 8.0
            return out
        psih = np.empty(t.size)
        qloc = np.empty(t.size)
        for i in range(t.size):
            qloc[i] = q0 + q1 * t[i]
        psi_fill(yw, qloc, eta, 0, psih)
        b0f, _, ehwf, worstf, _, st = wls_linear_stats(t, psih, w, M)
        if st != 0 or ehwf <= 0.0:
            out[0] = 9.0
            return out
        if which == 0:
            out[7] = b0f
        else:
            sef = math.sqrt(ehwf)
            cvf = folded_normal_cv_impl(worstf / sef, alpha, z_hi, z_lo)
            out[8] = h_feas
            out[9] = b0f
            out[10] = sef
            out[11] = worstf
            out[12] = 1.0 if abs(b0f - truth) <= cvf * sef else 0.0
            out[13] = cvf * sef
    out[0] = 0.0
    return out
