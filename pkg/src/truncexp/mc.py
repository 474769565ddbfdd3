"""Monte Carlo harness for the location-scale simulation designs.

Data follow Y = m_j(X) + sigma(X) * eps with X uniform on [-1, 1] and eps
standard normal; the truncated mean then has the closed form
m_j(x) - phi(q_eta) / eta * sigma(x).  Each replication selects worst-case-RMSE
bandwidths for the infeasible and feasible estimators (true curvature bound
M = 2 or the data-driven rule of thumb), evaluates both estimators, and forms
bias-aware 95% intervals with the exact conditional worst-case bias.
Replications are keyed by a counter-based generator, so results are
bit-identical across thread counts.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import _fast, reference
from .data import Sample
from .errors import EstimationError, NegativeScale
from .inference import GRID_SIZE, PILOT_FRACTION, SELECTOR_FLOOR, candidate_grid
from .kernels import KernelSpec, TRIANGULAR

HOMO = "homoskedastic"
HET = "heteroskedastic"
_NOISES = (HOMO, HET)
_ETAS = (0.2, 0.5, 0.8)
_SQRT2PI = float(np.sqrt(2.0 * np.pi))

# pivot-only first stage inside the harness; enumeration is O(n^3) per window
_MC_MAX_ENUM = 0


class CellFailed(EstimationError):
    """More than 1% of replications in a cell failed to fit."""


def _s(v):
    return np.maximum(v, 0.0) ** 2


def m_design(design_id: int, x):
    """Conditional mean functions of the three simulation designs."""
    x = np.asarray(x, dtype=float)
    if design_id == 1:
        return x**2 - 2.0 * _s(np.abs(x) - 0.25)
    if design_id == 2:
        return x**2 - 2.0 * _s(np.abs(x) - 0.2) + 2.0 * _s(np.abs(x) - 0.5) - 2.0 * _s(np.abs(x) - 0.65)
    if design_id == 3:
        return ((x + 1.0) ** 2 - 2.0 * _s(x + 0.2) + 2.0 * _s(x - 0.2)
                - 2.0 * _s(x - 0.4) + 2.0 * _s(x - 0.7) - 0.92)
    raise ValueError("design_id must be 1, 2, or 3")


def sigma_design(noise: str, x):
    x = np.asarray(x, dtype=float)
    if noise == HOMO:
        return np.full_like(x, 0.5)
    if noise == HET:
        return 0.5 + x
    raise ValueError(f"noise must be one of {_NOISES}")


@dataclass(frozen=True)
class McDesign:
    design_id: int
    noise: str
    eta: float
    n: int = 1000
    reps: int = 10000
    seed: int = 20210914
    bandwidth_rule: str = "true_m"  # or "rot"
    M: float = 2.0
    x0: float = 0.0
    kernel: KernelSpec = TRIANGULAR
    alpha: float = 0.05

    def __post_init__(self):
        if self.design_id not in (1, 2, 3):
            raise ValueError("design_id must be 1, 2, or 3")
        if self.noise not in _NOISES:
            raise ValueError(f"noise must be one of {_NOISES}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie strictly inside (0, 1)")
        if self.n < 1 or self.reps < 1:
            raise ValueError("n and reps must be positive")
        if self.bandwidth_rule not in ("true_m", "rot"):
            raise ValueError("bandwidth_rule must be 'true_m' or 'rot'")


@dataclass(frozen=True)
class McReport:
    design: McDesign
    rmse_infeasible: float
    rmse_feasible: float
    rms_distance: float
    coverage_infeasible: float
    coverage_feasible: float
    mean_h_infeasible: float
    mean_h_feasible: float
    mean_ci_length_infeasible: float
    mean_ci_length_feasible: float
    se: dict = field(default_factory=dict)
    n_failed: int = 0


def rng_for(seed: int, rep_index: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, rep, stream)."""
    key = np.array([np.uint64(seed), np.uint64(rep_index) * np.uint64(64) + np.uint64(stream)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gen_sample(design: McDesign, rep_index: int) -> Sample:
    """Draw one replication; deterministic given (seed, rep_index)."""
    x = rng_for(design.seed, rep_index, 0).uniform(-1.0, 1.0, design.n)
    eps = rng_for(design.seed, rep_index, 1).standard_normal(design.n)
    y = m_design(design.design_id, x) + sigma_design(design.noise, x) * eps
    return Sample(x, y)


def truth(design: McDesign, eta: float | None = None, x: float = 0.0) -> float:
    """Closed-form truncated mean m_j(x) - phi(q_eta)/eta * sigma(x)."""
    eta = design.eta if eta is None else eta
    sig = float(sigma_design(design.noise, x))
    if sig <= 0.0:
        raise NegativeScale(f"scale function is {sig} at x={x}")
    q = float(ndtri(eta))
    phi = np.exp(-0.5 * q * q) / _SQRT2PI
    return float(m_design(design.design_id, x)) - phi / eta * sig


def quantile_truth(design: McDesign, eta: float, x):
    """Conditional quantile m_j(x) + sigma(x) q_eta, taken literally in sigma."""
    return np.asarray(m_design(design.design_id, x)
                      + sigma_design(design.noise, x) * float(ndtri(eta)), dtype=float)


def _run_one_rep(design: McDesign, rep: int, tgt: float, z_hi: float, z_lo: float) -> np.ndarray:
    sample = gen_sample(design, rep)
    order = np.argsort(sample.x, kind="stable")
    xs = np.ascontiguousarray(sample.x[order])
    ys = np.ascontiguousarray(sample.y[order])
    psit = np.empty(xs.size)
    qvals = quantile_truth(design, design.eta, xs)
    _fast.psi_fill(ys, qvals, design.eta, 0, psit)
    grid = candidate_grid(xs, GRID_SIZE)
    if design.bandwidth_rule == "rot":
        M, status = _fast.rot_smoothness_impl(xs, ys, design.eta, 0)
        if status != 0 or not np.isfinite(M) or M <= 0.0:
            out = np.full(14, np.nan)
            out[0] = 10.0
            return out
    else:
        M = design.M
    return _fast.run_rep_tables(
        xs, ys, psit, design.eta, float(M), tgt, design.alpha, z_hi, z_lo,
        grid, design.kernel.code, SELECTOR_FLOOR, PILOT_FRACTION, _MC_MAX_ENUM,
    )


def run_cell(design: McDesign, threads: int = 1) -> McReport:
    """All replications of one simulation cell.

    Raises CellFailed when more than 1% of replications fail to produce a fit.
    """
    tgt = truth(design, x=design.x0)
    z_hi = float(ndtri(1.0 - design.alpha / 2.0))
    z_lo = float(ndtri(1.0 - design.alpha))
    S = design.reps
    out = np.empty((S, 14))

    def work(lo, hi):
        for rep in range(lo, hi):
            out[rep] = _run_one_rep(design, rep, tgt, z_hi, z_lo)

    if threads <= 1:
        work(0, S)
    else:
        bounds = np.linspace(0, S, threads + 1).astype(int)
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
            futs = [ex.submit(work, bounds[i], bounds[i + 1]) for i in range(threads)]
            for f in futs:
                f.result()

    ok = out[:, 0] == 0.0
    n_failed = int(S - ok.sum())
    if n_failed > 0.01 * S:
        raise CellFailed(f"{n_failed} of {S} replications failed in cell {design}")
    o = out[ok]
    e_inf = o[:, 2] - tgt
    e_feas = o[:, 7] - tgt
    d = o[:, 7] - o[:, 2]
    S_ok = o.shape[0]

    def _rmse(e):
        return float(np.sqrt(np.mean(e * e)))

    def _rmse_se(e):
        r = _rmse(e)
        return float(np.std(e * e) / (2.0 * r * np.sqrt(S_ok))) if r > 0 else 0.0

    def _mean_se(v):
        return float(np.std(v) / np.sqrt(S_ok))

    def _cov_se(p):
        return float(np.sqrt(p * (1.0 - p) / S_ok))

    cov_i = float(np.mean(o[:, 5]))
    cov_f = float(np.mean(o[:, 12]))
    return McReport(
        design=design,
        rmse_infeasible=_rmse(e_inf),
        rmse_feasible=_rmse(e_feas),
        rms_distance=_rmse(d),
        coverage_infeasible=cov_i,
        coverage_feasible=cov_f,
        mean_h_infeasible=float(np.mean(o[:, 1])),
        mean_h_feasible=float(np.mean(o[:, 8])),
        mean_ci_length_infeasible=float(np.mean(o[:, 6])),
        mean_ci_length_feasible=float(np.mean(o[:, 13])),
        se={
            "rmse_infeasible": _rmse_se(e_inf),
            "rmse_feasible": _rmse_se(e_feas),
            "rms_distance": _rmse_se(d),
            "coverage_infeasible": _cov_se(cov_i),
            "coverage_feasible": _cov_se(cov_f),
            "mean_h_infeasible": _mean_se(o[:, 1]),
            "mean_h_feasible": _mean_se(o[:, 8]),
            "mean_ci_length_infeasible": _mean_se(o[:, 6]),
            "mean_ci_length_feasible": _mean_se(o[:, 13]),
        },
        n_failed=n_failed,
    )


_TABLES = {"1": "true_m", "2": "true_m", "f1": "rot"}


def cells_for_table(table_id: str, reps: int = 10000, n: int = 1000,
                    seed: int = 20210914) -> list[McDesign]:
    table_id = str(table_id).lower()
    if table_id not in _TABLES:
        raise ValueError("table id must be 1, 2, or f1")
    rule = _TABLES[table_id]
    return [
        McDesign(design_id=d, noise=noise, eta=eta, n=n, reps=reps, seed=seed,
                 bandwidth_rule=rule)
        for noise in _NOISES for eta in _ETAS for d in (1, 2, 3)
    ]


def reference_for(table_id: str, design: McDesign) -> dict:
    key = (design.design_id, design.noise, design.eta)
    table_id = str(table_id).lower()
    if table_id == "1":
        return reference.TABLE1[key]
    if table_id == "2":
        return reference.TABLE2[key]
    return reference.TABLE_F1[key]


def run_table(table_id: str, reps: int = 10000, n: int = 1000, seed: int = 20210914,
              threads: int = 1, progress=None) -> list[McReport]:
    """Run all 18 cells of a table; returns one report per cell."""
    reports = []
    for design in cells_for_table(table_id, reps=reps, n=n, seed=seed):
        reports.append(run_cell(design, threads=threads))
        if progress is not None:
            progress(reports[-1])
    return reports


def table_rows(table_id: str, reports: list[McReport]) -> list[dict]:
    """Flat comparison rows (one per cell) with reference columns attached."""
    rows = []
    table_id = str(table_id).lower()
    for rep in reports:
        ref = reference_for(table_id, rep.design)
        row = {
            "table": table_id,
            "design": rep.design.design_id,
            "noise": rep.design.noise,
            "eta": rep.design.eta,
            "n": rep.design.n,
            "reps": rep.design.reps,
            "n_failed": rep.n_failed,
        }
        if table_id == "1":
            row.update({
                "rmse_infeasible_x100": 100.0 * rep.rmse_infeasible,
                "rmse_feasible_x100": 100.0 * rep.rmse_feasible,
                "distance_x100": 100.0 * rep.rms_distance,
                "se_rmse_infeasible_x100": 100.0 * rep.se["rmse_infeasible"],
                "se_rmse_feasible_x100": 100.0 * rep.se["rmse_feasible"],
                "se_distance_x100": 100.0 * rep.se["rms_distance"],
                "ref_rmse_infeasible_x100": ref["rmse_infeasible"],
                "ref_rmse_feasible_x100": ref["rmse_feasible"],
                "ref_distance_x100": ref["distance"],
            })
        else:
            row.update({
                "coverage_infeasible_pct": 100.0 * rep.coverage_infeasible,
                "coverage_feasible_pct": 100.0 * rep.coverage_feasible,
                "bandwidth_infeasible": rep.mean_h_infeasible,
                "bandwidth_feasible": rep.mean_h_feasible,
                "ci_length_infeasible": rep.mean_ci_length_infeasible,
                "ci_length_feasible": rep.mean_ci_length_feasible,
                "se_coverage_infeasible_pct": 100.0 * rep.se["coverage_infeasible"],
                "se_coverage_feasible_pct": 100.0 * rep.se["coverage_feasible"],
                "ref_coverage_infeasible_pct": ref["coverage_infeasible"],
                "ref_coverage_feasible_pct": ref["coverage_feasible"],
                "ref_bandwidth_infeasible": ref["bandwidth_infeasible"],
                "ref_bandwidth_feasible": ref["bandwidth_feasible"],
                "ref_ci_length_infeasible": ref["ci_length_infeasible"],
                "ref_ci_length_feasible": ref["ci_length_feasible"],
            })
        rows.append(row)
    return rows


def format_table(table_id: str, reports: list[McReport]) -> str:
    """Human-readable cell-by-cell comparison against the reference values."""
    rows = table_rows(table_id, reports)
    lines = []
    if str(table_id).lower() == "1":
        hdr = (f"{'design':>6} {'noise':>15} {'eta':>4} | "
               f"{'rmse_inf':>8} {'ref':>6} | {'rmse_feas':>9} {'ref':>6} | "
               f"{'dist':>6} {'ref':>6}")
        lines.append(hdr)
        lines.append("-" * len(hdr))
        for r in rows:
            lines.append(
                f"{r['design']:>6} {r['noise']:>15} {r['eta']:>4} | "
                f"{r['rmse_infeasible_x100']:>8.3f} {r['ref_rmse_infeasible_x100']:>6.3f} | "
                f"{r['rmse_feasible_x100']:>9.3f} {r['ref_rmse_feasible_x100']:>6.3f} | "
                f"{r['distance_x100']:>6.3f} {r['ref_distance_x100']:>6.3f}"
            )
    else:
        hdr = (f"{'design':>6} {'noise':>15} {'eta':>4} | "
               f"{'cov_inf':>7} {'ref':>5} | {'cov_feas':>8} {'ref':>5} | "
               f"{'h_inf':>6} {'ref':>6} | {'h_feas':>6} {'ref':>6} | "
               f"{'len_inf':>7} {'ref':>6} | {'len_feas':>8} {'ref':>6}")
        lines.append(hdr)
        lines.append("-" * len(hdr))
        for r in rows:
            lines.append(
                f"{r['design']:>6} {r['noise']:>15} {r['eta']:>4} | "
                f"{r['coverage_infeasible_pct']:>7.1f} {r['ref_coverage_infeasible_pct']:>5.1f} | "
                f"{r['coverage_feasible_pct']:>8.1f} {r['ref_coverage_feasible_pct']:>5.1f} | "
                f"{r['bandwidth_infeasible']:>6.3f} {r['ref_bandwidth_infeasible']:>6.3f} | "
                f"{r['bandwidth_feasible']:>6.3f} {r['ref_bandwidth_feasible']:>6.3f} | "
                f"{r['ci_length_infeasible']:>7.3f} {r['ref_ci_length_infeasible']:>6.3f} | "
                f"{r['ci_length_feasible']:>8.3f} {r['ref_ci_length_feasible']:>6.3f}"
            )
    return "\n".join(lines)
