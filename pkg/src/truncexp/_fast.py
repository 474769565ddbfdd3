"""Backend dispatch for the hot numeric kernels.

The compiled (numba) backend is the default.  Set TRUNCEXP_NO_NUMBA=1 to force
the pure-numpy fallback; it is also used automatically when numba cannot be
imported.  ``backend_name()`` reports which one is active.
"""

import os

_disabled = os.environ.get("TRUNCEXP_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

if not _disabled:
    try:
        from . import _fast_numba as _impl
    except ImportError:
        from . import _fast_numpy as _impl
else:
    from . import _fast_numpy as _impl


def backend_name() -> str:
    return "numba" if _impl.NUMBA_BACKEND else "numpy"


check_loss = _impl.check_loss
solve_qr_p1 = _impl.solve_qr_p1
solve_qr_p1_enum = _impl.solve_qr_p1_enum
solve_qr_p1_pivot = _impl.solve_qr_p1_pivot
irls_qr_p1 = _impl.irls_qr_p1
wls_linear_stats = _impl.wls_linear_stats
pilot_resid_var = _impl.pilot_resid_var
select_bandwidth = _impl.select_bandwidth
folded_normal_cv_impl = _impl.folded_normal_cv_impl
psi_fill = _impl.psi_fill
rot_smoothness_impl = _impl.rot_smoothness_impl
run_rep_tables = _impl.run_rep_tables
kernel_weight = _impl.kernel_weight
