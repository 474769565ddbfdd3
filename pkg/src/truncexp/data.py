"""Sample container shared by all estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Sample:
    """Observations of a covariate, an outcome, and optional 0/1 flags.

    ``d`` marks treatment and ``s`` selection (employment, response, ...).
    Outcome entries may be NaN only where ``s == 0``; those rows are carried
    along but never enter a fit that conditions on selection.
    """

    x: np.ndarray
    y: np.ndarray
    d: np.ndarray | None = None
    s: np.ndarray | None = None

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be one-dimensional and of equal length")
        if x.size < 1:
            raise ValueError("sample must contain at least one observation")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite covariate values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        for name in ("d", "s"):
            flags = getattr(self, name)
            if flags is None:
                continue
            flags = np.ascontiguousarray(flags, dtype=np.int8)
            if flags.shape != x.shape:
                raise ValueError(f"{name} must have the same length as x")
            if not np.isin(flags, (0, 1)).all():
                raise ValueError(f"{name} must contain only 0/1 values")
            object.__setattr__(self, name, flags)
        if self.s is not None:
            bad = ~np.isfinite(y) & (self.s == 1)
        else:
            bad = ~np.isfinite(y)
        if bad.any():
            raise ValueError("non-finite outcome values outside s == 0 rows")

    @property
    def n(self) -> int:
        return self.x.size

    def subset(self, mask: np.ndarray) -> "Sample":
        return Sample(
            self.x[mask],
            self.y[mask],
            None if self.d is None else self.d[mask],
            None if self.s is None else self.s[mask],
        )
