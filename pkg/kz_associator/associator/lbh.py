#!/usr/bin/env python3
"""
Growth diagnostics for regulator-dependent series.

A family F(delta) is sorted per lambda-degree into one of three classes:

    L  at most logarithmically divergent   ||F_r|| ~ C |ln delta|^alpha
    B  bounded                             ||F_r|| ~ C
    H  harmless (power-law vanishing)      ||F_r|| ~ C delta^beta

Each model is fitted to log ||F_r(delta)|| by least squares. The bounded
model is the default; L or H replaces it only when its exponent exceeds
min_exponent and it at least halves the bounded model's residual. H also
needs the norms to decrease along the finest grid points.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from kz_associator.algebra.free_series import TruncatedSeries


logger = logging.getLogger(__name__)

LOGARITHMIC = 'L'
BOUNDED = 'B'
HARMLESS = 'H'
UNIT = 'unit'

MIN_POINTS = 5
MIN_EXPONENT = 0.1
RESIDUAL_GAIN = 0.5
TAIL_POINTS = 3


@dataclass(frozen=True)
class DegreeFit:
    """Fitted growth model for one lambda-degree."""
    degree: int
    model: str
    constant: float
    exponent: Optional[float]
    residual: float
    norms: Tuple[float, ...]

    def to_dict(self) -> Dict:
        return {
            'degree': self.degree,
            'model': self.model,
            'constant': self.constant,
            'exponent': self.exponent,
            'residual': self.residual,
            'norms': list(self.norms),
        }


@dataclass
class LbhDiagnostics:
    grid: Tuple[float, ...]
    fits: List[DegreeFit] = field(default_factory=list)
    classification: str = BOUNDED

    def fit(self, degree: int) -> DegreeFit:
        for f in self.fits:
            if f.degree == degree:
                return f
        raise KeyError(degree)

    def to_dict(self) -> Dict:
        return {
            'grid': list(self.grid),
            'classification': self.classification,
            'fits': [f.to_dict() for f in self.fits],
        }


def _linear_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    """Returns (intercept, slope, rms residual)."""
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (intercept + slope * x)) ** 2)))
    return float(intercept), float(slope), residual


def _is_unit(series_values: List[TruncatedSeries], degree: int) -> bool:
    if degree != 0:
        return False
    return all(
        set(s[0].terms) <= {()} and abs(complex(s[0].coefficient(())) - 1) <= 1e-12
        for s in series_values
    )


def fit_degree(grid: np.ndarray, norms: np.ndarray, degree: int,
               min_exponent: float = MIN_EXPONENT) -> DegreeFit:
    """Pick the growth model for one degree's norm samples (grid in decreasing order)."""
    norms_t = tuple(float(v) for v in norms)
    if np.all(norms == 0):
        return DegreeFit(degree, BOUNDED, 0.0, None, 0.0, norms_t)

    mask = norms > 0
    x_delta = np.log(grid[mask])
    x_log = np.log(np.abs(np.log(grid[mask])))
    y = np.log(norms[mask])

    level = float(np.mean(y))
    bounded_residual = float(np.sqrt(np.mean((y - level) ** 2)))
    best = DegreeFit(degree, BOUNDED, float(np.exp(level)), None, bounded_residual, norms_t)

    if y.size < 3:
        return best

    candidates = []
    c_l, alpha, res_l = _linear_fit(x_log, y)
    if alpha > min_exponent and res_l < RESIDUAL_GAIN * bounded_residual:
        candidates.append(DegreeFit(degree, LOGARITHMIC, float(np.exp(c_l)), alpha, res_l, norms_t))

    c_h, beta, res_h = _linear_fit(x_delta, y)
    tail = norms[-TAIL_POINTS:]
    decreasing = bool(np.all(np.diff(tail) < 0))
    if beta > min_exponent and res_h < RESIDUAL_GAIN * bounded_residual and decreasing:
        candidates.append(DegreeFit(degree, HARMLESS, float(np.exp(c_h)), beta, res_h, norms_t))

    if candidates:
        best = min(candidates, key=lambda f: f.residual)
    return best


def classify_lbh(F: Mapping[float, TruncatedSeries],
                 min_exponent: float = MIN_EXPONENT) -> LbhDiagnostics:
    """
    Fit the three growth models degree by degree.

    Degree 0 is skipped when it is identically the unit, as are degrees
    that vanish on the whole grid. The family is L if some degree is L,
    otherwise B if some degree is B, otherwise H.

    Raises:
        ValueError: With fewer than five grid points
    """
    if len(F) < MIN_POINTS:
        raise ValueError(f"classify_lbh needs at least {MIN_POINTS} grid points, got {len(F)}")
    deltas = sorted(F, reverse=True)
    grid = np.array(deltas, dtype=float)
    values = [F[d] for d in deltas]
    order = min(v.order for v in values)

    diagnostics = LbhDiagnostics(tuple(deltas))
    counted = []
    for r in range(order + 1):
        norms = np.array([v[r].sup_norm() for v in values])
        if _is_unit(values, r):
            diagnostics.fits.append(DegreeFit(r, UNIT, 1.0, None, 0.0, tuple(norms)))
            continue
        fit = fit_degree(grid, norms, r, min_exponent)
        diagnostics.fits.append(fit)
        if fit.constant != 0.0:
            counted.append(fit.model)

    if LOGARITHMIC in counted:
        diagnostics.classification = LOGARITHMIC
    elif BOUNDED in counted or not counted:
        diagnostics.classification = BOUNDED
    else:
        diagnostics.classification = HARMLESS
    logger.debug(f"LBH classification {diagnostics.classification} over {len(deltas)} points")
    return diagnostics
