"""Selection and estimation quality measures for replicated studies.

TP counts recovered signal coordinates, FP counts spuriously selected
ones, and MCV (missed signals plus FP) summarizes the classification.
Estimation error is the covariance-weighted quadratic form summed over
the three transitions; replicate MSEs are aggregated as a median (MMSE)
with a standard deviation.  The grouping-effect score rewards whole
groups selected or dropped together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ReplicateMetrics",
    "AggregateReport",
    "mse",
    "confusion_counts",
    "ges",
    "aggregate",
]


@dataclass(frozen=True)
class ReplicateMetrics:
    """One replicate's counts and error for one method."""

    tp: int
    fp: int
    mcv: int
    mse: float
    selected: np.ndarray        # stacked 0/1 selection indicators
    ges: float = np.nan


@dataclass(frozen=True)
class AggregateReport:
    """Replicate averages in the layout of the paper-style summary tables."""

    n_replicates: int
    mean_tp: float
    mean_fp: float
    mean_mcv: float
    mmse: float                 # median of replicate MSEs
    sd_mse: float
    selection_frequency: np.ndarray
    mean_ges: float = np.nan


def mse(beta_hat_k, beta_true_k, sigma_k) -> float:
    """Quadratic error (bh - b0)' Sigma (bh - b0) for one transition."""
    bh = np.asarray(beta_hat_k, dtype=float)
    b0 = np.asarray(beta_true_k, dtype=float)
    S = np.asarray(sigma_k, dtype=float)
    if bh.shape != b0.shape or S.shape != (bh.size, bh.size):
        raise ValueError(
            f"dimension mismatch: beta {bh.shape} vs {b0.shape}, sigma {S.shape}")
    d = bh - b0
    return float(d @ S @ d)


def confusion_counts(beta_hat, beta_true, eps: float = 1e-6) -> tuple:
    """(tp, fp, mcv) of a stacked estimate against the stacked truth.

    A coordinate counts as selected when |estimate| >= eps; mcv adds the
    missed signals to the false positives.
    """
    bh = np.asarray(beta_hat, dtype=float)
    b0 = np.asarray(beta_true, dtype=float)
    if bh.shape != b0.shape:
        raise ValueError(f"dimension mismatch {bh.shape} vs {b0.shape}")
    sel = np.abs(bh) >= eps
    signal = b0 != 0.0
    tp = int(np.sum(sel & signal))
    fp = int(np.sum(sel & ~signal))
    mcv = int(np.sum(signal) - tp) + fp
    return tp, fp, mcv


def ges(selected_per_transition, group_layout) -> float:
    """Grouping-effect score 0.2 g1 + 0.2 g2 + 0.3 g3 + 0.3 g4.

    g1, g2 are the fractions of group-1/2 coefficients selected; g3, g4 the
    fractions of group-3/4 coefficients excluded.  Fractions pool the three
    transitions.  ``selected_per_transition`` holds one boolean/0-1 vector
    per transition; ``group_layout`` the four column-index groups.
    """
    layout = [np.asarray(g, dtype=int) for g in group_layout]
    if len(layout) != 4:
        raise ValueError("expected exactly four groups")
    sel = [np.asarray(s, dtype=bool) for s in selected_per_transition]
    if len(sel) != 3:
        raise ValueError("expected one selection vector per transition")
    width = max(int(g.max()) for g in layout) + 1
    for s in sel:
        if s.size < width:
            raise ValueError("selection vector shorter than the group layout")
    fracs = []
    for g in layout:
        picked = np.concatenate([s[g] for s in sel])
        fracs.append(float(np.mean(picked)))
    return (0.2 * fracs[0] + 0.2 * fracs[1]
            + 0.3 * (1.0 - fracs[2]) + 0.3 * (1.0 - fracs[3]))


def aggregate(replicates) -> AggregateReport:
    """Mean TP/FP/MCV, median and SD of MSE, and per-coordinate selection
    frequencies over a nonempty replicate list (order-invariant)."""
    reps = list(replicates)
    if not reps:
        raise ValueError("no replicates to aggregate")
    mses = np.array([r.mse for r in reps], dtype=float)
    ges_vals = np.array([r.ges for r in reps], dtype=float)
    sel = np.vstack([r.selected for r in reps]).astype(float)
    return AggregateReport(
        n_replicates=len(reps),
        mean_tp=float(np.mean([r.tp for r in reps])),
        mean_fp=float(np.mean([r.fp for r in reps])),
        mean_mcv=float(np.mean([r.mcv for r in reps])),
        mmse=float(np.median(mses)),
        sd_mse=float(np.std(mses, ddof=1)) if len(reps) > 1 else 0.0,
        selection_frequency=sel.mean(axis=0),
        mean_ges=float(np.mean(ges_vals)) if not np.isnan(ges_vals).any() else np.nan)
