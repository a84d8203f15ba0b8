"""Core data types for semi-competing risks observations.

A subject in the illness-death layout carries a left-truncation time ``l``,
a first-transition time ``y1`` with indicator ``delta1`` (non-terminal
event), a terminal/censoring time ``y2`` with indicator ``delta2``, and one
covariate vector per transition.  All types are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ObservationScenario",
    "SubjectRecord",
    "Dataset",
    "RegressionCoefficients",
    "NuisanceParameters",
    "ModelParameters",
    "classify_scenario",
    "validate_dataset",
]


class ObservationScenario(enum.Enum):
    """The four observation patterns determined by (delta1, delta2)."""

    BOTH_OBSERVED = "both_observed"
    NONTERMINAL_THEN_CENSORED = "nonterminal_then_censored"
    TERMINAL_ONLY = "terminal_only"
    NONE_OBSERVED = "none_observed"


def _readonly(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SubjectRecord:
    """One subject: truncation time, two observed times, two indicators,
    and the three transition-specific covariate vectors."""

    l: float
    y1: float
    delta1: int
    y2: float
    delta2: int
    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "l", float(self.l))
        object.__setattr__(self, "y1", float(self.y1))
        object.__setattr__(self, "y2", float(self.y2))
        object.__setattr__(self, "delta1", int(self.delta1))
        object.__setattr__(self, "delta2", int(self.delta2))
        object.__setattr__(self, "z1", _readonly(self.z1))
        object.__setattr__(self, "z2", _readonly(self.z2))
        object.__setattr__(self, "z3", _readonly(self.z3))

    @property
    def sojourn(self) -> float:
        """Time from the non-terminal event to y2 (0 when delta1 = 0)."""
        return self.y2 - self.y1 if self.delta1 == 1 else 0.0


@dataclass(frozen=True)
class Dataset:
    """A nonempty collection of records with common covariate dimensions."""

    records: tuple
    dims: tuple

    def __init__(self, records, dims=None):
        records = tuple(records)
        if not records:
            raise ValueError("Dataset requires at least one record")
        if dims is None:
            r = records[0]
            dims = (len(r.z1), len(r.z2), len(r.z3))
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "dims", tuple(int(d) for d in dims))

    def __len__(self) -> int:
        return len(self.records)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def p(self) -> int:
        return sum(self.dims)

    def arrays(self) -> dict:
        """Column-stacked view used by the numeric modules.

        Returns a dict with keys l, y1, delta1, y2, delta2 (1-d arrays of
        length n) and Z1, Z2, Z3 (n x d_k matrices).
        """
        recs = self.records
        return {
            "l": np.array([r.l for r in recs]),
            "y1": np.array([r.y1 for r in recs]),
            "delta1": np.array([r.delta1 for r in recs], dtype=float),
            "y2": np.array([r.y2 for r in recs]),
            "delta2": np.array([r.delta2 for r in recs], dtype=float),
            "Z1": np.array([r.z1 for r in recs]),
            "Z2": np.array([r.z2 for r in recs]),
            "Z3": np.array([r.z3 for r in recs]),
        }

    @staticmethod
    def from_arrays(l, y1, delta1, y2, delta2, Z1, Z2, Z3) -> "Dataset":
        Z1, Z2, Z3 = np.atleast_2d(Z1), np.atleast_2d(Z2), np.atleast_2d(Z3)
        records = [
            SubjectRecord(l[i], y1[i], delta1[i], y2[i], delta2[i],
                          Z1[i], Z2[i], Z3[i])
            for i in range(len(l))
        ]
        return Dataset(records)

    def restrict_covariates(self, keep1, keep2, keep3) -> "Dataset":
        """New dataset keeping only the given covariate columns per transition."""
        keep1, keep2, keep3 = (np.asarray(k, dtype=int) for k in (keep1, keep2, keep3))
        records = [
            SubjectRecord(r.l, r.y1, r.delta1, r.y2, r.delta2,
                          r.z1[keep1], r.z2[keep2], r.z3[keep3])
            for r in self.records
        ]
        return Dataset(records)


@dataclass(frozen=True)
class RegressionCoefficients:
    """Per-transition coefficient vectors; stacking order is always
    (transition 1, transition 2, transition 3)."""

    beta1: np.ndarray
    beta2: np.ndarray
    beta3: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta1", _readonly(self.beta1))
        object.__setattr__(self, "beta2", _readonly(self.beta2))
        object.__setattr__(self, "beta3", _readonly(self.beta3))

    @property
    def dims(self) -> tuple:
        return (len(self.beta1), len(self.beta2), len(self.beta3))

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.beta1, self.beta2, self.beta3])

    @staticmethod
    def from_stacked(vec, dims) -> "RegressionCoefficients":
        vec = np.asarray(vec, dtype=float)
        d1, d2, d3 = dims
        if vec.shape != (d1 + d2 + d3,):
            raise ValueError(f"expected stacked length {d1 + d2 + d3}, got {vec.shape}")
        return RegressionCoefficients(vec[:d1], vec[d1:d1 + d2], vec[d1 + d2:])

    @staticmethod
    def zeros(dims) -> "RegressionCoefficients":
        return RegressionCoefficients(*(np.zeros(d) for d in dims))


@dataclass(frozen=True)
class NuisanceParameters:
    """Frailty variance plus the baseline-hazard block (Weibull or Bernstein)."""

    gamma: float
    baseline: object  # WeibullBaselineSet | BernsteinBaselineSet

    def __post_init__(self):
        g = float(self.gamma)
        if not np.isfinite(g) or g <= 0:
            raise ValueError(f"frailty variance must be positive, got {g}")
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class ModelParameters:
    """Full parameter bundle: regression coefficients plus nuisance block."""

    beta: RegressionCoefficients
    nuisance: NuisanceParameters


def classify_scenario(rec: SubjectRecord) -> ObservationScenario:
    """Map (delta1, delta2) to the observation scenario.

    (1,1) both events observed; (1,0) non-terminal then censored;
    (0,1) terminal only; (0,0) nothing observed.
    """
    if rec.delta1 == 1:
        return (ObservationScenario.BOTH_OBSERVED if rec.delta2 == 1
                else ObservationScenario.NONTERMINAL_THEN_CENSORED)
    return (ObservationScenario.TERMINAL_ONLY if rec.delta2 == 1
            else ObservationScenario.NONE_OBSERVED)


def validate_dataset(data: Dataset, include_warnings: bool = False) -> list:
    """Check every record against the structural invariants.

    Returns a list of human-readable violation strings, empty iff the
    dataset is well formed.  Never raises.  With ``include_warnings``,
    additionally flags zero-sojourn records (delta1 = 1, y1 = y2), which
    are legal but contribute a degenerate likelihood term when delta2 = 1.
    """
    findings = []
    d1, d2, d3 = data.dims
    for i, r in enumerate(data.records):
        times = (r.l, r.y1, r.y2)
        if not all(np.isfinite(t) for t in times):
            findings.append(f"non-finite time at index {i}")
            continue
        if r.l < 0 or r.y1 < 0 or r.y2 < 0:
            findings.append(f"negative time at index {i}")
        if not r.l < r.y1:
            findings.append(f"l < y1 failed at index {i}")
        if r.delta1 not in (0, 1) or r.delta2 not in (0, 1):
            findings.append(f"non-binary indicator at index {i}")
        if r.delta1 == 0 and r.y1 != r.y2:
            findings.append(f"δ1=0 requires y1=y2 at index {i}")
        if r.delta1 == 1 and r.y1 > r.y2:
            findings.append(f"δ1=1 requires y1 ≤ y2 at index {i}")
        if (len(r.z1), len(r.z2), len(r.z3)) != (d1, d2, d3):
            findings.append(f"covariate length mismatch at index {i}")
        elif not (np.isfinite(r.z1).all() and np.isfinite(r.z2).all()
                  and np.isfinite(r.z3).all()):
            findings.append(f"non-finite covariate at index {i}")
        if include_warnings and r.delta1 == 1 and r.y1 == r.y2:
            findings.append(f"warning: zero sojourn (δ1=1, y1=y2) at index {i}")
    return findings
