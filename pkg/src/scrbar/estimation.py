"""Unpenalized maximum-likelihood fitting and Bernstein degree selection.

The optimizer works on a fully unconstrained vector: stacked regression
coefficients, log frailty variance, and either log Weibull parameters or
Bernstein log-hazard coefficients.  Quasi-Newton (L-BFGS-B with a Wolfe
line search) drives the fit; the gradient is analytic for every block.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize
from scipy.special import logsumexp, softmax

from .baselines import (
    DEFAULT_QUADRATURE,
    BernsteinBaselineSet,
    QuadratureRule,
    WeibullBaselineSet,
    bernstein_basis_matrix,
)
from .domain import (
    Dataset,
    ModelParameters,
    NuisanceParameters,
    RegressionCoefficients,
)
from .likelihood import DegenerateRecordError

__all__ = [
    "FitConfig",
    "FitResult",
    "fit_unpenalized",
    "bic_degree_select",
    "bernstein_supports",
]


@dataclass(frozen=True)
class FitConfig:
    """Fitting policy: baseline mode, iteration limits, tolerances, starts."""

    baseline: str = "weibull"           # "weibull" | "bernstein"
    degrees: tuple = (2, 2, 3)
    max_iter: int = 600
    gtol: float = 5e-4                  # sup-norm of the gradient at the optimum
    xtol: float = 1e-12                 # relative objective-change tolerance
    init_gamma: float = 0.5
    quadrature: QuadratureRule = DEFAULT_QUADRATURE
    risk_window: str = "first"          # see likelihood module
    truncation: str = "calendar"        # "calendar" | "gap"

    def __post_init__(self):
        if self.baseline not in ("weibull", "bernstein"):
            raise ValueError(f"unknown baseline mode {self.baseline!r}")
        if self.risk_window not in ("first", "terminal"):
            raise ValueError(f"unknown risk window {self.risk_window!r}")
        if self.truncation not in ("gap", "calendar"):
            raise ValueError(f"unknown truncation convention {self.truncation!r}")
        if self.gtol <= 0 or self.xtol <= 0:
            raise ValueError("tolerances must be positive")
        if any(int(m) < 0 for m in self.degrees):
            raise ValueError("Bernstein degrees must be nonnegative")


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters plus convergence diagnostics."""

    params: ModelParameters
    loglik: float
    converged: bool
    n_iter: int
    grad_norm: float


def bernstein_supports(data: Dataset, risk_window: str = "first",
                       truncation: str = "calendar") -> tuple:
    """Default sieve supports: [0, u_j] with u_j the largest time at which
    transition j's hazard or cumulative hazard is ever evaluated.

    Transitions 1-2 cover the truncated initial-state window plus the event
    times; transition 3 covers the sojourn times of subjects with an
    observed non-terminal event (fallback 1.0 when there are none).
    """
    arr = data.arrays()
    t_end = arr["y1"] if risk_window == "first" else arr["y2"]
    t12 = t_end - arr["l"] if truncation == "gap" else t_end
    ev1 = arr["delta1"] == 1.0
    ev2 = (arr["delta1"] == 0.0) & (arr["delta2"] == 1.0)
    u1 = max(t12.max(), arr["y1"][ev1].max() if ev1.any() else 0.0)
    u2 = max(t12.max(), arr["y2"][ev2].max() if ev2.any() else 0.0)
    soj = (arr["y2"] - arr["y1"])[ev1]
    u3 = soj.max() if ev1.any() and soj.size else 1.0
    return ((0.0, float(u1)), (0.0, float(u2)), (0.0, max(float(u3), 1e-12)))


class _BernsteinTable:
    """Frozen quadrature layout for cumulative hazards at fixed times.

    With the evaluation times fixed for the whole fit, the basis values at
    all quadrature nodes are constants; only the coefficient vector moves.
    """

    def __init__(self, t, m, support, quad):
        t = np.asarray(t, dtype=float)
        c, u = support
        x, w = quad.points()
        nodes = np.minimum(0.5 * t[:, None] * (x[None, :] + 1.0), u)
        self.B = bernstein_basis_matrix(nodes.ravel(), m, c, u).reshape(
            len(t), quad.nodes, m + 1)
        with np.errstate(divide="ignore"):
            self.log_half_t = np.log(0.5 * t)
        self.log_w = np.log(w)

    def log_cumhaz(self, phi):
        a = self.B @ phi + self.log_w
        return self.log_half_t + logsumexp(a, axis=1)

    def dlog_cumhaz(self, phi):
        """d log Lambda / d phi: quadrature-weight softmax of the basis."""
        p = softmax(self.B @ phi + self.log_w, axis=1)
        return np.einsum("iq,iqr->ir", p, self.B)


class _Objective:
    """Negative log-likelihood and gradient over the packed parameter vector
    [beta, log gamma, baseline block]."""

    def __init__(self, data: Dataset, cfg: FitConfig):
        arr = data.arrays()
        self.dims = data.dims
        self.p = sum(self.dims)
        self.n = len(data)
        self.cfg = cfg
        self.Z = (arr["Z1"], arr["Z2"], arr["Z3"])
        d1, d2 = arr["delta1"], arr["delta2"]
        self.delta1, self.delta2 = d1, d2
        self.event_weight = (d1, (1.0 - d1) * d2, d1 * d2)
        self.t_end = arr["y1"] if cfg.risk_window == "first" else arr["y2"]
        self.l = arr["l"]
        self.t12 = self.t_end - self.l
        self.sojourn = np.where(d1 == 1.0, arr["y2"] - arr["y1"], 0.0)
        bad = (self.event_weight[2] == 1.0) & (self.sojourn <= 0.0)
        if bad.any():
            raise DegenerateRecordError(
                f"zero sojourn with both events observed at index {int(np.argmax(bad))}")
        self.ev_mask = (d1 == 1.0, self.event_weight[1] == 1.0, self.event_weight[2] == 1.0)
        self.ev_times = (arr["y1"][self.ev_mask[0]],
                         arr["y2"][self.ev_mask[1]],
                         self.sojourn[self.ev_mask[2]])
        self.calendar = cfg.truncation == "calendar"
        if self.calendar:
            self.interval = (self.t_end, self.t_end, self.sojourn)
        else:
            self.interval = (self.t12, self.t12, self.sojourn)
        with np.errstate(divide="ignore"):
            self.log_interval = tuple(np.log(t) for t in self.interval)
            self.log_ev_times = tuple(np.log(t) for t in self.ev_times)

        if cfg.baseline == "bernstein":
            self.supports = bernstein_supports(data, cfg.risk_window, cfg.truncation)
            self.tables = [
                _BernsteinTable(self.interval[j], cfg.degrees[j],
                                self.supports[j], cfg.quadrature)
                for j in range(3)
            ]
            # entry-time integrals for the calendar truncation adjustment
            self.tables_entry = [
                _BernsteinTable(self.l, cfg.degrees[j], self.supports[j],
                                cfg.quadrature)
                for j in range(2)
            ] if self.calendar else None
            self.ev_basis = [
                bernstein_basis_matrix(self.ev_times[j], cfg.degrees[j],
                                       *self.supports[j])
                for j in range(3)
            ]
            self.n_base = sum(m + 1 for m in cfg.degrees)
        else:
            self.n_base = 6
        self.n_params = self.p + 1 + self.n_base

    # -- packing ---------------------------------------------------------
    def split(self, theta):
        beta = theta[:self.p]
        log_gamma = theta[self.p]
        base = theta[self.p + 1:]
        return beta, log_gamma, base

    def _base_blocks(self, base):
        if self.cfg.baseline == "weibull":
            return [(base[2 * j], base[2 * j + 1]) for j in range(3)]
        out, off = [], 0
        for m in self.cfg.degrees:
            out.append(base[off:off + m + 1])
            off += m + 1
        return out

    # -- evaluation ------------------------------------------------------
    def _cumhaz_blocks(self, blocks):
        """Per transition: log cumulative hazard over the exposure window
        and its derivative in the transition's baseline parameters."""
        weib = self.cfg.baseline == "weibull"
        lb, dlb = [], []
        for j in range(3):
            calendar = self.calendar and j < 2
            if weib:
                la, lt = blocks[j]
                alpha = np.exp(la)
                if calendar:
                    # log[L(t) - L(l)] = log L(t) + log1p(-R), R = L(l)/L(t)
                    with np.errstate(divide="ignore"):
                        log_l = np.where(self.l > 0, np.log(self.l), 0.0)
                    expo = np.minimum(alpha * (log_l - self.log_interval[j]), 0.0)
                    R = np.where(self.l > 0, np.exp(expo), 0.0)
                    lb.append(lt + alpha * self.log_interval[j] + np.log1p(-R))
                    dA = alpha * (self.log_interval[j] - R * log_l) / (1.0 - R)
                else:
                    with np.errstate(invalid="ignore"):
                        v = lt + alpha * self.log_interval[j]
                    lb.append(np.where(self.interval[j] > 0, v, -np.inf))
                    dA = np.where(self.interval[j] > 0,
                                  alpha * self.log_interval[j], 0.0)
                dlb.append((dA, np.ones(self.n)))
            else:
                if calendar:
                    lt_vals = self.tables[j].log_cumhaz(blocks[j])
                    ll_vals = self.tables_entry[j].log_cumhaz(blocks[j])
                    R = np.exp(np.minimum(ll_vals - lt_vals, 0.0))
                    lb.append(lt_vals + np.log1p(-R))
                    dphi = (self.tables[j].dlog_cumhaz(blocks[j])
                            - R[:, None] * self.tables_entry[j].dlog_cumhaz(blocks[j])
                            ) / (1.0 - R[:, None])
                else:
                    v = self.tables[j].log_cumhaz(blocks[j])
                    lb.append(np.where(self.interval[j] > 0, v, -np.inf))
                    dphi = self.tables[j].dlog_cumhaz(blocks[j])
                dlb.append(dphi)
        return lb, dlb

    def value_and_grad(self, theta):
        beta, log_gamma, base = self.split(theta)
        gamma = np.exp(log_gamma)
        blocks = self._base_blocks(base)
        offs = np.concatenate([[0], np.cumsum(self.dims)])
        lp = [self.Z[k] @ beta[offs[k]:offs[k + 1]] for k in range(3)]
        lb, dlb = self._cumhaz_blocks(blocks)

        loge = np.column_stack([lb[k] + lp[k] for k in range(3)])
        logS = logsumexp(loge, axis=1)
        L1 = np.logaddexp(0.0, log_gamma + logS)        # log(1 + gamma S)
        c = 1.0 / gamma + self.delta1 + self.delta2

        ll = -float(c @ L1)
        ll += float(np.log1p(gamma) * self.event_weight[2].sum())
        for k in range(3):
            ll += float(self.event_weight[k] @ lp[k])
            if self.cfg.baseline == "weibull":
                la, lt = blocks[k]
                ev_lh = la + lt + (np.exp(la) - 1.0) * self.log_ev_times[k]
            else:
                ev_lh = self.ev_basis[k] @ blocks[k]
            ll += float(np.sum(ev_lh))

        # gradient
        w = c[:, None] * np.exp(log_gamma + loge - L1[:, None])   # shrink weights
        g = np.zeros(self.n_params)
        for k in range(3):
            g[offs[k]:offs[k + 1]] = self.Z[k].T @ (self.event_weight[k] - w[:, k])

        Q = np.exp(log_gamma + logS - L1)                         # gamma S / (1 + gamma S)
        g[self.p] = float(np.sum(gamma * self.event_weight[2] / (1.0 + gamma)
                                 + L1 / gamma - c * Q))

        gb = np.zeros(self.n_base)
        if self.cfg.baseline == "weibull":
            for j, (la, lt) in enumerate(blocks):
                alpha = np.exp(la)
                dA, dT = dlb[j]
                gb[2 * j] = float(np.sum(1.0 + alpha * self.log_ev_times[j])
                                  - w[:, j] @ dA)
                gb[2 * j + 1] = float(self.ev_mask[j].sum() - w[:, j] @ dT)
        else:
            off = 0
            for j, m in enumerate(self.cfg.degrees):
                gb[off:off + m + 1] = (self.ev_basis[j].sum(axis=0)
                                       - w[:, j] @ dlb[j])
                off += m + 1
        g[self.p + 1:] = gb
        return -ll, -g

    # -- starting point ---------------------------------------------------
    def initial_point(self):
        theta = np.zeros(self.n_params)
        theta[self.p] = np.log(self.cfg.init_gamma)
        exposure12 = max(float(np.sum(self.t12)), 1e-12)
        exposure3 = max(float(np.sum(self.sojourn)), 1e-12)
        rates = [
            max(float(self.ev_mask[0].sum()), 0.5) / exposure12,
            max(float(self.ev_mask[1].sum()), 0.5) / exposure12,
            max(float(self.ev_mask[2].sum()), 0.5) / exposure3,
        ]
        if self.cfg.baseline == "weibull":
            for j in range(3):
                theta[self.p + 1 + 2 * j] = 0.0          # alpha = 1
                theta[self.p + 2 + 2 * j] = np.log(rates[j])
        else:
            off = self.p + 1
            for j, m in enumerate(self.cfg.degrees):
                theta[off:off + m + 1] = np.log(rates[j])
                off += m + 1
        return theta

    def bounds(self):
        # the log frailty-variance cap blocks the spike degeneracy where
        # unbounded heterogeneity memorizes every event time
        bnds = [(-30.0, 30.0)] * self.p + [(-12.0, 2.5)]
        if self.cfg.baseline == "weibull":
            for _ in range(3):
                bnds += [(-8.0, 8.0), (-40.0, 20.0)]
        else:
            bnds += [(-40.0, 20.0)] * self.n_base
        return bnds

    def build_params(self, theta) -> ModelParameters:
        beta, log_gamma, base = self.split(theta)
        blocks = self._base_blocks(base)
        if self.cfg.baseline == "weibull":
            spec = WeibullBaselineSet(
                log_alpha=np.array([b[0] for b in blocks]),
                log_tau=np.array([b[1] for b in blocks]))
        else:
            spec = BernsteinBaselineSet(self.cfg.degrees, blocks, self.supports)
        return ModelParameters(
            beta=RegressionCoefficients.from_stacked(beta, self.dims),
            nuisance=NuisanceParameters(gamma=float(np.exp(log_gamma)), baseline=spec))


def fit_unpenalized(data: Dataset, cfg: FitConfig = FitConfig(),
                    theta0=None) -> FitResult:
    """Maximize the marginal log-likelihood over all model parameters.

    Positivity of the frailty variance and Weibull parameters is handled by
    log-reparameterization, so the search is unconstrained up to wide
    overflow guards.  A non-converged fit is returned with its flag down
    rather than raised.
    """
    obj = _Objective(data, cfg)
    if len(data) <= obj.n_params:
        raise ValueError(
            f"need n > parameter count ({len(data)} <= {obj.n_params})")
    x0 = obj.initial_point() if theta0 is None else np.asarray(theta0, dtype=float)
    bounds = obj.bounds()
    res = scipy.optimize.minimize(
        obj.value_and_grad, x0, jac=True, method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": cfg.max_iter, "ftol": cfg.xtol,
                 "gtol": cfg.gtol / 10.0, "maxls": 60, "maxcor": 20})
    _, grad = obj.value_and_grad(res.x)
    # projected gradient: components pushing against an active bound don't count
    pg = grad.copy()
    for j, (lo, hi) in enumerate(bounds):
        if res.x[j] <= lo + 1e-12:
            pg[j] = min(pg[j], 0.0)
        elif res.x[j] >= hi - 1e-12:
            pg[j] = max(pg[j], 0.0)
    grad_norm = float(np.max(np.abs(pg)))
    return FitResult(
        params=obj.build_params(res.x),
        loglik=-float(res.fun),
        converged=bool(grad_norm < cfg.gtol),
        n_iter=int(res.nit),
        grad_norm=grad_norm)


def bic_degree_select(data: Dataset, candidates, cfg: FitConfig = FitConfig()):
    """Pick Bernstein degrees by BIC over a candidate list of (m1, m2, m3).

    BIC(m) = -2 loglik + log(n) * [(p + 1) + sum_j (m_j + 1)].  Failed
    candidates are kept in the table with bic = inf and excluded from the
    argmin; ties go to the smaller total degree.
    """
    candidates = [tuple(int(m) for m in c) for c in candidates]
    if not candidates:
        raise ValueError("empty candidate list")
    n = len(data)
    p = data.p
    table = []
    for degs in candidates:
        row = {"degrees": degs, "loglik": np.nan, "bic": np.inf,
               "converged": False, "error": ""}
        try:
            fr = fit_unpenalized(data, replace(cfg, baseline="bernstein", degrees=degs))
            row["loglik"] = fr.loglik
            row["converged"] = fr.converged
            row["bic"] = -2.0 * fr.loglik + np.log(n) * ((p + 1) + sum(m + 1 for m in degs))
            row["fit"] = fr
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            row["error"] = str(exc)
        table.append(row)
    ok = [r for r in table if np.isfinite(r["bic"])]
    if not ok:
        raise RuntimeError("every candidate degree failed to fit")
    best = min(ok, key=lambda r: (r["bic"], sum(r["degrees"])))
    return best["degrees"], table
