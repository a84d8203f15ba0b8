"""Marginal log-likelihood for the gamma-frailty illness-death model.

With frailty w ~ Gamma(1/gamma, 1/gamma) (mean 1, variance gamma) shared
across the three transition hazards, the per-subject integral over w is
available in closed form.  Writing t* for the end of the initial-state
risk window (see below),

    e1 = Lambda01(t* - l) exp(b1'z1)
    e2 = Lambda02(t* - l) exp(b2'z2)
    e3 = delta1 * Lambda03(y2 - y1) exp(b3'z3)
    S  = e1 + e2 + e3

the marginal contribution of a subject is

    delta1 * [log lam01(y1) + b1'z1]
    + (1-delta1) delta2 * [log lam02(y2) + b2'z2]
    + delta1 delta2 * [log lam03(y2-y1) + b3'z3 + log(1+gamma)]
    - (1/gamma + delta1 + delta2) * log(1 + gamma * S),

which follows from E[w^k exp(-wS)] = Gamma(1/gamma+k)/Gamma(1/gamma)
* gamma^k * (1+gamma*S)^(-1/gamma-k) with k = delta1 + delta2 event
factors.  ``frailty_integral_oracle`` integrates the conditional
likelihood against the gamma density numerically and is the ground truth
these closed forms are tested against.

Two cumulative-risk conventions are supported for transitions 1-2:

* ``risk_window="first"`` (default): exposure ends at the first observed
  time y1, so subjects stop accruing initial-state risk once the
  non-terminal event occurs.  This is the proper illness-death likelihood
  and the convention the whole pipeline uses unless told otherwise.
* ``risk_window="terminal"``: exposure runs to y2 even after a
  non-terminal event.  This variant systematically attenuates the
  transition 1-2 coefficients and is kept for comparison studies only.

Orthogonally, truncated intervals use the calendar adjustment
Lambda(t*) - Lambda(l) by default (identical to the gap form when l = 0);
``truncation="gap"`` switches to Lambda(t* - l), which treats the clock
as restarting at study entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.stats
from scipy.special import logsumexp

from .baselines import (
    DEFAULT_QUADRATURE,
    QuadratureRule,
    WeibullBaselineSet,
    bernstein_log_hazard,
    cumulative_hazard,
    log_cumulative_hazard,
)
from .domain import Dataset, ModelParameters, SubjectRecord

__all__ = [
    "RiskTerms",
    "PseudoData",
    "DegenerateRecordError",
    "BetaLikelihood",
    "risk_terms",
    "log_likelihood",
    "gradient_beta",
    "hessian_beta",
    "frailty_integral_oracle",
    "pseudo_data",
]


class DegenerateRecordError(ValueError):
    """A record whose likelihood contribution is identically zero
    (delta1 = delta2 = 1 with zero sojourn forces log lam03(0) -> -inf)."""


@dataclass(frozen=True)
class RiskTerms:
    """Cumulative-risk factors of one subject: g1 for the sojourn hazard,
    g2 for the two initial-state hazards."""

    g1: float
    g2: float


@dataclass(frozen=True)
class PseudoData:
    """Cholesky pseudo-design X (upper triangular, X'X = -H) and pseudo
    response W with X'W = -H b + u, so the least-squares surrogate
    0.5 ||W - X b||^2 has the same gradient and curvature as -loglik at b."""

    X: np.ndarray
    W: np.ndarray
    jitter: float = 0.0


def _check_beta(beta, p):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (p,):
        raise ValueError(f"expected stacked coefficient vector of length {p}")
    if not np.isfinite(beta).all():
        raise ValueError("non-finite regression coefficient")
    return beta


def _log_event_hazard(spec, j, t, quad):
    """log lam0j at event times t (t > 0 assumed)."""
    if isinstance(spec, WeibullBaselineSet):
        a = spec.alpha[j - 1]
        return spec.log_alpha[j - 1] + spec.log_tau[j - 1] + (a - 1.0) * np.log(t)
    return np.atleast_1d(bernstein_log_hazard(t, spec, j))


class BetaLikelihood:
    """Log-likelihood, gradient, and Hessian in beta at fixed nuisance.

    Per-record cumulative-hazard values depend only on the nuisance block,
    so they are computed once at construction; evaluations in beta are then
    cheap vectorized closed forms.  All internals stay in log space to keep
    exp(b'z) overflow out of the picture.
    """

    def __init__(self, data: Dataset, nuisance, quad: QuadratureRule = DEFAULT_QUADRATURE,
                 truncation: str = "calendar", risk_window: str = "first"):
        if truncation not in ("gap", "calendar"):
            raise ValueError(f"unknown truncation convention {truncation!r}")
        if risk_window not in ("first", "terminal"):
            raise ValueError(f"unknown risk window {risk_window!r}")
        arr = data.arrays()
        self.dims = data.dims
        self.p = sum(self.dims)
        self.n = len(data)
        self.Z = (arr["Z1"], arr["Z2"], arr["Z3"])
        d1, d2 = arr["delta1"], arr["delta2"]
        self.event_weight = (d1, (1.0 - d1) * d2, d1 * d2)
        gamma = nuisance.gamma
        self.gamma = gamma
        self.log_gamma = np.log(gamma)
        self.c = 1.0 / gamma + d1 + d2

        spec = nuisance.baseline
        y1, y2, l = arr["y1"], arr["y2"], arr["l"]
        sojourn = np.where(d1 == 1.0, y2 - y1, 0.0)

        bad = (d1 == 1.0) & (d2 == 1.0) & (sojourn <= 0.0)
        if bad.any():
            raise DegenerateRecordError(
                f"zero sojourn with both events observed at index {int(np.argmax(bad))}")

        # log cumulative-hazard bases: lb[k] = log Lambda_{0,k+1}(interval)
        t_end = y1 if risk_window == "first" else y2
        with np.errstate(divide="ignore"):
            if truncation == "gap":
                lb1 = log_cumulative_hazard(t_end - l, spec, 1, quad)
                lb2 = log_cumulative_hazard(t_end - l, spec, 2, quad)
            else:
                lb1 = np.log(cumulative_hazard(t_end, spec, 1, quad)
                             - cumulative_hazard(l, spec, 1, quad))
                lb2 = np.log(cumulative_hazard(t_end, spec, 2, quad)
                             - cumulative_hazard(l, spec, 2, quad))
            lb3 = np.full(self.n, -np.inf)
            m3 = d1 == 1.0
            if m3.any():
                lb3[m3] = log_cumulative_hazard(sojourn[m3], spec, 3, quad)
        self.log_base = (lb1, lb2, lb3)

        # beta-free part: event log-hazards and the log(1+gamma) double-event bonus
        const = 0.0
        if (d1 == 1.0).any():
            const += np.sum(_log_event_hazard(spec, 1, y1[d1 == 1.0], quad))
        m_dd = self.event_weight[1] == 1.0
        if m_dd.any():
            const += np.sum(_log_event_hazard(spec, 2, y2[m_dd], quad))
        m_bb = self.event_weight[2] == 1.0
        if m_bb.any():
            const += np.sum(_log_event_hazard(spec, 3, sojourn[m_bb], quad))
            const += np.log1p(gamma) * m_bb.sum()
        self.const = float(const)

    def _split(self, beta):
        d1, d2, _ = self.dims
        return beta[:d1], beta[d1:d1 + d2], beta[d1 + d2:]

    def _log_terms(self, beta):
        """log e_k per record (n x 3) and log(1 + gamma * S)."""
        parts = self._split(beta)
        loge = np.column_stack([
            self.log_base[k] + self.Z[k] @ parts[k] for k in range(3)
        ])
        logS = logsumexp(loge, axis=1)
        log1pgS = np.logaddexp(0.0, self.log_gamma + logS)
        return loge, log1pgS

    def loglik(self, beta) -> float:
        beta = _check_beta(beta, self.p)
        parts = self._split(beta)
        lin = sum(self.event_weight[k] @ (self.Z[k] @ parts[k]) for k in range(3))
        _, log1pgS = self._log_terms(beta)
        return self.const + float(lin - self.c @ log1pgS)

    def _shrink_weights(self, beta):
        """w_k = c * gamma * e_k / (1 + gamma S), the per-record gradient
        weights of the survival term (n x 3)."""
        loge, log1pgS = self._log_terms(beta)
        return self.c[:, None] * np.exp(self.log_gamma + loge - log1pgS[:, None])

    def gradient(self, beta) -> np.ndarray:
        beta = _check_beta(beta, self.p)
        w = self._shrink_weights(beta)
        return np.concatenate([
            self.Z[k].T @ (self.event_weight[k] - w[:, k]) for k in range(3)
        ])

    def hessian(self, beta) -> np.ndarray:
        beta = _check_beta(beta, self.p)
        w = self._shrink_weights(beta)
        H = np.zeros((self.p, self.p))
        offs = np.concatenate([[0], np.cumsum(self.dims)])
        for k in range(3):
            for kp in range(k, 3):
                a = w[:, k] * w[:, kp] / self.c
                if kp == k:
                    a = a - w[:, k]
                blk = self.Z[k].T @ (a[:, None] * self.Z[kp])
                if kp == k:
                    # mirror the lower triangle so H is symmetric exactly
                    blk = np.tril(blk) + np.tril(blk, -1).T
                H[offs[k]:offs[k + 1], offs[kp]:offs[kp + 1]] = blk
                if kp != k:
                    H[offs[kp]:offs[kp + 1], offs[k]:offs[k + 1]] = blk.T
        return H


def risk_terms(rec: SubjectRecord, params: ModelParameters,
               quad: QuadratureRule = DEFAULT_QUADRATURE,
               truncation: str = "calendar", risk_window: str = "first") -> RiskTerms:
    """Cumulative-risk factors g1, g2 of one subject.

    g1 = Lambda03(y2-y1) exp(b3'z3) when the non-terminal event was
    observed (0 otherwise); g2 sums the transition-1 and -2 cumulative
    hazards over the truncated initial-state window, which ends at y1
    (``risk_window="first"``) or y2 (``"terminal"``).
    """
    spec = params.nuisance.baseline
    b = params.beta
    if rec.delta1 == 1:
        g1 = cumulative_hazard(rec.y2 - rec.y1, spec, 3, quad) * np.exp(b.beta3 @ rec.z3)
    else:
        g1 = 0.0
    t_end = rec.y1 if risk_window == "first" else rec.y2
    if truncation == "gap":
        L1 = cumulative_hazard(t_end - rec.l, spec, 1, quad)
        L2 = cumulative_hazard(t_end - rec.l, spec, 2, quad)
    else:
        L1 = cumulative_hazard(t_end, spec, 1, quad) - cumulative_hazard(rec.l, spec, 1, quad)
        L2 = cumulative_hazard(t_end, spec, 2, quad) - cumulative_hazard(rec.l, spec, 2, quad)
    g2 = L1 * np.exp(b.beta1 @ rec.z1) + L2 * np.exp(b.beta2 @ rec.z2)
    return RiskTerms(g1=float(g1), g2=float(g2))


def log_likelihood(params: ModelParameters, data: Dataset,
                   quad: QuadratureRule = DEFAULT_QUADRATURE,
                   truncation: str = "calendar", risk_window: str = "first") -> float:
    """Frailty-marginalized log-likelihood of the dataset."""
    ev = BetaLikelihood(data, params.nuisance, quad, truncation, risk_window)
    return ev.loglik(params.beta.stacked)


def gradient_beta(params: ModelParameters, data: Dataset,
                  quad: QuadratureRule = DEFAULT_QUADRATURE,
                  truncation: str = "calendar", risk_window: str = "first") -> np.ndarray:
    """Gradient of the log-likelihood in the stacked coefficient vector,
    nuisance parameters held fixed."""
    ev = BetaLikelihood(data, params.nuisance, quad, truncation, risk_window)
    return ev.gradient(params.beta.stacked)


def hessian_beta(params: ModelParameters, data: Dataset,
                 quad: QuadratureRule = DEFAULT_QUADRATURE,
                 truncation: str = "calendar", risk_window: str = "first") -> np.ndarray:
    """Hessian of the log-likelihood in the stacked coefficient vector
    (symmetric; only the lower triangle is computed)."""
    ev = BetaLikelihood(data, params.nuisance, quad, truncation, risk_window)
    return ev.hessian(params.beta.stacked)


def frailty_integral_oracle(params: ModelParameters, rec: SubjectRecord,
                            quad: QuadratureRule = DEFAULT_QUADRATURE,
                            truncation: str = "calendar", risk_window: str = "first",
                            rtol: float = 1e-11) -> float:
    """Marginal likelihood of one record by adaptive quadrature over the
    frailty, bypassing the closed-form gamma integral entirely.

    Integrates  w^(delta1+delta2) * exp(-w S) * gamma-pdf(w)  and multiplies
    by the w-free event-hazard factors.  Serves as ground truth for
    ``log_likelihood``.
    """
    gamma = params.nuisance.gamma
    spec = params.nuisance.baseline
    b = params.beta
    rt = risk_terms(rec, params, quad, truncation, risk_window)
    S = rt.g1 + rt.g2
    k = rec.delta1 + rec.delta2

    log_a = 0.0
    if rec.delta1 == 1:
        log_a += float(_log_event_hazard(spec, 1, np.array([rec.y1]), quad)[0])
        log_a += float(b.beta1 @ rec.z1)
    if rec.delta1 == 0 and rec.delta2 == 1:
        log_a += float(_log_event_hazard(spec, 2, np.array([rec.y2]), quad)[0])
        log_a += float(b.beta2 @ rec.z2)
    if rec.delta1 == 1 and rec.delta2 == 1:
        soj = rec.y2 - rec.y1
        if soj <= 0:
            raise DegenerateRecordError("zero sojourn with both events observed")
        log_a += float(_log_event_hazard(spec, 3, np.array([soj]), quad)[0])
        log_a += float(b.beta3 @ rec.z3)

    dist = scipy.stats.gamma(a=1.0 / gamma, scale=gamma)

    # integrate on the log-frailty scale, where the integrand (including
    # the Jacobian) is smooth and log-concave even when the gamma density
    # is singular at the origin
    def log_integrand(u):
        w = np.exp(u)
        return (k + 1.0) * u - w * S + dist.logpdf(w)

    mode = max(gamma * (1.0 / gamma + k) / (1.0 + gamma * S), 1e-290)
    probe = np.concatenate([np.linspace(-600.0, 10.0, 4001), [np.log(mode)]])
    hvals = log_integrand(probe)
    hmax = float(np.max(hvals))
    u_mode = float(probe[np.argmax(hvals)])
    keep = hvals > hmax - 745.0
    ulo = float(probe[keep].min()) - 1.0
    uhi = min(float(probe[keep].max()) + 1.0, 700.0)

    val, _ = scipy.integrate.quad(
        lambda u: np.exp(log_integrand(u) - hmax), ulo, uhi,
        points=[u_mode], limit=500, epsabs=0.0, epsrel=rtol)
    if val <= 0:
        raise ArithmeticError("frailty quadrature lost all mass")
    return float(np.exp(hmax + np.log(val) + log_a))


def pseudo_data(beta, u, H, max_jitter_doublings: int = 20) -> PseudoData:
    """Cholesky pseudo-design and pseudo-response from a gradient/Hessian pair.

    Factorizes J = -H as X'X (X upper triangular) and solves X'W = J beta + u
    so that argmin_b 0.5 ||W - X b||^2 is the Newton step beta + J^{-1} u.
    When -H is not positive definite, diagonal jitter 1e-10 * 2^k is escalated
    up to k = ``max_jitter_doublings`` before giving up; the jitter actually
    used is reported on the result.
    """
    beta = np.asarray(beta, dtype=float)
    J = -np.asarray(H, dtype=float)
    p = len(beta)
    jitters = [0.0] + [1e-10 * 2.0**k for k in range(max_jitter_doublings + 1)]
    for jit in jitters:
        try:
            X = scipy.linalg.cholesky(J + jit * np.eye(p), lower=False)
        except scipy.linalg.LinAlgError:
            continue
        rhs = (J + jit * np.eye(p)) @ beta + np.asarray(u, dtype=float)
        W = scipy.linalg.solve_triangular(X, rhs, trans="T", lower=False)
        return PseudoData(X=X, W=W, jitter=jit)
    raise np.linalg.LinAlgError(
        f"-H not positive definite even with jitter {jitters[-1]:.3g}")
