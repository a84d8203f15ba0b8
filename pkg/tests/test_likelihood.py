import numpy as np
import pytest

from scrbar import (
    Dataset,
    ModelParameters,
    ObservationScenario,
    RegressionCoefficients,
    SubjectRecord,
    classify_scenario,
    frailty_integral_oracle,
    gradient_beta,
    hessian_beta,
    log_likelihood,
    pseudo_data,
    risk_terms,
)
from scrbar.likelihood import BetaLikelihood, DegenerateRecordError
from _helpers import random_params, small_dataset, unit_weibull


def zero_beta(dims):
    return RegressionCoefficients.zeros(dims)


class TestRiskTerms:
    def test_unit_hazard_arithmetic(self):
        rec = SubjectRecord(0.0, 1.0, 1, 3.0, 1, [0.0], [0.0], [0.0])
        params = ModelParameters(zero_beta((1, 1, 1)), unit_weibull())
        rt = risk_terms(rec, params)
        assert rt.g1 == pytest.approx(2.0)   # Lambda3(y2-y1) = 2
        assert rt.g2 == pytest.approx(2.0)   # Lambda1(1) + Lambda2(1)

    def test_unit_hazard_arithmetic_terminal_window(self):
        # the variant that lets initial-state risk run to the terminal time
        rec = SubjectRecord(0.0, 1.0, 1, 3.0, 1, [0.0], [0.0], [0.0])
        params = ModelParameters(zero_beta((1, 1, 1)), unit_weibull())
        rt = risk_terms(rec, params, risk_window="terminal")
        assert rt.g1 == pytest.approx(2.0)
        assert rt.g2 == pytest.approx(6.0)   # Lambda1(3) + Lambda2(3)

    def test_no_nonterminal_event_means_no_sojourn_risk(self):
        rec = SubjectRecord(0.0, 3.0, 0, 3.0, 0, [1.0], [1.0], [1.0])
        beta = RegressionCoefficients([0.0], [0.0], [5.0])
        params = ModelParameters(beta, unit_weibull())
        assert risk_terms(rec, params).g1 == 0.0

    def test_zero_length_window(self):
        # l = y2 is structurally invalid but exercises the empty interval
        rec = SubjectRecord(2.0, 2.0, 0, 2.0, 0, [1.0], [1.0], [1.0])
        assert risk_terms(rec, ModelParameters(zero_beta((1, 1, 1)),
                                               unit_weibull())).g2 == 0.0

    def test_covariates_scale_exponentially(self):
        rec = SubjectRecord(0.0, 1.0, 1, 3.0, 1, [1.0], [0.0], [0.0])
        beta = RegressionCoefficients([np.log(2.0)], [0.0], [0.0])
        rt = risk_terms(rec, ModelParameters(beta, unit_weibull()))
        assert rt.g2 == pytest.approx(1.0 * 2.0 + 1.0)


class TestLogLikelihood:
    def test_none_observed_closed_form(self):
        rec = SubjectRecord(0.0, 2.0, 0, 2.0, 0, [0.3], [-0.2], [0.0])
        gamma = 0.7
        params = ModelParameters(
            RegressionCoefficients([0.5], [0.2], [0.1]), unit_weibull(gamma))
        data = Dataset([rec])
        g2 = risk_terms(rec, params).g2
        expected = -(1.0 / gamma) * np.log1p(gamma * g2)
        assert log_likelihood(params, data) == pytest.approx(expected, rel=1e-12)

    def test_vanishing_frailty_recovers_frailty_free_model(self):
        data = small_dataset(n=15, seed=2)
        rng = np.random.default_rng(5)
        params = random_params(data, rng, gamma=1e-8)
        ll = log_likelihood(params, data)
        # frailty-free reference: sum of event log-hazards minus total risk
        ref = 0.0
        for rec in data.records:
            rt = risk_terms(rec, params)
            scen = classify_scenario(rec)
            spec = params.nuisance.baseline
            b = params.beta
            if rec.delta1 == 1:
                lam1 = spec.alpha[0] * spec.tau[0] * rec.y1 ** (spec.alpha[0] - 1)
                ref += np.log(lam1) + b.beta1 @ rec.z1
            if scen is ObservationScenario.TERMINAL_ONLY:
                lam2 = spec.alpha[1] * spec.tau[1] * rec.y2 ** (spec.alpha[1] - 1)
                ref += np.log(lam2) + b.beta2 @ rec.z2
            if scen is ObservationScenario.BOTH_OBSERVED:
                soj = rec.y2 - rec.y1
                lam3 = spec.alpha[2] * spec.tau[2] * soj ** (spec.alpha[2] - 1)
                ref += np.log(lam3) + b.beta3 @ rec.z3
            ref -= rt.g1 + rt.g2
        assert ll == pytest.approx(ref, rel=1e-6)

    @pytest.mark.parametrize("baseline", ["weibull", "bernstein"])
    @pytest.mark.parametrize("window", ["first", "terminal"])
    def test_matches_frailty_quadrature_oracle(self, baseline, window):
        data = small_dataset(n=20, seed=8)
        rng = np.random.default_rng(11)
        params = random_params(data, rng, baseline=baseline)
        ll = log_likelihood(params, data, risk_window=window)
        oracle = sum(np.log(frailty_integral_oracle(params, r, risk_window=window))
                     for r in data.records)
        assert abs(ll - oracle) / abs(ll) < 1e-8

    def test_scenario_additivity(self):
        data = small_dataset(n=40, seed=3)
        params = random_params(data, np.random.default_rng(4))
        total = log_likelihood(params, data)
        parts = 0.0
        for scen in ObservationScenario:
            recs = [r for r in data.records if classify_scenario(r) is scen]
            if recs:
                parts += log_likelihood(params, Dataset(recs, data.dims))
        assert total == pytest.approx(parts, rel=1e-12)

    def test_degenerate_record_rejected_with_index(self):
        ok = SubjectRecord(0.0, 1.0, 1, 3.0, 1, [0.0], [0.0], [0.0])
        bad = SubjectRecord(0.0, 2.0, 1, 2.0, 1, [0.0], [0.0], [0.0])
        params = ModelParameters(zero_beta((1, 1, 1)), unit_weibull())
        with pytest.raises(DegenerateRecordError, match="index 1"):
            log_likelihood(params, Dataset([ok, bad]))

    def test_nonfinite_beta_rejected(self):
        data = small_dataset(n=5)
        params = random_params(data, np.random.default_rng(0))
        bad = RegressionCoefficients([np.inf, 0, 0], np.zeros(3), np.zeros(3))
        with pytest.raises(ValueError):
            log_likelihood(ModelParameters(bad, params.nuisance), data)


class TestOracle:
    def test_survivor_of_nothing(self):
        rec = SubjectRecord(2.0, 2.0, 0, 2.0, 0, [0.0], [0.0], [0.0])
        params = ModelParameters(zero_beta((1, 1, 1)), unit_weibull(0.8))
        assert frailty_integral_oracle(params, rec) == pytest.approx(1.0, rel=1e-9)

    def test_halving_at_unit_risk(self):
        # gamma = 1, g2 = 1: (1 + g2)^(-1) = 1/2
        rec = SubjectRecord(0.0, 0.5, 0, 0.5, 0, [0.0], [0.0], [0.0])
        params = ModelParameters(zero_beta((1, 1, 1)), unit_weibull(1.0))
        assert risk_terms(rec, params).g2 == pytest.approx(1.0)
        assert frailty_integral_oracle(params, rec) == pytest.approx(0.5, rel=1e-9)

    def test_both_observed_self_consistency(self):
        rec = SubjectRecord(0.1, 1.0, 1, 2.5, 1, [0.4], [-0.3], [0.2])
        rng = np.random.default_rng(21)
        params = random_params(Dataset([rec]), rng, gamma=0.5)
        contrib = log_likelihood(params, Dataset([rec]))
        oracle = frailty_integral_oracle(params, rec)
        assert np.exp(contrib) == pytest.approx(oracle, rel=1e-8)


class TestDerivatives:
    def test_zero_covariates_zero_gradient(self):
        recs = [SubjectRecord(0.0, 1.0, 1, 2.0, 1, np.zeros(3), np.zeros(3), np.zeros(3)),
                SubjectRecord(0.0, 2.0, 0, 2.0, 0, np.zeros(3), np.zeros(3), np.zeros(3))]
        data = Dataset(recs)
        params = random_params(data, np.random.default_rng(1))
        np.testing.assert_array_equal(gradient_beta(params, data), np.zeros(9))
        np.testing.assert_array_equal(hessian_beta(params, data), np.zeros((9, 9)))

    def test_duplicated_dataset_doubles_gradient(self):
        data = small_dataset(n=10, seed=6)
        params = random_params(data, np.random.default_rng(7))
        g1 = gradient_beta(params, data)
        doubled = Dataset(list(data.records) * 2, data.dims)
        np.testing.assert_allclose(gradient_beta(params, doubled), 2.0 * g1,
                                   rtol=1e-12)

    @pytest.mark.parametrize("baseline", ["weibull", "bernstein"])
    def test_gradient_matches_central_differences(self, baseline):
        data = small_dataset(n=25, seed=9)
        rng = np.random.default_rng(13)
        for _ in range(20):
            params = random_params(data, rng, baseline=baseline)
            ev = BetaLikelihood(data, params.nuisance)
            b0 = params.beta.stacked
            g = ev.gradient(b0)
            h = np.cbrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(b0))
            fd = np.empty_like(b0)
            for j in range(b0.size):
                e = np.zeros_like(b0)
                e[j] = h[j]
                fd[j] = (ev.loglik(b0 + e) - ev.loglik(b0 - e)) / (2 * h[j])
            denom = np.maximum(1.0, np.abs(fd))
            assert np.max(np.abs(g - fd) / denom) < 1e-5

    def test_hessian_matches_gradient_differences(self):
        data = small_dataset(n=25, seed=10)
        rng = np.random.default_rng(17)
        for _ in range(20):
            params = random_params(data, rng)
            ev = BetaLikelihood(data, params.nuisance)
            b0 = params.beta.stacked
            H = ev.hessian(b0)
            h = 1e-6
            fd = np.empty_like(H)
            for j in range(b0.size):
                e = np.zeros_like(b0)
                e[j] = h
                fd[:, j] = (ev.gradient(b0 + e) - ev.gradient(b0 - e)) / (2 * h)
            denom = np.maximum(1.0, np.abs(fd))
            assert np.max(np.abs(H - fd) / denom) < 1e-4

    def test_hessian_exactly_symmetric(self):
        data = small_dataset(n=15, seed=12)
        params = random_params(data, np.random.default_rng(19))
        H = hessian_beta(params, data)
        assert np.max(np.abs(H - H.T)) == 0.0


class TestPseudoData:
    def test_zero_gradient_keeps_beta(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=(4, 4))
        J = A @ A.T + 4 * np.eye(4)
        beta = rng.normal(size=4)
        pd = pseudo_data(beta, np.zeros(4), -J)
        minimizer = np.linalg.solve(pd.X.T @ pd.X, pd.X.T @ pd.W)
        np.testing.assert_allclose(minimizer, beta, atol=1e-12)

    def test_scalar_newton_step(self):
        pd = pseudo_data(np.array([1.0]), np.array([4.0]), np.array([[-2.0]]))
        minimizer = float(pd.W[0] / pd.X[0, 0])
        assert minimizer == pytest.approx(3.0)   # beta + u / (-H) = 1 + 2

    def test_surrogate_gradient_at_beta_is_minus_u(self):
        rng = np.random.default_rng(14)
        A = rng.normal(size=(5, 5))
        J = A @ A.T + 5 * np.eye(5)
        beta, u = rng.normal(size=5), rng.normal(size=5)
        pd = pseudo_data(beta, u, -J)
        grad = pd.X.T @ (pd.X @ beta - pd.W)
        np.testing.assert_allclose(grad, -u, atol=1e-10)

    def test_factorization_and_newton_step_on_random_matrices(self):
        rng = np.random.default_rng(15)
        for _ in range(50):
            p = rng.integers(2, 12)
            A = rng.normal(size=(p, p))
            J = A @ A.T + p * np.eye(p)
            beta, u = rng.normal(size=p), rng.normal(size=p)
            pd = pseudo_data(beta, u, -J)
            assert np.max(np.abs(pd.X.T @ pd.X - J)) < 1e-10 * np.max(np.abs(J))
            assert np.allclose(np.tril(pd.X, -1), 0.0)
            newton = beta + np.linalg.solve(J, u)
            minimizer = np.linalg.solve(pd.X.T @ pd.X, pd.X.T @ pd.W)
            np.testing.assert_allclose(minimizer, newton, atol=1e-10)

    def test_jitter_reported_on_semidefinite_input(self):
        H = np.zeros((3, 3))
        pd = pseudo_data(np.zeros(3), np.zeros(3), H)
        assert pd.jitter > 0.0

    def test_conditioning_error_after_max_jitter(self):
        H = np.array([[1.0]])   # -H negative definite beyond any jitter
        with pytest.raises(np.linalg.LinAlgError):
            pseudo_data(np.zeros(1), np.zeros(1), H, max_jitter_doublings=3)


class TestTruncationConvention:
    def test_calendar_switch_changes_risk(self):
        rec = SubjectRecord(1.0, 2.0, 1, 3.0, 1, [0.0], [0.0], [0.0])
        spec = unit_weibull()
        spec2 = ModelParameters(zero_beta((1, 1, 1)), spec)
        gap = risk_terms(rec, spec2, truncation="gap")
        cal = risk_terms(rec, spec2, truncation="calendar")
        # unit hazard: Lambda(y2-l) = 2 = Lambda(y2) - Lambda(l); equal here
        assert gap.g2 == pytest.approx(cal.g2)
        # quadratic hazard separates the two conventions
        from scrbar import WeibullBaselineSet
        from scrbar import NuisanceParameters
        quad_spec = ModelParameters(
            zero_beta((1, 1, 1)),
            NuisanceParameters(1.0, WeibullBaselineSet(
                np.log([2.0] * 3), np.zeros(3))))
        gap2 = risk_terms(rec, quad_spec, truncation="gap")
        cal2 = risk_terms(rec, quad_spec, truncation="calendar")
        assert gap2.g2 == pytest.approx(2.0 * 1.0)            # 2 * (y1-l)^2
        assert cal2.g2 == pytest.approx(2.0 * (4.0 - 1.0))    # 2 * (y1^2 - l^2)

    def test_oracle_agrees_under_calendar_convention(self):
        data = small_dataset(n=10, seed=30, trunc_upper=0.8)
        params = random_params(data, np.random.default_rng(31))
        ll = log_likelihood(params, data, truncation="calendar")
        oracle = sum(np.log(frailty_integral_oracle(params, r, truncation="calendar"))
                     for r in data.records)
        assert abs(ll - oracle) / abs(ll) < 1e-8
