import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scrbar import ReplicateMetrics, aggregate, confusion_counts, ges, mse

LAYOUT = ((0, 1), (2, 3), (4, 5, 6), (7, 8, 9))


class TestMse:
    def test_zero_at_truth(self):
        b = np.array([1.0, -2.0, 0.5])
        assert mse(b, b, np.eye(3)) == 0.0

    def test_identity_unit_direction(self):
        assert mse(np.array([1.0, 0.0]), np.zeros(2), np.eye(2)) == 1.0

    def test_matches_double_loop(self):
        rng = np.random.default_rng(0)
        d = rng.normal(size=3)
        A = rng.normal(size=(3, 3))
        S = A @ A.T
        brute = sum(d[i] * S[i, j] * d[j] for i in range(3) for j in range(3))
        assert mse(d, np.zeros(3), S) == pytest.approx(brute, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.zeros(3), np.zeros(2), np.eye(3))
        with pytest.raises(ValueError):
            mse(np.zeros(3), np.zeros(3), np.eye(2))


class TestConfusionCounts:
    def truth(self, q=4, d=15):
        one = np.r_[np.ones(q), np.zeros(d - q)]
        return np.concatenate([one, one, one])

    def test_perfect_recovery(self):
        t = self.truth()
        assert confusion_counts(t, t) == (12, 0, 0)

    def test_all_zero_estimate(self):
        t = self.truth()
        assert confusion_counts(np.zeros_like(t), t) == (0, 0, 12)

    def test_all_nonzero_estimate(self):
        t = self.truth()
        assert confusion_counts(np.ones_like(t), t) == (12, 33, 33)

    def test_threshold_respected(self):
        t = np.array([1.0, 0.0])
        est = np.array([1e-7, 1e-7])
        assert confusion_counts(est, t, eps=1e-6) == (0, 0, 1)

    @given(st.integers(0, 2**45 - 1))
    @settings(max_examples=50)
    def test_mcv_identity(self, mask):
        t = self.truth()
        sel = np.array([(mask >> j) & 1 for j in range(45)], dtype=float)
        tp, fp, mcv = confusion_counts(sel, t)
        assert mcv == (12 - tp) + fp


class TestGes:
    def all_sel(self):
        return [np.ones(10, dtype=bool)] * 3

    def none_sel(self):
        return [np.zeros(10, dtype=bool)] * 3

    def test_perfect_selection(self):
        sel = [np.r_[np.ones(4), np.zeros(6)].astype(bool)] * 3
        assert ges(sel, LAYOUT) == pytest.approx(1.0)

    def test_everything_selected(self):
        assert ges(self.all_sel(), LAYOUT) == pytest.approx(0.4)

    def test_nothing_selected(self):
        assert ges(self.none_sel(), LAYOUT) == pytest.approx(0.6)

    def test_complementarity_of_extremes(self):
        assert ges(self.all_sel(), LAYOUT) + ges(self.none_sel(), LAYOUT) \
            == pytest.approx(1.0)

    def test_pools_across_transitions(self):
        sel = [np.r_[np.ones(4), np.zeros(6)].astype(bool),
               np.zeros(10, dtype=bool),
               np.zeros(10, dtype=bool)]
        # groups 1-2: 4 of 12 selected -> g1 = g2 = 1/3; groups 3-4 all zero
        assert ges(sel, LAYOUT) == pytest.approx(0.2 / 3 + 0.2 / 3 + 0.6)

    def test_layout_validation(self):
        with pytest.raises(ValueError):
            ges(self.all_sel(), LAYOUT[:3])
        with pytest.raises(ValueError):
            ges([np.ones(3, dtype=bool)] * 3, LAYOUT)


def rep(tp=12, fp=0, mcv=0, m=0.5, sel=None, g=np.nan):
    if sel is None:
        sel = np.r_[np.ones(12), np.zeros(33)]
    return ReplicateMetrics(tp=tp, fp=fp, mcv=mcv, mse=m, selected=sel, ges=g)


class TestAggregate:
    def test_single_replicate(self):
        a = aggregate([rep(m=1.3)])
        assert (a.mean_tp, a.mean_fp, a.mean_mcv) == (12.0, 0.0, 0.0)
        assert a.mmse == 1.3
        assert a.sd_mse == 0.0

    def test_median_of_two(self):
        a = aggregate([rep(m=1.0), rep(m=3.0)])
        assert a.mmse == 2.0

    def test_selection_frequency(self):
        on = rep(sel=np.r_[np.ones(5), np.zeros(40)])
        off = rep(sel=np.zeros(45))
        a = aggregate([on] * 89 + [off] * 11)
        assert a.selection_frequency[0] == pytest.approx(0.89)
        assert a.selection_frequency[-1] == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        reps = [rep(tp=int(rng.integers(0, 12)), m=float(rng.uniform(0, 2)))
                for _ in range(9)]
        a = aggregate(reps)
        b = aggregate(reps[::-1])
        assert a.mean_tp == b.mean_tp and a.mmse == b.mmse and a.sd_mse == b.sd_mse

    def test_ges_averaged_when_present(self):
        a = aggregate([rep(g=1.0), rep(g=0.5)])
        assert a.mean_ges == pytest.approx(0.75)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])
