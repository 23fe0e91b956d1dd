import numpy as np
import pytest

import entfate as ef
from entfate.errors import HorizonTooShort, UnsupportedDimension
from entfate.fate import wilson_interval

GAMMA = 1.0


def pure_two_qubit(weights):
    v = np.asarray(weights, dtype=complex)
    v /= np.linalg.norm(v)
    return ef.new_state(np.outer(v, v.conj()), 2, 2)


def damped_margin_oracle(rho0, t, gamma=GAMMA):
    """PT margin of the closed-form amplitude-damped state."""
    p = 1.0 - np.exp(-gamma * t)
    e0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - p)]], dtype=complex)
    e1 = np.array([[0.0, np.sqrt(p)], [0.0, 0.0]], dtype=complex)
    out = np.zeros((4, 4), dtype=complex)
    for ka in (e0, e1):
        for kb in (e0, e1):
            k = np.kron(ka, kb)
            out += k @ rho0 @ k.conj().T
    return ef.min_pt_eigenvalue(ef.new_state(out, 2, 2))


class TestDetectFate:
    def test_separable_product_never_entangled(self):
        # local dynamics cannot create entanglement
        g = ef.catalog_generator(2)
        rec = ef.detect_fate(g, ef.basis_state(1, 1), horizon=30.0)
        assert rec.fate_tag == "never_entangled"
        assert rec.death_time is None and rec.birth_time is None

    def test_sudden_death_branch(self):
        g = ef.catalog_generator(2)
        rho0 = pure_two_qubit([np.sqrt(0.1), 0, 0, np.sqrt(0.9)])
        rec = ef.detect_fate(g, rho0, horizon=30.0)
        assert rec.fate_tag == "sudden_death"
        assert rec.death_time is not None
        # oracle: the closed-form margin changes sign across the death time
        assert damped_margin_oracle(rho0.matrix, rec.death_time - 0.01) < 0
        assert damped_margin_oracle(rho0.matrix, rec.death_time + 0.01) > 0

    def test_asymptotic_death_branch(self):
        g = ef.catalog_generator(2)
        rho0 = pure_two_qubit([np.sqrt(0.9), 0, 0, np.sqrt(0.1)])
        rec = ef.detect_fate(g, rho0, horizon=30.0)
        assert rec.fate_tag == "asymptotic_death"
        assert rec.death_time is None
        # oracle: margin negative at every probed finite time
        for t in np.linspace(0.1, 20.0, 40):
            assert damped_margin_oracle(rho0.matrix, t) < 0

    def test_depolarizing_death_at_log3(self):
        # Werner margin (1 - 3 e^-t)/4 crosses zero at t = ln 3
        g = ef.catalog_generator(1)
        rec = ef.detect_fate(g, ef.max_entangled(), horizon=20.0)
        assert rec.fate_tag == "sudden_death"
        assert abs(rec.death_time - np.log(3.0)) < 1e-5

    def test_sudden_birth_toward_entangled_attractor(self):
        g = ef.catalog_generator(3)
        rec = ef.detect_fate(g, ef.basis_state(0, 1), horizon=30.0)
        assert rec.fate_tag == "asymptotically_entangled"
        assert rec.birth_time is not None
        assert rec.final_margin < -0.4

    def test_horizon_too_short(self):
        g = ef.catalog_generator(3)
        with pytest.raises(HorizonTooShort):
            ef.detect_fate(g, ef.basis_state(0, 1), horizon=0.5)

    def test_wrong_dims(self):
        g = ef.catalog_generator(1)
        s = ef.sample(ef.EnsembleSpec("hilbert_schmidt_mixed", seed=0), dims=(2, 3))
        with pytest.raises(UnsupportedDimension):
            ef.detect_fate(g, s, horizon=1.0)

    def test_bad_horizon(self):
        g = ef.catalog_generator(1)
        with pytest.raises(ValueError):
            ef.detect_fate(g, ef.max_entangled(), horizon=0.0)


class TestMarginCurve:
    def test_constant_zero_generator(self):
        from entfate.dynamics import make_generator

        g = make_generator((2, 2))
        traj = ef.propagate(g, ef.basis_state(0, 0), np.linspace(0.0, 1.0, 5))
        curve = ef.margin_curve(traj)
        margins = [m for _, m, _ in curve]
        assert max(margins) - min(margins) < 1e-12

    def test_depolarizing_single_crossing(self):
        g = ef.catalog_generator(1)
        traj = ef.propagate(g, ef.max_entangled(), np.linspace(0.0, 10.0, 201))
        curve = ef.margin_curve(traj)
        margins = np.array([m for _, m, _ in curve])
        signs = np.sign(margins[np.abs(margins) > 1e-9])
        flips = np.sum(np.diff(signs) != 0)
        assert flips == 1
        # Werner-line closed form: margin(t) = (1 - 3 e^-t)/4
        for t, m, _ in curve:
            assert abs(m - (1 - 3 * np.exp(-t)) / 4) < 1e-8

    def test_concurrence_zero_where_ppt(self):
        g = ef.catalog_generator(1)
        traj = ef.propagate(g, ef.max_entangled(), np.linspace(0.0, 10.0, 101))
        for _, m, c in ef.margin_curve(traj):
            if m >= 0.0:
                assert c < 1e-7


class TestFateStatistics:
    def test_class2_dichotomy_at_equal_concurrence(self):
        g = ef.catalog_generator(2)
        spec = ef.EnsembleSpec("fixed_concurrence_pure", seed=7, target_concurrence=0.6)
        stats, records = ef.fate_statistics(g, spec, n=60, horizon=30.0, seed=7)
        assert stats.failures == 0
        assert stats.counts["sudden_death"] > 0
        assert stats.counts["asymptotic_death"] > 0
        assert abs(sum(stats.fractions.values()) - 1.0) < 1e-12

    def test_class1_no_surviving_entanglement(self):
        g = ef.catalog_generator(1)
        spec = ef.EnsembleSpec("haar_pure", seed=11)
        stats, records = ef.fate_statistics(g, spec, n=50, horizon=20.0, seed=11)
        assert stats.counts["asymptotically_entangled"] == 0
        assert stats.counts["revival"] == 0
        for rec in records:
            if rec.initial_concurrence > 1e-8:
                assert rec.fate_tag == "sudden_death"
                assert rec.death_time < 20.0

    def test_single_sample_degenerate(self):
        g = ef.catalog_generator(1)
        spec = ef.EnsembleSpec("haar_pure", seed=3)
        stats, _ = ef.fate_statistics(g, spec, n=1, horizon=20.0)
        for tag, frac in stats.fractions.items():
            assert frac in (0.0, 1.0)
            lo, hi = stats.intervals[tag]
            assert lo <= frac <= hi

    def test_reproducible_and_worker_invariant(self):
        g = ef.catalog_generator(2)
        spec = ef.EnsembleSpec("hilbert_schmidt_mixed", seed=21)
        _, r1 = ef.fate_statistics(g, spec, n=16, horizon=25.0, seed=21, workers=1)
        _, r1b = ef.fate_statistics(g, spec, n=16, horizon=25.0, seed=21, workers=1)
        _, r2 = ef.fate_statistics(g, spec, n=16, horizon=25.0, seed=21, workers=2)
        assert r1 == r1b
        assert r1 == r2

    def test_never_entangled_matches_ppt_fraction(self):
        # local (entanglement-non-creating) dynamics: the never_entangled
        # fraction equals the ensemble's PPT fraction
        g = ef.catalog_generator(2)
        spec = ef.EnsembleSpec("hilbert_schmidt_mixed", seed=33)
        n = 200
        stats, _ = ef.fate_statistics(g, spec, n=n, horizon=25.0, seed=33)
        ppt = sum(
            1
            for i in range(n)
            if ef.min_pt_eigenvalue(
                ef.sample(
                    ef.EnsembleSpec("hilbert_schmidt_mixed", seed=ef.split_seed(33, i))
                )
            )
            > 1e-7
        )
        lo, hi = stats.intervals["never_entangled"]
        assert lo - 0.05 <= ppt / n <= hi + 0.05

    def test_n_must_be_positive(self):
        g = ef.catalog_generator(1)
        spec = ef.EnsembleSpec("haar_pure", seed=0)
        with pytest.raises(ValueError):
            ef.fate_statistics(g, spec, n=0, horizon=1.0)


class TestWilsonInterval:
    def test_contains_fraction(self):
        for k, n in ((0, 10), (5, 10), (10, 10), (37, 100)):
            lo, hi = wilson_interval(k, n)
            assert 0.0 <= lo <= k / n <= hi <= 1.0

    def test_shrinks_with_n(self):
        lo1, hi1 = wilson_interval(5, 10)
        lo2, hi2 = wilson_interval(500, 1000)
        assert hi2 - lo2 < hi1 - lo1
