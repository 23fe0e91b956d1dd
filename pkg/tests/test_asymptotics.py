import numpy as np
import pytest

import entfate as ef
from entfate.asymptotics import CLASS4_MIN_C
from entfate.dynamics import ExponentialRate, make_generator, vec
from entfate.errors import (
    BadParams,
    NotConverged,
    OscillatoryAsymptotics,
    UnsupportedDimension,
)
from entfate.operators import EYE2, SZ, two_qubit_paulis


def random_state(seed):
    return ef.sample(ef.EnsembleSpec("hilbert_schmidt_mixed", seed=seed))


class TestStationarySetAutonomous:
    def test_depolarizing_unique_maximally_mixed(self):
        aset = ef.stationary_set_autonomous(ef.catalog_generator(1))
        assert aset.kind == "unique"
        assert aset.diagnostics["kernel_dim"] == 1
        assert ef.trace_distance(aset.state, ef.new_state(np.eye(4) / 4, 2, 2)) < 1e-10
        # uniqueness cross-check: propagate random states to a long horizon
        g = ef.catalog_generator(1)
        for seed in range(10):
            traj = ef.propagate(g, random_state(seed), [0.0, 50.0])
            assert ef.trace_distance(traj.states[-1], aset.state) < 1e-8

    def test_damping_unique_ground_state(self):
        aset = ef.stationary_set_autonomous(ef.catalog_generator(2))
        assert aset.kind == "unique"
        assert ef.trace_distance(aset.state, ef.basis_state(0, 0)) < 1e-10

    def test_bell_pumping_unique_entangled(self):
        aset = ef.stationary_set_autonomous(ef.catalog_generator(3))
        assert aset.kind == "unique"
        assert ef.trace_distance(aset.state, ef.max_entangled()) < 1e-10

    def test_dephasing_affine_diagonal_family(self):
        aset = ef.stationary_set_autonomous(ef.catalog_generator(5))
        assert aset.kind == "affine_family"
        assert aset.cardinality == "many"
        assert aset.diagnostics["kernel_dim"] == 4
        assert len(aset.basis) == 3
        for b in aset.basis:
            assert abs(np.trace(b)) < 1e-10
            assert np.max(np.abs(b - b.conj().T)) < 1e-10
        # every diagonal state is a member
        rng = np.random.default_rng(0)
        for _ in range(10):
            p = rng.dirichlet(np.ones(4))
            diag = ef.new_state(np.diag(p.astype(complex)), 2, 2)
            assert ef.membership_residual(aset, diag) < 1e-8

    def test_oscillatory_rejected(self):
        g = make_generator((2, 2), hamiltonian=np.kron(SZ, EYE2))
        with pytest.raises(OscillatoryAsymptotics):
            ef.stationary_set_autonomous(g)


class TestAsymptoticSetNonautonomous:
    def test_quenched_depolarizing_closed_form(self):
        # scalar ODE for the depolarizing weight: w(inf) = exp(-c)
        c = 2.0
        aset = ef.asymptotic_set_nonautonomous(ef.catalog_generator(4, c=c))
        expected = np.exp(-c) * np.eye(16) + (1 - np.exp(-c)) * np.outer(
            vec(np.eye(4) / 4), vec(np.eye(4))
        )
        assert np.max(np.abs(aset.map_matrix - expected)) < 1e-6
        assert aset.cardinality == "many"

    def test_forced_flag_on_autonomous_dynamics(self):
        # cross-module oracle: image map must land on the spectral A
        g2 = ef.catalog_generator(2)
        forced = make_generator(
            (2, 2),
            jumps=[(ch.operator, ch.rate) for ch in g2.jumps],
            autonomous=False,
        )
        aset = ef.asymptotic_set_nonautonomous(forced, horizon=80.0, tol=1e-6)
        ground = ef.basis_state(0, 0)
        rng = np.random.default_rng(1)
        for seed in range(5):
            img = ef.sample_member(aset, rng)
            assert ef.trace_distance(img, ground) < 1e-6

    def test_no_evolution_identity_map(self):
        g = make_generator(
            (2, 2),
            jumps=[(two_qubit_paulis()[0], ExponentialRate(0.0))],
            autonomous=False,
        )
        aset = ef.asymptotic_set_nonautonomous(g, horizon=10.0)
        assert np.max(np.abs(aset.map_matrix - np.eye(16))) < 1e-8
        assert aset.cardinality == "many"

    def test_not_converged_reported(self):
        with pytest.raises(NotConverged):
            ef.asymptotic_set_nonautonomous(ef.catalog_generator(6), horizon=4.0)


class TestClassifyTheoremClass:
    def test_unique_cases(self):
        for class_id in (1, 2, 3):
            aset = ef.stationary_set_autonomous(ef.catalog_generator(class_id))
            cls = ef.classify_theorem_class(aset)
            assert cls.class_id == class_id
            assert cls.cardinality == "one"

    def test_boundary_margin_exact(self):
        aset = ef.stationary_set_autonomous(ef.catalog_generator(2))
        cls = ef.classify_theorem_class(aset)
        assert cls.class_id == 2
        assert abs(cls.min_margin) < 1e-8

    def test_quenched_depolarizing_worst_probe_is_bell(self):
        aset = ef.asymptotic_set_nonautonomous(ef.catalog_generator(4, c=2.0))
        cls = ef.classify_theorem_class(aset)
        assert cls.class_id == 4
        assert "Bell" in cls.min_probe
        assert abs(cls.min_margin - (1 - 3 * np.exp(-2.0)) / 4) < 1e-6

    def test_unsupported_dims(self):
        s = ef.sample(ef.EnsembleSpec("hilbert_schmidt_mixed", seed=0), dims=(3, 3))
        from entfate.asymptotics import AsymptoticSet

        aset = AsymptoticSet(kind="unique", cardinality="one", dims=(3, 3), state=s)
        with pytest.raises(UnsupportedDimension):
            ef.classify_theorem_class(aset)


class TestCatalog:
    @pytest.mark.parametrize("class_id", [1, 2, 3, 4, 5, 6])
    def test_round_trip(self, class_id):
        g = ef.catalog_generator(class_id)
        _, cls = ef.classify_generator(g)
        assert cls.class_id == class_id

    def test_bad_params(self):
        with pytest.raises(BadParams):
            ef.catalog_generator(4, c=1.0)
        with pytest.raises(BadParams):
            ef.catalog_generator(6, c=1.0)
        with pytest.raises(BadParams):
            ef.catalog_generator(7)
        with pytest.raises(BadParams):
            ef.catalog_generator(1, gamma=-1.0)
        assert CLASS4_MIN_C == pytest.approx(np.log(3.0) + 0.5)

    def test_class6_all_probes_entangled(self):
        g = ef.catalog_generator(6, c=10.0)
        _, cls = ef.classify_generator(g)
        assert cls.class_id == 6
        assert cls.max_margin < -1e-7

    @pytest.mark.parametrize("class_id", [1, 2, 3, 4, 5, 6])
    def test_mutual_exclusivity_margin_gap(self, class_id):
        _, cls = ef.classify_generator(ef.catalog_generator(class_id))
        tol = cls.tol
        if class_id in (1, 2, 3):
            # singleton: the other singleton classes need a different region
            gap = abs(cls.min_margin)
            if class_id == 2:
                assert gap <= tol
            else:
                assert gap > 2 * tol
        elif class_id == 4:
            assert cls.min_margin > 2 * tol
        elif class_id == 6:
            assert cls.max_margin < -2 * tol
        else:
            assert cls.min_margin <= tol
            assert cls.max_margin > 2 * tol


class TestSetProperties:
    @pytest.mark.parametrize("class_id", [1, 2, 3, 4, 5, 6])
    def test_convexity_midpoints(self, class_id):
        g = ef.catalog_generator(class_id)
        if g.autonomous:
            aset = ef.stationary_set_autonomous(g)
        else:
            aset = ef.asymptotic_set_nonautonomous(g)
        rng = np.random.default_rng(4)
        for _ in range(5):
            a = ef.sample_member(aset, rng)
            b = ef.sample_member(aset, rng)
            mid = ef.new_state(0.5 * (a.matrix + b.matrix), 2, 2)
            assert ef.membership_residual(aset, mid) < 1e-8

    @pytest.mark.parametrize("class_id", [1, 2, 3, 5])
    def test_forward_invariance_autonomous(self, class_id):
        g = ef.catalog_generator(class_id)
        aset = ef.stationary_set_autonomous(g)
        rng = np.random.default_rng(5)
        for _ in range(3):
            m = ef.sample_member(aset, rng)
            traj = ef.propagate(g, m, [0.0, 3.0])
            assert ef.trace_distance(traj.states[-1], m) < 1e-6

    @pytest.mark.parametrize("class_id", [1, 2, 3, 5])
    def test_attraction_autonomous(self, class_id):
        g = ef.catalog_generator(class_id)
        aset = ef.stationary_set_autonomous(g)
        for seed in range(20):
            traj = ef.propagate(g, random_state(seed), [0.0, 60.0])
            assert ef.membership_residual(aset, traj.states[-1]) < 1e-4

    @pytest.mark.parametrize("class_id", [4, 6])
    def test_attraction_nonautonomous(self, class_id):
        g = ef.catalog_generator(class_id)
        aset = ef.asymptotic_set_nonautonomous(g)
        residual = aset.diagnostics["convergence_residual"]
        for seed in range(20):
            traj = ef.propagate(g, random_state(seed), [0.0, 60.0])
            # distance to the state's own image under the converged map
            own_image = ef.new_state(
                (aset.map_matrix @ vec(random_state(seed).matrix)).reshape(4, 4, order="F"),
                2,
                2,
            )
            assert ef.trace_distance(traj.states[-1], own_image) < max(1e-4, 10 * residual)
