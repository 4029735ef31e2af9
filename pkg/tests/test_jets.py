import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matorus.errors import GaugeViolated, GridMismatchError, NotPositiveError
from matorus.jets import (
    CoordinateChange,
    MetricJet,
    check_balanced_coords,
    check_cs_chain,
    gauge_errors,
    normal_coordinates,
    project_balanced,
    random_hpd,
    random_jet,
    run_identity_fuzz,
    trace_identity_gap_n2,
    trace_inequality_slack,
    transform_jet,
)


class TestJetValidation:
    def test_rejects_non_positive_g0(self, rng):
        with pytest.raises(NotPositiveError):
            MetricJet(np.diag([1.0, -1.0]), np.zeros((2, 2, 2)), np.zeros((2, 2)))

    def test_rejects_non_hermitian(self, rng):
        g0 = np.eye(2) + 0j
        bad = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(GridMismatchError):
            MetricJet(g0, np.zeros((2, 2, 2)), bad)

    def test_quadratic_symmetry_enforced(self):
        q = np.zeros((2, 2, 2), dtype=complex)
        q[0, 0, 1] = 1.0
        with pytest.raises(GridMismatchError):
            CoordinateChange(np.eye(2), q)


class TestNormalCoordinates:
    def test_already_normalized_gives_identity(self):
        # diagonal ascending Hessian, gauge conditions already satisfied
        jet = MetricJet(np.eye(2), np.zeros((2, 2, 2)), np.diag([1.0, 2.0]))
        ch = normal_coordinates(jet)
        assert np.max(np.abs(ch.linear - np.eye(2))) < 1e-13
        assert np.max(np.abs(ch.quadratic)) < 1e-13

    def test_identity_g0_random_jet(self, rng):
        for n in (2, 3):
            jet = random_jet(rng, n, identity_g0=True)
            out = transform_jet(jet, normal_coordinates(jet))
            e_id, e_hess, e_dg = gauge_errors(out)
            assert e_id < 1e-12
            assert e_hess < 1e-12
            assert e_dg < 1e-12

    def test_random_positive_g0_maps_to_identity(self, rng):
        for n in (2, 3):
            for _ in range(20):
                jet = random_jet(rng, n)
                out = transform_jet(jet, normal_coordinates(jet))
                assert np.max(np.abs(out.g0 - np.eye(n))) < 1e-13

    def test_full_gauge_on_200_random_jets(self, rng):
        for k in range(200):
            jet = random_jet(rng, 2 + (k % 2))
            out = transform_jet(jet, normal_coordinates(jet))
            assert max(gauge_errors(out)) <= 1e-12

    def test_idempotent_up_to_diagonal_phase(self, rng):
        jet = random_jet(rng, 2)
        out = transform_jet(jet, normal_coordinates(jet))
        again = normal_coordinates(out)
        lin = again.linear
        off = lin - np.diag(np.diag(lin))
        assert np.max(np.abs(off)) < 1e-10
        assert np.max(np.abs(np.abs(np.diag(lin)) - 1.0)) < 1e-10
        assert np.max(np.abs(again.quadratic)) < 1e-10

    def test_hessian_eigenvalues_preserved(self, rng):
        # the transformed Hessian is diagonal with the eigenvalues of the
        # pencil (hess, g0)
        import scipy.linalg

        jet = random_jet(rng, 3)
        out = transform_jet(jet, normal_coordinates(jet))
        got = np.sort(np.diag(out.hess_phi).real)
        want = np.sort(scipy.linalg.eigvalsh(jet.hess_phi, jet.g0))
        assert np.max(np.abs(got - want)) < 1e-10


class TestTraceInequality:
    def test_equality_in_dimension_two(self, rng):
        for _ in range(200):
            g, gp = random_hpd(rng, 2), random_hpd(rng, 2)
            lhs, rhs, slack = trace_inequality_slack(g, gp)
            assert slack >= -1e-12 * max(1.0, rhs)
            assert trace_identity_gap_n2(g, gp) <= 1e-12 * max(1.0, rhs)

    def test_inequality_in_dimension_three(self, rng):
        for _ in range(200):
            g, gp = random_hpd(rng, 3), random_hpd(rng, 3)
            _, rhs, slack = trace_inequality_slack(g, gp)
            assert slack >= -1e-12 * max(1.0, rhs)

    @settings(max_examples=150, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), n=st.sampled_from([2, 3]))
    def test_inequality_hypothesis(self, seed, n):
        r = np.random.default_rng(seed)
        g, gp = random_hpd(r, n), random_hpd(r, n)
        _, rhs, slack = trace_inequality_slack(g, gp)
        assert slack >= -1e-12 * max(1.0, rhs)


class TestCsChain:
    def test_zero_derivatives(self):
        res = check_cs_chain(np.array([1.0, 2.0]), np.zeros((2, 2, 2)))
        assert res.holds and res.slack == 0.0 and res.lhs == 0.0

    def test_equality_case_is_tight(self, rng):
        for n in (2, 3):
            lam = np.exp(rng.uniform(-1, 1, size=n))
            cvec = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            d = np.zeros((n, n, n), dtype=complex)
            for i in range(n):
                for j in range(n):
                    d[i, j, j] = cvec[i] * lam[j]
            res = check_cs_chain(lam, d)
            assert res.holds
            assert abs(res.slack) <= 1e-12 * max(1.0, res.rhs)

    def test_random_fuzz(self, rng):
        for k in range(1000):
            n = 2 + (k % 2)
            lam = np.exp(rng.uniform(-1.5, 1.5, size=n))
            d = rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
            assert check_cs_chain(lam, d).holds

    def test_rejects_non_positive_diagonal(self):
        with pytest.raises(NotPositiveError):
            check_cs_chain(np.array([1.0, 0.0]), np.zeros((2, 2, 2)))


class TestBalancedCoords:
    def test_flat_jet_trivial(self):
        jet = MetricJet(np.eye(2), np.zeros((2, 2, 2)), np.zeros((2, 2)))
        res = check_balanced_coords(jet, np.zeros((2, 2, 2)))
        assert res.holds
        assert np.max(np.abs(res.torsion_trace)) == 0.0

    def test_projected_random_jets(self, rng):
        for k in range(100):
            n = 2 + (k % 2)
            dg = project_balanced(
                rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
            )
            jet = MetricJet(np.eye(n), dg, np.zeros((n, n)))
            dphi3 = rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
            dphi3 = 0.5 * (dphi3 + np.swapaxes(dphi3, 0, 1))
            res = check_balanced_coords(jet, dphi3)
            assert res.holds
            assert res.divergence_error <= 1e-12
            assert res.gradient_identity_error <= 1e-12

    def test_violation_is_reported_exactly(self, rng):
        n = 2
        dg = project_balanced(
            rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
        )
        dg = np.array(dg)
        dg[1, 0, 1] += 0.5  # break the torsion-trace constraint for i=0
        jet = MetricJet(np.eye(n), dg, np.zeros((n, n)))
        res = check_balanced_coords(jet, np.zeros((n, n, n)))
        assert not res.holds
        assert res.torsion_trace[0] == pytest.approx(0.5, abs=1e-12)
        # in this gauge the reported vector equals the torsion trace itself
        tvec = np.array(
            [sum(dg[j, i, j] for j in range(n)) - sum(dg[i, j, j] for j in range(n))
             for i in range(n)]
        )
        assert np.max(np.abs(res.torsion_trace - tvec)) < 1e-12

    def test_gauge_violation_raises(self, rng):
        dg = np.zeros((2, 2, 2), dtype=complex)
        dg[0, 1, 1] = 1.0  # d_1 g_{22} != 0 violates the gauge
        jet = MetricJet(np.eye(2), dg, np.zeros((2, 2)))
        with pytest.raises(GaugeViolated):
            check_balanced_coords(jet, np.zeros((2, 2, 2)))


def test_run_identity_fuzz_deterministic():
    a = run_identity_fuzz(7, n_matrix=50, n_jets=20, n_balanced=10)
    b = run_identity_fuzz(7, n_matrix=50, n_jets=20, n_balanced=10)
    assert a["counts"] == b["counts"]
    assert a["failures"] == b["failures"] == []
    total_passed = sum(c["passed"] for c in a["counts"].values())
    total = sum(c["total"] for c in a["counts"].values())
    assert total_passed == total
