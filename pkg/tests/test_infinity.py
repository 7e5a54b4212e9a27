"""Tests for the limit-structure analysis: projection at infinity, peripheral
group detection, Abel pole probes, positivity criteria.

Reference values are hand oracles (2x2 diagonalizations, root-of-unity
arithmetic, brute-force matrix powers) frozen before implementation.
"""

import math

import numpy as np
import pytest

from sginfty.exceptions import PositivityError
from sginfty.infinity import (
    abel_pole_probe,
    converges,
    find_return_times,
    group_structure,
    infinity_decomposition,
    positive_convergence_check,
    quasi_compactness_witness,
    sqrt2_gap_check,
    strong_positivity_convergence,
    subsemigroup_consistency,
)
from sginfty.semigroups import continuous_semigroup, discrete_semigroup, sample
from sginfty.spectral import PeripheralSet, eig_decompose

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])
P_MINUS = 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]])
MEAN2 = 0.5 * np.ones((2, 2))


def peripheral_set(*lams, tol=1e-8):
    return PeripheralSet(circle_radius=1.0, eigenvalues=list(lams), tol=tol)


class TestInfinityDecomposition:
    def test_swap(self):
        dec = infinity_decomposition(discrete_semigroup(SWAP))
        assert dec.exists_compact is True
        np.testing.assert_allclose(dec.P_inf, np.eye(2), atol=1e-9)
        assert sorted(np.round(np.real(dec.peripheral.eigenvalues), 6)) == [-1.0, 1.0]
        assert dec.stable_spectral_radius == pytest.approx(0.0, abs=1e-12)
        assert dec.group.kind == "finite_cyclic"
        assert dec.group.order == 2

    def test_strict_contraction(self):
        dec = infinity_decomposition(discrete_semigroup(np.diag([0.5, 1.0 / 3.0])))
        assert dec.exists_compact is True
        np.testing.assert_allclose(dec.P_inf, np.zeros((2, 2)), atol=1e-12)
        assert dec.stable_spectral_radius == pytest.approx(0.5)
        assert dec.group.kind == "trivial"

    def test_continuous_diagonal(self):
        dec = infinity_decomposition(continuous_semigroup(np.diag([-1.0, 0.0])))
        assert dec.exists_compact is True
        np.testing.assert_allclose(dec.P_inf, np.diag([0.0, 1.0]), atol=1e-10)
        np.testing.assert_allclose(dec.peripheral.eigenvalues, [1.0], atol=1e-12)
        assert dec.group.kind == "trivial"
        assert dec.stable_spectral_radius == pytest.approx(math.exp(-1.0))

    def test_unbounded_reports_reason(self):
        dec = infinity_decomposition(
            discrete_semigroup(np.array([[1.0, 1.0], [0.0, 1.0]]))
        )
        assert dec.exists_compact is False
        assert dec.P_inf is None
        assert "power-bounded" in dec.reason

    def test_projection_commutes_and_splits(self):
        rng = np.random.default_rng(23)
        phases = np.exp(2j * np.pi * np.array([0.0, 1.0 / 3.0, -1.0 / 3.0]))
        lams = np.concatenate([phases, [0.4, -0.2 + 0.1j]])
        Q = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        T = Q @ np.diag(lams) @ np.linalg.inv(Q)
        sg = discrete_semigroup(T)
        dec = infinity_decomposition(sg)
        P = dec.P_inf
        assert np.linalg.norm(P @ P - P, 2) < 1e-8
        for s in (1, 3, 10, 40):
            Ts = sample(sg, s)
            assert np.linalg.norm(Ts @ P - P @ Ts, 2) <= 1e-8
        # stable part decays, reversible part stays bounded away from zero
        x = rng.normal(size=5) + 1j * rng.normal(size=5)
        x_ker = x - P @ x
        assert np.linalg.norm(sample(sg, 60) @ x_ker) < 1e-8
        y = P @ x
        norms = [np.linalg.norm(sample(sg, s) @ y) for s in range(1, 30)]
        assert min(norms) > 0.1 * np.linalg.norm(y)
        # basis spans range of P
        B = dec.E_inf_basis
        assert B.shape[1] == 3
        np.testing.assert_allclose(P @ B, B, atol=1e-8)


class TestConverges:
    def test_swap_does_not_converge(self):
        rep = converges(discrete_semigroup(SWAP))
        assert rep.converges is False
        assert rep.divisibility_gate is False
        assert any(r.verdict == "fail" for r in rep.reasons)

    def test_continuous_diagonal_converges(self):
        rep = converges(continuous_semigroup(np.diag([-1.0, 0.0])))
        assert rep.converges is True
        np.testing.assert_allclose(rep.limit, np.diag([0.0, 1.0]), atol=1e-10)
        assert rep.limit_rank == 1
        assert rep.divisibility_gate is True

    def test_mean_projection_converges(self):
        # T is already a projection: T @ T = T by hand, powers constant
        rep = converges(discrete_semigroup(MEAN2))
        assert rep.converges is True
        np.testing.assert_allclose(rep.limit, MEAN2, atol=1e-10)
        assert rep.limit_rank == 1

    def test_verdict_matches_brute_force_powers(self):
        rng = np.random.default_rng(31)
        checked = 0
        while checked < 40:
            n = int(rng.integers(2, 7))
            keep = rng.random() < 0.5
            lead = 1.0 if keep else np.exp(1j * rng.uniform(0.3, np.pi))
            rest = rng.uniform(0.0, 0.93, size=n - 1) * np.exp(
                1j * rng.uniform(0, 2 * np.pi, size=n - 1)
            )
            margin = 1.0 - max(abs(rest)) if n > 1 else 1.0
            if margin < 0.05:
                continue
            Q = rng.normal(size=(n, n)) + np.eye(n)
            if abs(np.linalg.det(Q)) < 0.1:
                continue
            T = (Q @ np.diag(np.concatenate([[lead], rest])) @ np.linalg.inv(Q))
            if not keep:
                T = T.astype(complex)
            sg = discrete_semigroup(T)
            rep = converges(sg)
            big = np.linalg.matrix_power(T, 10**4)
            oracle = np.linalg.norm(big @ T - big, 2) <= 1e-6
            assert rep.converges == oracle
            checked += 1


class TestAbelPoleProbe:
    def test_swap_recovers_minus_projection(self):
        res = abel_pole_probe(SWAP, -1.0)
        assert res.classification == "first_order_pole"
        np.testing.assert_allclose(res.projection, P_MINUS, atol=1e-7)
        P2 = res.projection @ res.projection
        assert np.linalg.norm(P2 - res.projection, 2) < 1e-6

    def test_resolvent_point(self):
        res = abel_pole_probe(0.5 * np.eye(2), 1.0)
        assert res.classification == "resolvent_point"
        assert res.projection is None
        assert res.final_norm < 1e-6

    def test_higher_order_pole(self):
        res = abel_pole_probe(np.array([[1.0, 1.0], [0.0, 1.0]]), 1.0)
        assert res.classification == "higher_order_pole"
        assert res.final_norm > 1e6

    def test_schedule_matches_contract(self):
        res = abel_pole_probe(0.5 * np.eye(2), 1.0, steps=6)
        expected = [1.0 * (1.0 + 2.0**-k) for k in range(1, 7)]
        np.testing.assert_allclose(res.schedule, expected)

    def test_rejects_small_steps(self):
        with pytest.raises(ValueError):
            abel_pole_probe(SWAP, 1.0, steps=2)

    def test_agreement_with_eig_projection(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            lam = np.exp(1j * rng.uniform(0, 2 * np.pi))
            inner = rng.uniform(0.1, 0.8, size=5) * np.exp(
                1j * rng.uniform(0, 2 * np.pi, size=5)
            )
            Q = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)) + 2 * np.eye(6)
            T = Q @ np.diag(np.concatenate([[lam], inner])) @ np.linalg.inv(Q)
            res = abel_pole_probe(T, lam)
            assert res.classification == "first_order_pole"
            dec = eig_decompose(T)
            item = min(dec.items, key=lambda it: abs(it.eigenvalue - lam))
            assert np.linalg.norm(res.projection - item.projection, 2) <= 1e-6


class TestQuasiCompactnessWitness:
    def test_diagonal_gap(self):
        w = quasi_compactness_witness(np.diag([1.0, 0.5]), 1, 1)
        assert w is not None
        assert (w.power, w.rank) == (1, 1)
        assert w.gap == pytest.approx(0.5)

    def test_identity_has_no_witness_below_full_rank(self):
        assert quasi_compactness_witness(np.eye(5), 5, 4) is None

    def test_nilpotent_with_zero_rank_budget(self):
        T = np.diag([1.0, 1.0], k=1)  # strictly upper 3x3 shift
        w = quasi_compactness_witness(T, 3, 0)
        assert w is not None
        assert (w.power, w.rank) == (3, 0)
        assert w.gap == pytest.approx(1.0)


class TestGroupStructure:
    def test_trivial(self):
        g = group_structure(peripheral_set(1.0))
        assert g.kind == "trivial"

    def test_lcm_of_orders(self):
        g = group_structure(peripheral_set(1.0, -1.0, 1j))
        assert g.kind == "finite_cyclic"
        assert g.order == 4

    def test_cube_roots(self):
        w = np.exp(2j * np.pi / 3.0)
        g = group_structure(peripheral_set(1.0, w, np.conj(w)))
        assert (g.kind, g.order) == ("finite_cyclic", 3)

    def test_irrational_rotation_is_torus(self):
        lam = np.exp(1j * 2.0 * np.pi * math.sqrt(2.0) / 10.0)
        g = group_structure(peripheral_set(lam), k_max=10**6, tol=1e-9)
        assert g.kind == "torus_closure"
        assert g.rank == 1

    def test_empty_set_is_trivial(self):
        g = group_structure(peripheral_set())
        assert g.kind == "trivial"

    def test_rejects_off_circle_values(self):
        with pytest.raises(ValueError):
            group_structure(peripheral_set(0.5))


class TestFindReturnTimes:
    def test_half_turn(self):
        assert find_return_times([np.pi], 0.1, 100) == 2

    def test_lcm_of_two_orders(self):
        assert find_return_times([2.0 * np.pi / 3.0, np.pi], 0.1, 100) == 6

    def test_empty_tuple(self):
        assert find_return_times([], 0.5, 10) == 1

    def test_exhausted_horizon(self):
        assert find_return_times([2.0 * np.pi * math.sqrt(2)], 1e-9, 50) is None

    def test_return_time_brings_power_close_to_projection(self):
        rng = np.random.default_rng(57)
        orders = [2, 3, 4]
        phases = [np.exp(2j * np.pi / k) for k in orders]
        lams = np.concatenate([phases, [0.5, 0.3j]])
        Q = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)) + 2 * np.eye(5)
        T = Q @ np.diag(lams) @ np.linalg.inv(Q)
        sg = discrete_semigroup(T)
        dec = infinity_decomposition(sg)
        args = [float(np.angle(l)) for l in dec.peripheral.eigenvalues]
        n = find_return_times(args, 1e-8, 10**5)
        assert n == 12  # lcm(2, 3, 4)
        P = dec.P_inf
        ker_part = np.linalg.matrix_power(T @ (np.eye(5) - P), n)
        lhs = np.linalg.norm(np.linalg.matrix_power(T, n) - P, 2)
        assert lhs <= np.linalg.norm(ker_part, 2) + 1e-6


class TestPositiveConvergenceCheck:
    def test_swap_cyclic_but_not_convergent(self):
        rep = positive_convergence_check(discrete_semigroup(SWAP))
        assert rep.converges is False
        cyc = [r for r in rep.reasons if r.tag == "cyclic-peripheral-spectrum"]
        assert cyc and cyc[0].verdict == "pass"
        assert rep.divisibility_gate is False

    def test_symmetric_exchange_generator(self):
        # eigenvalues 0 and -2; limit is averaging onto the diagonal
        A = np.array([[-1.0, 1.0], [1.0, -1.0]])
        rep = positive_convergence_check(continuous_semigroup(A))
        assert rep.converges is True
        np.testing.assert_allclose(rep.limit, MEAN2, atol=1e-9)
        assert rep.limit_rank == 1

    def test_primitive_row_stochastic(self):
        # eigenvalues 1 and 1/4 by hand: trace 5/4, det 1/4
        T = np.array([[0.5, 0.5], [0.25, 0.75]])
        rep = positive_convergence_check(discrete_semigroup(T))
        assert rep.converges is True
        assert rep.limit_rank == 1

    def test_rejects_negative_entry(self):
        with pytest.raises(PositivityError):
            positive_convergence_check(
                discrete_semigroup(np.array([[0.5, -0.1], [0.2, 0.3]]))
            )

    def test_rejects_non_metzler_generator(self):
        A = np.array([[0.0, -1.0], [1.0, 0.0]])
        with pytest.raises(PositivityError):
            positive_convergence_check(continuous_semigroup(A))


class TestStrongPositivityConvergence:
    def test_primitive_matches_perron_outer_product(self):
        T = np.array([[0.5, 0.5], [0.25, 0.75]])
        rep = strong_positivity_convergence(discrete_semigroup(T))
        assert rep.converges is True
        assert rep.limit_rank == 1
        oracle = np.linalg.matrix_power(T, 1000)
        np.testing.assert_allclose(rep.limit, oracle, atol=1e-9)
        # Perron outer product: right vector (1,1), left vector (1/3, 2/3)
        outer = np.outer([1.0, 1.0], [1.0 / 3.0, 2.0 / 3.0])
        np.testing.assert_allclose(rep.limit, outer, atol=1e-9)

    def test_permutation_orbit_never_interior(self):
        rep = strong_positivity_convergence(discrete_semigroup(SWAP))
        sp = [r for r in rep.reasons if r.tag == "strong-positivity"]
        assert sp and sp[0].verdict == "indeterminate"
        assert rep.converges is False  # decomposition verdict, not forced

    def test_identity_indeterminate(self):
        rep = strong_positivity_convergence(discrete_semigroup(np.eye(2)))
        sp = [r for r in rep.reasons if r.tag == "strong-positivity"]
        assert sp and sp[0].verdict == "indeterminate"


class TestSubsemigroupConsistency:
    def test_diagonal(self):
        sg = continuous_semigroup(np.diag([-1.0, 0.0]))
        res = subsemigroup_consistency(sg, 1.0)
        assert res.coincide is True
        assert res.deviation < 1e-10
        assert res.aliasing is False

    def test_full_turn_aliases_but_ranges_agree(self):
        A = np.zeros((3, 3))
        A[0, 1], A[1, 0] = -np.pi, np.pi
        A[2, 2] = -1.0
        sg = continuous_semigroup(A)
        res = subsemigroup_consistency(sg, 2.0)
        assert res.coincide is True
        assert res.deviation < 1e-8
        assert res.aliasing is True

    def test_half_turn(self):
        A = np.array([[0.0, -np.pi], [np.pi, 0.0]])
        res = subsemigroup_consistency(continuous_semigroup(A), 1.0)
        assert res.coincide is True
        assert res.deviation < 1e-8

    def test_non_aliasing_generic_sample(self):
        A = np.zeros((4, 4))
        A[0, 1], A[1, 0] = -1.0, 1.0
        A[2, 2], A[3, 3] = -0.5, -2.0
        res = subsemigroup_consistency(continuous_semigroup(A), 0.7)
        assert res.coincide is True
        assert res.aliasing is False


class TestSqrt2Gap:
    def test_swap_distance_two(self):
        ok, dist = sqrt2_gap_check(SWAP)
        assert ok is True
        assert dist == pytest.approx(2.0, abs=1e-9)

    def test_identity(self):
        ok, dist = sqrt2_gap_check(np.eye(3))
        assert ok is True
        assert dist == pytest.approx(0.0, abs=1e-12)

    def test_three_cycle(self):
        C = np.roll(np.eye(3), 1, axis=0)
        ok, dist = sqrt2_gap_check(C)
        assert ok is True
        assert dist == pytest.approx(math.sqrt(3.0), rel=1e-9)

    def test_rejects_negative_entries(self):
        with pytest.raises(PositivityError):
            sqrt2_gap_check(-SWAP)

    def test_rejects_non_doubly_power_bounded(self):
        with pytest.raises(ValueError, match="unimodular"):
            sqrt2_gap_check(np.diag([1.0, 2.0]))
        with pytest.raises(ValueError, match="semisimple"):
            sqrt2_gap_check(np.array([[1.0, 1.0], [0.0, 1.0]]))
