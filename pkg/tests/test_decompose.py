"""Unit tests for exact and numeric two-qubit synthesis."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcodesign import gates as G
from qcodesign import decompose as D
from qcodesign.errors import SynthesisFailure

PI4 = math.pi / 4
CNOT_M = G.gate_matrix(G.CNOT)
SWAP_M = G.gate_matrix(G.SWAP)
ISWAP_M = G.gate_matrix(G.ISWAP)
SQISWAP_M = G.gate_matrix(G.SQISWAP)
CZ_M = np.diag([1, 1, 1, -1]).astype(complex)
LOCAL_M = np.kron(G.gate_matrix(G.H), G.gate_matrix(G.S))


def check_result(res, u, floor=1 - 1e-9):
    assert len(res.locals) == res.count + 1
    assert res.decomp_fidelity >= floor
    assert G.phase_distance(D.reconstruct(res), u) < 1e-4 or \
        G.hilbert_schmidt_fidelity(D.reconstruct(res), u) >= floor


class TestCountRules:
    def test_cnot_count(self):
        assert D.cnot_count((0, 0, 0)) == 0
        assert D.cnot_count((PI4, 0, 0)) == 1
        assert D.cnot_count((0.3, 0.1, 0)) == 2
        assert D.cnot_count((0.3, 0.1, 0.05)) == 3
        assert D.cnot_count((PI4, PI4, PI4)) == 3

    def test_sqiswap_count(self):
        assert D.sqiswap_count((0, 0, 0)) == 0
        assert D.sqiswap_count((math.pi / 8, math.pi / 8, 0)) == 1
        # CNOT's class satisfies x >= y + |z|.
        assert D.sqiswap_count((PI4, 0, 0)) == 2
        assert D.sqiswap_count((0.5, 0.3, 0.1)) == 2
        assert D.sqiswap_count((0.5, 0.45, 0.1)) == 3
        assert D.sqiswap_count((PI4, PI4, PI4)) == 3

    def test_atol_boundary(self):
        eps = 1e-12
        assert D.cnot_count((PI4, eps, 0)) == 1
        assert D.sqiswap_count((0.4, 0.3, 0.1 + eps)) == 2


class TestCnotSynthesis:
    @pytest.mark.parametrize(
        "name,u,want",
        [("cnot", CNOT_M, 1), ("cz", CZ_M, 1), ("swap", SWAP_M, 3),
         ("iswap", ISWAP_M, 2), ("local", LOCAL_M, 0),
         ("sqiswap", SQISWAP_M, 2)],
    )
    def test_fixed_gates(self, name, u, want):
        res = D.decompose_exact(u, G.CNOT)
        assert res.count == want
        assert res.exact
        check_result(res, u)
        # The analytic path is exact including global phase.
        assert np.max(np.abs(D.reconstruct(res) - u)) < 1e-8

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=10 ** 9))
    def test_haar(self, seed):
        u = G.haar_random_2q(seed)
        res = D.decompose_exact(u, G.CNOT)
        assert res.count <= 3
        check_result(res, u)

    def test_canonical_templates_exact(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            x = rng.uniform(0.05, PI4 - 0.05)
            y = rng.uniform(0.0, x)
            z = rng.uniform(-y, y)
            for k, co in ((2, (x, y, 0.0)), (3, (x, y, z))):
                locals_ = D._canon_cnot_template(*co, k)
                m = np.kron(*locals_[0])
                for pair in locals_[1:]:
                    m = np.kron(*pair) @ CNOT_M @ m
                assert np.max(np.abs(m - G.canonical_matrix(*co))) < 1e-10


class TestSqiswapSynthesis:
    @pytest.mark.parametrize(
        "name,u,want",
        [("cnot", CNOT_M, 2), ("swap", SWAP_M, 3), ("sqiswap", SQISWAP_M, 1),
         ("local", LOCAL_M, 0)],
    )
    def test_fixed_gates(self, name, u, want):
        res = D.decompose_exact(u, G.SQISWAP)
        assert res.count == want
        assert res.exact
        check_result(res, u)

    def test_haar_counts(self):
        for seed in range(15):
            u = G.haar_random_2q(seed)
            res = D.decompose_exact(u, G.SQISWAP)
            assert res.count in (2, 3)
            check_result(res, u)
            assert res.count == D.sqiswap_count(G.weyl_coordinates(u))

    def test_unsupported_basis(self):
        with pytest.raises(SynthesisFailure):
            D.decompose_exact(CNOT_M, G.fsim(0.3, 0.4))


class TestSycSynthesis:
    def test_syc_itself(self):
        res = D.decompose_syc(G.gate_matrix(G.SYC))
        assert res.count == 1
        check_result(res, G.gate_matrix(G.SYC), floor=1 - 1e-8)

    def test_haar(self):
        for seed in range(6):
            u = G.haar_random_2q(seed)
            res = D.decompose_syc(u)
            assert res.count <= 4
            check_result(res, u, floor=1 - 1e-8)

    def test_local(self):
        res = D.decompose_syc(LOCAL_M)
        assert res.count == 0


class TestSwapCache:
    def test_counts_and_cache(self):
        for basis in (G.CNOT, G.SQISWAP):
            r = D.swap_decomposition(basis)
            assert r.count == 3
            assert r.decomp_fidelity >= 1 - 1e-9
        assert D.swap_decomposition(G.CNOT) is D.swap_decomposition(G.CNOT)


class TestNumericTemplate:
    def test_exact_when_reachable(self):
        cfg = D.OptimizerConfig()
        res = D.numeric_template_decompose(CNOT_M, G.SQISWAP, 2, cfg)
        assert res.exact
        assert res.decomp_fidelity >= 1 - 1e-9
        assert G.phase_distance(D.reconstruct(res), CNOT_M) < 1e-3

    def test_inexact_below_threshold(self):
        cfg = D.OptimizerConfig()
        res = D.numeric_template_decompose(CNOT_M, G.SQISWAP, 1, cfg)
        assert not res.exact
        assert 0.5 < res.decomp_fidelity < 1 - 1e-6

    def test_deterministic(self):
        cfg = D.OptimizerConfig(seed=42)
        u = G.haar_random_2q(5)
        a = D.numeric_template_decompose(u, G.SQISWAP, 2, cfg)
        b = D.numeric_template_decompose(u, G.SQISWAP, 2, cfg)
        assert a.decomp_fidelity == b.decomp_fidelity
        for (p, q), (r, s) in zip(a.locals, b.locals):
            assert np.array_equal(p, r) and np.array_equal(q, s)

    def test_locals_shape(self):
        cfg = D.OptimizerConfig(restarts=2)
        res = D.numeric_template_decompose(G.haar_random_2q(8), G.CNOT, 3, cfg)
        assert len(res.locals) == 4

    def test_rejects_negative_depth(self):
        with pytest.raises(ValueError):
            D.numeric_template_decompose(CNOT_M, G.CNOT, -1)


class TestFidelityModel:
    def test_worked_example(self):
        assert D.gate_fidelity(0.90, 2) == 0.95

    def test_limits(self):
        assert D.gate_fidelity(0.99, 1) == 0.99
        assert abs(D.gate_fidelity(0.99, 4) - 0.9975) < 1e-15
        with pytest.raises(ValueError):
            D.gate_fidelity(0.99, 0)

    def test_total(self):
        assert D.total_fidelity(1.0, 0.995, 3) == 0.995 ** 3
        assert D.total_fidelity(0.9, 1.0, 5) == 0.9


class TestBestRoot:
    def test_identity_prefers_zero_count(self):
        res = D.best_root_choice(np.eye(4, dtype=complex), 0.99, [2, 3],
                                 k_max=3)
        assert res.choice.count == 0
        assert res.choice.total_fidelity == 1.0

    def test_sqiswap_native(self):
        cfg = D.OptimizerConfig(restarts=4)
        res = D.best_root_choice(SQISWAP_M, 0.99, [2, 4], k_max=4, cfg=cfg)
        assert set(res.per_root) == {2, 4}
        two = res.per_root[2]
        assert (two.count, two.exact) == (1, True)
        assert abs(two.total_fidelity - 0.995) < 1e-9
        # Two quarter-roots also hit it exactly and win at second order:
        # (1 - e/4)^2 > 1 - e/2.
        four = res.per_root[4]
        assert (four.count, four.exact) == (2, True)
        assert res.choice.root == 4
        assert abs(res.choice.total_fidelity - 0.9975 ** 2) < 1e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            D.best_root_choice(SQISWAP_M, 0.99, [], k_max=3)
        with pytest.raises(ValueError):
            D.best_root_choice(SQISWAP_M, 0.99, [9], k_max=3)
        with pytest.raises(ValueError):
            D.best_root_choice(SQISWAP_M, 0.99, [2], k_max=0)
