"""Tests for relations, commit functions, and the extraction measurement."""

import numpy as np
import pytest

from qrolab.branching import RandomChooser, enumerate_distribution
from qrolab.config import ATOL
from qrolab.oracle import DenseOracleState, OracleConfig
from qrolab.relations import (
    EMPTY,
    CommitFunction,
    ExtractionOutcome,
    Relation,
    constant_commit,
    extraction_measurement,
    gamma_of_f,
    gamma_prime_of_f,
    identity_commit,
    measure_extraction_dense,
    outcome_array,
    projectors_for_relation,
    purified_m,
)


def random_relation(rng, n, m, p=0.4):
    pairs = [(x, y) for x in range(m) for y in range(2**n) if rng.random() < p]
    return Relation.from_pairs(n, m, pairs)


class TestExtractionOutcome:
    def test_encoding_bijective(self):
        m = 5
        outs = [ExtractionOutcome(None, m)] + [ExtractionOutcome(x, m) for x in range(m)]
        codes = [o.encoded for o in outs]
        assert sorted(codes) == list(range(m + 1))
        for o in outs:
            back = ExtractionOutcome.from_encoded(o.encoded, m)
            assert back.value == o.value

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ExtractionOutcome.from_encoded(7, 5)


class TestProjectors:
    def test_empty_relation(self):
        config = OracleConfig(1, 2)
        rel = Relation.from_pairs(1, 2, [])
        locals_, empty = projectors_for_relation(rel, config)
        for x in range(2):
            assert np.abs(locals_[x]).max() == 0.0
        assert np.allclose(empty, np.eye(config.d_dim()))
        assert rel.gamma == 0

    def test_all_zero_relation(self):
        config = OracleConfig(1, 2)
        rel = Relation(1, 2, lambda x, y: y == 0)
        locals_, _ = projectors_for_relation(rel, config)
        want = np.zeros((3, 3))
        want[0, 0] = 1.0
        for x in range(2):
            assert np.allclose(locals_[x], want)
        assert rel.gamma == 1

    def test_full_relation(self):
        config = OracleConfig(1, 2)
        rel = Relation(1, 2, lambda x, y: True)
        assert rel.gamma == 2
        _, empty = projectors_for_relation(rel, config)
        # bar Pi^x = |bot><bot| each, so Pi^empty keeps only the all-bot state
        want = np.zeros(config.d_dim())
        want[-1] = 1.0  # all-bot basis index is last in row-major order
        assert np.allclose(empty, np.diag(np.zeros(9) + (np.arange(9) == 8)))


class TestExtractionMeasurement:
    @pytest.mark.parametrize("n,m", [(1, 2), (1, 3), (2, 2), (2, 3)])
    def test_completeness_and_orthogonality(self, n, m):
        rng = np.random.default_rng(100 + n * 10 + m)
        config = OracleConfig(n, m)
        for _ in range(50):
            rel = random_relation(rng, n, m)
            sigmas = extraction_measurement(rel, config)
            total = sum(sigmas.values())
            assert np.abs(total - np.eye(config.d_dim())).max() <= ATOL
            keys = list(sigmas)
            for i, k1 in enumerate(keys):
                for k2 in keys[i + 1:]:
                    assert np.abs(sigmas[k1] @ sigmas[k2]).max() <= ATOL

    def test_initial_state_gives_empty(self):
        config = OracleConfig(1, 2)
        rel = Relation(1, 2, lambda x, y: True)
        oracle = DenseOracleState(config)
        out = measure_extraction_dense(oracle, rel, RandomChooser(0))
        assert out.is_empty

    def test_planted_value_gives_its_register(self):
        config = OracleConfig(1, 2)
        rel = Relation.from_pairs(1, 2, [(0, 1)])
        oracle = DenseOracleState(config)
        cell = np.zeros(3)
        cell[1] = 1.0
        bot = np.zeros(3)
        bot[2] = 1.0
        oracle.state.set_vector(np.kron(cell, bot))
        out = measure_extraction_dense(oracle, rel, RandomChooser(0))
        assert out.value == 0

    def test_smallest_index_wins(self):
        config = OracleConfig(1, 2)
        rel = Relation(1, 2, lambda x, y: y == 1)
        oracle = DenseOracleState(config)
        cell = np.zeros(3)
        cell[1] = 1.0
        oracle.state.set_vector(np.kron(cell, cell))
        out = measure_extraction_dense(oracle, rel, RandomChooser(0))
        assert out.value == 0

    def test_born_probabilities_match_independent_recomputation(self):
        rng = np.random.default_rng(13)
        config = OracleConfig(1, 2)
        rel = random_relation(rng, 1, 2, p=0.5)
        vec = rng.normal(size=config.d_dim()) + 1j * rng.normal(size=config.d_dim())
        vec /= np.linalg.norm(vec)
        sigmas = extraction_measurement(rel, config)

        def run(ch):
            oracle = DenseOracleState(config)
            oracle.state.set_vector(vec)
            return measure_extraction_dense(oracle, rel, ch).value

        dist = enumerate_distribution(run)
        for key, sigma in sigmas.items():
            want = float(np.real(vec.conj() @ sigma @ vec))
            got = dist.get(key if key is not EMPTY else None, 0.0)
            assert abs(got - want) <= ATOL


class TestPurifiedM:
    def test_unitary_and_fixes_fresh_state(self):
        config = OracleConfig(1, 2)
        rng = np.random.default_rng(14)
        rel = random_relation(rng, 1, 2, p=0.5)
        m_op = purified_m(rel, config)
        d = m_op.layout.dim
        assert np.abs(m_op.matrix.conj().T @ m_op.matrix - np.eye(d)).max() <= ATOL
        fresh = np.zeros(d)
        fresh[(config.d_dim() - 1) * (config.m + 1)] = 1.0  # |bot bot>|w=0>
        assert np.abs(m_op.matrix @ fresh - fresh).max() <= ATOL

    def test_two_applications_consistent_outcomes(self):
        # purified measurement applied twice with fresh P registers writes the
        # same outcome into both, by Sigma^x idempotence
        config = OracleConfig(1, 2)
        rng = np.random.default_rng(15)
        rel = random_relation(rng, 1, 2, p=0.5)
        arr = outcome_array(rel, config)
        enc = np.where(arr == config.m, 0, arr + 1)
        d_dim, p_dim = config.d_dim(), config.m + 1
        vec = rng.normal(size=d_dim) + 1j * rng.normal(size=d_dim)
        vec /= np.linalg.norm(vec)
        # joint on D x P1 x P2 after both applications
        joint = np.zeros((d_dim, p_dim, p_dim), dtype=complex)
        for d in range(d_dim):
            joint[d, enc[d], enc[d]] = vec[d]
        # every nonzero entry has P1 == P2; mass off the diagonal would mean
        # inconsistent outcomes
        off = sum(
            abs(joint[d, w1, w2]) ** 2
            for d in range(d_dim) for w1 in range(p_dim) for w2 in range(p_dim)
            if w1 != w2
        )
        assert off == 0.0
        # and the same joint is what sequential permutation application yields
        state = np.zeros((d_dim, p_dim, p_dim), dtype=complex)
        state[:, 0, 0] = vec
        for axis in (1, 2):
            rolled = np.zeros_like(state)
            for d in range(d_dim):
                rolled[d] = np.roll(state[d], enc[d], axis=axis - 1)
            state = rolled
        assert np.abs(state - joint).max() <= ATOL


class TestGammas:
    def test_identity_in_y(self):
        f = identity_commit(2, 3)
        assert (f.gamma, f.gamma_prime) == (1, 1)
        assert f.verify_gammas()

    def test_injective_table(self):
        # injective-in-(x,y) encryption-style table: Gamma = 1, Gamma' = 0
        table = [[0, 1], [2, 3], [4, 5]]
        f = CommitFunction.from_table(table)
        assert f.gamma == 1
        assert f.gamma_prime == 0

    def test_constant(self):
        f = constant_commit(2, 2)
        assert f.gamma == 4
        assert f.gamma_prime == 4
        assert f.verify_gammas()

    def test_brute_force_ops(self):
        assert gamma_of_f(lambda x, y: y, range(3), 2) == 1
        assert gamma_prime_of_f(lambda x, y: y, range(3), 2) == 1
        assert gamma_of_f(lambda x, y: 0, range(2), 2) == 4

    def test_relation_gamma_cache_matches(self):
        rng = np.random.default_rng(16)
        rel = random_relation(rng, 2, 3, p=0.3)
        want = max(
            sum(1 for y in range(4) if rel.member(x, y)) for x in range(3)
        )
        assert rel.gamma == want
