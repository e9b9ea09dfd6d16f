"""Exhaustive verification of the extractable-simulator interface properties.

One function per property of the simulator theorem (perfect RO-simulation,
commutation and almost-commutation of interfaces, idempotence, and the two
classical consistency probabilities), each returning a BoundReport.  The
suite runner sweeps the standard grid n in {1,2}, m in {2,3} with the three
bundled commit functions.
"""

from __future__ import annotations

import time

import numpy as np

from .bounds import BoundReport, timed
from .branching import enumerate_paths
from .linalg import apply_on_axes, density_from_branches, operator_norm, \
    pure_trace_distance, trace_distance
from .oracle import OracleConfig, build_o_small
from .relations import CommitFunction, constant_commit, identity_commit, \
    outcome_array
from .simulator import SimulatorS


def toy_encryption_commit(n: int, m: int) -> CommitFunction:
    """Injective table t = x * 2^n + y: encryption-like, Gamma=1, Gamma'=0."""
    big_n = 2**n
    return CommitFunction(
        n, m, lambda x, y: x * big_n + y, t_values=range(m * big_n),
        gamma=1, gamma_prime=0,
        preimage_fn=lambda x, t: (t - x * big_n,) if 0 <= t - x * big_n < big_n else (),
        name="toy-enc",
    )


def bundled_commits(n: int, m: int) -> list[CommitFunction]:
    return [identity_commit(n, m), toy_encryption_commit(n, m), constant_commit(n, m)]


# small preparation programs: classical-query sequences applied before a test
PREPS = ((), (0,), (1,), (0, 1), (0, 0))


def _preps_for(m: int):
    return tuple(tuple(x for x in prep if x < m) for prep in PREPS)


# -- property 1: perfect RO-simulation ------------------------------------------------


def property_1_report(n: int, m: int, suite=None) -> BoundReport:
    from .circuits import equivalence_suite, indistinguishability_gap

    if suite is None:
        suite = [c for c in equivalence_suite() if c["n"] == n and c["m"] == m]
    start = time.perf_counter()
    gap = max(indistinguishability_gap(c) for c in suite)
    ms = (time.perf_counter() - start) * 1000.0
    return BoundReport(
        "theorem2-1-ro-indistinguishable",
        dict(n=n, M=m, circuits=len(suite)), gap, 0.0, ms,
    )


# -- property 2.a: independent RO queries commute -------------------------------------


def independent_ro_commutation(n: int, m: int) -> float:
    """max over (x, x') of ||[O^x_{Y D_x}, O^{x'}_{Y' D_{x'}}]||."""
    big_n, cd = 2**n, 2**n + 1
    o_small = build_o_small(n)
    # same register: both act on D_x
    dims = [big_n, big_n, cd]
    dim = int(np.prod(dims))
    eye = np.eye(dim, dtype=complex).reshape(dims + [dim])
    o1 = apply_on_axes(o_small, eye, [0, 2]).reshape(dim, dim)
    o2 = apply_on_axes(o_small, eye, [1, 2]).reshape(dim, dim)
    same = operator_norm(o1 @ o2 - o2 @ o1)
    # disjoint registers
    dims = [big_n, big_n, cd, cd]
    dim = int(np.prod(dims))
    eye = np.eye(dim, dtype=complex).reshape(dims + [dim])
    o1 = apply_on_axes(o_small, eye, [0, 2]).reshape(dim, dim)
    o2 = apply_on_axes(o_small, eye, [1, 3]).reshape(dim, dim)
    disjoint = operator_norm(o1 @ o2 - o2 @ o1)
    return max(same, disjoint)


def property_2a_report(n: int, m: int) -> BoundReport:
    (val, ms) = timed(lambda: independent_ro_commutation(n, m))
    rep = BoundReport("theorem2-2a-ro-commute", dict(n=n, M=m), val, 0.0, ms)
    return rep


# -- property 2.b: independent extraction queries commute ------------------------------


def independent_e_commutation(f: CommitFunction) -> float:
    """max over (t, t') of ||[M^t_{DP}, M^{t'}_{DP'}]|| via permutation composition.

    Both purified measurements are permutations of the joint basis
    (d, w1, w2); the commutator vanishes iff the two composed lookups agree
    pointwise.  On disagreement the dense norm is computed outright.
    """
    config = OracleConfig(f.n, f.m)
    d_dim, p = config.d_dim(), config.m + 1
    encs = {}
    for t in f.t_values:
        arr = outcome_array(f.relation_for(t), config)
        encs[t] = np.where(arr == config.m, 0, arr + 1)
    dim = d_dim * p * p
    idx = np.arange(dim)
    w2 = idx % p
    w1 = (idx // p) % p
    d = idx // (p * p)
    worst = 0.0
    for t in f.t_values:
        for tp in f.t_values:
            perm1 = (d * p + (w1 + encs[t][d]) % p) * p + w2
            perm2 = (d * p + w1) * p + (w2 + encs[tp][d]) % p
            comp_a = perm2[perm1]
            comp_b = perm1[perm2]
            if not np.array_equal(comp_a, comp_b):
                mat_a = np.zeros((dim, dim))
                mat_b = np.zeros((dim, dim))
                mat_a[comp_a, idx] = 1.0
                mat_b[comp_b, idx] = 1.0
                worst = max(worst, operator_norm(mat_a - mat_b))
    return worst


def property_2b_report(f: CommitFunction) -> BoundReport:
    (val, ms) = timed(lambda: independent_e_commutation(f))
    return BoundReport(
        "theorem2-2b-e-commute", dict(n=f.n, M=f.m, f=f.name), val, 0.0, ms,
    )


# -- property 2.c: RO and E queries almost commute -------------------------------------


def _prep_branches(f: CommitFunction, prep):
    """Enumerate (prob, dense D vector) after a classical-query preparation."""
    vecs = []

    def run(ch):
        sim = SimulatorS(f, backend="dense", chooser=ch)
        for x in prep:
            sim.ro_classical(x)
        vecs.append(sim.backend.d_vector())
        return len(vecs) - 1

    return [(p, vecs[i]) for p, i in enumerate_paths(run)]


def _xy_states(config: OracleConfig, seed: int = 31):
    rng = np.random.default_rng(seed)
    dim = config.m * config.big_n
    uniform = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    basis = np.zeros(dim, dtype=complex)
    basis[0] = 1.0
    rand = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    rand /= np.linalg.norm(rand)
    return [uniform, basis, rand]


def _apply_o_full(config: OracleConfig, tensor: np.ndarray) -> np.ndarray:
    """O_XYD on a tensor with axes (X, Y, D_0..D_{m-1}, P)."""
    o_small = build_o_small(config.n)
    out = np.empty_like(tensor)
    for x in range(config.m):
        out[x] = apply_on_axes(o_small, tensor[x], [0, 1 + x])
    return out


def _m_dest(config: OracleConfig, enc: np.ndarray) -> np.ndarray:
    p_dim = config.m + 1
    d_idx = np.repeat(np.arange(config.d_dim()), p_dim)
    w = np.tile(np.arange(p_dim), config.d_dim())
    return d_idx * p_dim + (w + enc[d_idx]) % p_dim


def _apply_m_full(config: OracleConfig, dest: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    """M_DP on the same tensor layout (P is the last axis)."""
    shape = tensor.shape
    flat = tensor.reshape(config.m * config.big_n, -1)
    out = np.empty_like(flat)
    out[:, dest] = flat
    return out.reshape(shape)


def roe_almost_commutation(f: CommitFunction) -> float:
    """max trace distance between the two orders of one S.E and one S.RO query."""
    config = OracleConfig(f.n, f.m)
    worst = 0.0
    xy_states = _xy_states(config)
    dests = {}
    for t in f.t_values:
        arr = outcome_array(f.relation_for(t), config)
        dests[t] = _m_dest(config, np.where(arr == config.m, 0, arr + 1))
    for prep in _preps_for(f.m):
        for p, d_vec in _prep_branches(f, prep):
            if p <= 1e-12:
                continue
            for t in f.t_values:
                for xy in xy_states:
                    joint = np.multiply.outer(
                        xy.reshape(config.m, config.big_n),
                        np.multiply.outer(
                            d_vec.reshape([config.cell_dim] * config.m),
                            _p_zero(config),
                        ),
                    )
                    a = _apply_m_full(config, dests[t], _apply_o_full(config, joint))
                    b = _apply_o_full(config, _apply_m_full(config, dests[t], joint))
                    worst = max(worst, pure_trace_distance(a.reshape(-1), b.reshape(-1)))
    return worst


def _p_zero(config: OracleConfig) -> np.ndarray:
    p = np.zeros(config.m + 1, dtype=complex)
    p[0] = 1.0
    return p


def property_2c_report(f: CommitFunction) -> BoundReport:
    (val, ms) = timed(lambda: roe_almost_commutation(f))
    bound = 8.0 * np.sqrt(2.0 * f.gamma / 2.0**f.n)
    return BoundReport(
        "theorem2-2c-roe-almost-commute",
        dict(n=f.n, M=f.m, f=f.name, gamma=f.gamma), val, bound, ms,
    )


# -- properties 3.a / 3.b: idempotence ---------------------------------------------------


def _density_after(f: CommitFunction, prep, steps) -> np.ndarray:
    """Density operator on D after prep + the given interface calls."""
    branches = []

    def run(ch):
        sim = SimulatorS(f, backend="dense", chooser=ch)
        for x in prep:
            sim.ro_classical(x)
        for kind, arg in steps:
            if kind == "ro":
                sim.ro_classical(arg)
            else:
                sim.e_query(arg)
        branches.append(sim.backend.d_vector())
        return len(branches) - 1

    paths = enumerate_paths(run)
    return density_from_branches((p, branches[i]) for p, i in paths)


def ro_idempotence(f: CommitFunction) -> float:
    worst = 0.0
    for prep in _preps_for(f.m):
        for x in range(f.m):
            rho1 = _density_after(f, prep, [("ro", x)])
            rho2 = _density_after(f, prep, [("ro", x), ("ro", x)])
            worst = max(worst, trace_distance(rho1, rho2))
    return worst


def e_idempotence(f: CommitFunction) -> tuple[float, float]:
    """(max trace distance, max repeat-outcome disagreement probability)."""
    worst_td = 0.0
    worst_outcome = 0.0
    for prep in _preps_for(f.m):
        for t in f.t_values:
            rho1 = _density_after(f, prep, [("e", t)])
            rho2 = _density_after(f, prep, [("e", t), ("e", t)])
            worst_td = max(worst_td, trace_distance(rho1, rho2))

            def run(ch):
                sim = SimulatorS(f, backend="dense", chooser=ch)
                for x in prep:
                    sim.ro_classical(x)
                a = sim.e_query(t)
                b = sim.e_query(t)
                return a.value != b.value

            disagree = sum(p for p, bad in enumerate_paths(run) if bad)
            worst_outcome = max(worst_outcome, disagree)
    return worst_td, worst_outcome


def property_3a_report(f: CommitFunction) -> BoundReport:
    (val, ms) = timed(lambda: ro_idempotence(f))
    return BoundReport("theorem2-3a-ro-idempotent",
                       dict(n=f.n, M=f.m, f=f.name), val, 0.0, ms)


def property_3b_report(f: CommitFunction) -> BoundReport:
    ((td, outcome), ms) = timed(lambda: e_idempotence(f))
    return BoundReport("theorem2-3b-e-idempotent",
                       dict(n=f.n, M=f.m, f=f.name, outcome_disagreement=outcome),
                       max(td, outcome), 0.0, ms)


# -- properties 4.a / 4.b: classical consistency -----------------------------------------


def prop_4a_worst(f: CommitFunction) -> float:
    """max over preps and t of Pr[f(x_hat, h_hat) != t and x_hat != empty]."""
    worst = 0.0
    for prep in _preps_for(f.m):
        for t in f.t_values:

            def run(ch):
                sim = SimulatorS(f, backend="dense", chooser=ch)
                for x in prep:
                    sim.ro_classical(x)
                x_hat = sim.e_query(t)
                if x_hat.is_empty:
                    return False
                h_hat = sim.ro_classical(x_hat.value)
                return f(x_hat.value, h_hat) != t

            bad = sum(p for p, hit in enumerate_paths(run) if hit)
            worst = max(worst, bad)
    return worst


def prop_4b_worst(f: CommitFunction) -> float:
    """max over preps (no prior extraction) and x of Pr[S.E(f(x, h)) = empty]."""
    worst = 0.0
    for prep in _preps_for(f.m):
        for x in range(f.m):

            def run(ch):
                sim = SimulatorS(f, backend="dense", chooser=ch)
                for xx in prep:
                    sim.ro_classical(xx)
                h = sim.ro_classical(x)
                return sim.e_query(f(x, h)).is_empty

            bad = sum(p for p, hit in enumerate_paths(run) if hit)
            worst = max(worst, bad)
    return worst


def property_4a_report(f: CommitFunction) -> BoundReport:
    (val, ms) = timed(lambda: prop_4a_worst(f))
    bound = 2.0 * f.gamma / 2.0**f.n
    return BoundReport("theorem2-4a-extract-then-ro",
                       dict(n=f.n, M=f.m, f=f.name, gamma=f.gamma), val, bound, ms)


def property_4b_report(f: CommitFunction) -> BoundReport:
    (val, ms) = timed(lambda: prop_4b_worst(f))
    return BoundReport("theorem2-4b-ro-then-extract",
                       dict(n=f.n, M=f.m, f=f.name), val, 2.0 / 2.0**f.n, ms)


# -- the suite -----------------------------------------------------------------------------


def theorem2_property_suite(ns=(1, 2), ms=(2, 3), suite=None) -> list[BoundReport]:
    """One report per property per grid point (property 1/2.a per oracle shape)."""
    reports: list[BoundReport] = []
    for n in ns:
        for m in ms:
            reports.append(property_1_report(n, m, suite=suite))
            reports.append(property_2a_report(n, m))
            for f in bundled_commits(n, m):
                reports.append(property_2b_report(f))
                reports.append(property_2c_report(f))
                reports.append(property_3a_report(f))
                reports.append(property_3b_report(f))
                reports.append(property_4a_report(f))
                reports.append(property_4b_report(f))
    return reports
