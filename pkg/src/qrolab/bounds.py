"""The verification harness: every commutator/query bound computed exactly.

The purified measurement M_DP is a basis permutation, and O_XYD is block
diagonal over X with Hermitian involution blocks O^x on (Y, D_x).  Norms of
commutators are therefore computed per x on Y (x) D (x) P, densely below the
SVD cutoff and matrix-free (Lanczos on K^dag K) above it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .branching import enumerate_paths
from .config import ATOL, DENSE_SVD_CUTOFF
from .linalg import apply_on_axes, operator_norm, spectral_norm_linop
from .oracle import OracleConfig, build_f, build_o_small
from .relations import CommitFunction, Relation, outcome_array, projectors_for_relation


@dataclass
class BoundReport:
    experiment: str
    params: dict
    measured: float
    bound: float
    runtime_ms: float = 0.0
    note: str = ""

    @property
    def satisfied(self) -> bool:
        return self.measured <= self.bound + ATOL

    @property
    def vacuous(self) -> bool:
        """A probability bound at or above 1 cannot constrain anything."""
        return self.experiment.startswith(("grover", "collision", "interface",
                                           "early")) and self.bound >= 1.0

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": {k: _jsonable(v) for k, v in sorted(self.params.items())},
            "measured": float(self.measured),
            "bound": float(self.bound),
            "satisfied": bool(self.satisfied),
            "vacuous": bool(self.vacuous),
            "note": self.note,
        }


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, (time.perf_counter() - start) * 1000.0


# -- commutator norms ---------------------------------------------------------------


class OxMCommutator:
    """[O^x_{Y D_x}, M_DP] on the space Y (x) D (x) P, applied matrix-free."""

    def __init__(self, rel: Relation, config: OracleConfig, x: int):
        self.config = config
        self.x = x
        self.o_small = build_o_small(config.n)
        arr = outcome_array(rel, config)
        enc = np.where(arr == config.m, 0, arr + 1)
        p_dim = config.m + 1
        d_idx = np.repeat(np.arange(config.d_dim()), p_dim)
        w = np.tile(np.arange(p_dim), config.d_dim())
        self.dest = d_idx * p_dim + (w + np.repeat(enc, p_dim)) % p_dim
        self.inv = np.argsort(self.dest)
        self.dims = [config.big_n] + [config.cell_dim] * config.m + [p_dim]
        self.dim = int(np.prod(self.dims))

    def _apply_o(self, flat: np.ndarray) -> np.ndarray:
        t = flat.reshape(self.dims)
        return apply_on_axes(self.o_small, t, [0, 1 + self.x]).reshape(-1)

    def _apply_m(self, flat: np.ndarray) -> np.ndarray:
        rows = flat.reshape(self.config.big_n, -1)
        out = np.empty_like(rows)
        out[:, self.dest] = rows
        return out.reshape(-1)

    def _apply_m_dag(self, flat: np.ndarray) -> np.ndarray:
        rows = flat.reshape(self.config.big_n, -1)
        return rows[:, self.dest].reshape(-1)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self._apply_o(self._apply_m(v)) - self._apply_m(self._apply_o(v))

    def apply_adj(self, v: np.ndarray) -> np.ndarray:
        # K^dag = M^dag O - O M^dag since O^x is Hermitian
        return self._apply_m_dag(self._apply_o(v)) - self._apply_o(self._apply_m_dag(v))

    def norm(self) -> float:
        if self.dim <= DENSE_SVD_CUTOFF:
            eye = np.eye(self.dim, dtype=complex)
            cols = np.stack([self.apply(eye[:, j]) for j in range(self.dim)], axis=1)
            return float(np.linalg.svd(cols, compute_uv=False)[0])
        return spectral_norm_linop(self.apply, self.apply_adj, self.dim)


def theorem_commutator_norm(rel: Relation, config: OracleConfig) -> float:
    """||[O_XYD, M_DP]|| = max_x ||[O^x, M_DP]|| (block diagonal over X)."""
    return max(OxMCommutator(rel, config, x).norm() for x in range(config.m))


def full_commutator_norm_direct(rel: Relation, config: OracleConfig) -> float:
    """Direct dense [O_XYD, M_DP] on X (x) Y (x) D (x) P; tiny configs only."""
    from .oracle import build_query_unitary
    from .relations import purified_m

    o = build_query_unitary(config).matrix
    m_perm = purified_m(rel, config).matrix
    p_dim = config.m + 1
    o_full = np.kron(o, np.eye(p_dim))
    m_full = np.kron(np.eye(config.m * config.big_n), m_perm)
    return operator_norm(o_full @ m_full - m_full @ o_full)


def local_bound(n: int, gamma_x: int) -> float:
    return 2.0 ** (-n / 2) * np.sqrt(2 * gamma_x)


def theorem_bound(n: int, gamma: int) -> float:
    return 8.0 * 2.0 ** (-n / 2) * np.sqrt(2 * gamma)


def verify_local_bounds(n: int, rel: Relation) -> list[BoundReport]:
    """Lemma-level bounds: [F, Pi^x], [O^x, Pi^x], [O^x, Pi^empty] per x."""
    config = OracleConfig(n, rel.m)
    f = build_f(n)
    o_small = build_o_small(n)
    locals_, empty = projectors_for_relation(rel, config)
    reports = []
    for x in range(rel.m):
        gx = rel.gamma_x(x)
        base = dict(n=n, M=rel.m, x=x, gamma=gx)
        start = time.perf_counter()
        pi = locals_[x]
        m1 = operator_norm(f @ pi - pi @ f)
        pi_y = np.kron(np.eye(config.big_n), pi)
        m2 = operator_norm(o_small @ pi_y - pi_y @ o_small)
        # O^x acts on (Y, D_x) inside Y (x) D
        dims = [config.big_n] + [config.cell_dim] * rel.m
        dim = int(np.prod(dims))
        eye = np.eye(dim, dtype=complex)
        o_emb = apply_on_axes(
            o_small, eye.reshape(dims + [dim]), [0, 1 + x]
        ).reshape(dim, dim)
        p_emb = np.kron(np.eye(config.big_n), empty)
        m3 = operator_norm(o_emb @ p_emb - p_emb @ o_emb)
        ms = (time.perf_counter() - start) * 1000.0
        reports.append(BoundReport("local-F-Pi", base, m1, local_bound(n, gx), ms / 3))
        reports.append(BoundReport("local-O-Pi", base, m2, 2 * local_bound(n, gx), ms / 3))
        reports.append(BoundReport("local-O-PiEmpty", base, m3, 2 * local_bound(n, gx), ms / 3))
    return reports


def verify_commutator_bound(n: int, m: int, rel: Relation) -> BoundReport:
    """Main theorem: ||[O_XYD, M_DP]|| <= 8 2^{-n/2} sqrt(2 Gamma_R)."""
    config = OracleConfig(n, m)
    (measured, ms) = timed(lambda: theorem_commutator_norm(rel, config))
    return BoundReport(
        "commutator-theorem", dict(n=n, M=m, gamma=rel.gamma),
        measured, theorem_bound(n, rel.gamma), ms,
    )


def verify_lifting_inequality(n: int, m: int, rel: Relation) -> list[BoundReport]:
    """Per-x: ||[O^x, M_DP]|| <= 3 ||[O^x, Pi^x]|| + ||[O^x, Pi^empty]||."""
    config = OracleConfig(n, m)
    locals_reports = verify_local_bounds(n, rel)
    by_x: dict[int, dict[str, float]] = {}
    for rep in locals_reports:
        by_x.setdefault(rep.params["x"], {})[rep.experiment] = rep.measured
    out = []
    for x in range(m):
        (lhs, ms) = timed(lambda: OxMCommutator(rel, config, x).norm())
        rhs = 3 * by_x[x]["local-O-Pi"] + by_x[x]["local-O-PiEmpty"]
        out.append(BoundReport(
            "lifting-inequality", dict(n=n, M=m, x=x, gamma=rel.gamma_x(x)),
            lhs, rhs, ms,
        ))
    return out


def relation_chain_monotonicity(n: int, m: int, chain: list[Relation]) -> BoundReport:
    """Empirical probe: is the commutator norm monotone under enlargement?

    Flagged in the note, never asserted: monotonicity is not a theorem.
    """
    config = OracleConfig(n, m)
    values = [theorem_commutator_norm(rel, config) for rel in chain]
    monotone = all(values[i] <= values[i + 1] + ATOL for i in range(len(values) - 1))
    return BoundReport(
        "monotonicity-probe", dict(n=n, M=m, values=[float(v) for v in values]),
        0.0, 0.0, 0.0,
        note="monotone" if monotone else "NOT monotone (informational only)",
    )


# -- query experiments ---------------------------------------------------------------


def grover_experiment(circ: dict, rel: Relation, backend: str = "sparse") -> BoundReport:
    """Exact Pr[(x, RO(x)) in R] for a circuit that outputs register X."""
    from .circuits import circuit_registers, gate_matrix, validate_circuit
    from .oracle import DenseOracleState
    from .sparse import SparseState

    validate_circuit(circ)
    config = OracleConfig(circ["n"], circ["m"])
    q = sum(1 for s in circ["steps"] if s["op"] == "query")
    regs = circuit_registers(circ)
    dims_of = dict(regs)

    def run(ch):
        if backend == "sparse":
            sp = SparseState(config.n, config.m, q_cap=q + 2, prefix=regs)
            apply = lambda mat, ts: sp.apply_prefix_unitary(ts[0], mat)
            query = lambda: sp.quantum_query("X", "Y")
            measure_x = lambda: sp.measure_prefix("X", ch)
            query_probs = sp.classical_query_probs
        else:
            oracle = DenseOracleState(config)
            for lab, d in regs:
                oracle.extend(lab, d)
            apply = lambda mat, ts: oracle.state.apply(mat, ts)
            query = lambda: oracle.quantum_query("X", "Y")
            measure_x = lambda: oracle.state.measure(["X"], ch)[0]
            query_probs = oracle.classical_query_probs
        for step in circ["steps"]:
            if step["op"] == "unitary":
                ts = step["targets"]
                apply(gate_matrix(step, [dims_of[t] for t in ts]), ts)
            elif step["op"] == "query":
                query()
            else:
                raise ValueError("grover circuits must defer measurement to the end")
        x = measure_x()
        # exact hit probability of the final classical RO(x) check, without
        # branching over responses
        probs = query_probs(x)
        return float(sum(probs[y] for y in rel.y_set(x)))

    start = time.perf_counter()
    success = sum(p * hit_prob for p, hit_prob in enumerate_paths(run))
    ms = (time.perf_counter() - start) * 1000.0
    bound = 152.0 * (q + 1) ** 2 * rel.gamma / 2.0**config.n
    return BoundReport(
        "grover", dict(n=config.n, M=config.m, q=q, gamma=rel.gamma,
                       circuit=circ.get("name", "?")),
        float(success), bound, ms,
    )


def collision_mass(sim_state, f: CommitFunction) -> float:
    """tr(Pi^col rho) on a dense oracle state: mass on cross-register collisions."""
    config = sim_state.config
    cd = config.cell_dim
    arr_mask = np.zeros(config.d_dim(), dtype=bool)
    for idx in range(config.d_dim()):
        rem = idx
        cells = []
        for x in reversed(range(config.m)):
            rem, c = divmod(rem, cd)
            if c != config.bot:
                cells.append((x, c))
        seen = {}
        for x, c in cells:
            t = f(x, c)
            if t in seen and seen[t] != x:
                arr_mask[idx] = True
                break
            seen[t] = x
    state = sim_state.state
    from .oracle import d_label

    d_labels = [d_label(x) for x in range(config.m)]
    axes = [state.axis(lab) for lab in d_labels]
    rest = [a for a in range(state.tensor.ndim) if a not in axes]
    moved = np.transpose(state.tensor, axes + rest).reshape(config.d_dim(), -1)
    mass = np.sum(np.abs(moved) ** 2, axis=1)
    return float(mass[arr_mask].sum())


def collision_experiment(adversary, f: CommitFunction, q: int) -> BoundReport:
    """Cross-register collision mass of the final database vs the cubic bound."""
    from .oracle import DenseOracleState

    config = OracleConfig(f.n, f.m)

    def run(ch):
        oracle = DenseOracleState(config)
        queries = 0

        def ro(x):
            nonlocal queries
            queries += 1
            return oracle.classical_query(x, ch)

        adversary(ro)
        if queries > q:
            raise ValueError(f"adversary exceeded query budget: {queries} > {q}")
        return collision_mass(oracle, f)

    start = time.perf_counter()
    mass = sum(p * v for p, v in enumerate_paths(run))
    ms = (time.perf_counter() - start) * 1000.0
    bound = 40.0 * np.e**2 * q**2 * (q + 1) * f.gamma_prime / 2.0**f.n
    return BoundReport(
        "collision", dict(n=f.n, M=f.m, q=q, gamma_prime=f.gamma_prime, f=f.name),
        float(mass), float(bound), ms,
    )


class RoOnly:
    """Restricted simulator facade handed to soundness-experiment adversaries."""

    def __init__(self, sim):
        self._sim = sim
        self.queries = 0

    def ro(self, x: int) -> int:
        self.queries += 1
        return self._sim.ro_classical(x)

    def e_query(self, *_a, **_k):
        raise PermissionError("the proposition forbids extraction queries here")


def interface_soundness_experiment(mode: str, adversary, f: CommitFunction,
                                   r_prime=None, ell: int = 1,
                                   in_run_ro: bool = False) -> BoundReport:
    """Hard-property / hard-collision propositions, exactly enumerated.

    hard-property: adversary (S.RO only) emits t in T^ell; success if some
    extraction (x_i, t_i) lands in R'.  hard-collision: adversary emits t, x
    vectors; h_i from S.RO(x_i), hat
    x_i from S.E(t_i); success if some i has hat x_i != x_i yet f(x_i,h_i)=t_i.
    """
    from .simulator import SimulatorS

    if mode not in ("hard-property", "hard-collision"):
        raise ValueError(f"unknown mode {mode!r}")

    def run(ch):
        sim = SimulatorS(f, backend="dense", chooser=ch)
        facade = RoOnly(sim)
        out = adversary(facade)
        q = facade.queries
        if mode == "hard-property":
            ts = out if isinstance(out, (list, tuple)) else [out]
            hits = []
            for t in ts:
                x_hat = sim.e_query(t)
                hits.append((x_hat.value, t))
            success = any(
                x is not None and r_prime(x, t) for x, t in hits
            )
            return (q, len(ts), success)
        ts, xs = out
        hs = [sim.ro_classical(x) for x in xs]
        xh = [sim.e_query(t).value for t in ts]
        success = any(
            xh[i] != xs[i] and f(xs[i], hs[i]) == ts[i] for i in range(len(ts))
        )
        return (q, len(ts), success)

    start = time.perf_counter()
    paths = enumerate_paths(run)
    ms = (time.perf_counter() - start) * 1000.0
    success = sum(p for p, (_, _, hit) in paths if hit)
    q = max(qq for _, (qq, _, _) in paths)
    ell_seen = max(l for _, (_, l, _) in paths)
    if mode == "hard-property":
        rel = Relation(f.n, f.m, lambda x, y: bool(r_prime(x, f(x, y))))
        bound = 128.0 * q**2 * rel.gamma / 2.0**f.n
        params = dict(n=f.n, M=f.m, q=q, ell=ell_seen, gamma=rel.gamma, f=f.name)
    else:
        # in-run RO queries drop the ell term (remark after the proposition)
        eff = q + 1 if in_run_ro else q + ell_seen + 1
        bound = (40.0 * np.e**2 * eff**3 * f.gamma_prime + 2.0) / 2.0**f.n
        params = dict(n=f.n, M=f.m, q=q, ell=ell_seen,
                      gamma_prime=f.gamma_prime, f=f.name, in_run_ro=in_run_ro)
    return BoundReport(f"interface-{mode}", params, float(success), float(bound), ms)


def early_extraction_experiment(adversary, f: CommitFunction,
                                multi: bool = False) -> tuple[BoundReport, BoundReport]:
    """Early extraction vs the real oracle, on classical multi-round adversaries.

    The adversary object exposes run(ro, announce): it may query ro freely,
    must call announce(t) when emitting a commitment, and returns (xs, w)
    with None entries for refused openings (RO(None) = None and the mismatch
    event never fires on them).  Outputs are classical, so the joint
    [t, x, h, W] states are diagonal and the trace distance is the total
    variation of the outcome tuples.
    """
    from .linalg import total_variation
    from .oracle import LazyRandomOracle
    from .simulator import SimulatorS

    counter = {}

    def run_real(ch):
        ro = LazyRandomOracle(f.n, ch)
        ts: list = []
        queries = [0, 0]

        def query(x):
            queries[0] += 1
            if ts:
                queries[1] += 1
            return ro.query(x)

        xs, w = adversary.run(query, ts.append)
        hs = tuple(None if x is None else ro.query(x) for x in xs)
        counter["q"] = queries[0]
        counter["q2"] = queries[1]
        counter["ell"] = len(ts)
        return (tuple(ts), tuple(xs), hs, w)

    def run_sim(ch):
        sim = SimulatorS(f, backend="dense", chooser=ch)
        ts: list = []
        hats: list = []

        def announce(t):
            ts.append(t)
            hats.append(sim.e_query(t).value)

        xs, w = adversary.run(sim.ro_classical, announce)
        hs = tuple(None if x is None else sim.ro_classical(x) for x in xs)
        mismatch = any(
            x is not None and hat != x and f(x, h) == t
            for x, hat, h, t in zip(xs, hats, hs, ts)
        )
        return (tuple(ts), tuple(xs), hs, w), mismatch

    start = time.perf_counter()
    real = {}
    for p, out in enumerate_paths(run_real):
        real[out] = real.get(out, 0.0) + p
    sim_dist: dict = {}
    mismatch_prob = 0.0
    for p, (out, bad) in enumerate_paths(run_sim):
        sim_dist[out] = sim_dist.get(out, 0.0) + p
        if bad:
            mismatch_prob += p
    ms = (time.perf_counter() - start) * 1000.0

    q, q2, ell = counter["q"], counter["q2"], counter["ell"]
    root = np.sqrt(2.0 * f.gamma / 2.0**f.n)
    if multi:
        td_bound = 8.0 * ell * (q + ell) * root
        mm_bound = (8.0 * ell * (q + 1) * root
                    + (40.0 * np.e**2 * (q + ell + 1) ** 3 * f.gamma_prime + 2.0)
                    / 2.0**f.n)
    else:
        td_bound = 8.0 * (q2 + 1) * root
        mm_bound = (8.0 * (q2 + 1) * root
                    + (40.0 * np.e**2 * (q + 2) ** 3 * f.gamma_prime + 2.0)
                    / 2.0**f.n)
    params = dict(n=f.n, M=f.m, q=q, q2=q2, ell=ell, f=f.name,
                  gamma=f.gamma, gamma_prime=f.gamma_prime, multi=multi)
    td = total_variation(real, sim_dist)
    return (
        BoundReport("early-trace-distance", params, td, float(td_bound), ms / 2),
        BoundReport("early-mismatch", params, float(mismatch_prob),
                    float(mm_bound), ms / 2),
    )


def compare_mc_exact(run, exact_success: float, trials: int, seed) -> tuple[float, float]:
    """Monte-Carlo estimate of Pr[run(ch) truthy] and its 3-sigma agreement slack."""
    from .branching import RandomChooser

    rng = np.random.default_rng(seed)
    wins = 0
    for _ in range(trials):
        wins += 1 if run(RandomChooser(rng)) else 0
    est = wins / trials
    sigma = max(np.sqrt(exact_success * (1 - exact_success) / trials), 1e-6)
    return est, 3.0 * sigma
