"""The extractable RO-simulator: interfaces S.RO and S.E over a pluggable backend.

Backends:
  dense    - exact joint state over all database registers (small n, m)
  sparse   - associative-map compressed representation (huge m, few queries)
  product  - per-register columns; classical queries and extraction only

Only classical extraction queries are supported in v1; the coherent variant
exists behind `e_query_coherent` on the dense backend, is experimental, and
carries no stability guarantee.
"""

from __future__ import annotations

import json

import numpy as np

from .branching import RandomChooser
from .config import DIM_CAP
from .oracle import DenseOracleState, OracleConfig, d_label
from .relations import (
    CommitFunction,
    ExtractionOutcome,
    measure_extraction_dense,
    purified_m_permutation,
)
from .sparse import ProductState, SparseState


def _short_seed_repr(seed) -> str:
    if seed is None:
        return "none"
    if isinstance(seed, (int, np.integer)):
        return str(int(seed))
    if isinstance(seed, np.random.SeedSequence):
        ent = seed.entropy
        return f"ss:{ent}:{'.'.join(map(str, seed.spawn_key))}"
    return type(seed).__name__


class SimulatorS:
    def __init__(self, commit: CommitFunction, backend: str = "dense", *,
                 seed=None, chooser=None, q_cap: int | None = None,
                 cap: int = DIM_CAP, prefix=()):
        self.commit = commit
        self.config = OracleConfig(commit.n, commit.m)
        self.backend_name = backend
        if chooser is None:
            chooser = RandomChooser(np.random.default_rng(seed))
        self.chooser = chooser
        self.seed = seed
        self._seed_repr = _short_seed_repr(seed)
        self.log: list[dict] = []
        if backend == "dense":
            self.config.require_dense(cap)
            self.backend = DenseOracleState(self.config, cap=cap)
            for label, dim in prefix:
                self.backend.extend(label, dim)
        elif backend == "sparse":
            self.backend = SparseState(commit.n, commit.m, q_cap or 64, prefix=prefix)
        elif backend == "product":
            if prefix:
                raise ValueError("product backend has no attached registers")
            self.backend = ProductState(commit.n, commit.m)
        else:
            raise ValueError(f"unknown backend {backend!r}")

    # -- logging ---------------------------------------------------------------

    def _record(self, **entry) -> None:
        entry["index"] = len(self.log)
        entry["rng"] = [self._seed_repr, getattr(self.chooser, "calls", None)]
        self.log.append(entry)

    def export_log_jsonl(self) -> str:
        return "\n".join(json.dumps(e, sort_keys=True, default=str) for e in self.log)

    # -- S.RO --------------------------------------------------------------------

    def ro_classical(self, x: int) -> int:
        h = self.backend.classical_query(x, self.chooser)
        self._record(interface="RO", mode="classical", x=int(x), h=int(h))
        return h

    def ro_quantum(self, x_label: str = "X", y_label: str = "Y") -> None:
        """Apply O_XYD on caller-attached query registers (dense/sparse only)."""
        self.backend.quantum_query(x_label, y_label)
        self._record(interface="RO", mode="quantum", x=x_label, y=y_label)

    # -- S.E ----------------------------------------------------------------------

    def _relation_member(self, t):
        fn = self.commit.fn
        return lambda x, cell: fn(x, cell) == t

    def e_query(self, t) -> ExtractionOutcome:
        if not self._t_plausible(t):
            raise ValueError(f"t={t!r} not in T")
        if isinstance(self.backend, DenseOracleState):
            rel = self.commit.relation_for(t)
            out = measure_extraction_dense(self.backend, rel, self.chooser)
        elif isinstance(self.backend, SparseState):
            pick = self.backend.measure_relation(self._relation_member(t), self.chooser)
            out = ExtractionOutcome(pick, self.config.m)
        else:
            pick = self.backend.measure_relation(
                self._relation_member(t), self.chooser,
                satisfying=lambda x: self.commit.preimages(x, t),
            )
            out = ExtractionOutcome(pick, self.config.m)
        self._record(interface="E", mode="classical", t=t,
                     outcome=None if out.is_empty else int(out.value))
        return out

    def _t_plausible(self, t) -> bool:
        # t_values may be a lazily-described range for big T
        try:
            return t in self.commit.t_values
        except TypeError:
            return True

    def e_query_coherent(self, t_label: str) -> None:
        """EXPERIMENTAL: controlled M^{R_t} on an attached T register (dense only)."""
        if not isinstance(self.backend, DenseOracleState):
            raise NotImplementedError("coherent extraction is dense-only")
        state = self.backend.state
        t_ax = state.axis(t_label)
        p_label = f"_P{sum(1 for lab in state.labels if lab.startswith('_P'))}"
        state.add_register(p_label, self.config.m + 1, value=0)
        d_labels = [d_label(x) for x in range(self.config.m)]
        moved = np.moveaxis(state.tensor, t_ax, 0)
        pieces = []
        for ti in range(state.dims[t_ax]):
            t = self.commit.t_values[ti]
            rel = self.commit.relation_for(t)
            dest = purified_m_permutation(rel, self.config)
            sub = moved[ti]
            axes = []
            for lab in d_labels + [p_label]:
                a = state.axis(lab)
                axes.append(a - 1 if a > t_ax else a)
            rest = [a for a in range(sub.ndim) if a not in axes]
            block = np.transpose(sub, axes + rest).reshape(len(dest), -1)
            out = np.zeros_like(block)
            out[dest] = block
            shaped = out.reshape([sub.shape[a] for a in axes + rest])
            pieces.append(np.transpose(shaped, np.argsort(axes + rest)))
        state.tensor = np.moveaxis(np.stack(pieces, axis=0), 0, t_ax)
        self._record(interface="E", mode="coherent", t_register=t_label)

    # -- register plumbing for quantum access (dense backend) ----------------------

    def attach(self, label: str, dim: int, value=0) -> None:
        if isinstance(self.backend, DenseOracleState):
            self.backend.extend(label, dim, value)
        elif isinstance(self.backend, SparseState):
            raise ValueError("sparse prefix registers must be declared at construction")
        else:
            raise NotImplementedError("product backend has no attached registers")

    def state_vector(self) -> np.ndarray:
        if isinstance(self.backend, DenseOracleState):
            return self.backend.state.vector()
        if isinstance(self.backend, SparseState):
            return self.backend.to_dense_vector()
        return self.backend.to_dense_vector()


def simulator_pair(commit: CommitFunction, backends=("dense", "sparse"), **kw):
    """Identically-seeded simulators on two backends, for agreement tests."""
    return tuple(SimulatorS(commit, b, **kw) for b in backends)
