"""Adversary circuits as data, and runners over the three oracle realizations.

A circuit is a JSON-able dict:

    {"name": "...", "n": 1, "m": 2,
     "registers": [["W", 2]],            # work registers; X and Y are implicit
     "steps": [
        {"op": "unitary", "targets": ["X"], "gate": "fourier"},
        {"op": "unitary", "targets": ["Y", "W"], "matrix": [[[re, im], ...], ...]},
        {"op": "query"},
        {"op": "measure", "targets": ["W"]}],
     "output": ["X", "Y"]}               # measured at the end, appended to
                                          # any mid-circuit results

Named gates: hadamard (2^k dims), fourier (any dim), flip (cyclic +1),
controlled-flip (|a,b> -> |a, b+a mod d>), phase (diag(1,-1,1,...), or
diag(e^{i angle j}) when "angle" is given).
"""

from __future__ import annotations

import numpy as np

from .branching import enumerate_distribution
from .engine import RegisterState
from .linalg import total_variation
from .oracle import DenseOracleState, OracleConfig, walsh
from .sparse import SparseState


def gate_matrix(step: dict, dims: list[int]) -> np.ndarray:
    if "matrix" in step:
        raw = np.asarray(step["matrix"], dtype=float)
        if raw.ndim == 3:  # [[re, im], ...] pairs
            return raw[..., 0] + 1j * raw[..., 1]
        return raw.astype(complex)
    name = step["gate"]
    dim = int(np.prod(dims))
    if name == "hadamard":
        n = dim.bit_length() - 1
        if 2**n != dim:
            raise ValueError("hadamard gate needs a power-of-2 dimension")
        return walsh(n).astype(complex)
    if name == "fourier":
        j = np.arange(dim)
        return np.exp(2j * np.pi * np.outer(j, j) / dim) / np.sqrt(dim)
    if name == "flip":
        return np.roll(np.eye(dim), 1, axis=0).astype(complex)
    if name == "controlled-flip":
        if len(dims) != 2:
            raise ValueError("controlled-flip needs exactly two targets")
        da, db = dims
        mat = np.zeros((dim, dim))
        for a in range(da):
            for b in range(db):
                mat[a * db + (b + a) % db, a * db + b] = 1.0
        return mat.astype(complex)
    if name == "phase":
        j = np.arange(dim)
        angle = step.get("angle")
        if angle is None:
            return np.diag((-1.0 + 0j) ** j)
        return np.diag(np.exp(1j * float(angle) * j))
    raise ValueError(f"unknown gate {name!r}")


def validate_circuit(circ: dict) -> None:
    for key in ("n", "m", "steps"):
        if key not in circ:
            raise ValueError(f"circuit missing field {key!r}")
    for step in circ["steps"]:
        if step["op"] not in ("unitary", "query", "measure"):
            raise ValueError(f"unknown step op {step['op']!r}")
        if step["op"] == "unitary" and "gate" not in step and "matrix" not in step:
            raise ValueError("unitary step needs a gate name or explicit matrix")


def circuit_registers(circ: dict) -> list[tuple[str, int]]:
    config = OracleConfig(circ["n"], circ["m"])
    regs = [("X", config.m), ("Y", config.big_n)]
    regs += [(lab, int(d)) for lab, d in circ.get("registers", [])]
    return regs


def _finish(results: list, state_measure, outputs) -> tuple:
    if outputs:
        results.extend(state_measure(outputs))
    return tuple(results)


def run_circuit_compressed(circ: dict, chooser, backend: str = "dense") -> tuple:
    """Execute against the compressed oracle; returns all measured values."""
    validate_circuit(circ)
    config = OracleConfig(circ["n"], circ["m"])
    regs = circuit_registers(circ)
    if backend == "dense":
        oracle = DenseOracleState(config)
        for lab, d in regs:
            oracle.extend(lab, d)
        state = oracle.state

        def apply(mat, targets):
            state.apply(mat, targets)

        def measure(targets):
            return list(state.measure(targets, chooser))

        def query():
            oracle.quantum_query("X", "Y")

    elif backend == "sparse":
        sp = SparseState(circ["n"], circ["m"], q_cap=circ.get("q_cap", 8), prefix=regs)

        def apply(mat, targets):
            sp.apply_prefix_unitary(targets, mat)

        def measure(targets):
            return [sp.measure_prefix(lab, chooser) for lab in targets]

        def query():
            sp.quantum_query("X", "Y")

    else:
        raise ValueError(f"unknown backend {backend!r}")

    results: list[int] = []
    dims_of = dict(regs)
    for step in circ["steps"]:
        if step["op"] == "unitary":
            targets = step["targets"]
            apply(gate_matrix(step, [dims_of[t] for t in targets]), targets)
        elif step["op"] == "query":
            query()
        else:
            results.extend(measure(step["targets"]))
    return _finish(results, measure, circ.get("output", []))


def run_circuit_reference(circ: dict, chooser, table) -> tuple:
    """Execute against a plain random oracle given by an explicit table."""
    validate_circuit(circ)
    config = OracleConfig(circ["n"], circ["m"])
    regs = circuit_registers(circ)
    state = RegisterState(regs)
    big_n = config.big_n
    # U_H: |x>|y> -> |x>|y xor H(x)> as a permutation on X (x) Y
    uh = np.zeros((config.m * big_n, config.m * big_n))
    for x in range(config.m):
        for y in range(big_n):
            uh[x * big_n + (y ^ table[x]), x * big_n + y] = 1.0

    results: list[int] = []
    dims_of = dict(regs)
    for step in circ["steps"]:
        if step["op"] == "unitary":
            targets = step["targets"]
            state.apply(gate_matrix(step, [dims_of[t] for t in targets]), targets)
        elif step["op"] == "query":
            state.apply(uh, ["X", "Y"])
        else:
            results.extend(state.measure(step["targets"], chooser))
    return _finish(
        results, lambda targets: list(state.measure(targets, chooser)),
        circ.get("output", []),
    )


def compressed_distribution(circ: dict, backend: str = "dense") -> dict:
    return enumerate_distribution(lambda ch: run_circuit_compressed(circ, ch, backend))


def reference_distribution(circ: dict) -> dict:
    """Exact output distribution under a uniformly random oracle table."""
    config = OracleConfig(circ["n"], circ["m"])
    n_tables = config.big_n**config.m
    acc: dict = {}
    for code in range(n_tables):
        rem = code
        table = []
        for _ in range(config.m):
            rem, v = divmod(rem, config.big_n)
            table.append(v)
        dist = enumerate_distribution(
            lambda ch: run_circuit_reference(circ, ch, table)
        )
        for k, p in dist.items():
            acc[k] = acc.get(k, 0.0) + p / n_tables
    return acc


def indistinguishability_gap(circ: dict, backend: str = "dense") -> float:
    """Total variation between compressed-oracle and reference-RO outputs."""
    return total_variation(
        compressed_distribution(circ, backend), reference_distribution(circ)
    )


# -- bundled circuit families ------------------------------------------------------


def named_circuits(n: int, m: int) -> list[dict]:
    """Hand-written circuits exercising the oracle from several angles."""
    big_n = 2**n
    circs = [
        {"name": "classical-two-queries", "n": n, "m": m, "registers": [],
         "steps": [
             {"op": "unitary", "targets": ["Y"], "gate": "flip"},
             {"op": "query"},
             {"op": "measure", "targets": ["Y"]},
             {"op": "unitary", "targets": ["X"], "gate": "flip"},
             {"op": "query"},
         ],
         "output": ["X", "Y"]},
        {"name": "uniform-superposition-query", "n": n, "m": m, "registers": [],
         "steps": [
             {"op": "unitary", "targets": ["X"], "gate": "fourier"},
             {"op": "query"},
         ],
         "output": ["X", "Y"]},
        {"name": "query-then-interfere", "n": n, "m": m, "registers": [],
         "steps": [
             {"op": "unitary", "targets": ["X"], "gate": "fourier"},
             {"op": "unitary", "targets": ["Y"], "gate": "hadamard"},
             {"op": "query"},
             {"op": "unitary", "targets": ["X"], "gate": "fourier"},
         ],
         "output": ["X", "Y"]},
        {"name": "double-query-cancels", "n": n, "m": m, "registers": [],
         "steps": [
             {"op": "unitary", "targets": ["X"], "gate": "fourier"},
             {"op": "query"},
             {"op": "query"},
         ],
         "output": ["X", "Y"]},
        {"name": "entangle-work-register", "n": n, "m": m, "registers": [["W", 2]],
         "steps": [
             {"op": "unitary", "targets": ["W"], "gate": "hadamard"},
             {"op": "unitary", "targets": ["W", "X"], "gate": "controlled-flip"},
             {"op": "query"},
             {"op": "unitary", "targets": ["W"], "gate": "hadamard"},
         ],
         "output": ["W", "X", "Y"]},
        {"name": "mid-circuit-measurement", "n": n, "m": m, "registers": [],
         "steps": [
             {"op": "unitary", "targets": ["X"], "gate": "fourier"},
             {"op": "measure", "targets": ["X"]},
             {"op": "query"},
             {"op": "unitary", "targets": ["Y"], "gate": "phase"},
             {"op": "query"},
         ],
         "output": ["Y"]},
        {"name": "phase-kickback", "n": n, "m": m, "registers": [],
         "steps": [
             {"op": "unitary", "targets": ["Y"], "gate": "flip"},
             {"op": "unitary", "targets": ["Y"], "gate": "hadamard"},
             {"op": "unitary", "targets": ["X"], "gate": "fourier"},
             {"op": "query"},
             {"op": "unitary", "targets": ["X"], "gate": "fourier"},
             {"op": "unitary", "targets": ["Y"], "gate": "hadamard"},
         ],
         "output": ["X", "Y"]},
    ]
    return circs


def random_circuit(n: int, m: int, rng: np.random.Generator, max_queries: int = 3) -> dict:
    """Seeded random circuit: Haar unitaries interleaved with oracle queries."""
    big_n = 2**n
    regs = [["W", 2]] if rng.random() < 0.5 else []
    labels = ["X", "Y"] + [lab for lab, _ in regs]
    dims = {"X": m, "Y": big_n, "W": 2}
    steps: list[dict] = []
    n_queries = int(rng.integers(1, max_queries + 1))
    for q in range(n_queries):
        for _ in range(int(rng.integers(1, 3))):
            k = 1 if len(labels) == 2 or rng.random() < 0.6 else 2
            targets = list(rng.choice(labels, size=k, replace=False))
            dim = int(np.prod([dims[t] for t in targets]))
            z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            qmat, r = np.linalg.qr(z)
            qmat = qmat * (np.diag(r) / np.abs(np.diag(r)))
            steps.append({
                "op": "unitary", "targets": targets,
                "matrix": np.stack([qmat.real, qmat.imag], axis=-1).tolist(),
            })
        steps.append({"op": "query"})
        if rng.random() < 0.25:
            steps.append({"op": "measure", "targets": ["Y"]})
    return {"name": f"random-{rng.bit_generator.state['state']['state'] % 10**6}",
            "n": n, "m": m, "registers": regs, "steps": steps,
            "output": labels}


def equivalence_suite(max_n: int = 2, max_m: int = 3, n_random: int = 36,
                      seed: int = 2024) -> list[dict]:
    """The bundled adversary-circuit suite for RO-indistinguishability checks."""
    rng = np.random.default_rng(seed)
    suite: list[dict] = []
    for n in range(1, max_n + 1):
        for m in range(2, max_m + 1):
            for circ in named_circuits(n, m):
                circ["name"] = f"{circ['name']}-n{n}m{m}"
                suite.append(circ)
    configs = [(n, m) for n in range(1, max_n + 1) for m in range(2, max_m + 1)]
    for i in range(n_random):
        n, m = configs[i % len(configs)]
        circ = random_circuit(n, m, rng)
        circ["name"] = f"random-{i:03d}-n{n}m{m}"
        suite.append(circ)
    return suite
