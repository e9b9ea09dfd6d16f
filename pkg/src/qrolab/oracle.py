"""The compressed random oracle: unitaries F and O, and classical-query semantics.

Basis convention for every database cell D_x: indices 0..2^n-1 are the
computational values |y>, index 2^n is the empty symbol |bot>.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import ATOL, DIM_CAP
from .engine import RegisterState
from .linalg import DenseOperator, LayoutError, RegisterLayout, embed_operator


def d_label(x: int) -> str:
    return f"D{x}"


@lru_cache(maxsize=None)
def walsh(n: int) -> np.ndarray:
    """The n-bit Walsh-Hadamard transform as a 2^n x 2^n real matrix."""
    h1 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    out = np.array([[1.0]])
    for _ in range(n):
        out = np.kron(out, h1)
    return out


@lru_cache(maxsize=None)
def build_f(n: int) -> np.ndarray:
    """F on one cell: swaps |bot> and |phi_0>, fixes the other Hadamard states."""
    if n < 1:
        raise ValueError("n must be at least 1")
    big_n = 2**n
    w = walsh(n)
    phi0 = w[:, 0]
    f = np.zeros((big_n + 1, big_n + 1))
    f[:big_n, :big_n] = np.eye(big_n) - np.outer(phi0, phi0)
    f[:big_n, big_n] = phi0
    f[big_n, :big_n] = phi0
    return f


def build_f_operator(n: int) -> DenseOperator:
    layout = RegisterLayout.of(("Dx", 2**n + 1))
    return DenseOperator(layout, build_f(n), is_unitary=True)


@lru_cache(maxsize=None)
def cell_hadamard(n: int) -> np.ndarray:
    """Walsh-Hadamard on a cell, acting as identity on |bot>."""
    big_n = 2**n
    h = np.eye(big_n + 1)
    h[:big_n, :big_n] = walsh(n)
    return h


@lru_cache(maxsize=None)
def build_o_small(n: int) -> np.ndarray:
    """O^x on the pair (Y, D_x): F . CNOT . F with D_x the CNOT control."""
    big_n = 2**n
    bot = big_n
    dim = big_n * (big_n + 1)
    cnot = np.zeros((dim, dim))
    for y in range(big_n):
        for c in range(big_n + 1):
            src = y * (big_n + 1) + c
            y_out = y if c == bot else (y ^ c)
            cnot[y_out * (big_n + 1) + c, src] = 1.0
    fi = np.kron(np.eye(big_n), build_f(n))
    return fi @ cnot @ fi


@dataclass(frozen=True)
class OracleConfig:
    """Output length n and domain size m (domain X = {0, ..., m-1})."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")

    @property
    def big_n(self) -> int:
        return 2**self.n

    @property
    def cell_dim(self) -> int:
        return self.big_n + 1

    @property
    def bot(self) -> int:
        return self.big_n

    def d_dim(self) -> int:
        return self.cell_dim**self.m

    def dense_feasible(self, cap: int = DIM_CAP) -> bool:
        # early bailout: never materialize (2^n+1)^m for huge m
        total = self.m * self.big_n
        for _ in range(self.m):
            total *= self.cell_dim
            if total > cap:
                return False
        return True

    def require_dense(self, cap: int = DIM_CAP) -> None:
        if not self.dense_feasible(cap):
            raise LayoutError(
                f"dense mode needs (2^n+1)^m * m * 2^n <= {cap}; "
                f"got n={self.n}, m={self.m}"
            )

    def d_layout(self, extra=()) -> RegisterLayout:
        pairs = list(extra) + [(d_label(x), self.cell_dim) for x in range(self.m)]
        return RegisterLayout.of(*pairs)


def build_query_unitary(config: OracleConfig) -> DenseOperator:
    """O_XYD = sum_x |x><x| (x) F CNOT F on registers X, Y, D_0..D_{m-1}."""
    config.require_dense()
    layout = RegisterLayout.of(
        ("X", config.m), ("Y", config.big_n),
        *((d_label(x), config.cell_dim) for x in range(config.m)),
    )
    sub = layout.restrict([lab for lab in layout.labels if lab != "X"])
    block_dim = sub.dim
    o_small = build_o_small(config.n)
    small_layout = RegisterLayout.of(("Y", config.big_n), ("Dx", config.cell_dim))
    mat = np.zeros((layout.dim, layout.dim), dtype=complex)
    for x in range(config.m):
        block = embed_operator(
            DenseOperator(small_layout, o_small, is_unitary=True),
            ["Y", d_label(x)],
            sub,
        ).matrix
        sl = slice(x * block_dim, (x + 1) * block_dim)
        mat[sl, sl] = block
    return DenseOperator(layout, mat, is_unitary=True)


class DenseOracleState:
    """Compressed-oracle database D held in a dense joint state.

    Callers may attach extra registers (adversary work space, X/Y query
    registers, purification registers) which then evolve jointly with D.
    """

    def __init__(self, config: OracleConfig, cap: int = DIM_CAP):
        self.config = config
        self.state = RegisterState(
            [(d_label(x), config.cell_dim) for x in range(config.m)], cap=cap
        )
        # initial database: every cell holds |bot>
        vec = np.zeros(config.cell_dim, dtype=complex)
        vec[config.bot] = 1.0
        tensor = np.array(1.0, dtype=complex)
        for _ in range(config.m):
            tensor = np.multiply.outer(tensor, vec)
        self.state.tensor = tensor.reshape(self.state.dims)

    def classical_query(self, x: int, chooser) -> int:
        """Classical RO query: prepare |x>|0>, apply O, measure Y, collapse."""
        if not 0 <= x < self.config.m:
            raise ValueError(f"x={x} out of domain range")
        self.state.add_register("_qY", self.config.big_n, value=0)
        self.state.apply(build_o_small(self.config.n), ["_qY", d_label(x)])
        (h,) = self.state.measure_and_remove(["_qY"], chooser)
        return h

    def classical_query_probs(self, x: int) -> np.ndarray:
        """Response distribution of a classical query, without performing it."""
        tmp = self.copy()
        tmp.state.add_register("_qY", self.config.big_n, value=0)
        tmp.state.apply(build_o_small(self.config.n), ["_qY", d_label(x)])
        return tmp.state.born_probs(["_qY"])

    def quantum_query(self, x_label: str, y_label: str) -> None:
        """Apply O_XYD jointly on caller-attached X, Y registers and D."""
        o_small = build_o_small(self.config.n)
        self.state.apply_controlled(
            x_label, lambda x: o_small, lambda x: [y_label, d_label(x)]
        )

    def extend(self, label: str, dim: int, value=0) -> None:
        self.state.add_register(label, dim, value)

    def d_vector(self) -> np.ndarray:
        return self.state.subvector([d_label(x) for x in range(self.config.m)])

    def d_density(self) -> np.ndarray:
        return self.state.density([d_label(x) for x in range(self.config.m)])

    def copy(self) -> "DenseOracleState":
        out = DenseOracleState.__new__(DenseOracleState)
        out.config = self.config
        out.state = self.state.copy()
        return out


class LazyRandomOracle:
    """Classical lazily-sampled random function {0..m-1} -> {0,1}^n.

    Fresh inputs draw through the chooser, so the oracle can run either
    seeded (RandomChooser) or inside an exhaustive enumeration.
    """

    def __init__(self, n: int, chooser):
        self.n = n
        self.chooser = chooser
        self.table: dict[int, int] = {}

    def query(self, x) -> int:
        if x not in self.table:
            self.table[x] = self.chooser.choose_uniform(2**self.n)
        return self.table[x]


class FixedOracle:
    """Random function given by an explicit table (for exhaustive averaging)."""

    def __init__(self, table):
        self.table = list(table)

    def query(self, x) -> int:
        return self.table[x]


def reference_lazy_ro(n: int, seed) -> LazyRandomOracle:
    from .branching import RandomChooser

    return LazyRandomOracle(n, RandomChooser(seed))


def check_unitary(mat: np.ndarray, atol: float = ATOL) -> float:
    d = mat.shape[0]
    return float(np.abs(mat.conj().T @ mat - np.eye(d)).max())
