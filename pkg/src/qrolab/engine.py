"""Mutable dense state over labeled registers: the joint-evolution workhorse.

Unlike the immutable linalg types, a RegisterState is single-owner and is
mutated in place by gates, queries and measurement collapse.  Registers can
be attached and detached on the fly (query ancillas, purification registers).
"""

from __future__ import annotations

import numpy as np

from .config import ATOL, DIM_CAP
from .linalg import LayoutError, apply_on_axes


class RegisterState:
    def __init__(self, pairs, cap: int = DIM_CAP):
        self._labels: list[str] = [str(lab) for lab, _ in pairs]
        self._dims: list[int] = [int(d) for _, d in pairs]
        if len(set(self._labels)) != len(self._labels):
            raise LayoutError("duplicate register labels")
        self._check_cap(cap=cap)
        self.cap = cap
        self.tensor = np.zeros(self._dims, dtype=complex)
        self.tensor[(0,) * len(self._dims)] = 1.0

    def _check_cap(self, extra: int = 1, cap: int | None = None) -> None:
        total = extra
        for d in self._dims:
            total *= d
        if total > (cap if cap is not None else self.cap):
            raise LayoutError(f"total dimension {total} exceeds cap")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self._labels)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self._dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self._dims, dtype=object))

    def axis(self, label: str) -> int:
        try:
            return self._labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown register {label!r}") from None

    def vector(self) -> np.ndarray:
        return self.tensor.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))

    def set_vector(self, vec) -> None:
        # copy: collapse mutates in place and must never alias caller buffers
        self.tensor = np.array(vec, dtype=complex).reshape(self._dims)

    def copy(self) -> "RegisterState":
        out = RegisterState.__new__(RegisterState)
        out._labels = list(self._labels)
        out._dims = list(self._dims)
        out.cap = self.cap
        out.tensor = self.tensor.copy()
        return out

    # -- register management -------------------------------------------------

    def add_register(self, label: str, dim: int, value=0) -> None:
        """Append a register in a basis state (int) or explicit vector."""
        if label in self._labels:
            raise LayoutError(f"register {label!r} already present")
        self._check_cap(extra=dim)
        if np.isscalar(value):
            vec = np.zeros(dim, dtype=complex)
            vec[int(value)] = 1.0
        else:
            vec = np.asarray(value, dtype=complex).reshape(dim)
        self.tensor = np.multiply.outer(self.tensor, vec)
        self._labels.append(label)
        self._dims.append(dim)

    def remove_register(self, label: str) -> int:
        """Drop a register that sits in a computational basis state; returns its value."""
        ax = self.axis(label)
        moved = np.moveaxis(self.tensor, ax, 0)
        mass = np.sum(np.abs(moved) ** 2, axis=tuple(range(1, moved.ndim)))
        total = mass.sum()
        value = int(np.argmax(mass))
        if mass[value] < (1.0 - 1e-7) * total:
            raise LayoutError(f"register {label!r} is not in a basis state")
        self.tensor = moved[value]
        del self._labels[ax]
        del self._dims[ax]
        return value

    # -- evolution -----------------------------------------------------------

    def apply(self, matrix: np.ndarray, labels) -> None:
        axes = [self.axis(lab) for lab in labels]
        self.tensor = apply_on_axes(np.asarray(matrix, dtype=complex), self.tensor, axes)

    def apply_controlled(self, control: str, blocks, target_labels) -> None:
        """Apply blocks[x] on target_labels for each basis value x of control.

        blocks is a callable x -> matrix; target_labels may depend on x via a
        callable as well (used for x-dependent oracle registers).
        """
        ax = self.axis(control)
        moved = np.moveaxis(self.tensor, ax, 0)
        pieces = []
        for x in range(self._dims[ax]):
            labels = target_labels(x) if callable(target_labels) else target_labels
            sub_axes = []
            for lab in labels:
                a = self.axis(lab)
                sub_axes.append(a - 1 if a > ax else a)
            pieces.append(apply_on_axes(np.asarray(blocks(x), dtype=complex), moved[x], sub_axes))
        self.tensor = np.moveaxis(np.stack(pieces, axis=0), 0, ax)

    # -- measurement ---------------------------------------------------------

    def born_probs(self, labels) -> np.ndarray:
        axes = [self.axis(lab) for lab in labels]
        rest = [a for a in range(self.tensor.ndim) if a not in axes]
        moved = np.transpose(self.tensor, axes + rest)
        flat = moved.reshape(int(np.prod([self._dims[a] for a in axes], initial=1)), -1)
        return np.sum(np.abs(flat) ** 2, axis=1)

    def measure(self, labels, chooser) -> tuple[int, ...]:
        """Projective measurement of the named registers; collapses in place."""
        axes = [self.axis(lab) for lab in labels]
        probs = self.born_probs(labels)
        flat_outcome = chooser.choose(probs)
        sub_dims = [self._dims[a] for a in axes]
        outcome = np.unravel_index(flat_outcome, sub_dims)
        idx: list = [slice(None)] * self.tensor.ndim
        for a, v in zip(axes, outcome):
            idx[a] = int(v)
        kept = self.tensor[tuple(idx)]
        new = np.zeros_like(self.tensor)
        new[tuple(idx)] = kept
        nrm = np.linalg.norm(new)
        if nrm <= 0.0:
            raise ValueError("collapse onto zero-probability outcome")
        self.tensor = new / nrm
        return tuple(int(v) for v in outcome)

    def measure_and_remove(self, labels, chooser) -> tuple[int, ...]:
        outcome = self.measure(labels, chooser)
        for lab in labels:
            self.remove_register(lab)
        return outcome

    # -- read-out ------------------------------------------------------------

    def density(self, labels) -> np.ndarray:
        """Reduced density operator on the named registers (partial trace)."""
        axes = [self.axis(lab) for lab in labels]
        rest = [a for a in range(self.tensor.ndim) if a not in axes]
        moved = np.transpose(self.tensor, axes + rest)
        keep = int(np.prod([self._dims[a] for a in axes], initial=1))
        flat = moved.reshape(keep, -1)
        return flat @ flat.conj().T

    def subvector(self, labels) -> np.ndarray:
        """Pure-state vector on the named registers; requires the rest to be trivial."""
        if set(labels) != set(self._labels):
            rho = self.density(labels)
            vals, vecs = np.linalg.eigh(rho)
            if vals[-1] < 1.0 - 1e-7:
                raise LayoutError("registers are entangled with the remainder")
            return vecs[:, -1] * np.sqrt(vals[-1])
        axes = [self.axis(lab) for lab in labels]
        return np.transpose(self.tensor, axes).reshape(-1)

    def renormalize(self) -> None:
        nrm = self.norm()
        if abs(nrm - 1.0) > ATOL:
            self.tensor = self.tensor / nrm
