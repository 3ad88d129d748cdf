"""Linear algebra over labeled optical modes (spatial path x polarization).

States and operators are immutable; every function here is pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-12


class Polarization(str, Enum):
    H = "H"
    V = "V"


class BasisMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ModeBasis:
    labels: tuple

    def __post_init__(self):
        labels = tuple((str(s), Polarization(p)) for s, p in self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate mode labels in {labels}")
        spatial = {s for s, _ in labels}
        for s in spatial:
            if (s, Polarization.H) not in labels or (s, Polarization.V) not in labels:
                raise ValueError(f"spatial mode {s!r} must carry both H and V")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of(cls, *spatial: str) -> "ModeBasis":
        """Basis over the given spatial labels, H before V within each."""
        return cls(tuple((s, p) for s in spatial for p in (Polarization.H, Polarization.V)))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def spatial(self) -> tuple:
        seen = []
        for s, _ in self.labels:
            if s not in seen:
                seen.append(s)
        return tuple(seen)

    def index(self, label) -> int:
        s, p = label
        try:
            return self.labels.index((s, Polarization(p)))
        except ValueError:
            raise KeyError(f"mode {s},{Polarization(p).value} not in basis {self}") from None

    def __add__(self, other: "ModeBasis") -> "ModeBasis":
        return ModeBasis(self.labels + other.labels)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{s}:{p.value}" for s, p in self.labels) + "}"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ModeState:
    basis: ModeBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.shape[0] != self.basis.size:
            raise ValueError(
                f"{amps.shape[0]} amplitudes for basis of size {self.basis.size}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_jones(cls, basis: ModeBasis, spatial: str, jones: Sequence[complex]) -> "ModeState":
        """Place a two-component polarization vector on one spatial mode."""
        amps = np.zeros(basis.size, dtype=complex)
        amps[basis.index((spatial, Polarization.H))] = jones[0]
        amps[basis.index((spatial, Polarization.V))] = jones[1]
        return cls(basis, amps)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def amplitude(self, label) -> complex:
        return complex(self.amplitudes[self.basis.index(label)])

    def jones(self, spatial: str) -> np.ndarray:
        return np.array([self.amplitude((spatial, "H")), self.amplitude((spatial, "V"))])


@dataclass(frozen=True, eq=False)
class ComponentOp:
    """Linear map between mode bases.

    ``kind`` is ``"unitary"``, ``"lossy"`` (passive, singular values <= 1)
    or ``None`` for unchecked maps. The flag is verified on construction.
    """

    input_basis: ModeBasis
    output_basis: ModeBasis
    matrix: np.ndarray
    kind: str | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        shape = (self.output_basis.size, self.input_basis.size)
        if m.shape != shape:
            raise ValueError(f"matrix shape {m.shape} does not match bases {shape}")
        if self.kind == "unitary":
            if shape[0] != shape[1] or not np.allclose(m.conj().T @ m, np.eye(shape[1]), rtol=0, atol=ATOL):
                raise ValueError(f"operator {self.name or ''} flagged unitary is not unitary")
        elif self.kind == "lossy":
            if np.linalg.svd(m, compute_uv=False).max(initial=0.0) > 1 + ATOL:
                raise ValueError(f"operator {self.name or ''} flagged lossy has gain")
        elif self.kind is not None:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        object.__setattr__(self, "matrix", m)

    def transpose(self) -> "ComponentOp":
        """The same element traversed in the opposite direction (reciprocity)."""
        return ComponentOp(self.output_basis, self.input_basis, self.matrix.T, self.kind,
                           self.name + "^T" if self.name else "")

    def relabel(self, mapping: dict, output_mapping: dict | None = None) -> "ComponentOp":
        """Rename spatial labels; ``mapping`` applies to the input side and,
        unless ``output_mapping`` is given, to the output side too."""
        out_map = mapping if output_mapping is None else output_mapping

        def ren(basis, m):
            return ModeBasis(tuple((m.get(s, s), p) for s, p in basis.labels))

        return ComponentOp(ren(self.input_basis, mapping), ren(self.output_basis, out_map),
                           self.matrix, self.kind, self.name)


def identity(basis: ModeBasis) -> ComponentOp:
    return ComponentOp(basis, basis, np.eye(basis.size), "unitary", "I")


def permutation(source: ModeBasis, target: ModeBasis) -> ComponentOp:
    """Reorder modes: maps each label of ``source`` onto the same label in ``target``."""
    if set(source.labels) != set(target.labels):
        raise BasisMismatch(f"cannot permute {source} into {target}")
    m = np.zeros((target.size, source.size))
    for j, lab in enumerate(source.labels):
        m[target.index(lab), j] = 1.0
    return ComponentOp(source, target, m, "unitary", "perm")


def direct_sum(*ops: ComponentOp) -> ComponentOp:
    """Block-diagonal combination of operators acting on disjoint modes."""
    in_basis = ModeBasis(tuple(lab for op in ops for lab in op.input_basis.labels))
    out_basis = ModeBasis(tuple(lab for op in ops for lab in op.output_basis.labels))
    m = np.zeros((out_basis.size, in_basis.size), dtype=complex)
    r = c = 0
    for op in ops:
        h, w = op.matrix.shape
        m[r:r + h, c:c + w] = op.matrix
        r, c = r + h, c + w
    kinds = {op.kind for op in ops}
    kind = "unitary" if kinds == {"unitary"} else ("lossy" if kinds <= {"unitary", "lossy"} else None)
    return ComponentOp(in_basis, out_basis, m, kind)


def apply(op: ComponentOp, state: ModeState) -> ModeState:
    if state.basis != op.input_basis:
        raise BasisMismatch(
            f"state basis {state.basis} does not match operator input basis {op.input_basis}")
    return ModeState(op.output_basis, op.matrix @ state.amplitudes)


def compose(second: ComponentOp, first: ComponentOp) -> ComponentOp:
    """Operator for ``first`` followed by ``second``."""
    if first.output_basis != second.input_basis:
        raise BasisMismatch(
            f"cannot compose: output basis {first.output_basis} "
            f"!= input basis {second.input_basis}")
    kinds = {first.kind, second.kind}
    kind = "unitary" if kinds == {"unitary"} else ("lossy" if kinds <= {"unitary", "lossy"} else None)
    return ComponentOp(first.input_basis, second.output_basis, second.matrix @ first.matrix, kind)


def chain(*ops: ComponentOp) -> ComponentOp:
    """Compose operators in propagation order (first listed acts first)."""
    result = ops[0]
    for op in ops[1:]:
        result = compose(op, result)
    return result


def probability(state: ModeState, subset: Iterable) -> float:
    idx = [state.basis.index(lab) for lab in subset]
    amps = state.amplitudes[idx]
    return float(np.sum(amps.real ** 2 + amps.imag ** 2))


def global_phase_between(a: np.ndarray, b: np.ndarray) -> complex:
    """Unit phase c minimizing |a - c b|; 1 when either vector vanishes."""
    overlap = np.vdot(b, a)
    if abs(overlap) == 0:
        return 1.0 + 0j
    return complex(overlap / abs(overlap))


def equal_up_to_global_phase(a, b, atol: float = ATOL) -> bool:
    """True when ``a = e^{ic} b`` for some real c (states, operators or arrays)."""
    a = getattr(a, "amplitudes", getattr(a, "matrix", a))
    b = getattr(b, "amplitudes", getattr(b, "matrix", b))
    a, b = np.asarray(a, dtype=complex).ravel(), np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        return False
    c = global_phase_between(a, b)
    return bool(np.allclose(a, c * b, rtol=0, atol=atol))


def states_close(a: ModeState, b: ModeState, atol: float = ATOL) -> bool:
    return a.basis == b.basis and bool(np.allclose(a.amplitudes, b.amplitudes, rtol=0, atol=atol))
