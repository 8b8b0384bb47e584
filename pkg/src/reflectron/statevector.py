"""Dense statevector simulation over named qubit registers.

Basis convention used everywhere in the package: the composite basis label is
the concatenation of register contents in declaration order, first register
most significant.  Inside a register, bit 1 is the leftmost (most significant)
bit.  Global qubit index 0 is therefore the most significant bit of the flat
amplitude index.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np

__all__ = [
    "DEFAULT_MAX_QUBITS",
    "DENSE_MAX_QUBITS",
    "Gate",
    "RegisterLayout",
    "StateVector",
    "apply_gate",
    "apply_gate_inplace",
    "basis_relabel",
    "basis_state",
    "conditional_subset_reflection",
    "dense_matrix",
    "exact_distribution",
    "hadamard_all",
    "marginal",
    "max_qubits",
    "phase_flip",
    "random_state",
    "xor_oracle",
]

DEFAULT_MAX_QUBITS = 26
DENSE_MAX_QUBITS = 10

NORM_TOL = 1e-9
ZERO_TOL = 1e-12


def max_qubits() -> int:
    """Width guard, overridable through ``REFLECTRON_MAX_QUBITS``."""
    raw = os.environ.get("REFLECTRON_MAX_QUBITS")
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"REFLECTRON_MAX_QUBITS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError("REFLECTRON_MAX_QUBITS must be positive")
    return value


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named registers, e.g. ``RegisterLayout.of(X=4, Y=4)``."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(name), int(width)) for name, width in self.registers)
        object.__setattr__(self, "registers", regs)
        names = [name for name, _ in regs]
        if not regs:
            raise ValueError("layout needs at least one register")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in {names}")
        for name, width in regs:
            if width < 1:
                raise ValueError(f"register {name!r} has width {width} < 1")

    def check_width(self) -> None:
        """Refuse to allocate amplitudes beyond the configured qubit guard."""
        limit = max_qubits()
        if self.total_width > limit:
            raise ValueError(
                f"layout needs {self.total_width} qubits, above the guard of {limit}"
            )

    @classmethod
    def of(cls, **widths: int) -> "RegisterLayout":
        return cls(tuple(widths.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    @property
    def total_width(self) -> int:
        return sum(width for _, width in self.registers)

    @property
    def dimension(self) -> int:
        return 1 << self.total_width

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def width(self, name: str) -> int:
        for reg, width in self.registers:
            if reg == name:
                return width
        raise KeyError(f"unknown register {name!r}; layout has {list(self.names)}")

    def offset(self, name: str) -> int:
        """Global index of the register's first (most significant) qubit."""
        start = 0
        for reg, width in self.registers:
            if reg == name:
                return start
            start += width
        raise KeyError(f"unknown register {name!r}; layout has {list(self.names)}")

    def shift(self, name: str) -> int:
        """Bit shift of the register's least significant qubit in the flat index."""
        return self.total_width - self.offset(name) - self.width(name)

    def qubit(self, name: str, position: int) -> int:
        """Global qubit index of ``position`` (1-based, MSB first) in ``name``."""
        width = self.width(name)
        if not 1 <= position <= width:
            raise IndexError(f"position {position} outside register {name!r} of width {width}")
        return self.offset(name) + position - 1

    def qubits(self, name: str) -> list[int]:
        start = self.offset(name)
        return list(range(start, start + self.width(name)))

    def index(self, assignment: Mapping[str, str | int]) -> int:
        """Flat basis index for a full register assignment."""
        unknown = set(assignment) - set(self.names)
        if unknown:
            raise KeyError(f"unknown registers {sorted(unknown)}")
        missing = set(self.names) - set(assignment)
        if missing:
            raise ValueError(f"registers {sorted(missing)} not assigned")
        idx = 0
        for name, width in self.registers:
            value = assignment[name]
            if isinstance(value, str):
                if len(value) != width or set(value) - {"0", "1"}:
                    raise ValueError(
                        f"register {name!r} needs a {width}-bit string, got {value!r}"
                    )
                value = int(value, 2)
            elif not 0 <= int(value) < (1 << width):
                raise ValueError(f"value {value} does not fit register {name!r} of width {width}")
            idx = (idx << width) | int(value)
        return idx

    def values(self, name: str) -> np.ndarray:
        """Register content for every flat basis index (read-only, cached)."""
        return _register_values(self, name)


@lru_cache(maxsize=64)
def _register_values(layout: RegisterLayout, name: str) -> np.ndarray:
    idx = _arange(layout.total_width)
    out = (idx >> layout.shift(name)) & ((1 << layout.width(name)) - 1)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=32)
def _arange(width: int) -> np.ndarray:
    out = np.arange(1 << width, dtype=np.int64)
    out.flags.writeable = False
    return out


@dataclass
class StateVector:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        self.layout.check_width()
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.layout.dimension,):
            raise ValueError(
                f"expected {self.layout.dimension} amplitudes, got shape {amps.shape}"
            )
        self.amplitudes = amps

    def copy(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """View with one axis per register, in layout order."""
        return self.amplitudes.reshape([1 << w for _, w in self.layout.registers])

    def _with(self, amplitudes: np.ndarray) -> "StateVector":
        return StateVector(self.layout, amplitudes.reshape(-1))


class _RegisterValues(Mapping):
    """Lazy ``name -> values`` map handed to phase predicates."""

    def __init__(self, layout: RegisterLayout):
        self._layout = layout

    def __getitem__(self, name):
        return self._layout.values(name)

    def __iter__(self):
        return iter(self._layout.names)

    def __len__(self):
        return len(self._layout.names)


def basis_state(layout: RegisterLayout, assignment: Mapping[str, str | int]) -> StateVector:
    layout.check_width()
    amps = np.zeros(layout.dimension, dtype=np.complex128)
    amps[layout.index(assignment)] = 1.0
    return StateVector(layout, amps)


def random_state(layout: RegisterLayout, rng: np.random.Generator, fixed_zero: Iterable[str] = ()) -> StateVector:
    """Haar-ish random normalized state; registers in ``fixed_zero`` held at |0>."""
    amps = rng.normal(size=layout.dimension) + 1j * rng.normal(size=layout.dimension)
    for name in fixed_zero:
        amps[layout.values(name) != 0] = 0.0
    amps /= np.linalg.norm(amps)
    return StateVector(layout, amps)


def _single_qubit(amps: np.ndarray, total: int, qubit: int, mix: Callable) -> np.ndarray:
    view = amps.reshape(1 << qubit, 2, 1 << (total - qubit - 1))
    out = np.empty_like(view)
    out[:, 0, :], out[:, 1, :] = mix(view[:, 0, :], view[:, 1, :])
    return out.reshape(-1)


_SQRT_HALF = 1.0 / np.sqrt(2.0)


def _hadamard(a0, a1):
    return (a0 + a1) * _SQRT_HALF, (a0 - a1) * _SQRT_HALF


def hadamard_all(state: StateVector, register: str) -> StateVector:
    total = state.layout.total_width
    amps = state.amplitudes
    for q in state.layout.qubits(register):
        amps = _single_qubit(amps, total, q, _hadamard)
    return state._with(amps)


def phase_flip(state: StateVector, predicate: Callable[[Mapping[str, np.ndarray]], np.ndarray | bool]) -> StateVector:
    """Negate every amplitude whose basis label satisfies ``predicate``.

    The predicate is vectorized: it receives a mapping from register name to
    the array of that register's value at every basis index and returns a
    boolean array (or a scalar bool, broadcast to all labels).
    """
    mask = np.broadcast_to(np.asarray(predicate(_RegisterValues(state.layout)), dtype=bool),
                           (state.layout.dimension,))
    out = state.amplitudes.copy()
    out[mask] *= -1
    return state._with(out)


def _subset_mask(subset, size: int) -> np.ndarray:
    if callable(subset):
        return np.fromiter((bool(subset(t)) for t in range(size)), dtype=bool, count=size)
    mask = np.asarray(subset, dtype=bool)
    if mask.shape != (size,):
        raise ValueError(f"subset mask must have length {size}, got shape {mask.shape}")
    return mask


def _axis(layout: RegisterLayout, name: str) -> int:
    if name not in layout:
        raise KeyError(f"unknown register {name!r}; layout has {list(layout.names)}")
    return layout.names.index(name)


def _reflect_about_subset(block: np.ndarray, mask: np.ndarray) -> None:
    """In place: 2|psi_S><psi_S| - I along axis 0, S given by ``mask``."""
    inside = block[mask]
    mean = inside.mean(axis=0)
    block[mask] = 2.0 * mean - inside
    block[~mask] *= -1


def conditional_subset_reflection(state: StateVector, control: str | None, target: str, subset_of) -> StateVector:
    """Reflect the target register about a control-dependent uniform superposition.

    For each control value ``c`` the target sees ``2|psi_S(c)><psi_S(c)| - I``
    where ``|psi_S(c)>`` is uniform over ``S(c)``.  ``subset_of(c)`` returns a
    boolean mask over target values or a callable ``t -> bool``.  With
    ``control=None`` the subset is fixed and ``subset_of`` is called with 0.
    """
    layout = state.layout
    t_axis = _axis(layout, target)
    t_size = 1 << layout.width(target)
    tensor = state.tensor().copy()
    if control is None:
        moved = np.moveaxis(tensor, t_axis, 0)
        block = moved.reshape(t_size, -1)
        mask = _subset_mask(subset_of(0), t_size)
        if not mask.any():
            if np.any(np.abs(block) > 0):
                raise ValueError("empty reflection subset on a populated state")
        else:
            _reflect_about_subset(block, mask)
        moved[...] = block.reshape(moved.shape)
        return state._with(tensor)

    if control == target:
        raise ValueError("control and target registers must differ")
    c_axis = _axis(layout, control)
    moved = np.moveaxis(tensor, (c_axis, t_axis), (0, 1))
    blocks = moved.reshape(moved.shape[0], t_size, -1)
    for c in range(blocks.shape[0]):
        block = blocks[c]
        if not np.any(block):
            continue
        mask = _subset_mask(subset_of(c), t_size)
        if not mask.any():
            raise ValueError(f"empty reflection subset for populated control value {c}")
        _reflect_about_subset(block, mask)
    moved[...] = blocks.reshape(moved.shape)
    return state._with(tensor)


def _as_lookup(table, in_width: int) -> np.ndarray:
    arr = np.asarray(getattr(table, "table", table), dtype=np.int64)
    if arr.shape != (1 << in_width,):
        raise ValueError(f"oracle table needs {1 << in_width} entries, got shape {arr.shape}")
    return arr


def xor_oracle(state: StateVector, in_reg: str, out_reg: str, table) -> StateVector:
    """|a>|b> -> |a>|f(a) xor b>.  ``table`` is a PermutationTable or an int array."""
    layout = state.layout
    if in_reg == out_reg:
        raise ValueError("oracle input and output registers must differ")
    lookup = _as_lookup(table, layout.width(in_reg))
    n = getattr(table, "n", None)
    if n is not None and (layout.width(in_reg) != n or layout.width(out_reg) != n):
        raise ValueError(
            f"permutation on {n} bits needs registers of width {n}, got "
            f"{layout.width(in_reg)} and {layout.width(out_reg)}"
        )
    if lookup.size and lookup.max() >= (1 << layout.width(out_reg)):
        raise ValueError(f"oracle values do not fit register {out_reg!r}")
    idx = _arange(layout.total_width)
    source = idx ^ (lookup[layout.values(in_reg)] << layout.shift(out_reg))
    return state._with(state.amplitudes[source])


def _as_bijection(bijection, size: int) -> np.ndarray:
    if callable(bijection) and not hasattr(bijection, "table"):
        arr = np.fromiter((int(bijection(v)) for v in range(size)), dtype=np.int64, count=size)
    else:
        arr = np.asarray(getattr(bijection, "table", bijection), dtype=np.int64)
    if arr.shape != (size,):
        raise ValueError(f"bijection needs {size} entries, got shape {arr.shape}")
    if not np.array_equal(np.sort(arr), np.arange(size)):
        raise ValueError("map is not a bijection on the register's value space")
    return arr


def basis_relabel(state: StateVector, register: str, bijection) -> StateVector:
    """Move the amplitude at register value v to register value bijection(v)."""
    layout = state.layout
    size = 1 << layout.width(register)
    forward = _as_bijection(bijection, size)
    inverse = np.empty_like(forward)
    inverse[forward] = np.arange(size)
    axis = _axis(layout, register)
    return state._with(np.take(state.tensor(), inverse, axis=axis))


@dataclass(frozen=True)
class Gate:
    """Elementary gate on global qubit indices; controls first, target last.

    MCZ is symmetric in its qubits; ``MCZ`` with k controls acts on k+1 qubits.
    """

    kind: str
    qubits: tuple[int, ...]

    _ARITY = {"H": 1, "X": 1, "Z": 1, "CNOT": 2, "CZ": 2, "SWAP": 2, "TOFFOLI": 3}

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if kind in self._ARITY:
            if len(qubits) != self._ARITY[kind]:
                raise ValueError(f"{kind} acts on {self._ARITY[kind]} qubits, got {qubits}")
        elif kind in ("MCZ", "MCX"):
            if len(qubits) < 2:
                raise ValueError(f"{kind} needs at least one control")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in {kind}{qubits}")
        if min(qubits) < 0:
            raise ValueError(f"negative qubit index in {kind}{qubits}")

    @property
    def controls(self) -> tuple[int, ...]:
        if self.kind in ("CNOT", "CZ", "TOFFOLI", "MCX", "MCZ"):
            return self.qubits[:-1]
        return ()

    @property
    def target(self) -> int:
        return self.qubits[-1]

    def __str__(self):
        return " ".join([self.kind, *(f"q{q}" for q in self.qubits)])


def _grouped(total: int, touched) -> tuple[tuple[int, ...], dict[int, int]]:
    """Shape that keeps each touched qubit as its own axis and merges the runs between."""
    shape, axis_of, run = [], {}, 0
    for q in range(total):
        if q in touched:
            if run:
                shape.append(1 << run)
                run = 0
            axis_of[q] = len(shape)
            shape.append(2)
        else:
            run += 1
    if run:
        shape.append(1 << run)
    return tuple(shape), axis_of


def _slot(ndim: int, axis_of: dict[int, int], fixed: dict[int, int]) -> tuple:
    index = [slice(None)] * ndim
    for q, v in fixed.items():
        index[axis_of[q]] = v
    return tuple(index)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    out = state.amplitudes.copy()
    apply_gate_inplace(out, state.layout.total_width, gate)
    return state._with(out)


def apply_gate_inplace(amps: np.ndarray, total: int, gate: Gate) -> None:
    """Apply ``gate`` to a flat amplitude buffer of ``total`` qubits, in place."""
    if max(gate.qubits) >= total:
        raise IndexError(f"gate {gate} outside a {total}-qubit layout")
    kind = gate.kind
    if kind == "H":
        view = amps.reshape(1 << gate.target, 2, 1 << (total - gate.target - 1))
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] += a1
        view[:, 0, :] *= _SQRT_HALF
        a1 -= a0
        a1 *= -_SQRT_HALF
        return
    shape, axis_of = _grouped(total, set(gate.qubits))
    if len(shape) > 32:
        amps[:] = _apply_gate_indexed(amps, total, gate)
        return

    view = amps.reshape(shape)
    nd = len(shape)
    on = {q: 1 for q in gate.controls}
    if kind in ("Z", "CZ", "MCZ"):
        view[_slot(nd, axis_of, {**on, gate.target: 1})] *= -1
        return
    if kind == "SWAP":
        a, b = gate.qubits
        lo, hi = _slot(nd, axis_of, {a: 0, b: 1}), _slot(nd, axis_of, {a: 1, b: 0})
    else:  # X, CNOT, TOFFOLI, MCX
        lo = _slot(nd, axis_of, {**on, gate.target: 0})
        hi = _slot(nd, axis_of, {**on, gate.target: 1})
    tmp = view[lo].copy()
    view[lo] = view[hi]
    view[hi] = tmp


def _apply_gate_indexed(amps: np.ndarray, total: int, gate: Gate) -> np.ndarray:
    # fallback for layouts wider than numpy's dimension limit
    idx = _arange(total)
    bit = lambda q: 1 << (total - 1 - q)  # noqa: E731
    if gate.kind == "SWAP":
        a, b = bit(gate.qubits[0]), bit(gate.qubits[1])
        differ = ((idx & a) != 0) != ((idx & b) != 0)
        return amps[np.where(differ, idx ^ (a | b), idx)]
    ctrl = 0
    for q in gate.controls:
        ctrl |= bit(q)
    if gate.kind in ("Z", "CZ", "MCZ"):
        allbits = ctrl | bit(gate.target)
        out = amps.copy()
        out[(idx & allbits) == allbits] *= -1
        return out
    source = np.where((idx & ctrl) == ctrl, idx ^ bit(gate.target), idx)
    return amps[source]


def marginal(state: StateVector, register: str) -> np.ndarray:
    """Marginal probabilities of ``register`` as an array indexed by value."""
    axis = _axis(state.layout, register)
    probs = np.abs(state.tensor()) ** 2
    other = tuple(i for i in range(probs.ndim) if i != axis)
    return probs.sum(axis=other) if other else probs


def exact_distribution(state: StateVector, register: str) -> dict[str, float]:
    """Nonzero marginal probabilities keyed by MSB-first bit-string."""
    probs = marginal(state, register)
    width = state.layout.width(register)
    return {format(v, f"0{width}b"): float(p) for v, p in enumerate(probs) if p > ZERO_TOL}


def dense_matrix(op, width: int | None = None) -> np.ndarray:
    """Matrix of ``op`` on its non-ancilla registers, built column by column.

    ``op`` needs ``layout`` and ``apply(state)``; registers listed in its
    optional ``ancillas`` attribute are prepared in |0> and projected onto |0>
    on output, so the result is the action on the clean-ancilla subspace.
    """
    layout = op.layout
    ancillas = tuple(getattr(op, "ancillas", ()))
    logical = [(name, w) for name, w in layout.registers if name not in ancillas]
    logical_width = sum(w for _, w in logical)
    if width is not None and width != logical_width:
        raise ValueError(f"operator acts on {logical_width} qubits, not {width}")
    if logical_width > DENSE_MAX_QUBITS:
        raise ValueError(
            f"dense matrix of width {logical_width} exceeds the guard of {DENSE_MAX_QUBITS}"
        )
    dim = 1 << logical_width
    names = list(layout.names)
    anc_axes = [names.index(a) for a in ancillas]
    zero_anc = layout.values(ancillas[0]) == 0 if ancillas else None
    if ancillas:
        for a in ancillas[1:]:
            zero_anc = zero_anc & (layout.values(a) == 0)
    columns_idx = np.flatnonzero(zero_anc) if ancillas else np.arange(dim)
    matrix = np.empty((dim, dim), dtype=np.complex128)
    for col, flat in enumerate(columns_idx):
        amps = np.zeros(layout.dimension, dtype=np.complex128)
        amps[flat] = 1.0
        out = op.apply(StateVector(layout, amps))
        tensor = out.tensor()
        if anc_axes:
            slicer = tuple(0 if i in anc_axes else slice(None) for i in range(tensor.ndim))
            tensor = tensor[slicer]
        matrix[:, col] = tensor.reshape(-1)
    return matrix
