"""Gate-level lowerings of the operator catalog, with ancilla and oracle accounting.

Oracle calls (U_f and U_{f^-1}) stay opaque wide gates and are counted, never
decomposed.  Multi-controlled X/Z gates are kept as counted intermediates;
:func:`decompose` expands them into Toffoli ladders on clean ancillas.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .operators import OperatorHandle, pair_mask
from .permutations import PermutationTable, as_value, inverse
from .statevector import (
    Gate,
    RegisterLayout,
    StateVector,
    apply_gate_inplace,
    dense_matrix,
    random_state,
    xor_oracle,
)

__all__ = [
    "EquivalenceReport",
    "GateCircuit",
    "GateCounts",
    "OracleCall",
    "decompose",
    "lower",
    "lower_diffusion",
    "lower_m_f",
    "lower_q",
    "lower_q_prime",
    "lower_reflect_zero",
    "lower_tag_full",
    "lower_tag_pair",
    "lower_u_f",
    "multi_controlled_decomposition",
    "verify_equivalence",
]


@dataclass(frozen=True, eq=False)
class OracleCall:
    """Opaque XOR oracle |a>|b> -> |a>|g(a) xor b> between two registers."""

    label: str
    table: np.ndarray = field(repr=False)
    in_reg: str
    out_reg: str

    def __str__(self):
        return f"ORACLE {self.label} {self.in_reg} {self.out_reg}"


Op = Union[Gate, OracleCall]


@dataclass(frozen=True)
class GateCounts:
    tallies: dict
    oracle_calls: int
    ancilla_qubits: int

    @property
    def total_gates(self) -> int:
        return sum(self.tallies.values())

    def to_dict(self) -> dict:
        return {
            "gates": dict(sorted(self.tallies.items())),
            "total_gates": self.total_gates,
            "oracle_calls": self.oracle_calls,
            "ancilla_qubits": self.ancilla_qubits,
        }


@dataclass(frozen=True, eq=False)
class GateCircuit:
    """Gate sequence over a register layout.

    Registers named in ``ancillas`` must enter and leave in |0>.  A global
    phase is carried separately and applied after the gates; it is only
    observable once the circuit is placed under a control.
    """

    layout: RegisterLayout
    ops: tuple = ()
    ancillas: tuple[str, ...] = ()
    global_phase: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "ancillas", tuple(self.ancillas))
        for a in self.ancillas:
            self.layout.width(a)
        total = self.layout.total_width
        for op in self.ops:
            if isinstance(op, Gate):
                if max(op.qubits) >= total:
                    raise IndexError(f"{op} outside a {total}-qubit layout")
            else:
                self.layout.width(op.in_reg)
                self.layout.width(op.out_reg)

    @property
    def oracle_calls(self) -> int:
        return sum(isinstance(op, OracleCall) for op in self.ops)

    @property
    def gates(self) -> list[Gate]:
        return [op for op in self.ops if isinstance(op, Gate)]

    def apply(self, state: StateVector) -> StateVector:
        if state.layout != self.layout:
            raise ValueError("state layout does not match the circuit layout")
        total = self.layout.total_width
        amps = state.amplitudes.copy()
        for op in self.ops:
            if isinstance(op, Gate):
                apply_gate_inplace(amps, total, op)
            else:
                amps = xor_oracle(StateVector(self.layout, amps), op.in_reg, op.out_reg, op.table).amplitudes
        if self.global_phase != 1:
            amps *= self.global_phase
        return StateVector(self.layout, amps)

    def counts(self) -> GateCounts:
        tallies = Counter(op.kind for op in self.ops if isinstance(op, Gate))
        ancilla = sum(self.layout.width(a) for a in self.ancillas)
        return GateCounts(dict(sorted(tallies.items())), self.oracle_calls, ancilla)

    def inverse(self) -> "GateCircuit":
        # every gate in the set, and every XOR oracle, is self-inverse
        return GateCircuit(self.layout, tuple(reversed(self.ops)), self.ancillas,
                           np.conj(self.global_phase))

    def then(self, other: "GateCircuit") -> "GateCircuit":
        """Run ``self`` and then ``other`` (same layout)."""
        if other.layout != self.layout:
            raise ValueError("cannot compose circuits over different layouts")
        ancillas = self.ancillas + tuple(a for a in other.ancillas if a not in self.ancillas)
        return GateCircuit(self.layout, self.ops + other.ops, ancillas,
                           self.global_phase * other.global_phase)

    def embed(self, layout: RegisterLayout, rename: dict | None = None,
              ancillas: Iterable[str] | None = None) -> "GateCircuit":
        """Re-index onto a larger layout, optionally renaming registers."""
        rename = rename or {}
        where = {}
        for name, width in self.layout.registers:
            target = rename.get(name, name)
            if layout.width(target) != width:
                raise ValueError(f"register {name!r} -> {target!r} changes width")
            for pos in range(1, width + 1):
                where[self.layout.qubit(name, pos)] = layout.qubit(target, pos)
        ops = []
        for op in self.ops:
            if isinstance(op, Gate):
                ops.append(Gate(op.kind, tuple(where[q] for q in op.qubits)))
            else:
                ops.append(OracleCall(op.label, op.table, rename.get(op.in_reg, op.in_reg),
                                      rename.get(op.out_reg, op.out_reg)))
        if ancillas is None:
            ancillas = [rename.get(a, a) for a in self.ancillas]
        return GateCircuit(layout, tuple(ops), tuple(ancillas), self.global_phase)

    def dump(self) -> str:
        lines = [f"circuit v1 width={self.layout.total_width}"]
        regs = " ".join(f"{n}:{w}" for n, w in self.layout.registers)
        lines.append(f"# registers {regs}")
        if self.ancillas:
            lines.append(f"# ancillas {' '.join(self.ancillas)}")
        if self.global_phase != 1:
            lines.append(f"# global_phase {_fmt_phase(self.global_phase)}")
        lines += [str(op) for op in self.ops]
        return "\n".join(lines) + "\n"


def _fmt_phase(phase: complex) -> str:
    phase = complex(phase)
    if phase.imag == 0:
        return f"{phase.real:g}"
    return f"{phase.real:g}{phase.imag:+g}j"


class _Builder:
    def __init__(self, layout: RegisterLayout, ancillas: Sequence[str] = ()):
        self.layout = layout
        self.ancillas = tuple(ancillas)
        self.ops: list[Op] = []

    def q(self, reg: str, pos: int) -> int:
        return self.layout.qubit(reg, pos)

    def add(self, kind: str, *qubits: int) -> None:
        self.ops.append(Gate(kind, qubits))

    def oracle(self, label: str, table, in_reg: str, out_reg: str) -> None:
        self.ops.append(OracleCall(label, np.asarray(getattr(table, "table", table)), in_reg, out_reg))

    def phase_on_all_ones(self, qubits: Sequence[int]) -> None:
        """-1 on the all-ones pattern of ``qubits``."""
        if len(qubits) == 1:
            self.add("Z", qubits[0])
        elif len(qubits) == 2:
            self.add("CZ", *qubits)
        else:
            self.add("MCZ", *qubits)

    def build(self, phase: complex = 1.0) -> GateCircuit:
        return GateCircuit(self.layout, tuple(self.ops), self.ancillas, phase)


def lower_u_f(f: PermutationTable, in_reg: str = "Y", out_reg: str = "A") -> GateCircuit:
    b = _Builder(RegisterLayout(((in_reg, f.n), (out_reg, f.n))))
    b.oracle("U_f", f, in_reg, out_reg)
    return b.build()


def lower_tag_full(f: PermutationTable, x: str | int | None = None, x_reg: str = "X",
                   y_reg: str = "Y", anc: str = "A") -> GateCircuit:
    """Full tag via two oracle calls and an n-bit equality comparator on the copy.

    With ``x`` classical the comparator reduces to X gates on the zero bits of
    x, which is the U_f (I (x) (I - 2|x><x|)) U_f form.
    """
    n = f.n
    if x is not None:
        xv = as_value(x, n)
        b = _Builder(RegisterLayout(((y_reg, n), (anc, n))), [anc])
        flips = [b.q(anc, i) for i in range(1, n + 1) if not (xv >> (n - i)) & 1]
        b.oracle("U_f", f, y_reg, anc)
        for q in flips:
            b.add("X", q)
        b.phase_on_all_ones([b.q(anc, i) for i in range(1, n + 1)])
        for q in flips:
            b.add("X", q)
        b.oracle("U_f", f, y_reg, anc)
        return b.build()

    b = _Builder(RegisterLayout(((x_reg, n), (y_reg, n), (anc, n))), [anc])
    b.oracle("U_f", f, y_reg, anc)
    for i in range(1, n + 1):
        b.add("CNOT", b.q(x_reg, i), b.q(anc, i))
        b.add("X", b.q(anc, i))
    b.phase_on_all_ones([b.q(anc, i) for i in range(1, n + 1)])
    for i in reversed(range(1, n + 1)):
        b.add("X", b.q(anc, i))
        b.add("CNOT", b.q(x_reg, i), b.q(anc, i))
    b.oracle("U_f", f, y_reg, anc)
    return b.build()


def lower_tag_pair(f: PermutationTable, k: int, x_reg: str = "X", y_reg: str = "Y",
                   anc: str = "A") -> GateCircuit:
    """O[k]: copy f(y) into the ancilla, compare bits k and k+1 with x, CZ, undo."""
    n = f.n
    pair_mask(n, k)
    b = _Builder(RegisterLayout(((x_reg, n), (y_reg, n), (anc, n))), [anc])
    ak, ak1 = b.q(anc, k), b.q(anc, k + 1)
    xk, xk1 = b.q(x_reg, k), b.q(x_reg, k + 1)
    b.oracle("U_f", f, y_reg, anc)
    b.add("CNOT", xk, ak)
    b.add("CNOT", xk1, ak1)
    b.add("X", ak)
    b.add("X", ak1)
    b.add("CZ", ak, ak1)
    b.add("X", ak1)
    b.add("X", ak)
    b.add("CNOT", xk1, ak1)
    b.add("CNOT", xk, ak)
    b.oracle("U_f", f, y_reg, anc)
    return b.build()


def lower_reflect_zero(width: int, register: str = "Y") -> GateCircuit:
    """2|0><0| - I: X-conjugated all-ones phase, with the -1 kept as a global phase."""
    if width < 1:
        raise ValueError("width must be >= 1")
    b = _Builder(RegisterLayout(((register, width),)))
    qubits = b.layout.qubits(register)
    for q in qubits:
        b.add("X", q)
    b.phase_on_all_ones(qubits)
    for q in qubits:
        b.add("X", q)
    return b.build(phase=-1.0)


def lower_diffusion(width: int, register: str = "Y") -> GateCircuit:
    core = lower_reflect_zero(width, register)
    hs = tuple(Gate("H", (q,)) for q in core.layout.qubits(register))
    return GateCircuit(core.layout, hs + core.ops + hs, (), core.global_phase)


def lower_q_prime(n: int, j: int, x_reg: str = "X", z_reg: str = "Z", flag: str = "F",
                  literal: bool = False, compensate: bool = True) -> GateCircuit:
    """Prefix comparator, flag-conditioned reflection on Z's suffix, uncompute.

    Under the flag the X-MCZ-X core realizes I - 2|0><0| on the suffix.  The
    exact conjugate of Q_j needs an overall -1 (so unmatched prefixes see -I),
    kept as a global phase.  ``literal=True`` instead adds Z on the flag, which
    gives the identity on unmatched prefixes.  ``compensate=False`` drops the
    phase fix-up; it exists for regression tests only.
    """
    if n % 2 or not 0 <= j <= n // 2 - 1:
        raise ValueError(f"need even n and 0 <= j <= n/2 - 1, got n={n}, j={j}")
    if j == 0:
        diff = lower_diffusion(n, z_reg)
        layout = RegisterLayout(((x_reg, n), (z_reg, n)))
        out = diff.embed(layout)
        return out if compensate else GateCircuit(out.layout, out.ops, out.ancillas, 1.0)

    p = 2 * j
    b = _Builder(RegisterLayout(((x_reg, n), (z_reg, n), (flag, 1))), [flag])
    fq = b.q(flag, 1)
    prefix_z = [b.q(z_reg, i) for i in range(1, p + 1)]
    suffix = [b.q(z_reg, i) for i in range(p + 1, n + 1)]

    def compare():
        for i in range(1, p + 1):
            b.add("CNOT", b.q(x_reg, i), b.q(z_reg, i))
            b.add("X", b.q(z_reg, i))

    def uncompare():
        for i in reversed(range(1, p + 1)):
            b.add("X", b.q(z_reg, i))
            b.add("CNOT", b.q(x_reg, i), b.q(z_reg, i))

    compare()
    b.add("MCX", *prefix_z, fq)
    for q in suffix:
        b.add("H", q)
    for q in suffix:
        b.add("X", q)
    b.add("MCZ", fq, *suffix)
    for q in suffix:
        b.add("X", q)
    if literal and compensate:
        b.add("Z", fq)
    for q in suffix:
        b.add("H", q)
    b.add("MCX", *prefix_z, fq)
    uncompare()
    phase = -1.0 if (compensate and not literal) else 1.0
    return b.build(phase)


def lower_m_f(f: PermutationTable, register: str = "Y", anc: str = "A") -> GateCircuit:
    """|x>|0> -> U_f -> |x>|f(x)> -> SWAP -> |f(x)>|x> -> U_{f^-1} -> |f(x)>|0>."""
    n = f.n
    b = _Builder(RegisterLayout(((register, n), (anc, n))), [anc])
    b.oracle("U_f", f, register, anc)
    for i in range(1, n + 1):
        r, a = b.q(register, i), b.q(anc, i)
        b.add("CNOT", r, a)
        b.add("CNOT", a, r)
        b.add("CNOT", r, a)
    b.oracle("U_f_inv", inverse(f), register, anc)
    return b.build()


def lower_q(f: PermutationTable, j: int, x_reg: str = "X", y_reg: str = "Y", anc: str = "A",
            flag: str = "F") -> GateCircuit:
    """Q_j = M_f^dagger Q'_j M_f with M_f on the second register."""
    n = f.n
    q_prime = lower_q_prime(n, j, x_reg, y_reg, flag)
    regs = [(x_reg, n), (y_reg, n), (anc, n)]
    ancillas = [anc]
    if j > 0:
        regs.append((flag, 1))
        ancillas.append(flag)
    layout = RegisterLayout(tuple(regs))
    m_f = lower_m_f(f, y_reg, anc).embed(layout, ancillas=ancillas)
    middle = q_prime.embed(layout, ancillas=ancillas)
    return m_f.then(middle).then(m_f.inverse())


def lower(handle: OperatorHandle) -> GateCircuit:
    """Lower an operator handle to its gate circuit."""
    p = handle.params
    regs = [name for name, _ in handle.registers]
    name = handle.name
    if name == "U_f":
        return lower_u_f(p["f"], regs[0], regs[1])
    if name == "O_full":
        if "x" in p:
            return lower_tag_full(p["f"], p["x"], y_reg=regs[0], anc=_fresh("A", regs))
        return lower_tag_full(p["f"], None, regs[0], regs[1], anc=_fresh("A", regs))
    if name == "O_pair" and "x" not in p:
        return lower_tag_pair(p["f"], p["k"], regs[0], regs[1], anc=_fresh("A", regs))
    if name == "Diffusion":
        return lower_diffusion(p["width"], regs[0])
    if name == "Q_prime":
        return lower_q_prime(p["n"], p["j"], regs[0], regs[1], flag=_fresh("F", regs),
                             literal=p.get("literal", False))
    if name == "M_f":
        return lower_m_f(p["f"], regs[0], anc=_fresh("A", regs))
    if name in ("Q", "Q_conjugated") and "x" not in p:
        return lower_q(p["f"], p["j"], regs[0], regs[1], anc=_fresh("A", regs),
                       flag=_fresh("F", regs + ["A"]))
    raise NotImplementedError(f"no lowering for {handle}")


def _fresh(base: str, taken: Sequence[str]) -> str:
    name, i = base, 0
    while name in taken:
        i += 1
        name = f"{base}{i}"
    return name


def multi_controlled_decomposition(gate: Gate) -> GateCircuit:
    """Expand MCZ/MCX into {H, CNOT, CZ, TOFFOLI} on clean ancillas.

    One or two controls are emitted directly (CCZ as H-conjugated Toffoli).
    With c > 2 controls a Toffoli ladder computes the conjunction into c-1
    ancillas, a CZ/CNOT applies the operation, and the ladder is undone.
    The returned layout is a register ``q`` wide enough for the gate's
    indices, followed by an ancilla register ``mc`` when one is needed.
    """
    if gate.kind not in ("MCZ", "MCX"):
        raise ValueError(f"expected MCZ or MCX, got {gate.kind}")
    width = max(gate.qubits) + 1
    controls, target = list(gate.controls), gate.target
    c = len(controls)
    regs = [("q", width)]
    if c > 2:
        regs.append(("mc", c - 1))
    b = _Builder(RegisterLayout(tuple(regs)), ["mc"] if c > 2 else [])
    _emit_mc(b, gate.kind, controls, target, [b.q("mc", i) for i in range(1, c)] if c > 2 else [])
    return b.build()


def _emit_mc(b: _Builder, kind: str, controls: list[int], target: int, work: list[int]) -> None:
    c = len(controls)
    if c == 1:
        b.add("CZ" if kind == "MCZ" else "CNOT", controls[0], target)
        return
    if c == 2:
        if kind == "MCZ":
            b.add("H", target)
            b.add("TOFFOLI", *controls, target)
            b.add("H", target)
        else:
            b.add("TOFFOLI", *controls, target)
        return
    ladder = [(controls[0], controls[1], work[0])]
    for i in range(2, c):
        ladder.append((work[i - 2], controls[i], work[i - 1]))
    for step in ladder:
        b.add("TOFFOLI", *step)
    b.add("CZ" if kind == "MCZ" else "CNOT", work[c - 2], target)
    for step in reversed(ladder):
        b.add("TOFFOLI", *step)


def decompose(circuit: GateCircuit, work_reg: str = "MC") -> GateCircuit:
    """Replace every MCZ/MCX by elementary gates, appending a shared ancilla register."""
    need = max((len(g.controls) - 1 for g in circuit.gates
                if g.kind in ("MCZ", "MCX") and len(g.controls) > 2), default=0)
    layout = circuit.layout
    ancillas = circuit.ancillas
    if need:
        layout = RegisterLayout(layout.registers + ((work_reg, need),))
        ancillas = ancillas + (work_reg,)
    b = _Builder(layout, ancillas)
    base = circuit.layout.total_width
    work = list(range(base, base + need))
    for op in circuit.ops:
        if isinstance(op, Gate) and op.kind in ("MCZ", "MCX"):
            _emit_mc(b, op.kind, list(op.controls), op.target, work)
        else:
            b.ops.append(op)
    return b.build(circuit.global_phase)


@dataclass(frozen=True)
class EquivalenceReport:
    mode: str
    width: int
    max_deviation: float
    max_deviation_up_to_phase: float
    ancilla_leakage: float

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_deviation <= tol and self.ancilla_leakage <= tol

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "width": self.width,
            "max_deviation": self.max_deviation,
            "max_deviation_up_to_phase": self.max_deviation_up_to_phase,
            "ancilla_leakage": self.ancilla_leakage,
        }


def _logical_registers(circuit: GateCircuit) -> tuple:
    return tuple((n, w) for n, w in circuit.layout.registers if n not in circuit.ancillas)


def _phase_aligned(a: np.ndarray, b: np.ndarray) -> float:
    overlap = np.vdot(b.reshape(-1), a.reshape(-1))
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.abs(a - phase * b).max())


def verify_equivalence(circuit: GateCircuit, handle, mode: str = "dense",
                       samples: int = 100, seed: int = 0) -> EquivalenceReport:
    """Compare a lowered circuit with a semantic operator on the clean-ancilla subspace.

    ``max_deviation`` compares with exact phases; the up-to-global-phase
    figure is reported alongside.  ``ancilla_leakage`` is the largest
    probability left outside ancilla |0> for any tested input.
    """
    logical = _logical_registers(circuit)
    if tuple(handle.registers) != logical:
        raise ValueError(f"circuit acts on {logical}, operator on {tuple(handle.registers)}")
    width = sum(w for _, w in logical)
    if mode == "dense":
        u_circ = dense_matrix(circuit)
        u_sem = dense_matrix(handle)
        leakage = float(np.abs(1.0 - np.sum(np.abs(u_circ) ** 2, axis=0)).max())
        return EquivalenceReport("dense", width, float(np.abs(u_circ - u_sem).max()),
                                 _phase_aligned(u_circ, u_sem), leakage)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if samples < 100:
        raise ValueError("sampled mode uses at least 100 random states")
    rng = np.random.default_rng(seed)
    small = RegisterLayout(logical)
    names = list(circuit.layout.names)
    anc_axes = [names.index(a) for a in circuit.ancillas]
    worst = worst_phase = leak = 0.0
    for _ in range(samples):
        psi = random_state(small, rng)
        full = np.zeros([1 << w for _, w in circuit.layout.registers], dtype=np.complex128)
        slicer = tuple(0 if i in anc_axes else slice(None) for i in range(full.ndim))
        full[slicer] = psi.tensor()
        out = circuit.apply(StateVector(circuit.layout, full.reshape(-1))).tensor()
        projected = out[slicer].reshape(-1)
        expected = handle.apply(psi).amplitudes
        leak = max(leak, abs(1.0 - float(np.vdot(projected, projected).real)))
        worst = max(worst, float(np.abs(projected - expected).max()))
        worst_phase = max(worst_phase, _phase_aligned(projected, expected))
    return EquivalenceReport("sampled", width, worst, worst_phase, leak)
