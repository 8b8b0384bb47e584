"""Exact inversion (n/2 tag-and-reflect rounds), Grover search and Grover inversion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import circuits
from .operators import make_diffusion, make_q, make_tag_full, make_tag_pair, prefix_mask
from .permutations import PermutationTable, as_value, inverse, to_bits
from .statevector import (
    ZERO_TOL,
    Gate,
    RegisterLayout,
    StateVector,
    apply_gate,
    basis_relabel,
    basis_state,
    hadamard_all,
    marginal,
    phase_flip,
    xor_oracle,
)

__all__ = [
    "GroverTrace",
    "IterationRecord",
    "IterationTrace",
    "QueryComparison",
    "compare_query_counts",
    "grover_invert",
    "grover_search",
    "grover_success_probability",
    "invert_exact",
    "optimal_iterations",
    "prepare_round_state",
    "round_residual",
]


@dataclass(frozen=True)
class IterationRecord:
    j: int
    support_size: int
    common_amplitude: float
    expected_amplitude: float
    amplitude_spread: float
    max_off_support: float
    tagged_size: int
    prior_support_size: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class IterationTrace:
    n: int
    x: str
    records: list[IterationRecord] = field(default_factory=list)
    success_probability: float = 0.0
    tagging_queries: int = 0

    @property
    def iterations(self) -> int:
        return len(self.records)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "x": self.x,
            "iterations": self.iterations,
            "success_probability": self.success_probability,
            "tagging_queries": self.tagging_queries,
            "records": [r.to_dict() for r in self.records],
        }


def _record(j: int, amps: np.ndarray, expected_support: np.ndarray, n: int,
            tagged: int, prior: int) -> IterationRecord:
    on = amps[expected_support]
    off = amps[~expected_support]
    support = int(np.count_nonzero(np.abs(amps) > ZERO_TOL))
    common = float(on.real.mean()) if on.size else 0.0
    return IterationRecord(
        j=j,
        support_size=support,
        common_amplitude=common,
        expected_amplitude=2.0 ** (j + 1) / math.sqrt(2.0 ** n),
        amplitude_spread=float(np.abs(on - common).max()) if on.size else 0.0,
        max_off_support=float(np.abs(off).max()) if off.size else 0.0,
        tagged_size=tagged,
        prior_support_size=prior,
    )


def _require_even(n: int) -> None:
    if n % 2:
        raise ValueError(f"exact inversion needs an even bit-width, got n={n}")


def invert_exact(f: PermutationTable, x: str | int, backend: str = "semantic") -> tuple[str, IterationTrace]:
    """Find f^{-1}(x) with n/2 rounds of [O[2j+1]; Q_j] starting from uniform Y.

    The ``semantic`` backend keeps the first register classical and evolves
    the 2^n amplitudes of Y only.  The ``circuit`` backend simulates the
    lowered gate circuit on X, Y and the ancillas (small n only).
    """
    n = f.n
    _require_even(n)
    xv = as_value(x, n)
    if backend == "semantic":
        return _invert_semantic(f, xv)
    if backend == "circuit":
        return _invert_circuit(f, xv)
    raise ValueError(f"unknown backend {backend!r}")


def _invert_semantic(f: PermutationTable, xv: int) -> tuple[str, IterationTrace]:
    n = f.n
    trace = IterationTrace(n, to_bits(xv, n))
    state = hadamard_all(basis_state(RegisterLayout.of(Y=n), {"Y": 0}), "Y")
    support = np.ones(1 << n, dtype=bool)
    for j in range(n // 2):
        tag = make_tag_pair(f, 2 * j + 1).block(xv)
        after = prefix_mask(f.table, xv, n, 2 * j + 2)
        state = tag.apply(state)
        trace.tagging_queries += 2
        state = make_q(f, j).block(xv).apply(state)
        trace.records.append(_record(j, state.amplitudes, after, n,
                                     int(np.count_nonzero(after & support)),
                                     int(np.count_nonzero(support))))
        support = after
    probs = marginal(state, "Y")
    y = int(np.argmax(probs))
    trace.success_probability = float(probs[f.preimage(xv)])
    return to_bits(y, n), trace


def algorithm_a_circuit(f: PermutationTable, x: str | int) -> circuits.GateCircuit:
    """Full gate circuit for the exact inversion on registers X, Y, A, F.

    Includes the X-register basis preparation and the Hadamards on Y.
    """
    n = f.n
    _require_even(n)
    xv = as_value(x, n)
    regs = [("X", n), ("Y", n), ("A", n)]
    if n >= 4:
        regs.append(("F", 1))
    layout = RegisterLayout(tuple(regs))
    ancillas = [name for name, _ in regs[2:]]
    circ = _preparation(layout, xv, n, ancillas)
    for j in range(n // 2):
        circ = circ.then(circuits.lower_tag_pair(f, 2 * j + 1).embed(layout, ancillas=ancillas))
        circ = circ.then(circuits.lower_q(f, j).embed(layout, ancillas=ancillas))
    return circ


def _preparation(layout: RegisterLayout, xv: int, n: int, ancillas) -> circuits.GateCircuit:
    ops = [Gate("X", (layout.qubit("X", i),)) for i in range(1, n + 1) if (xv >> (n - i)) & 1]
    ops += [Gate("H", (q,)) for q in layout.qubits("Y")]
    return circuits.GateCircuit(layout, ops, ancillas)


def _invert_circuit(f: PermutationTable, xv: int) -> tuple[str, IterationTrace]:
    n = f.n
    trace = IterationTrace(n, to_bits(xv, n))
    full = algorithm_a_circuit(f, xv)
    layout = full.layout
    # replay round by round so the trace can be read between rounds
    prep = _preparation(layout, xv, n, full.ancillas)
    state = prep.apply(basis_state(layout, {name: 0 for name in layout.names}))
    support = np.ones(1 << n, dtype=bool)
    for j in range(n // 2):
        tag = circuits.lower_tag_pair(f, 2 * j + 1).embed(layout, ancillas=full.ancillas)
        q = circuits.lower_q(f, j).embed(layout, ancillas=full.ancillas)
        state = q.apply(tag.apply(state))
        trace.tagging_queries += tag.oracle_calls
        y_amps = _y_slice(state, xv)
        after = prefix_mask(f.table, xv, n, 2 * j + 2)
        trace.records.append(_record(j, y_amps, after, n,
                                     int(np.count_nonzero(after & support)),
                                     int(np.count_nonzero(support))))
        support = after
    probs = marginal(state, "Y")
    trace.success_probability = float(probs[f.preimage(xv)])
    return to_bits(int(np.argmax(probs)), n), trace


def _y_slice(state: StateVector, xv: int) -> np.ndarray:
    """Y amplitudes with X = x and every ancilla in |0>."""
    tensor = state.tensor()
    index = (xv, slice(None)) + (0,) * (tensor.ndim - 2)
    return tensor[index]


def prepare_round_state(f: PermutationTable, x: str | int, j: int, route: str = "rounds") -> StateVector:
    """The normalized uniform superposition over {y : f(y) matches x on 2j bits}.

    ``rounds`` reaches it by running j tag-and-reflect rounds from uniform Y;
    ``relabel`` prepares |x_(1,2j)>|uniform suffix> directly and applies
    M_f^{-1}.  Either route shows the state is preparable once the
    reflections are available, and vice versa.
    """
    n = f.n
    _require_even(n)
    if not 0 <= j <= n // 2:
        raise ValueError(f"j={j} outside [0, {n // 2}]")
    xv = as_value(x, n)
    layout = RegisterLayout.of(Y=n)
    if route == "rounds":
        state = hadamard_all(basis_state(layout, {"Y": 0}), "Y")
        for r in range(j):
            state = make_tag_pair(f, 2 * r + 1).block(xv).apply(state)
            state = make_q(f, r).block(xv).apply(state)
        return state
    if route == "relabel":
        p = 2 * j
        head = (xv >> (n - p)) << (n - p) if p else 0
        state = basis_state(layout, {"Y": head})
        for q in range(p, n):
            state = apply_gate(state, Gate("H", (q,)))
        return basis_relabel(state, "Y", inverse(f))
    raise ValueError(f"unknown route {route!r}")


def round_residual(f: PermutationTable, x: str | int, j: int, tag_bits: int = 2) -> float:
    """Norm left outside the tagged set after one round started from the exact round-j state.

    With the two-bit tag exactly a quarter of the support is marked and the
    reflection removes everything else; ``tag_bits=1`` marks half and leaves
    a residual of norm sqrt(1/2).
    """
    n = f.n
    xv = as_value(x, n)
    if tag_bits not in (1, 2):
        raise ValueError("tag_bits must be 1 or 2")
    state = prepare_round_state(f, xv, j)
    tagged = prefix_mask(f.table, xv, n, 2 * j + tag_bits)
    state = phase_flip(state, lambda v: tagged[v["Y"]])
    state = make_q(f, j).block(xv).apply(state)
    return float(np.linalg.norm(state.amplitudes[~tagged]))


def optimal_iterations(n: int) -> int:
    """floor(pi/4 * sqrt(2^n))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return int(math.floor(math.pi / 4 * math.sqrt(2.0 ** n)))


def grover_success_probability(n: int, k: int) -> float:
    """sin^2((2k+1) arcsin(2^{-n/2})) for a single marked item."""
    theta = math.asin(2.0 ** (-n / 2))
    return math.sin((2 * k + 1) * theta) ** 2


@dataclass
class GroverTrace:
    n: int
    target: str
    probabilities: list[float] = field(default_factory=list)
    predicted: list[float] = field(default_factory=list)
    oracle: str = "semantic"

    @property
    def iterations(self) -> int:
        return len(self.probabilities) - 1

    @property
    def success_probability(self) -> float:
        return self.probabilities[-1]

    @property
    def queries(self) -> int:
        return 2 * self.iterations

    @property
    def max_deviation(self) -> float:
        return max(abs(a - b) for a, b in zip(self.probabilities, self.predicted))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "target": self.target,
            "iterations": self.iterations,
            "queries": self.queries,
            "oracle": self.oracle,
            "success_probability": self.success_probability,
            "probabilities": list(self.probabilities),
            "predicted": list(self.predicted),
        }


def _grover_loop(n: int, target: int, k: int, tag, register: str, layout: RegisterLayout,
                 oracle: str) -> GroverTrace:
    if k < 0:
        raise ValueError("iteration count must be >= 0")
    trace = GroverTrace(n, to_bits(target, n), oracle=oracle)
    state = hadamard_all(basis_state(layout, {name: 0 for name in layout.names}), register)
    diffusion = make_diffusion(n, register)
    trace.probabilities.append(float(marginal(state, register)[target]))
    trace.predicted.append(grover_success_probability(n, 0))
    for i in range(1, k + 1):
        state = diffusion.apply(tag(state))
        trace.probabilities.append(float(marginal(state, register)[target]))
        trace.predicted.append(grover_success_probability(n, i))
    return trace


def grover_search(marked: str, iterations: int, oracle: str = "semantic") -> GroverTrace:
    """Tag-then-diffuse search for a single marked n-bit string.

    ``oracle="query"`` realizes the tag with two calls to the indicator
    oracle |x>|b> -> |x>|g(x) xor b> around (2|1><1| - I) on b, which equals
    the semantic tag up to a global sign.
    """
    n = len(marked)
    m = as_value(marked, n)
    if oracle == "semantic":
        layout = RegisterLayout.of(X=n)
        tag = lambda s: phase_flip(s, lambda v: v["X"] == m)  # noqa: E731
    elif oracle == "query":
        layout = RegisterLayout.of(X=n, B=1)
        indicator = np.zeros(1 << n, dtype=np.int64)
        indicator[m] = 1

        def tag(s):
            s = xor_oracle(s, "X", "B", indicator)
            s = phase_flip(s, lambda v: v["B"] == 0)
            return xor_oracle(s, "X", "B", indicator)
    else:
        raise ValueError(f"unknown oracle mode {oracle!r}")
    return _grover_loop(n, m, iterations, tag, "X", layout, oracle)


def grover_invert(f: PermutationTable, x: str | int, iterations: int, oracle: str = "semantic") -> GroverTrace:
    """Grover iteration with the full tag I - 2|f^-1(x)><f^-1(x)|.

    ``oracle="query"`` builds the tag as U_f (I (x) (I - 2|x><x|)) U_f with an
    n-qubit ancilla in |0>.
    """
    n = f.n
    xv = as_value(x, n)
    target = f.preimage(xv)
    if oracle == "semantic":
        layout = RegisterLayout.of(Y=n)
        tag = make_tag_full(f, xv).apply
    elif oracle == "query":
        layout = RegisterLayout.of(Y=n, A=n)

        def tag(s):
            s = xor_oracle(s, "Y", "A", f)
            s = phase_flip(s, lambda v: v["A"] == xv)
            return xor_oracle(s, "Y", "A", f)
    else:
        raise ValueError(f"unknown oracle mode {oracle!r}")
    return _grover_loop(n, target, iterations, tag, "Y", layout, oracle)


@dataclass(frozen=True)
class QueryComparison:
    n: int
    x: str
    a_tagging_queries: int
    a_reflection_queries: int
    a_success: float
    c_iterations: int
    c_queries: int
    c_success: float
    c_predicted: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def compare_query_counts(f: PermutationTable, x: str | int) -> QueryComparison:
    """Oracle usage of exact inversion versus Grover inversion on the same instance.

    Exact inversion spends two queries per tag; realizing each Q_j through
    M_f costs four more, reported separately.  Grover inversion runs
    ``optimal_iterations(n)`` rounds at two queries each.
    """
    n = f.n
    _require_even(n)
    xv = as_value(x, n)
    _, trace_a = invert_exact(f, xv)
    k = optimal_iterations(n)
    trace_c = grover_invert(f, xv, k)
    per_q = circuits.lower_q(f, 0).oracle_calls
    return QueryComparison(
        n=n,
        x=to_bits(xv, n),
        a_tagging_queries=trace_a.tagging_queries,
        a_reflection_queries=per_q * (n // 2),
        a_success=trace_a.success_probability,
        c_iterations=k,
        c_queries=trace_c.queries,
        c_success=trace_c.success_probability,
        c_predicted=grover_success_probability(n, k),
    )
