"""Named unitaries of the permutation-inversion construction.

Every constructor returns an :class:`OperatorHandle` whose ``apply`` acts on
any :class:`~reflectron.statevector.StateVector` containing the handle's
registers by name.  Operators of the form ``sum_x |x><x| (x) U_x`` also expose
``block(x)``, the ``U_x`` acting on the second register alone, which is how the
algorithms run with the first register held classical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .permutations import PermutationTable, as_value, inverse
from .statevector import (
    RegisterLayout,
    StateVector,
    basis_relabel,
    conditional_subset_reflection,
    hadamard_all,
    phase_flip,
    xor_oracle,
)

__all__ = [
    "OperatorHandle",
    "hadamard_sandwich",
    "make_diffusion",
    "make_m_f",
    "make_q",
    "make_q_conjugated",
    "make_q_prime",
    "make_tag_full",
    "make_tag_pair",
    "make_u_f",
    "pair_mask",
    "prefix_mask",
]


@dataclass(frozen=True, eq=False)
class OperatorHandle:
    name: str
    registers: tuple[tuple[str, int], ...]
    params: dict = field(default_factory=dict)
    action: Callable[[StateVector], StateVector] | None = field(default=None, repr=False)
    block_fn: Callable[[int], "OperatorHandle"] | None = field(default=None, repr=False)
    # self-inverse and Hermitian (tags, reflections, XOR oracles)
    involution: bool = True

    ancillas = ()

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout(self.registers)

    @property
    def width(self) -> int:
        return sum(w for _, w in self.registers)

    def apply(self, state: StateVector) -> StateVector:
        for name, width in self.registers:
            if state.layout.width(name) != width:
                raise ValueError(
                    f"{self.name} needs register {name!r} of width {width}, "
                    f"state has width {state.layout.width(name)}"
                )
        return self.action(state)

    def block(self, x: str | int) -> "OperatorHandle":
        """The operator applied to the second register when the first holds ``x``."""
        if self.block_fn is None:
            raise TypeError(f"{self.name} is not a first-register-controlled operator")
        return self.block_fn(x)

    def lower(self):
        from .circuits import lower

        return lower(self)

    def __str__(self):
        shown = {k: v for k, v in self.params.items() if k != "f"}
        args = ", ".join(f"{k}={v}" for k, v in shown.items())
        return f"{self.name}({args})"


def _check_pair_position(k: int, n: int) -> None:
    if not 1 <= k <= n - 1:
        raise ValueError(f"tag position k={k} outside [1, {n - 1}]")


def _check_round(j: int, n: int) -> None:
    if n % 2:
        raise ValueError(f"rounds are defined for even n, got n={n}")
    if not 0 <= j <= n // 2 - 1:
        raise ValueError(f"round index j={j} outside [0, {n // 2 - 1}]")


def pair_mask(n: int, k: int) -> int:
    """Bit mask selecting positions k and k+1 (1-based, MSB first)."""
    _check_pair_position(k, n)
    return (1 << (n - k)) | (1 << (n - k - 1))


def prefix_mask(values: np.ndarray, target: int, n: int, length: int) -> np.ndarray:
    """Boolean mask of ``values`` whose first ``length`` bits equal those of ``target``."""
    shift = n - length
    return (values >> shift) == (target >> shift)


def make_u_f(f: PermutationTable, in_reg: str = "Y", out_reg: str = "A") -> OperatorHandle:
    """XOR oracle |a>|b> -> |a>|f(a) xor b>."""
    return OperatorHandle(
        "U_f",
        ((in_reg, f.n), (out_reg, f.n)),
        {"f": f, "n": f.n},
        lambda s: xor_oracle(s, in_reg, out_reg, f),
    )


def make_tag_full(f: PermutationTable, x: str | int | None = None, x_reg: str = "X", y_reg: str = "Y") -> OperatorHandle:
    """Phase -1 on |x>|y> iff f(y) = x.

    With ``x`` given the first register is classical and the handle acts on
    the second register only, as ``I - 2|f^-1(x)><f^-1(x)|``.
    """
    n = f.n
    table = f.table
    if x is not None:
        xv = as_value(x, n)
        return OperatorHandle(
            "O_full",
            ((y_reg, n),),
            {"f": f, "n": n, "x": format(xv, f"0{n}b")},
            lambda s: phase_flip(s, lambda v: table[v[y_reg]] == xv),
        )
    return OperatorHandle(
        "O_full",
        ((x_reg, n), (y_reg, n)),
        {"f": f, "n": n},
        lambda s: phase_flip(s, lambda v: table[v[y_reg]] == v[x_reg]),
        block_fn=lambda xv: make_tag_full(f, xv, x_reg, y_reg),
    )


def _tag_pair_block(f: PermutationTable, k: int, x: str | int, y_reg: str) -> OperatorHandle:
    n = f.n
    mask = pair_mask(n, k)
    xv = as_value(x, n)
    matched = ((f.table ^ xv) & mask) == 0
    return OperatorHandle(
        "O_pair",
        ((y_reg, n),),
        {"f": f, "n": n, "k": k, "x": format(xv, f"0{n}b")},
        lambda s: phase_flip(s, lambda v: matched[v[y_reg]]),
    )


def make_tag_pair(f: PermutationTable, k: int, x_reg: str = "X", y_reg: str = "Y") -> OperatorHandle:
    """Phase -1 on |x>|y> iff f(y) agrees with x at bit positions k and k+1."""
    n = f.n
    mask = pair_mask(n, k)
    table = f.table
    return OperatorHandle(
        "O_pair",
        ((x_reg, n), (y_reg, n)),
        {"f": f, "n": n, "k": k},
        lambda s: phase_flip(s, lambda v: ((table[v[y_reg]] ^ v[x_reg]) & mask) == 0),
        block_fn=lambda x: _tag_pair_block(f, k, x, y_reg),
    )


def make_diffusion(width: int, register: str = "Y") -> OperatorHandle:
    """Inversion about the mean: a_b -> 2 mean(a) - a_b."""
    if width < 1:
        raise ValueError("diffusion needs width >= 1")
    full = np.ones(1 << width, dtype=bool)
    return OperatorHandle(
        "Diffusion",
        ((register, width),),
        {"width": width},
        lambda s: conditional_subset_reflection(s, None, register, lambda _: full),
    )


def _q_block(f: PermutationTable, j: int, x: str | int, y_reg: str) -> OperatorHandle:
    n = f.n
    xv = as_value(x, n)
    subset = prefix_mask(f.table, xv, n, 2 * j)
    return OperatorHandle(
        "Q",
        ((y_reg, n),),
        {"f": f, "n": n, "j": j, "x": format(xv, f"0{n}b")},
        lambda s: conditional_subset_reflection(s, None, y_reg, lambda _: subset),
    )


def make_q(f: PermutationTable, j: int, x_reg: str = "X", y_reg: str = "Y") -> OperatorHandle:
    """Conditional reflection about the uniform superposition of
    {y : f(y) shares its first 2j bits with x}, x read from ``x_reg``."""
    n = f.n
    _check_round(j, n)
    table = f.table
    if j == 0:
        # vacuous prefix condition: the same update as I (x) Diffusion, bit for bit
        full = np.ones(1 << n, dtype=bool)
        action = lambda s: conditional_subset_reflection(s, None, y_reg, lambda _: full)  # noqa: E731
    else:
        action = lambda s: conditional_subset_reflection(  # noqa: E731
            s, x_reg, y_reg, lambda c: prefix_mask(table, c, n, 2 * j)
        )
    return OperatorHandle(
        "Q",
        ((x_reg, n), (y_reg, n)),
        {"f": f, "n": n, "j": j},
        action,
        block_fn=lambda x: _q_block(f, j, x, y_reg),
    )


def make_m_f(f: PermutationTable, register: str = "Y") -> OperatorHandle:
    """In-place permutation |x> -> |f(x)>."""
    return OperatorHandle(
        "M_f",
        ((register, f.n),),
        {"f": f, "n": f.n},
        lambda s: basis_relabel(s, register, f),
        involution=False,
    )


def make_q_prime(n: int, j: int, x_reg: str = "X", z_reg: str = "Z", literal: bool = False) -> OperatorHandle:
    """Q_j conjugated into the image basis of f; independent of f.

    When the first 2j bits of Z equal those of X the last n-2j qubits of Z
    are reflected about their uniform superposition.  On the remaining prefix
    subspace the exact conjugate acts as -I, which is what ``literal=False``
    (the default) implements.  ``literal=True`` instead leaves that subspace
    untouched (identity); the two agree for j = 0 and on any state supported
    on matching prefixes, but not as operators for j >= 1.
    """
    _check_round(j, n)
    values = np.arange(1 << n, dtype=np.int64)

    def action(s: StateVector) -> StateVector:
        out = conditional_subset_reflection(
            s, x_reg, z_reg, lambda c: prefix_mask(values, c, n, 2 * j)
        )
        if literal and j > 0:
            shift = n - 2 * j
            out = phase_flip(out, lambda v: (v[z_reg] >> shift) != (v[x_reg] >> shift))
        return out

    return OperatorHandle(
        "Q_prime",
        ((x_reg, n), (z_reg, n)),
        {"n": n, "j": j, "literal": literal},
        action,
    )


def make_q_conjugated(f: PermutationTable, j: int, x_reg: str = "X", y_reg: str = "Y") -> OperatorHandle:
    """Q_j realized as M_f^dagger . Q'_j . M_f with M_f on the second register."""
    n = f.n
    _check_round(j, n)
    m_f = make_m_f(f, y_reg)
    m_f_dag = make_m_f(inverse(f), y_reg)
    q_prime = make_q_prime(n, j, x_reg, y_reg)
    return OperatorHandle(
        "Q_conjugated",
        ((x_reg, n), (y_reg, n)),
        {"f": f, "n": n, "j": j},
        lambda s: m_f_dag.apply(q_prime.apply(m_f.apply(s))),
    )


def hadamard_sandwich(width: int, register: str = "Y") -> OperatorHandle:
    """H^w (2|0><0| - I) H^w, the reflect-about-uniform route through |0>."""

    def action(s: StateVector) -> StateVector:
        s = hadamard_all(s, register)
        s = phase_flip(s, lambda v: v[register] != 0)
        return hadamard_all(s, register)

    return OperatorHandle("HadamardSandwich", ((register, width),), {"width": width}, action)
