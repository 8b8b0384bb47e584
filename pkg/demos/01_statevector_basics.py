"""
Registers, basis states and the primitive updates
=================================================

A state lives on named registers.  The first register is the most
significant part of the flat index, and bit 1 of a register is its
leftmost bit.
"""

import numpy as np

from reflectron import RegisterLayout, generate
from reflectron.statevector import (
    basis_state,
    conditional_subset_reflection,
    exact_distribution,
    hadamard_all,
    phase_flip,
    xor_oracle,
)

layout = RegisterLayout.of(X=2, Y=2)
state = basis_state(layout, {"X": "01", "Y": "00"})
print("nonzero flat index:", np.flatnonzero(state.amplitudes))  # 0b0100 = 4

# Hadamards on Y give the uniform superposition over Y.
state = hadamard_all(state, "Y")
print("Y distribution:", exact_distribution(state, "Y"))

# A phase flip marks the Y value equal to X; inversion about the mean then
# moves all of the Y weight onto it (n = 2 needs a single round).
state = phase_flip(state, lambda v: v["Y"] == v["X"])
full = np.ones(4, dtype=bool)
state = conditional_subset_reflection(state, "X", "Y", lambda c: full)
print("after one tag and reflection:", exact_distribution(state, "Y"))

# The XOR oracle writes f(y) into a second register: |y>|b> -> |y>|f(y) xor b>.
f = generate("bit_reverse", 2)
pair = RegisterLayout.of(Y=2, A=2)
out = xor_oracle(basis_state(pair, {"Y": "10", "A": "00"}), "Y", "A", f)
print("A register after U_f on y=10:", exact_distribution(out, "A"))
