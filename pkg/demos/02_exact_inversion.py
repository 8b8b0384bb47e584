"""
Inverting a permutation in n/2 rounds
=====================================

Each round tags the two next bits of f(y) against x and reflects about the
uniform superposition of the strings that survived the earlier rounds.
Exactly a quarter of the current support is tagged, so one reflection
moves all amplitude onto it and the amplitude doubles each round.
"""

import math

from reflectron import generate, inverse, invert_exact

n = 8
f = generate("random", n, seed=7)
x = "10110010"

y, trace = invert_exact(f, x)
print(f"f^-1({x}) = {y}   (table says {inverse(f)(x):0{n}b})")
print(f"success probability {trace.success_probability:.15f}")
print()
print(" j  support  amplitude  expected 2^(j+1)/sqrt(2^n)")
for r in trace.records:
    print(f"{r.j:2d}  {r.support_size:7d}  {r.common_amplitude:9.6f}  {2 ** (r.j + 1) / math.sqrt(2 ** n):9.6f}")

# The gate-level backend simulates X, Y and the ancillas as qubits and
# agrees with the register-level run.
small = generate("random", 4, seed=7)
print()
print("n=4 semantic:", invert_exact(small, "1100")[0],
      " circuit:", invert_exact(small, "1100", backend="circuit")[0])

# Tagging only one bit per round marks half the support, and the
# reflection can no longer clear the rest.
from reflectron.algorithms import round_residual  # noqa: E402

print()
print("residual off the tagged set, 2-bit tag:", round_residual(f, x, 1, tag_bits=2))
print("residual off the tagged set, 1-bit tag:", round_residual(f, x, 1, tag_bits=1))
