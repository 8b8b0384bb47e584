"""
Lowered circuits and what they cost
===================================

Every operator has a gate-level form.  Oracles stay opaque and are counted
as queries; multi-controlled gates can be expanded into Toffoli ladders on
clean ancillas.
"""

from reflectron import generate
from reflectron.circuits import decompose, lower_q, lower_q_prime, lower_tag_pair, verify_equivalence
from reflectron.operators import make_q, make_tag_pair

f = generate("affine_gf2", 4, seed=3)

tag = lower_tag_pair(f, 1)
print(tag.dump())
print(verify_equivalence(tag, make_tag_pair(f, 1)).to_dict())

q = lower_q(f, 1)
print()
print("Q_1 native counts:    ", q.counts().to_dict())
print("Q_1 elementary counts:", decompose(q).counts().to_dict())
print("Q_1 equivalence:      ", verify_equivalence(q, make_q(f, 1)).to_dict())

print()
print(" n  gates in Q'_j for each j")
for n in (2, 4, 6, 8):
    print(f"{n:2d} ", [lower_q_prime(n, j).counts().total_gates for j in range(n // 2)])
