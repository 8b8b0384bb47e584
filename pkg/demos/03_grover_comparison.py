"""
Exact inversion against Grover inversion
========================================

Grover's iteration needs about (pi/4) sqrt(2^n) rounds of two queries each
and succeeds with probability sin^2((2k+1) arcsin 2^(-n/2)).  The exact
routine spends two tagging queries per round over n/2 rounds, provided the
conditional reflections are available.
"""

from reflectron import compare_query_counts, generate, grover_invert, optimal_iterations

f = generate("random", 6, seed=1)
trace = grover_invert(f, "000111", optimal_iterations(6))
print("k   measured          closed form")
for k, (p, q) in enumerate(zip(trace.probabilities, trace.predicted)):
    print(f"{k}   {p:.15f} {q:.15f}")

print()
print(" n  A queries  C queries  A success  C success")
for n in (4, 8, 12):
    c = compare_query_counts(generate("random", n, seed=0), "0" * n)
    print(f"{n:2d}  {c.a_tagging_queries:9d}  {c.c_queries:9d}  {c.a_success:9.6f}  {c.c_success:9.6f}")
print("(realizing each reflection through M_f costs 4 more queries per round)")
