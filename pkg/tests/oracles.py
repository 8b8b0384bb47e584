"""Independent dense reference matrices, built from bit-strings and outer products.

Nothing here calls into the package's masks or reflection code; these are the
brute-force side of every dense comparison in the suite.
"""

import itertools

import numpy as np


def bits(v, n):
    return format(v, f"0{n}b")


def uniform_over(indices, dim):
    vec = np.zeros(dim, dtype=complex)
    vec[list(indices)] = 1.0
    return vec / np.linalg.norm(vec)


def reflection(vec):
    """2|v><v| - I."""
    vec = np.asarray(vec, dtype=complex).reshape(-1, 1)
    return 2 * (vec @ vec.conj().T) - np.eye(len(vec))


def hadamard_power(w):
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    out = np.eye(1, dtype=complex)
    for _ in range(w):
        out = np.kron(out, h)
    return out


def diffusion(w):
    return reflection(np.ones(2 ** w) / np.sqrt(2 ** w))


def projector(v, dim):
    p = np.zeros((dim, dim), dtype=complex)
    p[v, v] = 1
    return p


def xor_oracle(table, n_in, n_out):
    dim = 2 ** (n_in + n_out)
    u = np.zeros((dim, dim))
    for a, b in itertools.product(range(2 ** n_in), range(2 ** n_out)):
        u[(a << n_out) | (b ^ int(table[a])), (a << n_out) | b] = 1
    return u


def tag_full(table, n):
    """Phase -1 on |x>|y> iff f(y) = x, as a diagonal over (X, Y)."""
    diag = [(-1) ** (bits(int(table[y]), n) == bits(x, n))
            for x in range(2 ** n) for y in range(2 ** n)]
    return np.diag(np.array(diag, dtype=complex))


def tag_pair(table, n, k):
    """Phase -1 iff f(y) and x agree at 1-based positions k and k+1."""
    diag = []
    for x in range(2 ** n):
        for y in range(2 ** n):
            fx, xs = bits(int(table[y]), n), bits(x, n)
            hit = fx[k - 1] == xs[k - 1] and fx[k] == xs[k]
            diag.append(-1 if hit else 1)
    return np.diag(np.array(diag, dtype=complex))


def psi_jx(table, n, j, x):
    """Uniform superposition over y with f(y) matching x on the first 2j bits."""
    xs = bits(x, n)
    members = [y for y in range(2 ** n) if bits(int(table[y]), n)[: 2 * j] == xs[: 2 * j]]
    return uniform_over(members, 2 ** n)


def q_matrix(table, n, j):
    """sum_x |x><x| (x) (2|psi_{j,x}><psi_{j,x}| - I)."""
    dim = 2 ** n
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for x in range(dim):
        out += np.kron(projector(x, dim), reflection(psi_jx(table, n, j, x)))
    return out


def m_f(table, n):
    dim = 2 ** n
    u = np.zeros((dim, dim))
    for x in range(dim):
        u[int(table[x]), x] = 1
    return u


def q_prime_exact(n, j):
    """sum_x |x><x| (x) reflection about |x_(1,2j)>|uniform suffix>."""
    dim = 2 ** n
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for x in range(dim):
        xs = bits(x, n)
        members = [z for z in range(dim) if bits(z, n)[: 2 * j] == xs[: 2 * j]]
        out += np.kron(projector(x, dim), reflection(uniform_over(members, dim)))
    return out


def multi_controlled(kind, c):
    """Ideal MCZ/MCX on c controls followed by one target (target last)."""
    dim = 2 ** (c + 1)
    if kind == "MCZ":
        u = np.eye(dim, dtype=complex)
        u[-1, -1] = -1
        return u
    u = np.eye(dim, dtype=complex)
    u[[-2, -1]] = u[[-1, -2]]
    return u
