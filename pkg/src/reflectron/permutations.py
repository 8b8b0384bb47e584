"""Permutation tables on n-bit strings: generation, validation and persistence."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GENERATORS",
    "MAX_BITS",
    "PermutationFormatError",
    "PermutationTable",
    "as_value",
    "generate",
    "inverse",
    "prefix",
    "read_file",
    "to_bits",
    "write_file",
]

MAX_BITS = 20
GENERATORS = ("identity", "bit_reverse", "affine_gf2", "random")

_HEADER_PREFIX = "perm v1 n="


class PermutationFormatError(ValueError):
    """Raised for malformed permutation files."""


def to_bits(value: int, n: int) -> str:
    return format(int(value), f"0{n}b") if n else ""


def as_value(x: str | int, n: int) -> int:
    """Accept an n-bit string or an integer in range and return the integer."""
    if isinstance(x, str):
        if len(x) != n or set(x) - {"0", "1"}:
            raise ValueError(f"expected a {n}-bit string, got {x!r}")
        return int(x, 2)
    x = int(x)
    if not 0 <= x < (1 << n):
        raise ValueError(f"value {x} does not fit in {n} bits")
    return x


@dataclass(frozen=True, eq=False)
class PermutationTable:
    """A bijection f on {0,1}^n stored as ``table[i] = f(i)``."""

    n: int
    table: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_BITS:
            raise ValueError(f"n must be in [1, {MAX_BITS}], got {self.n}")
        arr = np.array(self.table, dtype=np.int64)
        if arr.shape != (1 << self.n,):
            raise ValueError(f"table for n={self.n} needs {1 << self.n} entries, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "table", arr)
        if not self.is_one_one():
            raise ValueError("table is not a bijection on {0,1}^n")

    def __call__(self, x: str | int) -> int:
        return int(self.table[as_value(x, self.n)])

    def __len__(self):
        return len(self.table)

    def __eq__(self, other):
        if not isinstance(other, PermutationTable):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.n, self.table.tobytes()))

    def __repr__(self):
        head = ", ".join(to_bits(v, self.n) for v in self.table[:8])
        more = ", ..." if len(self.table) > 8 else ""
        return f"PermutationTable(n={self.n}, [{head}{more}])"

    def is_one_one(self) -> bool:
        size = 1 << self.n
        if self.table.min(initial=0) < 0 or self.table.max(initial=0) >= size:
            return False
        return bool(np.bincount(self.table, minlength=size).max(initial=1) == 1)

    def is_honest(self) -> bool:
        # Length preserving, so |x| <= p(|f(x)|) holds with p(m) = m.
        return True

    def bits(self, x: str | int) -> str:
        """f(x) as an MSB-first bit-string."""
        return to_bits(self(x), self.n)

    def preimage(self, x: str | int) -> int:
        return int(np.flatnonzero(self.table == as_value(x, self.n))[0])


def _gf2_rank(rows: list[int], n: int) -> int:
    rows = list(rows)
    rank = 0
    for bit in reversed(range(n)):
        pivot = next((i for i in range(rank, len(rows)) if rows[i] >> bit & 1), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] >> bit & 1:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


def _affine_gf2(n: int, rng: np.random.Generator, max_tries: int = 1000) -> np.ndarray:
    for _ in range(max_tries):
        # row r of M is an n-bit mask; output bit r (MSB first) = parity(row & x)
        rows = [int(v) for v in rng.integers(0, 1 << n, size=n)]
        if _gf2_rank(rows, n) == n:
            break
    else:
        raise RuntimeError("could not draw an invertible GF(2) matrix")
    offset = int(rng.integers(0, 1 << n))
    xs = np.arange(1 << n, dtype=np.int64)
    out = np.zeros_like(xs)
    for r, row in enumerate(rows):
        parity = np.zeros_like(xs)
        masked = xs & row
        while masked.any():
            parity ^= masked & 1
            masked >>= 1
        out |= parity << (n - 1 - r)
    return out ^ offset


def _bit_reverse(n: int) -> np.ndarray:
    xs = np.arange(1 << n, dtype=np.int64)
    out = np.zeros_like(xs)
    for b in range(n):
        out |= ((xs >> b) & 1) << (n - 1 - b)
    return out


def generate(kind: str, n: int, seed: int = 0) -> PermutationTable:
    """Build a test permutation.

    ``identity`` and ``bit_reverse`` ignore the seed; ``affine_gf2`` draws an
    invertible bit-matrix M and offset c, f(x) = Mx xor c; ``random`` is a
    seeded uniform shuffle.
    """
    if not 1 <= n <= MAX_BITS:
        raise ValueError(f"n must be in [1, {MAX_BITS}], got {n}")
    rng = np.random.default_rng(seed)
    if kind == "identity":
        table = np.arange(1 << n)
    elif kind == "bit_reverse":
        table = _bit_reverse(n)
    elif kind == "affine_gf2":
        table = _affine_gf2(n, rng)
    elif kind == "random":
        table = rng.permutation(1 << n)
    else:
        raise ValueError(f"unknown generator {kind!r}; choose from {GENERATORS}")
    return PermutationTable(n, table)


def inverse(f: PermutationTable) -> PermutationTable:
    inv = np.empty_like(f.table)
    inv[f.table] = np.arange(len(f.table))
    return PermutationTable(f.n, inv)


def prefix(value: str, k: int) -> str:
    """First k bits of an MSB-first bit-string."""
    if not 0 <= k <= len(value):
        raise ValueError(f"prefix length {k} outside [0, {len(value)}]")
    return value[:k]


def write_file(f: PermutationTable, path: str | os.PathLike) -> None:
    lines = [f"{_HEADER_PREFIX}{f.n}"]
    lines += [to_bits(v, f.n) for v in f.table]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_file(path: str | os.PathLike) -> PermutationTable:
    with open(path, encoding="ascii") as fh:
        raw = fh.read().splitlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise PermutationFormatError(f"{path}: empty file")
    no, header = lines[0]
    if not header.startswith(_HEADER_PREFIX):
        raise PermutationFormatError(f"{path}:{no}: expected header 'perm v1 n=<n>', got {header!r}")
    try:
        n = int(header[len(_HEADER_PREFIX):])
    except ValueError:
        raise PermutationFormatError(f"{path}:{no}: bad bit-width in header {header!r}") from None
    if not 1 <= n <= MAX_BITS:
        raise PermutationFormatError(f"{path}:{no}: n={n} outside [1, {MAX_BITS}]")
    body = lines[1:]
    if len(body) != 1 << n:
        raise PermutationFormatError(f"{path}: expected {1 << n} table lines for n={n}, found {len(body)}")
    values = []
    for no, ln in body:
        if len(ln) != n or set(ln) - {"0", "1"}:
            raise PermutationFormatError(f"{path}:{no}: expected a {n}-bit string, got {ln!r}")
        values.append(int(ln, 2))
    if len(set(values)) != len(values):
        raise PermutationFormatError(f"{path}: table is not a bijection (duplicate values)")
    return PermutationTable(n, np.array(values, dtype=np.int64))
