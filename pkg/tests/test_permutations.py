import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reflectron.permutations import (
    GENERATORS,
    PermutationFormatError,
    PermutationTable,
    generate,
    inverse,
    prefix,
    read_file,
    to_bits,
    write_file,
)


def _strings(f):
    return [to_bits(v, f.n) for v in f.table]


def test_identity_table():
    assert _strings(generate("identity", 2)) == ["00", "01", "10", "11"]


def test_bit_reverse_table():
    assert _strings(generate("bit_reverse", 2)) == ["00", "10", "01", "11"]


def test_bit_reverse_reverses_strings():
    f = generate("bit_reverse", 5)
    for i in range(32):
        assert f.bits(i) == to_bits(i, 5)[::-1]


def test_random_is_seeded():
    assert generate("random", 4, seed=7) == generate("random", 4, seed=7)
    assert generate("random", 6, seed=1) != generate("random", 6, seed=2)


@pytest.mark.parametrize("kind", GENERATORS)
@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_generators_are_bijections(kind, n):
    f = generate(kind, n, seed=3)
    assert sorted(f.table.tolist()) == list(range(2 ** n))
    assert f.is_one_one() and f.is_honest()


@pytest.mark.parametrize("seed", range(5))
def test_affine_is_affine(seed):
    # f(a) ^ f(b) ^ f(c) == f(a ^ b ^ c) characterizes affine maps over GF(2)
    f = generate("affine_gf2", 6, seed)
    rng = np.random.default_rng(seed)
    for a, b, c in rng.integers(0, 64, size=(50, 3)):
        assert f(int(a)) ^ f(int(b)) ^ f(int(c)) == f(int(a ^ b ^ c))


def test_generate_errors():
    with pytest.raises(ValueError):
        generate("random", 0)
    with pytest.raises(ValueError):
        generate("random", 21)
    with pytest.raises(ValueError):
        generate("sorted", 3)


def test_table_rejects_duplicates():
    with pytest.raises(ValueError, match="bijection"):
        PermutationTable(2, [0, 0, 1, 2])
    with pytest.raises(ValueError):
        PermutationTable(2, [0, 1, 2, 4])
    with pytest.raises(ValueError):
        PermutationTable(2, [0, 1, 2])


def test_table_is_read_only():
    f = generate("identity", 2)
    with pytest.raises(ValueError):
        f.table[0] = 3


def test_call_accepts_strings_and_ints():
    f = generate("bit_reverse", 4)
    assert f("1100") == f(12) == 0b0011
    assert f.preimage("0011") == 12
    with pytest.raises(ValueError):
        f("110")


def test_inverse_examples():
    assert inverse(generate("identity", 3)) == generate("identity", 3)
    assert inverse(generate("bit_reverse", 4)) == generate("bit_reverse", 4)
    f = generate("random", 4, seed=7)
    g = inverse(f)
    assert g.table[f.table].tolist() == list(range(16))


@pytest.mark.parametrize("value,k,expected", [("1100", 2, "11"), ("1100", 0, ""), ("1100", 4, "1100"), ("0", 1, "0")])
def test_prefix(value, k, expected):
    assert prefix(value, k) == expected


def test_prefix_range():
    with pytest.raises(ValueError):
        prefix("101", 4)
    with pytest.raises(ValueError):
        prefix("101", -1)


# -- file format -------------------------------------------------------------

def test_round_trip_identity(tmp_path):
    f = generate("identity", 2)
    path = tmp_path / "f.perm"
    write_file(f, path)
    assert path.read_text() == "perm v1 n=2\n00\n01\n10\n11\n"
    assert read_file(path) == f


def test_read_ignores_comments_and_blank_lines(tmp_path):
    path = tmp_path / "f.perm"
    path.write_text("# made by hand\nperm v1 n=2\n\n10\n# middle\n00\n11\n01")
    assert read_file(path).table.tolist() == [2, 0, 3, 1]


@pytest.mark.parametrize("body,match", [
    ("perm v1 n=2\n00\n01\n01\n11\n", "bijection"),
    ("perm v1 n=2\n00\n01\n10\n", "table lines"),
    ("perm v1 n=2\n00\n01\n10\n11\n00\n", "table lines"),
    ("perm v2 n=2\n00\n01\n10\n11\n", "header"),
    ("perm v1 n=x\n", "bit-width"),
    ("perm v1 n=2\n00\n01\n1x\n11\n", "bit string"),
    ("perm v1 n=2\n00\n01\n100\n11\n", "bit string"),
    ("", "empty"),
    ("perm v1 n=0\n", "outside"),
])
def test_read_errors(tmp_path, body, match):
    path = tmp_path / "bad.perm"
    path.write_text(body)
    with pytest.raises(PermutationFormatError, match=match):
        read_file(path)


# -- properties -------------------------------------------------------------

@st.composite
def tables(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    perm = draw(st.permutations(range(2 ** n)))
    return PermutationTable(n, perm)


@settings(max_examples=60, deadline=None)
@given(tables())
def test_inverse_composes_to_identity(f):
    g = inverse(f)
    ident = np.arange(2 ** f.n)
    assert np.array_equal(g.table[f.table], ident)
    assert np.array_equal(f.table[g.table], ident)
    assert inverse(g) == f


@settings(max_examples=30, deadline=None)
@given(tables())
def test_file_round_trip(tmp_path_factory, f):
    path = tmp_path_factory.mktemp("perm") / "f.perm"
    write_file(f, path)
    assert read_file(path) == f


@given(st.integers(1, 12).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2 ** n - 1), st.integers(0, n))))
def test_prefix_of_bits(args):
    n, v, k = args
    s = to_bits(v, n)
    expected = to_bits(v >> (n - k), k) if k else ""
    assert prefix(s, k) == expected
