import itertools
import math

import numpy as np
import pytest

from qsfe.functions import (
    FunctionTable,
    builtin,
    concealment_profile,
    concealment_t,
    eq_concealment_comparison,
    is_non_redundant,
    is_non_trivial,
    parse_builtin,
    remove_redundant,
)


def table(rows, z=("0", "1")):
    rows = np.asarray(rows)
    return FunctionTable(tuple(f"x{i}" for i in range(rows.shape[0])),
                         tuple(f"y{j}" for j in range(rows.shape[1])), z, rows)


def test_builtin_ip():
    f = builtin("ip", n=2)
    assert f("11", "11") == "0"
    assert f("10", "11") == "1"
    assert f.shape == (4, 4)


def test_builtin_eq():
    f = builtin("eq", n=1)
    assert f.table.tolist() == [[1, 0], [0, 1]]


def test_builtin_ot():
    f = builtin("ot", n=2, k=1)
    assert f.shape == (4, 2)
    for x in f.x_alphabet:
        parts = x.strip("()").split(",")
        assert [f(x, c) for c in f.y_alphabet] == parts


def test_builtin_parse():
    assert parse_builtin("ot(2,1)").shape == (4, 2)
    assert parse_builtin("ip(3)").shape == (8, 8)
    assert parse_builtin("eq_restricted(4, 2)").shape == (4, 4)
    with pytest.raises(ValueError):
        builtin("nope")


def test_table_validation():
    with pytest.raises(ValueError):
        table([[0, 2]])
    with pytest.raises(ValueError):
        FunctionTable(("a", "a"), ("y",), ("0",), np.zeros((2, 1)))


def test_non_trivial():
    assert is_non_trivial(builtin("ip", n=2)).holds
    leak = FunctionTable.from_callable(["0", "1", "2"], ["a", "b"], ["0", "1", "2"], lambda x, y: x)
    v = is_non_trivial(leak)
    assert not v.holds and v.witness in leak.y_alphabet
    eq1 = is_non_trivial(builtin("eq", n=1))
    assert eq1 == (False, "0")


def test_non_redundant():
    assert is_non_redundant(builtin("ot", n=2, k=1)).holds
    assert not is_non_redundant(table([[0, 1], [0, 1]])).holds
    v = is_non_redundant(table([[0, 1], [1, 1], [1, 0], [1, 1]]))
    assert v == (False, ("x1", "x3"))


def test_remove_redundant():
    f = builtin("ot", n=2, k=1)
    assert remove_redundant(f).table.tolist() == f.table.tolist()
    const = table(np.zeros((4, 3), dtype=int))
    assert remove_redundant(const).shape == (1, 3)
    dup = table([[0, 1], [1, 1], [1, 0], [1, 1]])
    r = remove_redundant(dup)
    assert r.x_alphabet == ("x0", "x1", "x2")


def all_tables(nx, ny):
    for bits in itertools.product((0, 1), repeat=nx * ny):
        yield table(np.array(bits).reshape(nx, ny))


@pytest.mark.parametrize("nx,ny", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_exhaustive_small_tables(nx, ny):
    for f in all_tables(nx, ny):
        assert is_non_redundant(remove_redundant(f)).holds
        t = concealment_t(f)
        assert -1e-12 <= t <= math.log2(nx) + 1e-12
        if is_non_trivial(f).holds:
            assert t > 0
        profile = concealment_profile(f)
        const_cols = [len(set(f.table[:, j])) == 1 for j in range(ny)]
        full = abs(t - math.log2(nx)) < 1e-12
        attained_at_const = any(c and abs(profile[j] - t) < 1e-12 for j, c in enumerate(const_cols))
        assert full == attained_at_const


@pytest.mark.parametrize("n", [2, 3, 4])
def test_concealment_ip(n):
    assert concealment_t(builtin("ip", n=n)) == pytest.approx(n - 1)


@pytest.mark.parametrize("n,k", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_concealment_ot(n, k):
    assert concealment_t(builtin("ot", n=n, k=k)) == pytest.approx((n - 1) * k)


def test_concealment_eq_restricted():
    # frozen: (3/4) log2 3 from a 30-digit evaluation
    assert concealment_t(builtin("eq_restricted", n=4, k=2)) == pytest.approx(1.188721875540867, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_eq_comparison(k):
    cmp = eq_concealment_comparison(k)
    assert cmp["exact"] == pytest.approx(cmp["exact_closed_form"], abs=1e-12)
    assert cmp["exact"] <= cmp["coarse_expression"] + 1e-12
    assert cmp["exact"] >= cmp["used_in_bound"] - 1e-12
