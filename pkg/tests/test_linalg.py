from hypothesis import given, strategies as st
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form
from sympy.polys.domains import GF
from sympy.polys.matrices import DomainMatrix

from morselevels.linalg import (
    Field,
    identity,
    integer_kernel,
    invariant_factors,
    matmul,
    normalize_diagonal,
    rank,
    smith_decomposition,
    smith_rank,
)

matrices = st.integers(1, 6).flatmap(
    lambda r: st.integers(1, 6).flatmap(
        lambda c: st.lists(st.lists(st.integers(-6, 6), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


def sparse(m):
    return [{i: m[i][j] for i in range(len(m)) if m[i][j]} for j in range(len(m[0]))]


def sympy_invariants(m):
    d = smith_normal_form(Matrix(m), domain=ZZ)
    return sorted(abs(d[i, i]) for i in range(min(d.shape)) if d[i, i] != 0)


def test_invariant_factors_known():
    assert invariant_factors(sparse([[2, 4], [6, 8]])) == [2, 4]
    assert invariant_factors(sparse([[0, 0], [0, 0]])) == []
    assert invariant_factors(sparse([[4]])) == [4]


def test_normalize_diagonal():
    assert normalize_diagonal([4, 6]) == [2, 12]
    assert normalize_diagonal([1, 3, 9]) == [1, 3, 9]


@given(matrices)
def test_invariant_factors_match_sympy(m):
    assert sorted(invariant_factors(sparse(m))) == sympy_invariants(m)


@given(matrices)
def test_smith_decomposition_identities(m):
    r, c = len(m), len(m[0])
    u, d, v, uinv, vinv = smith_decomposition(m, r, c)
    assert matmul(matmul(u, m), v) == d
    assert matmul(u, uinv) == identity(r)
    assert matmul(v, vinv) == identity(c)
    k = smith_rank(d)
    diag = [d[i][i] for i in range(k)]
    assert all(x > 0 for x in diag)
    assert all(b % a == 0 for a, b in zip(diag, diag[1:]))
    assert all(d[i][j] == 0 for i in range(r) for j in range(c) if i != j or i >= k)
    assert diag == sympy_invariants(m)


@given(matrices)
def test_integer_kernel(m):
    c = len(m[0])
    k = integer_kernel(m, c)
    cols = len(k[0]) if k and k[0] else 0
    assert cols == c - Matrix(m).rank()
    for j in range(cols):
        col = [k[i][j] for i in range(c)]
        assert all(sum(row[i] * col[i] for i in range(c)) == 0 for row in m)


@given(matrices, st.sampled_from([None, 2, 3, 5, 7]))
def test_rank_matches_sympy(m, p):
    if p is None:
        expect = Matrix(m).rank()
    else:
        expect = DomainMatrix.from_Matrix(Matrix(m)).convert_to(GF(p)).rank()
    assert rank(sparse(m), p) == expect


def test_field_solve_and_kernel():
    F = Field(None)
    ker = F.kernel([[1, 1, 0], [0, 1, 1]], 3)
    assert len(ker) == 1
    sol = F.solve([[1, 0], [0, 1]], [F.conv(3), F.conv(5)])
    assert sol == [3, 5]
    assert F.solve([[1, 0]], [F.conv(0), F.conv(1)]) is None
    F2 = Field(2)
    assert F2.rank_of_vectors([[1, 1], [1, 1]]) == 1
