import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualmeb import linalg_qr as qr


def check_factor(f, a, rec=1e-11):
    n = f.n
    assert np.max(np.abs(f.matrix() - a), initial=0) <= rec * (1 + np.max(np.abs(a), initial=0))
    assert f.orthogonality_error() <= 1e-12 * max(n, 1)
    assert np.all(np.tril(f.r, -1) == 0.0)


def test_factor_identity():
    f = qr.factor(np.eye(3))
    assert np.allclose(np.abs(f.q), np.eye(3))
    assert np.allclose(np.abs(f.r), np.eye(3))
    assert f.stats.from_scratch == 1


def test_factor_axis_column():
    f = qr.factor([[2.0], [0.0], [0.0]])
    assert abs(f.r[0, 0]) == pytest.approx(2.0)
    assert np.allclose(np.abs(f.q[:, 0]), [1, 0, 0])


def test_factor_random(rng):
    a = rng.standard_normal((6, 4))
    check_factor(qr.factor(a), a, rec=1e-12)


@pytest.mark.parametrize("bad", [np.array([[1.0, np.nan]]).T, np.ones((2, 3))])
def test_factor_rejects(bad):
    with pytest.raises(qr.QrError):
        qr.factor(bad)


def test_insert_column_examples(backend):
    e = np.eye(3)
    f = qr.insert_column(qr.factor(e[:, :1]), e[:, 1], 1)
    check_factor(f, e[:, :2])
    assert np.allclose(np.abs(f.r[:2]), np.eye(2))
    # a duplicate column surfaces as a zero diagonal entry
    a = np.random.default_rng(0).standard_normal((5, 3))
    g = qr.insert_column(qr.factor(a), a[:, 1], 3)
    assert abs(g.r[3, 3]) < 1e-12
    assert not g.is_full_rank()


def test_insert_column_matches_scratch(rng, backend):
    a = rng.standard_normal((8, 5))
    col = rng.standard_normal(8)
    f = qr.insert_column(qr.factor(a), col, 2)
    b = np.insert(a, 2, col, axis=1)
    check_factor(f, b, rec=1e-12)
    # R is unique up to row signs
    assert np.allclose(np.abs(f.r), np.abs(qr.factor(b).r), atol=1e-12)


def test_insert_column_full_raises():
    with pytest.raises(qr.QrError):
        qr.insert_column(qr.factor(np.eye(2)), [1.0, 1.0], 0)
    with pytest.raises(qr.QrError):
        qr.insert_column(qr.factor(np.eye(3)[:, :1]), [1.0, 1.0], 0)


def test_delete_column_examples(rng, backend):
    e = np.eye(3)
    f = qr.delete_column(qr.factor(e), 1)
    check_factor(f, e[:, [0, 2]])
    a = rng.standard_normal((8, 5))
    g = qr.factor(a)
    back = qr.insert_column(qr.delete_column(g, 3), a[:, 3], 3)
    check_factor(back, a, rec=1e-12)
    check_factor(qr.delete_column(g, 0), a[:, 1:], rec=1e-12)
    with pytest.raises(qr.QrError):
        qr.delete_column(g, 5)


def test_insert_row_examples(rng, backend):
    f = qr.insert_row(qr.factor(np.eye(2)), [1.0, 1.0], 2)
    check_factor(f, np.array([[1.0, 0], [0, 1], [1, 1]]), rec=1e-12)
    a = rng.standard_normal((6, 4))
    g = qr.insert_row(qr.factor(a), np.zeros(4), 3)
    check_factor(g, np.insert(a, 3, 0.0, axis=0))
    assert np.allclose(np.abs(g.r[:4]), np.abs(qr.factor(a).r[:4]))
    row = rng.standard_normal(4)
    check_factor(qr.insert_row(qr.factor(a), row, 0), np.vstack([row, a]), rec=1e-12)


def test_delete_row(rng, backend):
    a = rng.standard_normal((7, 4))
    for pos in (0, 3, 6):
        check_factor(qr.delete_row(qr.factor(a), pos), np.delete(a, pos, axis=0))
    with pytest.raises(qr.QrError):
        qr.delete_row(qr.factor(np.eye(3)), 0)


def test_rank_one_examples(rng, backend):
    a = rng.standard_normal((5, 3))
    f = qr.factor(a)
    check_factor(qr.rank_one_update(f, np.zeros(5), np.ones(3)), a)
    g = qr.rank_one_update(qr.factor(np.eye(2)), [1.0, 0.0], [1.0, 0.0])
    check_factor(g, np.diag([2.0, 1.0]))
    a = rng.standard_normal((8, 6))
    u, v = rng.standard_normal(8), rng.standard_normal(6)
    check_factor(qr.rank_one_update(qr.factor(a), u, v), a + np.outer(u, v))
    with pytest.raises(qr.QrError):
        qr.rank_one_update(f, np.ones(4), np.ones(3))


def test_overwrite_reuses_storage(rng):
    a = rng.standard_normal((6, 3))
    f = qr.factor(a)
    q_id = id(f.q)
    g = qr.delete_column(f, 1, overwrite=True)
    assert id(g.q) == q_id
    h = qr.delete_column(qr.factor(a), 1)
    assert id(h.q) != q_id


def test_stats_shared_along_lineage(rng):
    f = qr.factor(rng.standard_normal((6, 3)))
    g = qr.insert_column(f, rng.standard_normal(6), 0)
    g = qr.rank_one_update(g, rng.standard_normal(6), rng.standard_normal(4))
    g = qr.delete_column(g, 2)
    assert g.stats is f.stats
    assert f.stats.from_scratch == 1
    assert f.stats.updates == {"insert_column": 1, "rank_one_update": 1, "delete_column": 1}
    assert f.stats.total_updates == 3


def test_solve_upper(rng, backend):
    b = rng.standard_normal(4)
    assert np.allclose(qr.solve_upper(np.eye(4), b), b)
    assert np.allclose(qr.solve_upper(np.array([[2.0, 1], [0, 4]]), [4.0, 8.0]), [1, 2])
    r = np.triu(rng.standard_normal((10, 10))) + 5 * np.eye(10)
    b = rng.standard_normal(10)
    assert np.linalg.norm(r @ qr.solve_upper(r, b) - b) <= 1e-10 * np.linalg.norm(b)


def test_solve_lower_transposed(rng, backend):
    b = rng.standard_normal(3)
    assert np.allclose(qr.solve_lower_transposed(np.eye(3), b), b)
    assert np.allclose(qr.solve_lower_transposed(np.array([[2.0, 1], [0, 4]]), [2.0, 5.0]), [1, 1])
    r = np.triu(rng.standard_normal((10, 10))) + 5 * np.eye(10)
    y = qr.solve_lower_transposed(r, b := rng.standard_normal(10))
    assert np.linalg.norm(r.T @ y - b) <= 1e-10 * np.linalg.norm(b)


def test_singular_pivot_reported():
    r = np.array([[1.0, 2, 3], [0, 0, 1], [0, 0, 2]])
    with pytest.raises(qr.SingularSystemError) as exc:
        qr.solve_upper(r, [1.0, 1, 1])
    assert exc.value.pivot == 1
    with pytest.raises(qr.SingularSystemError):
        qr.solve_lower_transposed(r, [1.0, 1, 1])


def test_null_and_range_basis(rng):
    e = np.eye(3)
    w = qr.null_basis(qr.factor(e[:, :1]))
    assert w.shape == (3, 2)
    assert np.allclose(w[0], 0)
    assert qr.null_basis(qr.factor(rng.standard_normal((4, 4)))).shape == (4, 0)
    assert np.allclose(np.abs(qr.range_basis(qr.factor([[2.0], [0], [0]]))), e[:, :1])
    assert np.allclose(np.abs(qr.range_basis(qr.factor(e))), e)

    a = rng.standard_normal((7, 4))
    f = qr.factor(a)
    assert np.max(np.abs(a.T @ qr.null_basis(f))) <= 1e-10 * f.scale()
    v = qr.range_basis(f)
    assert np.max(np.abs(v @ (v.T @ a) - a)) <= 1e-11


def test_bases_require_full_rank():
    a = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(qr.RankDeficientError):
        qr.null_basis(qr.factor(a))
    with pytest.raises(qr.RankDeficientError):
        qr.range_basis(qr.factor(a))


def test_backends_bitwise_close(rng):
    from dualmeb import _backend

    if len(_backend.available()) < 2:
        pytest.skip("compiled kernels not built")
    a = rng.standard_normal((9, 5))
    u, v = rng.standard_normal(9), rng.standard_normal(5)
    out = {}
    for name in ("compiled", "python"):
        with _backend.using(name):
            f = qr.rank_one_update(qr.delete_column(qr.factor(a), 2), u, v[:4])
            out[name] = f.matrix()
    assert np.allclose(out["compiled"], out["python"], atol=1e-14)


# ---------------------------------------------------------------------------
# property tests: chains of random updates against the edited matrix


@st.composite
def update_chain(draw):
    n = draw(st.integers(2, 12))
    k = draw(st.integers(0, n))
    seed = draw(st.integers(0, 2**32 - 1))
    ops = draw(st.lists(st.sampled_from(["ic", "dc", "ir", "dr", "r1"]), min_size=1, max_size=8))
    return n, k, seed, ops


def apply_chain(n, k, seed, ops):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, k))
    f = qr.factor(a)
    for op in ops:
        n, k = a.shape
        if op == "ic" and k < n:
            pos = int(rng.integers(0, k + 1))
            col = rng.standard_normal(n)
            f, a = qr.insert_column(f, col, pos), np.insert(a, pos, col, axis=1)
        elif op == "dc" and k > 0:
            pos = int(rng.integers(0, k))
            f, a = qr.delete_column(f, pos), np.delete(a, pos, axis=1)
        elif op == "ir" and n < 16:
            pos = int(rng.integers(0, n + 1))
            row = rng.standard_normal(k)
            f, a = qr.insert_row(f, row, pos), np.insert(a, pos, row, axis=0)
        elif op == "dr" and k < n and n > 1:
            pos = int(rng.integers(0, n))
            f, a = qr.delete_row(f, pos), np.delete(a, pos, axis=0)
        elif op == "r1":
            u, v = rng.standard_normal(n), rng.standard_normal(k)
            f, a = qr.rank_one_update(f, u, v), a + np.outer(u, v)
    return f, a


@settings(max_examples=150, deadline=None)
@given(update_chain())
def test_update_chains_reconstruct(chain):
    f, a = apply_chain(*chain)
    check_factor(f, a)
    assert f.stats.from_scratch == 1


@settings(max_examples=60, deadline=None)
@given(update_chain())
def test_update_chains_python_backend(chain):
    from dualmeb import _backend

    with _backend.using("python"):
        f, a = apply_chain(*chain)
    check_factor(f, a)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_solve_upper_inverts_multiplication(k, seed):
    rng = np.random.default_rng(seed)
    r = np.triu(rng.standard_normal((k, k))) + 4 * np.eye(k) * np.sign(rng.standard_normal(k))
    y = rng.standard_normal(k)
    back = qr.solve_upper(r, r @ y)
    assert np.linalg.norm(back - y) <= 1e-10 * (1 + np.linalg.norm(y))
