"""Factorization-norm solver: values, witnesses, certificates, file formats."""

from __future__ import annotations

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdlab.schur import (
    SolverError,
    certificate_lower_bound,
    psd_check,
    read_matrix_binary,
    read_matrix_csv,
    schur_norm,
    verify_witness,
    witness_upper_bound,
    write_matrix_binary,
    write_matrix_csv,
)

from oracles import schur_norm_2x2_grid


def random_correlation(rng, n):
    B = rng.normal(size=(n, n + 2))
    C = B @ B.T
    d = np.sqrt(np.diag(C))
    return C / np.outer(d, d)


def test_two_by_two_matches_grid_oracle():
    A = np.array([[1.0, 1.0], [1.0, -1.0]])
    sol = schur_norm(A)
    oracle = schur_norm_2x2_grid(A)
    assert abs(sol.value - oracle) < 1e-4
    assert abs(sol.value - math.sqrt(2)) < 1e-6
    assert sol.lower_bound <= sol.value + 1e-9
    assert sol.upper_bound >= sol.value - 1e-6


@pytest.mark.parametrize("seed,n", [(0, 2), (1, 3), (2, 5), (3, 8), (4, 12)])
def test_psd_unit_diagonal_is_one(seed, n):
    rng = np.random.default_rng(seed)
    C = random_correlation(rng, n)
    sol = schur_norm(C)
    assert abs(sol.value - 1.0) < 1e-6
    assert sol.lower_bound > 1.0 - 1e-6
    assert sol.upper_bound < 1.0 + 1e-6
    assert sol.witness_residual < 1e-7


def test_random_2x2_against_oracle():
    rng = np.random.default_rng(11)
    for _ in range(4):
        A = rng.normal(size=(2, 2))
        sol = schur_norm(A)
        oracle = schur_norm_2x2_grid(A)
        # oracle is a grid maximum of certified lower bounds
        assert oracle <= sol.value + 1e-7
        assert abs(sol.value - oracle) < 2e-3


def test_scaling_homogeneous():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(4, 5))
    v1 = schur_norm(A).value
    v3 = schur_norm(3.0 * A).value
    assert abs(v3 - 3.0 * v1) < 1e-6 * max(1.0, v3)


def test_submatrix_monotone():
    rng = np.random.default_rng(6)
    A = rng.normal(size=(6, 6))
    full = schur_norm(A).value
    sub = schur_norm(A[np.ix_([0, 2, 4], [1, 3])]).value
    assert sub <= full + 1e-7


def test_entry_lower_bound():
    rng = np.random.default_rng(7)
    A = rng.normal(size=(5, 4))
    sol = schur_norm(A)
    assert sol.value >= np.abs(A).max() - 1e-7


def test_complex_hermitian_psd():
    A = np.array([[1.0, 1j], [-1j, 1.0]])
    sol = schur_norm(A)
    assert abs(sol.value - 1.0) < 1e-6
    assert sol.witness_residual < 1e-7


def test_complex_generic_sandwich():
    rng = np.random.default_rng(8)
    A = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    sol = schur_norm(A)
    assert sol.witness_residual < 1e-6
    assert sol.lower_bound <= sol.value + 1e-8
    assert sol.value <= sol.upper_bound + 1e-6
    assert sol.value - sol.lower_bound < 1e-5


def test_rank_one_value():
    u = np.array([2.0, -1.0, 0.5])
    v = np.array([1.0, 3.0])
    sol = schur_norm(np.outer(u, v))
    assert abs(sol.value - 2.0 * 3.0) < 1e-6


def test_zero_and_empty():
    z = schur_norm(np.zeros((3, 2)))
    assert z.value == 0.0 and z.converged
    e = schur_norm(np.zeros((0, 0)))
    assert e.value == 0.0


def test_certificate_reverifies_from_scratch():
    rng = np.random.default_rng(9)
    A = rng.normal(size=(4, 4))
    sol = schur_norm(A)
    lb = certificate_lower_bound(A, sol.mu, sol.nu, sol.R)
    assert abs(lb - sol.lower_bound) < 1e-12
    assert lb <= sol.value + 1e-8
    assert lb >= sol.value - 1e-5


def test_certificate_rejects_bogus():
    A = np.eye(2)
    mu = np.array([0.25, 0.25])
    nu = np.array([0.25, 0.25])
    with pytest.raises(ValueError):
        certificate_lower_bound(A, mu, nu, np.full((2, 2), 5.0))
    with pytest.raises(ValueError):
        certificate_lower_bound(A, 3 * mu, nu, np.zeros((2, 2)))


def test_witness_helpers():
    x = np.array([[1.0, 0.0], [0.0, 2.0]])
    y = np.array([[1.0, 1.0]])
    A = x @ y.conj().T
    assert verify_witness(A, x, y) == 0.0
    assert witness_upper_bound(x, y) == pytest.approx(2.0 * math.sqrt(2.0))


def test_deterministic():
    rng = np.random.default_rng(10)
    A = rng.normal(size=(5, 3))
    a = schur_norm(A)
    b = schur_norm(A)
    assert a.value == b.value
    assert a.iterations == b.iterations
    assert np.array_equal(a.R, b.R)


def test_nonconvergence_raises():
    rng = np.random.default_rng(12)
    A = rng.normal(size=(4, 4))
    with pytest.raises(SolverError):
        schur_norm(A, tol=1e-12, max_iter=3)


def test_nonsquare_and_single():
    assert abs(schur_norm(np.array([[3.0]])).value - 3.0) < 1e-7
    rng = np.random.default_rng(13)
    A = rng.normal(size=(1, 6))
    # one row: norm is the sup of absolute entries
    assert abs(schur_norm(A).value - np.abs(A).max()) < 1e-6


def test_psd_check():
    ok, lam = psd_check(np.eye(3))
    assert ok and lam == pytest.approx(1.0)
    bad, lam2 = psd_check(np.diag([1.0, -0.5]))
    assert not bad and lam2 == pytest.approx(-0.5)


entries = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


@given(st.lists(entries, min_size=9, max_size=9), st.floats(min_value=0.1, max_value=4.0))
@settings(max_examples=10, deadline=None)
def test_scaling_property(vals, c):
    A = np.array(vals).reshape(3, 3)
    if not np.any(A):
        return
    v1 = schur_norm(A, tol=1e-7).value
    vc = schur_norm(c * A, tol=1e-7).value
    assert abs(vc - c * v1) <= 1e-5 * max(1.0, vc)


def test_matrix_csv_roundtrip():
    rng = np.random.default_rng(14)
    A = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    buf = io.StringIO()
    write_matrix_csv(buf, A, header_lines=["# config tol=1e-08"])
    back = read_matrix_csv(io.StringIO(buf.getvalue()))
    assert np.array_equal(back, A)


def test_matrix_binary_roundtrip():
    rng = np.random.default_rng(15)
    A = rng.normal(size=(2, 5)) + 1j * rng.normal(size=(2, 5))
    buf = io.BytesIO()
    write_matrix_binary(buf, A)
    raw = buf.getvalue()
    assert raw[:5] == b"SCHR1"
    back = read_matrix_binary(io.BytesIO(raw))
    assert np.array_equal(back, A)


def test_matrix_binary_rejects_garbage():
    with pytest.raises(ValueError):
        read_matrix_binary(io.BytesIO(b"NOPE!" + b"\0" * 8))
    buf = io.BytesIO()
    write_matrix_binary(buf, np.ones((2, 2)))
    with pytest.raises(ValueError):
        read_matrix_binary(io.BytesIO(buf.getvalue()[:-8]))


def test_matrix_csv_rejects_ragged():
    with pytest.raises(ValueError):
        read_matrix_csv(io.StringIO("1+0i,2+0i\n3+0i\n"))
