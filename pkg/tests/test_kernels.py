import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sinsbudget import _kernels_py, kernels

compiled = pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")


def sparse_phi(rng, n, density=0.3):
    """Transition-like matrix: identity plus sparse off-diagonal coupling."""
    phi = np.eye(n) + rng.standard_normal((n, n)) * (rng.random((n, n)) < density)
    phi[n // 2 :, :] = np.eye(n)[n // 2 :, :]  # constant-parameter rows
    return phi


def test_backend_switch_roundtrip():
    start = kernels.backend()
    kernels.use_backend("python")
    assert kernels.backend() == "python"
    kernels.use_backend(start)
    assert kernels.backend() == start
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(0, 5))
def test_congruence_matches_definition(seed, n, count):
    rng = np.random.default_rng(seed)
    phi = sparse_phi(rng, n)
    a = rng.standard_normal((count, n, n))
    parts = a + a.transpose(0, 2, 1)
    ref = np.einsum("ij,kjl,ml->kim", phi, parts, phi)
    for name in kernels.available_backends():
        kernels.use_backend(name)
        out = kernels.congruence_batch(phi, parts)
        np.testing.assert_allclose(out, ref, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(ref).max(initial=0.0)))
        np.testing.assert_array_equal(out, out.transpose(0, 2, 1))
    kernels.use_backend(kernels.available_backends()[0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 150))
def test_transition_matches_definition(seed, n, rows):
    rng = np.random.default_rng(seed)
    phi = sparse_phi(rng, n)
    X = rng.standard_normal((rows, n))
    ref = X @ phi.T
    for name in kernels.available_backends():
        kernels.use_backend(name)
        out = kernels.transition_batch(phi, X.copy())
        np.testing.assert_allclose(out, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())
        Y = X.copy()
        res = kernels.transition_batch(phi, Y, inplace=True)
        np.testing.assert_allclose(Y, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())
        assert res is None or np.shares_memory(res, Y)
    kernels.use_backend(kernels.available_backends()[0])


@compiled
def test_compiled_congruence_is_deterministic():
    from sinsbudget import _kernels

    rng = np.random.default_rng(1)
    phi = sparse_phi(rng, 30)
    parts = np.array([np.diag(rng.random(30)) for _ in range(34)])
    a = _kernels.congruence_batch(phi, parts)
    b = _kernels.congruence_batch(phi, parts.copy())
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(a, _kernels_py.congruence_batch(phi, parts), rtol=1e-13, atol=1e-16)
