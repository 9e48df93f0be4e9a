import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pncalc import linalg, spectra, synth
from pncalc.errors import (
    ClusterSeparationError,
    ConfigError,
    ContourTooCloseError,
    DecompositionError,
)


def _jordan(lam, size, nil=1.0):
    return synth.jordan_block(lam, size, nil)


def test_contour_validation():
    with pytest.raises(ConfigError):
        spectra.Contour(center=0.0, radius=0.0, nodes=32)
    with pytest.raises(ConfigError):
        spectra.Contour(center=0.0, radius=1.0, nodes=8)
    c = spectra.Contour(center=1.0 + 1.0j, radius=2.0, nodes=32)
    zs = c.points()
    assert zs.shape == (32,)
    assert np.allclose(np.abs(zs - (1.0 + 1.0j)), 2.0)


def test_cluster_eigenvalues_single_linkage():
    vals = np.array([0.0, 1e-7, 2e-7, 1.0, 1.0 + 1e-7, 3.0])
    groups = spectra.cluster_eigenvalues(vals, tol=1.5e-7)
    # chains 0~1e-7~2e-7 merge transitively; sorted by (Re, Im)
    members = [sorted(idx) for _, idx in groups]
    assert len(groups) == 3
    assert members[0] == [0, 1, 2]
    assert members[1] == [3, 4]
    assert members[2] == [5]
    assert abs(groups[0][0] - 1e-7) <= 1e-13  # representative is the mean


def test_riesz_projector_whole_spectrum_is_identity():
    x = _jordan(1.0, 2)  # defective: eigenvector methods cannot see this
    c = spectra.Contour(center=1.0, radius=1.0, nodes=64)
    p = spectra.riesz_projector(x, c)
    assert np.linalg.norm(p - np.eye(2), 2) <= 1e-12


def test_riesz_projector_selects_cluster():
    x = np.diag([0.0, 0.0, 5.0]).astype(complex)
    c = spectra.Contour(center=0.0, radius=1.0, nodes=64)
    p = spectra.riesz_projector(x, c)
    assert np.linalg.norm(p - np.diag([1.0, 1.0, 0.0]), 2) <= 1e-12


def test_riesz_projector_eigenvalue_on_contour_rejected():
    x = np.diag([0.0, 1.0]).astype(complex)
    c = spectra.Contour(center=0.0, radius=1.0, nodes=64)
    with pytest.raises(ContourTooCloseError):
        spectra.riesz_projector(x, c)


def test_nilpotency_index_shift_matrix():
    n = np.diag(np.ones(2), 1).astype(complex)  # 3x3 shift
    assert spectra.nilpotency_index(n, scale=1.0) == 3
    assert spectra.nilpotency_index(np.zeros((3, 3), dtype=complex), scale=1.0) == 1


def test_decompose_golden_block_diag():
    # blkdiag(J_2(0), J_3(2)): components (0, m=2, nu=2) and (2, m=3, nu=3)
    x = synth.block_diag([_jordan(0.0, 2), _jordan(2.0, 3)])
    dec = spectra.decompose(x)
    assert [(c.multiplicity, c.index) for c in dec.components] == [(2, 2), (3, 3)]
    assert abs(dec.components[0].eigenvalue - 0.0) <= 1e-10
    assert abs(dec.components[1].eigenvalue - 2.0) <= 1e-10
    p0 = np.zeros((5, 5), dtype=complex)
    p0[:2, :2] = np.eye(2)
    assert np.linalg.norm(dec.components[0].projector - p0, 2) <= 1e-10
    n1 = dec.components[1].nilpotent
    assert np.linalg.norm(n1[2:, 2:] - np.diag(np.ones(2), 1), 2) <= 1e-10


def test_decompose_verifies_invariants():
    rng = np.random.default_rng(11)
    x, truth = synth.random_jordan_matrix(rng, 6, max_index=3, cond=8.0)
    dec = spectra.decompose(x, cluster_tol=1e-3 * max(1.0, linalg.op_norm(x)))
    assert [(c.multiplicity) for c in dec.components] == [s for _, s in truth]
    checks = spectra.verify_decomposition(x, dec)
    for name, (measured, bound) in checks.items():
        assert measured <= bound, f"{name}: {measured} > {bound}"


def test_decompose_similarity_covariance():
    rng = np.random.default_rng(12)
    x = synth.block_diag([_jordan(0.0, 2), _jordan(1.5, 2)])
    s = synth.conditioned_similarity(rng, 4, 5.0)
    sinv = np.linalg.inv(s)
    dec_x = spectra.decompose(x)
    dec_y = spectra.decompose(s @ x @ sinv, cluster_tol=1e-5 * linalg.op_norm(x))
    for cx, cy in zip(dec_x.components, dec_y.components):
        assert abs(cx.eigenvalue - cy.eigenvalue) <= 1e-6
        assert cx.multiplicity == cy.multiplicity and cx.index == cy.index
        assert np.linalg.norm(s @ cx.projector @ sinv - cy.projector, 2) <= 1e-7


def test_decompose_hermitian_is_diagonalizable():
    rng = np.random.default_rng(13)
    x = synth.random_hermitian(rng, 6)
    dec = spectra.decompose(x)
    scale = linalg.op_norm(x)
    for c in dec.components:
        assert c.index == 1
        assert linalg.op_norm(c.nilpotent) <= 1e-10 * scale


def test_decompose_cluster_separation_guard():
    # two clusters 3 * cluster_tol apart violate the 4x separability margin
    x = np.diag([0.0, 3e-6]).astype(complex)
    with pytest.raises(ClusterSeparationError):
        spectra.decompose(x, cluster_tol=1e-6)


def test_decompose_scatter_without_widened_tol():
    # a defective similarity scatters eigenvalues ~ (eps * cond)^(1/nu);
    # the default cluster_tol splits the cluster and integrality fails
    rng = np.random.default_rng(14)
    s = synth.conditioned_similarity(rng, 4, 50.0)
    x = s @ _jordan(1.0, 4) @ np.linalg.inv(s)
    with pytest.raises((DecompositionError, ClusterSeparationError)):
        spectra.decompose(x)
    dec = spectra.decompose(x, cluster_tol=5e-3 * linalg.op_norm(x))
    assert [(c.multiplicity, c.index) for c in dec.components] == [(4, 4)]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_decompose_reconstruction_property(seed):
    rng = np.random.default_rng(seed)
    x = synth.random_diagonalizable(rng, 5, cond=5.0)
    dec = spectra.decompose(x, cluster_tol=1e-4 * max(1.0, linalg.op_norm(x)))
    recon = sum(c.eigenvalue * c.projector + c.nilpotent for c in dec.components)
    assert np.linalg.norm(recon - x, 2) <= 1e-7 * max(1.0, linalg.op_norm(x))
    assert sum(c.multiplicity for c in dec.components) == 5


def test_decomposition_round_trip(tmp_path):
    x = synth.block_diag([_jordan(0.5j, 2), _jordan(2.0, 1)])
    dec = spectra.decompose(x)
    path = tmp_path / "dec.txt"
    spectra.write_decomposition(path, dec)
    back = spectra.read_decomposition(path)
    assert back.dim == dec.dim and len(back.components) == len(dec.components)
    for ca, cb in zip(dec.components, back.components):
        assert ca.eigenvalue == cb.eigenvalue
        assert ca.multiplicity == cb.multiplicity and ca.index == cb.index
        assert np.array_equal(ca.projector, cb.projector)
        assert np.array_equal(ca.nilpotent, cb.nilpotent)


def test_zero_matrix_decomposes():
    dec = spectra.decompose(np.zeros((3, 3), dtype=complex))
    assert len(dec.components) == 1
    c = dec.components[0]
    assert c.eigenvalue == 0.0 and c.multiplicity == 3 and c.index == 1
    assert np.linalg.norm(c.projector - np.eye(3), 2) <= 1e-12
