"""Seeded construction of structured test matrices.

Jordan-structured matrices are built as S J S^{-1} with the conditioning of
S controlled exactly (geometric singular values), so decomposition accuracy
can be studied as a function of cond(S).  Eigenvalues are drawn with a
minimum pairwise separation to keep clusters resolvable.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError


def jordan_block(lam: complex, size: int, nil_scale: float = 1.0) -> np.ndarray:
    j = np.eye(size, dtype=complex) * complex(lam)
    j += np.diag(np.full(size - 1, nil_scale, dtype=complex), 1)
    return j


def block_diag(blocks) -> np.ndarray:
    dim = sum(b.shape[0] for b in blocks)
    out = np.zeros((dim, dim), dtype=complex)
    pos = 0
    for b in blocks:
        k = b.shape[0]
        out[pos:pos + k, pos:pos + k] = b
        pos += k
    return out


def conditioned_similarity(rng: np.random.Generator, dim: int, cond: float) -> np.ndarray:
    """Random matrix with condition number exactly `cond` (2-norm)."""
    if cond < 1.0:
        raise ConfigError("condition number must be >= 1")
    q1, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    q2, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    if dim == 1:
        s = np.ones(1)
    else:
        s = cond ** np.linspace(0.5, -0.5, dim)
    return q1 @ np.diag(s.astype(complex)) @ q2


def separated_eigenvalues(rng: np.random.Generator, count: int, center: complex = 0.0,
                          spread: float = 0.75, min_sep: float = 0.3) -> np.ndarray:
    """`count` points in a disk, pairwise at least `min_sep` apart."""
    out: list[complex] = []
    for _ in range(10_000):
        if len(out) == count:
            break
        z = complex(center) + complex(rng.uniform(-spread, spread),
                                      rng.uniform(-spread, spread))
        if all(abs(z - w) >= min_sep for w in out):
            out.append(z)
    if len(out) != count:
        raise ConfigError(
            f"cannot place {count} eigenvalues with separation {min_sep} in spread {spread}")
    return np.array(out)


def random_jordan_matrix(rng: np.random.Generator, dim: int, max_index: int = 4,
                         cond: float = 6.0, nil_scale: float = 0.3,
                         center: complex = 0.0, spread: float = 0.6,
                         min_sep: float = 0.3):
    """S * blkdiag(J_1..J_m) * S^{-1} with block sizes <= max_index.

    Returns (matrix, truth) where truth is the list of (eigenvalue, size)
    pairs, one distinct eigenvalue per block.
    """
    sizes = []
    left = dim
    while left > 0:
        s = int(rng.integers(1, min(max_index, left) + 1))
        sizes.append(s)
        left -= s
    lams = separated_eigenvalues(rng, len(sizes), center, spread, min_sep)
    j = block_diag([jordan_block(l, s, nil_scale) for l, s in zip(lams, sizes)])
    s_mat = conditioned_similarity(rng, dim, cond)
    x = s_mat @ j @ np.linalg.inv(s_mat)
    return x, sorted(zip(lams.tolist(), sizes), key=lambda t: (t[0].real, t[0].imag))


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2.0


def random_diagonalizable(rng: np.random.Generator, dim: int, cond: float = 6.0,
                          center: complex = 0.0, spread: float = 0.6,
                          min_sep: float = 0.3) -> np.ndarray:
    lams = separated_eigenvalues(rng, dim, center, spread, min_sep)
    s_mat = conditioned_similarity(rng, dim, cond)
    return s_mat @ np.diag(lams) @ np.linalg.inv(s_mat)


def random_factor(rng: np.random.Generator, dim: int, max_index: int = 4,
                  cond: float = 6.0) -> np.ndarray:
    """Mixed-family factor for oracle sweeps: diagonal, hermitian, Jordan, generic."""
    kind = rng.integers(0, 4)
    if kind == 0:
        return np.diag(separated_eigenvalues(rng, dim))
    if kind == 1:
        return random_hermitian(rng, dim, 0.5).astype(complex)
    if kind == 2:
        return random_jordan_matrix(rng, dim, max_index, cond)[0]
    return random_diagonalizable(rng, dim, cond)
