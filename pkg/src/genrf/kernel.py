"""Weighted identity-by-state similarity between subjects.

For genotype rows ``g_i`` and ``g_j`` the similarity is
``sum_k w_k * (2 - |g_ik - g_jk|)``, i.e. the weighted number of alleles
the two subjects share. The random-field similarity matrix ``S`` carries
these values off the diagonal and zeros on it.
"""

from __future__ import annotations

import numpy as np

from .data import InputError


def _weights(w, p):
    if w is None:
        return np.ones(p)
    w = np.asarray(w, dtype=float)
    if w.shape != (p,):
        raise InputError(f"expected {p} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.any(w > 0) or not np.all(np.isfinite(w)):
        raise InputError("weights must be finite, nonnegative and not all zero")
    return w


def ibs_pair(g_i, g_j, w=None) -> float:
    """Weighted IBS similarity of two genotype vectors.

    >>> ibs_pair([2], [2])
    2.0
    >>> ibs_pair([2, 0], [1, 1], [0.5, 2.0])
    2.5
    """
    g_i = np.asarray(g_i, dtype=float)
    g_j = np.asarray(g_j, dtype=float)
    if g_i.shape != g_j.shape or g_i.ndim != 1:
        raise InputError(f"genotype vectors differ in shape: {g_i.shape} vs {g_j.shape}")
    w = _weights(w, g_i.size)
    return float(np.sum(w * (2.0 - np.abs(g_i - g_j))))


def ibs_matrix(geno, w=None) -> np.ndarray:
    """Full weighted IBS matrix including the self-similarity diagonal.

    Uses allele-count indicators so the pairwise sum becomes three matrix
    products instead of an n x n x p intermediate.
    """
    g = np.asarray(geno)
    if g.ndim != 2:
        raise InputError(f"genotype matrix must be 2-D, got shape {g.shape}")
    w = _weights(w, g.shape[1])
    i0 = (g == 0).astype(float)
    i1 = (g == 1).astype(float)
    i2 = (g == 2).astype(float)
    if (i0 + i1 + i2).min(initial=1.0) < 1.0:
        raise InputError("genotype entries must be in {0, 1, 2}")
    # |a - b| is 1 for (0,1),(1,2) pairs and 2 for (0,2) pairs
    a = (i0 * w) @ i1.T + (i1 * w) @ i2.T + 2.0 * (i0 * w) @ i2.T
    return 2.0 * w.sum() - (a + a.T)


def similarity_matrix(geno, w=None) -> np.ndarray:
    """Weighted IBS similarity matrix with the diagonal forced to zero.

    Parameters
    ----------
    geno : GenotypeMatrix or array_like, shape (n, p)
    w : WeightVector or array_like, shape (p,), optional
        Per-variant weights; unit weights when omitted.

    Returns
    -------
    ndarray, shape (n, n)
        Symmetric, zero diagonal, off-diagonal entries in ``[0, 2 * sum(w)]``.
    """
    s = ibs_matrix(geno, w)
    np.fill_diagonal(s, 0.0)
    s.flags.writeable = False
    return s


def check_similarity(s, atol: float = 0.0) -> np.ndarray:
    """Validate the symmetric / zero-diagonal shape of a similarity matrix."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InputError(f"similarity matrix must be square, got shape {s.shape}")
    if not np.allclose(s, s.T, rtol=0.0, atol=atol):
        raise InputError("similarity matrix is not symmetric")
    if np.any(np.diag(s) != 0.0):
        raise InputError("similarity matrix must have a zero diagonal")
    return s
