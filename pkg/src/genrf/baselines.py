"""Comparator tests: the p-df linear-regression F-test and a SKAT-style score test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .data import InputError, check_design
from .field import mixture_eigenvalues
from .kernel import ibs_matrix
from .quadform import tail_prob_weighted_chisq


@dataclass(frozen=True, eq=False)
class LinearResult:
    """F-test of all genotype main effects; ``kept`` indexes the columns used."""

    f_stat: float
    p_value: float
    df_num: int
    df_den: int
    kept: tuple
    method_note: str = ""
    n: int = 0
    q: int = 0
    method: str = "LINEAR"

    @property
    def statistic(self) -> float:
        return self.f_stat

    @property
    def n_eigen_dropped(self) -> int:
        return 0


@dataclass(frozen=True, eq=False)
class SkatResult:
    """Variance-component score test with statistic ``Q = r'Kr``."""

    q_stat: float
    p_value: float
    eigenvalues: np.ndarray
    sigma_sq: float
    n_eigen_dropped: int
    method_note: str = ""
    n: int = 0
    q: int = 0
    approximate: bool = False
    method: str = "SKAT"

    @property
    def statistic(self) -> float:
        return self.q_stat


def ibs_kernel_matrix(geno, w=None) -> np.ndarray:
    """IBS kernel: the similarity matrix with diagonal ``2 * sum(w)`` kept."""
    k = ibs_matrix(geno, w)
    k.flags.writeable = False
    return k


def clean_genotype_columns(g) -> list[int]:
    """Indices of genotype columns that are neither constant nor repeats of earlier ones."""
    g = np.asarray(g)
    kept, seen = [], set()
    for k in range(g.shape[1]):
        col = g[:, k]
        if np.all(col == col[0]):
            continue
        key = col.tobytes()
        if key in seen:
            continue
        seen.add(key)
        kept.append(k)
    return kept


def linear_f_test(y, x, geno) -> LinearResult:
    """Classical F-test comparing ``Y ~ X`` against ``Y ~ X + G``.

    Constant and duplicated genotype columns are dropped first. The p-value
    is the F(p', n - q - p') upper tail, evaluated through the regularized
    incomplete beta function.

    Raises
    ------
    InputError
        If no genotype column survives, the residual degrees of freedom are
        exhausted, or ``[X | G]`` is rank deficient.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    x = np.ones((n, 1)) if x is None else check_design(x)
    g = np.asarray(geno)
    if g.shape[0] != n or x.shape[0] != n:
        raise InputError("phenotype, covariates and genotypes differ in row count")
    q = x.shape[1]
    kept = clean_genotype_columns(g)
    p = len(kept)
    if p == 0:
        raise InputError("no informative genotype columns for the F-test")
    df_den = n - q - p
    if df_den < 1:
        raise InputError(f"F-test needs n > q + p', got n={n}, q={q}, p'={p}")
    full = np.column_stack([x, g[:, kept].astype(float)])
    qf, rf = np.linalg.qr(full)
    d = np.abs(np.diag(rf))
    if d.min() < 1e-10 * d.max():
        raise InputError("design [X | G] is rank deficient after dropping redundant columns")
    q0, _ = np.linalg.qr(x)
    r0 = y - q0 @ (q0.T @ y)
    r1 = y - qf @ (qf.T @ y)
    rss0 = float(r0 @ r0)
    rss1 = float(r1 @ r1)
    if rss0 <= 1e-24 * max(float(y @ y), 1.0):
        return LinearResult(0.0, 1.0, p, df_den, tuple(kept), "no residual variation", n, q)
    gain = max(rss0 - rss1, 0.0)
    if rss1 <= 0.0:
        return LinearResult(np.inf, 0.0, p, df_den, tuple(kept), "perfect fit", n, q)
    f = (gain / p) / (rss1 / df_den)
    # F upper tail: I_{d2/(d2 + d1 F)}(d2/2, d1/2)
    pval = float(special.betainc(df_den / 2.0, p / 2.0, df_den / (df_den + p * f)))
    return LinearResult(float(f), pval, p, df_den, tuple(kept), "", n, q)


def skat_score_test(y, x, k) -> SkatResult:
    """Gaussian variance-component score test of ``H0: tau = 0``.

    With residuals ``r = BY`` and ``sigma^2 = r'r / (n - q)``, the null law of
    ``Q = r'Kr`` is the chi-square mixture with weights
    ``sigma^2 * eig(BKB)``.

    Raises
    ------
    InputError
        If the residual variance is zero.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    x = np.ones((n, 1)) if x is None else check_design(x)
    k = np.asarray(k, dtype=float)
    if k.shape != (n, n) or x.shape[0] != n:
        raise InputError("kernel, covariates and phenotype dimensions disagree")
    q = x.shape[1]
    qb, _ = np.linalg.qr(x)
    r = y - qb @ (qb.T @ y)
    rss = float(r @ r)
    if rss <= 1e-24 * max(float(y @ y), 1.0):
        raise InputError("zero residual variance; the score test is undefined")
    sigma_sq = rss / (n - q)
    stat = float(r @ k @ r)
    b = -qb @ qb.T
    b[np.diag_indices_from(b)] += 1.0
    bkb = b @ k @ b
    lam, dropped = mixture_eigenvalues(0.5 * (bkb + bkb.T), zero_scale=float(np.linalg.norm(k)))
    if lam.size == 0:
        return SkatResult(
            stat, 1.0, lam, sigma_sq, dropped, "degenerate: kernel has no residual variation", n, q
        )
    p, info = tail_prob_weighted_chisq(lam * sigma_sq, stat, full_output=True)
    note = "moment-matching approximation" if info.approximate else ""
    return SkatResult(stat, p, lam, sigma_sq, dropped, note, n, q, info.approximate)
