"""Genetic random field association test.

Under the conditional autoregressive model

    Y_i | Y_-i ~ beta'X_i + gamma * sum_{j != i} s_ij (Y_j - beta'X_j) + eps_i

the maximum pseudo-likelihood estimate of ``gamma`` with ``beta`` replaced by
its null least-squares fit is

    gamma_hat = Y'BSBY / Y'BS^2BY,   B = I - X(X'X)^-1 X'.

Its null tail ``P(gamma_hat > eta)`` equals ``P(Z'(S - eta S^2)Z > 0)`` with
``Z ~ N(0, B)``, a chi-square mixture weighted by the eigenvalues of
``B(S - eta S^2)B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import InputError, check_design
from .quadform import tail_prob_weighted_chisq

#: eigenvalues below this fraction of max|lambda| are treated as exact zeros
EIGEN_DROP_TOL = 1e-8

#: relative size of S B Y below which the statistic is undefined
DEGENERATE_TOL = 1e-12


class DegenerateStatisticError(ArithmeticError):
    """The denominator Y'BS^2BY vanishes, so gamma_hat is undefined."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


@dataclass(frozen=True, eq=False)
class TestResult:
    """Outcome of :func:`genrf_test`.

    ``eigenvalues`` are the retained mixture weights in descending order.
    """

    __test__ = False  # keep pytest from collecting this class

    gamma_hat: float
    beta_hat: np.ndarray
    eigenvalues: np.ndarray
    p_value: float
    n_eigen_dropped: int
    method_note: str = ""
    n: int = 0
    q: int = 0
    approximate: bool = False
    method: str = field(default="GENRF", init=False)

    @property
    def statistic(self) -> float:
        return self.gamma_hat


@dataclass(frozen=True)
class GenRFFieldParams:
    """Parameters of the joint Gaussian field ``Y ~ N(X beta, zeta^2 (I - gamma S)^-1)``."""

    gamma: float
    beta: tuple
    zeta_sq: float = 1.0

    def __post_init__(self):
        if not self.zeta_sq > 0:
            raise ValueError(f"zeta_sq must be positive, got {self.zeta_sq}")
        object.__setattr__(self, "beta", tuple(float(b) for b in np.atleast_1d(self.beta)))


def _as_design(x, n):
    if x is None:
        return np.ones((n, 1))
    return check_design(x)


def _orthonormal_basis(x):
    q, r = np.linalg.qr(x)
    d = np.abs(np.diag(r))
    if d.min() < 1e-10 * d.max():
        raise InputError("X'X is numerically singular")
    return q, r


def projection_matrix(x) -> np.ndarray:
    """Residual-maker ``B = I - X (X'X)^-1 X'``.

    Formed from a thin QR factorisation, so ``B = I - QQ'``.
    """
    x = check_design(x)
    q, _ = _orthonormal_basis(x)
    b = -q @ q.T
    b[np.diag_indices_from(b)] += 1.0
    return b


def _residualize(y, q):
    return y - q @ (q.T @ y)


def _prepare(y, x, s):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise InputError(f"phenotype must be 1-D, got shape {y.shape}")
    n = y.size
    s = np.asarray(s, dtype=float)
    if s.shape != (n, n):
        raise InputError(f"similarity matrix shape {s.shape} does not match n={n}")
    x = _as_design(x, n)
    if x.shape[0] != n:
        raise InputError(f"design has {x.shape[0]} rows, phenotype has {n}")
    return y, x, s


def _statistic(y, s, q_basis):
    by = _residualize(y, q_basis)
    sby = s @ by
    num = float(by @ sby)
    den = float(sby @ sby)
    scale = float(np.linalg.norm(s) * np.linalg.norm(by)) if den > 0 else 0.0
    if not den > (DEGENERATE_TOL * scale) ** 2 or scale == 0.0:
        raise DegenerateStatisticError(
            "S B Y is numerically zero; the data carry no contrast in genetic similarity",
            {"numerator": num, "denominator": den, "norm_BY": float(np.linalg.norm(by))},
        )
    return num / den, by, sby


def genrf_statistic(y, x, s):
    """Pseudo-likelihood statistic ``gamma_hat`` and the null fit ``beta_hat``.

    Parameters
    ----------
    y : array_like, shape (n,)
    x : array_like, shape (n, q) or None
        Design with leading intercept column; ``None`` means intercept only.
    s : array_like, shape (n, n)
        Similarity matrix (symmetric, zero diagonal).

    Raises
    ------
    DegenerateStatisticError
        If ``Y'BS^2BY`` is zero relative to ``||S||_F ||BY||``.
    """
    y, x, s = _prepare(y, x, s)
    q_basis, r = _orthonormal_basis(x)
    gamma_hat, _, _ = _statistic(y, s, q_basis)
    beta_hat = np.linalg.solve(r, q_basis.T @ y)
    return gamma_hat, beta_hat


def mixture_matrix(s, b, eta) -> np.ndarray:
    """``B (S - eta S^2) B``, symmetrised."""
    sb = s @ b
    bsb = b @ sb
    m = bsb - eta * (sb.T @ sb)
    return 0.5 * (m + m.T)


def mixture_eigenvalues(m, drop_tol: float = EIGEN_DROP_TOL, zero_scale: float = 0.0):
    """Descending eigenvalues of a symmetric matrix with near-zeros removed.

    Eigenvalues below ``drop_tol * max|lambda|`` are dropped; all of them are
    when ``max|lambda|`` itself is below ``DEGENERATE_TOL * zero_scale``, i.e.
    rounding noise of a matrix whose entries are of size ``zero_scale``.
    Returns the retained eigenvalues and the number dropped.
    """
    lam = np.linalg.eigvalsh(m)[::-1]
    top = np.max(np.abs(lam)) if lam.size else 0.0
    if top <= DEGENERATE_TOL * zero_scale:
        top = 0.0
    keep = np.abs(lam) >= drop_tol * top if top > 0 else np.zeros(lam.size, bool)
    return lam[keep], int(lam.size - keep.sum())


def genrf_test(y, x, s) -> TestResult:
    """One-sided GenRF test of ``H0: gamma = 0``.

    Large ``gamma_hat`` gives small p-values. A vanishing denominator yields
    ``p_value = 1`` with an explanatory ``method_note`` instead of an error.
    """
    y, x, s = _prepare(y, x, s)
    n, q = x.shape
    q_basis, r = _orthonormal_basis(x)
    beta_hat = np.linalg.solve(r, q_basis.T @ y)
    try:
        eta, _, _ = _statistic(y, s, q_basis)
    except DegenerateStatisticError as err:
        return TestResult(
            float("nan"), beta_hat, np.empty(0), 1.0, 0, f"degenerate: {err}", n, q
        )
    b = -q_basis @ q_basis.T
    b[np.diag_indices_from(b)] += 1.0
    s_norm = float(np.linalg.norm(s))
    lam, dropped = mixture_eigenvalues(
        mixture_matrix(s, b, eta), zero_scale=s_norm + abs(eta) * s_norm**2
    )
    if lam.size == 0:
        return TestResult(
            eta, beta_hat, lam, 1.0, dropped, "degenerate: all mixture eigenvalues are zero", n, q
        )
    p, info = tail_prob_weighted_chisq(lam, 0.0, full_output=True)
    note = "moment-matching approximation" if info.approximate else ""
    return TestResult(eta, beta_hat, lam, p, dropped, note, n, q, info.approximate)


def sample_genrf_field(params: GenRFFieldParams, x, s, rng, size=None) -> np.ndarray:
    """Draw ``Y = X beta + v`` with ``v ~ N(0, zeta^2 (I - gamma S)^-1)``.

    ``size`` draws are stacked along the first axis when given.

    Raises
    ------
    ValueError
        If ``I - gamma S`` is not positive definite.
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[0]
    x = _as_design(x, n)
    beta = np.asarray(params.beta, dtype=float)
    if beta.size != x.shape[1]:
        raise ValueError(f"beta has {beta.size} entries, design has {x.shape[1]} columns")
    evals, evecs = np.linalg.eigh(s)
    prec = 1.0 - params.gamma * evals
    if prec.min() <= 0:
        raise ValueError(
            f"I - gamma*S is not positive definite for gamma={params.gamma}; "
            f"gamma must be below 1/lambda_max(S) = {1.0 / evals[-1]:.6g}"
        )
    shape = (n,) if size is None else (size, n)
    z = rng.standard_normal(shape)
    v = (z * (math.sqrt(params.zeta_sq) / np.sqrt(prec))) @ evecs.T
    return x @ beta + v
