"""Tail probabilities of weighted sums of independent chi-square(1) variables.

``P(sum_i lam_i * chi2_1 > x)`` is computed by numerically inverting the
characteristic function (Imhof's formula)::

    P(Q > x) = 1/2 + 1/pi * int_0^inf sin(theta(u)) / (u * rho(u)) du
    theta(u) = 1/2 * sum_i arctan(lam_i u) - x u / 2
    rho(u)   = prod_i (1 + lam_i^2 u^2) ** (1/4)

Weights may have either sign. When the adaptive quadrature does not reach
the requested accuracy the result falls back to a three-cumulant
chi-square approximation and is flagged as approximate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

#: absolute accuracy target of the exact path
TOL = 1e-6

# in units of max|lam|; beyond this the tail is integrated to infinity instead of bounded
_MAX_TRUNCATION = 400.0


@dataclass(frozen=True)
class MixtureSpec:
    """Mixture weights and the threshold whose upper tail is wanted."""

    lambdas: tuple
    x: float = 0.0

    def __post_init__(self):
        lam = tuple(float(v) for v in np.atleast_1d(np.asarray(self.lambdas, dtype=float)))
        if not lam or not all(math.isfinite(v) for v in lam):
            raise ValueError("mixture weights must be a nonempty list of finite numbers")
        if all(v == 0.0 for v in lam):
            raise ValueError("at least one mixture weight must be nonzero")
        if not math.isfinite(float(self.x)):
            raise ValueError("threshold must be finite")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "x", float(self.x))


@dataclass(frozen=True)
class TailResult:
    p_value: float
    approximate: bool
    abserr: float
    method: str


def _spec(lambdas, x):
    if isinstance(lambdas, MixtureSpec):
        return lambdas
    return MixtureSpec(tuple(np.ravel(lambdas)), x)


def cumulants(lambdas, order: int = 3) -> np.ndarray:
    """First ``order`` cumulants ``2^(r-1) (r-1)! sum(lam^r)`` of the mixture."""
    lam = np.asarray(lambdas, dtype=float)
    return np.array(
        [2.0 ** (r - 1) * math.factorial(r - 1) * np.sum(lam**r) for r in range(1, order + 1)]
    )


def moment_match_tail(lambdas, x: float = 0.0) -> float:
    """Three-cumulant approximation of ``P(sum lam_i chi2_1 > x)``.

    The mixture is replaced by ``shift + scale * chi2_df`` with matching
    mean, variance and third cumulant; a zero third cumulant degenerates to
    a normal approximation. Exact when all weights are equal and positive.
    """
    spec = _spec(lambdas, x)
    lam = np.asarray(spec.lambdas)
    lam = lam / np.max(np.abs(lam))
    x = spec.x / np.max(np.abs(spec.lambdas))
    c1, c2, c3 = cumulants(lam)
    if abs(c3) < 1e-12 * c2**1.5:
        return float(stats.norm.sf(x, loc=c1, scale=math.sqrt(c2)))
    scale = c3 / (4.0 * c2)
    df = 8.0 * c2**3 / c3**2
    shift = c1 - scale * df
    z = (x - shift) / scale
    if scale > 0:
        return float(stats.chi2.sf(z, df))
    return float(stats.chi2.cdf(z, df))


def _truncation_point(abs_lam, tol):
    """Smallest U whose analytic tail bound is below ``tol``.

    Using the j largest weights, rho(u) >= prod_{i<=j} (|lam_i| u)^(1/2), so the
    neglected part of the integral is at most
    2 / (pi * j * U^(j/2) * prod_{i<=j} |lam_i|^(1/2)).
    """
    a = np.sort(abs_lam)[::-1]
    j = np.arange(1, a.size + 1)
    log_prod = 0.5 * np.cumsum(np.log(a))
    log_u = (2.0 / j) * (math.log(2.0 / (math.pi * tol)) - np.log(j) - log_prod)
    return float(np.exp(np.min(log_u)))


def _amplitude(lam, u):
    # log space so huge u cannot overflow
    log_rho = 0.25 * np.sum(np.logaddexp(0.0, 2.0 * np.log(np.abs(lam) * u)))
    return math.exp(-math.log(u) - log_rho)


def _phase(lam, u):
    return 0.5 * np.sum(np.arctan(lam * u))


def _imhof(lam, x, tol, limit):
    """Returns (probability, error estimate, converged)."""
    omega = 0.5 * float(x)
    # a quarter of the budget each: head, oscillatory body, sine part, neglected tail
    eps = tol / 4.0
    cutoff = _truncation_point(np.abs(lam), eps)
    upper = cutoff if cutoff <= _MAX_TRUNCATION else np.inf

    def integrand(u):
        return math.sin(_phase(lam, u) - omega * u) * _amplitude(lam, u)

    # plain rule up to a couple of periods of the x-driven oscillation
    head_end = cutoff if omega == 0.0 else min(cutoff, 4.0 * math.pi / abs(omega))
    if head_end == cutoff:
        # the analytic bound already covers everything past the head
        upper = cutoff
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        # geometric segments so a long head cannot hide the mass near zero
        edges = [0.0]
        while edges[-1] < head_end:
            edges.append(min(head_end, max(1.0, 8.0 * edges[-1])))
        val, err, ok = 0.0, 0.0, True
        for a, b in zip(edges[:-1], edges[1:]):
            v, e, info = integrate.quad(
                integrand, a, b, epsabs=eps / len(edges), epsrel=0.0, limit=limit, full_output=1
            )[:3]
            val, err, ok = val + v, err + e, ok and info["last"] < limit
        ok = ok and err <= eps
        if head_end < upper:
            # sin(phi - w u) = sin(phi) cos(w u) - cos(phi) sin(w u), phi slowly varying
            w = abs(omega)
            sgn = math.copysign(1.0, omega)
            kw = {"wvar": w}
            if np.isinf(upper):
                kw["limlst"] = 200
            else:
                kw.update(epsabs=eps, epsrel=0.0, limit=limit)
            v1, e1 = integrate.quad(
                lambda u: math.sin(_phase(lam, u)) * _amplitude(lam, u),
                head_end, upper, weight="cos", **kw,
            )
            v2, e2 = integrate.quad(
                lambda u: math.cos(_phase(lam, u)) * _amplitude(lam, u),
                head_end, upper, weight="sin", **kw,
            )
            val += v1 - sgn * v2
            err += e1 + e2
            ok = ok and e1 + e2 <= 2 * eps
    return 0.5 + val / math.pi, err / math.pi, ok


def tail_prob_weighted_chisq(lambdas, x: float = 0.0, *, tol: float = TOL, full_output=False):
    """Upper tail ``P(sum_i lam_i * chi2_1 > x)`` of a chi-square mixture.

    Parameters
    ----------
    lambdas : array_like or MixtureSpec
        Mixture weights; any sign, at least one nonzero.
    x : float
        Threshold. Ignored when ``lambdas`` is a :class:`MixtureSpec`.
    tol : float
        Absolute accuracy target of the numerical inversion.
    full_output : bool
        Also return a :class:`TailResult` with the error estimate and a flag
        telling whether the moment-matching fallback was used.

    Returns
    -------
    float
        Probability in ``[0, 1]``.
    """
    spec = _spec(lambdas, x)
    lam = np.asarray(spec.lambdas)
    lam = lam[lam != 0.0]
    scale = np.max(np.abs(lam))
    lam = lam / scale
    xs = spec.x / scale

    if np.all(lam > 0) and xs <= 0.0:
        res = TailResult(1.0, False, 0.0, "exact")
    elif np.all(lam < 0) and xs >= 0.0:
        res = TailResult(0.0, False, 0.0, "exact")
    else:
        p, err, ok = _imhof(lam, xs, tol, limit=200)
        # outside [0, 1] by more than the tolerance means the quadrature misbehaved
        ok = ok and -tol <= p <= 1.0 + tol
        if ok:
            res = TailResult(min(max(p, 0.0), 1.0), False, err, "imhof")
        else:
            p = moment_match_tail(spec)
            res = TailResult(min(max(p, 0.0), 1.0), True, float("nan"), "moment_match")
    if full_output:
        return res.p_value, res
    return res.p_value
