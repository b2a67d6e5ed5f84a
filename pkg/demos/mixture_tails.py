"""The chi-square mixture tail engine behind both GenRF and SKAT p-values."""

import numpy as np
from scipy import stats

from genrf.quadform import moment_match_tail, tail_prob_weighted_chisq

# equal weights reduce to a scaled chi-square
print("chi2_4 upper 5% point:", tail_prob_weighted_chisq([1, 1, 1, 1], 9.487729))

# mixed signs: the symmetric difference of two chi2_1 variables
for x in (-2.0, 0.0, 1.0, 4.0):
    print(f"P(chi2 - chi2' > {x:+.0f}) = {tail_prob_weighted_chisq([1, -1], x):.6f}")

# compare inversion, the three-cumulant approximation and brute force
lam = np.array([3.0, 1.0, 0.2])
rng = np.random.default_rng(1)
draws = (rng.standard_normal((2_000_000, 3)) ** 2) @ lam
print()
print(" x     exact     moment    Monte Carlo")
for x in (1.0, 4.0, 10.0, 20.0):
    p, info = tail_prob_weighted_chisq(lam, x, full_output=True)
    print(f"{x:4.0f}  {p:.6f}  {moment_match_tail(lam, x):.6f}  {np.mean(draws > x):.6f}")

# the approximation is exact for a single weight and drifts for skewed mixtures
print()
print("single weight, x=3:", moment_match_tail([2.0], 6.0), stats.chi2.sf(3.0, 1))
