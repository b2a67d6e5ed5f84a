"""Scenario generators and the Monte Carlo power/type-I engine.

Replicate ``r`` of a study draws from its own generator seeded with
``SeedSequence([seed, r])``, so any replicate can be re-run on its own and
results do not depend on scheduling or thread count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import special

from .baselines import linear_f_test, skat_score_test
from .field import genrf_test
from .kernel import ibs_matrix

METHODS = ("GENRF", "SKAT", "LINEAR")

FAMILIES = (
    "normal_main",
    "normal_interaction",
    "exponential_interaction",
    "glm_main",
    "mixture_normal_main",
)
GLM_DISTRIBUTIONS = ("normal", "exponential", "binary")

# families driven by the main-effect coefficient a; the rest use b
_USES_A = {"normal_main", "glm_main", "mixture_normal_main"}


class ScenarioError(ValueError):
    """Invalid scenario or phenotype-model configuration."""


class StudyError(RuntimeError):
    """Too many replicates failed for the study to be reported."""


@dataclass(frozen=True)
class PhenotypeModel:
    """How a trait is generated from genotypes.

    ``causal_locus`` is 1-based. ``distribution`` selects the response law
    of the ``glm_main`` family.
    """

    family: str = "normal_main"
    a: float = 0.0
    b: float = 0.0
    zeta_sq: float = 1.0
    causal_locus: int = 5
    mixture_gap: float = 10.0
    distribution: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ScenarioError(f"unknown phenotype family {self.family!r}")
        if self.family == "glm_main":
            if self.distribution not in GLM_DISTRIBUTIONS:
                raise ScenarioError(
                    f"glm_main needs distribution in {GLM_DISTRIBUTIONS}, got {self.distribution!r}"
                )
        elif self.distribution is not None:
            raise ScenarioError(f"distribution only applies to glm_main, not {self.family}")
        if self.family in _USES_A and self.b != 0:
            raise ScenarioError(f"family {self.family} uses a, not b")
        if self.family not in _USES_A and self.a != 0:
            raise ScenarioError(f"family {self.family} uses b, not a")
        if not self.zeta_sq > 0:
            raise ScenarioError("zeta_sq must be positive")
        if self.family == "exponential_interaction" and self.b < 0:
            raise ScenarioError("exponential_interaction needs b >= 0")
        if self.causal_locus < 1:
            raise ScenarioError("causal_locus is 1-based and must be >= 1")

    @property
    def effect(self) -> float:
        return self.a if self.family in _USES_A else self.b

    @property
    def is_null(self) -> bool:
        return self.effect == 0

    @property
    def is_binary(self) -> bool:
        return self.family == "glm_main" and self.distribution == "binary"

    @classmethod
    def from_dict(cls, d) -> PhenotypeModel:
        return cls(**_checked_keys(cls, d, "model"))


@dataclass(frozen=True)
class StudyScenario:
    """One Monte Carlo configuration.

    ``column`` labels the scenario in summary grids; scenarios sharing a
    column label are shown in the same grid column.
    """

    name: str = "scenario"
    n: int = 100
    p: int = 10
    maf: float = 0.3
    rho: float = 0.0
    model: PhenotypeModel = field(default_factory=PhenotypeModel)
    n_reps: int = 1000
    alpha: float = 0.05
    seed: int = 0
    methods: tuple = METHODS
    column: str | None = None

    def __post_init__(self):
        if isinstance(self.model, dict):
            object.__setattr__(self, "model", PhenotypeModel.from_dict(self.model))
        methods = tuple(str(m).upper() for m in self.methods)
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            raise ScenarioError(f"unknown methods {bad}; choose from {METHODS}")
        object.__setattr__(self, "methods", methods)
        if self.n < 3 or self.p < 1:
            raise ScenarioError("need n >= 3 subjects and p >= 1 loci")
        if not 0 < self.maf <= 0.5:
            raise ScenarioError(f"maf must lie in (0, 0.5], got {self.maf}")
        if not 0 <= self.rho < 1:
            raise ScenarioError(f"rho must lie in [0, 1), got {self.rho}")
        if self.n_reps < 1:
            raise ScenarioError("n_reps must be >= 1")
        if not 0 < self.alpha < 1:
            raise ScenarioError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= int(self.seed) < 2**64:
            raise ScenarioError("seed must be a 64-bit unsigned integer")
        if self.model.causal_locus > self.p:
            raise ScenarioError(f"causal_locus {self.model.causal_locus} exceeds p={self.p}")
        if self.model.family in ("normal_interaction", "exponential_interaction") and self.p < 10:
            raise ScenarioError("interaction families reference loci 1-10 and need p >= 10")

    @property
    def label(self) -> str:
        return self.column if self.column is not None else self.name

    def active_methods(self) -> tuple:
        # the score test has no small-sample correction for binary traits
        if self.model.is_binary:
            return tuple(m for m in self.methods if m != "SKAT")
        return self.methods

    @classmethod
    def from_dict(cls, d) -> StudyScenario:
        kw = _checked_keys(cls, d, "scenario")
        if "model" in kw:
            kw["model"] = PhenotypeModel.from_dict(kw["model"])
        if "methods" in kw:
            m = kw["methods"]
            kw["methods"] = tuple(m.split(",")) if isinstance(m, str) else tuple(m)
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d


def _checked_keys(cls, d, what):
    if not isinstance(d, dict):
        raise ScenarioError(f"{what} must be a mapping, got {type(d).__name__}")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ScenarioError(f"unknown {what} key(s): {', '.join(map(str, unknown))}")
    return dict(d)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def gen_correlated_haplotypes(count, p, maf, rho, rng) -> np.ndarray:
    """Binary haplotypes whose loci form a two-state Markov chain.

    The chain is stationary at ``Bernoulli(maf)`` and adjacent loci have
    Pearson correlation ``rho``:
    ``P(1 | 1) = maf + rho (1 - maf)`` and ``P(1 | 0) = maf (1 - rho)``.
    """
    if not 0 < maf <= 0.5:
        raise ScenarioError(f"maf must lie in (0, 0.5], got {maf}")
    if not 0 <= rho < 1:
        raise ScenarioError(f"rho must lie in [0, 1), got {rho}")
    u = rng.random((count, p))
    h = np.empty((count, p), dtype=np.int8)
    h[:, 0] = u[:, 0] < maf
    stay = maf + rho * (1.0 - maf)
    enter = maf * (1.0 - rho)
    for k in range(1, p):
        h[:, k] = u[:, k] < np.where(h[:, k - 1] == 1, stay, enter)
    return h


def gen_genotypes(n, p, maf, rho, rng) -> np.ndarray:
    """Genotypes as the sum of two independent haplotypes; entries in {0, 1, 2}."""
    h = gen_correlated_haplotypes(2 * n, p, maf, rho, rng)
    return h[:n] + h[n:]


def interaction_burden(g) -> np.ndarray:
    """``sum_{k=1..9} G_1 * G_{k+1}`` per subject."""
    g = np.asarray(g, dtype=float)
    return g[:, 0] * g[:, 1:10].sum(axis=1)


def gen_phenotype(model: PhenotypeModel, g, rng) -> np.ndarray:
    """Draw one trait vector for genotypes ``g`` under ``model``.

    ``exponential_interaction`` uses rate ``1 + b * burden`` so the null is
    Exponential(1). ``glm_main`` uses the identity link for normal, a log
    mean link for exponential and a zero-intercept logit for binary.
    ``mixture_normal_main`` adds noise from an equal mixture of
    ``N(+-gap/2, zeta^2)``.
    """
    g = np.asarray(g)
    n, p = g.shape
    sd = math.sqrt(model.zeta_sq)
    fam = model.family
    if fam in ("normal_interaction", "exponential_interaction") and p < 10:
        raise ScenarioError("interaction families need at least 10 loci")
    if model.causal_locus > p:
        raise ScenarioError(f"causal_locus {model.causal_locus} exceeds p={p}")
    causal = g[:, model.causal_locus - 1].astype(float)

    if fam == "normal_main":
        return model.a * causal + sd * rng.standard_normal(n)
    if fam == "normal_interaction":
        return model.b * interaction_burden(g) + sd * rng.standard_normal(n)
    if fam == "exponential_interaction":
        rate = 1.0 + model.b * interaction_burden(g)
        return rng.exponential(1.0 / rate)
    if fam == "mixture_normal_main":
        side = np.where(rng.random(n) < 0.5, -0.5, 0.5) * model.mixture_gap
        return model.a * causal + side + sd * rng.standard_normal(n)
    # glm_main
    eta = model.a * causal
    if model.distribution == "normal":
        return eta + sd * rng.standard_normal(n)
    if model.distribution == "exponential":
        return rng.exponential(np.exp(eta))
    return (rng.random(n) < special.expit(eta)).astype(float)


# ---------------------------------------------------------------------------
# study runner
# ---------------------------------------------------------------------------


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    """Generator for replicate ``r``: PCG64 seeded by ``SeedSequence([seed, r])``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(r)])))


def run_replicate(scenario: StudyScenario, r: int) -> dict:
    """p-values of every active method for replicate ``r``; ``nan`` marks a failure."""
    rng = replicate_rng(scenario.seed, r)
    g = gen_genotypes(scenario.n, scenario.p, scenario.maf, scenario.rho, rng)
    y = gen_phenotype(scenario.model, g, rng)
    k = ibs_matrix(g)
    s = k.copy()
    np.fill_diagonal(s, 0.0)
    out = {}
    for m in scenario.active_methods():
        try:
            if m == "GENRF":
                out[m] = genrf_test(y, None, s).p_value
            elif m == "SKAT":
                out[m] = skat_score_test(y, None, k).p_value
            else:
                out[m] = linear_f_test(y, None, g).p_value
        except (ValueError, ArithmeticError, np.linalg.LinAlgError):
            out[m] = float("nan")
    return out


@dataclass
class MethodSummary:
    method: str
    n_rejected: int
    n_valid: int
    n_excluded: int

    @property
    def rate(self) -> float:
        return self.n_rejected / self.n_valid if self.n_valid else float("nan")

    @property
    def se(self) -> float:
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.n_valid) if self.n_valid else float("nan")


@dataclass
class StudyReport:
    """Per-method rejection rates of one scenario.

    ``wall_time`` and ``pvalues`` are kept off the serialised forms so that
    reruns produce byte-identical files.
    """

    scenario: StudyScenario
    summaries: list
    wall_time: float = 0.0
    pvalues: dict | None = None

    @property
    def kind(self) -> str:
        return "Type I" if self.scenario.model.is_null else "Power"

    def summary(self, method: str) -> MethodSummary:
        for s in self.summaries:
            if s.method == method:
                return s
        raise KeyError(method)

    def rate(self, method: str) -> float:
        return self.summary(method).rate

    TSV_COLUMNS = (
        "scenario",
        "method",
        "kind",
        "rejection_rate",
        "se",
        "n_rejected",
        "n_valid",
        "n_excluded",
        "n_reps",
        "alpha",
        "seed",
    )

    def to_tsv(self) -> str:
        lines = ["\t".join(self.TSV_COLUMNS)]
        sc = self.scenario
        for s in self.summaries:
            row = (
                sc.name,
                s.method,
                self.kind,
                f"{s.rate:.6g}",
                f"{s.se:.6g}",
                s.n_rejected,
                s.n_valid,
                s.n_excluded,
                sc.n_reps,
                repr(sc.alpha),
                sc.seed,
            )
            lines.append("\t".join(map(str, row)))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "kind": self.kind,
            "results": [
                {
                    "method": s.method,
                    "rejection_rate": s.rate,
                    "se": s.se,
                    "n_rejected": s.n_rejected,
                    "n_valid": s.n_valid,
                    "n_excluded": s.n_excluded,
                }
                for s in self.summaries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def run_study(
    scenario: StudyScenario,
    threads: int = 1,
    keep_pvalues: bool = False,
    max_excluded: float = 0.01,
) -> StudyReport:
    """Run every replicate of ``scenario`` and tally rejections at ``alpha``.

    A method's replicate is excluded when its test raises (for instance a
    rank-deficient F-test design). More than ``max_excluded`` of replicates
    excluded for any method raises :class:`StudyError`.
    """
    t0 = time.perf_counter()
    reps = range(scenario.n_reps)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda r: run_replicate(scenario, r), reps))
    else:
        rows = [run_replicate(scenario, r) for r in reps]

    methods = scenario.active_methods()
    pv = {m: np.array([row[m] for row in rows]) for m in methods}
    summaries = []
    for m in methods:
        ok = ~np.isnan(pv[m])
        n_excl = int((~ok).sum())
        if n_excl > max_excluded * scenario.n_reps:
            raise StudyError(
                f"{scenario.name}: {m} failed on {n_excl} of {scenario.n_reps} replicates"
            )
        summaries.append(
            MethodSummary(m, int((pv[m][ok] < scenario.alpha).sum()), int(ok.sum()), n_excl)
        )
    return StudyReport(
        scenario, summaries, time.perf_counter() - t0, pv if keep_pvalues else None
    )


def format_grid(reports) -> str:
    """Table-style grid: one row per (method, Power/Type I), one column per label."""
    columns = []
    for rep in reports:
        if rep.scenario.label not in columns:
            columns.append(rep.scenario.label)
    methods = [m for m in METHODS if any(m in r.scenario.methods for r in reports)]
    cell = {}
    for rep in reports:
        for s in rep.summaries:
            cell[(s.method, rep.kind, rep.scenario.label)] = f"{s.rate:.3f}"
    width = max([8, *(len(c) for c in columns)])
    lines = ["Method  Kind    " + "".join(c.rjust(width + 1) for c in columns)]
    for m in methods:
        for kind in ("Power", "Type I"):
            if not any(k[:2] == (m, kind) for k in cell):
                continue
            vals = "".join(cell.get((m, kind, c), "*").rjust(width + 1) for c in columns)
            lines.append(f"{m:<8}{kind:<8}{vals}")
    return "\n".join(lines) + "\n"
