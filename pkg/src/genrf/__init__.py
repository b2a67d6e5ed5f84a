"""Genetic random field (GenRF) joint-association testing."""

__version__ = "0.1.0"

from .analysis import run_records, run_tests
from .baselines import ibs_kernel_matrix, linear_f_test, skat_score_test
from .data import (
    AlignedDataset,
    CovariateMatrix,
    GenotypeMatrix,
    InputError,
    PhenotypeVector,
    WeightVector,
    align,
    load_matrix_file,
    load_weights,
    write_matrix_file,
)
from .field import (
    DegenerateStatisticError,
    GenRFFieldParams,
    TestResult,
    genrf_statistic,
    genrf_test,
    projection_matrix,
    sample_genrf_field,
)
from .kernel import ibs_pair, similarity_matrix
from .quadform import MixtureSpec, moment_match_tail, tail_prob_weighted_chisq
from .simulate import (
    PhenotypeModel,
    StudyReport,
    StudyScenario,
    gen_correlated_haplotypes,
    gen_genotypes,
    gen_phenotype,
    run_study,
)
