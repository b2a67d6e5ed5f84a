"""Run the requested association tests on one aligned dataset."""

from __future__ import annotations

from .baselines import ibs_kernel_matrix, linear_f_test, skat_score_test
from .field import genrf_test
from .kernel import similarity_matrix
from .records import to_record

METHODS = ("GENRF", "SKAT", "LINEAR")


def parse_methods(spec) -> tuple:
    if isinstance(spec, str):
        spec = spec.split(",")
    methods = tuple(m.strip().upper() for m in spec if m.strip())
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise ValueError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return methods


def run_tests(dataset, methods=("GENRF",), weights=None) -> list:
    """Results of each method, in the order requested.

    ``dataset`` is an :class:`~genrf.data.AlignedDataset`; ``weights``
    defaults to one per variant.
    """
    methods = parse_methods(methods)
    g = dataset.geno.values
    y = dataset.pheno.values
    x = dataset.covar.values
    out = []
    for m in methods:
        if m == "GENRF":
            out.append(genrf_test(y, x, similarity_matrix(g, weights)))
        elif m == "SKAT":
            out.append(skat_score_test(y, x, ibs_kernel_matrix(g, weights)))
        else:
            out.append(linear_f_test(y, x, g))
    return out


def run_records(dataset, methods=("GENRF",), weights=None) -> list:
    """:func:`run_tests` flattened into result records."""
    p = dataset.geno.values.shape[1]
    return [to_record(r, p) for r in run_tests(dataset, methods, weights)]
