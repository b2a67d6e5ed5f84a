"""Domain containers, validation and tab-separated file I/O.

Every container is immutable after construction: the wrapped arrays are
copied and flagged read-only, so they can be shared between worker threads.
All containers implement ``__array__`` and can be handed straight to numpy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MISSING_TOKENS = frozenset({"", "NA", "NaN", "nan", ".", "-"})

#: relative singular-value floor below which a design matrix is rank deficient
RANK_TOL = 1e-10


class InputError(ValueError):
    """Raised for malformed or inconsistent input data.

    ``path``, ``line`` and ``column`` locate the offending cell when known.
    """

    def __init__(self, message, path=None, line=None, column=None):
        self.path = None if path is None else str(path)
        self.line = line
        self.column = column
        where = []
        if self.path is not None:
            where.append(self.path)
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


def _frozen(values, dtype):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def _check_ids(ids, what):
    ids = tuple(str(i) for i in ids)
    seen = set()
    for i in ids:
        if i in seen:
            raise InputError(f"duplicate {what} id {i!r}")
        seen.add(i)
    return ids


def _default_ids(prefix, count):
    return tuple(f"{prefix}{i + 1}" for i in range(count))


@dataclass(frozen=True, eq=False)
class GenotypeMatrix:
    """n x p minor-allele counts, every entry in {0, 1, 2}."""

    values: np.ndarray
    subject_ids: tuple = ()
    variant_ids: tuple = ()

    def __post_init__(self):
        raw = np.asarray(self.values)
        if raw.ndim != 2:
            raise InputError(f"genotype matrix must be 2-D, got shape {raw.shape}")
        n, p = raw.shape
        if n < 2 or p < 1:
            raise InputError(f"genotype matrix needs n >= 2 and p >= 1, got {n}x{p}")
        if not np.all(np.isin(raw, (0, 1, 2))):
            i, k = np.argwhere(~np.isin(raw, (0, 1, 2)))[0]
            raise InputError(
                f"genotype entry {raw[i, k]!r} at row {i + 1}, variant {k + 1} "
                "is not in {0, 1, 2}"
            )
        object.__setattr__(self, "values", _frozen(raw, np.int8))
        sids = self.subject_ids or _default_ids("s", n)
        vids = self.variant_ids or _default_ids("v", p)
        if len(sids) != n or len(vids) != p:
            raise InputError("id labels do not match genotype matrix shape")
        object.__setattr__(self, "subject_ids", _check_ids(sids, "subject"))
        object.__setattr__(self, "variant_ids", _check_ids(vids, "variant"))

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def take(self, order) -> GenotypeMatrix:
        order = np.asarray(order)
        return GenotypeMatrix(
            self.values[order], tuple(self.subject_ids[i] for i in order), self.variant_ids
        )


@dataclass(frozen=True, eq=False)
class PhenotypeVector:
    """Trait values for n subjects; ``trait_kind`` is ``continuous`` or ``binary``."""

    values: np.ndarray
    subject_ids: tuple = ()
    trait_kind: str | None = None
    name: str = "trait"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise InputError(f"phenotype must be 1-D, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise InputError("phenotype contains non-finite values")
        is01 = bool(np.all((vals == 0) | (vals == 1)))
        kind = self.trait_kind
        if kind is None:
            kind = "binary" if is01 else "continuous"
        if kind not in ("continuous", "binary"):
            raise InputError(f"unknown trait kind {kind!r}")
        if kind == "binary" and not is01:
            raise InputError("binary trait must contain only 0 and 1")
        object.__setattr__(self, "values", _frozen(vals, float))
        object.__setattr__(self, "trait_kind", kind)
        sids = self.subject_ids or _default_ids("s", vals.size)
        if len(sids) != vals.size:
            raise InputError("subject ids do not match phenotype length")
        object.__setattr__(self, "subject_ids", _check_ids(sids, "subject"))

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def take(self, order) -> PhenotypeVector:
        order = np.asarray(order)
        return PhenotypeVector(
            self.values[order],
            tuple(self.subject_ids[i] for i in order),
            self.trait_kind,
            self.name,
        )


def check_design(x, min_residual_dim: int = 1) -> np.ndarray:
    """Validate a covariate design and return it as a float array.

    The first column must be the intercept, the matrix must have full column
    rank and ``n - q`` must be at least ``min_residual_dim``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InputError(f"design matrix must be 2-D, got shape {x.shape}")
    n, q = x.shape
    if not np.all(np.isfinite(x)):
        raise InputError("design matrix contains non-finite values")
    if not np.all(x[:, 0] == 1.0):
        raise InputError("first design column must be an intercept of ones")
    if n - q < min_residual_dim:
        need = "n > q" if min_residual_dim == 1 else f"n >= q + {min_residual_dim}"
        raise InputError(f"need {need} subjects, got n={n}, q={q}")
    sv = np.linalg.svd(x, compute_uv=False)
    if sv[-1] < RANK_TOL * sv[0]:
        raise InputError(
            f"design matrix is rank deficient (singular value ratio {sv[-1] / sv[0]:.3g})"
        )
    return x


@dataclass(frozen=True, eq=False)
class CovariateMatrix:
    """n x q design matrix whose first column is the intercept."""

    values: np.ndarray
    subject_ids: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        # n > q + 1 keeps at least two residual dimensions
        x = check_design(self.values, min_residual_dim=2)
        n, q = x.shape
        object.__setattr__(self, "values", _frozen(x, float))
        names = self.names or ("intercept",) + tuple(f"x{j}" for j in range(1, q))
        if len(names) != q:
            raise InputError("covariate names do not match column count")
        object.__setattr__(self, "names", tuple(str(c) for c in names))
        sids = self.subject_ids or _default_ids("s", n)
        if len(sids) != n:
            raise InputError("subject ids do not match covariate rows")
        object.__setattr__(self, "subject_ids", _check_ids(sids, "subject"))

    @property
    def q(self) -> int:
        return self.values.shape[1]

    @classmethod
    def intercept_only(cls, subject_ids) -> CovariateMatrix:
        subject_ids = tuple(subject_ids)
        return cls(np.ones((len(subject_ids), 1)), subject_ids, ("intercept",))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def take(self, order) -> CovariateMatrix:
        order = np.asarray(order)
        return CovariateMatrix(
            self.values[order], tuple(self.subject_ids[i] for i in order), self.names
        )


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Nonnegative per-variant weights with at least one positive entry."""

    w: np.ndarray
    variant_ids: tuple = ()

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InputError("weights must be a nonempty 1-D vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("weights must be finite and nonnegative")
        if not np.any(w > 0):
            raise InputError("at least one weight must be positive")
        object.__setattr__(self, "w", _frozen(w, float))
        object.__setattr__(self, "variant_ids", tuple(str(v) for v in self.variant_ids))

    @classmethod
    def ones(cls, p: int) -> WeightVector:
        return cls(np.ones(p))

    def __len__(self):
        return self.w.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.w, dtype=dtype)


@dataclass(frozen=True, eq=False)
class AlignedDataset:
    """Genotypes, phenotype and covariates sharing one subject order."""

    geno: GenotypeMatrix
    pheno: PhenotypeVector
    covar: CovariateMatrix
    subject_ids: tuple = field(init=False)

    def __post_init__(self):
        ids = self.geno.subject_ids
        if self.pheno.subject_ids != ids or self.covar.subject_ids != ids:
            raise InputError("components are not aligned; use align()")
        object.__setattr__(self, "subject_ids", ids)

    @property
    def n(self) -> int:
        return len(self.subject_ids)


def align(geno, pheno=None, covar=None) -> AlignedDataset:
    """Reorder phenotype and covariates into the genotype subject order.

    ``covar=None`` means intercept-only adjustment. Subject sets must agree
    exactly; any missing or extra ids raise :class:`InputError` listing them.
    An already aligned dataset is returned unchanged.
    """
    if isinstance(geno, AlignedDataset):
        return geno
    if pheno is None:
        raise TypeError("align() needs a phenotype")
    ids = geno.subject_ids
    if covar is None:
        covar = CovariateMatrix.intercept_only(ids)
    for label, other in (("phenotype", pheno), ("covariate", covar)):
        missing = sorted(set(ids) - set(other.subject_ids))
        extra = sorted(set(other.subject_ids) - set(ids))
        if missing or extra:
            parts = []
            if missing:
                parts.append(f"missing from {label}: {', '.join(missing)}")
            if extra:
                parts.append(f"not in genotypes: {', '.join(extra)}")
            raise InputError("subject id mismatch; " + "; ".join(parts))
    pos_p = {s: i for i, s in enumerate(pheno.subject_ids)}
    pos_c = {s: i for i, s in enumerate(covar.subject_ids)}
    if pheno.subject_ids != ids:
        pheno = pheno.take([pos_p[s] for s in ids])
    if covar.subject_ids != ids:
        covar = covar.take([pos_c[s] for s in ids])
    return AlignedDataset(geno, pheno, covar)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def _read_table(path):
    path = Path(path)
    if not path.exists():
        raise InputError("file does not exist", path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    rows = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError("file is empty", path)
    _, header = rows[0]
    if len(header) < 2:
        raise InputError("header needs a subject column and at least one data column", path, 1)
    body = []
    for lineno, r in rows[1:]:
        if len(r) != len(header):
            raise InputError(
                f"ragged row: expected {len(header)} fields, found {len(r)}", path, lineno
            )
        body.append((lineno, r))
    if not body:
        raise InputError("no data rows", path)
    return path, [c.strip() for c in header], body


def _parse_float(token, path, lineno, col):
    token = token.strip()
    if token in MISSING_TOKENS:
        raise InputError("missing value", path, lineno, col)
    try:
        val = float(token)
    except ValueError:
        raise InputError(f"cannot parse {token!r} as a number", path, lineno, col) from None
    if not np.isfinite(val):
        raise InputError(f"non-finite value {token!r}", path, lineno, col)
    return val


def _load_genotypes(path, header, body, impute_missing):
    names = header[1:]
    ids = [r[0].strip() for _, r in body]
    vals = np.empty((len(body), len(names)), dtype=float)
    for i, (lineno, r) in enumerate(body):
        for k, token in enumerate(r[1:]):
            token = token.strip()
            if token in MISSING_TOKENS:
                if not impute_missing:
                    raise InputError("missing genotype", path, lineno, names[k])
                vals[i, k] = np.nan
                continue
            try:
                g = int(token)
            except ValueError:
                raise InputError(
                    f"genotype {token!r} is not an integer", path, lineno, names[k]
                ) from None
            if g not in (0, 1, 2):
                raise InputError(f"genotype {g} is not in {{0, 1, 2}}", path, lineno, names[k])
            vals[i, k] = g
    if impute_missing:
        vals = impute_genotypes(vals)
    try:
        return GenotypeMatrix(vals.astype(np.int8), ids, names)
    except InputError as err:
        raise InputError(str(err), path) from None


def impute_genotypes(vals) -> np.ndarray:
    """Replace NaN entries by the variant mean rounded to the nearest of {0, 1, 2}."""
    vals = np.array(vals, dtype=float)
    for k in range(vals.shape[1]):
        col = vals[:, k]
        miss = np.isnan(col)
        if miss.all():
            raise InputError(f"variant column {k + 1} has no observed genotypes")
        if miss.any():
            col[miss] = np.clip(np.rint(col[~miss].mean()), 0, 2)
    return vals


def load_matrix_file(path, kind: str, *, impute_missing: bool = False, trait_kind=None):
    """Load a tab-separated genotype, phenotype or covariate file.

    The first row is a header naming the columns and the first column holds
    subject ids. Covariate files get an intercept column prepended unless
    their first data column is already all ones.

    Parameters
    ----------
    path : path-like
    kind : {"genotype", "phenotype", "covariate"}
    impute_missing : bool
        Genotypes only. Fill missing calls with the rounded variant mean
        instead of rejecting the file.
    trait_kind : {"continuous", "binary"}, optional
        Phenotypes only. Detected from the values when omitted.
    """
    path, header, body = _read_table(path)
    if kind == "genotype":
        return _load_genotypes(path, header, body, impute_missing)
    ids = [r[0].strip() for _, r in body]
    names = header[1:]
    vals = np.array(
        [[_parse_float(t, path, ln, names[k]) for k, t in enumerate(r[1:])] for ln, r in body]
    )
    try:
        if kind == "phenotype":
            if len(names) != 1:
                raise InputError(f"phenotype file must have exactly one trait column, got {len(names)}")
            return PhenotypeVector(vals[:, 0], ids, trait_kind, names[0])
        if kind == "covariate":
            if not np.all(vals[:, 0] == 1.0):
                vals = np.column_stack([np.ones(len(ids)), vals])
                names = ["intercept"] + names
            return CovariateMatrix(vals, ids, names)
    except InputError as err:
        raise InputError(str(err), path) from None
    raise ValueError(f"unknown matrix kind {kind!r}")


def load_weights(path, variant_ids: Sequence[str] | None = None) -> WeightVector:
    """Read a two-column ``variant_id<TAB>weight`` file.

    With ``variant_ids`` the weights are reordered to match; unknown or
    absent variants raise :class:`InputError`.
    """
    path, header, body = _read_table(path)
    if len(header) != 2:
        raise InputError("weight file must have exactly two columns", path, 1)
    ids = [r[0].strip() for _, r in body]
    w = [_parse_float(r[1], path, ln, header[1]) for ln, r in body]
    if len(set(ids)) != len(ids):
        raise InputError("duplicate variant id in weight file", path)
    if variant_ids is not None:
        lookup = dict(zip(ids, w))
        absent = [v for v in variant_ids if v not in lookup]
        extra = sorted(set(ids) - set(variant_ids))
        if absent or extra:
            raise InputError(
                f"weight file variants differ from genotypes (missing {absent}, extra {extra})",
                path,
            )
        ids = list(variant_ids)
        w = [lookup[v] for v in ids]
    try:
        return WeightVector(np.array(w), tuple(ids))
    except InputError as err:
        raise InputError(str(err), path) from None


def _fmt_real(v: float) -> str:
    # repr is the shortest string that round-trips exactly
    return repr(float(v))


def write_matrix_file(obj, path) -> None:
    """Write a container back to the tab-separated layout ``load_matrix_file`` reads."""
    if isinstance(obj, GenotypeMatrix):
        header = ["subject_id", *obj.variant_ids]
        rows = [[sid, *(str(int(g)) for g in row)] for sid, row in zip(obj.subject_ids, obj.values)]
    elif isinstance(obj, PhenotypeVector):
        header = ["subject_id", obj.name]
        rows = [[sid, _fmt_real(v)] for sid, v in zip(obj.subject_ids, obj.values)]
    elif isinstance(obj, CovariateMatrix):
        header = ["subject_id", *obj.names]
        rows = [[sid, *map(_fmt_real, row)] for sid, row in zip(obj.subject_ids, obj.values)]
    elif isinstance(obj, WeightVector):
        header = ["variant_id", "weight"]
        vids = obj.variant_ids or _default_ids("v", len(obj))
        rows = [[v, _fmt_real(w)] for v, w in zip(vids, obj.w)]
    else:
        raise TypeError(f"cannot write {type(obj).__name__}")
    _write_rows(path, header, rows)


def _write_rows(path, header: Iterable[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
