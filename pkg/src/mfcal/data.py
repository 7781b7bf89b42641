"""Dataset containers, Latin hypercube sampling, [0,1] scaling and file I/O.

Datasets are immutable value objects: inputs and outputs are float64
matrices, each output column carries an observed flag, and rows may carry
a recency tag (generation order; larger means newer).  Unobserved output
columns hold sentinel values that no training or evaluation path reads.

Scaling is affine per column.  Ranges are fitted once on a base (low
fidelity) dataset and reused verbatim for every later calibration stage;
values outside the fitted range map outside [0,1] and are passed through
unclipped.
"""

from dataclasses import dataclass, field, replace
import warnings

import numpy as np

from .errors import DatasetFormatError
from .seeding import derive_rng

__all__ = [
    "Dataset",
    "ScalingRanges",
    "SplitSpec",
    "latin_hypercube",
    "fit_scaling",
    "scale",
    "unscale",
    "split",
    "subsample",
    "load_dataset",
    "save_dataset",
    "format_float",
]

# 17 significant digits round-trip IEEE doubles exactly.
FLOAT_FORMAT = ".17g"


def format_float(x: float) -> str:
    return format(float(x), FLOAT_FORMAT)


@dataclass(frozen=True)
class Dataset:
    """Input/output matrices plus per-output observation flags.

    inputs   : (n, d) float64
    outputs  : (n, m) float64; unobserved columns are sentinel-filled
    observed : m booleans, False for outputs with no ground truth
    recency  : optional (n,) int ordering tag, larger = newer
    """

    inputs: np.ndarray
    outputs: np.ndarray
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]
    observed: tuple[bool, ...]
    recency: np.ndarray | None = None
    fidelity_tag: str = ""

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        outputs = np.asarray(self.outputs, dtype=np.float64)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "input_names", tuple(self.input_names))
        object.__setattr__(self, "output_names", tuple(self.output_names))
        object.__setattr__(self, "observed", tuple(bool(o) for o in self.observed))
        if inputs.ndim != 2 or outputs.ndim != 2:
            raise ValueError("inputs and outputs must be 2-D matrices")
        if inputs.shape[0] != outputs.shape[0]:
            raise ValueError("inputs and outputs disagree on row count")
        if inputs.shape[0] < 1:
            raise ValueError("dataset must have at least one row")
        if inputs.shape[1] != len(self.input_names):
            raise ValueError("input_names length does not match input columns")
        if outputs.shape[1] != len(self.output_names):
            raise ValueError("output_names length does not match output columns")
        if len(self.observed) != outputs.shape[1]:
            raise ValueError("observed flags must match output columns")
        if not np.all(np.isfinite(inputs)):
            raise ValueError("inputs contain non-finite entries")
        obs = np.array(self.observed, dtype=bool)
        if obs.any() and not np.all(np.isfinite(outputs[:, obs])):
            raise ValueError("observed output columns contain non-finite entries")
        if self.recency is not None:
            rec = np.asarray(self.recency, dtype=np.int64)
            if rec.shape != (inputs.shape[0],):
                raise ValueError("recency must be one tag per row")
            object.__setattr__(self, "recency", rec)

    @property
    def n_rows(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.outputs.shape[1]

    def take(self, idx) -> "Dataset":
        """Row subset, preserving column metadata and recency tags."""
        idx = np.asarray(idx, dtype=np.intp)
        return replace(
            self,
            inputs=self.inputs[idx],
            outputs=self.outputs[idx],
            recency=None if self.recency is None else self.recency[idx],
        )


@dataclass(frozen=True)
class ScalingRanges:
    """Per-column (min, max) pairs fitted on a base dataset.

    Columns where max == min are flagged degenerate; they scale to 0.0 and
    unscale back to the stored constant.
    """

    input_names: tuple[str, ...]
    output_names: tuple[str, ...]
    input_min: np.ndarray
    input_max: np.ndarray
    output_min: np.ndarray
    output_max: np.ndarray

    def __post_init__(self):
        for name in ("input_min", "input_max", "output_min", "output_max"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        object.__setattr__(self, "input_names", tuple(self.input_names))
        object.__setattr__(self, "output_names", tuple(self.output_names))

    @property
    def degenerate_inputs(self) -> np.ndarray:
        return self.input_max == self.input_min

    @property
    def degenerate_outputs(self) -> np.ndarray:
        return self.output_max == self.output_min


@dataclass(frozen=True)
class SplitSpec:
    """Train fraction in (0,1) plus the seed of the shuffle."""

    train_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


def latin_hypercube(n: int, d: int, seed: int) -> np.ndarray:
    """n stratified samples in [0,1)^d: one point per stratum per dimension."""
    if n < 1 or d < 1:
        raise ValueError("latin_hypercube needs n >= 1 and d >= 1")
    rng = derive_rng(seed, "lhs")
    strata = np.empty((n, d))
    for j in range(d):
        strata[:, j] = rng.permutation(n)
    return (strata + rng.random((n, d))) / n


def fit_scaling(base: Dataset) -> ScalingRanges:
    """Column-wise min/max from the base dataset.

    Unobserved output columns get a degenerate (0, 0) range; their values
    are sentinels and must never reach a scaled computation.
    """
    obs = np.array(base.observed, dtype=bool)
    out_min = np.zeros(base.n_outputs)
    out_max = np.zeros(base.n_outputs)
    if obs.any():
        out_min[obs] = base.outputs[:, obs].min(axis=0)
        out_max[obs] = base.outputs[:, obs].max(axis=0)
    return ScalingRanges(
        input_names=base.input_names,
        output_names=base.output_names,
        input_min=base.inputs.min(axis=0),
        input_max=base.inputs.max(axis=0),
        output_min=out_min,
        output_max=out_max,
    )


def _scale_columns(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    with np.errstate(invalid="ignore"):
        scaled = (values - lo) / np.where(span == 0.0, 1.0, span)
    return np.where(span == 0.0, 0.0, scaled)

def _unscale_columns(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    return np.where(span == 0.0, lo, values * span + lo)


def scale_inputs(x: np.ndarray, ranges: ScalingRanges) -> np.ndarray:
    return _scale_columns(np.asarray(x, dtype=np.float64), ranges.input_min, ranges.input_max)

def unscale_inputs(x: np.ndarray, ranges: ScalingRanges) -> np.ndarray:
    return _unscale_columns(np.asarray(x, dtype=np.float64), ranges.input_min, ranges.input_max)

def scale_outputs(y: np.ndarray, ranges: ScalingRanges) -> np.ndarray:
    return _scale_columns(np.asarray(y, dtype=np.float64), ranges.output_min, ranges.output_max)

def unscale_outputs(y: np.ndarray, ranges: ScalingRanges) -> np.ndarray:
    return _unscale_columns(np.asarray(y, dtype=np.float64), ranges.output_min, ranges.output_max)


def _check_columns(data: Dataset, ranges: ScalingRanges):
    if data.input_names != ranges.input_names or data.output_names != ranges.output_names:
        raise ValueError(
            "dataset columns do not match the fitted ranges "
            f"(inputs {data.input_names} vs {ranges.input_names}, "
            f"outputs {data.output_names} vs {ranges.output_names})"
        )


def scale(data: Dataset, ranges: ScalingRanges) -> Dataset:
    """Affine map of every column onto the base ranges.

    Values outside the base range land outside [0,1] and are passed through
    with a warning; clipping would corrupt extrapolation studies.
    """
    _check_columns(data, ranges)
    x = scale_inputs(data.inputs, ranges)
    y = scale_outputs(data.outputs, ranges)
    obs = np.array(data.observed, dtype=bool)
    out_of_range = (x.min() < 0.0) or (x.max() > 1.0)
    if obs.any():
        yo = y[:, obs]
        out_of_range = out_of_range or (yo.min() < 0.0) or (yo.max() > 1.0)
    if out_of_range:
        warnings.warn(
            f"dataset {data.fidelity_tag or '<unnamed>'} has values outside the "
            "base scaling ranges; they are passed through unclipped",
            stacklevel=2,
        )
    return replace(data, inputs=x, outputs=y)


def unscale(data: Dataset, ranges: ScalingRanges) -> Dataset:
    _check_columns(data, ranges)
    return replace(
        data,
        inputs=unscale_inputs(data.inputs, ranges),
        outputs=unscale_outputs(data.outputs, ranges),
    )


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint, exhaustive (train, test) row indices.

    The train size is floor(train_fraction * n): the only rule consistent
    with a 90% split of 23 rows giving 20 train / 3 test.
    """
    if n < 2:
        raise ValueError("need at least two rows to split")
    n_train = int(np.floor(spec.train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise ValueError(
            f"train_fraction {spec.train_fraction} on {n} rows leaves an empty split"
        )
    perm = derive_rng(spec.seed, "split").permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded train/test partition of the rows."""
    train_idx, test_idx = split_indices(data.n_rows, spec)
    return data.take(train_idx), data.take(test_idx)


def subsample(data: Dataset, n: int, seed: int) -> Dataset:
    """Seeded choice of n rows without replacement (order preserved)."""
    if not 1 <= n <= data.n_rows:
        raise ValueError(f"cannot subsample {n} of {data.n_rows} rows")
    idx = derive_rng(seed, "subsample").permutation(data.n_rows)[:n]
    return data.take(np.sort(idx))


# ---------------------------------------------------------------------------
# file format: comma-separated text, role-prefixed header (in:/out:/recency),
# optional leading '# key: value' metadata lines, NA only in unobserved
# output columns.
# ---------------------------------------------------------------------------

_NA = "NA"


def save_dataset(data: Dataset, path):
    lines = []
    if data.fidelity_tag:
        lines.append(f"# fidelity: {data.fidelity_tag}")
    header = [f"in:{name}" for name in data.input_names]
    header += [f"out:{name}" for name in data.output_names]
    if data.recency is not None:
        header.append("recency")
    lines.append(",".join(header))
    for i in range(data.n_rows):
        cells = [format_float(v) for v in data.inputs[i]]
        for j in range(data.n_outputs):
            cells.append(format_float(data.outputs[i, j]) if data.observed[j] else _NA)
        if data.recency is not None:
            cells.append(str(int(data.recency[i])))
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()

    fidelity = ""
    line_no = 0
    while line_no < len(raw) and raw[line_no].startswith("#"):
        meta = raw[line_no][1:].strip()
        if meta.startswith("fidelity:"):
            fidelity = meta.split(":", 1)[1].strip()
        line_no += 1
    if line_no >= len(raw) or not raw[line_no].strip():
        raise DatasetFormatError(line_no + 1, "missing header row")

    header = [c.strip() for c in raw[line_no].split(",")]
    header_line = line_no + 1
    in_cols, out_cols, recency_col = [], [], None
    for pos, cell in enumerate(header):
        if cell.startswith("in:") and len(cell) > 3:
            in_cols.append((pos, cell[3:]))
        elif cell.startswith("out:") and len(cell) > 4:
            out_cols.append((pos, cell[4:]))
        elif cell == "recency":
            if recency_col is not None:
                raise DatasetFormatError(header_line, "duplicate recency column")
            recency_col = pos
        else:
            raise DatasetFormatError(header_line, f"unrecognized column {cell!r}")
    names = [c for _, c in in_cols] + [c for _, c in out_cols]
    if len(set(names)) != len(names):
        raise DatasetFormatError(header_line, "duplicated column name")
    if not in_cols or not out_cols:
        raise DatasetFormatError(header_line, "need at least one in: and one out: column")

    rows = [r for r in raw[header_line:] if r.strip()]
    n = len(rows)
    if n == 0:
        raise DatasetFormatError(header_line + 1, "no data rows")
    inputs = np.empty((n, len(in_cols)))
    outputs = np.empty((n, len(out_cols)))
    recency = np.empty(n, dtype=np.int64) if recency_col is not None else None
    # NA bookkeeping: first line where each output column was NA / numeric
    first_na = [0] * len(out_cols)
    first_num = [0] * len(out_cols)

    for i, row in enumerate(rows):
        cur_line = header_line + 1 + i
        cells = [c.strip() for c in row.split(",")]
        if len(cells) != len(header):
            raise DatasetFormatError(
                cur_line, f"expected {len(header)} cells, found {len(cells)}"
            )
        for k, (pos, name) in enumerate(in_cols):
            try:
                inputs[i, k] = float(cells[pos])
            except ValueError:
                raise DatasetFormatError(
                    cur_line, f"non-numeric value {cells[pos]!r} in column in:{name}"
                ) from None
        for k, (pos, name) in enumerate(out_cols):
            cell = cells[pos]
            if cell == _NA:
                outputs[i, k] = np.nan
                if not first_na[k]:
                    first_na[k] = cur_line
            else:
                try:
                    outputs[i, k] = float(cell)
                except ValueError:
                    raise DatasetFormatError(
                        cur_line, f"non-numeric value {cell!r} in column out:{name}"
                    ) from None
                if not first_num[k]:
                    first_num[k] = cur_line
        if recency_col is not None:
            try:
                recency[i] = int(cells[recency_col])
            except ValueError:
                raise DatasetFormatError(
                    cur_line, f"non-integer recency value {cells[recency_col]!r}"
                ) from None

    observed = []
    for k, (_, name) in enumerate(out_cols):
        if first_na[k] and first_num[k]:
            raise DatasetFormatError(
                max(first_na[k], first_num[k]),
                f"column out:{name} mixes NA with numeric values",
            )
        observed.append(not first_na[k])

    return Dataset(
        inputs=inputs,
        outputs=outputs,
        input_names=tuple(c for _, c in in_cols),
        output_names=tuple(c for _, c in out_cols),
        observed=tuple(observed),
        recency=recency,
        fidelity_tag=fidelity,
    )
