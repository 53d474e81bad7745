"""Dataset ingestion, normalization, k-fold splitting, and synthetic data.

File format: plain numeric text, one pattern per row, inputs first then
targets, whitespace- or comma-delimited (auto-detected).  An optional
sidecar descriptor file gives the column split and task type as key=value
lines: n_in, n_out, task={approx|class}, delimiter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import network, trainers
from .network import Dataset

NORMALIZATION_MODES = ("zscore", "minmax01", "none")
TASKS = ("approx", "class")


@dataclass(frozen=True)
class RawTable:
    """Numeric table with a declared input/target column split."""

    values: np.ndarray
    n_in: int
    n_out: int
    source: str = ""
    task: str = "approx"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("table values must be 2-D")
        if self.n_in < 1 or self.n_out < 1:
            raise ValueError("n_in and n_out must be positive")
        if values.shape[1] != self.n_in + self.n_out:
            raise ValueError(f"table has {values.shape[1]} columns, "
                             f"expected n_in + n_out = {self.n_in + self.n_out}")
        if not np.all(np.isfinite(values)):
            raise ValueError("table contains non-finite values")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        object.__setattr__(self, "values", values)

    @property
    def n_patterns(self) -> int:
        return self.values.shape[0]

    @property
    def inputs(self) -> np.ndarray:
        return self.values[:, :self.n_in]

    @property
    def targets(self) -> np.ndarray:
        return self.values[:, self.n_in:]

    def subset(self, indices) -> "RawTable":
        return replace(self, values=self.values[np.asarray(indices)])

    def to_dataset(self) -> Dataset:
        return Dataset.from_arrays(self.inputs, self.targets)


def load_table(path, n_in: int, n_out: int, delimiter: str | None = None,
               header: bool = False, task: str = "approx") -> RawTable:
    """Parse a numeric text file into a table.

    Rows must all carry n_in + n_out numeric fields; parse failures report
    the offending line number.  For classification files with a single
    integer label column the labels are expanded to one-hot targets.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if delimiter is None:
                delimiter = "," if "," in line else "ws"
            fields = line.split(",") if delimiter == "," else line.split()
            if len(fields) != n_in + n_out:
                raise ValueError(f"{path}:{lineno}: expected {n_in + n_out} "
                                 f"fields, found {len(fields)}")
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    values = np.asarray(rows, dtype=np.float64)
    if task == "class" and n_out == 1:
        values, n_out = _expand_labels(values, n_in)
    return RawTable(values=values, n_in=n_in, n_out=n_out, source=str(path),
                    task=task)


def _expand_labels(values: np.ndarray, n_in: int):
    labels = values[:, n_in]
    classes = np.unique(labels)
    if classes.shape[0] < 2:
        raise ValueError("classification table needs at least 2 classes")
    onehot = (labels[:, None] == classes[None, :]).astype(np.float64)
    return np.hstack([values[:, :n_in], onehot]), classes.shape[0]


def read_descriptor(path) -> dict:
    """Parse a key=value sidecar descriptor file."""
    spec = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            spec[key.strip()] = value.strip()
    return spec


def load_with_descriptor(data_path, desc_path) -> RawTable:
    spec = read_descriptor(desc_path)
    try:
        n_in = int(spec["n_in"])
        n_out = int(spec["n_out"])
    except KeyError as exc:
        raise ValueError(f"{desc_path}: missing required key {exc}") from None
    delimiter = spec.get("delimiter")
    if delimiter in ("ws", "whitespace", None):
        delimiter = None if delimiter is None else "ws"
    return load_table(data_path, n_in, n_out, delimiter=delimiter,
                      header=spec.get("header", "0") in ("1", "true", "yes"),
                      task=spec.get("task", "approx"))


def write_table(table: RawTable, path) -> None:
    """Write a table in the plain text format load_table reads."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in table.values:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-input affine normalization fitted on a table.

    Transformed input = (x - shift) / scale per column; constant columns get
    scale 1 and are flagged so they cannot be inverted ambiguously.
    """

    mode: str
    shift: np.ndarray
    scale: np.ndarray
    constant_mask: np.ndarray

    def apply(self, inputs: np.ndarray) -> np.ndarray:
        return (inputs - self.shift) / self.scale

    def invert(self, inputs: np.ndarray) -> np.ndarray:
        return inputs * self.scale + self.shift


def normalize(table: RawTable, mode: str = "zscore"):
    """Normalize the input columns of a table; targets are untouched.

    zscore: zero mean, unit variance per input column.
    minmax01: min 0, max 1 per input column.
    Constant columns are centered at zero and flagged.
    Returns (normalized table, NormalizationSpec).
    """
    if mode not in NORMALIZATION_MODES:
        raise ValueError(f"unknown normalization mode {mode!r}")
    if table.n_patterns == 0:
        raise ValueError("empty table")
    inputs = table.inputs
    if mode == "none":
        shift = np.zeros(table.n_in)
        scale = np.ones(table.n_in)
        constant = np.zeros(table.n_in, dtype=bool)
    elif mode == "zscore":
        shift = inputs.mean(axis=0)
        std = inputs.std(axis=0)
        constant = std <= 0.0
        scale = np.where(constant, 1.0, std)
    else:
        lo = inputs.min(axis=0)
        hi = inputs.max(axis=0)
        constant = hi <= lo
        shift = lo
        scale = np.where(constant, 1.0, hi - lo)
    spec = NormalizationSpec(mode=mode, shift=shift, scale=scale,
                             constant_mask=constant)
    values = np.hstack([spec.apply(inputs), table.targets])
    return replace(table, values=values), spec


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of patterns to k folds plus the rotation rule.

    Rotation j uses fold j for testing, fold (j+1) mod k for validation, and
    the remaining k-2 folds for training.
    """

    k: int
    assignments: np.ndarray

    @property
    def n_patterns(self) -> int:
        return self.assignments.shape[0]

    def rotation(self, j: int):
        if not 0 <= j < self.k:
            raise ValueError(f"rotation index {j} out of range")
        test = np.flatnonzero(self.assignments == j)
        val = np.flatnonzero(self.assignments == (j + 1) % self.k)
        train = np.flatnonzero((self.assignments != j)
                               & (self.assignments != (j + 1) % self.k))
        return train, val, test


def make_folds(n_patterns: int, k: int = 10, seed: int = 0) -> FoldPlan:
    """Seeded shuffle, then contiguous blocks whose sizes differ by <= 1."""
    if k < 3:
        raise ValueError("k must be at least 3 (train/validation/test)")
    if n_patterns < k:
        raise ValueError(f"cannot split {n_patterns} patterns into {k} folds")
    order = np.random.default_rng(seed).permutation(n_patterns)
    assignments = np.empty(n_patterns, dtype=int)
    base, extra = divmod(n_patterns, k)
    start = 0
    for j in range(k):
        size = base + (1 if j < extra else 0)
        assignments[order[start:start + size]] = j
        start += size
    return FoldPlan(k=k, assignments=assignments)


def augment_dependent(table: RawTable, spec) -> RawTable:
    """Append inputs that are exact linear combinations of existing inputs.

    ``spec`` is a list of (coefficients, constant) pairs; each coefficient
    vector runs over the table's current inputs.  A bare coefficient vector
    means constant 0.
    """
    inputs = table.inputs
    new_cols = []
    for entry in spec:
        if isinstance(entry, (tuple, list)) and len(entry) == 2 and np.ndim(entry[0]) == 1:
            coeffs, const = entry
        else:
            coeffs, const = entry, 0.0
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (table.n_in,):
            raise ValueError(f"coefficient vector must have length {table.n_in}, "
                             f"got shape {coeffs.shape}")
        new_cols.append(inputs @ coeffs + float(const))
    if not new_cols:
        return table
    values = np.hstack([inputs, np.column_stack(new_cols), table.targets])
    return replace(table, values=values, n_in=table.n_in + len(new_cols))


def synthesize_regression(kind: str, n_patterns: int, seed: int,
                          n_inputs: int = 4, n_outputs: int = 1,
                          teacher_hidden: int = 4, noise: float = 0.0) -> RawTable:
    """Deterministic synthetic regression tables.

    linear:     targets are an exact affine map of the inputs.
    teacher:    targets come from a random sigmoid MLP with bypass weights.
    correlated: like teacher, but the inputs are linearly mixed so their
                autocorrelation is far from the identity.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_patterns, n_inputs))
    if kind == "correlated":
        mix = np.eye(n_inputs) + 0.6 * rng.standard_normal((n_inputs, n_inputs)) / math.sqrt(n_inputs)
        X = X @ mix.T
    elif kind not in ("linear", "teacher"):
        raise ValueError(f"unknown synthetic kind {kind!r}")
    if kind == "linear":
        B = rng.standard_normal((n_inputs, n_outputs))
        c = rng.standard_normal(n_outputs)
        T = X @ B + c
    else:
        W = rng.standard_normal((teacher_hidden, n_inputs + 1)) / math.sqrt(n_inputs)
        W_oi = 0.3 * rng.standard_normal((n_outputs, n_inputs + 1))
        W_oh = rng.standard_normal((n_outputs, teacher_hidden))
        teacher = network.MlpParams(W=W, W_oi=W_oi, W_oh=W_oh, activation="sigmoid")
        ds = Dataset.from_arrays(X, np.zeros((n_patterns, n_outputs)))
        T = network.forward(teacher, ds).outputs
    if noise > 0.0:
        T = T + noise * rng.standard_normal(T.shape)
    return RawTable(values=np.hstack([X, T]), n_in=n_inputs, n_out=n_outputs,
                    source=f"synthetic:{kind}:{seed}", task="approx")


def report_metrics(trace: trainers.TrainTrace, test_data: Dataset,
                   task: str = "approx") -> dict:
    """Evaluate the best-validation snapshot of a run on held-out data.

    Returns train MSE and validation MSE at the snapshot iteration, the test
    metric (MSE, or misclassification fraction for task='class'), and the
    total multiply count of the run.
    """
    if trace.best is None:
        raise ValueError("trace has no best snapshot")
    best = trace.best
    record = trace.records[best.iteration]
    cache = network.forward(best.params, test_data)
    if task == "class":
        test_metric = network.classification_error(cache, test_data)
    else:
        test_metric = network.mse(cache, test_data)
    return {
        "train_mse": record.train_mse,
        "val_mse": best.val_mse,
        "test_metric": test_metric,
        "cum_multiplies": int(trace.records[-1].cum_multiplies),
        "best_iteration": best.iteration,
    }


def aggregate_reports(reports) -> dict:
    """Average the numeric fields of per-fold reports."""
    if not reports:
        raise ValueError("no reports to aggregate")
    keys = ("train_mse", "val_mse", "test_metric", "cum_multiplies")
    return {key: float(np.mean([r[key] for r in reports])) for key in keys}
