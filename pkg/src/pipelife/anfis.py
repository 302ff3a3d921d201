"""First-order Sugeno adaptive neuro-fuzzy inference system.

Five layers over d inputs with m Gaussian membership functions each and a
full grid partition of m^d rules:

    layer 1 (fuzzy):          mu_ij(x_i) = exp(-(x_i - c_ij)^2 / (2 sigma_ij^2))
    layer 2 (production):     w_r = prod_i mu_i,r(i)
    layer 3 (normalization):  wbar_r = w_r / sum_r w_r
    layer 4 (de-fuzzy):       wbar_r * (theta_r . [x, 1])
    layer 5 (total output):   y = sum_r of layer 4

Hybrid learning alternates a batch least-squares solve for the linear
consequents theta (premises frozen) with a gradient-descent step on the
Gaussian centers and widths.  The least-squares problem is solved by SVD
(numpy lstsq), which returns the minimum-norm solution on rank-deficient
designs; such solves are flagged rather than failed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import FeatureMatrix, Split
from .errors import (
    AllRulesZero,
    DimensionMismatch,
    EmptySplit,
    RuleExplosion,
    TooFewMfs,
    UntrainedModel,
)

DEFAULT_INPUTS = ("age_years", "wall_thickness_loss_pct", "install_year")
DEFAULT_MFS = 2
DEFAULT_RULE_CAP = 256
SIGMA_FLOOR = 1e-4
FIRING_FLOOR = 1e-300


@dataclass
class AnfisModel:
    """Premise and consequent parameters plus normalization constants."""

    inputs: tuple                 # feature column names, length d
    centers: np.ndarray           # d x m Gaussian centers (normalized units)
    sigmas: np.ndarray            # d x m Gaussian widths, > 0
    rules: np.ndarray             # R x d membership indices
    consequents: np.ndarray       # R x (d + 1); last column is the constant
    feature_constants: tuple = ()  # per input: (a, b) as in FeatureMatrix
    target_constants: tuple = (0.0, 1.0)
    norm_mode: str = "minmax"
    trained: bool = False
    lse_degenerate: bool = False   # last solve was rank deficient

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_rules(self) -> int:
        return self.rules.shape[0]

    @property
    def input_columns(self) -> tuple:
        return tuple(self.inputs)

    def copy(self) -> "AnfisModel":
        return AnfisModel(
            inputs=self.inputs,
            centers=self.centers.copy(),
            sigmas=self.sigmas.copy(),
            rules=self.rules.copy(),
            consequents=self.consequents.copy(),
            feature_constants=self.feature_constants,
            target_constants=self.target_constants,
            norm_mode=self.norm_mode,
            trained=self.trained,
            lse_degenerate=self.lse_degenerate,
        )

    # -- raw-unit prediction --------------------------------------------------

    def _normalize(self, raw: np.ndarray) -> np.ndarray:
        if not self.feature_constants:
            return raw
        out = np.empty_like(raw, dtype=float)
        for j, (a, b) in enumerate(self.feature_constants):
            col = raw[:, j]
            if self.norm_mode == "minmax":
                out[:, j] = 0.0 if b == a else (col - a) / (b - a)
            else:
                out[:, j] = (col - a) / b
        return out

    def _denormalize_target(self, y: np.ndarray) -> np.ndarray:
        a, b = self.target_constants
        if self.norm_mode == "minmax":
            # predictions outside the trained target range are extrapolations
            return np.clip(y * (b - a) + a, a, b)
        return y * b + a

    def predict_batch(self, raw: np.ndarray) -> np.ndarray:
        """RUL years for an n x d matrix of raw-unit inputs."""
        raw = np.atleast_2d(np.asarray(raw, dtype=float))
        if raw.shape[1] != self.n_inputs:
            raise DimensionMismatch(f"expected {self.n_inputs} inputs, got {raw.shape[1]}")
        y, _, _ = _forward(self, self._normalize(raw))
        return self._denormalize_target(y)

    def predict_dataset(self, dataset) -> np.ndarray:
        raw = np.column_stack([dataset.column(c) for c in self.inputs])
        return self.predict_batch(raw)

    # -- serialization ----------------------------------------------------------

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(
            {
                "format": "pipelife-anfis-v1",
                "inputs": list(self.inputs),
                "centers": self.centers.tolist(),
                "sigmas": self.sigmas.tolist(),
                "rules": self.rules.tolist(),
                "consequents": self.consequents.tolist(),
                "feature_constants": [list(c) for c in self.feature_constants],
                "target_constants": list(self.target_constants),
                "norm_mode": self.norm_mode,
                "trained": self.trained,
            },
            indent=indent,
        )

    @classmethod
    def from_json(cls, text: str) -> "AnfisModel":
        payload = json.loads(text)
        if payload.get("format") != "pipelife-anfis-v1":
            raise ValueError(f"not an ANFIS model document: {payload.get('format')!r}")
        return cls(
            inputs=tuple(payload["inputs"]),
            centers=np.array(payload["centers"], dtype=float),
            sigmas=np.array(payload["sigmas"], dtype=float),
            rules=np.array(payload["rules"], dtype=int),
            consequents=np.array(payload["consequents"], dtype=float),
            feature_constants=tuple(tuple(c) for c in payload["feature_constants"]),
            target_constants=tuple(payload["target_constants"]),
            norm_mode=payload.get("norm_mode", "minmax"),
            trained=bool(payload.get("trained", False)),
        )


@dataclass(frozen=True)
class LayerTrace:
    """Intermediate values of one inference pass, for testing and inspection."""

    memberships: np.ndarray      # d x m
    firing: np.ndarray           # R
    normalized: np.ndarray       # R
    rule_outputs: np.ndarray     # R
    weighted_outputs: np.ndarray  # R
    output: float


def init_grid(
    inputs: Sequence[str],
    mfs_per_input: int,
    features: FeatureMatrix,
    rule_cap: int = DEFAULT_RULE_CAP,
) -> AnfisModel:
    """Grid-partition model over the observed range of each input.

    Centers are equally spaced across each normalized column's [min, max];
    every width starts at spacing / sqrt(2).  Consequents start at zero.
    """
    inputs = tuple(inputs)
    d = len(inputs)
    m = int(mfs_per_input)
    if m < 2:
        raise TooFewMfs(f"need at least 2 membership functions per input, got {m}")
    n_rules = m**d
    if n_rules > rule_cap:
        raise RuleExplosion(
            f"{m}^{d} = {n_rules} rules exceeds the cap of {rule_cap}; "
            "reduce inputs or membership functions"
        )
    norm = features.normalized()
    centers = np.empty((d, m))
    sigmas = np.empty((d, m))
    for i, name in enumerate(inputs):
        col = norm[:, features.column_index(name)]
        lo, hi = float(col.min()), float(col.max())
        if hi == lo:
            hi = lo + 1.0
        centers[i] = np.linspace(lo, hi, m)
        spacing = (hi - lo) / (m - 1)
        sigmas[i] = spacing / np.sqrt(2.0)
    rules = np.array(list(itertools.product(range(m), repeat=d)), dtype=int)
    consequents = np.zeros((n_rules, d + 1))
    return AnfisModel(
        inputs=inputs,
        centers=centers,
        sigmas=sigmas,
        rules=rules,
        consequents=consequents,
        feature_constants=tuple(
            features.constants[features.column_index(c)] for c in inputs
        ),
        target_constants=(0.0, 1.0),
        norm_mode=features.mode,
    )


def _memberships(model: AnfisModel, x: np.ndarray) -> np.ndarray:
    """Layer 1 for a batch: (n, d, m) Gaussian membership values."""
    diff = x[:, :, None] - model.centers[None, :, :]
    return np.exp(-(diff * diff) / (2.0 * model.sigmas[None, :, :] ** 2))


def _forward(model: AnfisModel, x: np.ndarray):
    """Layers 1-5 for a batch of normalized rows.

    Returns (y, wbar, w) with shapes (n,), (n, R), (n, R).
    """
    n, d = x.shape
    mu = _memberships(model, x)                       # n x d x m
    gathered = mu[:, np.arange(d)[:, None], model.rules.T]  # n x d x R
    w = gathered.prod(axis=1)                         # n x R
    total = w.sum(axis=1)
    if np.any(total < FIRING_FLOOR):
        row = int(np.argmax(total < FIRING_FLOOR))
        raise AllRulesZero(f"total firing strength underflowed at row {row}")
    wbar = w / total[:, None]
    f = x @ model.consequents[:, :-1].T + model.consequents[:, -1]
    return (wbar * f).sum(axis=1), wbar, w


def infer(model: AnfisModel, x) -> tuple:
    """Evaluate one feature row through all five layers.

    Returns (y_hat, LayerTrace); x is in the model's normalized units.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.n_inputs:
        raise DimensionMismatch(f"expected {model.n_inputs} inputs, got {x.size}")
    batch = x[None, :]
    mu = _memberships(model, batch)[0]                # d x m
    per_rule = mu[np.arange(model.n_inputs)[:, None], model.rules.T]
    w = per_rule.prod(axis=0)
    total = float(w.sum())
    if total < FIRING_FLOOR:
        raise AllRulesZero("total firing strength underflowed")
    wbar = w / total
    f = model.consequents[:, :-1] @ x + model.consequents[:, -1]
    weighted = wbar * f
    y = float(weighted.sum())
    return y, LayerTrace(
        memberships=mu,
        firing=w,
        normalized=wbar,
        rule_outputs=f,
        weighted_outputs=weighted,
        output=y,
    )


def _consequent_design(model: AnfisModel, x: np.ndarray) -> np.ndarray:
    """Phi matrix: row n holds wbar_r * [x, 1] blocks for every rule."""
    _, wbar, _ = _forward(model, x)
    x1 = np.hstack([x, np.ones((x.shape[0], 1))])
    blocks = wbar[:, :, None] * x1[:, None, :]
    return blocks.reshape(x.shape[0], -1)


def lse_consequents(model: AnfisModel, x: np.ndarray, y: np.ndarray) -> AnfisModel:
    """Solve the consequents by linear least squares with premises frozen.

    Rank-deficient designs get the minimum-norm solution and set the
    lse_degenerate flag.  The model is updated in place and returned.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    phi = _consequent_design(model, x)
    theta, _, rank, _ = np.linalg.lstsq(phi, y, rcond=None)
    model.consequents = theta.reshape(model.n_rules, model.n_inputs + 1)
    model.lse_degenerate = rank < phi.shape[1]
    return model


def _premise_gradients(model: AnfisModel, x: np.ndarray, t: np.ndarray):
    """Analytic d(MSE)/d(center), d(MSE)/d(sigma) through all five layers."""
    n, d = x.shape
    y, wbar, w = _forward(model, x)
    total = w.sum(axis=1)
    f = x @ model.consequents[:, :-1].T + model.consequents[:, -1]
    err = y - t
    # dL/dw_r = (2/n) e (f_r - y) / S; chain onto w_r itself for log-derivative form
    glw = (2.0 / n) * err[:, None] * (f - y[:, None]) / total[:, None] * w
    grad_c = np.zeros_like(model.centers)
    grad_s = np.zeros_like(model.sigmas)
    m = model.centers.shape[1]
    for i in range(d):
        onehot = np.zeros((model.n_rules, m))
        onehot[np.arange(model.n_rules), model.rules[:, i]] = 1.0
        acc = glw @ onehot                                  # n x m
        diff = x[:, i:i + 1] - model.centers[i][None, :]    # n x m
        sig = model.sigmas[i][None, :]
        grad_c[i] = (acc * diff / sig**2).sum(axis=0)
        grad_s[i] = (acc * diff**2 / sig**3).sum(axis=0)
    return grad_c, grad_s


def _premise_step(model: AnfisModel, x: np.ndarray, t: np.ndarray, lr: float) -> None:
    """One gradient-descent step on centers and sigmas, widths floored."""
    grad_c, grad_s = _premise_gradients(model, x, t)
    model.centers -= lr * grad_c
    model.sigmas -= lr * grad_s
    np.clip(model.sigmas, SIGMA_FLOOR, None, out=model.sigmas)


@dataclass
class AnfisHistory:
    train_rmse: list = field(default_factory=list)
    val_rmse: list = field(default_factory=list)
    pre_lse_mse: list = field(default_factory=list)
    post_lse_mse: list = field(default_factory=list)
    best_epoch: int = -1

    def __len__(self) -> int:
        return len(self.train_rmse)


def _rmse(model: AnfisModel, x: np.ndarray, t: np.ndarray) -> float:
    if len(t) == 0:
        return np.inf
    y, _, _ = _forward(model, x)
    return float(np.sqrt(np.mean((y - t) ** 2)))


def hybrid_train(
    model: AnfisModel,
    features: FeatureMatrix,
    epochs: int = 50,
    learning_rate: float = 0.02,
):
    """Hybrid learning: per epoch, least-squares consequents then a gradient
    step on the Gaussian premises.

    RMSE (normalized target units) is logged per epoch on the train and
    validation splits right after the consequent solve, and the snapshot
    with the best validation RMSE is returned.  With epochs=0 the model gets
    exactly one consequent solve.  Widths are clamped at 1e-4.
    """
    norm = features.normalized()
    idx = [features.column_index(c) for c in model.inputs]
    target_idx = features.column_index("rul_years")
    x = norm[:, idx]
    t = norm[:, target_idx]
    if features.split is not None:
        train_rows = features.rows_for(Split.TRAIN)
        val_rows = features.rows_for(Split.VALIDATION)
    else:
        train_rows = np.arange(features.n)
        val_rows = np.array([], dtype=int)
    if train_rows.size == 0:
        raise EmptySplit("train split is empty")
    x_train, t_train = x[train_rows], t[train_rows]
    x_val, t_val = x[val_rows], t[val_rows]

    model = model.copy()
    model.target_constants = features.constants[target_idx]
    history = AnfisHistory()

    if epochs == 0:
        lse_consequents(model, x_train, t_train)
        model.trained = True
        return model, history

    best = None
    best_score = np.inf
    for epoch in range(epochs):
        history.pre_lse_mse.append(_rmse(model, x_train, t_train) ** 2)
        lse_consequents(model, x_train, t_train)
        history.post_lse_mse.append(_rmse(model, x_train, t_train) ** 2)
        train_rmse = np.sqrt(history.post_lse_mse[-1])
        val_rmse = _rmse(model, x_val, t_val) if val_rows.size else train_rmse
        history.train_rmse.append(train_rmse)
        history.val_rmse.append(val_rmse)
        if val_rmse < best_score:
            best_score = val_rmse
            best = model.copy()
            history.best_epoch = epoch
        if learning_rate > 0.0:
            _premise_step(model, x_train, t_train, learning_rate)
    best = best if best is not None else model
    best.trained = True
    return best, history


# ---------------------------------------------------------------------------
# sensitivity analysis
# ---------------------------------------------------------------------------

def sensitivity_ranking(
    model, features: FeatureMatrix, h_fraction: float = 0.01, per_range: bool = True
):
    """Rank inputs by the mean absolute output slope over the data rows.

    The slope of input i is the central difference of the model output with
    step h = h_fraction of that input's observed raw range, all other inputs
    held at each row's observed values.  By default slopes are taken with
    respect to the range-normalized coordinate (raw slope times the input's
    range) so features measured in feet, inches and years rank on a common
    scale; pass per_range=False for raw-unit slopes.  Works for any model
    exposing input_columns and predict_batch.  Returns [(feature, slope)]
    descending.
    """
    if not getattr(model, "trained", True):
        raise UntrainedModel("sensitivity analysis requires a trained model")
    columns = tuple(model.input_columns)
    raw = np.column_stack([features.raw_column(c) for c in columns])
    if raw.shape[0] == 0:
        raise EmptySplit("no data rows for sensitivity analysis")
    slopes = []
    for i, name in enumerate(columns):
        col = raw[:, i]
        span = float(col.max() - col.min())
        h = h_fraction * span if span > 0 else h_fraction
        hi = raw.copy()
        lo = raw.copy()
        hi[:, i] = col + h
        lo[:, i] = col - h
        slope = np.abs(model.predict_batch(hi) - model.predict_batch(lo)) / (2.0 * h)
        scale = span if per_range and span > 0 else 1.0
        slopes.append((name, float(slope.mean()) * scale))
    slopes.sort(key=lambda item: item[1], reverse=True)
    return slopes


def contour_grid(
    model,
    features: FeatureMatrix,
    x_input: str,
    y_input: str,
    grid_size: int = 25,
):
    """Surface data (x1, x2, y) over two inputs, others held at their medians."""
    columns = tuple(model.input_columns)
    if x_input not in columns or y_input not in columns:
        raise DimensionMismatch(
            f"contour inputs must be among the model inputs {columns}"
        )
    raw = np.column_stack([features.raw_column(c) for c in columns])
    medians = np.median(raw, axis=0)
    xi = columns.index(x_input)
    yi = columns.index(y_input)
    xs = np.linspace(raw[:, xi].min(), raw[:, xi].max(), grid_size)
    ys = np.linspace(raw[:, yi].min(), raw[:, yi].max(), grid_size)
    rows = []
    for xv in xs:
        batch = np.tile(medians, (grid_size, 1))
        batch[:, xi] = xv
        batch[:, yi] = ys
        out = model.predict_batch(batch)
        rows.extend((float(xv), float(yv), float(o)) for yv, o in zip(ys, out))
    return rows
