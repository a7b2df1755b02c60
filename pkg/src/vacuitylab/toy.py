"""Desk-scale evidential classifier: linear head over fixed RBF features.

A raw linear map cannot show the collapse of evidence away from the data
(its logits grow with ||x||, so far-away points get *more* evidence), so
the toy model scores points through a fixed radial-basis feature grid:
off the data manifold all features vanish, the logits fall back to the
bias, and vacuity rises.

Training is plain full-batch gradient descent with a constant learning
rate; everything is deterministic given the config seed. Gradients are
analytic and are validated against central finite differences in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .losses import softplus_evidence
from .special import digamma, log_gamma, trigamma


class TrainingMode(str, Enum):
    EDL = "edl"
    IB_EDL = "ib-edl"


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""

    def __init__(self, step: int, message: str):
        super().__init__(f"training diverged at step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class LossBreakdown:
    """One loss evaluation split into its terms.

    total = mse_term + lambda_weight * kl_term        (EDL mode)
    total = mse_term + beta_weight * ib_info_term     (IB mode)
    """

    mse_term: float
    kl_term: float
    ib_info_term: float
    lambda_weight: float
    beta_weight: float
    total: float


@dataclass(frozen=True)
class ToyModelParams:
    """Linear evidential head; the sigma head exists only in IB mode."""

    weights: np.ndarray  # (K, feature_dim)
    bias: np.ndarray  # (K,)
    mode: TrainingMode
    sigma_weights: np.ndarray | None = None
    sigma_bias: np.ndarray | None = None
    sigma_mult: float = 0.0

    def __post_init__(self) -> None:
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError("weights must be (K, d) with a matching (K,) bias")
        has_sigma = self.sigma_weights is not None and self.sigma_bias is not None
        if self.mode is TrainingMode.IB_EDL:
            if not has_sigma:
                raise ValueError("IB mode requires a sigma head")
            if (
                self.sigma_weights.shape != self.weights.shape
                or self.sigma_bias.shape != self.bias.shape
            ):
                raise ValueError("sigma head must match the mean head's shapes")
        elif self.sigma_weights is not None or self.sigma_bias is not None:
            raise ValueError("EDL mode must not carry a sigma head")
        if self.sigma_mult < 0:
            raise ValueError("sigma_mult must be >= 0")

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class ToyModelGrads:
    weights: np.ndarray
    bias: np.ndarray
    sigma_weights: np.ndarray | None = None
    sigma_bias: np.ndarray | None = None


def init_params(
    mode: TrainingMode, n_classes: int, feature_dim: int, sigma_mult: float = 0.0
) -> ToyModelParams:
    """Zero-initialized parameters (deterministic by construction)."""
    zeros = lambda *shape: np.zeros(shape, dtype=float)
    if mode is TrainingMode.IB_EDL:
        return ToyModelParams(
            weights=zeros(n_classes, feature_dim),
            bias=zeros(n_classes),
            mode=mode,
            sigma_weights=zeros(n_classes, feature_dim),
            sigma_bias=zeros(n_classes),
            sigma_mult=sigma_mult,
        )
    return ToyModelParams(
        weights=zeros(n_classes, feature_dim),
        bias=zeros(n_classes),
        mode=mode,
        sigma_mult=sigma_mult,
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _noise(rng_seed: int, shape: tuple[int, int]) -> np.ndarray:
    return np.random.default_rng(rng_seed).standard_normal(shape)


def _validate_batch(params: ToyModelParams, features, labels):
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    if x.ndim != 2 or x.shape[1] != params.feature_dim:
        raise ValueError(f"features must be (n, {params.feature_dim})")
    if y.shape != (x.shape[0],):
        raise ValueError("labels must be a vector matching the batch size")
    if x.shape[0] == 0:
        raise ValueError("batch must not be empty")
    if (y < 0).any() or (y >= params.n_classes).any():
        raise ValueError("labels out of range")
    return x, y


def _forward(
    params: ToyModelParams, x: np.ndarray, rng_seed: int, training: bool
) -> dict:
    """Shared forward pass; IB noise is reparameterized with a seeded rng."""
    mu = x @ params.weights.T + params.bias
    out = {"mu": mu}
    if params.mode is TrainingMode.EDL:
        z = mu
        out["sigma"] = None
        out["eps"] = None
    else:
        sigma_raw = x @ params.sigma_weights.T + params.sigma_bias
        sigma = softplus_evidence(sigma_raw)
        scale = 1.0 if training else params.sigma_mult
        eps = _noise(rng_seed, mu.shape)
        z = mu + scale * sigma * eps
        out.update(sigma_raw=sigma_raw, sigma=sigma, eps=eps, scale=scale)
    alpha = softplus_evidence(z) + 1.0
    out.update(z=z, alpha=alpha)
    return out


def _batch_mse(alpha: np.ndarray, y_onehot: np.ndarray) -> float:
    s = alpha.sum(axis=1, keepdims=True)
    p = alpha / s
    squared = ((y_onehot - p) ** 2).sum(axis=1)
    variance = (alpha * (s - alpha)).sum(axis=1) / (s[:, 0] ** 2 * (s[:, 0] + 1.0))
    return float((squared + variance).mean())


def _batch_kl_to_uniform(alpha_tilde: np.ndarray) -> float:
    totals = alpha_tilde.sum(axis=1)
    k = alpha_tilde.shape[1]
    per_row = (
        log_gamma(totals)
        - log_gamma(float(k))
        - log_gamma(alpha_tilde).sum(axis=1)
        + ((alpha_tilde - 1.0) * (digamma(alpha_tilde) - digamma(totals)[:, None])).sum(axis=1)
    )
    return float(per_row.mean())


def total_loss(
    params: ToyModelParams,
    features,
    labels,
    lambda_weight: float,
    beta_weight: float,
    rng_seed: int,
    training: bool = True,
) -> LossBreakdown:
    """Mean per-example loss over a batch.

    EDL mode ignores ``beta_weight``; IB mode ignores ``lambda_weight``.
    In IB mode the latent noise is z = mu + sigma * eps with eps drawn from
    a generator seeded by ``rng_seed`` (so repeat calls are bitwise equal);
    with ``training=False`` the noise is scaled by ``params.sigma_mult``.
    """
    x, y = _validate_batch(params, features, labels)
    y_onehot = np.eye(params.n_classes)[y]
    fwd = _forward(params, x, rng_seed, training)
    mse = _batch_mse(fwd["alpha"], y_onehot)
    if params.mode is TrainingMode.EDL:
        alpha_tilde = y_onehot + (1.0 - y_onehot) * fwd["alpha"]
        kl = _batch_kl_to_uniform(alpha_tilde)
        total = mse + lambda_weight * kl
        return LossBreakdown(
            mse_term=mse,
            kl_term=kl,
            ib_info_term=0.0,
            lambda_weight=lambda_weight,
            beta_weight=0.0,
            total=total,
        )
    mu, sigma = fwd["mu"], fwd["sigma"]
    info = float(
        (0.5 * ((mu**2).sum(axis=1) + (sigma**2).sum(axis=1) - 2.0 * np.log(sigma).sum(axis=1))).mean()
    )
    total = mse + beta_weight * info
    return LossBreakdown(
        mse_term=mse,
        kl_term=0.0,
        ib_info_term=info,
        lambda_weight=0.0,
        beta_weight=beta_weight,
        total=total,
    )


def _mse_alpha_grad(alpha: np.ndarray, y_onehot: np.ndarray) -> np.ndarray:
    """d/d alpha of the expected-Brier term, per example (before the batch mean)."""
    s = alpha.sum(axis=1, keepdims=True)
    p = alpha / s
    q = (alpha**2).sum(axis=1, keepdims=True)
    denom = s**2 * (s + 1.0)
    g_squared = (2.0 / s) * ((p - y_onehot) - ((p - y_onehot) * p).sum(axis=1, keepdims=True))
    g_variance = ((2.0 * s - 2.0 * alpha) * denom - (s**2 - q) * (3.0 * s**2 + 2.0 * s)) / denom**2
    return g_squared + g_variance


def loss_gradient(
    params: ToyModelParams,
    features,
    labels,
    lambda_weight: float,
    beta_weight: float,
    rng_seed: int,
    training: bool = True,
) -> ToyModelGrads:
    """Analytic gradient of ``total_loss`` with the IB noise held fixed by seed."""
    x, y = _validate_batch(params, features, labels)
    n = x.shape[0]
    y_onehot = np.eye(params.n_classes)[y]
    fwd = _forward(params, x, rng_seed, training)
    alpha = fwd["alpha"]

    d_alpha = _mse_alpha_grad(alpha, y_onehot)
    if params.mode is TrainingMode.EDL:
        alpha_tilde = y_onehot + (1.0 - y_onehot) * alpha
        totals = alpha_tilde.sum(axis=1, keepdims=True)
        k = params.n_classes
        d_kl = ((alpha_tilde - 1.0) * trigamma(alpha_tilde) - (totals - k) * trigamma(totals)) * (
            1.0 - y_onehot
        )
        d_alpha = d_alpha + lambda_weight * d_kl
        d_logits = d_alpha * _sigmoid(fwd["z"])
        return ToyModelGrads(weights=d_logits.T @ x / n, bias=d_logits.mean(axis=0))

    mu, sigma, eps, scale = fwd["mu"], fwd["sigma"], fwd["eps"], fwd["scale"]
    d_z = d_alpha * _sigmoid(fwd["z"])
    d_mu = d_z + beta_weight * mu
    d_sigma = d_z * (scale * eps) + beta_weight * (sigma - 1.0 / sigma)
    d_sigma_raw = d_sigma * _sigmoid(fwd["sigma_raw"])
    return ToyModelGrads(
        weights=d_mu.T @ x / n,
        bias=d_mu.mean(axis=0),
        sigma_weights=d_sigma_raw.T @ x / n,
        sigma_bias=d_sigma_raw.mean(axis=0),
    )


@dataclass(frozen=True)
class RbfFeaturizer:
    """Fixed Gaussian-bump features on a grid covering the training data."""

    centers: np.ndarray  # (m, 2)
    lengthscale: float

    def transform(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d2 = ((pts[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=-1)
        return np.exp(-d2 / (2.0 * self.lengthscale**2))

    @classmethod
    def for_data(cls, points: np.ndarray, grid: int = 5, margin: float = 1.0) -> "RbfFeaturizer":
        lo = points.min(axis=0) - margin
        hi = points.max(axis=0) + margin
        gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], grid), np.linspace(lo[1], hi[1], grid))
        centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
        lengthscale = 0.5 * float(np.max(hi - lo)) / (grid - 1)
        centers.setflags(write=False)
        return cls(centers=centers, lengthscale=lengthscale)


@dataclass(frozen=True)
class ToyTrainConfig:
    mode: TrainingMode = TrainingMode.EDL
    steps: int = 500
    learning_rate: float = 0.5
    lambda_weight: float = 1.0
    lambda_ramp_steps: int | None = 200
    beta_weight: float = 1e-3
    seed: int = 0
    sigma_mult: float = 0.0
    rbf_grid: int = 5

    def lambda_at(self, step: int) -> float:
        """Constant, or the linear ramp min(1, step / ramp_steps)."""
        if self.lambda_ramp_steps is None:
            return self.lambda_weight
        return self.lambda_weight * min(1.0, step / self.lambda_ramp_steps)


@dataclass(frozen=True)
class ToyTrainResult:
    params: ToyModelParams
    featurizer: RbfFeaturizer
    summary: dict = field(default_factory=dict)


# Probes sit at 12x the maximum data norm: comfortably past the "more than
# ten data radii away" mark, evenly spaced on a circle for determinism.
_PROBE_RADIUS_MULT = 12.0
_N_PROBES = 64


def far_probe_points(points: np.ndarray, n_probes: int = _N_PROBES) -> np.ndarray:
    radius = _PROBE_RADIUS_MULT * float(np.linalg.norm(points, axis=1).max())
    angles = np.linspace(0.0, 2.0 * math.pi, n_probes, endpoint=False)
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def predict_alpha(
    params: ToyModelParams, featurizer: RbfFeaturizer, points, rng_seed: int = 0
) -> np.ndarray:
    """Inference-time concentrations (IB noise scaled by sigma_mult)."""
    feats = featurizer.transform(points)
    return _forward(params, feats, rng_seed, training=False)["alpha"]


def _mean_vacuity(alpha: np.ndarray) -> float:
    return float((alpha.shape[1] / alpha.sum(axis=1)).mean())


def train_toy(config: ToyTrainConfig, points, labels) -> ToyTrainResult:
    """Fit the toy evidential head on labeled 2-D points.

    Deterministic given ``config.seed``. Raises :class:`TrainingDiverged`
    if the loss stops being finite, reporting the offending step.
    """
    pts = np.asarray(points, dtype=float)
    y = np.asarray(labels, dtype=int)
    if pts.ndim != 2 or pts.shape[1] != 2 or y.shape != (pts.shape[0],):
        raise ValueError("expected (n, 2) points with matching labels")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ValueError("dataset must contain at least 2 classes")
    if counts.min() < 50:
        raise ValueError("dataset must contain at least 50 points per class")
    n_classes = int(classes.max()) + 1

    featurizer = RbfFeaturizer.for_data(pts, grid=config.rbf_grid)
    feats = featurizer.transform(pts)
    params = init_params(config.mode, n_classes, feats.shape[1], config.sigma_mult)

    root = np.random.SeedSequence(config.seed)
    step_seeds = root.generate_state(max(config.steps, 1), dtype=np.uint64)

    for step in range(config.steps):
        lam = config.lambda_at(step)
        seed = int(step_seeds[step])
        loss = total_loss(params, feats, y, lam, config.beta_weight, seed)
        if not math.isfinite(loss.total):
            raise TrainingDiverged(step, f"loss = {loss.total}")
        grads = loss_gradient(params, feats, y, lam, config.beta_weight, seed)
        params = ToyModelParams(
            weights=params.weights - config.learning_rate * grads.weights,
            bias=params.bias - config.learning_rate * grads.bias,
            mode=params.mode,
            sigma_weights=(
                None
                if grads.sigma_weights is None
                else params.sigma_weights - config.learning_rate * grads.sigma_weights
            ),
            sigma_bias=(
                None
                if grads.sigma_bias is None
                else params.sigma_bias - config.learning_rate * grads.sigma_bias
            ),
            sigma_mult=params.sigma_mult,
        )

    alpha_id = predict_alpha(params, featurizer, pts)
    probes = far_probe_points(pts)
    alpha_far = predict_alpha(params, featurizer, probes)
    final_lambda = config.lambda_at(config.steps - 1) if config.steps else config.lambda_at(0)
    summary = {
        "mode": config.mode.value,
        "steps": config.steps,
        "train_accuracy": float((alpha_id.argmax(axis=1) == y).mean()),
        "mean_id_vacuity": _mean_vacuity(alpha_id),
        "mean_far_ood_vacuity": _mean_vacuity(alpha_far),
        "final_loss": total_loss(
            params, feats, y, final_lambda, config.beta_weight, 0, training=False
        ).total,
    }
    return ToyTrainResult(params=params, featurizer=featurizer, summary=summary)
