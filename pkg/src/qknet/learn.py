"""Kernel alignment, its gradient, and the ridge classifier on Gram matrices.

Training maximizes the alignment between the measured Gram matrix and the
label outer product y yT; classification solves the regularized dual system
(K + lambda I) alpha = y and takes the sign of kernel-weighted sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine, qkernel
from .data import LabeledDataset

DEGENERATE_FROBENIUS = 1e-24


class LearnError(ValueError):
    pass


def ideal_gram(labels) -> np.ndarray:
    y = np.asarray(labels, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise LearnError("labels must be -1 or +1")
    return np.outer(y, y)


def gram(spec: qkernel.FeatureMapSpec, theta, dataset: LabeledDataset,
         noise: qkernel.NoiseModel, rng=None) -> np.ndarray:
    """Gram matrix of the dataset under the given noise model.

    Entries are evaluated once per unordered pair and mirrored; the diagonal
    is computed explicitly since it falls below 1 under noise. With shots set,
    each unordered pair's exact value is replaced by one binomial frequency.
    """
    if len(dataset) == 0:
        raise LearnError("empty dataset")
    k = engine.gram_matrix(spec, theta, dataset.x, noise)
    if noise.shots is not None:
        if rng is None:
            raise LearnError("shot sampling needs an rng")
        iu = np.triu_indices(len(k))
        sampled = qkernel.shot_sample(k[iu], noise.shots, rng)
        out = np.zeros_like(k)
        out[iu] = sampled
        out = out + out.T - np.diag(np.diag(out))
        return out
    return k


def alignment(k: np.ndarray, labels) -> float:
    """Normalized Frobenius inner product with the ideal kernel."""
    y = np.asarray(labels, dtype=float)
    n = len(y)
    if k.shape != (n, n):
        raise LearnError("Gram size must match labels")
    frob = float(np.sum(k * k))
    if frob < DEGENERATE_FROBENIUS:
        raise LearnError("degenerate kernel: zero Frobenius norm")
    return float(y @ k @ y) / (n * np.sqrt(frob))


def alignment_grad_weights(k: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Alignment value and dA/dK as a matrix, from the quotient rule."""
    y = np.asarray(labels, dtype=float)
    n = len(y)
    frob = float(np.sum(k * k))
    if frob < DEGENERATE_FROBENIUS:
        raise LearnError("degenerate kernel: zero Frobenius norm")
    num = float(y @ k @ y)
    a = num / (n * np.sqrt(frob))
    w = np.outer(y, y) / (n * np.sqrt(frob)) - (num / (n * frob ** 1.5)) * k
    return a, w


def loss(dataset: LabeledDataset, theta, spec: qkernel.FeatureMapSpec,
         noise: qkernel.NoiseModel, rng=None) -> float:
    return -alignment(gram(spec, theta, dataset, noise, rng=rng), dataset.y)


def loss_grad(dataset: LabeledDataset, theta, spec: qkernel.FeatureMapSpec,
              noise: qkernel.NoiseModel) -> tuple[float, np.ndarray]:
    """Loss and its gradient; exact expectations only (no shot noise)."""
    if noise.shots is not None:
        raise LearnError("gradients require exact expectations, not shots")
    val, grad = engine.alignment_and_grad(spec, theta, dataset.x, dataset.y, noise)
    return -val, -grad


def noisy_alignment_grad_analytic(k: np.ndarray, dk: np.ndarray, p: float,
                                  dim: int, labels) -> float:
    """Depolarizing-shifted alignment gradient for one parameter.

    Takes the noiseless Gram and its entrywise derivative; evaluates the
    closed form in which each denominator kernel entry is shifted by
    p/((1-p) dim). Valid for balanced labels, where the shift cancels from
    the numerator inner product.
    """
    y = np.asarray(labels, dtype=float)
    if len(y) % 2 != 0 or int(np.sum(y)) != 0:
        raise LearnError("analytic form assumes balanced labels")
    if not 0.0 <= p < 1.0:
        raise LearnError("p must lie in [0, 1)")
    n = len(y)
    shifted = k + p / ((1.0 - p) * dim)
    s = float(np.sum(shifted * shifted))
    num_d = float(y @ dk @ y)
    num = float(y @ k @ y)
    return num_d / (n * np.sqrt(s)) - num * float(np.sum(shifted * dk)) / (n * s ** 1.5)


@dataclass(frozen=True)
class RidgeModel:
    alpha: np.ndarray
    lam: float


def fit_ridge(k: np.ndarray, labels, lam: float = 0.1) -> RidgeModel:
    """Solve (K + lam I) alpha = y; residual checked to 1e-8."""
    if not lam > 0:
        raise LearnError("lambda must be positive")
    y = np.asarray(labels, dtype=float)
    n = len(y)
    if k.shape != (n, n):
        raise LearnError("Gram size must match labels")
    system = k + lam * np.eye(n)
    alpha = np.linalg.solve(system, y)
    residual = float(np.linalg.norm(system @ alpha - y))
    if residual > 1e-8:
        raise LearnError(f"ridge solve residual {residual:.2e} above 1e-8")
    return RidgeModel(alpha=alpha, lam=lam)


def predict(model: RidgeModel, k_vec: np.ndarray) -> np.ndarray:
    """Label from kernel values against the training set; ties go to +1."""
    k_vec = np.asarray(k_vec, dtype=float)
    scores = k_vec @ model.alpha
    return np.where(scores >= 0.0, 1, -1)


def score(spec: qkernel.FeatureMapSpec, theta, train: LabeledDataset,
          test: LabeledDataset, noise: qkernel.NoiseModel, lam: float = 0.1,
          rng=None) -> float:
    """Accuracy of the ridge model trained on `train`, evaluated on `test`."""
    if len(train) == 0 or len(test) == 0:
        raise LearnError("empty train or test set")
    k_train, k_cross = engine.train_test_grams(spec, theta, train.x, test.x, noise)
    if noise.shots is not None:
        if rng is None:
            raise LearnError("shot sampling needs an rng")
        iu = np.triu_indices(len(k_train))
        samp = qkernel.shot_sample(k_train[iu], noise.shots, rng)
        kt = np.zeros_like(k_train)
        kt[iu] = samp
        k_train = kt + kt.T - np.diag(np.diag(kt))
        k_cross = qkernel.shot_sample(k_cross, noise.shots, rng)
    model = fit_ridge(k_train, train.y, lam)
    pred = predict(model, k_cross)
    return float(np.mean(pred == test.y))
