"""One-hidden-layer sigmoid classifier with softmax output.

Trained by per-sample stochastic gradient descent on the mean cross-entropy,
with patience-based early stopping on validation loss. The per-sample update
loop is JIT-compiled; everything else is plain numpy.
"""

import json
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dataset import NormalizationStats, _readonly

MODEL_FORMAT_VERSION = "safs-model/1"

# Probabilities are floored before the log so a saturated softmax cannot
# produce an infinite loss; argmax predictions are unaffected.
PROB_FLOOR = 1e-12


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class NetworkParams:
    """Weights and biases of the classifier.

    W: (H, N) input-to-hidden weights, B0: (N,) hidden biases,
    V: (N, K) hidden-to-output weights, B1: (K,) output biases.
    """

    W: np.ndarray
    B0: np.ndarray
    V: np.ndarray
    B1: np.ndarray

    def __post_init__(self):
        for name in ("W", "B0", "V", "B1"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=np.float64)))
        if self.W.ndim != 2 or self.V.ndim != 2:
            raise ValueError("W and V must be matrices")
        H, N = self.W.shape
        K = self.V.shape[1]
        if self.V.shape[0] != N or self.B0.shape != (N,) or self.B1.shape != (K,):
            raise ValueError("parameter dimensions are inconsistent")
        if not all(np.isfinite(getattr(self, name)).all() for name in ("W", "B0", "V", "B1")):
            raise ValueError("parameters must be finite")

    @property
    def n_inputs(self):
        return self.W.shape[0]

    @property
    def n_hidden(self):
        return self.W.shape[1]

    @property
    def n_classes(self):
        return self.V.shape[1]


@dataclass(frozen=True)
class Gradients:
    """Loss gradient with the same layout as NetworkParams."""

    W: np.ndarray
    B0: np.ndarray
    V: np.ndarray
    B1: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    hidden_units None means "pick the default for the input width at fit
    time" (see default_hidden_units).
    """

    hidden_units: int | None = None
    learning_rate: float = 0.1
    patience_epochs: int = 20
    max_epochs: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.patience_epochs < 1:
            raise ValueError("patience_epochs must be at least 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.patience_epochs > self.max_epochs:
            raise ValueError("patience_epochs cannot exceed max_epochs")
        if self.hidden_units is not None and self.hidden_units < 1:
            raise ValueError("hidden_units must be at least 1")


@dataclass
class TrainReport:
    """Outcome of a training run.

    best_params is the snapshot taken at the epoch with the lowest validation
    cross-entropy, not the final-epoch parameters. history holds one
    (train_ce, validation_ce) pair per epoch actually run.
    """

    best_params: NetworkParams
    best_validation_ce: float
    epochs_run: int
    history: list


def default_hidden_units(n_inputs):
    """Hidden-layer width used when the caller does not pick one."""
    return max(8, 2 * n_inputs)


def init_params(H, N, K, seed):
    """Draw every weight and bias independently uniform on [-1, 1].

    The draw order (W, B0, V, B1) is fixed, so one seed always produces the
    same parameters.
    """
    if min(H, N, K) < 1:
        raise ValueError("H, N, K must all be at least 1")
    rng = np.random.default_rng(seed)
    return NetworkParams(
        W=rng.uniform(-1.0, 1.0, (H, N)),
        B0=rng.uniform(-1.0, 1.0, N),
        V=rng.uniform(-1.0, 1.0, (N, K)),
        B1=rng.uniform(-1.0, 1.0, K),
    )


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(logits):
    """Max-shifted softmax over the last axis; safe for huge logits."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(params, x):
    """Single-sample pass; returns (hidden activations, class probabilities)."""
    x = np.asarray(x, dtype=np.float64)
    hidden = sigmoid(params.W.T @ x + params.B0)
    probs = softmax(params.V.T @ hidden + params.B1)
    return hidden, probs


def predict_proba(params, X):
    """Class probabilities for a whole (n, H) matrix of samples."""
    X = np.asarray(X, dtype=np.float64)
    hidden = sigmoid(X @ params.W + params.B0)
    return softmax(hidden @ params.V + params.B1)


def cross_entropy(probs, label):
    """Negative log-probability of the true class for one sample."""
    return float(-np.log(max(float(probs[label]), PROB_FLOOR)))


def mean_cross_entropy(params, X, labels):
    """Mean cross-entropy of the network over a sample matrix."""
    probs = predict_proba(params, X)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))


def backward(params, x, label):
    """Gradient of the single-sample cross-entropy w.r.t. all parameters.

    Uses the softmax/cross-entropy simplification: the output-layer delta is
    probs - onehot(label).
    """
    x = np.asarray(x, dtype=np.float64)
    hidden, probs = forward(params, x)
    delta_out = probs.copy()
    delta_out[label] -= 1.0
    delta_hidden = (params.V @ delta_out) * hidden * (1.0 - hidden)
    return Gradients(
        W=np.outer(x, delta_hidden),
        B0=delta_hidden,
        V=np.outer(hidden, delta_out),
        B1=delta_out,
    )


@njit(cache=True, nogil=True)
def _sgd_epoch(W, B0, V, B1, X, y, order, lr):
    """One pass of per-sample SGD updates, applied in the given visit order.

    Mutates the parameter arrays in place. All deltas for a sample are
    computed before any of its updates are applied.
    """
    H, N = W.shape
    K = B1.shape[0]
    hidden = np.empty(N)
    logits = np.empty(K)
    probs = np.empty(K)
    delta_h = np.empty(N)
    for t in range(order.shape[0]):
        idx = order[t]
        x = X[idx]
        label = y[idx]
        for n in range(N):
            s = B0[n]
            for i in range(H):
                s += W[i, n] * x[i]
            if s >= 0.0:
                hidden[n] = 1.0 / (1.0 + np.exp(-s))
            else:
                e = np.exp(s)
                hidden[n] = e / (1.0 + e)
        m = -np.inf
        for k in range(K):
            s = B1[k]
            for n in range(N):
                s += V[n, k] * hidden[n]
            logits[k] = s
            if s > m:
                m = s
        total = 0.0
        for k in range(K):
            probs[k] = np.exp(logits[k] - m)
            total += probs[k]
        for k in range(K):
            probs[k] /= total
        probs[label] -= 1.0
        for n in range(N):
            s = 0.0
            for k in range(K):
                s += V[n, k] * probs[k]
            delta_h[n] = s * hidden[n] * (1.0 - hidden[n])
        for n in range(N):
            for k in range(K):
                V[n, k] -= lr * hidden[n] * probs[k]
        for k in range(K):
            B1[k] -= lr * probs[k]
        for i in range(H):
            for n in range(N):
                W[i, n] -= lr * x[i] * delta_h[n]
        for n in range(N):
            B0[n] -= lr * delta_h[n]


def train(data, cfg):
    """Fit the classifier on a normalized SplitDataset.

    Every epoch reshuffles the training rows with a generator seeded by
    cfg.seed and applies one SGD update per sample. Validation cross-entropy
    is checked after each epoch; the parameters are snapshotted whenever it
    strictly improves, and training stops once patience_epochs consecutive
    epochs bring no improvement (or at max_epochs). The snapshot is returned.
    """
    tr, va = data.train, data.validation
    if tr.n_samples == 0 or va.n_samples == 0:
        raise ValueError("training and validation parts must be nonempty")
    H = tr.n_features
    K = tr.n_classes
    N = cfg.hidden_units if cfg.hidden_units is not None else default_hidden_units(H)

    start = init_params(H, N, K, cfg.seed)
    W, B0, V, B1 = (np.array(a) for a in (start.W, start.B0, start.V, start.B1))
    X_tr = np.ascontiguousarray(tr.features)
    y_tr = np.ascontiguousarray(tr.labels)
    shuffler = np.random.default_rng(cfg.seed)

    best = None
    best_val = np.inf
    stale = 0
    history = []
    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffler.permutation(tr.n_samples)
        _sgd_epoch(W, B0, V, B1, X_tr, y_tr, order, cfg.learning_rate)
        if not all(np.isfinite(a).all() for a in (W, B0, V, B1)):
            raise TrainingDiverged(
                f"non-finite parameters after epoch {epoch}; try a smaller learning rate"
            )
        current = NetworkParams(W=W.copy(), B0=B0.copy(), V=V.copy(), B1=B1.copy())
        train_ce = mean_cross_entropy(current, X_tr, y_tr)
        val_ce = mean_cross_entropy(current, va.features, va.labels)
        if not (np.isfinite(train_ce) and np.isfinite(val_ce)):
            raise TrainingDiverged(
                f"non-finite loss at epoch {epoch} (train={train_ce}, validation={val_ce}); "
                f"try a smaller learning rate"
            )
        history.append((train_ce, val_ce))
        if val_ce < best_val:
            best_val = val_ce
            best = current
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience_epochs:
                break
    return TrainReport(
        best_params=best,
        best_validation_ce=best_val,
        epochs_run=len(history),
        history=history,
    )


def accuracy(params, ds):
    """Fraction of samples whose argmax class matches the label.

    np.argmax resolves ties toward the lowest class index.
    """
    preds = np.argmax(predict_proba(params, ds.features), axis=1)
    return float(np.mean(preds == ds.labels))


def save_model(path, params, stats, feature_names, class_names):
    """Write a model checkpoint as JSON (format "safs-model/1")."""
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "n_inputs": params.n_inputs,
        "n_hidden": params.n_hidden,
        "n_classes": params.n_classes,
        "weights": {
            "w": params.W.ravel().tolist(),
            "b0": params.B0.tolist(),
            "v": params.V.ravel().tolist(),
            "b1": params.B1.tolist(),
        },
        "normalization": {
            "means": stats.means.tolist(),
            "scales": stats.scales.tolist(),
        },
        "feature_names": list(feature_names),
        "class_names": list(class_names),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path):
    """Read a "safs-model/1" checkpoint back into its parts.

    Returns (params, stats, feature_names, class_names).
    """
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format {doc.get('version')!r}")
    H, N, K = doc["n_inputs"], doc["n_hidden"], doc["n_classes"]
    w = doc["weights"]
    params = NetworkParams(
        W=np.array(w["w"]).reshape(H, N),
        B0=np.array(w["b0"]),
        V=np.array(w["v"]).reshape(N, K),
        B1=np.array(w["b1"]),
    )
    stats = NormalizationStats(
        means=np.array(doc["normalization"]["means"]),
        scales=np.array(doc["normalization"]["scales"]),
    )
    return params, stats, tuple(doc["feature_names"]), tuple(doc["class_names"])
