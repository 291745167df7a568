"""Synthetic dataset generation, differentiable classifiers with analytic
input gradients, standard and FGSM-adversarial training, and the model zoo
(surrogate / held-out / adversarially-trained split) with JSON persistence.

Three architectures are supported, all operating on flattened float64 input
vectors:

* ``linear-softmax``   -- logits = x W + b
* ``mlp``              -- fully connected stack with tanh or relu hidden
                          layers; the last hidden activation doubles as an
                          embedding vector for feature-space attacks
* ``prototype-softmax``-- logits_k = -||x - c_k||^2 / (2 tau), a trainable
                          nearest-prototype classifier

Every model exposes exact analytic gradients of the cross-entropy loss with
respect to its input (verified against finite differences in the tests).
"""

import dataclasses
import hashlib
import json
import math

import numpy as np

from . import core

ARCH_LINEAR = "linear-softmax"
ARCH_MLP = "mlp"
ARCH_PROTO = "prototype-softmax"
ARCHITECTURES = (ARCH_LINEAR, ARCH_MLP, ARCH_PROTO)

ZOO_FORMAT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss; callers may lower the learning rate."""


class CapabilityError(TypeError):
    """The model architecture does not support the requested operation."""


class ZooFormatError(ValueError):
    """Zoo file is not parseable as the expected JSON structure."""


class ZooVersionError(ZooFormatError):
    """Zoo file declares an unsupported format version."""


class ZooChecksumError(ZooFormatError):
    """Zoo file content does not match its recorded checksum."""


# ---------------------------------------------------------------------------
# dataset


@dataclasses.dataclass
class SyntheticDataset:
    """Gaussian blobs around smooth (low-frequency) class mean images."""

    num_classes: int
    shape: tuple[int, int, int]
    class_means: np.ndarray  # (K, C, H, W)
    noise_sigma: float
    train_x: np.ndarray  # (N, C, H, W)
    train_y: np.ndarray  # (N,) int64
    test_x: np.ndarray
    test_y: np.ndarray
    seed: int

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.num_classes, self.shape, self.noise_sigma,
                       self.seed)).encode())
        for arr in (self.class_means, self.train_x, self.train_y,
                    self.test_x, self.test_y):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def gen_dataset(num_classes: int, shape: tuple[int, int, int],
                n_per_class: int, noise_sigma: float, seed: int,
                low_freq: int = 4) -> SyntheticDataset:
    """Generate a deterministic synthetic image-classification dataset.

    Class means are independent smooth random patterns: only the ``low_freq``
    x ``low_freq`` lowest-frequency DCT coefficients are drawn, the spatial
    image is recovered with the inverse transform and range-normalised into
    [0.2, 0.8]. Samples are the means plus Gaussian pixel noise, clamped to
    [0, 1], with a deterministic 80/20 per-class train/test split.
    """
    if num_classes < 2:
        raise core.ContractViolation("need at least 2 classes")
    if n_per_class < 2:
        raise core.ContractViolation("need at least 2 samples per class")
    channels, height, width = shape
    if channels <= 0 or height <= 0 or width <= 0:
        raise core.ContractViolation(f"degenerate shape {shape}")
    if noise_sigma <= 0:
        raise core.ContractViolation("noise_sigma must be positive")

    lf_h = min(low_freq, height)
    lf_w = min(low_freq, width)
    means = np.zeros((num_classes,) + tuple(shape))
    for k in range(num_classes):
        rng = core.stream(seed, "mean", k)
        coeffs = np.zeros(shape)
        coeffs[:, :lf_h, :lf_w] = rng.normal(size=(channels, lf_h, lf_w))
        img = core.idct2(coeffs)
        span = img.max() - img.min()
        means[k] = 0.2 + 0.6 * (img - img.min()) / span

    n_train = int(round(0.8 * n_per_class))
    train_x, train_y, test_x, test_y = [], [], [], []
    for k in range(num_classes):
        rng = core.stream(seed, "samples", k)
        samples = np.clip(means[k] + rng.normal(0.0, noise_sigma,
                                                (n_per_class,) + tuple(shape)),
                          0.0, 1.0)
        train_x.append(samples[:n_train])
        test_x.append(samples[n_train:])
        train_y.append(np.full(n_train, k, dtype=np.int64))
        test_y.append(np.full(n_per_class - n_train, k, dtype=np.int64))

    return SyntheticDataset(
        num_classes=num_classes, shape=tuple(shape), class_means=means,
        noise_sigma=float(noise_sigma),
        train_x=np.concatenate(train_x), train_y=np.concatenate(train_y),
        test_x=np.concatenate(test_x), test_y=np.concatenate(test_y),
        seed=int(seed))


def load_image_csv(path, shape: tuple[int, int, int]) -> list[tuple[np.ndarray, int]]:
    """Read images from a CSV with header ``label,p0,p1,...,pN`` (row-major
    pixels in [0, 1]) and reshape them to ``shape``."""
    channels, height, width = shape
    dim = channels * height * width
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "label":
            raise core.ContractViolation("image CSV must start with a 'label' column")
        if len(header) != dim + 1:
            raise core.ContractViolation(
                f"image CSV has {len(header) - 1} pixel columns, expected {dim}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            label = int(fields[0])
            pixels = np.asarray([float(v) for v in fields[1:]], dtype=np.float64)
            if pixels.size != dim:
                raise core.ContractViolation(f"row {line_no}: wrong pixel count")
            if pixels.min() < 0.0 or pixels.max() > 1.0:
                raise core.ContractViolation(f"row {line_no}: pixels outside [0, 1]")
            out.append((pixels.reshape(shape), label))
    return out


# ---------------------------------------------------------------------------
# model specification


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """Architecture, initialisation seed and training hyperparameters."""

    arch: str
    hidden_widths: tuple[int, ...] = ()
    activation: str = "tanh"
    temperature: float = 2.0
    init_seed: int = 0
    learning_rate: float = 0.25
    epochs: int = 40
    batch_size: int = 32
    at_flag: bool = False
    at_epsilon: float = 0.0

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise core.ContractViolation(f"unknown architecture {self.arch!r}")
        if self.arch == ARCH_MLP:
            if not self.hidden_widths or any(w <= 0 for w in self.hidden_widths):
                raise core.ContractViolation("mlp needs positive hidden widths")
            if self.activation not in ("tanh", "relu"):
                raise core.ContractViolation(f"unknown activation {self.activation!r}")
        if self.temperature <= 0:
            raise core.ContractViolation("temperature must be positive")
        if self.learning_rate <= 0 or self.epochs < 0 or self.batch_size < 1:
            raise core.ContractViolation("invalid training hyperparameters")
        if self.at_epsilon < 0:
            raise core.ContractViolation("at_epsilon must be non-negative")
        if not self.at_flag and self.at_epsilon != 0.0:
            raise core.ContractViolation("at_epsilon requires at_flag")
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self) | {"hidden_widths": list(self.hidden_widths)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        d["hidden_widths"] = tuple(d.get("hidden_widths", ()))
        return cls(**d)


def _softmax_ce(z: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cross-entropy via the log-sum-exp max-shift trick.

    Returns per-sample losses (N,) and softmax probabilities (N, K).
    """
    shift = z.max(axis=1, keepdims=True)
    ez = np.exp(z - shift)
    total = ez.sum(axis=1, keepdims=True)
    probs = ez / total
    lse = shift[:, 0] + np.log(total[:, 0])
    losses = lse - z[np.arange(z.shape[0]), y]
    return losses, probs


def _as_labels(y, n: int) -> np.ndarray:
    arr = np.asarray(y, dtype=np.int64)
    if arr.ndim == 0:
        arr = np.full(n, int(arr), dtype=np.int64)
    return arr


# ---------------------------------------------------------------------------
# architectures


class LinearSoftmax:
    arch = ARCH_LINEAR

    def __init__(self, spec: ModelSpec, w: np.ndarray, b: np.ndarray, meta=None):
        self.spec = spec
        self.w = w  # (D, K)
        self.b = b  # (K,)
        self.meta = meta

    @classmethod
    def initialize(cls, spec: ModelSpec, input_dim: int, num_classes: int):
        rng = core.stream(spec.init_seed, "init")
        w = rng.normal(0.0, 1.0 / math.sqrt(input_dim), (input_dim, num_classes))
        return cls(spec, w, np.zeros(num_classes))

    @property
    def num_classes(self) -> int:
        return self.b.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w.shape[0]

    def logits_batch(self, x: np.ndarray) -> np.ndarray:
        return x @ self.w + self.b

    def loss_grad_input_batch(self, x, y):
        y = _as_labels(y, x.shape[0])
        losses, probs = _softmax_ce(self.logits_batch(x), y)
        dz = probs.copy()
        dz[np.arange(x.shape[0]), y] -= 1.0
        return losses, dz @ self.w.T

    def loss_param_grads(self, x, y):
        y = _as_labels(y, x.shape[0])
        losses, probs = _softmax_ce(self.logits_batch(x), y)
        dz = probs.copy()
        dz[np.arange(x.shape[0]), y] -= 1.0
        dz /= x.shape[0]
        return float(losses.mean()), [x.T @ dz, dz.sum(axis=0)]

    def sgd_update(self, grads, lr: float):
        self.w -= lr * grads[0]
        self.b -= lr * grads[1]

    def param_arrays(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    @classmethod
    def from_param_arrays(cls, spec, arrays, meta=None):
        return cls(spec, arrays["w"], arrays["b"], meta)


class Mlp:
    arch = ARCH_MLP

    def __init__(self, spec: ModelSpec, weights: list[np.ndarray],
                 biases: list[np.ndarray], meta=None):
        self.spec = spec
        self.weights = weights
        self.biases = biases
        self.meta = meta

    @classmethod
    def initialize(cls, spec: ModelSpec, input_dim: int, num_classes: int):
        rng = core.stream(spec.init_seed, "init")
        dims = (input_dim,) + spec.hidden_widths + (num_classes,)
        gain = 2.0 if spec.activation == "relu" else 1.0
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            weights.append(rng.normal(0.0, math.sqrt(gain / fan_in), (fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(spec, weights, biases)

    @property
    def num_classes(self) -> int:
        return self.biases[-1].shape[0]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def embed_dim(self) -> int:
        return self.spec.hidden_widths[-1]

    def _act(self, s: np.ndarray) -> np.ndarray:
        if self.spec.activation == "tanh":
            return np.tanh(s)
        return np.maximum(s, 0.0)

    def _act_deriv(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        if self.spec.activation == "tanh":
            return 1.0 - a * a
        return (s > 0.0).astype(np.float64)

    def _forward(self, x: np.ndarray):
        pre, act = [], [x]
        a = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            s = a @ w + b
            a = self._act(s)
            pre.append(s)
            act.append(a)
        z = a @ self.weights[-1] + self.biases[-1]
        return z, pre, act

    def logits_batch(self, x: np.ndarray) -> np.ndarray:
        return self._forward(x)[0]

    def _backward_to_input(self, dz, pre, act):
        d = dz @ self.weights[-1].T
        for layer in range(len(self.weights) - 2, -1, -1):
            d = d * self._act_deriv(pre[layer], act[layer + 1])
            d = d @ self.weights[layer].T
        return d

    def loss_grad_input_batch(self, x, y):
        y = _as_labels(y, x.shape[0])
        z, pre, act = self._forward(x)
        losses, probs = _softmax_ce(z, y)
        dz = probs.copy()
        dz[np.arange(x.shape[0]), y] -= 1.0
        return losses, self._backward_to_input(dz, pre, act)

    def loss_param_grads(self, x, y):
        y = _as_labels(y, x.shape[0])
        z, pre, act = self._forward(x)
        losses, probs = _softmax_ce(z, y)
        d = probs.copy()
        d[np.arange(x.shape[0]), y] -= 1.0
        d /= x.shape[0]
        w_grads = [None] * len(self.weights)
        b_grads = [None] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            w_grads[layer] = act[layer].T @ d
            b_grads[layer] = d.sum(axis=0)
            if layer > 0:
                d = (d @ self.weights[layer].T) * self._act_deriv(pre[layer - 1], act[layer])
        return float(losses.mean()), list(w_grads) + list(b_grads)

    def sgd_update(self, grads, lr: float):
        n = len(self.weights)
        for i in range(n):
            self.weights[i] -= lr * grads[i]
            self.biases[i] -= lr * grads[n + i]

    # -- embedding interface (last hidden activation) --

    def embed_batch(self, x: np.ndarray) -> np.ndarray:
        _, _, act = self._forward(x)
        return act[-1]

    def embed_forward(self, x: np.ndarray):
        _, pre, act = self._forward(x)
        return act[-1], (pre, act)

    def embed_vjp(self, ctx, d_embed: np.ndarray) -> np.ndarray:
        """Backpropagate an upstream gradient on the embedding to the input."""
        pre, act = ctx
        d = d_embed * self._act_deriv(pre[-1], act[-1])
        d = d @ self.weights[-2].T if len(self.weights) >= 2 else d
        for layer in range(len(self.weights) - 3, -1, -1):
            d = d * self._act_deriv(pre[layer], act[layer + 1])
            d = d @ self.weights[layer].T
        return d

    def param_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    @classmethod
    def from_param_arrays(cls, spec, arrays, meta=None):
        n = len(spec.hidden_widths) + 1
        return cls(spec, [arrays[f"w{i}"] for i in range(n)],
                   [arrays[f"b{i}"] for i in range(n)], meta)


class PrototypeSoftmax:
    """Classifier with logits -||x - c_k||^2 / (2 tau); prototypes trainable."""

    arch = ARCH_PROTO

    def __init__(self, spec: ModelSpec, prototypes: np.ndarray, meta=None):
        self.spec = spec
        self.prototypes = prototypes  # (K, D)
        self.meta = meta

    @classmethod
    def initialize(cls, spec: ModelSpec, input_dim: int, num_classes: int):
        rng = core.stream(spec.init_seed, "init")
        return cls(spec, rng.normal(0.5, 0.1, (num_classes, input_dim)))

    @property
    def num_classes(self) -> int:
        return self.prototypes.shape[0]

    @property
    def input_dim(self) -> int:
        return self.prototypes.shape[1]

    def logits_batch(self, x: np.ndarray) -> np.ndarray:
        sq = (np.sum(x * x, axis=1, keepdims=True)
              - 2.0 * x @ self.prototypes.T
              + np.sum(self.prototypes * self.prototypes, axis=1))
        return -sq / (2.0 * self.spec.temperature)

    def loss_grad_input_batch(self, x, y):
        y = _as_labels(y, x.shape[0])
        losses, probs = _softmax_ce(self.logits_batch(x), y)
        w = probs.copy()
        w[np.arange(x.shape[0]), y] -= 1.0
        # sum_k (p_k - delta_ky)(c_k - x) / tau; the x term cancels since the
        # weights sum to zero.
        return losses, (w @ self.prototypes) / self.spec.temperature

    def loss_param_grads(self, x, y):
        y = _as_labels(y, x.shape[0])
        losses, probs = _softmax_ce(self.logits_batch(x), y)
        w = probs.copy()
        w[np.arange(x.shape[0]), y] -= 1.0
        w /= x.shape[0]
        grad_c = (w.T @ x - w.sum(axis=0)[:, None] * self.prototypes) / self.spec.temperature
        return float(losses.mean()), [grad_c]

    def sgd_update(self, grads, lr: float):
        self.prototypes -= lr * grads[0]

    def param_arrays(self) -> dict[str, np.ndarray]:
        return {"prototypes": self.prototypes}

    @classmethod
    def from_param_arrays(cls, spec, arrays, meta=None):
        return cls(spec, arrays["prototypes"], meta)


_ARCH_CLASSES = {ARCH_LINEAR: LinearSoftmax, ARCH_MLP: Mlp, ARCH_PROTO: PrototypeSoftmax}


# ---------------------------------------------------------------------------
# single-example convenience wrappers (image-shaped tensors)


def logits(model, x: np.ndarray) -> np.ndarray:
    return model.logits_batch(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]


def loss_ce(model, x: np.ndarray, y: int) -> float:
    losses, _ = model.loss_grad_input_batch(
        np.asarray(x, dtype=np.float64).reshape(1, -1), y)
    return float(losses[0])


def grad_input(model, x: np.ndarray, y: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    _, grads = model.loss_grad_input_batch(x.reshape(1, -1), y)
    return grads[0].reshape(x.shape)


def embed(model, x: np.ndarray) -> np.ndarray:
    if model.arch != ARCH_MLP:
        raise CapabilityError(f"{model.arch} models have no embedding vector")
    return model.embed_batch(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]


def predict(model, x: np.ndarray) -> int:
    """Argmax class; ties break toward the lowest class index."""
    return int(np.argmax(logits(model, x)))


def accuracy(model, x: np.ndarray, y: np.ndarray) -> float:
    flat = np.asarray(x, dtype=np.float64).reshape(x.shape[0], -1)
    return float(np.mean(np.argmax(model.logits_batch(flat), axis=1) == y))


# ---------------------------------------------------------------------------
# training


@dataclasses.dataclass
class ModelMeta:
    train_accuracy: float
    test_accuracy: float
    dataset_fingerprint: str
    train_seed: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _freeze(model):
    for arr in model.param_arrays().values():
        arr.flags.writeable = False
    return model


def _run_training(spec: ModelSpec, dataset: SyntheticDataset, seed: int,
                  adversarial: bool):
    x_train = dataset.train_x.reshape(dataset.train_x.shape[0], -1)
    y_train = dataset.train_y
    model = _ARCH_CLASSES[spec.arch].initialize(
        spec, x_train.shape[1], dataset.num_classes)

    shuffle_rng = core.stream(seed, "shuffle")
    n = x_train.shape[0]
    for _ in range(spec.epochs):
        perm = shuffle_rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            idx = perm[start:start + spec.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            if adversarial:
                # single-step FGSM examples at radius at_epsilon, computed
                # against the current weights
                _, g = model.loss_grad_input_batch(xb, yb)
                xb = np.clip(xb + spec.at_epsilon * np.sign(g), 0.0, 1.0)
            loss, grads = model.loss_param_grads(xb, yb)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss during training (lr={spec.learning_rate})")
            model.sgd_update(grads, spec.learning_rate)

    model.meta = ModelMeta(
        train_accuracy=accuracy(model, dataset.train_x, dataset.train_y),
        test_accuracy=accuracy(model, dataset.test_x, dataset.test_y),
        dataset_fingerprint=dataset.fingerprint(),
        train_seed=int(seed))
    return _freeze(model)


def train_model(spec: ModelSpec, dataset: SyntheticDataset, seed: int):
    """Mini-batch SGD on cross-entropy. Deterministic given (spec, dataset, seed)."""
    if spec.at_flag:
        raise core.ContractViolation("use train_model_at for at_flag specs")
    return _run_training(spec, dataset, seed, adversarial=False)


def train_model_at(spec: ModelSpec, dataset: SyntheticDataset, seed: int):
    """FGSM adversarial training: every SGD batch is replaced by single-step
    FGSM examples at radius ``spec.at_epsilon`` before the weight update."""
    if not spec.at_flag:
        raise core.ContractViolation("train_model_at requires at_flag")
    return _run_training(spec, dataset, seed, adversarial=True)


# ---------------------------------------------------------------------------
# zoo


@dataclasses.dataclass
class Zoo:
    surrogates: list
    heldout: list
    heldout_at: list
    dataset_fingerprint: str

    def all_models(self):
        return list(self.surrogates) + list(self.heldout) + list(self.heldout_at)

    def check_disjoint(self):
        """Surrogate / held-out / AT slots must use pairwise distinct init seeds."""
        seeds = [m.spec.init_seed for m in self.all_models()]
        if len(set(seeds)) != len(seeds):
            raise core.ContractViolation("zoo init seeds are not pairwise distinct")


def default_mixture():
    """Uniform mixture over small MLP shapes and activations."""
    combos = [((32,), "tanh"), ((32,), "relu"),
              ((64,), "tanh"), ((64,), "relu"),
              ((32, 16), "tanh"), ((32, 16), "relu")]
    weight = 1.0 / len(combos)
    return [({"arch": ARCH_MLP, "hidden_widths": widths, "activation": act}, weight)
            for widths, act in combos]


def _draw_spec(mixture, rng, **overrides) -> ModelSpec:
    weights = np.asarray([w for _, w in mixture], dtype=np.float64)
    weights = weights / weights.sum()
    idx = int(rng.choice(len(mixture), p=weights))
    template = dict(mixture[idx][0])
    template.update(overrides)
    return ModelSpec(**template)


def build_zoo(n_surrogate: int, n_heldout: int, n_heldout_at: int,
              mixture=None, dataset: SyntheticDataset = None, seed: int = 0,
              at_epsilon: float = 8 / 255, training_overrides: dict | None = None) -> Zoo:
    """Train a zoo of i.i.d.-sampled models on one dataset.

    Specs are drawn independently from ``mixture`` per slot; each slot gets
    derived init/train seeds so the build is reproducible and slots are
    pairwise distinct. Diverged trainings are retried up to 3 times with
    reseeded streams before the error propagates.
    """
    if min(n_surrogate, n_heldout, n_heldout_at) < 0:
        raise core.ContractViolation("zoo counts must be non-negative")
    if dataset is None:
        raise core.ContractViolation("dataset is required")
    mixture = default_mixture() if mixture is None else mixture
    overrides = dict(training_overrides or {})

    def train_slot(slot: int, at: bool):
        last_err = None
        for attempt in range(4):
            spec = _draw_spec(
                mixture, core.stream(seed, "mix", slot, attempt),
                init_seed=core.derive_seed(seed, "init", slot, attempt),
                at_flag=at, at_epsilon=at_epsilon if at else 0.0, **overrides)
            train_seed = core.derive_seed(seed, "train", slot, attempt)
            try:
                if at:
                    return train_model_at(spec, dataset, train_seed)
                return train_model(spec, dataset, train_seed)
            except TrainingDivergedError as err:
                last_err = err
        raise last_err

    total = n_surrogate + n_heldout + n_heldout_at
    models = []
    for slot in range(total):
        models.append(train_slot(slot, at=slot >= n_surrogate + n_heldout))

    zoo = Zoo(surrogates=models[:n_surrogate],
              heldout=models[n_surrogate:n_surrogate + n_heldout],
              heldout_at=models[n_surrogate + n_heldout:],
              dataset_fingerprint=dataset.fingerprint())
    zoo.check_disjoint()
    return zoo


# ---------------------------------------------------------------------------
# persistence (versioned JSON with a whole-payload checksum)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def _model_payload(model) -> dict:
    return {"spec": model.spec.to_dict(),
            "weights": {k: v.tolist() for k, v in model.param_arrays().items()},
            "meta": model.meta.to_dict() if model.meta else None}


def _model_from_payload(payload) -> object:
    spec = ModelSpec.from_dict(payload["spec"])
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in payload["weights"].items()}
    meta = ModelMeta(**payload["meta"]) if payload.get("meta") else None
    return _freeze(_ARCH_CLASSES[spec.arch].from_param_arrays(spec, arrays, meta))


def zoo_fingerprint(zoo: Zoo) -> str:
    return hashlib.sha256(canonical_json(_zoo_payload(zoo)).encode()).hexdigest()


def _zoo_payload(zoo: Zoo) -> dict:
    return {"format_version": ZOO_FORMAT_VERSION,
            "dataset_fingerprint": zoo.dataset_fingerprint,
            "models": {"surrogates": [_model_payload(m) for m in zoo.surrogates],
                       "heldout": [_model_payload(m) for m in zoo.heldout],
                       "heldout_at": [_model_payload(m) for m in zoo.heldout_at]}}


def zoo_save(zoo: Zoo, path) -> None:
    payload = _zoo_payload(zoo)
    payload["checksum"] = hashlib.sha256(canonical_json(payload).encode()).hexdigest()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, separators=(",", ":"))


def zoo_load(path) -> Zoo:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise ZooFormatError(f"unreadable zoo file: {err}") from err
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise ZooFormatError("missing format_version field")
    if payload["format_version"] != ZOO_FORMAT_VERSION:
        raise ZooVersionError(
            f"unsupported zoo format version {payload['format_version']}")
    recorded = payload.pop("checksum", None)
    if recorded is None:
        raise ZooFormatError("missing checksum field")
    actual = hashlib.sha256(canonical_json(payload).encode()).hexdigest()
    if actual != recorded:
        raise ZooChecksumError("zoo file checksum mismatch")
    try:
        zoo = Zoo(
            surrogates=[_model_from_payload(p) for p in payload["models"]["surrogates"]],
            heldout=[_model_from_payload(p) for p in payload["models"]["heldout"]],
            heldout_at=[_model_from_payload(p) for p in payload["models"]["heldout_at"]],
            dataset_fingerprint=payload["dataset_fingerprint"])
    except (KeyError, TypeError) as err:
        raise ZooFormatError(f"malformed zoo payload: {err}") from err
    zoo.check_disjoint()
    return zoo
