"""Structure-preserving training of compiled acceptors.

The smooth forward pass is the symbolic one with thresholding removed and a
sigmoid head ``p = sigmoid(f . s_T - b)``. Gradients are computed by hand over
the unrolled pass; masks keep every weight outside the compiled sparsity
pattern at exactly zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
import numpy as np

from .nfa import EPS, Nfa, UnknownSymbolError, accepts_oracle
from .relu_net import ReluAcceptor, _encode_matrix, one_hot

ACTIVATION_CLIP = 1e6
PROB_EPS = 1e-7
DEFAULT_BIAS = 0.5


class TrainingDiverged(ArithmeticError):
    pass


@dataclass
class MaskedModel:
    alphabet: tuple[str, ...]
    weights: dict[str, np.ndarray]  # keyed by symbol, plus EPS
    masks: dict[str, np.ndarray]
    start_vector: np.ndarray
    accept_vector: np.ndarray
    acceptance_bias: float = DEFAULT_BIAS
    closure_iterations: int = 0

    @property
    def n(self) -> int:
        return len(self.start_vector)

    @property
    def keys(self) -> tuple[str, ...]:
        return self.alphabet + (EPS,)

    @classmethod
    def from_acceptor(cls, acceptor: ReluAcceptor, init_jitter: float = 0.0, seed: int = 0,
                      bias: float = DEFAULT_BIAS) -> MaskedModel:
        """Symbolic weights, plus uniform ``[0, init_jitter]`` noise on masked-in entries."""
        rng = np.random.default_rng(seed)
        weights, masks = {}, {}
        for key in acceptor.alphabet + (EPS,):
            W = acceptor.matrix(key).astype(float).copy()
            mask = (W != 0).astype(float)
            if init_jitter > 0:
                W += rng.uniform(0.0, init_jitter, size=W.shape) * mask
            weights[key] = W
            masks[key] = mask
        return cls(acceptor.alphabet, weights, masks, acceptor.start_vector.copy(),
                   acceptor.accept_vector.copy(), bias, acceptor.closure_iterations)

    def copy(self) -> MaskedModel:
        return MaskedModel(self.alphabet, {k: w.copy() for k, w in self.weights.items()},
                           {k: m.copy() for k, m in self.masks.items()}, self.start_vector.copy(),
                           self.accept_vector.copy(), self.acceptance_bias, self.closure_iterations)

    def predict(self, text: str) -> bool:
        return forward_smooth(self, text)[0] > 0.5


@dataclass
class LabeledDataset:
    items: list[tuple[str, int]]
    nfa_seed: int | None = None
    min_len: int = 0
    max_len: int = 0
    seed: int | None = None

    def __len__(self):
        return len(self.items)

    def dumps(self) -> str:
        return "".join(json.dumps({"string": s, "label": y}) + "\n" for s, y in self.items)

    @classmethod
    def loads(cls, text: str) -> LabeledDataset:
        items = []
        for line in text.splitlines():
            if line.strip():
                rec = json.loads(line)
                items.append((rec["string"], int(rec["label"])))
        return cls(items)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 5
    batch_size: int | None = None  # None: full batch
    seed: int = 0
    init_jitter: float = 0.0
    masked: bool = True

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainReport:
    config: dict
    seed: int
    epoch_losses: list[float]
    violations_per_epoch: list[int]
    initial_train_accuracy: float
    train_accuracy: float
    test_accuracy: float | None
    violations: int
    model: MaskedModel | None = field(default=None, repr=False, compare=False)

    def to_document(self) -> dict:
        doc = asdict(self)
        doc.pop("model")
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"


@dataclass
class Gradient:
    weights: dict[str, np.ndarray]
    bias: float


# ---------------------------------------------------------------------------
# forward / backward


def _closure(model: MaskedModel, s: np.ndarray, tape: list) -> np.ndarray:
    W = model.weights[EPS]
    for _ in range(model.closure_iterations):
        u = W @ s
        pre = s + np.maximum(0.0, u)
        tape.append((EPS, s, u, pre))
        s = np.minimum(pre, ACTIVATION_CLIP)
    return s


def forward_smooth(model: MaskedModel, text: str) -> tuple[float, dict]:
    """Acceptance probability and the cache needed by :func:`backward`."""
    for ch in text:
        if ch not in model.alphabet:
            raise UnknownSymbolError(ch, model.alphabet)
    tape: list = []
    s = _closure(model, model.start_vector.astype(float), tape)
    for ch in text:
        u = model.weights[ch] @ s
        pre = np.maximum(0.0, u)
        tape.append((ch, s, u, pre))
        s = np.minimum(pre, ACTIVATION_CLIP)
        s = _closure(model, s, tape)
    z = float(model.accept_vector @ s) - model.acceptance_bias
    p = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
    return p, {"tape": tape, "final": s, "z": z, "p": p}


def bce_loss(prediction: float, label: int) -> float:
    p = min(max(prediction, PROB_EPS), 1.0 - PROB_EPS)
    return -(label * math.log(p) + (1 - label) * math.log(1.0 - p))


def backward(model: MaskedModel, cache: dict, label: int) -> Gradient:
    p = cache["p"]
    # derivative of the clamped BCE wrt z; zero where the clamp is active
    if PROB_EPS < p < 1.0 - PROB_EPS:
        dz = p - label
    else:
        dz = 0.0
    grads = {k: np.zeros_like(w) for k, w in model.weights.items()}
    g = dz * model.accept_vector
    for key, s_in, u, pre in reversed(cache["tape"]):
        g = g * (pre < ACTIVATION_CLIP)
        W = model.weights[key]
        if key == EPS:
            gu = g * (u > 0)
            grads[key] += np.outer(gu, s_in)
            g = g + W.T @ gu
        else:
            gu = g * (u > 0)
            grads[key] += np.outer(gu, s_in)
            g = W.T @ gu
    for key in grads:
        grads[key] *= model.masks[key]
    return Gradient(grads, -dz)


def _unmasked_backward(model: MaskedModel, cache: dict, label: int) -> Gradient:
    saved = model.masks
    model.masks = {k: np.ones_like(m) for k, m in saved.items()}
    try:
        return backward(model, cache, label)
    finally:
        model.masks = saved


# ---------------------------------------------------------------------------
# datasets


def sample_string(rng: np.random.Generator, alphabet: tuple[str, ...], min_len: int, max_len: int) -> str:
    length = int(rng.integers(min_len, max_len + 1))
    return "".join(alphabet[int(i)] for i in rng.integers(len(alphabet), size=length))


def generate_dataset(nfa: Nfa, count: int, min_len: int, max_len: int, seed: int,
                     nfa_seed: int | None = None) -> LabeledDataset:
    if min_len > max_len:
        raise ValueError("min_len must not exceed max_len")
    rng = np.random.default_rng(seed)
    items = []
    for _ in range(count):
        s = sample_string(rng, nfa.alphabet, min_len, max_len)
        items.append((s, int(accepts_oracle(nfa, s))))
    return LabeledDataset(items, nfa_seed, min_len, max_len, seed)


# ---------------------------------------------------------------------------
# training


def audit_sparsity(model: MaskedModel, reference: ReluAcceptor, tol: float = 1e-9) -> int:
    """Count weights that are nonzero where the reference matrix is zero."""
    count = 0
    for key in model.keys:
        ref = reference.matrix(key)
        if ref.shape != model.weights[key].shape:
            raise ValueError(f"shape mismatch for {key!r}")
        count += int(np.sum((np.abs(model.weights[key]) > tol) & (ref == 0)))
    return count


def accuracy(model: MaskedModel, data: LabeledDataset) -> float:
    if not data.items:
        return float("nan")
    return sum(int(model.predict(s)) == y for s, y in data.items) / len(data.items)


def mean_loss(model: MaskedModel, data: LabeledDataset) -> float:
    return sum(bce_loss(forward_smooth(model, s)[0], y) for s, y in data.items) / len(data.items)


def train(model: MaskedModel, data: LabeledDataset, config: TrainConfig,
          test: LabeledDataset | None = None, reference: ReluAcceptor | None = None) -> TrainReport:
    """Minibatch gradient descent with mask-projected, nonnegative updates.

    The input model is left untouched; the trained copy is on ``report.model``.
    ``reference`` is the acceptor the sparsity audit compares against; by
    default the model's own initial masks serve as the pattern.
    """
    model = model.copy()
    pattern = {k: m.copy() for k, m in model.masks.items()}
    rng = np.random.default_rng(config.seed)
    n_items = len(data.items)
    batch = n_items if not config.batch_size else config.batch_size
    grad_fn = backward if config.masked else _unmasked_backward
    initial_acc = accuracy(model, data)

    def violations():
        if reference is not None:
            return audit_sparsity(model, reference)
        return sum(int(np.sum((np.abs(model.weights[k]) > 1e-9) & (pattern[k] == 0))) for k in model.keys)

    losses, viol = [], []
    for _ in range(config.epochs):
        order = rng.permutation(n_items) if batch < n_items else np.arange(n_items)
        for lo in range(0, n_items, batch):
            idx = order[lo:lo + batch]
            acc = {k: np.zeros_like(w) for k, w in model.weights.items()}
            acc_b = 0.0
            for i in idx:
                text, label = data.items[i]
                _, cache = forward_smooth(model, text)
                g = grad_fn(model, cache, label)
                for k in acc:
                    acc[k] += g.weights[k]
                acc_b += g.bias
            scale = config.learning_rate / len(idx)
            for k, W in model.weights.items():
                W -= scale * acc[k]
                if config.masked:
                    W *= model.masks[k]
                np.maximum(W, 0.0, out=W)
            model.acceptance_bias -= scale * acc_b
        loss = mean_loss(model, data)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss} after epoch {len(losses) + 1}")
        losses.append(loss)
        viol.append(violations())

    cfg = asdict(config)
    if cfg["batch_size"] is None:
        cfg["batch_size"] = n_items
    return TrainReport(
        config=cfg,
        seed=config.seed,
        epoch_losses=losses,
        violations_per_epoch=viol,
        initial_train_accuracy=initial_acc,
        train_accuracy=accuracy(model, data),
        test_accuracy=accuracy(model, test) if test is not None else None,
        violations=viol[-1],
        model=model,
    )


# ---------------------------------------------------------------------------
# serialization


def model_to_document(model: MaskedModel) -> dict:
    return {
        "kind": "masked_model",
        "n": model.n,
        "alphabet": list(model.alphabet),
        "weights": {k: _encode_matrix(w) for k, w in model.weights.items()},
        "masks": {k: _encode_matrix(m) for k, m in model.masks.items()},
        "start": int(np.flatnonzero(model.start_vector)[0]),
        "accept": _encode_matrix(model.accept_vector[None, :])[0],
        "acceptance_bias": model.acceptance_bias,
        "closure_iterations": model.closure_iterations,
    }


def model_from_document(doc: dict) -> MaskedModel:
    if doc.get("kind") != "masked_model":
        raise ValueError(f"not a model document (kind={doc.get('kind')!r})")
    n = doc["n"]
    return MaskedModel(
        alphabet=tuple(doc["alphabet"]),
        weights={k: np.array(w, dtype=float).reshape(n, n) for k, w in doc["weights"].items()},
        masks={k: np.array(m, dtype=float).reshape(n, n) for k, m in doc["masks"].items()},
        start_vector=one_hot(n, doc["start"]),
        accept_vector=np.array(doc["accept"], dtype=float),
        acceptance_bias=float(doc["acceptance_bias"]),
        closure_iterations=doc["closure_iterations"],
    )
