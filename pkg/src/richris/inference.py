"""Perturber localization and shape recognition from AuxRX wave fingerprints.

Small fully connected networks (rectifier hidden layers) are trained from
scratch with momentum SGD. Mode A uses a fixed series of K random RIS
configurations per fingerprint; Mode B keeps one model pair per code-book
configuration and reads a single configuration at a time.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from richris.noise import NoiseModel, add_awgn
from richris.scenario import SHAPES, PerturberState, Shape, config_from_int, config_to_int

HEADS = ("softmax", "identity")
N_SHAPES = len(SHAPES)
# seed key for the Mode A pair, outside the 25-bit configuration range
MODE_A_KEY = 1 << 25


class InferenceError(RuntimeError):
    pass


class TrainingDiverged(InferenceError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


# ---------------------------------------------------------------- networks


@dataclass
class MlpModel:
    """Weights ``W[l]`` have shape (fan_in, fan_out); inputs are standardized as (x - mean) / scale."""

    sizes: tuple
    head: str
    weights: list
    biases: list
    mean: np.ndarray = None
    scale: np.ndarray = None

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")
        if len(self.sizes) < 2 or len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("layer lists do not match the layer sizes")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[l], self.sizes[l + 1]) or b.shape != (self.sizes[l + 1],):
                raise ValueError(f"layer {l} has shape {w.shape}, expected {(self.sizes[l], self.sizes[l + 1])}")
        if self.head == "softmax" and self.sizes[-1] < 2:
            raise ValueError("softmax head needs at least two outputs")
        if self.mean is None:
            self.mean = np.zeros(self.sizes[0])
        if self.scale is None:
            self.scale = np.ones(self.sizes[0])

    @property
    def n_inputs(self):
        return self.sizes[0]

    def copy(self):
        return MlpModel(
            self.sizes,
            self.head,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.mean.copy(),
            self.scale.copy(),
        )

    def fit_standardization(self, x):
        x = np.asarray(x, dtype=float)
        self.mean = x.mean(axis=0)
        sd = x.std(axis=0)
        self.scale = np.where(sd > 0, sd, 1.0)
        return self

    def to_dict(self):
        return {
            "sizes": list(self.sizes),
            "head": self.head,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(d["sizes"]),
            d["head"],
            [np.array(w, dtype=float).reshape(a, b) for w, a, b in zip(d["weights"], d["sizes"][:-1], d["sizes"][1:])],
            [np.array(b, dtype=float) for b in d["biases"]],
            np.array(d["mean"], dtype=float),
            np.array(d["scale"], dtype=float),
        )


def init_mlp(sizes, head, rng):
    """Glorot-uniform weights and zero biases."""
    weights, biases = [], []
    for a, b in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (a + b))
        weights.append(rng.uniform(-limit, limit, size=(a, b)))
        biases.append(np.zeros(b))
    return MlpModel(tuple(sizes), head, weights, biases)


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_input(model, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.n_inputs:
        raise ValueError(f"input has {x.shape[-1]} features, model expects {model.n_inputs}")
    return x


def mlp_forward(model: MlpModel, x):
    """Class probabilities (softmax head) or the scalar output (identity head).

    Accepts one input vector or a batch of rows.
    """
    x = _check_input(model, x)
    single = x.ndim == 1
    a = (np.atleast_2d(x) - model.mean) / model.scale
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = a @ w + b
        if l < last:
            a = np.maximum(a, 0.0)
    out = _softmax(a) if model.head == "softmax" else a[:, 0]
    return out[0] if single else out


def mlp_gradient(model: MlpModel, x, y):
    """Mean loss and its exact gradient ``[(dW, db), ...]``.

    Cross-entropy on integer labels for the softmax head, squared error
    ``mean((out - y)^2)`` for the identity head.
    """
    x = np.atleast_2d(_check_input(model, x))
    if len(x) == 0:
        raise ValueError("empty batch")
    y = np.asarray(y)
    w = [m[None] for m in model.weights]
    b = [m[None] for m in model.biases]
    xs = ((x - model.mean) / model.scale)[None]
    loss, gw, gb = _stack_gradient(w, b, xs, y[None], model.head)
    return float(loss[0]), [(dw[0], db[0]) for dw, db in zip(gw, gb)]


def _stack_forward(w, b, x):
    """Forward pass of M stacked models on x with shape (M, B, d)."""
    acts, pre = [x], []
    a = x
    last = len(w) - 1
    for l in range(len(w)):
        z = np.matmul(a, w[l]) + b[l][:, None, :]
        pre.append(z)
        a = np.maximum(z, 0.0) if l < last else z
        acts.append(a)
    return acts, pre


def _stack_loss(out, y, head):
    """Per-model mean loss and d(loss)/d(out)."""
    n = out.shape[1]
    if head == "softmax":
        prob = _softmax(out)
        picked = np.take_along_axis(prob, y[..., None].astype(np.intp), axis=2)[..., 0]
        loss = -np.mean(np.log(np.maximum(picked, 1e-300)), axis=1)
        d = prob.copy()
        np.put_along_axis(d, y[..., None].astype(np.intp), picked[..., None] - 1.0, axis=2)
        return loss, d / n
    r = out[..., 0] - y
    return np.mean(r * r, axis=1), (2.0 / n) * r[..., None]


def _stack_gradient(w, b, x, y, head):
    acts, pre = _stack_forward(w, b, x)
    loss, d = _stack_loss(acts[-1], y, head)
    gw = [None] * len(w)
    gb = [None] * len(w)
    for l in range(len(w) - 1, -1, -1):
        gw[l] = np.matmul(acts[l].transpose(0, 2, 1), d)
        gb[l] = d.sum(axis=1)
        if l > 0:
            d = np.matmul(d, w[l].transpose(0, 2, 1)) * (pre[l - 1] > 0)
    return loss, gw, gb


# ---------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainSpec:
    """Momentum SGD settings. The learning rate follows a cosine decay when ``anneal`` is set.

    ``snr_range`` is the augmentation range: with noise augmentation every
    epoch redraws noise at a per-example SNR uniform in this range.
    """

    learning_rate: float = 0.02
    momentum: float = 0.9
    batch_size: int = 128
    epochs: int = 100
    seed: int = 0
    snr_range: tuple = (0.0, 40.0)
    anneal: bool = True

    def __post_init__(self):
        object.__setattr__(self, "snr_range", tuple(float(s) for s in self.snr_range))
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if len(self.snr_range) != 2 or self.snr_range[0] > self.snr_range[1]:
            raise ValueError("snr_range must be an ordered (low, high) pair")

    def rate(self, epoch):
        if not self.anneal:
            return self.learning_rate
        return self.learning_rate * 0.5 * (1.0 + math.cos(math.pi * epoch / self.epochs))

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return TrainSpec(**d)

    def to_dict(self):
        d = asdict(self)
        d["snr_range"] = list(self.snr_range)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class TrainResult:
    model: MlpModel
    history: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NoiseAugmentation:
    """Clean complex channels (M, N, k) redrawn with fresh noise every epoch."""

    clean: np.ndarray
    p_ref: float

    def sample(self, i, rng, snr_range):
        c = self.clean[i]
        snr = rng.uniform(snr_range[0], snr_range[1], c.shape[0])
        sigma = np.sqrt(self.p_ref * 10.0 ** (-snr / 10.0) / 2.0)
        noise = rng.standard_normal(c.shape + (2,)) * sigma[:, None, None]
        return flatten_complex(c + (noise[..., 0] + 1j * noise[..., 1]))


def train(model: MlpModel, x, y, spec: TrainSpec, x_val=None, y_val=None, augment=None):
    """Momentum SGD on the mean loss; returns a trained copy and per-epoch losses."""
    xv = None if x_val is None else np.asarray(x_val, dtype=float)[None]
    yv = None if y_val is None else np.asarray(y_val)[None]
    x = None if x is None else np.asarray(x, dtype=float)[None]
    return train_many([model], x, np.asarray(y)[None], spec, [spec.seed], xv, yv, augment)[0]


def train_many(models, xs, ys, spec: TrainSpec, seeds, xs_val=None, ys_val=None, augment=None):
    """Train M same-architecture models side by side.

    ``xs`` has shape (M, N, d) and ``ys`` (M, N). With ``augment`` the
    inputs are redrawn every epoch from clean channels and ``xs`` may be
    None. Each model draws shuffles and noise from its own seed, so its
    result does not depend on the other models in the stack.
    """
    models = [m.copy() for m in models]
    m_count = len(models)
    if len({(m.sizes, m.head) for m in models}) != 1:
        raise ValueError("stacked models must share the architecture")
    if len(seeds) != m_count:
        raise ValueError("need one seed per model")
    head = models[0].head
    ys = np.asarray(ys)
    mean = np.stack([m.mean for m in models])[:, None, :]
    scale = np.stack([m.scale for m in models])[:, None, :]
    rngs = [np.random.default_rng(s) for s in seeds]

    def inputs():
        if augment is None:
            return fixed
        raw = np.stack([augment.sample(i, r, spec.snr_range) for i, r in enumerate(rngs)])
        return (raw - mean) / scale

    fixed = None if xs is None else (np.asarray(xs, dtype=float) - mean) / scale
    if fixed is None and augment is None:
        raise ValueError("training needs inputs or a noise augmentation")
    if ys.shape[0] != m_count:
        raise ValueError("labels do not match the model count")
    has_val = xs_val is not None
    if has_val:
        xs_val = (np.asarray(xs_val, dtype=float) - mean) / scale
        ys_val = np.asarray(ys_val)
    w = [np.stack([m.weights[l] for m in models]) for l in range(len(models[0].weights))]
    b = [np.stack([m.biases[l] for m in models]) for l in range(len(models[0].biases))]
    vw = [np.zeros_like(a) for a in w]
    vb = [np.zeros_like(a) for a in b]
    n = ys.shape[1]
    bs = min(spec.batch_size, n)
    history = {"train": [], "validation": []}

    def full_loss(x, y):
        acts, _ = _stack_forward(w, b, x)
        return _stack_loss(acts[-1], y, head)[0]

    if has_val:
        history["validation"].append(full_loss(xs_val, ys_val))
    for epoch in range(spec.epochs):
        xs = inputs()
        if xs.shape[:2] != ys.shape[:2]:
            raise ValueError("inputs and labels do not match")
        if epoch == 0:
            history["train"].append(full_loss(xs, ys))
        lr = spec.rate(epoch)
        perm = np.stack([r.permutation(n) for r in rngs])
        for start in range(0, n, bs):
            idx = perm[:, start : start + bs]
            xb = np.take_along_axis(xs, idx[..., None], axis=1)
            yb = np.take_along_axis(ys, idx, axis=1)
            _, gw, gb = _stack_gradient(w, b, xb, yb, head)
            for l in range(len(w)):
                vw[l] = spec.momentum * vw[l] - lr * gw[l]
                vb[l] = spec.momentum * vb[l] - lr * gb[l]
                w[l] += vw[l]
                b[l] += vb[l]
        tl = full_loss(xs, ys)
        history["train"].append(tl)
        if has_val:
            history["validation"].append(full_loss(xs_val, ys_val))
        if not np.all(np.isfinite(tl)):
            hist = _split_history(history, m_count)
            raise TrainingDiverged(f"training diverged at epoch {epoch + 1}", hist[0] if m_count == 1 else hist)
    results = []
    split = _split_history(history, m_count)
    for i, m in enumerate(models):
        m.weights = [a[i].copy() for a in w]
        m.biases = [a[i].copy() for a in b]
        results.append(TrainResult(m, split[i]))
    return results


def _split_history(history, m_count):
    return [
        {k: [float(v[i]) for v in vals] for k, vals in history.items()} for i in range(m_count)
    ]


# ---------------------------------------------------------------- fingerprints


def flatten_complex(z):
    """Complex values to interleaved (re, im) reals along the last axis."""
    z = np.ascontiguousarray(z, dtype=complex)
    return z.view(float).reshape(z.shape[:-1] + (2 * z.shape[-1],))


def aux_channels(engine, series, state):
    return engine.channels(np.atleast_2d(series), state)[:, 1:]


def generate_fingerprint(engine, state: PerturberState, series, snr_db, seed, p_ref):
    """AuxRX channels for every config of ``series`` plus noise, as 16*K reals."""
    series = np.atleast_2d(np.asarray(series))
    if len(series) == 0:
        raise ValueError("configuration series is empty")
    rng = np.random.default_rng(seed)
    z = add_awgn(aux_channels(engine, series, state), NoiseModel(float(snr_db), p_ref), rng)
    return flatten_complex(z.reshape(-1))


@dataclass
class Dataset:
    """Noisy fingerprints with labels.

    ``x`` is (N, 16K) for a concatenated series (Mode A) or (n_configs, N, 16)
    for per-configuration fingerprints (Mode B). ``clean`` holds the noiseless
    AuxRX channels per (config, perturber sample) and ``sample`` maps every
    example to its perturber sample.
    """

    x: np.ndarray
    p: np.ndarray
    shape: np.ndarray
    snr: np.ndarray
    sample: np.ndarray
    clean: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    per_config: bool = False
    p_ref: float = 1.0

    def __len__(self):
        return len(self.p)

    def clean_inputs(self, idx):
        """Clean complex inputs of examples ``idx``, shape (M, len(idx), k)."""
        c = self.clean[:, self.sample[idx]]
        if self.per_config:
            return c
        return c.transpose(1, 0, 2).reshape(1, len(idx), -1)

    def inputs(self, idx):
        return self.x[:, idx] if self.per_config else self.x[idx][None]


def split_indices(n, seed, train_fraction=0.9):
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def build_dataset(engine, series, n_positions, shapes=SHAPES, snr_range=(0.0, 40.0), n_noise=4, seed=0,
                  p_ref=1.0, per_config=False):
    """Labeled fingerprints at uniformly drawn positions for every shape.

    Each (position, shape) sample yields ``n_noise`` examples with SNR drawn
    uniformly from ``snr_range``. With ``per_config`` every configuration gets
    its own 16-feature fingerprint of the same samples (Mode B). The 90/10
    train/validation split keeps all noise draws of a sample on one side.
    """
    if n_positions < 2:
        raise ValueError("need at least two positions")
    if n_noise < 1:
        raise ValueError("need at least one noise draw")
    series = np.atleast_2d(np.asarray(series))
    shapes = [Shape.parse(s) for s in shapes]
    ss = np.random.SeedSequence(int(seed))
    pos_seed, noise_seed, split_seed = ss.spawn(3)
    positions = np.random.default_rng(pos_seed).uniform(0.0, 1.0, n_positions)
    states = [PerturberState(float(p), s) for s in shapes for p in positions]
    n_states = len(states)
    clean = np.stack([engine.channels_at_states(c, states)[:, 1:] for c in series])
    sample = np.tile(np.arange(n_states), n_noise)
    rng = np.random.default_rng(noise_seed)
    snr = rng.uniform(snr_range[0], snr_range[1], len(sample))
    z = clean[:, sample]
    sigma = np.sqrt(p_ref * 10.0 ** (-snr / 10.0) / 2.0)
    noise = rng.standard_normal(z.shape + (2,)) * sigma[None, :, None, None]
    feats = flatten_complex(z + (noise[..., 0] + 1j * noise[..., 1]))
    x = feats if per_config else feats.transpose(1, 0, 2).reshape(len(sample), -1)
    state_p = np.tile(positions, len(shapes))
    state_shape = np.repeat(np.array([int(s) for s in shapes]), n_positions)
    tr_s, va_s = split_indices(n_states, split_seed)
    in_train = np.zeros(n_states, dtype=bool)
    in_train[tr_s] = True
    idx = np.arange(len(sample))
    return Dataset(x, state_p[sample], state_shape[sample], snr, sample, clean,
                   idx[in_train[sample]], idx[~in_train[sample]], per_config, p_ref)


# ---------------------------------------------------------------- model bank


class Mode(enum.Enum):
    A = "A"
    B = "B"


@dataclass
class ModelPair:
    shape: MlpModel
    position: MlpModel
    history: dict = field(default_factory=dict)

    def to_dict(self):
        return {"shape": self.shape.to_dict(), "position": self.position.to_dict(), "history": self.history}

    @classmethod
    def from_dict(cls, d):
        return cls(MlpModel.from_dict(d["shape"]), MlpModel.from_dict(d["position"]), d.get("history", {}))


@dataclass
class InferenceBank:
    """Mode A: one pair for a fixed config series. Mode B: one pair per configuration (keyed by integer)."""

    mode: Mode
    pairs: dict
    series: tuple = ()
    p_ref: float = 1.0
    train_spec: TrainSpec = None
    scenario_hash: str = ""

    def pair_for(self, config=None):
        if self.mode is Mode.A:
            return self.pairs[0]
        if config is None:
            raise InferenceError("Mode B prediction needs the current configuration")
        key = config if isinstance(config, (int, np.integer)) else config_to_int(config)
        try:
            return self.pairs[int(key)]
        except KeyError:
            raise InferenceError(f"configuration {int(key)} has no model in the bank") from None

    @property
    def series_configs(self):
        return np.stack([config_from_int(c) for c in self.series]) if self.series else None

    def to_dict(self):
        return {
            "mode": self.mode.value,
            "series": list(self.series),
            "p_ref": self.p_ref,
            "train_spec": None if self.train_spec is None else self.train_spec.to_dict(),
            "scenario_hash": self.scenario_hash,
            "pairs": [{"key": k, **v.to_dict()} for k, v in sorted(self.pairs.items())],
        }

    @classmethod
    def from_dict(cls, d):
        spec = d.get("train_spec")
        return cls(
            Mode(d["mode"]),
            {int(e["key"]): ModelPair.from_dict(e) for e in d["pairs"]},
            tuple(int(c) for c in d["series"]),
            float(d["p_ref"]),
            None if spec is None else TrainSpec.from_dict(spec),
            d.get("scenario_hash", ""),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def predict_shape(bank: InferenceBank, fingerprint, config=None):
    """Most probable shape and the class probabilities."""
    probs = mlp_forward(bank.pair_for(config).shape, fingerprint)
    return Shape(int(np.argmax(probs, axis=-1))), probs


def predict_position(bank: InferenceBank, fingerprint, config=None):
    """Position estimate clamped to [0, 1]."""
    return float(np.clip(mlp_forward(bank.pair_for(config).position, fingerprint), 0.0, 1.0))


def _train_pairs(data: Dataset, cols, spec: TrainSpec, hidden, seeds):
    """Shape and position models for the configs ``cols`` of a Mode B dataset (or the Mode A series).

    Training inputs are redrawn with fresh noise every epoch; validation uses
    the dataset's fixed noise draws.
    """
    tr, va = data.train_idx, data.val_idx
    x_tr = data.inputs(tr)[cols]
    x_va = data.inputs(va)[cols]
    augment = NoiseAugmentation(data.clean_inputs(tr)[cols], data.p_ref)
    d = x_tr.shape[2]
    shape_models, pos_models, shape_seeds, pos_seeds = [], [], [], []
    for i, s in enumerate(seeds):
        a, b, c, e = np.random.SeedSequence(int(s)).generate_state(4)
        shape_models.append(init_mlp((d, *hidden, N_SHAPES), "softmax", np.random.default_rng(a)).fit_standardization(x_tr[i]))
        pos_models.append(init_mlp((d, *hidden, 1), "identity", np.random.default_rng(b)).fit_standardization(x_tr[i]))
        shape_seeds.append(int(c))
        pos_seeds.append(int(e))
    m = len(seeds)
    ys_tr = np.broadcast_to(data.shape[tr], (m, len(tr)))
    ys_va = np.broadcast_to(data.shape[va], (m, len(va)))
    ps_tr = np.broadcast_to(data.p[tr], (m, len(tr)))
    ps_va = np.broadcast_to(data.p[va], (m, len(va)))
    rs = train_many(shape_models, None, ys_tr, spec, shape_seeds, x_va, ys_va, augment)
    rp = train_many(pos_models, None, ps_tr, spec, pos_seeds, x_va, ps_va, augment)
    return [ModelPair(s.model, p.model, {"shape": s.history, "position": p.history}) for s, p in zip(rs, rp)]


def model_seed(master, key):
    return int(np.random.SeedSequence([int(master), int(key)]).generate_state(1)[0])


def train_mode_a(engine, p_ref, n_series=8, n_positions=600, spec=TrainSpec(), hidden=(64, 64), scenario_hash=""):
    """Fixed random series of ``n_series`` configs and one model pair on its fingerprints."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0xA]))
    series = rng.integers(0, 2, size=(n_series, engine.n_pixels), dtype=np.uint8)
    data = build_dataset(engine, series, n_positions, SHAPES, spec.snr_range, 1, spec.seed, p_ref)
    pair = _train_pairs(data, slice(0, 1), spec, hidden, [model_seed(spec.seed, MODE_A_KEY)])[0]
    return InferenceBank(Mode.A, {0: pair}, tuple(config_to_int(c) for c in series), p_ref, spec, scenario_hash)


def train_mode_b(engine, p_ref, configs, n_positions=600, spec=TrainSpec(), hidden=(64, 64), scenario_hash="",
                 chunk=32):
    """One model pair per configuration, all trained on the same perturber samples."""
    keys = sorted({int(c) if isinstance(c, (int, np.integer)) else config_to_int(c) for c in configs})
    series = np.stack([config_from_int(k) for k in keys])
    data = build_dataset(engine, series, n_positions, SHAPES, spec.snr_range, 1, spec.seed, p_ref, per_config=True)
    pairs = {}
    for start in range(0, len(keys), chunk):
        part = keys[start : start + chunk]
        cols = slice(start, start + len(part))
        pairs.update(zip(part, _train_pairs(data, cols, spec, hidden, [model_seed(spec.seed, k) for k in part])))
    return InferenceBank(Mode.B, pairs, (), p_ref, spec, scenario_hash)


@dataclass
class Evaluation:
    accuracy: float
    localization_error: float
    n: int


def evaluate_bank(bank: InferenceBank, engine, n_positions, snr_db, seed, config=None):
    """Held-out accuracy and mean localization error (wavelengths) at a fixed SNR."""
    series = bank.series_configs if bank.mode is Mode.A else np.atleast_2d(np.asarray(config))
    data = build_dataset(engine, series, n_positions, SHAPES, (snr_db, snr_db), 1, seed, bank.p_ref)
    pair = bank.pair_for(None if bank.mode is Mode.A else series[0])
    probs = mlp_forward(pair.shape, data.x)
    p_hat = np.clip(mlp_forward(pair.position, data.x), 0.0, 1.0)
    acc = float(np.mean(np.argmax(probs, axis=1) == data.shape))
    err = float(np.mean(np.abs(p_hat - data.p)) * engine.trajectory_length)
    return Evaluation(acc, err, len(data))
