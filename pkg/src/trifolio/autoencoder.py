"""A small fully-connected autoencoder trained from scratch with numpy.

The network maps N scaled prices to a narrower code and back:

    code = relu(W1 x + b1)          (encoder)
    xhat = W2 code + b2             (decoder, linear output)

It trains by plain backpropagation of the batch-mean squared error through
Adam updates.  After training, the mean reconstruction per stock over the
training window becomes that stock's unnormalized portfolio weight:
negatives clamp to zero and the vector is normalized to sum 1.

All randomness (weight init, per-epoch shuffling) flows from the config
seed through two dedicated PCG64 streams, so training is bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .market_data import PricePanel
from .mvp import Portfolio


def _frozen_array(value, dtype=float) -> np.ndarray:
    arr = np.array(value, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AutoencoderConfig:
    """Architecture and training hyperparameters.

    The code layer must be strictly narrower than the input.  Defaults
    follow common Adam practice; epochs and batch size default to the
    values used throughout this project's runs.
    """

    input_dim: int
    code_dim: int = 5
    epochs: int = 500
    batch_size: int = 10
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.code_dim < 1 or self.code_dim >= self.input_dim:
            raise ConfigError(
                f"code_dim must be in [1, input_dim); got {self.code_dim} for input {self.input_dim}"
            )
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be at least 1")
        if self.learning_rate <= 0 or not (0 <= self.beta1 < 1) or not (0 <= self.beta2 < 1):
            raise DataError("invalid Adam hyperparameters")


@dataclass(frozen=True)
class AutoencoderModel:
    """Network parameters. w1 is (code_dim, input_dim); w2 is (input_dim, code_dim)."""

    w1: np.ndarray = field(repr=False)
    b1: np.ndarray = field(repr=False)
    w2: np.ndarray = field(repr=False)
    b2: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            arr = _frozen_array(getattr(self, name))
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"non-finite parameter in {name}")
            object.__setattr__(self, name, arr)
        code_dim, input_dim = self.w1.shape
        if self.b1.shape != (code_dim,):
            raise DataError("b1 shape does not match w1")
        if self.w2.shape != (input_dim, code_dim):
            raise DataError("w2 shape does not match w1 transposed")
        if self.b2.shape != (input_dim,):
            raise DataError("b2 shape does not match w2")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def code_dim(self) -> int:
        return self.w1.shape[0]


@dataclass(frozen=True)
class Gradients:
    """Loss gradients, shaped exactly like the model parameters."""

    w1: np.ndarray = field(repr=False)
    b1: np.ndarray = field(repr=False)
    w2: np.ndarray = field(repr=False)
    b2: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class AdamState:
    """First (m) and second (v) moment accumulators per parameter."""

    m_w1: np.ndarray
    v_w1: np.ndarray
    m_b1: np.ndarray
    v_b1: np.ndarray
    m_w2: np.ndarray
    v_w2: np.ndarray
    m_b2: np.ndarray
    v_b2: np.ndarray

    @staticmethod
    def zeros(config: AutoencoderConfig) -> "AdamState":
        n, c = config.input_dim, config.code_dim
        return AdamState(
            m_w1=np.zeros((c, n)),
            v_w1=np.zeros((c, n)),
            m_b1=np.zeros(c),
            v_b1=np.zeros(c),
            m_w2=np.zeros((n, c)),
            v_w2=np.zeros((n, c)),
            m_b2=np.zeros(n),
            v_b2=np.zeros(n),
        )


@dataclass(frozen=True)
class TrainingTrace:
    """Mean per-element MSE for each epoch, in training order."""

    losses: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "losses", tuple(float(v) for v in self.losses))
        for v in self.losses:
            if not math.isfinite(v) or v < 0.0:
                raise NumericError(f"invalid loss value {v!r}")


def scale_prices(panel: PricePanel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Min-max scale each stock's prices to [0, 1] over the panel's rows.

    Returns (scaled matrix, per-stock minima, per-stock maxima).  The minima
    and maxima come from this panel only, so scaling a training window never
    peeks at test data.  A constant-price stock has no scale and errors.
    """
    mins = panel.prices.min(axis=0)
    maxs = panel.prices.max(axis=0)
    for ticker, lo, hi in zip(panel.tickers, mins, maxs):
        if hi <= lo:
            raise DataError(f"constant-price stock {ticker!r} cannot be scaled")
    scaled = (panel.prices - mins) / (maxs - mins)
    return scaled, mins, maxs


def init_model(config: AutoencoderConfig) -> AutoencoderModel:
    """Glorot-uniform weights, zero biases, from the init stream of ``seed``.

    Each layer draws uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out));
    the encoder matrix is drawn before the decoder matrix.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((config.seed, 0))))
    n, c = config.input_dim, config.code_dim
    s = math.sqrt(6.0 / (n + c))  # same fan sum for both layers
    w1 = rng.uniform(-s, s, size=(c, n))
    w2 = rng.uniform(-s, s, size=(n, c))
    return AutoencoderModel(w1=w1, b1=np.zeros(c), w2=w2, b2=np.zeros(n))


def forward(model: AutoencoderModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Encode then decode ``x`` (a single row or a batch of rows).

    Returns (code, reconstruction) with the same leading shape as ``x``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.input_dim:
        raise DataError(
            f"input has {x.shape[-1]} features, model expects {model.input_dim}"
        )
    z1 = x @ model.w1.T + model.b1
    code = np.maximum(z1, 0.0)
    reconstruction = code @ model.w2.T + model.b2
    return code, reconstruction


def mse_loss(x: np.ndarray, reconstruction: np.ndarray) -> float:
    """Mean over every component (and batch row) of the squared error."""
    x = np.asarray(x, dtype=float)
    reconstruction = np.asarray(reconstruction, dtype=float)
    if x.shape != reconstruction.shape:
        raise DataError("input and reconstruction shapes differ")
    return float(np.mean((x - reconstruction) ** 2))


def backward(model: AutoencoderModel, batch: np.ndarray) -> Gradients:
    """Analytic gradients of the batch-mean MSE for every parameter.

    The ReLU passes gradient only where its pre-activation is strictly
    positive (subgradient 0 at the kink).
    """
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    if x.shape[0] == 0:
        raise DataError("empty batch")
    if x.shape[1] != model.input_dim:
        raise DataError("batch width does not match model input")

    z1 = x @ model.w1.T + model.b1
    code = np.maximum(z1, 0.0)
    xhat = code @ model.w2.T + model.b2

    # d loss / d xhat for loss = mean over B*N elements
    d_xhat = 2.0 * (xhat - x) / x.size
    d_w2 = d_xhat.T @ code
    d_b2 = d_xhat.sum(axis=0)
    d_code = d_xhat @ model.w2
    d_z1 = d_code * (z1 > 0.0)
    d_w1 = d_z1.T @ x
    d_b1 = d_z1.sum(axis=0)
    return Gradients(w1=d_w1, b1=d_b1, w2=d_w2, b2=d_b2)


def adam_step(
    model: AutoencoderModel,
    grads: Gradients,
    state: AdamState,
    t: int,
    config: AutoencoderConfig,
) -> tuple[AutoencoderModel, AdamState]:
    """One bias-corrected Adam update. Pure: same inputs, same outputs.

    ``t`` is the 1-based global step count used for bias correction.
    """
    if t < 1:
        raise DataError("Adam step index starts at 1")
    b1c = 1.0 - config.beta1**t
    b2c = 1.0 - config.beta2**t

    def update(p, g, m, v):
        m_new = config.beta1 * m + (1.0 - config.beta1) * g
        v_new = config.beta2 * v + (1.0 - config.beta2) * g * g
        m_hat = m_new / b1c
        v_hat = v_new / b2c
        p_new = p - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
        return p_new, m_new, v_new

    w1, m_w1, v_w1 = update(model.w1, grads.w1, state.m_w1, state.v_w1)
    b1, m_b1, v_b1 = update(model.b1, grads.b1, state.m_b1, state.v_b1)
    w2, m_w2, v_w2 = update(model.w2, grads.w2, state.m_w2, state.v_w2)
    b2, m_b2, v_b2 = update(model.b2, grads.b2, state.m_b2, state.v_b2)

    new_model = AutoencoderModel(w1=w1, b1=b1, w2=w2, b2=b2)
    new_state = AdamState(
        m_w1=m_w1, v_w1=v_w1, m_b1=m_b1, v_b1=v_b1,
        m_w2=m_w2, v_w2=v_w2, m_b2=m_b2, v_b2=v_b2,
    )
    return new_model, new_state


def train(panel: PricePanel, config: AutoencoderConfig) -> tuple[AutoencoderModel, TrainingTrace]:
    """Scale the panel and run the full mini-batch training loop.

    Rows are shuffled once per epoch by a dedicated PCG64 stream (seed,
    stream 1), then consumed in batches of ``batch_size`` (the last batch of
    an epoch may be smaller).  The recorded epoch loss is the exact mean
    per-element squared error across the epoch's batches, each measured
    before its update.
    """
    if config.input_dim != panel.n_stocks:
        raise DataError("config input_dim does not match the panel")
    scaled, _, _ = scale_prices(panel)
    n_rows = scaled.shape[0]

    model = init_model(config)
    state = AdamState.zeros(config)
    shuffler = np.random.Generator(np.random.PCG64(np.random.SeedSequence((config.seed, 1))))

    losses: list[float] = []
    t = 0
    for _ in range(config.epochs):
        perm = shuffler.permutation(n_rows)
        epoch_sq_sum = 0.0
        for start in range(0, n_rows, config.batch_size):
            batch = scaled[perm[start : start + config.batch_size]]
            _, xhat = forward(model, batch)
            epoch_sq_sum += float(np.sum((batch - xhat) ** 2))
            grads = backward(model, batch)
            t += 1
            model, state = adam_step(model, grads, state, t, config)
        losses.append(epoch_sq_sum / scaled.size)
    return model, TrainingTrace(losses=tuple(losses))


def extract_weights(
    model: AutoencoderModel, scaled: np.ndarray, tickers: tuple[str, ...]
) -> Portfolio:
    """Turn mean reconstructions into portfolio weights.

    Each stock's raw score is the mean of its reconstructed column over all
    training rows; negative scores clamp to zero and the rest normalize to
    sum 1.  A model reconstructing everything non-positive has no usable
    signal and errors.
    """
    scaled = np.atleast_2d(np.asarray(scaled, dtype=float))
    if scaled.shape[1] != model.input_dim or len(tickers) != model.input_dim:
        raise DataError("scaled matrix and tickers must match the model width")
    _, xhat = forward(model, scaled)
    raw = xhat.mean(axis=0)
    clamped = np.maximum(raw, 0.0)
    total = float(clamped.sum())
    if total <= 0.0:
        raise NumericError("all reconstructed features non-positive; no weights")
    return Portfolio(method="enc", tickers=tuple(tickers), weights=clamped / total)


MODEL_HEADER_PREFIX = "# autoencoder"


def save_model(model: AutoencoderModel) -> str:
    """Serialize to the flat text format: a dims header, then layer,row,col,value."""
    lines = [f"{MODEL_HEADER_PREFIX} input_dim={model.input_dim} code_dim={model.code_dim}"]
    lines.append("layer,row,col,value")
    for name in ("w1", "b1", "w2", "b2"):
        arr = np.atleast_2d(getattr(model, name))
        if getattr(model, name).ndim == 1:
            arr = arr.T  # biases serialize as a column: (row, 0)
        for r in range(arr.shape[0]):
            for c in range(arr.shape[1]):
                lines.append(f"{name},{r},{c},{float(arr[r, c])!r}")
    return "\n".join(lines) + "\n"


def load_model(text: str) -> AutoencoderModel:
    """Parse :func:`save_model` output back into an identical model."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(MODEL_HEADER_PREFIX):
        raise DataError("missing model header")
    header = dict(tok.split("=") for tok in lines[0].split() if "=" in tok)
    try:
        n = int(header["input_dim"])
        c = int(header["code_dim"])
    except (KeyError, ValueError):
        raise DataError("malformed model header") from None
    shapes = {"w1": (c, n), "b1": (c, 1), "w2": (n, c), "b2": (n, 1)}
    arrays = {name: np.zeros(shape) for name, shape in shapes.items()}
    seen = {name: 0 for name in shapes}
    for ln in lines[1:]:
        if ln == "layer,row,col,value":
            continue
        parts = ln.split(",")
        if len(parts) != 4:
            raise DataError(f"malformed model line {ln!r}")
        name, row, col, value = parts
        if name not in shapes:
            raise DataError(f"unknown layer {name!r}")
        r, k = int(row), int(col)
        if not (0 <= r < shapes[name][0] and 0 <= k < shapes[name][1]):
            raise DataError(f"out-of-range index in {ln!r}")
        arrays[name][r, k] = float(value)
        seen[name] += 1
    for name, shape in shapes.items():
        if seen[name] != shape[0] * shape[1]:
            raise DataError(f"layer {name!r} has missing entries")
    return AutoencoderModel(
        w1=arrays["w1"],
        b1=arrays["b1"][:, 0],
        w2=arrays["w2"],
        b2=arrays["b2"][:, 0],
    )
