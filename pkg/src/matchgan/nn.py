"""Small feed-forward networks with exact analytic gradients.

The same architecture serves both adversarial roles: the label generator
maps a feature vector to a soft label in (0, 1); the discriminator maps a
feature vector concatenated with a scalar label channel to a realness
score in (0, 1). Hidden layers are rectified, the output is logistic and
clamped away from {0, 1} so no loss evaluation can be non-finite.

Backpropagation is written out by hand (no autodiff): the generator's
gradients flow through the discriminator's input while the discriminator
stays frozen, and vice versa.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

OUTPUT_EPS = 1e-7
CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class MlpModel:
    """Weights and biases of one rectifier network with logistic output."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if self.layer_dims[-1] != 1:
            raise ValueError("output dimension must be 1")
        expected = list(zip(self.layer_dims[1:], self.layer_dims[:-1]))
        for ell, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != expected[ell] or b.shape != (expected[ell][0],):
                raise ValueError(f"layer {ell} parameter shapes disagree with layer_dims")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_dims=self.layer_dims,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_mlp(layer_dims, rng: np.random.Generator) -> MlpModel:
    """Uniform fan-in initialization with a zeroed output layer.

    Hidden layers draw from +-1/sqrt(fan_in). The output layer starts at
    zero so the network opens at exactly 0.5 everywhere: adversarial
    training then starts from a neutral labeling instead of a random one,
    which removes an initialization lottery over which class each input
    region first commits to.
    """
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    weights[-1][:] = 0.0
    biases[-1][:] = 0.0
    return MlpModel(layer_dims=tuple(layer_dims), weights=weights, biases=biases)


def zero_mlp(layer_dims) -> MlpModel:
    """All-zero parameters; the network outputs exactly 0.5 everywhere."""
    weights = [
        np.zeros((fan_out, fan_in))
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:])
    ]
    biases = [np.zeros(fan_out) for fan_out in layer_dims[1:]]
    return MlpModel(layer_dims=tuple(layer_dims), weights=weights, biases=biases)


def _forward_cached(model: MlpModel, X: np.ndarray):
    """Batch forward pass keeping every layer input for backpropagation."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ValueError(
            f"input shape {X.shape} incompatible with input dim {model.input_dim}"
        )
    activations = [X]
    n_layers = len(model.weights)
    a = X
    for ell in range(n_layers - 1):
        z = a @ model.weights[ell].T + model.biases[ell]
        a = np.maximum(z, 0.0)
        activations.append(a)
    z_out = (a @ model.weights[-1].T + model.biases[-1])[:, 0]
    out = np.clip(_sigmoid(z_out), OUTPUT_EPS, 1.0 - OUTPUT_EPS)
    return out, activations


def _sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic: splits on sign so exp never sees +inf."""
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward_batch(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Deterministic feed-forward values in (0, 1), one per row of X."""
    out, _ = _forward_cached(model, X)
    return out


def forward(model: MlpModel, x: np.ndarray) -> float:
    """Feed-forward value for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("forward expects a single flat input vector")
    return float(forward_batch(model, x[None, :])[0])


def backprop(model: MlpModel, out: np.ndarray, activations, dloss_dout: np.ndarray):
    """Gradients of a scalar loss w.r.t. every parameter, plus the input.

    dloss_dout holds the loss derivative w.r.t. the clamped logistic
    output, one entry per batch row. Returns (grads, dinput) where grads
    is a list of (dW, db) per layer.
    """
    delta = dloss_dout * out * (1.0 - out)  # through the logistic output
    delta = delta[:, None]
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.weights)
    for ell in range(len(model.weights) - 1, -1, -1):
        a_prev = activations[ell]
        grads[ell] = (delta.T @ a_prev, delta.sum(axis=0))
        dprev = delta @ model.weights[ell]
        if ell > 0:
            dprev = dprev * (activations[ell] > 0.0)  # rectifier mask
        delta = dprev
    return grads, delta


def generator_loss(d_on_fake: np.ndarray) -> float:
    """Mean of log(1 - d) over the discriminator's scores on generated pairs."""
    d = np.asarray(d_on_fake, dtype=np.float64)
    return float(np.mean(np.log(1.0 - d)))


def discriminator_loss(
    d_on_fake: np.ndarray, d_on_real: np.ndarray, real_weight: float
) -> float:
    """Objective the discriminator maximizes: mean log(1 - d_fake) plus
    real_weight times mean log(d_real)."""
    fake = np.asarray(d_on_fake, dtype=np.float64)
    real = np.asarray(d_on_real, dtype=np.float64)
    return float(np.mean(np.log(1.0 - fake)) + real_weight * np.mean(np.log(real)))


def generator_backward(gen: MlpModel, disc: MlpModel, X: np.ndarray):
    """Loss and generator gradients of mean log(1 - D(x, G(x))).

    The gradient flows through the discriminator's label input channel
    with the discriminator's own parameters held fixed; only generator
    gradients are produced.
    """
    X = np.asarray(X, dtype=np.float64)
    g_out, g_acts = _forward_cached(gen, X)
    fake_in = np.hstack([X, g_out[:, None]])
    d_out, d_acts = _forward_cached(disc, fake_in)
    n = d_out.shape[0]
    loss = generator_loss(d_out)
    dloss_dd = -1.0 / (n * (1.0 - d_out))
    _, dinput = backprop(disc, d_out, d_acts, dloss_dd)
    dloss_dg = dinput[:, -1]  # derivative w.r.t. the generated label channel
    g_grads, _ = backprop(gen, g_out, g_acts, dloss_dg)
    return loss, g_grads


def discriminator_backward(
    disc: MlpModel,
    fake_inputs: np.ndarray,
    real_inputs: np.ndarray,
    real_weight: float,
):
    """Objective value and descent gradients for the discriminator update.

    fake_inputs carry the generator's soft labels as their last column,
    treated as constants (the generator is frozen). The returned gradients
    are those of the negated objective, so an optimizer step ascends it.
    """
    d_fake, fake_acts = _forward_cached(disc, fake_inputs)
    d_real, real_acts = _forward_cached(disc, real_inputs)
    n_f, n_r = d_fake.shape[0], d_real.shape[0]
    objective = discriminator_loss(d_fake, d_real, real_weight)
    # minimized loss is -objective
    dloss_dfake = 1.0 / (n_f * (1.0 - d_fake))
    dloss_dreal = -real_weight / (n_r * d_real)
    grads_f, _ = backprop(disc, d_fake, fake_acts, dloss_dfake)
    grads_r, _ = backprop(disc, d_real, real_acts, dloss_dreal)
    grads = [(gf[0] + gr[0], gf[1] + gr[1]) for gf, gr in zip(grads_f, grads_r)]
    return objective, grads


def binary_log_loss(outputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean binary cross-entropy of clamped outputs against 0/1 targets."""
    s = np.asarray(outputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    return float(-np.mean(y * np.log(s) + (1.0 - y) * np.log(1.0 - s)))


def classifier_backward(model: MlpModel, X: np.ndarray, targets: np.ndarray):
    """Loss and gradients of binary cross-entropy for the plain classifier."""
    out, acts = _forward_cached(model, X)
    y = np.asarray(targets, dtype=np.float64)
    n = out.shape[0]
    loss = binary_log_loss(out, y)
    dloss_dout = (out - y) / (out * (1.0 - out) * n)
    grads, _ = backprop(model, out, acts, dloss_dout)
    return loss, grads


@dataclass
class OptState:
    """Optimizer state: adaptive-moment accumulators or plain SGD."""

    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    moment1: list = field(default_factory=list)
    moment2: list = field(default_factory=list)

    @classmethod
    def for_model(cls, model: MlpModel, kind: str = "adam", learning_rate: float = 1e-3):
        if kind not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer kind {kind!r}")
        state = cls(kind=kind, learning_rate=learning_rate)
        if kind == "adam":
            state.moment1 = [
                (np.zeros_like(w), np.zeros_like(b))
                for w, b in zip(model.weights, model.biases)
            ]
            state.moment2 = [
                (np.zeros_like(w), np.zeros_like(b))
                for w, b in zip(model.weights, model.biases)
            ]
        return state


def opt_step(model: MlpModel, grads, state: OptState) -> tuple[MlpModel, OptState]:
    """One deterministic optimizer update in place.

    Adam uses bias-corrected first/second moments:
        m <- b1 m + (1-b1) g        v <- b2 v + (1-b2) g^2
        p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
    """
    state.step_count += 1
    t = state.step_count
    lr = state.learning_rate
    for ell, (dw, db) in enumerate(grads):
        if state.kind == "sgd":
            model.weights[ell] -= lr * dw
            model.biases[ell] -= lr * db
            continue
        for which, grad, param in ((0, dw, model.weights[ell]), (1, db, model.biases[ell])):
            m = state.moment1[ell][which]
            v = state.moment2[ell][which]
            m *= state.beta1
            m += (1.0 - state.beta1) * grad
            v *= state.beta2
            v += (1.0 - state.beta2) * grad * grad
            m_hat = m / (1.0 - state.beta1**t)
            v_hat = v / (1.0 - state.beta2**t)
            param -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return model, state


@dataclass
class DiscreteJointDistribution:
    """Two discrete distributions over shared (x, y) support points."""

    points: list
    p_real: np.ndarray
    p_generated: np.ndarray

    def __post_init__(self):
        self.p_real = np.asarray(self.p_real, dtype=np.float64)
        self.p_generated = np.asarray(self.p_generated, dtype=np.float64)
        for p in (self.p_real, self.p_generated):
            if np.any(p < 0.0):
                raise ValueError("probabilities must be non-negative")
            if abs(float(p.sum()) - 1.0) > 1e-9:
                raise ValueError("each distribution must sum to 1")


def _ternary_max(objective, lo: float, hi: float, iters: int = 200) -> float:
    for _ in range(iters):
        third = (hi - lo) / 3.0
        a, b = lo + third, hi - third
        if objective(a) < objective(b):
            lo = a
        else:
            hi = b
    return 0.5 * (lo + hi)


def optimal_discriminator_check(
    dist: DiscreteJointDistribution, real_weight: float = 1.0
) -> list[tuple[float, float]]:
    """Closed-form vs. numeric pointwise optimum of the discriminator objective.

    At each support point the objective w*p_real*log(d) + p_gen*log(1-d)
    is concave in d; its maximizer has the closed form
    w*p_real / (w*p_real + p_gen). The numeric value comes from ternary
    search, independent of that formula. Points with both probabilities
    zero are skipped.
    """
    out: list[tuple[float, float]] = []
    for p_d, p_g in zip(dist.p_real, dist.p_generated):
        if p_d == 0.0 and p_g == 0.0:
            continue
        closed = real_weight * p_d / (real_weight * p_d + p_g)

        def pointwise(d, p_d=p_d, p_g=p_g):
            return real_weight * p_d * np.log(d) + p_g * np.log(1.0 - d)

        numeric = _ternary_max(pointwise, 1e-9, 1.0 - 1e-9)
        out.append((float(closed), float(numeric)))
    return out


def save_model(
    path: str | Path,
    model: MlpModel,
    opt_state: OptState | None = None,
    seed: int | None = None,
    kind: str = "",
) -> None:
    """Write a checkpoint: layer dims, parameters, optimizer state, seed."""
    payload: dict[str, np.ndarray] = {
        "format_version": np.array(CHECKPOINT_FORMAT_VERSION),
        "layer_dims": np.array(model.layer_dims),
        "kind": np.array(kind),
        "seed": np.array(-1 if seed is None else seed),
    }
    for ell, (w, b) in enumerate(zip(model.weights, model.biases)):
        payload[f"W{ell}"] = w
        payload[f"b{ell}"] = b
    if opt_state is not None and opt_state.kind == "adam":
        payload["opt_step"] = np.array(opt_state.step_count)
        payload["opt_lr"] = np.array(opt_state.learning_rate)
        for ell in range(len(model.weights)):
            payload[f"m1W{ell}"], payload[f"m1b{ell}"] = opt_state.moment1[ell]
            payload[f"m2W{ell}"], payload[f"m2b{ell}"] = opt_state.moment2[ell]
    np.savez(path, **payload)


def load_model(path: str | Path):
    """Read a checkpoint; returns (model, opt_state_or_None, meta)."""
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version}")
        dims = tuple(int(d) for d in data["layer_dims"])
        weights = [data[f"W{ell}"] for ell in range(len(dims) - 1)]
        biases = [data[f"b{ell}"] for ell in range(len(dims) - 1)]
        model = MlpModel(layer_dims=dims, weights=weights, biases=biases)
        opt_state = None
        if "opt_step" in data:
            opt_state = OptState.for_model(
                model, kind="adam", learning_rate=float(data["opt_lr"])
            )
            opt_state.step_count = int(data["opt_step"])
            opt_state.moment1 = [
                (data[f"m1W{ell}"], data[f"m1b{ell}"]) for ell in range(len(weights))
            ]
            opt_state.moment2 = [
                (data[f"m2W{ell}"], data[f"m2b{ell}"]) for ell in range(len(weights))
            ]
        meta = {
            "kind": str(data["kind"]),
            "seed": int(data["seed"]),
            "format_version": version,
        }
    return model, opt_state, meta
