"""Dense feedforward field approximator with exact input-derivative bundles.

The network maps a 3-vector to a scalar.  Alongside the value it can carry a
second-order jet -- the gradient and the three pure second derivatives -- by
propagating (y, dy/dx_d, d2y/dx_d2) through every layer.  Mixed partials never
enter: each coordinate direction propagates independently, so the bundle is
exact, not a Hessian approximation.

Parameter gradients of any scalar built from these quantities come from the
reverse-mode tape in :mod:`potcol.autodiff`; because the forward pass uses the
second derivative of the activation, the backward pass needs its third.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, TapeError, Tensor


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

ACTIVATION_NAMES = (
    "tanh",
    "sigmoid",
    "swish",
    "lecun_tanh",
    "bipolar_sigmoid",
    "mish",
    "arctan",
    "silu",
)


@dataclass(frozen=True)
class ActivationKind:
    """One of the eight supported smooth activations.

    ``beta`` is the slope parameter of ``swish`` (ignored elsewhere);
    ``silu`` is kept as a distinct kind even though it equals swish at
    beta = 1.
    """

    name: str
    beta: float = 1.0

    def __post_init__(self):
        if self.name not in ACTIVATION_NAMES:
            raise ValueError(f"unknown activation {self.name!r}; expected one of {ACTIVATION_NAMES}")
        if self.name == "swish" and not self.beta > 0:
            raise ValueError("swish beta must be positive")


def parse_activation(name: str, beta: float = 1.0) -> ActivationKind:
    """Case-insensitive activation lookup; accepts 'lecun-tanh' style spellings."""
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    compact = key.replace("_", "")
    for canonical in ACTIVATION_NAMES:
        if key == canonical or compact == canonical.replace("_", ""):
            return ActivationKind(canonical, beta)
    raise ValueError(f"unknown activation {name!r}; expected one of {ACTIVATION_NAMES}")


def _expit(x):
    # tanh form is stable for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _sigmoid_chain(x, orders=4):
    s = _expit(x)
    s1 = s * (1.0 - s)
    out = [s, s1]
    if orders > 2:
        out.append(s1 * (1.0 - 2.0 * s))
    if orders > 3:
        out.append(s1 * (1.0 - 6.0 * s + 6.0 * s * s))
    return out


def _tanh_chain(x, c=1.0, a=1.0, orders=4):
    t = np.tanh(a * x)
    t1 = 1.0 - t * t
    out = [c * t, c * a * t1]
    if orders > 2:
        out.append(c * a * a * (-2.0 * t * t1))
    if orders > 3:
        out.append(c * a**3 * (-2.0 * t1 * (1.0 - 3.0 * t * t)))
    return out


def _swish_chain(x, beta, orders=4):
    s = _sigmoid_chain(beta * x, orders)
    out = [x * s[0], s[0] + x * beta * s[1]]
    if orders > 2:
        out.append(2.0 * beta * s[1] + x * beta**2 * s[2])
    if orders > 3:
        out.append(3.0 * beta**2 * s[2] + x * beta**3 * s[3])
    return out


def _mish_chain(x, orders=4):
    s, s1, s2 = _sigmoid_chain(x, 3)
    u = np.tanh(np.logaddexp(0.0, x))
    w = 1.0 - u * u
    u1 = w * s
    out = [x * u, u + x * u1]
    if orders > 2:
        u2 = w * s1 - 2.0 * u * u1 * s
        out.append(2.0 * u1 + x * u2)
    if orders > 3:
        u3 = -2.0 * u1 * u1 * s - 2.0 * u * u2 * s - 4.0 * u * u1 * s1 + w * s2
        out.append(3.0 * u2 + x * u3)
    return out


def _arctan_chain(x, orders=4):
    xx = x * x
    d = 1.0 / (1.0 + xx)
    out = [np.arctan(x), d]
    if orders > 2:
        d2 = d * d
        out.append(-2.0 * x * d2)
    if orders > 3:
        out.append((6.0 * xx - 2.0) * (d2 * d))
    return out


def _derivative_chain(kind: ActivationKind, x: np.ndarray, orders: int = 4):
    """Value plus the first ``orders - 1`` derivatives, evaluated in one pass."""
    if kind.name == "tanh":
        return _tanh_chain(x, orders=orders)
    if kind.name == "sigmoid":
        return _sigmoid_chain(x, orders)
    if kind.name == "swish":
        return _swish_chain(x, kind.beta, orders)
    if kind.name == "lecun_tanh":
        return _tanh_chain(x, c=1.7159, a=2.0 / 3.0, orders=orders)
    if kind.name == "bipolar_sigmoid":
        return _tanh_chain(x, c=1.0, a=0.5, orders=orders)
    if kind.name == "mish":
        return _mish_chain(x, orders)
    if kind.name == "arctan":
        return _arctan_chain(x, orders)
    if kind.name == "silu":
        return _swish_chain(x, 1.0, orders)
    raise AssertionError(kind.name)


def activation_eval(kind: ActivationKind, x):
    """Return (sigma, sigma', sigma'') of ``kind`` at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    f0, f1, f2 = _derivative_chain(kind, x, orders=3)
    if x.ndim == 0:
        return float(f0), float(f1), float(f2)
    return f0, f1, f2


# ---------------------------------------------------------------------------
# network parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture plus the seed that fully determines initialization."""

    hidden_widths: tuple[int, ...]
    activation: ActivationKind
    seed: int = 0
    input_dim: int = 3
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if not self.hidden_widths:
            raise ValueError("hidden_widths must be non-empty")
        if any(w <= 0 for w in self.hidden_widths):
            raise ValueError(f"hidden widths must be positive, got {self.hidden_widths}")
        if self.input_dim <= 0 or self.output_dim <= 0:
            raise ValueError("input_dim and output_dim must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """(out, in) shape of every weight matrix, input to output."""
        widths = (self.input_dim, *self.hidden_widths, self.output_dim)
        return [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]


class NetworkParams:
    """Per-layer weight matrices and bias vectors, with the activation baked in.

    Hidden layers apply the activation; the output layer is affine so the
    field can take values of any magnitude.
    """

    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray],
                 activation: ActivationKind):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.activation = activation
        if len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must pair up layer by layer")
        prev = None
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: W {w.shape} and b {b.shape} do not pair")
            if prev is not None and w.shape[1] != prev:
                raise ValueError(f"layer {i}: expects {w.shape[1]} inputs, previous produced {prev}")
            prev = w.shape[0]
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i}: non-finite parameter entries")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def to_vector(self) -> np.ndarray:
        """Flatten as [W0 row-major, b0, W1, b1, ...]."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def with_vector(self, theta: np.ndarray) -> "NetworkParams":
        """New params with the same shapes, values taken from ``theta``."""
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected vector of length {self.n_params}, got {theta.shape}")
        weights, biases, k = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(theta[k:k + w.size].reshape(w.shape).copy())
            k += w.size
            biases.append(theta[k:k + b.size].copy())
            k += b.size
        return NetworkParams(weights, biases, self.activation)

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights],
                             [b.copy() for b in self.biases], self.activation)


def init_params(spec: NetworkSpec) -> NetworkParams:
    """Glorot-uniform weights (zero-mean, fan-scaled), zero biases, seeded."""
    rng = np.random.default_rng(spec.seed)
    weights, biases = [], []
    for out_dim, in_dim in spec.layer_dims:
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        weights.append(rng.uniform(-limit, limit, size=(out_dim, in_dim)))
        biases.append(np.zeros(out_dim))
    return NetworkParams(weights, biases, spec.activation)


# ---------------------------------------------------------------------------
# forward evaluation and jets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JetTriple:
    """Field value with gradient and pure second derivatives per coordinate."""

    value: np.ndarray     # (...,)
    grad: np.ndarray      # (..., 3)
    lap_diag: np.ndarray  # (..., 3)

    def __post_init__(self):
        for name in ("value", "grad", "lap_diag"):
            arr = getattr(self, name)
            if not np.isfinite(arr).all():
                raise ValueError(f"non-finite entries in JetTriple.{name}")

    @property
    def laplacian(self) -> np.ndarray:
        return self.lap_diag.sum(axis=-1)


class TapedParams:
    """Leaf tensors for every parameter; gradients land here after backward."""

    def __init__(self, params: NetworkParams):
        self.weights = [ad.leaf(w) for w in params.weights]
        self.biases = [ad.leaf(b) for b in params.biases]
        self.activation = params.activation

    def grad_vector(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            gw = w.grad if w.grad is not None else np.zeros_like(w.value)
            gb = b.grad if b.grad is not None else np.zeros_like(b.value)
            parts.append(gw.ravel())
            parts.append(gb)
        return np.concatenate(parts)


ParamsLike = Union[NetworkParams, TapedParams]


def _as_tensors(params: ParamsLike):
    if isinstance(params, TapedParams):
        return params.weights, params.biases, params.activation
    return ([ad.constant(w) for w in params.weights],
            [ad.constant(b) for b in params.biases],
            params.activation)


def _activation_node(a: Tensor, kind: ActivationKind) -> Tensor:
    """Value-only activation node (slope kept for the backward pass)."""
    s0, s1 = _derivative_chain(kind, a.value, orders=2)
    return ad.elementwise(a, s0, s1)


def _jet_activation(a: Tensor, ja: Tensor, ha: Optional[Tensor], kind: ActivationKind):
    """Fused activation stage of the jet propagation.

    Values: y = s0, J = s1 JA, H = s2 JA^2 + s1 HA (per direction), with
    s_k the k-th activation derivative at the pre-activation.  The adjoint of
    H needs s3, which is why every activation carries a third derivative.
    With ``ha`` None only the first-order bundle (y, J) is propagated.
    """
    chain = _derivative_chain(kind, a.value, orders=4 if ha is not None else 3)
    s1, s2 = chain[1], chain[2]
    jav = ja.value
    s1m = s1[:, None, :]
    j_val = s1m * jav

    def push_y(g):
        a.accumulate(g * s1, own=True)

    def push_j(g):
        a.accumulate((g * jav).sum(axis=1) * s2, own=True)
        ja.accumulate(g * s1m, own=True)

    y_out = ad.make_op(chain[0], push_y)
    j_out = ad.make_op(j_val, push_j)
    if ha is None:
        return y_out, j_out, None

    s3, hav = chain[3], ha.value
    s2m = s2[:, None, :]
    h_val = s2m * (jav * jav) + s1m * hav

    def push_h(g):
        gj = g * jav
        a.accumulate((gj * jav).sum(axis=1) * s3 + (g * hav).sum(axis=1) * s2, own=True)
        ja.accumulate(2.0 * s2m * gj, own=True)
        ha.accumulate(g * s1m, own=True)

    return y_out, j_out, ad.make_op(h_val, push_h)


def propagate_values(params: ParamsLike, x: np.ndarray) -> Tensor:
    """Taped value-only pass over a batch of points (n, 3) -> (n,)."""
    weights, biases, kind = _as_tensors(params)
    y = ad.constant(x)
    for w, b in zip(weights[:-1], biases[:-1]):
        y = _activation_node(ad.affine(y, w, b), kind)
    out = ad.affine(y, weights[-1], biases[-1])
    return ad.squeeze_last(out)


def propagate_jets(params: ParamsLike, x: np.ndarray, second_order: bool = True):
    """Taped pass carrying (value, gradient[, pure second derivatives]).

    For an affine stage a = W y + b the directional derivatives map linearly;
    for y = sigma(a) they follow the scalar chain rule per direction:
    y' = sigma'(a) a' and y'' = sigma''(a) a'^2 + sigma'(a) a''.

    Returns tensors of shapes (n,), (n, 3), (n, 3); the last is None when
    ``second_order`` is off (gradient-only consumers skip a third of the work).
    """
    weights, biases, kind = _as_tensors(params)
    n, dim = x.shape
    y = ad.constant(x)
    jac = ad.constant(np.broadcast_to(np.eye(dim), (n, dim, dim)).copy())
    hes = ad.constant(np.zeros((n, dim, dim))) if second_order else None
    for w, b in zip(weights[:-1], biases[:-1]):
        a = ad.affine(y, w, b)
        ja = ad.affine(jac, w)
        ha = ad.affine(hes, w) if second_order else None
        y, jac, hes = _jet_activation(a, ja, ha, kind)
    w_out, b_out = weights[-1], biases[-1]
    value = ad.squeeze_last(ad.affine(y, w_out, b_out))
    grad = ad.squeeze_last(ad.affine(jac, w_out))
    lap = ad.squeeze_last(ad.affine(hes, w_out)) if second_order else None
    return value, grad, lap


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim != 2:
        raise ValueError(f"expected point (3,) or batch (n, 3), got shape {x.shape}")
    return x, False


def forward(params: NetworkParams, x) -> Union[float, np.ndarray]:
    """Field value at one point (3,) or a batch (n, 3)."""
    batch, single = _as_batch(x)
    value = propagate_values(params, batch).value
    return float(value[0]) if single else value


def forward_jet(params: NetworkParams, x) -> JetTriple:
    """Value, gradient and pure second derivatives at one point or a batch."""
    batch, single = _as_batch(x)
    value, grad, lap = propagate_jets(params, batch)
    if single:
        return JetTriple(value.value[0], grad.value[0], lap.value[0])
    return JetTriple(value.value, grad.value, lap.value)


class NetworkField:
    """Scalar-field view of trained parameters (value / gradient / jets)."""

    def __init__(self, params: NetworkParams):
        self.params = params

    def __call__(self, x):
        return forward(self.params, x)

    def jet(self, x) -> JetTriple:
        return forward_jet(self.params, x)


# ---------------------------------------------------------------------------
# parameter gradients
# ---------------------------------------------------------------------------


def loss_grad(params: NetworkParams,
              loss_eval: Callable[[TapedParams], Tensor]) -> tuple[float, np.ndarray]:
    """Evaluate a taped scalar loss and return (loss, dloss/dtheta).

    ``loss_eval`` receives the parameters as tape leaves and must build its
    result from taped operations (propagation, squares, sums, means).  An
    empty tape means no forward pass was recorded and is an error.
    """
    with Tape() as tape:
        taped = TapedParams(params)
        out = loss_eval(taped)
        if not isinstance(out, Tensor):
            raise TapeError("loss_eval must return a taped Tensor scalar")
        if len(tape) == 0:
            raise TapeError("no forward pass recorded on tape")
        tape.backward(out)
    return float(out.value), taped.grad_vector()
