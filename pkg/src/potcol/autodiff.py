"""Reverse-mode differentiation over numpy arrays.

A :class:`Tape` records every operation executed while it is active; replaying
the record in reverse accumulates adjoints into the leaf tensors.  The op
vocabulary is deliberately small -- affine maps, elementwise activations,
products, sums and means -- exactly what the residual loss is built from.

All contractions go through ``np.einsum`` with its default (non-BLAS)
evaluation path so that results are bit-reproducible run to run.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np


class TapeError(RuntimeError):
    """Raised when a gradient is requested from an empty or invalid tape."""


_ACTIVE: list["Tape"] = []


def _current_tape() -> Optional["Tape"]:
    return _ACTIVE[-1] if _ACTIVE else None


class Tape:
    """Ordered record of operations; creation order is topological order."""

    def __init__(self) -> None:
        self._nodes: list[Tensor] = []

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc) -> None:
        popped = _ACTIVE.pop()
        assert popped is self

    def __len__(self) -> int:
        return len(self._nodes)

    def _record(self, node: "Tensor") -> None:
        self._nodes.append(node)

    def backward(self, out: "Tensor") -> None:
        """Accumulate d(out)/d(leaf) into every leaf's ``grad``."""
        if not self._nodes:
            raise TapeError("no forward pass recorded on tape")
        if out.value.ndim != 0:
            raise TapeError(f"backward target must be scalar, got shape {out.value.shape}")
        out.grad = np.ones_like(out.value)
        for node in reversed(self._nodes):
            if node.grad is None or node._vjp is None:
                continue
            node._vjp(node.grad)


class Tensor:
    """Array-valued node.  Leaves carry parameters; interior nodes carry vjps."""

    __slots__ = ("value", "grad", "_vjp")

    def __init__(self, value, vjp: Optional[Callable[[np.ndarray], None]] = None,
                 record: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self._vjp = vjp
        if record:
            tape = _current_tape()
            if tape is not None:
                tape._record(self)

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g: np.ndarray, own: bool = False) -> None:
        """Add an adjoint contribution; ``own=True`` donates a fresh array."""
        if self.grad is None:
            self.grad = g if own else g.copy()
        else:
            self.grad += g

    # operator sugar keeps the loss assembly readable
    def __add__(self, other):
        return add(self, _wrap(other))

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __neg__(self):
        return neg(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.value.shape})"


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else constant(x)


def constant(value) -> Tensor:
    """Wrap data that gradients never flow into."""
    return Tensor(value)


def leaf(value) -> Tensor:
    """Wrap a parameter array; ``grad`` is populated by ``Tape.backward``.

    Leaves are not recorded on the tape (they have no vjp); only the ops
    consuming them are, so an empty tape means no differentiable work ran.
    """
    return Tensor(value)


def _grad_enabled() -> bool:
    return _current_tape() is not None


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (the reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _make(value, parents: Sequence[Tensor], vjp_factory) -> Tensor:
    if not _grad_enabled():
        return Tensor(value)
    out = Tensor(value)

    def vjp(g: np.ndarray) -> None:
        vjp_factory(g)

    out._vjp = vjp
    tape = _current_tape()
    tape._record(out)
    return out


def make_op(value: np.ndarray, push: Callable[[np.ndarray], None]) -> Tensor:
    """Custom op node: ``push`` receives the adjoint and must accumulate into
    its parents itself.  For fused operations with hand-derived vjps."""
    return _make(value, (), push)


def _push_unbroadcast(t: Tensor, g: np.ndarray, fresh: bool) -> None:
    gb = _unbroadcast(g, t.value.shape)
    t.accumulate(gb, own=fresh or gb is not g)


def add(a: Tensor, b: Tensor) -> Tensor:
    def push(g):
        _push_unbroadcast(a, g, fresh=False)
        _push_unbroadcast(b, g, fresh=False)

    return _make(a.value + b.value, (a, b), push)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def push(g):
        _push_unbroadcast(a, g, fresh=False)
        _push_unbroadcast(b, -g, fresh=True)

    return _make(a.value - b.value, (a, b), push)


def mul(a: Tensor, b: Tensor) -> Tensor:
    av, bv = a.value, b.value

    def push(g):
        _push_unbroadcast(a, g * bv, fresh=True)
        _push_unbroadcast(b, g * av, fresh=True)

    return _make(av * bv, (a, b), push)


def neg(a: Tensor) -> Tensor:
    def push(g):
        a.accumulate(-g, own=True)

    return _make(-a.value, (a,), push)


def square(a: Tensor) -> Tensor:
    av = a.value

    def push(g):
        a.accumulate(2.0 * av * g, own=True)

    return _make(av * av, (a,), push)


def scale(a: Tensor, c: float) -> Tensor:
    def push(g):
        a.accumulate(c * g, own=True)

    return _make(c * a.value, (a,), push)


def elementwise(a: Tensor, value: np.ndarray, dvalue: np.ndarray) -> Tensor:
    """Node for a precomputed elementwise map of ``a`` with local slope ``dvalue``.

    Caller supplies both arrays (e.g. an activation and its next derivative),
    so one derivative-chain evaluation can feed several tape nodes.
    """
    def push(g):
        a.accumulate(g * dvalue, own=True)

    return _make(value, (a,), push)


def affine(y: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """``y @ w.T (+ b)`` over the last axis; works for values and jet stacks.

    ``y`` has shape (..., in), ``w`` has shape (out, in); the result is
    (..., out).  Bias broadcasts over all leading axes.  Contractions run as
    2D matmuls so any leading axes collapse into one BLAS call.
    """
    yv, wv = y.value, w.value
    y2 = np.ascontiguousarray(yv.reshape(-1, yv.shape[-1]))
    out_v = (y2 @ wv.T).reshape(yv.shape[:-1] + (wv.shape[0],))
    if b is not None:
        out_v += b.value

    def push(g):
        g2 = np.ascontiguousarray(g.reshape(-1, g.shape[-1]))
        y.accumulate((g2 @ wv).reshape(yv.shape), own=True)
        w.accumulate(g2.T @ y2, own=True)
        if b is not None:
            b.accumulate(g2.sum(axis=0), own=True)

    parents = (y, w) if b is None else (y, w, b)
    return _make(out_v, parents, push)


def sum_last(a: Tensor) -> Tensor:
    """Sum over the trailing axis."""
    def push(g):
        a.accumulate(np.broadcast_to(g[..., None], a.value.shape))

    return _make(a.value.sum(axis=-1), (a,), push)


def mean_all(a: Tensor) -> Tensor:
    """Scalar mean over every element (fixed index-order reduction)."""
    n = a.value.size

    def push(g):
        a.accumulate(np.full_like(a.value, g / n), own=True)

    return _make(a.value.mean(), (a,), push)


def squeeze_last(a: Tensor) -> Tensor:
    """Drop a trailing axis of length one."""
    if a.value.shape[-1] != 1:
        raise ValueError(f"cannot squeeze trailing axis of shape {a.value.shape}")

    def push(g):
        a.accumulate(g[..., None])

    return _make(a.value[..., 0], (a,), push)


def rowdot(a: Tensor, const: np.ndarray) -> Tensor:
    """Dot each trailing-axis row of ``a`` with the matching row of ``const``."""
    c = np.asarray(const, dtype=np.float64)

    def push(g):
        a.accumulate(g[..., None] * c, own=True)

    return _make((a.value * c).sum(axis=-1), (a,), push)
