"""Minimizers over the flattened parameter vector and the training schedule.

Training runs full-batch Adam for a fixed number of steps and then hands the
iterate to limited-memory BFGS (two-loop recursion, strong Wolfe line search
with cubic interpolation).  The first-order phase gets the iterate into a
basin quickly; the quasi-Newton phase drives the residual loss much lower
than either method manages alone on the same budget.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .net import NetworkParams
from .physics import CollocationSet, LossReport, MaterialModel, assemble_loss, loss_and_grad


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iters: int = 1000

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


class AdamState:
    """First and second moment accumulators plus the step counter."""

    def __init__(self, n: int):
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0


def adam_step(state: AdamState, grad: np.ndarray, cfg: AdamConfig,
              theta: np.ndarray) -> np.ndarray:
    """One bias-corrected update; returns the new iterate (state advances)."""
    if not np.isfinite(grad).all():
        bad = int(np.count_nonzero(~np.isfinite(grad)))
        raise FloatingPointError(f"adam_step received {bad} non-finite gradient entries")
    state.t += 1
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad
    m_hat = state.m / (1.0 - cfg.beta1**state.t)
    v_hat = state.v / (1.0 - cfg.beta2**state.t)
    return theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


# ---------------------------------------------------------------------------
# L-BFGS
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LbfgsConfig:
    memory: int = 10
    max_iters: int = 2000
    gradient_tolerance: float = 1e-9
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be at least 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not (0 < self.wolfe_c1 < self.wolfe_c2 < 1):
            raise ValueError("need 0 < c1 < c2 < 1 for the Wolfe conditions")


@dataclass
class LbfgsResult:
    theta: np.ndarray
    fval: float
    grad_norm: float
    n_iters: int
    converged: bool
    line_search_failed: bool
    history: list[tuple[int, float, float]] = field(default_factory=list)


_MAX_LINE_EVALS = 40
_CURVATURE_GUARD = 1e-12


def _two_loop(grad: np.ndarray, pairs) -> np.ndarray:
    """Apply the implicit inverse-Hessian estimate to ``grad``."""
    q = grad.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        q -= a * y
        alphas.append(a)
    if pairs:
        s, y, _ = pairs[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic matching values and slopes at a and b."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    sq = d1 * d1 - da * db
    if sq < 0.0:
        return None
    d2 = np.sign(b - a) * np.sqrt(sq)
    denom = db - da + 2.0 * d2
    if denom == 0.0:
        return None
    out = b - (b - a) * (db + d2 - d1) / denom
    return out if np.isfinite(out) else None


class _LineSearch:
    """Strong Wolfe search along ``direction`` with a hard evaluation budget."""

    def __init__(self, f_and_grad, theta, f0, g0, direction, c1, c2):
        self.f_and_grad = f_and_grad
        self.theta = theta
        self.direction = direction
        self.f0 = f0
        self.d0 = float(np.dot(g0, direction))
        self.c1, self.c2 = c1, c2
        self.evals = 0
        self.best = None  # (alpha, f, g) with the lowest finite f seen

    def _phi(self, alpha):
        self.evals += 1
        f, g = self.f_and_grad(self.theta + alpha * self.direction)
        if np.isfinite(f) and (self.best is None or f < self.best[1]):
            self.best = (alpha, f, g)
        return f, g

    def _armijo(self, alpha, f):
        return f <= self.f0 + self.c1 * alpha * self.d0

    def run(self, alpha0):
        prev_alpha, prev_f, prev_d = 0.0, self.f0, self.d0
        alpha = alpha0
        first = True
        while self.evals < _MAX_LINE_EVALS:
            f, g = self._phi(alpha)
            d = float(np.dot(g, self.direction)) if np.isfinite(f) else np.inf
            if not np.isfinite(f) or not self._armijo(alpha, f) or (f >= prev_f and not first):
                return self._zoom(prev_alpha, prev_f, prev_d, alpha, f, d)
            if abs(d) <= -self.c2 * self.d0:
                return alpha, f, g, True
            if d >= 0.0:
                return self._zoom(alpha, f, d, prev_alpha, prev_f, prev_d)
            prev_alpha, prev_f, prev_d = alpha, f, d
            alpha *= 2.0
            first = False
        return None

    def _zoom(self, lo, f_lo, d_lo, hi, f_hi, d_hi):
        while self.evals < _MAX_LINE_EVALS:
            alpha = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi) if np.isfinite(f_hi) else None
            width = abs(hi - lo)
            margin = 0.1 * width
            if alpha is None or not (min(lo, hi) + margin <= alpha <= max(lo, hi) - margin):
                alpha = 0.5 * (lo + hi)
            f, g = self._phi(alpha)
            d = float(np.dot(g, self.direction)) if np.isfinite(f) else np.inf
            if not np.isfinite(f) or not self._armijo(alpha, f) or f >= f_lo:
                hi, f_hi, d_hi = alpha, f, d
            else:
                if abs(d) <= -self.c2 * self.d0:
                    return alpha, f, g, True
                if d * (hi - lo) >= 0.0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = alpha, f, d
            if width <= 1e-16 * max(1.0, abs(lo)):
                break
        return None


def lbfgs_minimize(f_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
                   theta0: np.ndarray, cfg: LbfgsConfig,
                   callback: Optional[Callable] = None) -> LbfgsResult:
    """Minimize a deterministic objective from ``theta0``.

    ``callback(k, theta, f, g)`` fires after each accepted iteration.  A line
    search that exhausts its 40-trial budget moves to the best point it saw
    (if that point improves) and ends the run with ``line_search_failed``.
    """
    theta = np.asarray(theta0, dtype=np.float64).copy()
    f, g = f_and_grad(theta)
    pairs: deque = deque(maxlen=cfg.memory)
    history = [(0, f, float(np.abs(g).max()))]
    result = LbfgsResult(theta=theta, fval=f, grad_norm=float(np.abs(g).max()),
                         n_iters=0, converged=False, line_search_failed=False,
                         history=history)
    if not np.isfinite(f) or not np.isfinite(g).all():
        result.line_search_failed = True
        return result
    for k in range(1, cfg.max_iters + 1):
        if result.grad_norm <= cfg.gradient_tolerance:
            result.converged = True
            break
        direction = -_two_loop(g, list(pairs))
        if np.dot(direction, g) >= 0.0:      # stale curvature; fall back to steepest descent
            pairs.clear()
            direction = -g
        search = _LineSearch(f_and_grad, theta, f, g, direction, cfg.wolfe_c1, cfg.wolfe_c2)
        alpha0 = 1.0 if pairs or k > 1 else min(1.0, 1.0 / max(np.abs(g).sum(), 1.0))
        outcome = search.run(alpha0)
        if outcome is None:
            result.line_search_failed = True
            if search.best is not None and search.best[1] < f:
                alpha, f, g = search.best
                theta = theta + alpha * direction
                result.theta, result.fval = theta, f
                result.grad_norm = float(np.abs(g).max())
                result.n_iters = k
                history.append((k, f, result.grad_norm))
                if callback is not None:
                    callback(k, theta, f, g)
            break
        alpha, f_new, g_new, _ = outcome
        theta_new = theta + alpha * direction
        s = theta_new - theta
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > _CURVATURE_GUARD * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        theta, f, g = theta_new, f_new, g_new
        result.theta, result.fval = theta, f
        result.grad_norm = float(np.abs(g).max())
        result.n_iters = k
        history.append((k, f, result.grad_norm))
        if callback is not None:
            callback(k, theta, f, g)
    else:
        result.converged = result.grad_norm <= cfg.gradient_tolerance
    return result


# ---------------------------------------------------------------------------
# training schedule
# ---------------------------------------------------------------------------


@dataclass
class HistoryEntry:
    iteration: int
    phase: str                      # "adam" or "lbfgs"
    report: LossReport
    wall_ms: float                  # elapsed since training started
    theta: Optional[np.ndarray] = None


@dataclass
class TrainHistory:
    entries: list[HistoryEntry] = field(default_factory=list)
    diverged: bool = False
    lbfgs_converged: bool = False
    line_search_failed: bool = False

    @property
    def final_report(self) -> LossReport:
        return self.entries[-1].report

    def phase_counts(self) -> dict[str, int]:
        counts = {"adam": 0, "lbfgs": 0}
        for e in self.entries:
            counts[e.phase] += 1
        return counts


def train(params: NetworkParams, model: MaterialModel, cset: CollocationSet,
          adam_cfg: AdamConfig = AdamConfig(), lbfgs_cfg: LbfgsConfig = LbfgsConfig(),
          snapshot_every: Optional[int] = None) -> tuple[NetworkParams, TrainHistory]:
    """Adam for ``adam_cfg.max_iters`` full-batch steps, then L-BFGS.

    Every iteration's loss decomposition is recorded.  A non-finite loss stops
    training with the last finite iterate preserved and ``history.diverged``
    set.
    """
    theta = params.to_vector()
    history = TrainHistory()
    start = time.perf_counter()

    cache: dict = {}

    def f_and_grad(th: np.ndarray) -> tuple[float, np.ndarray]:
        report, grad = loss_and_grad(params.with_vector(th), model, cset)
        cache["theta"], cache["report"] = th.copy(), report
        return report.total, grad

    def record(phase: str, report: LossReport, th: np.ndarray) -> None:
        idx = len(history.entries) + 1
        keep = snapshot_every is not None and (idx % snapshot_every == 0)
        history.entries.append(HistoryEntry(
            iteration=idx, phase=phase, report=report,
            wall_ms=(time.perf_counter() - start) * 1e3,
            theta=th.copy() if keep else None))

    state = AdamState(len(theta))
    last_good = theta
    for _ in range(adam_cfg.max_iters):
        total, grad = f_and_grad(theta)
        if not np.isfinite(total) or not np.isfinite(grad).all():
            history.diverged = True
            return params.with_vector(last_good), history
        record("adam", cache["report"], theta)
        last_good = theta
        theta = adam_step(state, grad, adam_cfg, theta)

    if lbfgs_cfg.max_iters > 0:
        def callback(k, th, f, g):
            if np.array_equal(cache.get("theta"), th):
                report = cache["report"]
            else:
                report = assemble_loss(params.with_vector(th), model, cset)
            record("lbfgs", report, th)

        result = lbfgs_minimize(f_and_grad, theta, lbfgs_cfg, callback)
        if not np.isfinite(result.fval):
            history.diverged = True
        else:
            theta = result.theta
        history.lbfgs_converged = result.converged
        history.line_search_failed = result.line_search_failed

    return params.with_vector(theta), history
