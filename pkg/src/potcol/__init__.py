"""Collocation solver for steady potential problems in graded 3D media.

Submodules
----------
net       dense network, exact jets, reverse-mode parameter gradients
sampling  quasi-random and random collocation point generators
physics   conductivity models, residuals, fluxes, loss assembly
optim     Adam, limited-memory BFGS and the combined training schedule
bench     closed-form reference solutions, error metrics, case definitions
cli       configuration-driven runs (train / sample / evaluate / bench)
"""

# The solver spends its time in many small dense matmuls; multithreaded BLAS
# only adds dispatch overhead there and makes reduction order thread-dependent.
# One BLAS thread is both faster and bit-reproducible.
import numpy as _np  # noqa: F401  (loads the BLAS before limiting it)

try:
    import threadpoolctl as _threadpoolctl

    # keep the controller alive: limits are restored when it is collected
    _BLAS_SINGLE_THREAD = _threadpoolctl.threadpool_limits(limits=1, user_api="blas")
except Exception:  # pragma: no cover - optional dependency
    _BLAS_SINGLE_THREAD = None

from .net import (
    ActivationKind,
    JetTriple,
    NetworkField,
    NetworkParams,
    NetworkSpec,
    activation_eval,
    forward,
    forward_jet,
    init_params,
    loss_grad,
    parse_activation,
)

__all__ = [
    "ActivationKind",
    "JetTriple",
    "NetworkField",
    "NetworkParams",
    "NetworkSpec",
    "activation_eval",
    "forward",
    "forward_jet",
    "init_params",
    "loss_grad",
    "parse_activation",
]

__version__ = "0.1.0"
