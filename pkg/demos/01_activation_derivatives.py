"""Tour of the eight smooth activations and their derivative chains.

Every activation ships with closed-form first and second derivatives (the
residual of the field equation needs curvature, so kinks are not allowed).
This script tabulates sigma, sigma', sigma'' at a few points and checks the
analytic derivatives against central finite differences.
"""

import numpy as np

from potcol.net import ACTIVATION_NAMES, ActivationKind, activation_eval

points = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])

print(f"{'activation':16s} {'x':>6s} {'sigma':>10s} {'sigma_p':>10s} {'sigma_pp':>10s}")
for name in ACTIVATION_NAMES:
    kind = ActivationKind(name)
    s0, s1, s2 = activation_eval(kind, points)
    for x, a, b, c in zip(points, s0, s1, s2):
        print(f"{name:16s} {x:6.2f} {a:10.5f} {b:10.5f} {c:10.5f}")
    print()

# cross-check the analytic derivatives with central differences
h = 1e-6
grid = np.linspace(-5.0, 5.0, 401)
print("max |analytic - finite difference| over [-5, 5]:")
for name in ACTIVATION_NAMES:
    kind = ActivationKind(name)
    f = lambda t: activation_eval(kind, t)[0]
    _, s1, s2 = activation_eval(kind, grid)
    fd1 = (f(grid + h) - f(grid - h)) / (2 * h)
    fd2 = (f(grid + 1e-4) - 2 * f(grid) + f(grid - 1e-4)) / 1e-8
    print(f"  {name:16s} first: {np.abs(s1 - fd1).max():.2e}   "
          f"second: {np.abs(s2 - fd2).max():.2e}")
