"""Benchmark cases: geometries, material laws, closed-form solutions, metrics.

Each case binds one geometry, one conductivity law, one boundary-condition
set and one reference solution that annihilates the residual operator.  The
cylinder case uses the purely radial log profile: with conductivity graded in
z and a z-independent field, the graded term drops out of the equation, so
the classic homogeneous annulus solution is exact here too.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .net import JetTriple, NetworkField, NetworkParams
from .physics import (
    Exponential,
    MaterialModel,
    Parabolic,
    Poly3D,
    ScalarField,
    Trigonometric,
    check_positive_conductivity,
    flux,
)
from .sampling import AnnularCylinder, Geometry, UnitCube, contains


class CaseId(enum.Enum):
    CASE1_PARABOLIC = "case1_parabolic"
    CASE1_EXPONENTIAL = "case1_exponential"
    CASE1_TRIGONOMETRIC = "case1_trigonometric"
    CASE2_POLY3D = "case2_poly3d"
    CASE3_CYLINDER = "case3_cylinder"


def parse_case(name: Union[str, CaseId]) -> CaseId:
    if isinstance(name, CaseId):
        return name
    key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
    for case in CaseId:
        if key == case.value or key == case.value.replace("_", ""):
            return case
    raise ValueError(f"unknown case {name!r}; expected one of "
                     f"{[c.value for c in CaseId]}")


_CYLINDER = AnnularCylinder(r_inner=0.3, r_outer=0.5, height=0.1)


def case_geometry(case: Union[str, CaseId]) -> Geometry:
    case = parse_case(case)
    if case is CaseId.CASE3_CYLINDER:
        return _CYLINDER
    return UnitCube()


def case_material(case: Union[str, CaseId]) -> MaterialModel:
    case = parse_case(case)
    if case is CaseId.CASE1_PARABOLIC:
        model: MaterialModel = Parabolic(5.0, 1.0, 2.0, axis="z")
    elif case is CaseId.CASE1_EXPONENTIAL:
        model = Exponential(5.0, 1.0, 0.0, beta=1.0, axis="z")      # k = 5 e^{2z}
    elif case is CaseId.CASE1_TRIGONOMETRIC:
        model = Trigonometric(5.0, 1.0, 2.0, beta=1.0, axis="z")
    elif case is CaseId.CASE2_POLY3D:
        model = Poly3D((5.0, 0.2, 0.4, 0.6, 0.1, 0.2, 0.3, 0.7))
    else:
        model = Exponential(5.0, 1.0, 0.0, beta=1.5, axis="z")      # k = 5 e^{3z}
    check_positive_conductivity(model, case_geometry(case))
    return model


# ---------------------------------------------------------------------------
# closed-form solutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _AxisProfileSolution:
    """Field depending on one coordinate only (here always z)."""

    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    d2phi: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return self.phi(pts[:, 2])

    def jet(self, x) -> JetTriple:
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        z = pts[:, 2]
        n = len(pts)
        grad = np.zeros((n, 3))
        lap = np.zeros((n, 3))
        grad[:, 2] = self.dphi(z)
        lap[:, 2] = self.d2phi(z)
        return JetTriple(self.phi(z), grad, lap)


class _TrilinearRatioSolution:
    """phi = xyz / g with the same trilinear g whose square is the conductivity.

    Both numerator and denominator have vanishing pure second derivatives, so
    phi_,ii = -2 p_,i g_,i / g^2 + 2 p g_,i^2 / g^3.
    """

    def __init__(self, model: Poly3D):
        self.model = model

    def __call__(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        g, _, _, _ = self.model.form(pts[:, 0], pts[:, 1], pts[:, 2])
        return pts[:, 0] * pts[:, 1] * pts[:, 2] / g

    def jet(self, x) -> JetTriple:
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        xx, yy, zz = pts[:, 0], pts[:, 1], pts[:, 2]
        g, gx, gy, gz = self.model.form(xx, yy, zz)
        p = xx * yy * zz
        dp = np.column_stack([yy * zz, xx * zz, xx * yy])
        dg = np.column_stack([gx, gy, gz])
        value = p / g
        grad = dp / g[:, None] - (p / (g * g))[:, None] * dg
        lap = (-2.0 * dp * dg / (g * g)[:, None]
               + 2.0 * (p / (g**3))[:, None] * dg * dg)
        return JetTriple(value, grad, lap)


class _RadialLogSolution:
    """phi = (phi_out - phi_in) ln(r / r_in) / ln(r_out / r_in) + phi_in."""

    def __init__(self, r_in: float, r_out: float, phi_in: float, phi_out: float):
        self.r_in = r_in
        self.scale = (phi_out - phi_in) / np.log(r_out / r_in)
        self.offset = phi_in

    def __call__(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        r = np.hypot(pts[:, 0], pts[:, 1])
        return self.offset + self.scale * np.log(r / self.r_in)

    def jet(self, x) -> JetTriple:
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        xx, yy = pts[:, 0], pts[:, 1]
        r2 = xx * xx + yy * yy
        value = self.offset + self.scale * 0.5 * np.log(r2 / self.r_in**2)
        grad = np.zeros_like(pts)
        grad[:, 0] = self.scale * xx / r2
        grad[:, 1] = self.scale * yy / r2
        lap = np.zeros_like(pts)
        lap[:, 0] = self.scale * (yy * yy - xx * xx) / (r2 * r2)
        lap[:, 1] = self.scale * (xx * xx - yy * yy) / (r2 * r2)
        return JetTriple(value, grad, lap)


def analytic_solution(case: Union[str, CaseId]) -> ScalarField:
    """The case's closed-form reference field (value + exact jets)."""
    case = parse_case(case)
    if case is CaseId.CASE1_PARABOLIC:
        return _AxisProfileSolution(
            phi=lambda z: 300.0 * z / (1.0 + 2.0 * z),
            dphi=lambda z: 300.0 / (1.0 + 2.0 * z) ** 2,
            d2phi=lambda z: -1200.0 / (1.0 + 2.0 * z) ** 3,
        )
    if case is CaseId.CASE1_EXPONENTIAL:
        den = 1.0 - np.exp(-2.0)
        return _AxisProfileSolution(
            phi=lambda z: 100.0 * (1.0 - np.exp(-2.0 * z)) / den,
            dphi=lambda z: 200.0 * np.exp(-2.0 * z) / den,
            d2phi=lambda z: -400.0 * np.exp(-2.0 * z) / den,
        )
    if case is CaseId.CASE1_TRIGONOMETRIC:
        amp = 100.0 * (1.0 / np.tan(1.0) + 2.0)    # cot(1), radians
        den = lambda z: np.cos(z) + 2.0 * np.sin(z)
        return _AxisProfileSolution(
            phi=lambda z: amp * np.sin(z) / den(z),
            dphi=lambda z: amp / den(z) ** 2,
            d2phi=lambda z: 2.0 * amp * (np.sin(z) - 2.0 * np.cos(z)) / den(z) ** 3,
        )
    if case is CaseId.CASE2_POLY3D:
        return _TrilinearRatioSolution(case_material(case))
    return _RadialLogSolution(_CYLINDER.r_inner, _CYLINDER.r_outer, 0.0, 100.0)


def analytic_phi(case: Union[str, CaseId], x) -> JetTriple:
    """Reference value and jets at points inside the case geometry."""
    case = parse_case(case)
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts2 = np.atleast_2d(pts)
    if not contains(case_geometry(case), pts2, strict=False).all():
        raise ValueError(f"point(s) outside the {case.value} geometry")
    jet = analytic_solution(case).jet(pts2)
    if single:
        return JetTriple(jet.value[0], jet.grad[0], jet.lap_diag[0])
    return jet


# ---------------------------------------------------------------------------
# evaluation grids, metrics and tables
# ---------------------------------------------------------------------------

_CYL_THETA_DEFAULT = 48
_CYL_Z_DEFAULT = 5


@dataclass(frozen=True)
class ErrorMetric:
    """Norm-difference relative error plus discrete-L2 and max pointwise error."""

    relative_error: float   # | ||pred|| - ||exact|| | / ||exact||
    l2_relative: float      # ||pred - exact|| / ||exact||
    max_abs: float          # max_i |pred_i - exact_i|


def error_metric(pred: np.ndarray, exact: np.ndarray) -> ErrorMetric:
    norm_exact = float(np.linalg.norm(exact))
    if norm_exact == 0.0:
        raise ValueError("reference field has zero norm on the grid")
    return ErrorMetric(
        relative_error=abs(float(np.linalg.norm(pred)) - norm_exact) / norm_exact,
        l2_relative=float(np.linalg.norm(pred - exact)) / norm_exact,
        max_abs=float(np.abs(pred - exact).max()),
    )


@dataclass
class FieldTable:
    """Gridded field comparison; points ordered first-axis-fastest (VTK order)."""

    dims: tuple[int, int, int]
    points: np.ndarray
    normals: np.ndarray
    phi_pred: np.ndarray
    phi_exact: np.ndarray
    q_pred: np.ndarray
    q_exact: np.ndarray

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.phi_pred - self.phi_exact)


def _cell_centers(n: int, length: float) -> np.ndarray:
    # half-cell inset keeps flux normals unambiguous at the walls
    return (np.arange(n) + 0.5) * (length / n)


def evaluation_grid(case: CaseId, resolution: int):
    """(dims, points, canonical normals) for the case's evaluation lattice."""
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2 per axis")
    geom = case_geometry(case)
    if isinstance(geom, UnitCube):
        t = _cell_centers(resolution, geom.edge)
        xx, yy, zz = np.meshgrid(t, t, t, indexing="ij")
        pts = np.column_stack([xx.ravel(order="F"), yy.ravel(order="F"),
                               zz.ravel(order="F")])
        normals = np.tile([0.0, 0.0, 1.0], (len(pts), 1))
        return (resolution, resolution, resolution), pts, normals
    r = geom.r_inner + _cell_centers(resolution, geom.r_outer - geom.r_inner)
    theta = _cell_centers(_CYL_THETA_DEFAULT, 2.0 * np.pi)
    z = _cell_centers(_CYL_Z_DEFAULT, geom.height)
    rr, th, zz = np.meshgrid(r, theta, z, indexing="ij")
    rr = rr.ravel(order="F")
    th = th.ravel(order="F")
    zz = zz.ravel(order="F")
    pts = np.column_stack([rr * np.cos(th), rr * np.sin(th), zz])
    normals = np.column_stack([np.cos(th), np.sin(th), np.zeros_like(th)])
    return (resolution, _CYL_THETA_DEFAULT, _CYL_Z_DEFAULT), pts, normals


def _as_field(source: Union[NetworkParams, ScalarField]) -> ScalarField:
    if isinstance(source, NetworkParams):
        return NetworkField(source)
    return source


def evaluate_case(case: Union[str, CaseId], source: Union[NetworkParams, ScalarField],
                  grid: int = 21) -> tuple[ErrorMetric, FieldTable]:
    """Compare a field against the case oracle on a regular evaluation grid.

    Fluxes use the case's canonical direction (z for the cube cases, radial
    for the cylinder).
    """
    case = parse_case(case)
    field = _as_field(source)
    oracle = analytic_solution(case)
    model = case_material(case)
    dims, pts, normals = evaluation_grid(case, grid)
    phi_pred = np.asarray(field.jet(pts).value)
    phi_exact = np.asarray(oracle.jet(pts).value)
    q_pred = flux(field, model, pts, normals)
    q_exact = flux(oracle, model, pts, normals)
    table = FieldTable(dims=dims, points=pts, normals=normals,
                       phi_pred=phi_pred, phi_exact=phi_exact,
                       q_pred=q_pred, q_exact=q_exact)
    return error_metric(phi_pred, phi_exact), table


@dataclass(frozen=True)
class Line:
    """Segment for profile sampling; points are placed at cell centers."""

    start: tuple[float, float, float]
    end: tuple[float, float, float]

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        t = (np.arange(n) + 0.5) / n
        a = np.asarray(self.start, dtype=np.float64)
        b = np.asarray(self.end, dtype=np.float64)
        pts = a + t[:, None] * (b - a)
        return np.linalg.norm(b - a) * t, pts


def default_profile_line(case: Union[str, CaseId]) -> Line:
    """Center vertical line for the cube cases, mid-height radius for the cylinder."""
    case = parse_case(case)
    if case is CaseId.CASE3_CYLINDER:
        h = _CYLINDER.height / 2.0
        return Line((_CYLINDER.r_inner, 0.0, h), (_CYLINDER.r_outer, 0.0, h))
    return Line((0.5, 0.5, 0.0), (0.5, 0.5, 1.0))


@dataclass
class FluxProfile:
    s: np.ndarray
    points: np.ndarray
    q_pred: np.ndarray
    q_oracle: np.ndarray


def flux_profile(case: Union[str, CaseId], source: Union[NetworkParams, ScalarField],
                 line: Union[Line, None] = None, n_samples: int = 101) -> FluxProfile:
    """Flux along a line, against the oracle, using the case's canonical normal."""
    case = parse_case(case)
    field = _as_field(source)
    model = case_material(case)
    oracle = analytic_solution(case)
    line = line or default_profile_line(case)
    s, pts = line.sample(n_samples)
    if not contains(case_geometry(case), pts, strict=False).all():
        raise ValueError("profile line leaves the case geometry")
    if case is CaseId.CASE3_CYLINDER:
        r = np.hypot(pts[:, 0], pts[:, 1])
        normals = np.column_stack([pts[:, 0] / r, pts[:, 1] / r, np.zeros(len(pts))])
    else:
        normals = np.tile([0.0, 0.0, 1.0], (len(pts), 1))
    return FluxProfile(s=s, points=pts,
                       q_pred=flux(field, model, pts, normals),
                       q_oracle=flux(oracle, model, pts, normals))
