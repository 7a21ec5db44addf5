"""Collocation point generation: seven samplers over two geometries.

The quasi-random families (Halton, Hammersley, Sobol, Korobov lattice) are
fully determined by (n, dim); the remaining kinds (Latin hypercube, Monte
Carlo, uniform random) are seeded.  ``sample_domain`` maps unit-cube points
into a geometry and samples every boundary face with a 2D sequence of the
same kind, attaching exact outward unit normals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

SAMPLER_NAMES = (
    "halton",
    "hammersley",
    "sobol",
    "korobov",
    "latin_hypercube",
    "monte_carlo",
    "random",
)

_SEEDED = ("latin_hypercube", "monte_carlo", "random")

_ALIASES = {
    "lhs": "latin_hypercube",
    "latinhypercube": "latin_hypercube",
    "montecarlo": "monte_carlo",
    "uniform_random": "random",
    "uniformrandom": "random",
    "korobov_lattice": "korobov",
    "korobovlattice": "korobov",
}


@dataclass(frozen=True)
class SamplerKind:
    """A point-generation scheme; ``seed`` matters only for the seeded kinds,
    ``generator`` only for the Korobov lattice."""

    name: str
    seed: int = 0
    generator: int = 17

    def __post_init__(self):
        if self.name not in SAMPLER_NAMES:
            raise ValueError(f"unknown sampler {self.name!r}; expected one of {SAMPLER_NAMES}")
        if self.generator < 1:
            raise ValueError("korobov generator must be a positive integer")

    @property
    def is_seeded(self) -> bool:
        return self.name in _SEEDED


def parse_sampler(name: str, seed: int = 0, generator: int = 17) -> SamplerKind:
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    key = _ALIASES.get(key, key)
    key = _ALIASES.get(key.replace("_", ""), key)
    if key not in SAMPLER_NAMES:
        raise ValueError(f"unknown sampler {name!r}; expected one of {SAMPLER_NAMES}")
    return SamplerKind(key, seed=seed, generator=generator)


# ---------------------------------------------------------------------------
# unit-cube sequences
# ---------------------------------------------------------------------------

_PRIME_BASES = (2, 3, 5)


def _radical_inverse(indices: np.ndarray, base: int) -> np.ndarray:
    """Digit-reversal of each index about the radix point."""
    result = np.zeros(len(indices))
    remaining = indices.astype(np.int64).copy()
    scale = 1.0
    while remaining.max(initial=0) > 0:
        scale /= base
        result += scale * (remaining % base)
        remaining //= base
    return result


def _halton(n: int, dim: int) -> np.ndarray:
    idx = np.arange(1, n + 1)
    return np.column_stack([_radical_inverse(idx, b) for b in _PRIME_BASES[:dim]])


def _hammersley(n: int, dim: int) -> np.ndarray:
    """First coordinate is the regular grid i/n; the rest are radical inverses."""
    idx = np.arange(n)
    cols = [idx / n]
    cols += [_radical_inverse(idx, b) for b in _PRIME_BASES[:dim - 1]]
    return np.column_stack(cols)


# Direction-number seeds for the first three coordinates: primitive polynomial
# degree, coefficient bits, initial odd integers (Joe-Kuo table).
_SOBOL_DIMS = (
    (1, 0, (1,)),        # x: van der Corput base 2
    (1, 0, (1,)),        # y: poly x + 1
    (2, 1, (1, 3)),      # z: poly x^2 + x + 1
)
_SOBOL_BITS = 52


def _sobol_direction_integers(dim_index: int, count: int) -> np.ndarray:
    degree, coef_bits, m_init = _SOBOL_DIMS[dim_index]
    m = list(m_init)
    if dim_index == 0:
        m = [1] * count
    else:
        while len(m) < count:
            k = len(m)
            new = m[k - degree] ^ (m[k - degree] << degree)
            for j in range(1, degree):
                if (coef_bits >> (degree - 1 - j)) & 1:
                    new ^= m[k - j] << j
            m.append(new)
    return np.array([m[k] << (_SOBOL_BITS - k - 1) for k in range(count)], dtype=np.uint64)


def _sobol(n: int, dim: int) -> np.ndarray:
    """Gray-code Sobol points, origin skipped (indices 1..n of the sequence)."""
    nbits = max(1, (n + 1).bit_length())
    v = np.stack([_sobol_direction_integers(d, nbits) for d in range(dim)])
    out = np.empty((n, dim))
    state = np.zeros(dim, dtype=np.uint64)
    for i in range(1, n + 1):
        ctz = (i & -i).bit_length() - 1
        state ^= v[:, ctz]
        out[i - 1] = state
    return out / float(1 << _SOBOL_BITS)


def _korobov(n: int, dim: int, a: int) -> np.ndarray:
    if math.gcd(a, n) != 1:
        raise ValueError(f"korobov generator {a} is not coprime with n={n}")
    gen = np.array([pow(a, j, n) for j in range(dim)], dtype=np.int64)
    idx = np.arange(n, dtype=np.int64)
    return ((idx[:, None] * gen) % n) / n


def _latin_hypercube(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((n, dim))
    for d in range(dim):
        perm = rng.permutation(n)
        out[:, d] = (perm + rng.random(n)) / n
    return out


def _rng_for(kind: SamplerKind, salt: Optional[int]) -> np.random.Generator:
    entropy = kind.seed if salt is None else [kind.seed, salt]
    return np.random.default_rng(entropy)


def _unit_points(kind: SamplerKind, n: int, dim: int, salt: Optional[int]) -> np.ndarray:
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if kind.name == "halton":
        return _halton(n, dim)
    if kind.name == "hammersley":
        return _hammersley(n, dim)
    if kind.name == "sobol":
        return _sobol(n, dim)
    if kind.name == "korobov":
        return _korobov(n, dim, kind.generator)
    if kind.name == "latin_hypercube":
        return _latin_hypercube(n, dim, _rng_for(kind, salt))
    # monte_carlo and random: both plain uniform, kept as distinct kinds
    return _rng_for(kind, salt).random((n, dim))


def unit_points(kind: SamplerKind, n: int, dim: int) -> np.ndarray:
    """n points of the requested scheme in [0, 1)^dim, shape (n, dim)."""
    return _unit_points(kind, n, dim, salt=None)


# ---------------------------------------------------------------------------
# geometries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitCube:
    edge: float = 1.0

    def __post_init__(self):
        if not self.edge > 0:
            raise ValueError("cube edge must be positive")


@dataclass(frozen=True)
class AnnularCylinder:
    r_inner: float
    r_outer: float
    height: float

    def __post_init__(self):
        if not (0 < self.r_inner < self.r_outer):
            raise ValueError("need 0 < r_inner < r_outer")
        if not self.height > 0:
            raise ValueError("cylinder height must be positive")


Geometry = Union[UnitCube, AnnularCylinder]


def contains(geom: Geometry, points: np.ndarray, strict: bool = True) -> np.ndarray:
    """Boolean mask of points inside ``geom`` (strictly, or closed)."""
    points = np.atleast_2d(points)
    if isinstance(geom, UnitCube):
        lo, hi = 0.0, geom.edge
        if strict:
            return ((points > lo) & (points < hi)).all(axis=1)
        return ((points >= lo) & (points <= hi)).all(axis=1)
    r = np.hypot(points[:, 0], points[:, 1])
    z = points[:, 2]
    if strict:
        return (r > geom.r_inner) & (r < geom.r_outer) & (z > 0) & (z < geom.height)
    tol = 1e-12
    return ((r >= geom.r_inner - tol) & (r <= geom.r_outer + tol)
            & (z >= -tol) & (z <= geom.height + tol))


# ---------------------------------------------------------------------------
# collocation sets
# ---------------------------------------------------------------------------


def _empty_points() -> np.ndarray:
    return np.zeros((0, 3))


@dataclass
class CollocationSet:
    """Interior points plus boundary points with prescribed data.

    ``sample_domain`` emits all boundary samples on the Neumann side with
    placeholder value 0 and the geometric outward normal; case-specific
    boundary attachment re-sorts them into Dirichlet/Neumann with real data.
    """

    geometry: Geometry
    interior: np.ndarray
    dirichlet_points: np.ndarray = field(default_factory=_empty_points)
    dirichlet_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    neumann_points: np.ndarray = field(default_factory=_empty_points)
    neumann_normals: np.ndarray = field(default_factory=_empty_points)
    neumann_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.interior = np.asarray(self.interior, dtype=np.float64)
        if self.interior.ndim != 2 or self.interior.shape[1] != 3:
            raise ValueError("interior points must have shape (n, 3)")
        inside = contains(self.geometry, self.interior, strict=True)
        if not inside.all():
            raise ValueError(f"{np.count_nonzero(~inside)} interior points "
                             "are not strictly inside the geometry")
        if len(self.neumann_points):
            norms = np.linalg.norm(self.neumann_normals, axis=1)
            if np.abs(norms - 1.0).max() > 1e-12:
                raise ValueError("neumann normals must have unit length")

    @property
    def counts(self) -> tuple[int, int, int]:
        return (len(self.interior), len(self.dirichlet_points), len(self.neumann_points))


_BOUNDARY_NUDGE = 1e-9


def _open_unit(u: np.ndarray) -> np.ndarray:
    """Push coordinates that sit exactly on the closed unit boundary inside.

    Deterministic sequences (Hammersley and Korobov at index 0) contain the
    origin; a 1e-9 nudge keeps mapped interior points strictly interior while
    leaving every other point untouched.
    """
    return np.clip(u, _BOUNDARY_NUDGE, 1.0 - _BOUNDARY_NUDGE)


def _map_annulus_radius(u: np.ndarray, geom: AnnularCylinder) -> np.ndarray:
    # quadratic map gives area-uniform density on the annulus
    return np.sqrt(geom.r_inner**2 + u * (geom.r_outer**2 - geom.r_inner**2))


_CUBE_FACES = (
    (0, 0.0, (-1.0, 0.0, 0.0)),
    (0, 1.0, (1.0, 0.0, 0.0)),
    (1, 0.0, (0.0, -1.0, 0.0)),
    (1, 1.0, (0.0, 1.0, 0.0)),
    (2, 0.0, (0.0, 0.0, -1.0)),
    (2, 1.0, (0.0, 0.0, 1.0)),
)


def sample_domain(kind: SamplerKind, geom: Geometry,
                  n_interior: int, n_per_face: int) -> CollocationSet:
    """Interior + per-face boundary samples with outward unit normals.

    Prescribed boundary data are placeholders (flux 0 on every face) until a
    case attaches its real conditions.
    """
    if n_interior < 1 or n_per_face < 1:
        raise ValueError("n_interior and n_per_face must be at least 1")

    unit3 = _open_unit(_unit_points(kind, n_interior, 3, salt=None))
    if isinstance(geom, UnitCube):
        interior = unit3 * geom.edge
        face_pts, face_normals = [], []
        for salt, (axis, frac, normal) in enumerate(_CUBE_FACES, start=1):
            uv = _unit_points(kind, n_per_face, 2, salt=salt)
            pts = np.empty((n_per_face, 3))
            free = [d for d in range(3) if d != axis]
            pts[:, free[0]] = uv[:, 0] * geom.edge
            pts[:, free[1]] = uv[:, 1] * geom.edge
            pts[:, axis] = frac * geom.edge
            face_pts.append(pts)
            face_normals.append(np.tile(normal, (n_per_face, 1)))
    elif isinstance(geom, AnnularCylinder):
        r = _map_annulus_radius(unit3[:, 0], geom)
        theta = 2.0 * np.pi * unit3[:, 1]
        interior = np.column_stack([r * np.cos(theta), r * np.sin(theta),
                                    unit3[:, 2] * geom.height])
        face_pts, face_normals = [], []
        for salt, radius, sign in ((1, geom.r_inner, -1.0), (2, geom.r_outer, 1.0)):
            uv = _unit_points(kind, n_per_face, 2, salt=salt)
            th = 2.0 * np.pi * uv[:, 0]
            pts = np.column_stack([radius * np.cos(th), radius * np.sin(th),
                                   uv[:, 1] * geom.height])
            face_pts.append(pts)
            face_normals.append(np.column_stack([sign * np.cos(th), sign * np.sin(th),
                                                 np.zeros(n_per_face)]))
        for salt, zval, sign in ((3, 0.0, -1.0), (4, geom.height, 1.0)):
            uv = _unit_points(kind, n_per_face, 2, salt=salt)
            rr = _map_annulus_radius(uv[:, 0], geom)
            th = 2.0 * np.pi * uv[:, 1]
            pts = np.column_stack([rr * np.cos(th), rr * np.sin(th),
                                   np.full(n_per_face, zval)])
            face_pts.append(pts)
            face_normals.append(np.tile([0.0, 0.0, sign], (n_per_face, 1)))
    else:
        raise ValueError(f"unknown geometry {geom!r}")

    boundary = np.vstack(face_pts)
    normals = np.vstack(face_normals)
    # renormalize the trigonometric normals to kill rounding in cos/sin
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    return CollocationSet(
        geometry=geom,
        interior=interior,
        neumann_points=boundary,
        neumann_normals=normals,
        neumann_values=np.zeros(len(boundary)),
    )
