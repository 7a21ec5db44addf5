"""Artifact writers: CSV tables, legacy-ASCII VTK grids, parameter snapshots.

All numeric output uses 17 significant digits in scientific notation, which
round-trips IEEE-754 doubles exactly; identical inputs therefore produce
byte-identical files.
"""

from __future__ import annotations

import os
from typing import Iterable

import numpy as np

from .bench import FieldTable
from .net import ActivationKind, NetworkParams
from .optim import TrainHistory


def fmt(v: float) -> str:
    return format(float(v), ".16e")


def write_convergence_csv(path, history: TrainHistory) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("iter,phase,total,mse_g,mse_d,mse_n\n")
        for e in history.entries:
            f.write(f"{e.iteration},{e.phase},{fmt(e.report.total)},{fmt(e.report.mse_g)},"
                    f"{fmt(e.report.mse_d)},{fmt(e.report.mse_n)}\n")


def write_fields_csv(path, table: FieldTable) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("x,y,z,phi_pred,phi_exact,q_pred,q_exact,abs_err\n")
        abs_err = table.abs_err
        for i in range(len(table.points)):
            p = table.points[i]
            f.write(f"{fmt(p[0])},{fmt(p[1])},{fmt(p[2])},{fmt(table.phi_pred[i])},"
                    f"{fmt(table.phi_exact[i])},{fmt(table.q_pred[i])},"
                    f"{fmt(table.q_exact[i])},{fmt(abs_err[i])}\n")


def write_fields_vtk(path, table: FieldTable, title: str = "potcol fields") -> None:
    """Legacy ASCII structured grid; points are ordered first-axis-fastest,
    matching the VTK i-j-k convention."""
    n = len(table.points)
    nx, ny, nz = table.dims
    if nx * ny * nz != n:
        raise ValueError(f"dims {table.dims} do not match {n} points")
    with open(path, "w", newline="\n") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(title + "\n")
        f.write("ASCII\n")
        f.write("DATASET STRUCTURED_GRID\n")
        f.write(f"DIMENSIONS {nx} {ny} {nz}\n")
        f.write(f"POINTS {n} double\n")
        for p in table.points:
            f.write(f"{fmt(p[0])} {fmt(p[1])} {fmt(p[2])}\n")
        f.write(f"POINT_DATA {n}\n")
        for name, values in (("phi_pred", table.phi_pred), ("phi_exact", table.phi_exact),
                             ("q_pred", table.q_pred), ("q_exact", table.q_exact),
                             ("abs_err", table.abs_err)):
            f.write(f"SCALARS {name} double 1\n")
            f.write("LOOKUP_TABLE default\n")
            for v in values:
                f.write(fmt(v) + "\n")


def write_collocation_csv(path, cset) -> None:
    """Point dump: interior rows leave the normal and prescribed fields empty."""
    with open(path, "w", newline="\n") as f:
        f.write("x,y,z,kind,nx,ny,nz,prescribed\n")
        for p in cset.interior:
            f.write(f"{fmt(p[0])},{fmt(p[1])},{fmt(p[2])},interior,,,,\n")
        for p, v in zip(cset.dirichlet_points, cset.dirichlet_values):
            f.write(f"{fmt(p[0])},{fmt(p[1])},{fmt(p[2])},dirichlet,,,,{fmt(v)}\n")
        for p, nrm, v in zip(cset.neumann_points, cset.neumann_normals, cset.neumann_values):
            f.write(f"{fmt(p[0])},{fmt(p[1])},{fmt(p[2])},neumann,"
                    f"{fmt(nrm[0])},{fmt(nrm[1])},{fmt(nrm[2])},{fmt(v)}\n")


_SNAPSHOT_MAGIC = "potcol-params 1"


def save_params(path, params: NetworkParams) -> None:
    """Text snapshot: layer shapes followed by row-major values."""
    with open(path, "w", newline="\n") as f:
        f.write(_SNAPSHOT_MAGIC + "\n")
        f.write(f"activation {params.activation.name} {fmt(params.activation.beta)}\n")
        f.write(f"layers {len(params.weights)}\n")
        for w, b in zip(params.weights, params.biases):
            f.write(f"W {w.shape[0]} {w.shape[1]}\n")
            for row in w:
                f.write(" ".join(fmt(v) for v in row) + "\n")
            f.write(f"b {b.shape[0]}\n")
            f.write(" ".join(fmt(v) for v in b) + "\n")


def load_params(path) -> NetworkParams:
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    it = iter(lines)
    if next(it) != _SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a parameter snapshot (bad magic line)")
    _, name, beta = next(it).split()
    activation = ActivationKind(name, float(beta))
    n_layers = int(next(it).split()[1])
    weights, biases = [], []
    for _ in range(n_layers):
        tag, rows, cols = next(it).split()
        if tag != "W":
            raise ValueError(f"{path}: expected weight block, got {tag!r}")
        w = np.array([[float(v) for v in next(it).split()] for _ in range(int(rows))])
        w = w.reshape(int(rows), int(cols))
        tag, size = next(it).split()
        if tag != "b":
            raise ValueError(f"{path}: expected bias block, got {tag!r}")
        b = np.array([float(v) for v in next(it).split()])
        if b.shape != (int(size),):
            raise ValueError(f"{path}: bias length mismatch")
        weights.append(w)
        biases.append(b)
    return NetworkParams(weights, biases, activation)


def remove_files(paths: Iterable[str]) -> None:
    for p in paths:
        try:
            os.unlink(p)
        except FileNotFoundError:
            pass
