"""Meshes on [0,1] and sampled field profiles.

The planar diode problem lives on the unit interval with a singular endpoint
at x=0 where the potential grows like x^(4/3). Graded meshes x_i = (i/N)^q
with q=3/2 cluster nodes there so three-point differences keep their order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import InvalidParameter, MeshMismatch

GRADED_EXPONENT_DEFAULT = 1.5


@dataclass(frozen=True)
class Mesh:
    """Strictly increasing abscissae with nodes[0]=0 and nodes[-1]=1."""

    nodes: np.ndarray
    grading: str = "uniform"
    exponent: float = 1.0

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 3:
            raise InvalidParameter("mesh needs at least 3 nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise InvalidParameter("mesh endpoints must be exactly 0 and 1")
        if not np.all(np.diff(nodes) > 0.0):
            raise InvalidParameter("mesh nodes must be strictly increasing")

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_interior(self) -> int:
        return self.nodes.size - 2

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.nodes)

    def same_nodes(self, other: "Mesh") -> bool:
        return self.nodes.size == other.nodes.size and bool(
            np.all(self.nodes == other.nodes)
        )


def make_mesh(n_nodes: int, grading: str = "graded",
              exponent: float = GRADED_EXPONENT_DEFAULT) -> Mesh:
    """Build a uniform or graded-toward-0 mesh with n_nodes nodes."""
    if n_nodes < 3:
        raise InvalidParameter(f"n_nodes must be >= 3, got {n_nodes}")
    if grading == "uniform":
        nodes = np.linspace(0.0, 1.0, n_nodes)
        return Mesh(nodes=nodes, grading="uniform", exponent=1.0)
    if grading == "graded":
        if exponent <= 0.0:
            raise InvalidParameter("grading exponent must be positive")
        t = np.linspace(0.0, 1.0, n_nodes)
        nodes = t**exponent
        nodes[0] = 0.0
        nodes[-1] = 1.0
        return Mesh(nodes=nodes, grading="graded", exponent=exponent)
    raise InvalidParameter(f"unknown grading {grading!r}")


def second_difference(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Three-point second difference at interior nodes.

    Uses the divided-difference form 2/(h0+h1) * ((u_{i+1}-u_i)/h1 -
    (u_i-u_{i-1})/h0), which is exact (including in floating point, for
    representable data) on linear profiles over any spacing.
    """
    u = np.asarray(values, dtype=float)
    if u.shape != mesh.nodes.shape:
        raise MeshMismatch(
            f"values shape {u.shape} does not match mesh {mesh.nodes.shape}"
        )
    h = mesh.spacings
    slope = np.diff(u) / h
    return 2.0 * np.diff(slope) / (h[:-1] + h[1:])


def d2_stencil(mesh: Mesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients (sub, diag, sup) of the interior second-difference rows.

    Row i of the discrete operator maps (u_{i-1}, u_i, u_{i+1}) to
    sub[i]*u_{i-1} + diag[i]*u_i + sup[i]*u_{i+1}.
    """
    h = mesh.spacings
    h0 = h[:-1]
    h1 = h[1:]
    sub = 2.0 / (h0 * (h0 + h1))
    sup = 2.0 / (h1 * (h0 + h1))
    diag = -2.0 / (h0 * h1)
    return sub, diag, sup


@dataclass(frozen=True)
class FieldProfile:
    """One field sampled on a mesh, with its boundary data and residual."""

    mesh: Mesh
    values: np.ndarray
    left: float
    right: float
    residual: float | None = None
    info: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != self.mesh.nodes.shape:
            raise MeshMismatch("profile values do not match mesh size")
        if values[0] != self.left or values[-1] != self.right:
            raise InvalidParameter("profile endpoints disagree with boundary values")

    @classmethod
    def from_values(cls, mesh: Mesh, values: np.ndarray,
                    residual: float | None = None,
                    info: Mapping[str, Any] | None = None) -> "FieldProfile":
        values = np.asarray(values, dtype=float)
        return cls(mesh=mesh, values=values, left=float(values[0]),
                   right=float(values[-1]), residual=residual, info=dict(info or {}))

    def sup_diff(self, other: "FieldProfile") -> float:
        if not self.mesh.same_nodes(other.mesh):
            raise MeshMismatch("profiles live on different meshes")
        return float(np.max(np.abs(self.values - other.values)))

    def interp(self, x: np.ndarray) -> np.ndarray:
        """Piecewise-linear resample (used for cross-mesh warm starts)."""
        return np.interp(np.asarray(x, dtype=float), self.mesh.nodes, self.values)
