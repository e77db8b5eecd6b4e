"""Connections of Galilei-Newton space-time in adapted coordinates.

Fields live on a uniform grid over ``(t, x, y, z)``. Index 0 is time,
1..3 are space. Arrays carry their tensor indices first and the four grid
axes last, e.g. the spatial metric ``g`` has shape ``(3, 3, Nt, Nx, Ny, Nz)``.

A torsion-free connection preserving the degenerate metric and the time form
``dt`` has

    Gamma^0_{mu nu} = 0
    Gamma_{ij,k}  = (d_i g_jk + d_j g_ik - d_k g_ij) / 2
    Gamma_{i0,j}  = (d_0 g_ij + Phi_ij) / 2
    Gamma_{00,j}  = Phi_0j

with ``Gamma_{mu nu, j} = g_jl Gamma^l_{mu nu}`` and ``Phi`` antisymmetric.
Derivatives are centred differences in the interior and first-order one-sided
differences on the boundary.

``B`` is read as ``B_i = (1/2) eps_ijk Phi_jk``, i.e. ``B = (Phi_yz, Phi_zx,
Phi_xy)``. The code takes no position on whether (E, B) are electromagnetic
or gravitational.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

NDIM = 4
_TRIPLES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


def _uniform_spacing(axis: np.ndarray) -> float:
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size < 2:
        raise ValueError("each axis needs at least two points")
    steps = np.diff(axis)
    h = float(steps.mean())
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * h:
        raise ValueError("axes must be uniform and increasing")
    return h


@dataclass(frozen=True, eq=False)
class SpacetimeModel:
    """Sampled ``g_ij``, ``Phi_mu nu`` and optionally a potential ``A_mu``."""

    axes: tuple
    g: np.ndarray
    phi: np.ndarray
    A: np.ndarray | None = None

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        if len(axes) != NDIM:
            raise ValueError("need four axes (t, x, y, z)")
        object.__setattr__(self, "axes", axes)
        shape = self.shape
        g = np.asarray(self.g, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if g.shape != (3, 3) + shape:
            raise ValueError(f"g must have shape (3, 3) + {shape}")
        if phi.shape != (4, 4) + shape:
            raise ValueError(f"phi must have shape (4, 4) + {shape}")
        if np.max(np.abs(g - g.swapaxes(0, 1))) > 1e-12 * max(1.0, np.abs(g).max()):
            raise ValueError("g must be symmetric")
        if np.any(phi + phi.swapaxes(0, 1) != 0):
            raise ValueError("phi must be exactly antisymmetric")
        try:
            np.linalg.cholesky(np.moveaxis(g, (0, 1), (-2, -1)))
        except np.linalg.LinAlgError as exc:
            raise ValueError("g is not positive definite everywhere") from exc
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "phi", phi)
        if self.A is not None:
            A = np.asarray(self.A, dtype=float)
            if A.shape != (4,) + shape:
                raise ValueError(f"A must have shape (4,) + {shape}")
            object.__setattr__(self, "A", A)

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def spacing(self) -> tuple:
        return tuple(_uniform_spacing(a) for a in self.axes)

    def g_inverse(self) -> np.ndarray:
        gi = np.linalg.inv(np.moveaxis(self.g, (0, 1), (-2, -1)))
        return np.moveaxis(gi, (-2, -1), (0, 1))

    @classmethod
    def from_potential(cls, axes, g, A) -> "SpacetimeModel":
        """Model whose ``Phi`` is the finite-difference curl of ``A``."""
        spacing = tuple(_uniform_spacing(a) for a in axes)
        return cls(axes, g, potential_to_field(A, spacing), A)


def coordinate_grid(axes) -> tuple:
    return np.meshgrid(*[np.asarray(a, dtype=float) for a in axes], indexing="ij")


def sample_model(
    axes: Sequence[np.ndarray],
    g_func: Callable,
    phi_func: Callable | None = None,
    A_func: Callable | None = None,
) -> SpacetimeModel:
    """Sample analytic fields; each callable receives the ``(t, x, y, z)`` mesh."""
    mesh = coordinate_grid(axes)
    shape = mesh[0].shape
    g = np.asarray(g_func(*mesh), dtype=float)
    phi = np.zeros((4, 4) + shape) if phi_func is None else np.asarray(phi_func(*mesh), dtype=float)
    A = None if A_func is None else np.asarray(A_func(*mesh), dtype=float)
    return SpacetimeModel(tuple(axes), g, phi, A)


def _derivative(field: np.ndarray, mu: int, spacing) -> np.ndarray:
    axis = field.ndim - NDIM + mu
    if field.shape[axis] < 2:
        raise ValueError("grid too coarse for finite differences")
    return np.gradient(field, spacing[mu], axis=axis, edge_order=1)


def interior_mask(shape) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    mask[tuple(slice(1, -1) for _ in shape)] = True
    return mask


@dataclass(frozen=True, eq=False)
class ConnectionCoefficients:
    """``gamma[l, m, n] = Gamma^l_{mn}`` on the model grid."""

    gamma: np.ndarray

    def lowered(self, g: np.ndarray) -> np.ndarray:
        """``Gamma_{mu nu, j} = g_jl Gamma^l_{mu nu}``, shape ``(4, 4, 3, ...)``."""
        return np.einsum("jl...,lmn...->mnj...", g, self.gamma[1:])

    def torsion(self) -> float:
        return float(np.max(np.abs(self.gamma - self.gamma.swapaxes(1, 2))))

    def time_row(self) -> float:
        return float(np.max(np.abs(self.gamma[0])))


def build_connection(model: SpacetimeModel) -> ConnectionCoefficients:
    h = model.spacing
    g, phi = model.g, model.phi
    shape = model.shape
    dg = np.stack([_derivative(g, mu, h) for mu in range(NDIM)])  # (4, 3, 3, ...)

    low = np.zeros((4, 4, 3) + shape)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                low[1 + i, 1 + j, k] = 0.5 * (dg[1 + i, j, k] + dg[1 + j, i, k] - dg[1 + k, i, j])
            mixed = 0.5 * (dg[0, i, j] + phi[1 + i, 1 + j])
            low[1 + i, 0, j] = mixed
            low[0, 1 + i, j] = mixed
        low[0, 0, i] = phi[0, 1 + i]

    gamma = np.zeros((4, 4, 4) + shape)
    gamma[1:] = np.einsum("lj...,mnj...->lmn...", model.g_inverse(), low)
    gamma = 0.5 * (gamma + gamma.swapaxes(1, 2))
    gamma[0] = 0.0
    return ConnectionCoefficients(gamma)


@dataclass(frozen=True)
class ResidualSummary:
    interior_max: float
    boundary_max: float
    mean: float

    @classmethod
    def of(cls, residual: np.ndarray) -> "ResidualSummary":
        """Summarise ``|residual|`` with tensor indices leading and grid axes last."""
        r = np.abs(residual).reshape((-1,) + residual.shape[-NDIM:]).max(axis=0)
        mask = interior_mask(r.shape)
        inner = float(r[mask].max()) if mask.any() else 0.0
        outer = float(r[~mask].max()) if (~mask).any() else 0.0
        return cls(inner, outer, float(r.mean()))

    @property
    def max(self) -> float:
        return max(self.interior_max, self.boundary_max)


@dataclass(frozen=True)
class CompatibilityReport:
    """Residuals of the compatibility conditions.

    ``metric`` is ``(nabla g)^{ij}_lambda`` for the contravariant metric with
    ``d g^{ij}`` differenced directly, so it measures discretisation error.
    ``lowered`` is ``d_mu g_ij - Gamma_{mu i,j} - Gamma_{mu j,i}``, which a
    correct build satisfies to rounding. ``time_form`` is ``max |Gamma^0|``.
    """

    metric: ResidualSummary
    lowered: ResidualSummary
    time_form: float
    torsion: float

    @property
    def max(self) -> float:
        return max(self.metric.max, self.lowered.max, self.time_form, self.torsion)


def verify_compatibility(conn: ConnectionCoefficients, model: SpacetimeModel) -> CompatibilityReport:
    h = model.spacing
    gamma = conn.gamma
    ginv = model.g_inverse()
    # (nabla_lam g)^{ij} = d_lam g^{ij} + Gamma^i_{lam s} g^{sj} + Gamma^j_{lam s} g^{is}
    dginv = np.stack([_derivative(ginv, lam, h) for lam in range(NDIM)])
    gsp = gamma[1:, :, 1:]  # Gamma^i_{lam s}, spatial i and s
    term = np.einsum("ils...,sj...->lij...", gsp, ginv)
    metric = dginv + term + term.swapaxes(1, 2)

    dg = np.stack([_derivative(model.g, mu, h) for mu in range(NDIM)])
    low = conn.lowered(model.g)  # (mu, nu, j)
    low_sp = low[:, 1:]  # Gamma_{mu i, j}
    lowered = dg - low_sp - low_sp.swapaxes(1, 2)

    return CompatibilityReport(
        metric=ResidualSummary.of(metric),
        lowered=ResidualSummary.of(lowered),
        time_form=conn.time_row(),
        torsion=conn.torsion(),
    )


def extract_EB(phi) -> tuple[np.ndarray, np.ndarray]:
    """``E_i = Phi_0i`` and ``B = (Phi_yz, Phi_zx, Phi_xy)``."""
    phi = phi.phi if isinstance(phi, SpacetimeModel) else np.asarray(phi)
    E = np.stack([phi[0, 1], phi[0, 2], phi[0, 3]])
    B = np.stack([phi[2, 3], phi[3, 1], phi[1, 2]])
    return E, B


def assemble_phi(E, B) -> np.ndarray:
    """Inverse of :func:`extract_EB`."""
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    phi = np.zeros((4, 4) + E.shape[1:])
    for i in range(3):
        phi[0, 1 + i] = E[i]
        phi[1 + i, 0] = -E[i]
    for i, (j, k) in enumerate(((2, 3), (3, 1), (1, 2))):
        phi[j, k] = B[i]
        phi[k, j] = -B[i]
    return phi


def _cross(v, B) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape((3,) + (1,) * (np.ndim(B) - 1))
    return np.stack(
        [
            v[1] * B[2] - v[2] * B[1],
            v[2] * B[0] - v[0] * B[2],
            v[0] * B[1] - v[1] * B[0],
        ]
    )


def boost_transform(E, B, v) -> tuple[np.ndarray, np.ndarray]:
    """Fields seen after the special Galilei boost ``x' = x - v t`` on flat fibres."""
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    return E + _cross(v, B), B.copy()


def potential_to_field(A: np.ndarray, spacing) -> np.ndarray:
    """``Phi_mu nu = d_mu A_nu - d_nu A_mu`` by finite differences."""
    A = np.asarray(A, dtype=float)
    dA = np.stack([_derivative(A, mu, spacing) for mu in range(NDIM)])  # dA[mu, nu]
    phi = np.zeros((4, 4) + A.shape[1:])
    for mu in range(NDIM):
        for nu in range(mu + 1, NDIM):
            phi[mu, nu] = dA[mu, nu] - dA[nu, mu]
            phi[nu, mu] = -phi[mu, nu]
    return phi


def check_closedness(model_or_phi, spacing=None) -> ResidualSummary:
    """Cyclic sum ``d_mu Phi_nu sig + d_nu Phi_sig mu + d_sig Phi_mu nu`` over index triples."""
    if isinstance(model_or_phi, SpacetimeModel):
        phi, spacing = model_or_phi.phi, model_or_phi.spacing
    else:
        phi = np.asarray(model_or_phi, dtype=float)
        if spacing is None:
            raise ValueError("spacing is required when passing a bare Phi array")
    res = np.stack(
        [
            _derivative(phi[n, s], m, spacing)
            + _derivative(phi[s, m], n, spacing)
            + _derivative(phi[m, n], s, spacing)
            for m, n, s in _TRIPLES
        ]
    )
    return ResidualSummary.of(res)


def quantization_form(model: SpacetimeModel, y) -> tuple[np.ndarray, np.ndarray]:
    """``a_0 = -g_ij y^i y^j / 2 + A_0`` and ``a_i = g_ij y^j + A_i`` at every sample."""
    g = model.g
    y = np.asarray(y, dtype=float)
    if y.shape[0] != 3:
        raise ValueError("y must be a spatial 3-vector (or a field of them)")
    y = y.reshape((3,) + (1,) * NDIM) if y.ndim == 1 else y
    A = np.zeros((4,) + model.shape) if model.A is None else model.A
    gy = np.einsum("ij...,j...->i...", g, np.broadcast_to(y, (3,) + model.shape))
    a = gy + A[1:]
    a0 = -0.5 * np.einsum("i...,i...->...", np.broadcast_to(y, (3,) + model.shape), gy) + A[0]
    return a0, a
