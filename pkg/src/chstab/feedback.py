"""Finite-dimensional static output feedback operators.

Every operator has the form ``F z = lam * sum_{T,T'} W[T,T'] <Phi_T, z> Phi_T'``
for actuator/measurement functionals ``Phi_T`` attached to the cells of an
``M^d`` partition of the box. In coefficient space it is the low-rank
symmetric matrix ``lam * B @ W @ B.T`` with ``B[k, T] = <Phi_T, phi_k>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
import io

import numpy as np

from .spectral import Discretization, SpectralField, basis_values, midpoints


class FeedbackKind(str, Enum):
    POINTWISE = "pointwise"
    CELL_AVERAGE = "cell_average"
    WEIGHTED = "weighted"
    NONLOCAL = "nonlocal"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class FeedbackOperator:
    disc: Discretization
    kind: FeedbackKind
    M: int
    lam: float
    B: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)
    omega_fraction: float = 1.0
    beta: np.ndarray | None = field(default=None, repr=False)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Coefficient-space matrix ``lam * B W B^T``."""
        if self.B.shape[1] == 0 or self.lam == 0.0:
            return np.zeros((self.disc.size, self.disc.size))
        K = self.lam * (self.B @ self.W @ self.B.T)
        return 0.5 * (K + K.T)

    @cached_property
    def unit_matrix(self) -> np.ndarray:
        """``B W B^T``; the operator at unit gain."""
        if self.B.shape[1] == 0:
            return np.zeros((self.disc.size, self.disc.size))
        K = self.B @ self.W @ self.B.T
        return 0.5 * (K + K.T)

    @property
    def n_actuators(self) -> int:
        return self.B.shape[1]

    def with_gain(self, lam: float) -> "FeedbackOperator":
        if lam < 0:
            raise ValueError("gain must be nonnegative")
        return FeedbackOperator(
            self.disc, self.kind, self.M, float(lam), self.B, self.W,
            self.omega_fraction, self.beta,
        )

    def measure(self, z: SpectralField) -> np.ndarray:
        """Measurements <Phi_T, z>, one per actuator."""
        return self.B.T @ z.coeffs

    def energy(self, z: SpectralField) -> float:
        """<F z, z>."""
        return float(z.coeffs @ (self.matrix @ z.coeffs))

    def to_text(self) -> str:
        """Key-value description for experiment logs."""
        lines = [
            f"kind = {self.kind.value}",
            f"M = {self.M}",
            f"lambda = {self.lam!r}",
            f"omega_fraction = {self.omega_fraction!r}",
        ]
        if self.beta is not None:
            buf = io.StringIO()
            np.savetxt(buf, np.atleast_2d(self.beta), delimiter=",", fmt="%.17g")
            lines.append("beta =")
            lines.extend("  " + row for row in buf.getvalue().strip().splitlines())
        return "\n".join(lines) + "\n"


def apply(F: FeedbackOperator, z: SpectralField) -> SpectralField:
    if z.disc != F.disc:
        raise ValueError("feedback operator and field use different discretizations")
    return SpectralField(z.disc, F.matrix @ z.coeffs)


def _check_gain(M, lam):
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")


def lattice_points(M: int, dim: int) -> np.ndarray:
    """Cell centres ((j - 1/2)/M, ...) in row-major order, shape (M^dim, dim)."""
    xi = midpoints(M)
    if dim == 1:
        return xi[:, None]
    X, Y = np.meshgrid(xi, xi, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def _tensor(B1: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        return B1
    return np.kron(B1, B1)


def _pointwise_matrix(disc: Discretization, M: int) -> np.ndarray:
    if M == 0:
        return np.zeros((disc.size, 0))
    return _tensor(basis_values(disc.modes, midpoints(M)), disc.dim)


def build_pointwise(disc: Discretization, M: int, lam: float) -> FeedbackOperator:
    """Delta actuators at the cell centres of an M^d lattice with weights |T| = M^-d."""
    _check_gain(M, lam)
    B = _pointwise_matrix(disc, M)
    W = np.eye(M**disc.dim) / max(M, 1) ** disc.dim
    return FeedbackOperator(disc, FeedbackKind.POINTWISE, M, float(lam), B, W)


def _cell_means_1d(n_modes: int, M: int, omega_fraction: float) -> np.ndarray:
    # mean of sqrt(2) cos(k pi x) over [xi - w/2, xi + w/2], closed form
    xi = midpoints(M)
    half = 0.5 * omega_fraction / M
    a, b = xi - half, xi + half
    k = np.arange(1, n_modes)[:, None]
    means = np.empty((n_modes, M))
    means[0] = 1.0
    means[1:] = (
        np.sqrt(2.0) * (np.sin(np.pi * k * b) - np.sin(np.pi * k * a)) / (np.pi * k * (b - a))
    )
    return means


def build_cell_average(
    disc: Discretization, M: int, lam: float, omega_fraction: float = 1.0
) -> FeedbackOperator:
    """Indicator actuators on centred sub-cells of side ``omega_fraction / M``."""
    _check_gain(M, lam)
    if not 0.0 < omega_fraction <= 1.0:
        raise ValueError(f"omega_fraction must lie in (0, 1], got {omega_fraction}")
    if M == 0:
        B = np.zeros((disc.size, 0))
    else:
        B = _tensor(_cell_means_1d(disc.modes, M, omega_fraction), disc.dim)
    W = np.eye(M**disc.dim) / max(M, 1) ** disc.dim
    return FeedbackOperator(
        disc, FeedbackKind.CELL_AVERAGE, M, float(lam), B, W, omega_fraction=float(omega_fraction)
    )


def build_weighted(disc: Discretization, M: int, lam: float, beta) -> FeedbackOperator:
    """Pointwise feedback with per-cell weights ``beta_T > 0``."""
    _check_gain(M, lam)
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.size != M**disc.dim:
        raise ValueError(f"need {M**disc.dim} weights, got {beta.size}")
    if beta.size and beta.min() <= 0:
        raise ValueError("weights must be strictly positive")
    W = np.diag(beta) / max(M, 1) ** disc.dim
    return FeedbackOperator(
        disc, FeedbackKind.WEIGHTED, M, float(lam), _pointwise_matrix(disc, M), W, beta=beta
    )


def build_nonlocal(disc: Discretization, M: int, lam: float, beta) -> FeedbackOperator:
    """Pointwise feedback coupling every pair of cells through a symmetric matrix ``beta``.

    ``beta`` must be symmetric positive definite; the weight matrix is
    ``|T| |T'| beta``, so ``beta = I / |T|`` reproduces :func:`build_pointwise`.
    """
    _check_gain(M, lam)
    n = M**disc.dim
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    if beta.shape != (n, n):
        raise ValueError(f"beta must be {n}x{n}, got {beta.shape}")
    if not np.allclose(beta, beta.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(beta).max())):
        raise ValueError("beta must be symmetric")
    if n and np.linalg.eigvalsh(beta).min() <= 0:
        raise ValueError("beta must have strictly positive eigenvalues")
    cell = 1.0 / max(M, 1) ** disc.dim
    W = cell * cell * beta
    return FeedbackOperator(
        disc, FeedbackKind.NONLOCAL, M, float(lam), _pointwise_matrix(disc, M), W, beta=beta
    )


def build_from_points(
    disc: Discretization, points, lam: float, weights=None
) -> FeedbackOperator:
    """Delta actuators at arbitrary points with diagonal weights (default 1/#points)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    n = pts.shape[0]
    if weights is None:
        weights = np.full(n, 1.0 / n)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n,) or np.any(weights < 0):
        raise ValueError("weights must be nonnegative, one per point")
    B = disc.evaluation_matrix(pts)
    return FeedbackOperator(disc, FeedbackKind.CUSTOM, 0, float(lam), B, np.diag(weights))


def zero(disc: Discretization) -> FeedbackOperator:
    return build_pointwise(disc, 0, 0.0)


def build(disc: Discretization, kind: str, M: int, lam: float,
          omega_fraction: float = 1.0, beta=None) -> FeedbackOperator:
    """Dispatch on ``kind`` (one of the :class:`FeedbackKind` values)."""
    kind = FeedbackKind(kind)
    if kind is FeedbackKind.POINTWISE:
        return build_pointwise(disc, M, lam)
    if kind is FeedbackKind.CELL_AVERAGE:
        return build_cell_average(disc, M, lam, omega_fraction)
    if kind is FeedbackKind.WEIGHTED:
        if beta is None:
            beta = np.ones(M**disc.dim)
        return build_weighted(disc, M, lam, beta)
    if kind is FeedbackKind.NONLOCAL:
        if beta is None:
            beta = np.eye(M**disc.dim) * M**disc.dim
        return build_nonlocal(disc, M, lam, beta)
    raise ValueError(f"cannot build {kind.value!r} feedback from a lattice spec")
