"""Neumann cosine eigenbasis on the unit box (0, 1)^d.

Fields are stored as coefficients in the L2-orthonormal basis

    phi_k(x) = prod_i c(k_i) cos(k_i pi x_i),   c(0) = 1, c(k) = sqrt(2),

which diagonalises the Neumann Laplacian, Delta phi_k = -mu_k phi_k with
mu_k = pi^2 |k|^2. Every basis function satisfies d_n phi = d_n Delta phi = 0.

Nonlinear terms are evaluated pseudo-spectrally on the cell-centred grid
x_q = (q + 1/2) / Q, where discrete cosine analysis is exact for products
whose modes stay below 2Q - (N - 1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
from numpy.polynomial.legendre import leggauss


def basis_values(n_modes: int, x) -> np.ndarray:
    """Return the 1-D basis evaluated at points ``x``, shape (n_modes, len(x))."""
    x = np.asarray(x, dtype=float)
    k = np.arange(n_modes)
    scale = np.where(k == 0, 1.0, math.sqrt(2.0))
    return scale[:, None] * np.cos(np.pi * k[:, None] * x[None, :])


def basis_derivatives(n_modes: int, x) -> np.ndarray:
    """d/dx of :func:`basis_values`, same shape."""
    x = np.asarray(x, dtype=float)
    k = np.arange(n_modes)
    scale = np.where(k == 0, 0.0, -math.sqrt(2.0) * np.pi * k)
    return scale[:, None] * np.sin(np.pi * k[:, None] * x[None, :])


def midpoints(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


@dataclass(frozen=True, eq=False)
class Discretization:
    """Truncated cosine basis plus the collocation grid used for nonlinear terms.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    modes : int
        Retained modes per axis, indices ``0 .. modes - 1``.
    grid : int, optional
        Collocation points per axis. Defaults to ``2 * modes``, the smallest
        size at which the projection of a cubic is alias-free.
    """

    dim: int
    modes: int
    grid: int | None = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.modes < 1:
            raise ValueError(f"modes must be >= 1, got {self.modes}")
        if self.grid is None:
            object.__setattr__(self, "grid", 2 * self.modes)
        if self.grid < math.ceil(3 * self.modes / 2):
            raise ValueError(
                f"grid={self.grid} is below the dealiasing minimum "
                f"ceil(3N/2)={math.ceil(3 * self.modes / 2)}"
            )

    def __eq__(self, other):
        if not isinstance(other, Discretization):
            return NotImplemented
        return (self.dim, self.modes, self.grid) == (other.dim, other.modes, other.grid)

    def __hash__(self):
        return hash((self.dim, self.modes, self.grid))

    @property
    def size(self) -> int:
        return self.modes**self.dim

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.grid,) * self.dim

    @property
    def coeff_shape(self) -> tuple[int, ...]:
        return (self.modes,) * self.dim

    @cached_property
    def x(self) -> np.ndarray:
        return midpoints(self.grid)

    @cached_property
    def synthesis(self) -> np.ndarray:
        """1-D synthesis matrix S with S[q, k] = phi_k(x_q)."""
        return basis_values(self.modes, self.x).T.copy()

    @cached_property
    def synthesis_dx(self) -> np.ndarray:
        return basis_derivatives(self.modes, self.x).T.copy()

    @cached_property
    def mode_indices(self) -> np.ndarray:
        """Integer mode indices, shape (size, dim), row-major order."""
        k = np.arange(self.modes)
        if self.dim == 1:
            return k[:, None]
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        return np.column_stack([k1.ravel(), k2.ravel()])

    @cached_property
    def mu(self) -> np.ndarray:
        """Laplacian symbol mu_k = pi^2 |k|^2 in coefficient order."""
        return np.pi**2 * (self.mode_indices**2).sum(axis=1).astype(float)

    @cached_property
    def _pair_products(self) -> np.ndarray:
        # P[q, k, l] = S[q, k] S[q, l], used to assemble multiplication operators
        S = self.synthesis
        return S[:, :, None] * S[:, None, :]

    def points(self) -> np.ndarray:
        """Grid points, shape grid_shape + (dim,)."""
        if self.dim == 1:
            return self.x[:, None]
        X, Y = np.meshgrid(self.x, self.x, indexing="ij")
        return np.stack([X, Y], axis=-1)

    # -- transforms on raw coefficient vectors --

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        S = self.synthesis
        if self.dim == 1:
            return S @ coeffs
        C = coeffs.reshape(self.coeff_shape)
        return S @ C @ S.T

    def analyze(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != self.grid_shape:
            raise ValueError(
                f"grid values have shape {values.shape}, expected {self.grid_shape}"
            )
        S = self.synthesis
        if self.dim == 1:
            return S.T @ values / self.grid
        return (S.T @ values @ S).ravel() / self.grid**2

    def multiplication_matrix(self, weight: np.ndarray) -> np.ndarray:
        """Matrix of c -> analyze(weight * synthesize(c)) on the truncated basis."""
        Q, N = self.grid, self.modes
        P = self._pair_products
        if self.dim == 1:
            return np.einsum("q,qkl->kl", weight, P) / Q
        P2 = P.reshape(Q, N * N)
        T = weight @ P2  # (Q, N*N): summed over the second grid axis
        J = (P2.T @ T).reshape(N, N, N, N)  # [k1, l1, k2, l2]
        return J.transpose(0, 2, 1, 3).reshape(N * N, N * N) / Q**2

    def evaluation_matrix(self, points) -> np.ndarray:
        """Matrix E with E[k, j] = phi_k(points[j]); ``points`` has shape (m, dim)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise ValueError(f"points must have {self.dim} columns")
        E = basis_values(self.modes, points[:, 0])
        if self.dim == 2:
            Ey = basis_values(self.modes, points[:, 1])
            E = (E[:, None, :] * Ey[None, :, :]).reshape(self.size, -1)
        return E


@dataclass(frozen=True)
class SpectralField:
    """A function on the unit box stored by its basis coefficients."""

    disc: Discretization
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size != self.disc.size:
            raise ValueError(f"expected {self.disc.size} coefficients, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, disc: Discretization) -> "SpectralField":
        return cls(disc, np.zeros(disc.size))

    @classmethod
    def constant(cls, disc: Discretization, value: float) -> "SpectralField":
        c = np.zeros(disc.size)
        c[0] = value
        return cls(disc, c)

    @classmethod
    def from_function(cls, disc: Discretization, func) -> "SpectralField":
        """Project ``func`` (called with one array per axis) by grid analysis."""
        pts = disc.points()
        values = func(*[pts[..., i] for i in range(disc.dim)])
        return from_grid(np.broadcast_to(values, disc.grid_shape), disc)

    def _check(self, other: "SpectralField"):
        if other.disc != self.disc:
            raise ValueError("fields live on different discretizations")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.disc, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.disc, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float):
        return SpectralField(self.disc, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.disc, -self.coeffs)

    def inner(self, other: "SpectralField") -> float:
        self._check(other)
        return float(self.coeffs @ other.coeffs)

    def norm_sq(self) -> float:
        return float(self.coeffs @ self.coeffs)

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def laplacian_norm_sq(self) -> float:
        return float((self.disc.mu**2) @ (self.coeffs**2))

    def mean(self) -> float:
        return float(self.coeffs[0])

    def to_grid(self) -> np.ndarray:
        return to_grid(self)

    def evaluate(self, points) -> np.ndarray:
        return self.disc.evaluation_matrix(points).T @ self.coeffs

    def gradient_grid(self) -> list[np.ndarray]:
        """Exact gradient components sampled on the collocation grid."""
        d = self.disc
        S, D = d.synthesis, d.synthesis_dx
        if d.dim == 1:
            return [D @ self.coeffs]
        C = self.coeffs.reshape(d.coeff_shape)
        return [D @ C @ S.T, S @ C @ D.T]

    def w1inf_norm(self) -> float:
        """Grid approximation of max(|f|, |grad f|) over the box."""
        vals = np.abs(self.to_grid()).max()
        grad = np.sqrt(sum(g**2 for g in self.gradient_grid())).max()
        return float(max(vals, grad))


def to_grid(f: SpectralField) -> np.ndarray:
    """Evaluate ``f`` on the cell-centred collocation grid."""
    return f.disc.synthesize(f.coeffs)


def from_grid(values, disc: Discretization) -> SpectralField:
    """Discrete cosine analysis of grid samples (L2 projection by midpoint quadrature)."""
    return SpectralField(disc, disc.analyze(values))


def apply_phi(f: SpectralField) -> SpectralField:
    """Projection of the double-well derivative y^3 - y onto the basis."""
    u = to_grid(f)
    return from_grid(u**3 - u, f.disc)


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.disc, -f.disc.mu * f.coeffs)


def bilaplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.disc, f.disc.mu**2 * f.coeffs)


def interpolate_pw(f: SpectralField, M: int) -> np.ndarray:
    """Values of ``f`` at the cell centres (j - 1/2)/M, shape (M,) * dim."""
    if M < 1:
        raise ValueError("M must be >= 1")
    xi = midpoints(M)
    if f.disc.dim == 1:
        pts = xi[:, None]
    else:
        X, Y = np.meshgrid(xi, xi, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
    return f.evaluate(pts).reshape((M,) * f.disc.dim)


def interpolation_error(f: SpectralField, M: int, order: int | None = None) -> float:
    """L2 norm of f minus its piecewise-constant interpolant on an M^d cell grid.

    Uses tensor Gauss-Legendre quadrature inside every cell, so the
    discontinuities of the interpolant never fall inside a quadrature panel.
    """
    d = f.disc
    if order is None:
        order = max(8, 2 * math.ceil(d.modes / M) + 8)
    nodes, weights = leggauss(order)
    xi = midpoints(M)
    H = 1.0 / M
    x = (xi[:, None] + 0.5 * H * nodes[None, :]).ravel()
    w = np.tile(0.5 * H * weights, M)
    cell_vals = interpolate_pw(f, M)
    S = basis_values(d.modes, x).T
    if d.dim == 1:
        diff = S @ f.coeffs - np.repeat(cell_vals, order)
        return float(math.sqrt(np.sum(w * diff**2)))
    C = f.coeffs.reshape(d.coeff_shape)
    vals = S @ C @ S.T
    pw = np.repeat(np.repeat(cell_vals, order, axis=0), order, axis=1)
    return float(math.sqrt(np.sum(np.outer(w, w) * (vals - pw) ** 2)))
