"""Spectral-gap stabilizability certificate.

The closed loop tracks its reference exponentially with rate ``gamma`` whenever

    nu ||Delta z||^2 + 2 <F z, z>  >=  (C* + gamma) ||z||^2

on the discrete space. On the orthonormal cosine basis the left-hand side is
the quadratic form of ``A = nu diag(mu^2) + 2 lam B W B^T``, so the best
``gamma`` is the smallest eigenvalue of ``A`` minus ``C*``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import csv
import math

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .feedback import FeedbackOperator, build_pointwise
from .spectral import Discretization, SpectralField

DENSE_LIMIT = 4096
RESIDUAL_TOL = 1e-9
SYMMETRY_TOL = 1e-12


class EigensolverError(RuntimeError):
    pass


def compute_cstar(R: float, nu: float) -> float:
    """Constant absorbing the nonlinear cross terms for a reference bounded by R in W^{1,inf}."""
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    if R < 0:
        raise ValueError(f"R must be nonnegative, got {R}")
    return 1.5 * (R**2 + (3 * R**2) ** (4 / 3) * nu ** (-1 / 3) + 1 / nu) + 1


def compute_cstar_discrete(R: float, nu: float) -> float:
    """Variant with (3R(R+1))^{4/3} that appears in the fully discrete stability argument."""
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    if R < 0:
        raise ValueError(f"R must be nonnegative, got {R}")
    return 1.5 * (R**2 + (3 * R * (R + 1)) ** (4 / 3) * nu ** (-1 / 3) + 1 / nu) + 1


def assemble_quadratic_form(disc: Discretization, nu: float, F: FeedbackOperator) -> np.ndarray:
    if F.disc != disc:
        raise ValueError("feedback operator was built on a different discretization")
    A = 2.0 * F.matrix
    A[np.diag_indices_from(A)] += nu * disc.mu**2
    return A


def smallest_eigenvalue(A: np.ndarray, method: str = "auto") -> tuple[float, np.ndarray]:
    """Smallest eigenpair of a symmetric matrix.

    ``method`` is ``"dense"``, ``"iterative"`` (Lanczos via ARPACK) or
    ``"auto"``, which uses the dense path up to ``DENSE_LIMIT`` unknowns.
    The residual ``||A v - alpha v||`` is checked against ``1e-9 ||A||``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = np.abs(A).max() if A.size else 0.0
    if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_TOL * max(1.0, scale):
        raise ValueError("matrix is not symmetric")
    n = A.shape[0]
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "iterative"
    if method == "dense":
        w, V = scipy.linalg.eigh(A, subset_by_index=[0, 0])
    elif method == "iterative":
        w, V = scipy.sparse.linalg.eigsh(A, k=1, which="SA", tol=1e-14, maxiter=50 * n)
    else:
        raise ValueError(f"unknown method {method!r}")
    value, vec = float(w[0]), V[:, 0]
    vec = vec / np.linalg.norm(vec)
    # largest column norm: a lower bound on ||A||_2, so the check is never looser
    norm_A = np.sqrt((A**2).sum(axis=0).max()) if n else 0.0
    resid = np.linalg.norm(A @ vec - value * vec)
    if resid > RESIDUAL_TOL * max(norm_A, 1e-300):
        raise EigensolverError(f"eigenpair residual {resid:.3e} exceeds tolerance")
    return value, vec


@dataclass(frozen=True)
class GapCertificate:
    alpha_min: float
    c_star: float
    gamma: float
    minimizer: SpectralField
    nu: float
    R: float
    M: int
    lam: float
    modes: int

    @property
    def certified(self) -> bool:
        return self.gamma > 0


def certify(disc: Discretization, nu: float, R: float, F: FeedbackOperator) -> GapCertificate:
    A = assemble_quadratic_form(disc, nu, F)
    alpha, vec = smallest_eigenvalue(A)
    c_star = compute_cstar(R, nu)
    return GapCertificate(
        alpha_min=alpha,
        c_star=c_star,
        gamma=alpha - c_star,
        minimizer=SpectralField(disc, vec),
        nu=nu, R=R, M=F.M, lam=F.lam, modes=disc.modes,
    )


def rayleigh_quotient(disc: Discretization, nu: float, F: FeedbackOperator, z: SpectralField) -> float:
    """(nu ||Delta z||^2 + 2 <F z, z>) / ||z||^2."""
    return (nu * z.laplacian_norm_sq() + 2 * F.energy(z)) / z.norm_sq()


def saturation_cap(disc: Discretization, nu: float, F: FeedbackOperator) -> float:
    """Limit of alpha_min as the gain grows: min of nu ||Delta z||^2 / ||z||^2 on ker B^T."""
    if F.n_actuators == 0:
        return 0.0
    Z = scipy.linalg.null_space(F.B.T)
    if Z.shape[1] == 0:
        return math.inf
    A = (Z.T * (nu * disc.mu**2)) @ Z
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])


@dataclass(frozen=True)
class ScanRow:
    M: int
    lam: float
    alpha_min: float
    c_star: float
    gamma: float


def scan(disc: Discretization, nu: float, R: float, M_range, lambda_range,
         workers: int = 1, builder=build_pointwise) -> list[ScanRow]:
    """alpha_min over an (M, lambda) grid, rows in M-major, lambda-minor order."""
    Ms = [int(m) for m in M_range]
    lams = [float(x) for x in lambda_range]
    if not Ms or not lams:
        raise ValueError("scan ranges must be nonempty")
    c_star = compute_cstar(R, nu)
    base = {M: builder(disc, M, 1.0) for M in Ms}

    def point(idx):
        i, j = divmod(idx, len(lams))
        F = base[Ms[i]].with_gain(lams[j])
        alpha, _ = smallest_eigenvalue(assemble_quadratic_form(disc, nu, F))
        return ScanRow(Ms[i], lams[j], alpha, c_star, alpha - c_star)

    indices = range(len(Ms) * len(lams))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, indices))
    else:
        rows = [point(i) for i in indices]
    return rows


SCAN_HEADER = ["M", "lambda", "alpha_min", "c_star", "gamma"]


def write_scan_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_HEADER)
        for r in rows:
            w.writerow([r.M, f"{r.lam:.17g}", f"{r.alpha_min:.17g}",
                        f"{r.c_star:.17g}", f"{r.gamma:.17g}"])


def read_scan_csv(path) -> list[ScanRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != SCAN_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [ScanRow(int(r[0]), *map(float, r[1:])) for r in reader]
