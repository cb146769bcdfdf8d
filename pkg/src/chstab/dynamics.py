"""Fully discrete controlled Cahn-Hilliard system.

Galerkin in the cosine basis, implicit Euler in time, Newton per step. With
coefficients ``c`` of ``y``, one step solves

    G(c) = (c - c_prev)/tau + nu mu^2 c + mu P_phi(c) + K (c - c_ref) - h = 0

where ``P_phi(c)`` are the coefficients of ``y^3 - y`` and ``K`` is the
feedback matrix. Tracking error and the per-step energy inequality
``(1 + tau gamma) ||z^n||^2 <= ||z^{n-1}||^2 + tau ||g^n||^2`` are recorded
for every step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .feedback import FeedbackOperator
from .gap import GapCertificate
from .spectral import Discretization, SpectralField, apply_phi

MAX_NEWTON_ITERS = 50
NEWTON_RTOL = 1e-11
MIN_DAMPING = 2.0**-10
ENERGY_RTOL = 1e-9
DENSE_NEWTON_LIMIT = 256
KRYLOV_RTOL = 1e-13


class NewtonDivergence(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class EnergyInequalityViolation(AssertionError):
    pass


@dataclass(frozen=True)
class ModelParams:
    nu: float
    tau: float
    t_end: float
    R_declared: float | None = None

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.tau))


@dataclass
class NewtonStats:
    iterations: int
    residual: float
    damping_steps: int = 0


@dataclass
class Trajectory:
    states: list[SpectralField]
    times: np.ndarray
    forcing: list[SpectralField]


@dataclass
class TrajectoryRecord:
    t: np.ndarray
    z_norm_sq: np.ndarray
    energy_lhs: np.ndarray
    energy_rhs: np.ndarray
    feedback_energy: np.ndarray
    newton_iters: np.ndarray
    g_norm_sq: np.ndarray
    cumulative_bound: np.ndarray
    gamma: float = math.nan
    tau: float = math.nan
    R_run: float = math.nan
    certificate_applies: bool = False
    step_violations: list[int] = field(default_factory=list)
    cumulative_violations: list[int] = field(default_factory=list)

    @property
    def n(self) -> np.ndarray:
        return np.arange(len(self.t))

    @property
    def violation_count(self) -> int:
        return len(self.step_violations) + len(self.cumulative_violations)


def gamma_tilde(gamma: float, tau: float) -> float:
    """Discrete decay rate defined by tau * gamma_tilde = log(1 + tau * gamma)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if 1 + tau * gamma <= 0:
        raise ValueError(f"1 + tau*gamma = {1 + tau * gamma} must be positive")
    return math.log1p(tau * gamma) / tau


def initial_tanh(disc: Discretization, nu: float) -> SpectralField:
    """Interface profile tanh((2x - 1)/sqrt(8 nu)), constant in y."""
    width = math.sqrt(8 * nu)
    return SpectralField.from_function(disc, lambda x, *rest: np.tanh((2 * x - 1) / width))


def random_perturbation(disc: Discretization, seed: int, amplitude: float) -> SpectralField:
    """Mean-free white noise on the lowest half of the modes, scaled to L2 norm ``amplitude``."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(disc.size)
    c[(disc.mode_indices >= max(disc.modes // 2, 1)).any(axis=1)] = 0.0
    c[0] = 0.0
    norm = np.linalg.norm(c)
    if norm > 0:
        c *= amplitude / norm
    return SpectralField(disc, c)


def stationary_forcing(y_r: SpectralField, nu: float) -> SpectralField:
    """nu Delta^2 y_r - Delta phi(y_r): the forcing that holds y_r at rest."""
    mu = y_r.disc.mu
    return SpectralField(y_r.disc, nu * mu**2 * y_r.coeffs + mu * apply_phi(y_r).coeffs)


def manufacture_forcing(y_r: list[SpectralField], nu: float, tau: float) -> list[SpectralField]:
    """Forcing h_r^n that makes ``y_r`` an exact solution of the discrete scheme.

    Entry 0 carries only the spatial part (the scheme never uses it).
    """
    if len(y_r) < 2:
        raise ValueError("need at least two time levels to manufacture a forcing")
    out = [stationary_forcing(y_r[0], nu)]
    for prev, cur in zip(y_r[:-1], y_r[1:]):
        out.append(stationary_forcing(cur, nu) + (cur - prev) * (1.0 / tau))
    return out


class _Stepper:
    """Precomputed pieces of the implicit Euler / Newton step.

    Newton corrections are solved either densely (LU of the assembled
    Jacobian) or by GMRES on the exact Jacobian action, preconditioned by
    the diagonal part plus the low-rank feedback through Woodbury.
    """

    def __init__(self, disc: Discretization, F: FeedbackOperator, params: ModelParams,
                 max_iters: int = MAX_NEWTON_ITERS, linear_solver: str = "auto"):
        if F.disc != disc:
            raise ValueError("feedback operator uses a different discretization")
        if linear_solver == "auto":
            linear_solver = "dense" if disc.size <= DENSE_NEWTON_LIMIT else "krylov"
        if linear_solver not in ("dense", "krylov"):
            raise ValueError(f"unknown linear solver {linear_solver!r}")
        self.disc = disc
        self.tau = params.tau
        self.mu = disc.mu
        self.linear_diag = 1.0 / params.tau + params.nu * disc.mu**2
        self.K = F.matrix
        self.has_feedback = bool(np.any(self.K))
        self.max_iters = max_iters
        self.linear_solver = linear_solver
        # K = U U^T for the Woodbury preconditioner
        if self.has_feedback:
            w, V = np.linalg.eigh(F.lam * F.W)
            keep = w > 1e-14 * max(w.max(), 1e-300)
            self.U = F.B @ (V[:, keep] * np.sqrt(w[keep]))
        else:
            self.U = np.zeros((disc.size, 0))

    def residual(self, c, c_prev, c_ref, h):
        u = self.disc.synthesize(c)
        G = self.linear_diag * c - c_prev / self.tau + self.mu * self.disc.analyze(u**3 - u) - h
        if self.has_feedback:
            G += self.K @ (c - c_ref)
        return G

    def jacobian(self, c):
        u = self.disc.synthesize(c)
        J = self.mu[:, None] * self.disc.multiplication_matrix(3 * u**2 - 1)
        J[np.diag_indices_from(J)] += self.linear_diag
        if self.has_feedback:
            J += self.K
        return J

    def _solve_dense(self, c, rhs):
        return scipy.linalg.lu_solve(
            scipy.linalg.lu_factor(self.jacobian(c), check_finite=False), rhs,
            check_finite=False,
        )

    def _solve_krylov(self, c, rhs):
        disc, mu, K = self.disc, self.mu, self.K
        weight = 3 * disc.synthesize(c) ** 2 - 1
        n = disc.size

        def matvec(v):
            out = self.linear_diag * v + mu * disc.analyze(weight * disc.synthesize(v))
            if self.has_feedback:
                out += K @ v
            return out

        d = self.linear_diag + mu * weight.mean()
        U = self.U
        DU = U / d[:, None]
        cap = scipy.linalg.cho_factor(np.eye(U.shape[1]) + U.T @ DU)

        def precond(r):
            x = r / d
            if U.shape[1]:
                x -= DU @ scipy.linalg.cho_solve(cap, U.T @ x)
            return x

        A = scipy.sparse.linalg.LinearOperator((n, n), matvec=matvec)
        P = scipy.sparse.linalg.LinearOperator((n, n), matvec=precond)
        x, info = scipy.sparse.linalg.gmres(
            A, rhs, M=P, rtol=KRYLOV_RTOL, atol=0.0, restart=60, maxiter=20
        )
        if info != 0:
            return self._solve_dense(c, rhs)
        return x

    def __call__(self, c_prev, c_ref, h) -> tuple[np.ndarray, NewtonStats]:
        solve = self._solve_dense if self.linear_solver == "dense" else self._solve_krylov
        c = c_prev.copy()
        G = self.residual(c, c_prev, c_ref, h)
        gnorm = np.linalg.norm(G)
        damping = 0
        for it in range(1, self.max_iters + 1):
            dc = solve(c, -G)
            t = 1.0
            while True:
                c_new = c + t * dc
                G_new = self.residual(c_new, c_prev, c_ref, h)
                gnew = np.linalg.norm(G_new)
                tol = NEWTON_RTOL * (1 + np.linalg.norm(c_new) / self.tau)
                if gnew <= tol or gnew < gnorm:
                    break
                t *= 0.5
                damping += 1
                if t < MIN_DAMPING:
                    raise NewtonDivergence(
                        f"line search exhausted at iteration {it} (|G| = {gnorm:.3e})"
                    )
            c, G, gnorm = c_new, G_new, gnew
            if gnorm <= tol:
                return c, NewtonStats(it, gnorm, damping)
        raise NewtonDivergence(
            f"no convergence after {self.max_iters} iterations (|G| = {gnorm:.3e})"
        )


def step(y_prev: SpectralField, h_n: SpectralField | None, y_r_n: SpectralField,
         F: FeedbackOperator, params: ModelParams,
         max_iters: int = MAX_NEWTON_ITERS,
         linear_solver: str = "auto") -> tuple[SpectralField, NewtonStats]:
    """One implicit Euler step; at least one Newton update is always taken."""
    disc = y_prev.disc
    if y_r_n.disc != disc or (h_n is not None and h_n.disc != disc):
        raise ValueError("inputs use different discretizations")
    stepper = _Stepper(disc, F, params, max_iters, linear_solver)
    h = np.zeros(disc.size) if h_n is None else h_n.coeffs
    c, stats = stepper(y_prev.coeffs, y_r_n.coeffs, h)
    return SpectralField(disc, c), stats


def residual(y_n: SpectralField, y_prev: SpectralField, h_n: SpectralField | None,
             y_r_n: SpectralField, F: FeedbackOperator, params: ModelParams) -> np.ndarray:
    """Coefficient residual of the discrete scheme at ``y_n``."""
    h = np.zeros(y_n.disc.size) if h_n is None else h_n.coeffs
    return _Stepper(y_n.disc, F, params).residual(y_n.coeffs, y_prev.coeffs, y_r_n.coeffs, h)


def jacobian(y: SpectralField, F: FeedbackOperator, params: ModelParams) -> np.ndarray:
    """Analytic Jacobian of the step residual at ``y``."""
    return _Stepper(y.disc, F, params).jacobian(y.coeffs)


def _per_step(seq, n_levels, disc, name):
    if seq is None:
        return [SpectralField.zeros(disc)] * n_levels
    if isinstance(seq, SpectralField):
        return [seq] * n_levels
    seq = list(seq)
    if len(seq) != n_levels:
        raise ValueError(f"{name} has {len(seq)} levels, expected {n_levels}")
    return seq


def simulate(y0: SpectralField, y_r, h, F: FeedbackOperator, params: ModelParams,
             certificate: GapCertificate | None = None, strict: bool = False,
             h_r=None, progress=None,
             linear_solver: str = "auto") -> tuple[Trajectory, TrajectoryRecord]:
    """Run ``params.n_steps`` implicit Euler steps from ``y0``.

    ``y_r``, ``h`` and ``h_r`` may each be a single field (constant in time),
    a list with one entry per time level, or ``None`` for zero (``h_r``
    defaults to ``h``, i.e. no tracking defect). With a ``certificate`` the
    per-step and cumulative energy bounds are checked; violations are
    recorded and warned about, and raise in ``strict`` mode when the
    certificate's R covers the measured reference bound.
    """
    disc = y0.disc
    K = params.n_steps
    refs = _per_step(y_r, K + 1, disc, "reference")
    forcing = _per_step(h, K + 1, disc, "forcing")
    ref_forcing = forcing if h_r is None else _per_step(h_r, K + 1, disc, "reference forcing")
    stepper = _Stepper(disc, F, params, linear_solver=linear_solver)
    tau = params.tau

    R_run = max(r.w1inf_norm() for r in _unique(refs))
    gamma = certificate.gamma if certificate is not None else math.nan
    checking = certificate is not None and 1 + tau * gamma > 0
    q = 1.0 / (1.0 + tau * gamma) if checking else math.nan
    applies = checking and certificate.R >= R_run

    rec = TrajectoryRecord(
        t=tau * np.arange(K + 1),
        z_norm_sq=np.empty(K + 1), energy_lhs=np.full(K + 1, np.nan),
        energy_rhs=np.full(K + 1, np.nan), feedback_energy=np.empty(K + 1),
        newton_iters=np.zeros(K + 1, dtype=int), g_norm_sq=np.zeros(K + 1),
        cumulative_bound=np.full(K + 1, np.nan),
        gamma=gamma, tau=tau, R_run=R_run, certificate_applies=applies,
    )
    states = [y0]
    z = y0 - refs[0]
    rec.z_norm_sq[0] = z.norm_sq()
    rec.feedback_energy[0] = F.energy(z)
    tol = ENERGY_RTOL * rec.z_norm_sq[0]
    if checking:
        rec.cumulative_bound[0] = rec.z_norm_sq[0]

    c = y0.coeffs
    for n in range(1, K + 1):
        try:
            c, stats = stepper(c, refs[n].coeffs, forcing[n].coeffs)
        except NewtonDivergence as exc:
            raise NewtonDivergence(str(exc), step=n) from None
        y = SpectralField(disc, c)
        states.append(y)
        z = y - refs[n]
        zz = z.norm_sq()
        gg = (forcing[n] - ref_forcing[n]).norm_sq()
        rec.z_norm_sq[n] = zz
        rec.g_norm_sq[n] = gg
        rec.feedback_energy[n] = F.energy(z)
        rec.newton_iters[n] = stats.iterations
        if checking:
            rec.energy_lhs[n] = (1 + tau * gamma) * zz
            rec.energy_rhs[n] = rec.z_norm_sq[n - 1] + tau * gg
            rec.cumulative_bound[n] = q * (rec.cumulative_bound[n - 1] + tau * gg)
            if rec.energy_lhs[n] > rec.energy_rhs[n] + tol:
                rec.step_violations.append(n)
            if zz > rec.cumulative_bound[n] + tol:
                rec.cumulative_violations.append(n)
        if progress is not None:
            progress(n, K)

    if rec.violation_count:
        msg = (f"energy inequality violated at {rec.violation_count} step(s) "
               f"(certificate R={certificate.R:g}, measured R={R_run:g})")
        if strict and applies:
            raise EnergyInequalityViolation(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    return Trajectory(states, rec.t, forcing), rec


def _unique(fields):
    seen, out = set(), []
    for f in fields:
        if id(f) not in seen:
            seen.add(id(f))
            out.append(f)
    return out


def decay_fit(record, window=None) -> tuple[float, float]:
    """Least-squares rate of log ||z||^2 against t on ``window = (t_a, t_b)``.

    Returns ``(gamma_hat, r_squared)`` with ``gamma_hat = -slope``.
    ``record`` is a :class:`TrajectoryRecord` or a ``(t, z_norm_sq)`` pair.
    """
    if isinstance(record, TrajectoryRecord):
        t, zz = record.t, record.z_norm_sq
    else:
        t, zz = (np.asarray(a, dtype=float) for a in record)
    if window is not None:
        ta, tb = window
        mask = (t >= ta - 1e-12) & (t <= tb + 1e-12)
        t, zz = t[mask], zz[mask]
    if len(t) < 3:
        raise ValueError(f"decay window holds {len(t)} samples, need at least 3")
    if np.any(zz <= 0):
        raise ValueError("z_norm_sq must be positive on the fit window")
    logz = np.log(zz)
    slope, intercept = np.polyfit(t, logz, 1)
    ss_res = float(np.sum((logz - (slope * t + intercept)) ** 2))
    ss_tot = float(np.sum((logz - logz.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return -float(slope), r2
