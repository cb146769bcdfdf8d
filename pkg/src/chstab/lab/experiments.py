"""Experiment runner and the stabilisation-matrix preset."""
from __future__ import annotations

from dataclasses import dataclass
import csv
import logging
import math
import os
from pathlib import Path

import numpy as np

from .. import feedback
from ..dynamics import (
    ModelParams, TrajectoryRecord, decay_fit, gamma_tilde, initial_tanh,
    random_perturbation, simulate, stationary_forcing,
)
from ..gap import certify
from ..io import read_field_csv, write_field_csv, write_timeseries_csv
from ..spectral import Discretization, SpectralField
from .config import ConfigError, ExperimentConfig, config_to_text

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "CHSTAB_OUTPUT_ROOT"

FIGURE3_ROWS = [(0, 0.0), (3, 100.0), (4, 5.0), (4, 25.0), (4, 100.0)]
FIGURE3_SNAPSHOTS = (0.0, 0.005, 0.05, 0.1, 1.0)
STABILISED_RATIO = 1e-3


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


def resolve_output(path) -> Path:
    path = Path(path)
    return path if path.is_absolute() else output_root() / path


@dataclass
class RunResult:
    config: ExperimentConfig
    record: TrajectoryRecord
    z0_norm: float
    z_end_norm: float
    gamma_hat: float
    r_squared: float
    alpha_min: float
    c_star: float
    gamma_cert: float
    R: float
    snapshots: dict

    @property
    def ratio(self) -> float:
        return self.z_end_norm / self.z0_norm if self.z0_norm > 0 else math.nan

    @property
    def verdict(self) -> str:
        return "stabilised" if self.ratio <= STABILISED_RATIO else "stagnated"

    def summary_lines(self) -> list[str]:
        return [
            f"z0_norm = {self.z0_norm:.17g}",
            f"z_end_norm = {self.z_end_norm:.17g}",
            f"ratio = {self.ratio:.17g}",
            f"gamma_hat = {self.gamma_hat:.17g}",
            f"r_squared = {self.r_squared:.17g}",
            f"alpha_min = {self.alpha_min:.17g}",
            f"c_star = {self.c_star:.17g}",
            f"gamma_certificate = {self.gamma_cert:.17g}",
            f"R = {self.R:.17g}",
            f"R_run = {self.record.R_run:.17g}",
            f"energy_violations = {self.record.violation_count}",
            f"verdict = {self.verdict}",
        ]


def _load_beta(cfg: ExperimentConfig, base_dir: Path):
    if cfg.beta_file is None:
        return None
    path = Path(cfg.beta_file)
    if not path.is_absolute():
        path = base_dir / path
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read beta file {path}: {exc}") from None


def _resolve(path: str, base_dir: Path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base_dir / p


def build_run(cfg: ExperimentConfig, base_dir: Path = Path(".")):
    """Discretization, feedback, reference, forcing and initial state for ``cfg``."""
    disc = Discretization(cfg.dim, cfg.modes, cfg.grid)
    beta = _load_beta(cfg, base_dir)
    if beta is not None and cfg.feedback_kind == "weighted":
        beta = beta.ravel()
    F = feedback.build(disc, cfg.feedback_kind, cfg.M, cfg.lam, cfg.omega_fraction, beta)

    if cfg.reference == "zero":
        y_r = SpectralField.zeros(disc)
    elif cfg.reference == "constant":
        y_r = SpectralField.constant(disc, cfg.reference_value)
    else:
        y_r = read_field_csv(_resolve(cfg.reference_file, base_dir), disc)
    h_r = stationary_forcing(y_r, cfg.nu)
    h = h_r if cfg.forcing == "reference" else SpectralField.zeros(disc)

    if cfg.initial == "tanh_profile":
        y0 = initial_tanh(disc, cfg.nu)
    elif cfg.initial == "random_perturbation":
        base = y_r if cfg.initial_base == "reference" else initial_tanh(disc, cfg.nu)
        y0 = base + random_perturbation(disc, cfg.seed, cfg.amplitude)
    else:
        y0 = read_field_csv(_resolve(cfg.initial_file, base_dir), disc)
    return disc, F, y_r, h, h_r, y0


def run_experiment(cfg: ExperimentConfig, out_dir=None, base_dir: Path = Path("."),
                   fit_window=None, write=True) -> RunResult:
    """Simulate ``cfg`` and write config, time series, snapshots and summary to ``out_dir``."""
    disc, F, y_r, h, h_r, y0 = build_run(cfg, base_dir)
    params = ModelParams(cfg.nu, cfg.tau, cfg.t_end, cfg.R)
    R = cfg.R if cfg.R is not None else y_r.w1inf_norm()
    cert = certify(disc, cfg.nu, R, F)
    log.info("M=%d lambda=%g: alpha_min=%.6g C*=%.6g gamma=%.6g",
             cfg.M, cfg.lam, cert.alpha_min, cert.c_star, cert.gamma)
    traj, rec = simulate(y0, y_r, h, F, params, certificate=cert, h_r=h_r,
                         linear_solver=cfg.linear_solver)

    if fit_window is None:
        fit_window = (0.5 * cfg.t_end, cfg.t_end)
    try:
        gamma_hat, r2 = decay_fit(rec, fit_window)
    except ValueError:
        gamma_hat, r2 = math.nan, math.nan

    snapshots = {}
    for ts in cfg.snapshot_times:
        n = int(round(ts / cfg.tau))
        if 0 <= n < len(traj.states):
            snapshots[ts] = traj.states[n]

    result = RunResult(
        config=cfg, record=rec,
        z0_norm=math.sqrt(rec.z_norm_sq[0]), z_end_norm=math.sqrt(rec.z_norm_sq[-1]),
        gamma_hat=gamma_hat, r_squared=r2,
        alpha_min=cert.alpha_min, c_star=cert.c_star, gamma_cert=cert.gamma, R=R,
        snapshots=snapshots,
    )
    if write:
        out = resolve_output(out_dir if out_dir is not None else cfg.output_dir)
        write_run(result, out, F)
    return result


def write_run(result: RunResult, out: Path, F=None) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(config_to_text(result.config))
        if F is not None:
            (out / "feedback.txt").write_text(F.to_text())
        write_timeseries_csv(result.record, out / "timeseries.csv")
        if result.snapshots:
            snap_dir = out / "snapshots"
            snap_dir.mkdir(exist_ok=True)
            for ts, y in result.snapshots.items():
                write_field_csv(y, snap_dir / f"y_t{ts:g}.csv")
        (out / "summary.txt").write_text("\n".join(result.summary_lines()) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write run output in {out}: {exc.strerror}") from None


VERDICT_HEADER = ["M", "lambda", "z0_norm", "z_end_norm", "ratio", "gamma_hat",
                  "r_squared", "alpha_min", "gamma_certificate", "verdict"]


def run_figure3(out_dir, modes: int = 32, nu: float = 0.01, tau: float = 1e-3,
                t_end: float = 1.0, seed: int = 0, amplitude: float = 0.0,
                rows=FIGURE3_ROWS, linear_solver: str = "auto") -> list[RunResult]:
    """The five-row stabilisation matrix: one run per (M, lambda), y_r = 0, tanh start."""
    out = resolve_output(out_dir)
    initial = "random_perturbation" if amplitude > 0 else "tanh_profile"
    results = []
    for M, lam in rows:
        cfg = ExperimentConfig(
            dim=2, modes=modes, nu=nu, tau=tau, t_end=t_end,
            feedback_kind="pointwise", M=M, lam=float(lam),
            initial=initial, initial_base="tanh_profile", seed=seed, amplitude=amplitude,
            reference="zero", output_dir=str(out / f"M{M}_lambda{lam:g}"),
            snapshot_times=FIGURE3_SNAPSHOTS, linear_solver=linear_solver,
        ).validate()
        log.info("figure3 run M=%d lambda=%g", M, lam)
        results.append(run_experiment(cfg, out_dir=cfg.output_dir))
    write_verdicts(results, out / "verdicts.csv")
    return results


def write_verdicts(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VERDICT_HEADER)
        for r in results:
            w.writerow([
                r.config.M, f"{r.config.lam:.17g}", f"{r.z0_norm:.17g}", f"{r.z_end_norm:.17g}",
                f"{r.ratio:.17g}", f"{r.gamma_hat:.17g}", f"{r.r_squared:.17g}",
                f"{r.alpha_min:.17g}", f"{r.gamma_cert:.17g}", r.verdict,
            ])


def reference_slope(gamma: float, tau: float, t, z0_sq: float):
    """log ||z||^2 line with slope -gamma_tilde starting from ``z0_sq``."""
    gt = gamma_tilde(gamma, tau)
    t = np.asarray(t, float)
    return math.log(z0_sq) - gt * (t - t[0])
