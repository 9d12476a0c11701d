"""Parameter sweeps, scaling-exponent fits, and correction-profile extraction.

A sweep cell fixes (h, beta, k) with mu = h^(-beta), counts the model states
against their magnetic Weyl value, and reports the remainder next to the
reference bounds mu^(-1/2) h^(-3) and mu^2 h^(-2) (the bounds carry no
unknown constants, so acceptance works with bounded ratios, not absolute
thresholds).  Records persist incrementally as JSON lines and are rewritten
in canonical sorted order on completion, so identical configs produce
byte-identical files for any worker count and partial runs resume safely.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, InsufficientData
from .io_utils import append_jsonl, atomic_write_text, canonical_json, read_jsonl
from .parallel import pmap
from .profiles import BumpProfile
from .spectra import ModelParams, count_states, count_states_2d

__all__ = [
    "SweepConfig",
    "SweepRecord",
    "CorrectionProfile",
    "run_sweep",
    "fit_scaling",
    "extract_correction_2d",
    "necessity_experiment_a3",
    "records_from_file",
]

BOUND_SLOW = "mu^-1/2h^-3"
BOUND_FAST = "mu^2h^-2"

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass
class SweepConfig:
    """Validated sweep configuration.

    k_rule: "zero" (k = 0), "fixed" (k = k_value), or "resonant"
    (k = (2p+1) mu h with p = resonant_p, clipped to |k| <= 1 validation).
    psi1 is a smooth bump of radius psi1_radius (its x2-mass folded in);
    psi2_mass is the transverse weight mass.
    """

    h_list: list
    beta_list: list
    k_rule: str = "zero"
    k_value: float = 0.0
    resonant_p: int = 0
    psi1_radius: float = 0.45
    psi2_mass: float = 1.0
    tau: float = 0.0
    tol: float = 1e-4
    base_nodes: int = 64
    min_width_frac: float = 1e-4
    output: Optional[str] = None
    workers: Optional[int] = None

    def __post_init__(self):
        if not self.h_list:
            self.h_list = []
        for hh in self.h_list:
            if not 0.0 < hh <= 0.25:
                raise ConfigError("h_list", f"every h must lie in (0, 0.25], got {hh}")
        if self.k_rule not in ("zero", "fixed", "resonant"):
            raise ConfigError("k_rule", f"unknown rule {self.k_rule!r}")
        if self.psi1_radius <= 0:
            raise ConfigError("psi1_radius", "must be positive")
        if self.psi2_mass < 0:
            raise ConfigError("psi2_mass", "must be nonnegative")
        if self.tol <= 0:
            raise ConfigError("tol", "must be positive")
        for b in self.beta_list:
            for hh in self.h_list:
                mu = hh ** (-b)
                if mu * hh > 1.0 + 1e-12:
                    raise ConfigError(
                        "beta_list", f"mu*h = {mu * hh:.4g} exceeds 1 at h={hh}, beta={b}"
                    )

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f for f in cls.__dataclass_fields__}
        for key in d:
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
        if "h_list" not in d:
            raise ConfigError("h_list", "missing required key")
        if "beta_list" not in d:
            raise ConfigError("beta_list", "missing required key")
        return cls(**d)

    def cells(self) -> list:
        out = []
        for hh in sorted(self.h_list):
            for b in sorted(self.beta_list):
                mu = hh ** (-b)
                if self.k_rule == "zero":
                    k = 0.0
                elif self.k_rule == "fixed":
                    k = self.k_value
                else:
                    k = (2 * self.resonant_p + 1) * mu * hh
                out.append({"h": hh, "beta": b, "k": k})
        return out


@dataclass
class SweepRecord:
    """Result of one sweep cell.

    `runtime_s` is informational only and excluded from the canonical record
    files so identical configs serialize byte-identically.
    """

    mu: float
    h: float
    k: float
    beta: float
    N: float = math.nan
    EMW: float = math.nan
    remainder: float = math.nan
    bounds: dict = field(default_factory=dict)
    ratios: dict = field(default_factory=dict)
    weight_norm: float = math.nan
    quadrature_error: float = math.nan
    error: Optional[str] = None
    runtime_s: float = 0.0

    def cell_key(self) -> str:
        return canonical_json({"h": self.h, "beta": self.beta, "k": self.k})

    def to_canonical_dict(self) -> dict:
        d = asdict(self)
        d.pop("runtime_s")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepRecord":
        d = dict(d)
        d.setdefault("runtime_s", 0.0)
        return cls(**d)


def _bounds_for(mu: float, h: float) -> dict:
    return {BOUND_SLOW: mu ** -0.5 * h ** -3, BOUND_FAST: mu ** 2 * h ** -2}


def _ratios_for(remainder: float, bounds: dict, weight_norm: float) -> dict:
    w = max(weight_norm, 1e-300)
    r = abs(remainder)
    out = {key: r / (w * val) for key, val in bounds.items()}
    out["combined"] = r / (w * sum(bounds.values()))
    return out


def _run_cell(args: dict) -> dict:
    """Worker task: one sweep cell from plain dict to plain dict (picklable)."""
    cfg = SweepConfig.from_dict(args["config"])
    cell = args["cell"]
    hh, beta, k = cell["h"], cell["beta"], cell["k"]
    mu = hh ** (-beta)
    psi1 = BumpProfile(radius=cfg.psi1_radius)
    weight_norm = psi1.mass() * cfg.psi2_mass
    rec = SweepRecord(mu=mu, h=hh, k=k, beta=beta, weight_norm=weight_norm)
    start = time.perf_counter()
    try:
        prm = ModelParams(mu=mu, h=hh, k=k, tau=cfg.tau)
        rep = count_states(
            psi1,
            cfg.psi2_mass,
            prm,
            tol=cfg.tol,
            base_nodes=cfg.base_nodes,
            min_width_frac=cfg.min_width_frac,
        )
        rec.N = rep.N_count
        rec.EMW = rep.emw_integral
        rec.remainder = rep.remainder
        rec.quadrature_error = rep.quadrature_error
        rec.bounds = _bounds_for(mu, hh)
        rec.ratios = _ratios_for(rep.remainder, rec.bounds, weight_norm)
    except Exception as exc:  # cell-level failure recorded, sweep continues
        rec.error = f"{type(exc).__name__}: {exc}"
    rec.runtime_s = time.perf_counter() - start
    return rec.to_canonical_dict() | {"_runtime_s": rec.runtime_s}


def run_sweep(cfg: SweepConfig, log=None) -> list:
    """Run every (h, beta, k) cell; returns SweepRecords sorted by cell.

    With cfg.output set, records persist incrementally to `<output>` as JSON
    lines; existing records for matching cells are reused (resume), and on
    completion the file is rewritten atomically in canonical sorted order.
    """
    cells = cfg.cells()
    done: dict[str, dict] = {}
    out_path = Path(cfg.output) if cfg.output else None
    if out_path is not None and out_path.exists():
        for d in read_jsonl(out_path):
            key = canonical_json({"h": d["h"], "beta": d["beta"], "k": d["k"]})
            done[key] = d
    todo = []
    cfg_dict = {k: v for k, v in asdict(cfg).items()}
    for cell in cells:
        key = canonical_json(cell)
        if key not in done:
            todo.append({"config": cfg_dict, "cell": cell})
    results = pmap(_run_cell, todo, workers=cfg.workers)
    for res in results:
        runtime = res.pop("_runtime_s", 0.0)
        key = canonical_json({"h": res["h"], "beta": res["beta"], "k": res["k"]})
        done[key] = res
        if out_path is not None:
            append_jsonl(out_path, res)
        if log is not None:
            log(f"cell h={res['h']} beta={res['beta']} k={res['k']}: "
                f"remainder={res['remainder']:.4g} ({runtime:.1f}s)")
    ordered = [done[canonical_json(cell)] for cell in cells]
    if out_path is not None:
        atomic_write_text(out_path, "".join(canonical_json(d) + "\n" for d in ordered))
    records = [SweepRecord.from_dict(d) for d in ordered]
    return records


def records_from_file(path) -> list:
    return [SweepRecord.from_dict(d) for d in read_jsonl(path)]


def fit_scaling(records, predictor: str = "mu"):
    """Least-squares slope of log|remainder| against log(predictor).

    predictor is "mu" or "h"; the other variable is absorbed by per-group
    demeaning (fixed effects), so the slope is exact on log-linear data.
    Returns (slope, stderr).  Raises InsufficientData with fewer than three
    usable records or no predictor variation.
    """
    if predictor not in ("mu", "h"):
        raise ValueError(f"predictor must be 'mu' or 'h', got {predictor!r}")
    xs, ys, gs = [], [], []
    for r in records:
        rec = r if isinstance(r, SweepRecord) else SweepRecord.from_dict(dict(r))
        if rec.error is not None or not math.isfinite(rec.remainder) or rec.remainder == 0.0:
            continue
        x = rec.mu if predictor == "mu" else rec.h
        other = rec.h if predictor == "mu" else rec.mu
        xs.append(math.log(x))
        ys.append(math.log(abs(rec.remainder)))
        gs.append(f"{other:.12e}")
    n = len(xs)
    if n < 3:
        raise InsufficientData(f"need >= 3 records with nonzero remainder, got {n}")
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    groups = {}
    for i, g in enumerate(gs):
        groups.setdefault(g, []).append(i)
    xc = xs.copy()
    yc = ys.copy()
    for idx in groups.values():
        xc[idx] -= xs[idx].mean()
        yc[idx] -= ys[idx].mean()
    sxx = float(np.dot(xc, xc))
    if sxx <= 0.0:
        raise InsufficientData("predictor does not vary within groups")
    slope = float(np.dot(xc, yc) / sxx)
    resid = yc - slope * xc
    dof = n - len(groups) - 1
    if dof > 0:
        stderr = math.sqrt(float(np.dot(resid, resid)) / dof / sxx)
    else:
        stderr = 0.0
    return slope, stderr


@dataclass
class CorrectionProfile:
    """Normalized 2D residuals tabulated against the phase argument.

    samples: (phase argument, residual / (h^-1 hbar^(1/2))) per cell, sorted;
    empirical_g: (argument mod 1, value) table usable as the periodic profile
    input of the correction-term evaluator (scaled by (2 pi)^(3/2) sqrt(kappa)
    / (V^(1/8) phi^(1/4) sqrt(g') psi1(0))).
    """

    samples: list
    empirical_g: list
    S0: float
    kappa: float
    cells: list


def extract_correction_2d(cfg: SweepConfig, S0: float = 1.0, kappa: float = 1.0,
                          log=None) -> CorrectionProfile:
    """Residual of the 2D factor operator against its 2D magnetic Weyl value.

    For each (h, beta) cell: residual = N_I - EMW_I, normalized by
    h^-1 hbar^(1/2) with hbar = mu^(1/2) h, tabulated against the phase
    argument S0 V^(3/4) phi^(-1/2) / (2 pi hbar) at V = 1, phi = 1.
    """
    psi1 = BumpProfile(radius=cfg.psi1_radius)
    psi1_at_surface = float(psi1(0.0))
    samples = []
    cells_out = []
    for cell in cfg.cells():
        hh, beta, k = cell["h"], cell["beta"], cell["k"]
        mu = hh ** (-beta)
        prm = ModelParams(mu=mu, h=hh, k=k, tau=cfg.tau)
        start = time.perf_counter()
        N_I, emw_I, qerr, solves = count_states_2d(
            psi1, prm, tol=cfg.tol, base_nodes=cfg.base_nodes,
            min_width_frac=cfg.min_width_frac,
        )
        hbar = math.sqrt(mu) * hh
        scale = math.sqrt(hbar) / hh
        normalized = (N_I - emw_I) / scale
        phase_arg = S0 / (2.0 * math.pi * hbar)
        samples.append((phase_arg, normalized))
        cells_out.append({
            "h": hh, "beta": beta, "k": k, "mu": mu, "N_I": N_I, "EMW_I": emw_I,
            "residual": N_I - emw_I, "normalized": normalized,
            "phase_arg": phase_arg, "quadrature_error": qerr,
        })
        if log is not None:
            log(f"2d cell h={hh} beta={beta}: normalized={normalized:.4g} "
                f"({time.perf_counter() - start:.1f}s)")
    samples.sort(key=lambda t: t[0])
    g_scale = (2.0 * math.pi) ** 1.5 * math.sqrt(kappa) / psi1_at_surface
    empirical = sorted(
        ((arg % 1.0, val * g_scale) for arg, val in samples), key=lambda t: t[0]
    )
    return CorrectionProfile(samples=samples, empirical_g=empirical,
                             S0=S0, kappa=kappa, cells=cells_out)


def necessity_experiment_a3(cfg: SweepConfig, n_index: int = 1, p_index: int = 0,
                            log=None) -> dict:
    """Resonant-tilt experiment: cells where 1 = (2n+1) mu h and k = (2p+1) mu h,
    making the lowest pair threshold vanish identically on a half-line, next
    to off-resonant controls (mu h divided by the golden ratio).

    Emits remainder / (mu^2 h^-2 * weight) per cell with an identical key set
    for resonant and control cells; exploratory (the reference conjecture is
    that the resonant ratio stays bounded below).
    """
    if p_index > n_index:
        raise ConfigError("resonant_p", "need p <= n so that k <= 1")
    psi1 = BumpProfile(radius=cfg.psi1_radius)
    weight_norm = psi1.mass() * cfg.psi2_mass
    cells = []
    for hh in sorted(cfg.h_list):
        for resonant in (True, False):
            mu_h = 1.0 / (2 * n_index + 1)
            if not resonant:
                mu_h = mu_h / _GOLDEN
            mu = mu_h / hh
            if mu <= 1.0:
                continue
            k = (2 * p_index + 1) * mu_h
            prm = ModelParams(mu=mu, h=hh, k=k, tau=cfg.tau)
            start = time.perf_counter()
            try:
                rep = count_states(
                    psi1, cfg.psi2_mass, prm, tol=cfg.tol,
                    base_nodes=cfg.base_nodes, min_width_frac=cfg.min_width_frac,
                )
                entry = {
                    "h": hh, "mu": mu, "k": k, "n": n_index, "p": p_index,
                    "resonant": resonant, "N": rep.N_count, "EMW": rep.emw_integral,
                    "remainder": rep.remainder,
                    "ratio_mu2h2": abs(rep.remainder) / (mu ** 2 * hh ** -2 * weight_norm),
                    "quadrature_error": rep.quadrature_error, "error": None,
                }
            except Exception as exc:
                entry = {
                    "h": hh, "mu": mu, "k": k, "n": n_index, "p": p_index,
                    "resonant": resonant, "N": math.nan, "EMW": math.nan,
                    "remainder": math.nan, "ratio_mu2h2": math.nan,
                    "quadrature_error": math.nan,
                    "error": f"{type(exc).__name__}: {exc}",
                }
            cells.append(entry)
            if log is not None:
                log(f"a3 cell h={hh} resonant={resonant}: "
                    f"ratio={entry['ratio_mu2h2']:.4g} "
                    f"({time.perf_counter() - start:.1f}s)")
    return {
        "n": n_index,
        "p": p_index,
        "weight_norm": weight_norm,
        "cells": cells,
        "schema": sorted(cells[0].keys()) if cells else [],
    }
