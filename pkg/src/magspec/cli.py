"""Command-line front door: field sampling, dynamics, spectra, densities,
sweeps, and report generation.

Exit codes: 0 success, 2 configuration/validation error (message names the
offending key), 1 runtime error.  Numeric output goes to files; a short human
summary goes to stdout.  File writes are atomic (temp file + rename).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dynamics, geometry, harness, spectra, weyl
from .errors import ConfigError, MagspecError
from .io_utils import atomic_write_text, canonical_json, read_jsonl
from .profiles import BumpProfile, load_profile_table

__all__ = ["main", "build_parser"]


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    atomic_write_text(path, buf.getvalue())


def _svg_line_plot(path, xs, ys, title=""):
    """Minimal static SVG polyline plot (log axes are the caller's business)."""
    W, H, M = 640, 480, 50
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) == 0:
        atomic_write_text(path, "<svg xmlns='http://www.w3.org/2000/svg'/>")
        return
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    sx = (W - 2 * M) / (x1 - x0 if x1 > x0 else 1.0)
    sy = (H - 2 * M) / (y1 - y0 if y1 > y0 else 1.0)
    pts = " ".join(
        f"{M + (x - x0) * sx:.1f},{H - M - (y - y0) * sy:.1f}" for x, y in zip(xs, ys)
    )
    svg = (
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{W}' height='{H}'>"
        f"<rect width='{W}' height='{H}' fill='white'/>"
        f"<polyline points='{pts}' fill='none' stroke='black' stroke-width='1.5'/>"
        f"<text x='{M}' y='{M - 15}' font-size='14'>{title}</text>"
        f"<text x='{M}' y='{H - 10}' font-size='11'>x: [{x0:.4g}, {x1:.4g}]  "
        f"y: [{y0:.4g}, {y1:.4g}]</text>"
        "</svg>"
    )
    atomic_write_text(path, svg)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_field(args) -> int:
    model = geometry.martinet_model(args.mu, args.h)
    k = geometry.ZoneConstants(C=args.zone_C, c=args.zone_c, eps=args.zone_eps,
                               delta=args.zone_delta)
    rows = geometry.sample_field(model, args.samples, seed=args.seed,
                                 rho=args.rho, constants=k)
    _write_csv(args.out, ["x1", "x2", "x3", "x4", "f1", "f2", "zone"], rows)
    counts = {}
    for r in rows:
        counts[r[-1]] = counts.get(r[-1], 0) + 1
    print(f"wrote {len(rows)} field samples to {args.out}")
    for name in sorted(counts):
        print(f"  {name}: {counts[name]}")
    return 0


def _cmd_dynamics(args) -> int:
    if args.kstar:
        val = dynamics.compute_k_star(args.rho)
        print(f"drift-null constant k* = {val:.6f} (rho = {args.rho})")
        return 0
    if args.adiabatic:
        mus = [float(s) for s in args.mu_list.split(",")]
        out = {}
        for mu in mus:
            out[mu] = dynamics.adiabatic_drift(mu, gamma=args.gamma, r=args.r,
                                               T=args.T, n_traj=args.n,
                                               seed=args.seed)
            print(f"mu={mu:g}: windowed |Z2|^2 drift = {out[mu]:.6g}")
        for mu in mus:
            if 2 * mu in out:
                print(f"  D({2 * mu:g})/D({mu:g}) = {out[2 * mu] / out[mu]:.3f}")
        if args.out:
            atomic_write_text(args.out, canonical_json(
                {"drift": {str(k): v for k, v in out.items()}}) + "\n")
        return 0
    if args.confinement:
        model = geometry.martinet_model(args.mu, args.h)
        ens = dynamics.sample_initial_conditions(
            args.scenario, args.gamma, args.r, args.mu, args.n, seed=args.seed)
        rep = dynamics.confinement_report(ens, model, args.gamma, args.r,
                                          args.mu, args.scenario,
                                          factor=args.factor)
        print(f"scenario ({rep.scenario}): pass fraction {rep.pass_fraction:.3f} "
              f"over T={rep.T:.3g} with factor {rep.factor}")
        if args.out:
            atomic_write_text(args.out, canonical_json({
                "scenario": rep.scenario, "T": rep.T, "n": rep.n,
                "pass_fraction": rep.pass_fraction, "factor": rep.factor,
                "passed": rep.passed,
            }) + "\n")
        return 0
    # single trajectory dump
    model = geometry.martinet_model(args.mu, args.h)
    start = dynamics.sample_initial_conditions(
        "i", args.gamma, args.r, args.mu, 1, seed=args.seed)[0]
    traj = dynamics.integrate_flow(start, model, args.T, args.tol)
    dynamics.invariant_series(traj, model)
    if args.out:
        _write_csv(args.out,
                   ["t", "x1", "x2", "x3", "x4", "xi1", "xi2", "xi3", "xi4",
                    "energy", "|Z1|^2", "|Z2|^2"],
                   traj.to_rows())
        print(f"wrote trajectory ({len(traj.times)} samples) to {args.out}")
    print(f"energy drift {traj.energy_drift:.3e} over T={args.T} at tol={args.tol}")
    return 0


def _cmd_spectrum(args) -> int:
    if args.validate_oscillator:
        grid, cutoff = spectra.oscillator_grid(args.mu, args.h, n_max=20)
        w, _ = spectra.solve_potential(
            lambda x: args.mu ** 2 * np.asarray(x) ** 2, args.h, grid,
            cutoff=cutoff, grid_tol=1e-4)
        n = np.arange(min(21, len(w)))
        exact = (2 * n + 1) * args.mu * args.h
        rel = float(np.max(np.abs(w[: len(n)] - exact) / exact))
        print(f"oscillator validation: {len(n)} levels, max relative error {rel:.3e}")
        return 0
    if args.count:
        prm = spectra.ModelParams(mu=args.mu, h=args.h, k=args.k, tau=args.tau)
        psi1 = BumpProfile(radius=args.radius)
        rep = spectra.count_states(psi1, args.psi2_mass, prm, tol=args.tol)
        print(f"N = {rep.N_count:.6g}  EMW = {rep.emw_integral:.6g}  "
              f"remainder = {rep.remainder:.6g} "
              f"(quadrature error {rep.quadrature_error:.2g})")
        if args.out:
            atomic_write_text(args.out, canonical_json(rep.to_dict()) + "\n")
        return 0
    if args.dos:
        prm = spectra.ModelParams(mu=args.mu, h=args.h, k=args.k, tau=args.tau)
        x = np.linspace(-args.radius, args.radius, args.dos_points)
        vals = spectra.local_dos_2d(x, args.tau, prm, support_radius=args.radius)
        if args.out:
            _write_csv(args.out, ["x1", "dos"], list(zip(x, vals)))
            print(f"wrote local DOS profile to {args.out}")
        else:
            print(f"local DOS at 0: {vals[len(vals) // 2]:.6g}")
        return 0
    # fiber spectrum
    prm = spectra.ModelParams(mu=args.mu, h=args.h, k=args.k, tau=args.tau)
    band = spectra.xi2_band(prm, args.radius)
    grid = spectra.default_grid(prm, band[1], cutoff=args.cutoff)
    fs = spectra.solve_fiber(args.xi2, prm, grid, args.cutoff)
    print(f"fiber xi2={args.xi2}: {len(fs.eigenvalues)} eigenvalues below "
          f"{args.cutoff} (grid N={grid.N}, L={grid.L:.3f})")
    if args.out:
        psi1 = BumpProfile(radius=args.radius)
        wts = fs.weights(psi1)
        _write_csv(args.out, ["index", "eigenvalue", "bump_weight"],
                   [(i, fs.eigenvalues[i], wts[i]) for i in range(len(fs.eigenvalues))])
        print(f"wrote fiber spectrum to {args.out}")
    return 0


def _make_g(args):
    if args.g_table:
        return load_profile_table(args.g_table, period=args.g_period)
    if args.g == "zero":
        return lambda s: 0.0
    if args.g == "one":
        return lambda s: 1.0
    if args.g == "cos":
        return lambda s: math.cos(2.0 * math.pi * s)
    raise ConfigError("g", f"unknown built-in profile {args.g!r}")


def _cmd_weyl(args) -> int:
    conv = weyl.Convention(args.convention)
    if args.density:
        inp = weyl.WeylInputs(V=args.V, f1=args.f1, f2=args.f2,
                              sqrt_g=args.sqrt_g, tau=args.tau, mu=args.mu,
                              h=args.h, convention=conv)
        if args.density == "standard":
            val = weyl.weyl_density(inp, mode=args.mode)
        else:
            val = weyl.magnetic_weyl_density(inp, mode=args.mode)
        print(f"{val:.6g}")
        return 0
    if args.correction:
        params = weyl.CorrectionParams(G=_make_g(args), S0=args.S0,
                                       kappa=args.kappa, phi=args.phi,
                                       g_prime=args.g_prime)
        val = weyl.correction_density(params, args.V, args.f2, args.mu, args.h)
        print(f"{val:.6g}")
        return 0
    if args.oscillatory:
        params = weyl.CorrectionParams(G=_make_g(args), S0=args.S0,
                                       kappa=args.kappa, phi=args.phi,
                                       g_prime=args.g_prime)
        val = weyl.oscillatory_sum(args.eps, args.hbar, params, V=args.V,
                                   phi=args.phi, f2=args.f2,
                                   sqrt_gp=math.sqrt(args.g_prime))
        print(f"{val:.6g}")
        return 0
    # 4D integral over a box around the degeneracy hypersurface
    model = geometry.martinet_model(args.mu, args.h, scalar=args.V)
    psi = _product_bump(args.radius)
    bounds = np.array([[-args.radius, args.radius]] * 4)
    val, err = weyl.magnetic_weyl_integral(model, psi, args.tau, bounds=bounds,
                                           resolution=args.resolution,
                                           convention=conv, tol=args.tol)
    print(f"{val:.6g} (error estimate {err:.2g})")
    return 0


def _product_bump(radius: float):
    bump = BumpProfile(radius=radius)

    def psi(pts):
        pts = np.atleast_2d(pts)
        out = np.ones(pts.shape[0])
        for d in range(4):
            out *= bump(pts[:, d])
        return out

    return psi


def _cmd_sweep(args) -> int:
    with open(args.config) as f:
        raw = json.load(f)
    mode = raw.pop("mode", "sweep")
    cfg = harness.SweepConfig.from_dict(raw)
    if args.out:
        cfg.output = args.out
    if args.workers is not None:
        cfg.workers = args.workers
    log = print if not args.quiet else None
    if mode == "sweep":
        records = harness.run_sweep(cfg, log=log)
        bad = [r for r in records if r.error]
        print(f"sweep complete: {len(records)} cells, {len(bad)} with errors")
        if cfg.output:
            print(f"records: {cfg.output}")
        return 0
    if mode == "correction2d":
        prof = harness.extract_correction_2d(cfg, S0=args.S0, kappa=args.kappa, log=log)
        out = args.out or "correction_profile.json"
        atomic_write_text(out, canonical_json({
            "S0": prof.S0, "kappa": prof.kappa, "samples": prof.samples,
            "empirical_g": prof.empirical_g, "cells": prof.cells,
        }) + "\n")
        print(f"correction profile ({len(prof.samples)} cells) written to {out}")
        return 0
    if mode == "a3":
        rep = harness.necessity_experiment_a3(cfg, n_index=args.n_index,
                                              p_index=args.p_index, log=log)
        out = args.out or "a3_report.json"
        atomic_write_text(out, canonical_json(rep) + "\n")
        print(f"resonant-tilt report ({len(rep['cells'])} cells) written to {out}")
        return 0
    raise ConfigError("mode", f"unknown sweep mode {mode!r}")


def _cmd_report(args) -> int:
    try:
        records = read_jsonl(args.records)
    except FileNotFoundError:
        raise ConfigError("records", f"file not found: {args.records}")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records.sort(key=lambda d: (d.get("h", 0.0), d.get("mu", 0.0)))
    header = ["h", "mu", "beta", "k", "N", "EMW", "remainder",
              "ratio_combined", "quadrature_error", "error"]
    rows = []
    for d in records:
        rows.append([
            d.get("h"), d.get("mu"), d.get("beta"), d.get("k"), d.get("N"),
            d.get("EMW"), d.get("remainder"),
            (d.get("ratios") or {}).get("combined"),
            d.get("quadrature_error"), d.get("error"),
        ])
    _write_csv(outdir / "summary.csv", header, rows)
    written = [str(outdir / "summary.csv")]

    by_h = {}
    for d in records:
        if d.get("error"):
            continue
        by_h.setdefault(d.get("h"), []).append(d)
    for hh, group in sorted(by_h.items()):
        group.sort(key=lambda d: d["mu"])
        xs = [g["mu"] for g in group]
        ys = [abs(g["remainder"]) for g in group]
        name = outdir / f"remainder_vs_mu_h{hh:g}.dat"
        atomic_write_text(name, "".join(f"{x:.12g} {y:.12g}\n" for x, y in zip(xs, ys)))
        written.append(str(name))
        if args.svg and len(xs) > 1:
            svg = outdir / f"remainder_vs_mu_h{hh:g}.svg"
            _svg_line_plot(svg, np.log10(xs), np.log10(np.maximum(ys, 1e-300)),
                           title=f"log10 |remainder| vs log10 mu at h={hh:g}")
            written.append(str(svg))

    ratio_rows = []
    for d in records:
        if d.get("error"):
            continue
        for key, val in sorted((d.get("ratios") or {}).items()):
            ratio_rows.append([d.get("h"), d.get("mu"), key, val])
    _write_csv(outdir / "ratios.csv", ["h", "mu", "bound", "ratio"], ratio_rows)
    written.append(str(outdir / "ratios.csv"))
    print(f"report: {len(records)} records -> {len(written)} files in {outdir}")
    for w in written:
        print(f"  {w}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="magspec",
        description="Desk-scale spectral asymptotics laboratory for the 4D "
                    "degenerate-field model.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("field", help="sample field intensities and zone labels")
    f.add_argument("--mu", type=float, required=True, help="field coupling mu > 1")
    f.add_argument("--h", type=float, required=True, help="Planck parameter in (0,1)")
    f.add_argument("--samples", type=int, default=1000, help="number of sample points")
    f.add_argument("--seed", type=int, default=0, help="RNG seed")
    f.add_argument("--rho", type=float, default=0.0, help="momentum scale for zone labels")
    f.add_argument("--zone-C", type=float, default=2.0, help="zone constant C")
    f.add_argument("--zone-c", type=float, default=1.0, help="zone constant c")
    f.add_argument("--zone-eps", type=float, default=0.05, help="zone constant eps")
    f.add_argument("--zone-delta", type=float, default=0.01, help="zone exponent delta")
    f.add_argument("--out", required=True, help="output CSV path")
    f.set_defaults(func=_cmd_field)

    d = sub.add_parser("dynamics", help="trajectories, ensembles, drift constants")
    d.add_argument("--kstar", action="store_true", help="compute the drift-null constant")
    d.add_argument("--rho", type=float, default=1.0, help="energy scale for k*")
    d.add_argument("--adiabatic", action="store_true",
                   help="windowed |Z2|^2 drift over an ensemble, per mu")
    d.add_argument("--mu-list", default="100,200,400",
                   help="comma-separated mu values for --adiabatic")
    d.add_argument("--confinement", action="store_true",
                   help="confinement pass fractions for a scenario ensemble")
    d.add_argument("--scenario", choices=list(dynamics.SCENARIOS), default="i",
                   help="confinement scenario")
    d.add_argument("--mu", type=float, default=100.0, help="field coupling")
    d.add_argument("--h", type=float, default=0.005, help="Planck parameter")
    d.add_argument("--gamma", type=float, default=0.1, help="initial |x1|")
    d.add_argument("--r", type=float, default=0.4, help="initial polar radius")
    d.add_argument("--n", type=int, default=50, help="ensemble size")
    d.add_argument("--T", type=float, default=1.0, help="integration time")
    d.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    d.add_argument("--factor", type=float, default=4.0, help="confinement bound factor")
    d.add_argument("--seed", type=int, default=0, help="RNG seed")
    d.add_argument("--out", default=None, help="output file (CSV or JSON)")
    d.set_defaults(func=_cmd_dynamics)

    s = sub.add_parser("spectrum", help="fiber spectra, local DOS, state counts")
    s.add_argument("--validate-oscillator", action="store_true",
                   help="harmonic-oscillator eigenvalue validation hook")
    s.add_argument("--count", action="store_true", help="weighted state count")
    s.add_argument("--dos", action="store_true", help="local density of states profile")
    s.add_argument("--mu", type=float, required=True, help="field coupling")
    s.add_argument("--h", type=float, required=True, help="Planck parameter")
    s.add_argument("--k", type=float, default=0.0, help="linear tilt")
    s.add_argument("--tau", type=float, default=0.0, help="counting level")
    s.add_argument("--xi2", type=float, default=0.0, help="fiber dual parameter")
    s.add_argument("--cutoff", type=float, default=0.0, help="fiber eigenvalue cutoff")
    s.add_argument("--radius", type=float, default=0.45, help="weight bump radius")
    s.add_argument("--psi2-mass", type=float, default=1.0, help="transverse weight mass")
    s.add_argument("--tol", type=float, default=1e-4, help="quadrature tolerance")
    s.add_argument("--dos-points", type=int, default=101, help="DOS profile points")
    s.add_argument("--out", default=None, help="output file")
    s.set_defaults(func=_cmd_spectrum)

    w = sub.add_parser("weyl", help="state densities and the correction term")
    w.add_argument("--density", choices=["standard", "magnetic"], default=None,
                   help="evaluate a pointwise density")
    w.add_argument("--correction", action="store_true",
                   help="evaluate the surface correction density")
    w.add_argument("--oscillatory", action="store_true",
                   help="evaluate the correction level sum I(eps, hbar)")
    w.add_argument("--V", type=float, default=1.0, help="scalar potential value")
    w.add_argument("--f1", type=float, default=0.0, help="small eigen-intensity")
    w.add_argument("--f2", type=float, default=1.0, help="large eigen-intensity")
    w.add_argument("--sqrt-g", type=float, default=1.0, help="volume factor sqrt(g)")
    w.add_argument("--tau", type=float, default=0.0, help="energy level")
    w.add_argument("--mu", type=float, default=2.0, help="field coupling")
    w.add_argument("--h", type=float, default=0.1, help="Planck parameter")
    w.add_argument("--mode", choices=["density", "coefficient"], default="density",
                   help="include h^-4 or return the h-free coefficient")
    w.add_argument("--convention", choices=["paper", "model"], default="paper",
                   help="effective level 2*tau+V or tau+V")
    w.add_argument("--eps", type=float, default=0.1, help="level spacing in the sum")
    w.add_argument("--hbar", type=float, default=0.01, help="effective Planck scale")
    w.add_argument("--S0", type=float, default=1.0, help="action constant")
    w.add_argument("--kappa", type=float, default=1.0, help="curvature scalar")
    w.add_argument("--phi", type=float, default=1.0, help="edge slope")
    w.add_argument("--g-prime", type=float, default=1.0, help="surface density factor")
    w.add_argument("--g", choices=["zero", "one", "cos"], default="cos",
                   help="built-in periodic profile")
    w.add_argument("--g-table", default=None, help="two-column profile table path")
    w.add_argument("--g-period", type=float, default=None, help="table period")
    w.add_argument("--radius", type=float, default=0.45, help="integral weight radius")
    w.add_argument("--resolution", type=int, default=12, help="4D grid resolution")
    w.add_argument("--tol", type=float, default=0.05, help="4D quadrature tolerance")
    w.set_defaults(func=_cmd_weyl)

    sw = sub.add_parser("sweep", help="run a configured sweep / experiment")
    sw.add_argument("--config", required=True, help="JSON config file path")
    sw.add_argument("--out", default=None, help="records output path (JSON lines)")
    sw.add_argument("--workers", type=int, default=None, help="worker budget cap")
    sw.add_argument("--quiet", action="store_true", help="suppress per-cell logging")
    sw.add_argument("--S0", type=float, default=1.0, help="action constant (correction2d)")
    sw.add_argument("--kappa", type=float, default=1.0, help="curvature scalar (correction2d)")
    sw.add_argument("--n-index", type=int, default=1, help="resonance level index (a3)")
    sw.add_argument("--p-index", type=int, default=0, help="resonant tilt index (a3)")
    sw.set_defaults(func=_cmd_sweep)

    r = sub.add_parser("report", help="summaries and plot data from stored records")
    r.add_argument("--records", required=True, help="JSON-lines record file")
    r.add_argument("--outdir", required=True, help="output directory")
    r.add_argument("--svg", action="store_true", help="also emit static SVG plots")
    r.set_defaults(func=_cmd_report)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MagspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
