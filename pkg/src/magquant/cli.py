"""Configuration-driven experiment runner.

Subcommands
-----------
fields verify            curl defect of the configured gauge against its field
quantize weyl|berezin    build one operator, dump it (MAGW), report norm/trace
husimi                   phase-space density of a Gaussian state, as CSV
bargmann check           isometry / projection / reproducing / Toeplitz defects
sweep rieffel|vonneumann|dirac|semiclassical|sigma|phaselemma
spectrum                 eigenvalues of a quantized symbol

Exit codes: 0 success, 1 numerical verdict failure, 2 config errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bargmann import BargmannSpace, toeplitz_op
from .berezin import CoherentFrame, berezin_op, husimi as husimi_density
from .config import ConfigError, ExperimentConfig
from .grids import BoxGrid, PhaseGrid
from .presets import make_potential, parse_field, parse_fiducial, parse_symbol
from .reporting import write_csv, write_json, write_operator
from .strictq import (
    dirac_sweep,
    phase_lemma_check,
    rieffel_sweep,
    semiclassical_sweep,
    sigma_sweep,
    sweep_grids,
    vonneumann_sweep,
)
from .phasespace import KernelFunction, inverse_partial_fourier, norm_1_inf
from .weyl import operator_norm, weyl_op
from .fields import verify_potential

_SWEEP_COLUMNS = ["axiom", "field_preset", "gauge", "fiducial", "hbar", "norm",
                  "defect", "verdict", "runtime_ms"]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magquant", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"magquant {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="path to a JSON config file")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")
        sp.add_argument("--hbar", default=None, help="comma-separated hbar override")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--format", choices=["json", "csv", "both"], default=None)

    sp = sub.add_parser("fields", help="field/potential checks")
    sp.add_argument("action", choices=["verify"])
    common(sp)

    sp = sub.add_parser("quantize", help="build and dump one operator")
    sp.add_argument("action", choices=["weyl", "berezin"])
    common(sp)

    sp = sub.add_parser("husimi", help="phase-space density CSV")
    common(sp)

    sp = sub.add_parser("bargmann", help="Bargmann-space identities")
    sp.add_argument("action", choices=["check"])
    common(sp)

    sp = sub.add_parser("sweep", help="hbar sweeps")
    sp.add_argument("action", choices=["rieffel", "vonneumann", "dirac",
                                       "semiclassical", "sigma", "phaselemma"])
    common(sp)

    sp = sub.add_parser("spectrum", help="eigenvalues of a quantized symbol")
    common(sp)
    sp.add_argument("--quantization", choices=["weyl", "berezin"], default="weyl")
    return p


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    if args.out is not None:
        cfg.out_dir = args.out
    if args.hbar is not None:
        try:
            cfg.hbar_list = [float(h) for h in args.hbar.split(",") if h]
        except ValueError as e:
            raise ConfigError(f"bad --hbar override: {e}") from e
        if not cfg.hbar_list:
            raise ConfigError("empty --hbar override")
        for h in cfg.hbar_list:
            if not (0.0 < h <= 1.0):
                raise ConfigError("every hbar must lie in (0, 1]")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.format is not None:
        cfg.format = args.format
    return cfg


def _meta(cfg: ExperimentConfig) -> dict:
    return {"config": cfg.resolved(), "version": __version__}


def _emit(cfg: ExperimentConfig, stem: str, payload: dict, rows=None, columns=None) -> None:
    out = Path(cfg.out_dir)
    if cfg.format in ("json", "both"):
        write_json(out / f"{stem}.json", payload)
    if cfg.format in ("csv", "both") and rows is not None:
        write_csv(out / f"{stem}.csv", rows, columns)


def _boxgrid(cfg: ExperimentConfig) -> BoxGrid:
    return BoxGrid(cfg.dim, cfg.box_half_width, cfg.points_per_axis)


def _cmd_fields_verify(cfg: ExperimentConfig) -> int:
    B = parse_field(cfg.field, cfg.dim)
    A = make_potential(cfg.field, cfg.gauge, cfg.dim)
    grid = _boxgrid(cfg)
    rng = np.random.default_rng(cfg.seed)
    probes = rng.uniform(-0.8 * cfg.box_half_width, 0.8 * cfg.box_half_width,
                         size=(32, cfg.dim))
    tol = cfg.tolerance("fields_verify")
    report = verify_potential(A, B, probes, tol=tol)
    payload = _meta(cfg) | {
        "check": "fields_verify",
        "max_defect": report.max_defect,
        "tol": tol,
        "passed": report.passed,
    }
    _emit(cfg, "fields_verify", payload,
          rows=[{"check": "fields_verify", "max_defect": report.max_defect,
                 "tol": tol, "verdict": "pass" if report.passed else "fail"}],
          columns=["check", "max_defect", "tol", "verdict"])
    return 0 if report.passed else 1


def _cmd_quantize(cfg: ExperimentConfig, which: str) -> int:
    hbar = float(cfg.hbar_list[0])
    grid = PhaseGrid(_boxgrid(cfg), hbar)
    A = make_potential(cfg.field, cfg.gauge, cfg.dim)
    f = parse_symbol(cfg.symbol, cfg.dim)
    if which == "weyl":
        op = weyl_op(A, hbar, f, grid)
    else:
        v = parse_fiducial(cfg.fiducial, cfg.dim)
        op = berezin_op(A, v, hbar, f, grid)
    herm = float(np.max(np.abs(op.entries - op.entries.conj().T)))
    scale = float(np.max(np.abs(op.entries)))
    payload = _meta(cfg) | {
        "quantization": which,
        "hbar": hbar,
        "norm": operator_norm(op),
        "trace": complex(op.trace()),
        "hermitian_defect": herm,
    }
    if herm <= 1e-9 * max(scale, 1.0):
        eigs = np.linalg.eigvalsh(op.action)
        payload["min_eigenvalue"] = float(eigs[0])
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_operator(out / f"operator_{which}.magw", op, hbar)
    _emit(cfg, f"quantize_{which}", payload)
    return 0


def _cmd_husimi(cfg: ExperimentConfig) -> int:
    hbar = float(cfg.hbar_list[0])
    grid = PhaseGrid(_boxgrid(cfg), hbar)
    A = make_potential(cfg.field, cfg.gauge, cfg.dim)
    v = parse_fiducial(cfg.fiducial, cfg.dim)
    # Gaussian state from the symbol preset's center/width
    name, _, rest = cfg.symbol.partition(":")
    args = [a for a in rest.split(",") if a]
    c = float(args[0]) if args else 0.0
    w = float(args[1]) if len(args) > 1 else 1.0
    pts = grid.box.points
    x0 = pts.copy()
    x0[:, 0] -= c
    u = np.exp(-np.sum(x0 ** 2, axis=1) / (2 * w ** 2)).astype(complex)
    u /= np.sqrt(np.sum(np.abs(u) ** 2) * grid.box.weight)
    H = husimi_density(A, v, hbar, u, grid)
    mass = float(np.sum(H) * grid.cell_volume)
    rows = []
    mom = grid.momentum_points
    Hf = H.reshape(grid.box.size, mom.shape[0])
    for zi in range(grid.box.size):
        for ki in range(mom.shape[0]):
            row = {}
            for d in range(cfg.dim):
                row[f"y_{d + 1}"] = pts[zi, d]
            for d in range(cfg.dim):
                row[f"eta_{d + 1}"] = mom[ki, d]
            row["H"] = float(Hf[zi, ki])
            rows.append(row)
    columns = [f"y_{d + 1}" for d in range(cfg.dim)] + \
              [f"eta_{d + 1}" for d in range(cfg.dim)] + ["H"]
    out = Path(cfg.out_dir)
    write_csv(out / "husimi.csv", rows, columns)
    write_json(out / "husimi_meta.json", _meta(cfg) | {"hbar": hbar, "total_mass": mass})
    return 0


def _cmd_bargmann_check(cfg: ExperimentConfig) -> int:
    hbar = float(cfg.hbar_list[0])
    grid = PhaseGrid(_boxgrid(cfg), hbar)
    A = make_potential(cfg.field, cfg.gauge, cfg.dim)
    v = parse_fiducial(cfg.fiducial, cfg.dim)
    f = parse_symbol(cfg.symbol, cfg.dim)
    frame = CoherentFrame(A, v, hbar, grid)
    space = BargmannSpace(frame)
    U, P = space.u_flat, space.projection
    D = grid.box.size
    tol = cfg.tolerance("bargmann")
    defects = {
        "isometry": float(np.linalg.norm(U.conj().T @ U - np.eye(D), 2)),
        "projection_idempotent": float(np.linalg.norm(P @ P - P, 2)),
        "projection_selfadjoint": float(np.linalg.norm(P - P.conj().T, 2)),
    }
    rng = np.random.default_rng(cfg.seed)
    u = rng.normal(size=D) + 1j * rng.normal(size=D)
    u /= np.sqrt(np.sum(np.abs(u) ** 2) * grid.box.weight)
    phi = U @ (u * np.sqrt(grid.box.weight))
    defects["reproducing"] = float(np.max(np.abs(P @ phi - phi)))
    T = toeplitz_op(space, f)
    Bop = berezin_op(A, v, hbar, f, grid, frame=frame)
    defects["toeplitz_identity"] = float(np.linalg.norm(
        T - U @ (Bop.action) @ U.conj().T, 2))
    passed = all(d <= tol for d in defects.values())
    payload = _meta(cfg) | {"hbar": hbar, "tol": tol, "defects": defects, "passed": passed}
    _emit(cfg, "bargmann_check", payload,
          rows=[{"check": k, "defect": val, "tol": tol,
                 "verdict": "pass" if val <= tol else "fail"} for k, val in defects.items()],
          columns=["check", "defect", "tol", "verdict"])
    return 0 if passed else 1


def _cmd_sweep(cfg: ExperimentConfig, action: str) -> int:
    labels = {"field_preset": cfg.field, "gauge": cfg.gauge, "fiducial": cfg.fiducial}
    if action == "phaselemma":
        B = parse_field(cfg.field, cfg.dim)
        rng = np.random.default_rng(cfg.seed)
        x, y, z = (rng.uniform(-1.5, 1.5, size=cfg.dim) for _ in range(3))
        a, b = (rng.uniform(-1.0, 1.0, size=cfg.dim) for _ in range(2))
        hbars = cfg.hbar_list if len(cfg.hbar_list) > 1 else [2.0 ** (-k) for k in range(2, 9)]
        t0 = time.perf_counter()
        rep = phase_lemma_check(B, x, y, z, a, b, hbars)
        dt = (time.perf_counter() - t0) * 1e3
        rows = [{"axiom": "phaselemma", **labels, "hbar": h,
                 "norm": abs(val), "defect": abs(val - rep.target),
                 "verdict": "pass" if rep.passed else "fail", "runtime_ms": dt / len(hbars)}
                for h, val in zip(rep.hbar_list, rep.values)]
        payload = _meta(cfg) | {
            "axiom": "phaselemma",
            "points": {"x": list(x), "y": list(y), "z": list(z), "a": list(a), "b": list(b)},
            "limit": complex(rep.limit), "target": rep.target,
            "tol": rep.tol, "passed": rep.passed,
            "records": rows,
        }
        _emit(cfg, "sweep_phaselemma", payload, rows=rows, columns=_SWEEP_COLUMNS)
        return 0 if rep.passed else 1

    B = parse_field(cfg.field, cfg.dim)
    A = make_potential(cfg.field, cfg.gauge, cfg.dim)
    v = parse_fiducial(cfg.fiducial, cfg.dim)
    f = parse_symbol(cfg.symbol, cfg.dim)
    g = parse_symbol(cfg.symbol2, cfg.dim)
    grids = sweep_grids(cfg.dim, cfg.box_half_width, cfg.points_per_axis, cfg.hbar_list)
    if action == "rieffel":
        report = rieffel_sweep(A, B, v, f, cfg.hbar_list, grids, **labels)
    elif action == "vonneumann":
        report = vonneumann_sweep(A, B, v, f, g, cfg.hbar_list, grids, **labels)
    elif action == "dirac":
        report = dirac_sweep(A, B, v, f, g, cfg.hbar_list, grids, **labels)
    elif action == "semiclassical":
        report = semiclassical_sweep(A, B, v, f, cfg.hbar_list, grids, **labels)
    elif action == "sigma":
        grid0 = grids[max(cfg.hbar_list)]
        F = inverse_partial_fourier(f, grid0)
        report = sigma_sweep(B, v, F, cfg.hbar_list, grids, **labels)
    else:
        raise ConfigError(f"unknown sweep {action!r}")
    rows = report.rows()
    payload = _meta(cfg) | {
        "axiom": report.axiom,
        "rule": report.rule,
        "verdict": "pass" if report.verdict else "fail",
        "records": rows,
    }
    _emit(cfg, f"sweep_{action}", payload, rows=rows, columns=_SWEEP_COLUMNS)
    return 0 if report.verdict else 1


def _cmd_spectrum(cfg: ExperimentConfig, quantization: str) -> int:
    hbar = float(cfg.hbar_list[0])
    grid = PhaseGrid(_boxgrid(cfg), hbar)
    A = make_potential(cfg.field, cfg.gauge, cfg.dim)
    f = parse_symbol(cfg.symbol, cfg.dim)
    if quantization == "weyl":
        op = weyl_op(A, hbar, f, grid)
    else:
        v = parse_fiducial(cfg.fiducial, cfg.dim)
        op = berezin_op(A, v, hbar, f, grid)
    herm = float(np.max(np.abs(op.entries - op.entries.conj().T)))
    scale = float(np.max(np.abs(op.entries)))
    if herm <= 1e-8 * max(scale, 1.0):
        eigs = np.linalg.eigvalsh(0.5 * (op.action + op.action.conj().T))
        eigs = [float(e) for e in eigs]
    else:
        eigs = sorted(np.linalg.eigvals(op.action), key=lambda e: e.real)
        eigs = [complex(e) for e in eigs]
    payload = _meta(cfg) | {"quantization": quantization, "hbar": hbar,
                            "hermitian_defect": herm, "eigenvalues": eigs}
    rows = [{"index": i, "eigenvalue": e if isinstance(e, float) else e.real}
            for i, e in enumerate(eigs)]
    _emit(cfg, f"spectrum_{quantization}", payload, rows=rows, columns=["index", "eigenvalue"])
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        if args.command == "fields":
            return _cmd_fields_verify(cfg)
        if args.command == "quantize":
            return _cmd_quantize(cfg, args.action)
        if args.command == "husimi":
            return _cmd_husimi(cfg)
        if args.command == "bargmann":
            return _cmd_bargmann_check(cfg)
        if args.command == "sweep":
            return _cmd_sweep(cfg, args.action)
        if args.command == "spectrum":
            return _cmd_spectrum(cfg, args.quantization)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
