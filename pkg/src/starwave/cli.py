"""``starwave <config.json> [--out DIR] [--seed U64]``

Exit status: 0 on success, 1 on invalid configuration or I/O failure,
2 when ``verify`` finds a failing invariant.
"""

from __future__ import annotations

import argparse
import csv
import math
from pathlib import Path
import sys

import numpy as np

from .config import ConfigError, RunConfig, default_k_grid, parse_config
from .dynamics import PacketSpec
from .inversion import auto_precision, mode_grid, q_from_eta_kernel, roundtrip
from .lattice import StarState, dispersion
from .scattering import (
    ContinuumParams, continuum_limit_check, fitted_order, measure_reflection,
    reflection_exact, reflection_paper_n3,
)
from . import verify as verify_mod


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _k_values(cfg: RunConfig):
    grid = cfg.k_grid or default_k_grid(cfg.model)
    return grid.values()


def cmd_dispersion(cfg: RunConfig, out: Path) -> int:
    ks = _k_values(cfg)
    write_csv(out / "dispersion.csv", ["k", "omega"], [(k, dispersion(k, cfg.model)) for k in ks])
    return 0


def _reflection_cols(refl, n_rays):
    r = complex(refl.r)
    resid = abs(r) ** 2 + (n_rays - 1) * abs(r + 1) ** 2 - 1
    return [r.real, r.imag, abs(r) ** 2, float(np.angle(refl.phase)), resid]


def cmd_reflection(cfg: RunConfig, out: Path) -> int:
    p = cfg.model
    header = ["k"]
    for tag in ("exact", "paper"):
        header += [f"{tag}_re", f"{tag}_im", f"{tag}_abs2", f"{tag}_theta", f"{tag}_unitarity_residual"]
    rows = []
    for k in _k_values(cfg):
        row = [k] + _reflection_cols(reflection_exact(k, p), p.n_rays)
        if p.n_rays == 3:
            row += _reflection_cols(reflection_paper_n3(k, p.center_mass, p.delta), 3)
        else:
            row += [math.nan] * 5  # the closed form exists for three rays only
        rows.append(row)
    write_csv(out / "reflection.csv", header, rows)
    return 0


def cmd_scatter(cfg: RunConfig, out: Path) -> int:
    p = cfg.model
    pk = cfg.packet
    rows, series = [], []
    for k0 in pk.k0:
        spec = PacketSpec(pk.ray, k0, pk.center, pk.width, pk.direction)
        res = measure_reflection(spec, p, dt=cfg.dt, n_records=50)
        exact = abs(reflection_exact(k0, p).r)
        err = abs(res.r_abs - exact)
        rel = err / exact if exact > 1e-12 else err
        rows.append((k0, exact, res.r_abs, res.t_abs, rel))
        series += [(k0, *rec) for rec in res.series]
    write_csv(out / "scatter.csv", ["k0", "R_analytic_abs", "R_measured_abs", "T_measured_abs", "rel_err"], rows)
    cents = [f"centroid_ray{j + 1}" for j in range(p.n_rays)]
    write_csv(out / "scatter_series.csv", ["k0", "t", "energy", *cents], series)
    return 0


def cmd_modes_roundtrip(cfg: RunConfig, out: Path) -> int:
    rt = cfg.roundtrip
    rng = np.random.default_rng(cfg.seed)
    rows = []
    report = []
    base = cfg.model
    if base.center_mass != 1.0:
        raise ConfigError("model.center_mass", "modes-roundtrip inverts the center_mass = 1 transform only")
    for N in rt.n_rays:
        for L in rt.ray_len:
            p = base.replace(n_rays=N, ray_len=L).unit_spacing()
            sizes = rt.grid_sizes or (L + 2, 4 * L)
            states = [StarState.random(p, rng) for _ in range(rt.states)]
            for P in sizes:
                if P < L + 2:
                    raise ValueError(f"roundtrip.grid_sizes: P={P} < L+2={L + 2}")
                worst = max(roundtrip(s, p, P, rt.precision) for s in states)
                bits = auto_precision(N, L) if rt.precision == "auto" else (
                    None if rt.precision == "double" else rt.precision)
                rows.append((N, L, P, worst, bits or 53))
                report.append(f"roundtrip N={N} L={L} P={P} precision={bits or 53} bits  max error={worst:.3e}")
                kernel = q_from_eta_kernel(mode_grid(states[0], p, P, rt.precision), N)
                report.extend(kernel.lines())
    write_csv(out / "roundtrip.csv", ["n_rays", "ray_len", "grid_size", "max_error", "precision_bits"], rows)
    (out / "modes_roundtrip_report.txt").write_text("\n".join(report) + "\n")
    return 0


def cmd_continuum(cfg: RunConfig, out: Path) -> int:
    c = cfg.continuum
    errs = continuum_limit_check(c.k, ContinuumParams(c.k1), c.deltas)
    order = fitted_order(c.deltas, errs) if len(errs) > 1 else math.nan
    write_csv(out / "continuum.csv", ["delta", "phase_error", "fitted_order"],
              [(d, e, order) for d, e in zip(c.deltas, errs)])
    return 0


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    checks = verify_mod.run_suite(cfg.seed)
    lines = [c.line() for c in checks]
    (out / "verify_report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if all(c.ok for c in checks) else 2


COMMANDS = {
    "dispersion": cmd_dispersion,
    "reflection": cmd_reflection,
    "scatter": cmd_scatter,
    "modes-roundtrip": cmd_modes_roundtrip,
    "continuum": cmd_continuum,
    "verify": cmd_verify,
}


def run(cfg: RunConfig, out: Path | None = None) -> int:
    out = Path(cfg.output if out is None else out)
    out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[cfg.command](cfg, out)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="starwave", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides the config's 'output')")
    ap.add_argument("--seed", type=int, help="64-bit seed for randomized checks")
    args = ap.parse_args(argv)
    try:
        cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed", "must fit in 64 bits")
            cfg = RunConfig(**{**cfg.__dict__, "seed": args.seed})
        return run(cfg, None if args.out is None else Path(args.out))
    except (ConfigError, ValueError, OSError) as exc:
        print(f"starwave: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
