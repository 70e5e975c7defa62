"""Command-line harness: evaluators, simulators and verification experiments.

Every subcommand prints its rows as CSV on stdout and, with ``--out DIR``,
writes ``DIR/report.json`` and ``DIR/rows.csv``.  Exit codes: 0 pass,
1 tolerance failure, 2 configuration error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import distributions as dist
from .contours import ContourConstraintError, ContourGeometryError
from .fredholm import FredholmConvergenceError, det_halfline
from .kernels import (
    FiniteNParams,
    PoleProximityError,
    RescaledKernel,
    SigmaKernel,
    SpikeParams,
    TildeBPKernel,
)
from .polymer import (
    SimConfig,
    ks_statistic,
    mc_free_energy_distribution,
    mc_laplace,
    sample_free_energies,
    scaled_config,
)
from .specfun import scaling_constants

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class NonConvergence(ArithmeticError):
    pass


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    rows: list = field(default_factory=list)
    passed: bool = True
    seed: int | None = None
    elapsed: float = 0.0
    notes: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_jsonable)

    def rows_csv(self) -> str:
        buf = io.StringIO()
        if self.rows:
            w = csv.DictWriter(buf, fieldnames=list(self.rows[0].keys()))
            w.writeheader()
            for r in self.rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
        return buf.getvalue()

    def write(self, out: str | Path) -> None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        (out / "rows.csv").write_text(self.rows_csv())


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return str(x)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# ---- argument parsing helpers ----

def parse_grid(text: str | None) -> list[float]:
    """'start:stop:step' (inclusive), a comma list, or a single number."""
    if text is None or text == "":
        return []
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"bad grid {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_ints(text) -> list[int]:
    return [int(round(x)) for x in parse_grid(text)]


def parse_points(text: str | None) -> list[tuple[complex, complex]]:
    """'w,w2;w,w2;...' with Python complex literals (e.g. -1+1j)."""
    if not text:
        return []
    out = []
    for item in text.split(";"):
        a, b = item.split(",")
        out.append((complex(a.replace(" ", "")), complex(b.replace(" ", ""))))
    return out


def spikes_from(args) -> SpikeParams:
    return SpikeParams(parse_grid(args.b), parse_grid(args.beta))


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file whose keys override the flag defaults")
    p.add_argument("--out", help="directory for report.json and rows.csv")


def _add_spikes(p: argparse.ArgumentParser):
    p.add_argument("--b", default="", help="comma list of drift spikes")
    p.add_argument("--beta", default="", help="comma list of boundary spikes")


# ---- subcommands ----

def cmd_dist(args) -> ExperimentReport:
    spikes = spikes_from(args)
    grid = parse_grid(args.r_grid)
    rep = ExperimentReport("dist", vars(args))
    for res, r in zip(dist.f_bp_table(grid, spikes, args.Y, args.order), grid):
        if not res.converged:
            raise NonConvergence(f"F at r={r} not converged (err={res.error_estimate:.2e})")
        val = res.real
        ok = -1e-7 <= val <= 1 + 1e-7
        rep.rows.append({"r": r, "F": val, "error_estimate": res.error_estimate, "tolerance": 1e-7, "pass": ok})
    vals = [row["F"] for row in rep.rows]
    monotone = all(b >= a - 1e-7 for a, b in zip(vals, vals[1:]))
    rep.passed = monotone and all(row["pass"] for row in rep.rows)
    return rep


def _sim_config(args) -> tuple[SimConfig, object]:
    spikes = spikes_from(args)
    if args.tau is not None:
        a = parse_grid(args.a) or [0.0]
        if len(a) == 1:
            a = a * args.N
        cfg = SimConfig(N=args.N, tau=args.tau, a=tuple(a), alpha=tuple(parse_grid(args.alpha)),
                        M=args.grid_M or 10 * args.N, num_samples=args.samples, seed=args.seed)
        return cfg, scaling_constants(args.tau / args.N)
    return scaled_config(args.kappa, args.N, spikes, M=args.grid_M, num_samples=args.samples, seed=args.seed)


def cmd_sim(args) -> ExperimentReport:
    cfg, sc = _sim_config(args)
    emp = mc_free_energy_distribution(cfg, sc)
    rep = ExperimentReport("sim", vars(args), seed=cfg.seed)
    q = np.quantile(emp.samples, [0.1, 0.25, 0.5, 0.75, 0.9])
    rep.rows.append({"N": cfg.N, "samples": emp.count, "mean": emp.mean(), "std": float(np.std(emp.samples)),
                     "q10": q[0], "q25": q[1], "q50": q[2], "q75": q[3], "q90": q[4]})
    if args.out:
        emp.dump(Path(args.out) / "samples.csv")
    return rep


def cmd_verify_laplace(args) -> ExperimentReport:
    sc = scaling_constants(args.tau / args.N)
    a = parse_grid(args.a) or [0.0]
    if len(a) == 1:
        a = a * args.N
    alpha = parse_grid(args.alpha) if args.alpha else [sc.theta + 0.5] * args.n
    if len(alpha) != args.n:
        raise ConfigError("--alpha must have n entries")
    us = parse_grid(args.u_grid)
    grids = [args.grid_M] + ([args.refine_M] if args.refine_M else [])
    cfg = SimConfig(N=args.N, tau=args.tau, a=tuple(a), alpha=tuple(alpha), M=args.grid_M,
                    num_samples=args.samples, seed=args.seed)
    rep = ExperimentReport("verify-laplace", vars(args), seed=args.seed)
    if not cfg.N >= 9:
        rep.notes.append("N < 9 lies outside the stated hypothesis of the determinant identity")
    F = sample_free_energies(cfg, grids)
    est, se = mc_laplace(cfg, us, M_list=grids, free_energies=F)
    for i, u in enumerate(us):
        if u == 0:
            det_val, det_err = 1.0, 0.0
        else:
            res = dist.finite_n_laplace_result(FiniteNParams(cfg.N, cfg.tau, cfg.a, cfg.alpha, u), args.varphi)
            if not res.converged:
                raise NonConvergence(f"determinant at u={u} not converged")
            det_val, det_err = res.real, res.error_estimate
        gap = abs(est[0, i] - det_val)
        tol = 3 * se[0, i] + args.allowance
        row = {"u": u, "mc": est[0, i], "mc_se": se[0, i], "det": det_val, "det_error": det_err,
               "gap": gap, "tolerance": tol, "pass": bool(gap <= tol)}
        if args.refine_M:
            gap2 = abs(est[1, i] - det_val)
            row.update({"mc_refined": est[1, i], "gap_refined": gap2, "gap_shrinks": bool(gap2 < gap)})
        rep.rows.append(row)
    rep.passed = all(r["pass"] for r in rep.rows)
    if args.refine_M and args.require_shrink:
        rep.passed = rep.passed and all(r["gap_shrinks"] for r in rep.rows)
    return rep


def cmd_verify_scaling(args) -> ExperimentReport:
    spikes = spikes_from(args)
    Ns = parse_ints(args.N_list)
    cdf = dist.TabulatedCDF(spikes)
    rep = ExperimentReport("verify-scaling", vars(args), seed=args.seed)
    for N in Ns:
        cfg, sc = scaled_config(args.kappa, N, spikes, M=None, num_samples=args.samples, seed=args.seed)
        emp = mc_free_energy_distribution(cfg, sc)
        rep.rows.append({"N": N, "M": cfg.M, "ks": ks_statistic(emp, cdf), "mean": emp.mean(),
                         "ks_max": args.ks_max})
    ks = [r["ks"] for r in rep.rows]
    if len(ks) >= 2:
        rep.passed = ks[-1] < ks[0]
        if ks[-1] >= args.ks_max:
            rep.notes.append(f"WARN: final KS {ks[-1]:.3f} above {args.ks_max}")
        if not all(b < a for a, b in zip(ks, ks[1:])):
            rep.notes.append("KS not strictly decreasing across the full list")
    return rep


def decay_bound_rows(sigma: float, spikes: SpikeParams, S: complex = 1.0, grid=None, safety: float = 2.0):
    """|K^(sigma)(x, y)| against C e^{(b_m x - beta_1 y)/sigma}, C fitted at the origin."""
    if not spikes.b or not spikes.beta:
        raise ConfigError("the decay bound needs both spike families")
    if max(spikes.beta) - min(spikes.b) >= 1:
        raise ConfigError("the decay bound assumes beta_i - b_j < 1")
    g = np.linspace(0.0, 3.0, 6) if grid is None else np.asarray(grid, dtype=float)
    K = SigmaKernel(sigma, spikes, S=S)
    A = np.abs(K.matrix(g, g))
    bound = np.exp(np.add.outer(max(spikes.b) * g, -min(spikes.beta) * g) / sigma)
    C = safety * A[0, 0]
    rows = []
    for i, x in enumerate(g):
        for j, y in enumerate(g):
            rows.append({"x": x, "y": y, "abs_kernel": A[i, j], "bound": C * bound[i, j],
                         "ratio": A[i, j] / (C * bound[i, j]), "pass": bool(A[i, j] <= C * bound[i, j])})
    return rows


def cmd_verify_sigma(args) -> ExperimentReport:
    spikes = spikes_from(args)
    sigmas = parse_grid(args.sigmas)
    r_eff, sp_eff = args.r + args.Y**2, spikes.shifted(args.Y)
    rep = ExperimentReport("verify-sigma", vars(args))
    for row in dist.sigma_limit_scan(sp_eff, r_eff, sigmas, args.order):
        rep.rows.append({"sigma": row.sigma, "det": row.value, "f_bp": row.reference, "gap": row.gap,
                         "error_estimate": row.error_estimate, "max_gap": args.max_gap})
    gaps = [r["gap"] for r in rep.rows]
    if len(gaps) >= 2:
        rep.passed = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < args.max_gap
    else:
        rep.notes.append("single sigma: no trend to assess, values reported only")
    if args.check_decay:
        sigma = sigmas[-1] if sigmas else 0.5
        decay = decay_bound_rows(sigma, spikes)
        ok = all(r["pass"] for r in decay)
        rep.notes.append(f"decay bound at sigma={sigma}: {'holds' if ok else 'violated'} on the 6x6 grid, "
                         f"max ratio {max(r['ratio'] for r in decay):.3g}")
        rep.passed = rep.passed and ok
    return rep


# pairs on the wedge -|y| + iy with |y| <= 1
DEFAULT_POINTS = "-0.5+0.5j,-0.5-0.5j;-1+1j,-0.5+0.5j;-1-1j,-1+1j;-0.5-0.5j,-1-1j;-1+1j,-1+1j"


def cmd_verify_kernel_limit(args) -> ExperimentReport:
    spikes = spikes_from(args)
    Ns = parse_ints(args.N_list)
    pts = parse_points(args.points)
    sc = scaling_constants(args.kappa)
    tk = TildeBPKernel(args.r, spikes)
    w1 = np.array([p[0] for p in pts])
    w2 = np.array([p[1] for p in pts])
    ref = np.array([tk(a, b) for a, b in zip(w1, w2)])
    gaps = {}
    rep = ExperimentReport("verify-kernel-limit", vars(args))
    for N in Ns:
        K = RescaledKernel(N, sc, args.r, spikes)
        vals = np.array([K(a, b) for a, b in zip(w1, w2)])
        gaps[N] = np.abs(vals - ref)
    for N in Ns:
        for k, (a, b) in enumerate(pts):
            row = {"N": N, "w": str(a), "w2": str(b), "gap": gaps[N][k]}
            if 8 * N in gaps:
                ratio = gaps[N][k] / gaps[8 * N][k]
                row.update({"ratio_to_8N": ratio, "pass": bool(1.6 <= ratio <= 2.4)})
            rep.rows.append(row)
    checked = [r for r in rep.rows if "pass" in r]
    rep.passed = all(r["pass"] for r in checked)
    if not checked:
        rep.notes.append("no (N, 8N) pair in the list: convergence rate not assessed")
    # decay along C_w at the smallest N
    if Ns:
        K = RescaledKernel(Ns[0], sc, args.r, spikes)
        ys = np.linspace(0.0, 20.0, 41)
        ws = -np.abs(ys) + 1j * ys + _cw_apex(spikes)  # up the upper ray of C_w
        A = np.abs(K.matrix(ws, np.array([pts[0][1]])))[:, 0]
        near = ys <= 2.0
        C = float(np.max(A[near] * np.exp(ys[near])))
        ok = bool(np.all(A[~near] <= C * np.exp(-ys[~near])))
        rep.notes.append(f"decay |K_N| <= C e^(-|Im w|) with C={C:.3g} fitted on |Im w|<=2: "
                         f"{'holds' if ok else 'violated'} up to |Im w|=20")
        rep.passed = rep.passed and ok
    return rep


def _cw_apex(spikes: SpikeParams) -> float:
    from .contours import rescaled_crossings

    return rescaled_crossings(spikes.b, spikes.beta)[0]


# ---- entry point ----

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spikedkpz", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="Borodin-Peche distribution on an r grid")
    _add_common(p)
    _add_spikes(p)
    p.add_argument("--r-grid", default="0")
    p.add_argument("--Y", type=float, default=0.0)
    p.add_argument("--order", type=int, default=64)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("sim", help="rescaled free-energy samples")
    _add_common(p)
    _add_spikes(p)
    p.add_argument("--N", type=int, default=50)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=None, help="raw time horizon (skips the scaling)")
    p.add_argument("--a", default="", help="raw drifts (with --tau)")
    p.add_argument("--alpha", default="", help="raw boundary parameters (with --tau)")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--grid-M", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("verify-laplace", help="Monte Carlo vs determinant at finite N")
    _add_common(p)
    p.add_argument("--N", type=int, default=9)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--tau", type=float, default=9.0)
    p.add_argument("--a", default="0")
    p.add_argument("--alpha", default="")
    p.add_argument("--u-grid", default="0.5,1,2")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--grid-M", type=int, default=2000)
    p.add_argument("--refine-M", type=int, default=4000)
    p.add_argument("--require-shrink", action="store_true", help="also demand smaller gaps on the refined grid")
    p.add_argument("--allowance", type=float, default=0.01)
    p.add_argument("--varphi", type=float, default=math.pi / 8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_laplace)

    p = sub.add_parser("verify-scaling", help="KS distance of free energies to the limit law")
    _add_common(p)
    _add_spikes(p)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--N-list", default="50,100,200")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--ks-max", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_scaling)

    p = sub.add_parser("verify-sigma", help="sigma -> 0 convergence of the CDRP determinant")
    _add_common(p)
    _add_spikes(p)
    p.add_argument("--sigmas", default="0.5,0.25,0.125")
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--Y", type=float, default=0.0)
    p.add_argument("--max-gap", type=float, default=5e-3)
    p.add_argument("--order", type=int, default=64)
    p.add_argument("--check-decay", action="store_true")
    p.set_defaults(func=cmd_verify_sigma)

    p = sub.add_parser("verify-kernel-limit", help="K_N against its limit kernel")
    _add_common(p)
    _add_spikes(p)
    p.add_argument("--N-list", default="1000,8000,10000,80000")
    p.add_argument("--points", default=DEFAULT_POINTS)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.set_defaults(func=cmd_verify_kernel_limit)
    return ap


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    """Turn ``--flag -2:2`` into ``--flag=-2:2`` so argparse keeps negative grids."""
    out: list[str] = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1] and len(tok) > 1
                and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str] | None) -> argparse.Namespace:
    args = parser.parse_args(_join_negative_values(sys.argv[1:] if argv is None else argv))
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        for k, v in data.items():
            key = k.replace("-", "_")
            if not hasattr(args, key):
                raise ConfigError(f"unknown config key {k!r}")
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            setattr(args, key, v)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        t0 = time.perf_counter()
        rep = args.func(args)
        rep.elapsed = time.perf_counter() - t0
        rep.config = {k: v for k, v in vars(args).items() if k != "func"}
    except (ConfigError, ContourConstraintError, ContourGeometryError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergence, FredholmConvergenceError, PoleProximityError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    sys.stdout.write(rep.rows_csv())
    for note in rep.notes:
        print(f"# {note}")
    print(f"# {rep.experiment}: {'PASS' if rep.passed else 'FAIL'} ({rep.elapsed:.2f} s)")
    if args.out:
        rep.write(args.out)
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
