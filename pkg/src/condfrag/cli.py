"""``condfrag`` command-line driver.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
non-convergence. Every output file is rewritten from scratch, so the same
config and seed give byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .energy import energy_dual, energy_single
from .fileio import provenance_line, write_text, write_wavefunction
from .fragmentation import (
    NoCrossoverError,
    barrier_sweep,
    find_crossover,
    sign_change_brackets,
    sweep_csv,
)
from .interference import (
    ExpansionError,
    ensemble_stats,
    fringe_wavenumber,
    prepare_snapshot,
    sample_run,
)
from .potential import build_potential
from .solver import solve_dual_ground, solve_single_ground

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGED = 2

COMMANDS = ("groundstate", "sweep", "crossover", "interfere")


class _Context:
    def __init__(self, cfg: RunConfig, out: Path, threads: int):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.header = provenance_line(cfg.hash)

    def write(self, name: str, body: str):
        write_text(self.out / name, self.header + body)

    def write_wf(self, name: str, psi):
        write_wavefunction(self.out / name, psi, self.cfg.hash)


def _require_even(cfg: RunConfig, what: str):
    N = cfg["condensate"]["N"]
    if N % 2:
        raise ConfigError(
            f"{what} needs an even particle number N so that N1 = N2 = N/2 (got N={N})",
            source=cfg.source,
        )


def _breakdown_row(label: str, N: int, bd) -> str:
    vals = [bd.single_particle, bd.hartree_quad, bd.exchange, bd.self_correction, bd.total, bd.total / N]
    return label + "," + ",".join(repr(float(v)) for v in vals) + "\n"


def cmd_groundstate(ctx: _Context) -> int:
    cfg = ctx.cfg
    mode = cfg["groundstate"]["mode"]
    if mode in ("dual", "both"):
        _require_even(cfg, "mode=dual")
    config = cfg.condensate()
    U = build_potential(cfg.potential_spec(), cfg.grid())
    rows = "state,single_particle,hartree_quad,exchange,self_correction,total,E_per_N\n"
    ok = True
    if mode in ("single", "both"):
        phi0, rep = solve_single_ground(config, U)
        E, bd = energy_single(config, phi0, U)
        ctx.write_wf("phi_single.wf", phi0)
        ctx.write("report_single.txt", rep.to_record() + f"E_per_N={E / config.N!r}\n")
        ctx.write("history_single.csv", rep.history_csv())
        rows += _breakdown_row("single", config.N, bd)
        ok &= rep.converged
    if mode in ("dual", "both"):
        pair, rep = solve_dual_ground(config, U)
        E, bd = energy_dual(config, pair.phi1, pair.phi2, U, check=False)
        ctx.write_wf("phi_dual_1.wf", pair.phi1)
        ctx.write_wf("phi_dual_2.wf", pair.phi2)
        ctx.write("report_dual.txt", rep.to_record() + f"E_per_N={E / config.N!r}\n")
        ctx.write("history_dual.csv", rep.history_csv())
        rows += _breakdown_row("dual", config.N, bd)
        ok &= rep.converged
    ctx.write("energy.csv", rows)
    return EXIT_OK if ok else EXIT_NONCONVERGED


def cmd_sweep(ctx: _Context) -> int:
    cfg = ctx.cfg
    _require_even(cfg, "the sweep")
    sw, cr = cfg["sweep"], cfg["crossover"]
    config, grid, width = cfg.condensate(), cfg.grid(), cfg["trap"]["barrier_width"]
    rows = barrier_sweep(
        config,
        grid,
        cfg.barrier_values(),
        barrier_width=width,
        warm_start=sw["warm_start"],
        threads=ctx.threads,
    )
    ctx.write("sweep.csv", sweep_csv(rows))
    ctx.write("delta.dat", "".join(f"{r.b!r} {r.delta!r}\n" for r in rows))
    ok = all(r.converged_s and r.converged_d for r in rows)
    finite = [r for r in rows if math.isfinite(r.b)]
    brackets = sign_change_brackets(finite)
    crossover = ctx.out / "crossover.txt"
    if not brackets:
        if crossover.exists():
            crossover.unlink()
        print("notice: E_s - E_d does not change sign over the swept barrier heights; no crossover record written")
    else:
        lo, hi = brackets[0]
        res = find_crossover(config, grid, lo.b, hi.b, barrier_width=width, tol=cr["tol"])
        ctx.write("crossover.txt", res.to_record())
    return EXIT_OK if ok else EXIT_NONCONVERGED


def cmd_crossover(ctx: _Context) -> int:
    cfg = ctx.cfg
    _require_even(cfg, "the crossover search")
    cr = cfg["crossover"]
    try:
        res = find_crossover(
            cfg.condensate(), cfg.grid(), cr["b_lo"], cr["b_hi"],
            barrier_width=cfg["trap"]["barrier_width"], tol=cr["tol"],
        )
    except NoCrossoverError as exc:
        raise ConfigError(str(exc), source=cfg.source) from None
    ctx.write("crossover.txt", res.to_record())
    return EXIT_OK


def cmd_interfere(ctx: _Context) -> int:
    cfg = ctx.cfg
    it = cfg["interference"]
    mode = it["mode"]
    config = cfg.condensate()
    if it["M"] > config.N:
        raise ConfigError(f"[interference] M: cannot detect M={it['M']} particles out of N={config.N}", source=cfg.source)
    U = build_potential(cfg.potential_spec(), cfg.grid())
    if mode == "dual":
        _require_even(cfg, "mode=dual")
        pair, rep = solve_dual_ground(config, U)
        snap = prepare_snapshot("dual", phi_l=pair.phi1, phi_r=pair.phi2, t=it["t"], overlap_target=it["overlap_target"])
        source = "dual NLSE orbitals"
    else:
        phi, rep = solve_single_ground(config, U)
        snap = prepare_snapshot("single", phi_s=phi, t=it["t"], overlap_target=it["overlap_target"])
        source = "single NLSE orbital (interacting ground state)"
    if not rep.converged:
        print(f"error: ground state did not converge ({rep.message})", file=sys.stderr)
        return EXIT_NONCONVERGED
    k = it["k"] if it["k"] is not None else fringe_wavenumber(snap)
    seeds = np.random.SeedSequence(cfg["output"]["seed"]).generate_state(it["n_runs"], dtype=np.uint64)
    M = it["M"]

    def run(seed):
        return sample_run(config, snap, M, seed=int(seed), k=k)

    if ctx.threads > 1:
        with ThreadPoolExecutor(max_workers=ctx.threads) as pool:
            runs = list(pool.map(run, seeds))
    else:
        runs = [run(s) for s in seeds]
    lines = ["run_id,seed,mode,M,theta,R_contrib\n"]
    for i, (s, r) in enumerate(zip(seeds, runs)):
        lines.append(f"{i},{int(s)},{mode},{M},{r.theta!r},{r.magnitude!r}\n")
    ctx.write("runs.csv", "".join(lines))
    if it["write_positions"]:
        for i, r in enumerate(runs):
            ctx.write(f"run_{i}.csv", "".join(f"{x!r}\n" for x in r.positions.tolist()))
    stats = ensemble_stats(
        runs,
        concentration_threshold=it["concentration_threshold"],
        uniform_factor=it["uniform_factor"],
        alpha=it["alpha"],
    )
    extra = (
        f"t={snap.t!r}\n"
        f"k={float(k)!r}\n"
        f"separation={snap.separation!r}\n"
        f"overlap={snap.metadata['overlap']!r}\n"
        f"expansion_points={snap.grid.n_points}\n"
        f"M={M}\n"
        f"low_confidence_runs={sum(r.low_confidence for r in runs)}\n"
        f"orbital_source={source}\n"
    )
    ctx.write("summary.txt", stats.to_record() + extra)
    x = snap.grid.x.tolist()
    if mode == "dual":
        dl, dr = (np.abs(snap[n].values) ** 2 for n in ("l", "r"))
        body = "x,density_l,density_r\n" + "".join(f"{a!r},{b!r},{c!r}\n" for a, b, c in zip(x, dl.tolist(), dr.tolist()))
    else:
        ds = np.abs(snap["s"].values) ** 2
        body = "x,density\n" + "".join(f"{a!r},{b!r}\n" for a, b in zip(x, ds.tolist()))
    ctx.write("snapshot.csv", body)
    return EXIT_OK


_HANDLERS = {
    "groundstate": cmd_groundstate,
    "sweep": cmd_sweep,
    "crossover": cmd_crossover,
    "interfere": cmd_interfere,
}


def _u64(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("--threads must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="condfrag", description="Single versus fragmented condensates in a 1D double well.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="path to the [section] key = value config file")
    p.add_argument("--out", help="output directory (default: [output] dir)")
    p.add_argument("--seed", type=_u64, help="override [output] seed")
    p.add_argument("--threads", type=_positive, default=1, help="worker threads for independent runs or cold-start sweeps")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_overrides(output__seed=args.seed)
        out = Path(args.out if args.out is not None else cfg["output"]["dir"])
        ctx = _Context(cfg, out, args.threads)
        return _HANDLERS[args.command](ctx)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExpansionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
