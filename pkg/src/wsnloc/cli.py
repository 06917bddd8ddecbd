"""Command-line entry point for the experiment harness.

Subcommands: fig2 (banded-inversion error sweep), localize (Monte Carlo
localization), scan (scan-statistic study), relabel (vertex relabeling
utility), rgg (random geometric graph sampler).

Every value can come from a config file (one [section] per subcommand,
key = value lines) and be overridden by a flag; flags win. All randomness
flows from one --seed with a fixed default, so runs are deterministic.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import sim
from .banded import bandwidth
from .errors import WsnlocError
from .graph import (
    Realization,
    RggConfig,
    apply_permutation,
    build_geometric_graph,
    graph_bandwidth,
    load_positions,
    phi_max,
    sample_rgg,
    save_edges,
    save_positions,
    vertex_relabel,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

DEFAULT_SEED = 42

DEFAULTS = {
    "fig2": {
        "n": 500,
        "trials": 3,
        "bandwidths": "5,10,25",
        "l_max": 50,
        "seed": DEFAULT_SEED,
    },
    "localize": {
        "n_agents": 30,
        "beacons": 8,
        "side": 40.0,
        "radius": 15.0,
        "sigma_p": 0.02,
        "sigma_q": 2.0,
        "sigma_r": 10.0,
        "init_var": 5.0,
        "band": 20,
        "timesteps": 100,
        "trials": 200,
        "rate": 0.0,
        "motion": "stationary",
        "level": 20.0,
        "jobs": 1,
        "positions": "",
        "algo": "all",
        "no_vr": False,
        "seed": DEFAULT_SEED,
    },
    "scan": {
        "lambdas": "0.005,0.01,0.02,0.05,0.1",
        "sides": "40",
        "radius": 15.0,
        "trials": 500,
        "seed": DEFAULT_SEED,
    },
    "relabel": {
        "radius": 15.0,
    },
    "rgg": {
        "rate": 0.05,
        "side": 40.0,
        "radius": 15.0,
        "seed": DEFAULT_SEED,
    },
}


def _float_list(text):
    return [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]


def _int_list(text):
    return [int(v) for v in str(text).replace(" ", "").split(",") if v != ""]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="wsnloc",
        description="Banded-covariance EKF localization experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="INI-style config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="master RNG seed")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("fig2", help="banded-inversion error sweep")
    common(p)
    p.add_argument("--n", type=int, help="matrix dimension")
    p.add_argument("--trials", type=int)
    p.add_argument("--bandwidths", help="comma list of input bandwidths")
    p.add_argument("--l-max", dest="l_max", type=int,
                   help="sweep L from 0 to this value")

    p = sub.add_parser("localize", help="localization Monte Carlo")
    common(p)
    p.add_argument("--n-agents", dest="n_agents", type=int)
    p.add_argument("--rate", type=float, help="sample agents from a Poisson "
                   "process at this rate instead of a fixed count")
    p.add_argument("--beacons", type=int)
    p.add_argument("--side", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--sigma-p", dest="sigma_p", type=float)
    p.add_argument("--sigma-q", dest="sigma_q", type=float)
    p.add_argument("--sigma-r", dest="sigma_r", type=float)
    p.add_argument("--init-var", dest="init_var", type=float)
    p.add_argument("--band", type=int, help="band parameter L")
    p.add_argument("--timesteps", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--motion", choices=["stationary", "constant-velocity"])
    p.add_argument("--level", type=float, help="covariance ellipse level set")
    p.add_argument("--jobs", type=int, help="parallel trial workers")
    p.add_argument("--positions", help="explicit position CSV")
    p.add_argument("--algo", help="comma list: ekf,lbekf_vr,lbekf_novr or all")
    p.add_argument("--no-vr", dest="no_vr", action="store_true",
                   help="drop the relabeled variant")

    p = sub.add_parser("scan", help="scan-statistic study")
    common(p)
    p.add_argument("--lambdas", help="comma list of Poisson rates")
    p.add_argument("--sides", help="comma list of domain side lengths")
    p.add_argument("--radius", type=float)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("relabel", help="relabel a position file")
    common(p)
    p.add_argument("positions", help="position CSV (id,x,y[,z])")
    p.add_argument("--radius", type=float)

    p = sub.add_parser("rgg", help="sample a random geometric graph")
    common(p)
    p.add_argument("--rate", "--lambda", dest="rate", type=float)
    p.add_argument("--side", type=float)
    p.add_argument("--radius", type=float)

    return parser


def _resolve(args):
    """Merge built-in defaults, the config file section, then explicit flags."""
    cmd = args.subcommand
    cfg = dict(DEFAULTS[cmd])
    if args.config:
        ini = configparser.ConfigParser()
        read = ini.read(args.config)
        if not read:
            raise ValueError(f"config file not found: {args.config}")
        if ini.has_section(cmd):
            for key, val in ini.items(cmd):
                key = key.replace("-", "_")
                if key not in cfg and key not in ("out",):
                    raise ValueError(f"unknown config key [{cmd}] {key}")
                if key in cfg and isinstance(cfg[key], bool):
                    val = ini.getboolean(cmd, key)
                elif key in cfg and isinstance(cfg[key], int):
                    val = int(val)
                elif key in cfg and isinstance(cfg[key], float):
                    val = float(val)
                cfg[key] = val
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            cfg[key] = flag
    return cfg


def _prepare_out(args):
    out = Path(args.out)
    if not out.is_dir():
        raise ValueError(f"output directory does not exist: {out}")
    return out


def _write_meta(out, subcommand, cfg, elapsed):
    meta = {
        "subcommand": subcommand,
        "config": {k: v for k, v in sorted(cfg.items())},
        "seed": cfg.get("seed"),
        "artifact_version": __version__,
        "wall_time_s": elapsed,
    }
    with open(out / "run_meta.json", "w") as f:
        json.dump(meta, f, indent=2, default=str)
        f.write("\n")


def cmd_fig2(args):
    cfg = _resolve(args)
    out = _prepare_out(args)
    start = time.monotonic()
    records = sim.run_fig2(
        n=int(cfg["n"]),
        input_bandwidths=_int_list(cfg["bandwidths"]),
        L_values=tuple(range(0, int(cfg["l_max"]) + 1)),
        trials=int(cfg["trials"]),
        seed=int(cfg["seed"]),
    )
    sim.write_fig2_csv(out / "fig2.csv", records)
    _write_meta(out, "fig2", cfg, time.monotonic() - start)
    if args.verbose:
        print(f"wrote {out / 'fig2.csv'} ({len(records)} rows)")
    return EXIT_OK


def _algorithms(cfg):
    if cfg["algo"] in ("all", "", None):
        algos = list(sim.ALL_ALGORITHMS)
    else:
        algos = [a.strip() for a in str(cfg["algo"]).split(",") if a.strip()]
    if cfg["no_vr"] and sim.ALGO_LBEKF_VR in algos:
        algos.remove(sim.ALGO_LBEKF_VR)
    return tuple(algos)


def cmd_localize(args):
    cfg = _resolve(args)
    out = _prepare_out(args)
    start = time.monotonic()
    scenario_cfg = sim.ScenarioConfig(
        side=float(cfg["side"]),
        n_agents=int(cfg["n_agents"]),
        rate=float(cfg["rate"]) or None,
        positions_path=cfg["positions"] or None,
        n_beacons=int(cfg["beacons"]),
        radius=float(cfg["radius"]),
        sigma_p=float(cfg["sigma_p"]),
        sigma_q=float(cfg["sigma_q"]),
        sigma_r=float(cfg["sigma_r"]),
        init_var=float(cfg["init_var"]),
        L=int(cfg["band"]),
        timesteps=int(cfg["timesteps"]),
        trials=int(cfg["trials"]),
        motion=cfg["motion"],
        seed=int(cfg["seed"]),
        algorithms=_algorithms(cfg),
    )
    _, results = sim.run_localization(scenario_cfg, jobs=int(cfg["jobs"]))
    sim.write_mse_csv(out / "mse.csv", results)
    sim.write_mse_total_csv(out / "mse_total.csv", results)
    ellipses = {}
    for algo, records in results.items():
        rep = next((r for r in records if not r.diverged), None)
        if rep is not None:
            ellipses[algo] = sim.ellipse_rows_from_record(
                rep, level=float(cfg["level"])
            )
    sim.write_ellipses_csv(out / "ellipses.csv", ellipses)
    _write_meta(out, "localize", cfg, time.monotonic() - start)
    for algo in sorted(results):
        n_div = sum(1 for r in results[algo] if r.diverged)
        print(f"{algo}: {len(results[algo])} trials, {n_div} diverged")
    return EXIT_OK


def cmd_scan(args):
    cfg = _resolve(args)
    out = _prepare_out(args)
    if int(cfg["trials"]) < 1:
        raise ValueError("trials must be >= 1")
    start = time.monotonic()
    records = sim.run_scan(
        lambdas=_float_list(cfg["lambdas"]),
        sides=_float_list(cfg["sides"]),
        r=float(cfg["radius"]),
        trials=int(cfg["trials"]),
        seed=int(cfg["seed"]),
    )
    sim.write_scan_csv(out / "scan.csv", records)
    _write_meta(out, "scan", cfg, time.monotonic() - start)
    if args.verbose:
        print(f"wrote {out / 'scan.csv'} ({len(records)} rows)")
    return EXIT_OK


def cmd_relabel(args):
    cfg = _resolve(args)
    out = _prepare_out(args)
    start = time.monotonic()
    positions = load_positions(args.positions)
    real = Realization(positions, float(cfg["radius"]))
    graph = build_geometric_graph(real)
    perm = vertex_relabel(real)
    relabeled, _ = apply_permutation(graph, real, perm)
    with open(out / "permutation.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["old_id", "new_id"])
        for old, new in enumerate(perm.map):
            w.writerow([old, int(new)])
    cfg["positions"] = args.positions
    _write_meta(out, "relabel", cfg, time.monotonic() - start)
    print(f"original bandwidth: {graph_bandwidth(graph)}")
    print(f"relabeled bandwidth: {graph_bandwidth(relabeled)}")
    print(f"phi_max: {phi_max(real)}")
    return EXIT_OK


def cmd_rgg(args):
    cfg = _resolve(args)
    out = _prepare_out(args)
    start = time.monotonic()
    rgg_cfg = RggConfig(
        side_lengths=(float(cfg["side"]), float(cfg["side"])),
        rate=float(cfg["rate"]),
        radius=float(cfg["radius"]),
        seed=int(cfg["seed"]),
    )
    graph, real = sample_rgg(rgg_cfg)
    positions = real.positions if real is not None else np.zeros((0, 2))
    save_positions(out / "positions.csv", positions)
    save_edges(out / "edges.csv", graph)
    _write_meta(out, "rgg", cfg, time.monotonic() - start)
    print(f"sampled {graph.n_vertices} agents, {graph.n_edges} edges")
    return EXIT_OK


_COMMANDS = {
    "fig2": cmd_fig2,
    "localize": cmd_localize,
    "scan": cmd_scan,
    "relabel": cmd_relabel,
    "rgg": cmd_rgg,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_CONFIG
    try:
        return _COMMANDS[args.subcommand](args)
    except (ValueError, OSError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WsnlocError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
