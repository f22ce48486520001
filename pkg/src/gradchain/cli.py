"""Command-line interface.

Subcommands mirror the experiment suite:

  gibbs-table    tabulate (G, r, u) over a (tau, beta) grid as CSV
  simulate       microscopic chain run; CSV per observable + JSON summary
  pde            macroscopic solve; (t, x, r, tau) snapshots + ledger
  ness           stationary-state transition with work/heat comparison
  quasistatic    dissipation sweep over the epsilon list
  contraction    uniqueness diagnostic on random initial pairs
  hypoco-scan    Gaussian entropy/Fisher bound scan over n
  hydro-compare  empirical strain vs macroscopic solution over n
  local-eq       local-equilibrium site checks

Every run takes a JSON config (defaults apply when omitted); any key can be
overridden with repeated ``--set dotted.key=value`` flags.  Outputs land in
--out as CSV tables plus summary.json with the config hash and versions.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from gradchain import gibbs, harness, microsim, pde
from gradchain.potentials import make_potential


def _parse_set(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = val
    return out


def _config(args):
    cfg = harness.load_config(args.config)
    overrides = _parse_set(getattr(args, "set", None))
    if overrides:
        cfg = _deep(cfg, overrides)
    return cfg


def _deep(base, over):
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep(out[k], v)
        else:
            out[k] = v
    return out


def cmd_gibbs_table(args):
    pot = make_potential(args.potential, **json.loads(args.params))
    betas = np.linspace(args.beta_min, args.beta_max, args.beta_points)
    table = gibbs.build_table(
        pot, betas, args.tau_min, args.tau_max, n_tau=args.tau_points, margin=1.0
    )
    if args.out == "-":
        sys.stdout.write(table.to_csv_string())
    else:
        table.to_csv(args.out)
        print(f"wrote {args.out}")
    return 0


def _stat_rows(times, arr3, alive):
    """(S, R, n) site data -> rows (t, site, mean, se)."""
    rows = []
    for s, t in enumerate(times):
        vals = arr3[s][alive]
        mean = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / np.sqrt(vals.shape[0])
        for i in range(vals.shape[1]):
            rows.append([t, i + 1, mean[i], se[i]])
    return rows


def cmd_simulate(args):
    cfg = _config(args)
    pot = harness.build_potential(cfg)
    profile = harness.build_profile(cfg)
    mic = cfg["micro"]
    sched = harness.build_schedule(cfg)
    sim = microsim.SimConfig(
        pot=pot,
        profile=profile,
        schedule=sched,
        n=mic["n"],
        replicas=mic["replicas"],
        seed=mic["seed"],
        horizon=mic["horizon"],
        c_delta=mic["c_delta"],
        gamma=cfg["gamma"],
        init_tau=sched.tau0,
        snapshots=tuple(mic["snapshots"]),
        pairing_functions=harness.test_functions(cfg["hydro"]["K"]),
        collect_sites=True,
    )
    res = microsim.simulate(sim)
    alive = res.alive
    tables = {}
    rows = []
    for s, t in enumerate(res.times):
        for k in range(res.pairings.shape[1]):
            vals = res.pairings[s, k][alive]
            rows.append(
                [t, k, vals.mean(), vals.std(ddof=1) / np.sqrt(vals.size)]
            )
    tables["pairings"] = (["t", "testfn", "replica_mean", "se"], rows)
    tables["site_tension"] = (
        ["t", "site", "replica_mean", "se"],
        _stat_rows(res.times, res.site_tension, alive),
    )
    tables["site_kinetic"] = (
        ["t", "site", "replica_mean", "se"],
        _stat_rows(res.times, res.site_kinetic, alive),
    )
    led = res.ledger
    report = {
        "W_mean": float(led.W[alive].mean()),
        "Q_mean": float(led.Q[alive].mean()),
        "U_end_mean": float(res.U_end[alive].mean()),
        "first_principle_max_residual": float(
            res.first_principle_residual()[alive].max()
        ),
        "blown": int((~alive).sum()),
        "failures": res.failures,
    }
    path = harness.emit(report, cfg, args.out, "simulate", tables)
    print(f"wrote {path}")
    return 0


def cmd_pde(args):
    cfg = _config(args)
    thermo = harness.build_thermo(cfg, cfg["pde"]["M"])
    sched = harness.build_schedule(cfg)
    t_end = cfg["pde"]["t_end"]
    snaps = np.linspace(0, t_end, 6)[1:]
    res = pde.integrate(
        pde.stationary_field(sched.tau0, thermo),
        sched,
        t_end,
        thermo,
        gamma=cfg["gamma"],
        cfl=cfg["pde"]["cfl"],
        snapshot_times=snaps,
        n_test_functions=cfg["hydro"]["K"],
    )
    rows = []
    for t, r, tau in res.snapshots:
        for x, rr, tt in zip(res.field.x, r, tau):
            rows.append([t, x, rr, tt])
    led = res.ledger
    report = {
        "W": led.W,
        "D": led.D,
        "dF": led.dF,
        "dU": led.dU,
        "Q": led.Q,
        "identity_residual": led.identity_residual,
        "regularity_monitor": pde.regularity_monitor(led),
        "weak_residual_max": float(np.max(led.weak_residuals)),
    }
    path = harness.emit(
        report, cfg, args.out, "pde", {"snapshots": (["t", "x", "r", "tau"], rows)}
    )
    print(f"wrote {path}")
    return 0


def cmd_ness(args):
    cfg = _config(args)
    report = harness.ness_transition(cfg)
    path = harness.emit(report, cfg, args.out, "ness")
    print(f"wrote {path}")
    return 0 if all(report["verdicts"].values()) else 1


def cmd_quasistatic(args):
    cfg = _config(args)
    report = harness.quasistatic_suite(cfg)
    rows = [
        [r["eps"], r["W"], r["D"], r["sup_tau_deviation"]] for r in report["runs"]
    ]
    path = harness.emit(
        report, cfg, args.out, "quasistatic",
        {"sweep": (["eps", "W", "D", "sup_tau_dev"], rows)},
    )
    print(f"wrote {path}")
    return 0 if all(report["verdicts"].values()) else 1


def cmd_contraction(args):
    cfg = _config(args)
    report = harness.contraction_sweep(cfg, seed=args.seed)
    path = harness.emit(report, cfg, args.out, "contraction")
    print(f"wrote {path}")
    return 0 if all(report["verdicts"].values()) else 1


def cmd_hypoco_scan(args):
    cfg = _config(args)
    report = harness.hypoco_scan(cfg)
    rows = []
    for row in report["series"]:
        n = row["n"]
        for t, H, Dp, Dr, In in zip(
            row["times"], row["H"], row["Dp"], row["Dp_tilde"], row["I_n"]
        ):
            rows.append([n, t, H, Dp, Dr, In])
    path = harness.emit(
        report, cfg, args.out, "hypoco-scan",
        {"scan": (["n", "t", "H_n", "Dp", "Dp_tilde", "I_n"], rows)},
    )
    print(f"wrote {path}")
    return 0 if all(report["verdicts"].values()) else 1


def cmd_hydro_compare(args):
    cfg = _config(args)
    report = harness.hydro_compare(cfg)
    rows = list(
        zip(report.n_list, report.err, report.err_se, report.err_of_mean)
    )
    path = harness.emit(
        report.to_dict(), cfg, args.out, "hydro-compare",
        {"convergence": (["n", "err", "se", "err_of_mean"], rows)},
    )
    print(f"wrote {path}")
    return 0 if all(report.verdicts().values()) else 1


def cmd_local_eq(args):
    cfg = _config(args)
    report = harness.local_equilibrium_check(cfg)
    rows = []
    for name in ("stationary_tension", "stationary_kinetic", "transition_tension"):
        blk = report[name]
        tgt = blk["target"]
        for j, x in enumerate(report["x"]):
            tgt_j = tgt if np.isscalar(tgt) else tgt[j]
            rows.append([name, x, blk["mean"][j], blk["se"][j], tgt_j, blk["z"][j]])
    path = harness.emit(
        report, cfg, args.out, "local-eq",
        {"site_checks": (["observable", "x", "mean", "se", "target", "z"], rows)},
    )
    print(f"wrote {path}")
    return 0 if all(report["verdicts"].values()) else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="gradchain",
        description="Oscillator chain in a thermal gradient: simulation and "
        "verification suite.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (defaults if omitted)")
        p.add_argument("--out", default="runs/latest", help="output directory")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override a config key, e.g. --set micro.n=32",
        )

    p = sub.add_parser("gibbs-table", help="tabulate the Gibbs thermostatics")
    p.add_argument("--potential", default="harmonic-cosine")
    p.add_argument("--params", default="{}", help="JSON family parameters")
    p.add_argument("--tau-min", type=float, default=-1.0)
    p.add_argument("--tau-max", type=float, default=1.0)
    p.add_argument("--tau-points", type=int, default=41)
    p.add_argument("--beta-min", type=float, default=0.5)
    p.add_argument("--beta-max", type=float, default=2.0)
    p.add_argument("--beta-points", type=int, default=16)
    p.add_argument("--out", default="-", help="CSV path or - for stdout")
    p.set_defaults(func=cmd_gibbs_table)

    for name, fn, doc in [
        ("simulate", cmd_simulate, "microscopic chain run"),
        ("pde", cmd_pde, "macroscopic strain-diffusion solve"),
        ("ness", cmd_ness, "stationary-state transition ledger"),
        ("quasistatic", cmd_quasistatic, "quasi-static dissipation sweep"),
        ("contraction", cmd_contraction, "uniqueness contraction diagnostic"),
        ("hypoco-scan", cmd_hypoco_scan, "entropy/Fisher bound scan"),
        ("hydro-compare", cmd_hydro_compare, "hydrodynamic limit convergence"),
        ("local-eq", cmd_local_eq, "local equilibrium site checks"),
    ]:
        p = sub.add_parser(name, help=doc)
        common(p)
        if name == "contraction":
            p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=fn)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
