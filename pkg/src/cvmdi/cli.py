"""Command-line entry point ``cvmdi``.

Exit codes: 0 success, 1 failed Monte-Carlo verdict, 2 domain/model error,
3 infeasible finder.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import decoy as decoy_mod
from . import finders, mcsim
from .channel import LinkBudget, optimal_gain
from .errors import CVMDIError, InfeasibleError
from .modulation import Kind, ModulationScheme, source_covariance
from .output import emit, fmt_float
from .scenario import DM_VMOD, GM_VMOD, SWEEP_COLUMNS, Scenario, SweepSpec, run_scenario, sweep

log = logging.getLogger("cvmdi")

EXIT_OK, EXIT_FAIL, EXIT_DOMAIN, EXIT_INFEASIBLE = 0, 1, 2, 3

VM_SCAN_DISTANCES = (15.0, 20.0, 25.0, 30.0)
DISTANCE_SCAN_EPS = (0.002, 0.003)


def _add_scenario_args(p):
    g = p.add_argument_group("scenario (flags override --config)")
    g.add_argument("--config", type=Path, help="JSON scenario document")
    g.add_argument("--scheme", choices=[k.value for k in Kind])
    g.add_argument("--vmod", type=float, help="modulation variance V_M (SNU)")
    g.add_argument("--lac", type=float, help="Alice-Charlie length (km)")
    g.add_argument("--lbc", type=float, help="Bob-Charlie length (km)")
    g.add_argument("--loss", type=float, help="fibre loss (dB/km)")
    g.add_argument("--eps-a", type=float)
    g.add_argument("--eps-b", type=float)
    g.add_argument("--beta", type=float, help="reconciliation efficiency")
    g.add_argument("--eta-hom", type=float)
    g.add_argument("--v-el", type=float)
    g.add_argument("--label", type=str)


def _load_config(path):
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def scenario_from_args(args, config=None):
    config = _load_config(args.config) if config is None else config
    s = Scenario.from_dict(config)
    scheme = s.scheme
    if args.scheme is not None or args.vmod is not None:
        scheme = ModulationScheme(args.scheme or scheme.kind, scheme.v_mod if args.vmod is None else args.vmod)
    link_kw = {k: v for k, v in (("l_ac", args.lac), ("l_bc", args.lbc), ("loss_db_per_km", args.loss),
                                 ("eps_a", args.eps_a), ("eps_b", args.eps_b)) if v is not None}
    det_kw = {k: v for k, v in (("eta_hom", args.eta_hom), ("v_el", args.v_el)) if v is not None}
    return Scenario(
        scheme=scheme,
        link=dataclasses.replace(s.link, **link_kw),
        detector=dataclasses.replace(s.detector, **det_kw),
        beta=s.beta if args.beta is None else args.beta,
        label=s.label if args.label is None else args.label,
    )


def _write(data: bytes, out):
    if out is None or str(out) == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_bytes(data)


def cmd_keyrate(args):
    s = scenario_from_args(args)
    rep = run_scenario(s)
    if args.json:
        _write(emit(rep, "json"), args.out)
        return EXIT_OK
    k1, k2, k3 = rep.kappa
    lines = [
        f"scheme      {s.scheme.kind.value}  V_M={fmt_float(s.scheme.v_mod)}",
        f"links       L_AC={fmt_float(s.link.l_ac)} km  L_BC={fmt_float(s.link.l_bc)} km",
        f"I_AB        {fmt_float(rep.i_ab)}",
        f"kappa       {fmt_float(k1)} {fmt_float(k2)} {fmt_float(k3)}",
        f"chi_BE      {fmt_float(rep.chi_be)}",
        f"K           {fmt_float(rep.key_rate)}",
        f"PLOB        {fmt_float(rep.plob)}",
    ]
    _write(("\n".join(lines) + "\n").encode(), args.out)
    return EXIT_OK


def cmd_sweep(args):
    config = _load_config(args.config)
    base = scenario_from_args(args, config)
    sw = config.get("sweep", {})
    spec = SweepSpec(
        variable=args.var or sw.get("variable", "distance"),
        lo=args.lo if args.lo is not None else sw.get("lo", 0.0),
        hi=args.hi if args.hi is not None else sw.get("hi", 40.0),
        steps=args.steps if args.steps is not None else sw.get("steps", 81),
        log=args.log or sw.get("log", False),
        base=base,
    )
    rows = sweep(spec, workers=args.workers)
    _write(emit(rows, args.format, columns=SWEEP_COLUMNS, kind="sweep"), args.out)
    failed = sum(1 for r in rows if r["error"])
    if failed:
        log.warning("%d of %d sweep points failed", failed, len(rows))
    return EXIT_OK


def _dm_gm(base: Scenario, args):
    dm = dataclasses.replace(base, scheme=ModulationScheme(Kind.FOUR_STATE, args.vmod_dm), label="DM")
    gm = dataclasses.replace(base, scheme=ModulationScheme(Kind.GAUSSIAN, args.vmod_gm), label="GM")
    return dm, gm


def cmd_find(args):
    base = scenario_from_args(args)
    target = args.target.replace("-", "_")
    if target == "optimal_vm":
        res = finders.find_optimal_vm(base, (args.lo or 0.05, args.hi or 1.5))
    elif target == "max_distance":
        res = finders.find_max_distance(base)
    elif target == "beta_threshold":
        res = finders.find_beta_threshold(base)
    elif target in ("crossing_distance", "crossing_beta"):
        dm, gm = _dm_gm(base, args)
        res = finders.find_crossing(dm, gm, target.split("_")[1])
    else:
        raise InfeasibleError(f"unknown target {args.target}")
    out = res.to_dict()
    out["scenario"] = base.to_dict()
    if args.json:
        _write(emit(out, "json", kind="find"), args.out)
    else:
        _write(f"{res.target} = {fmt_float(res.value)}  (tolerance {fmt_float(res.achieved_tolerance)}, "
               f"{res.iterations} iterations)\n".encode(), args.out)
    return EXIT_OK


def _source(kind, v_mod):
    if kind == "gaussian":
        return source_covariance(ModulationScheme.gaussian(v_mod))
    return source_covariance(ModulationScheme(Kind.FOUR_STATE, v_mod))


def _dump_samples(config: mcsim.MCConfig, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_A1", "p_A1", "x_B1p", "p_B1p", "X_C", "P_D"])
        for size, child in mcsim.chunk_seeds(config.seed, config.samples, config.chunk_size):
            a1, b1p, xc, pd = mcsim.simulate_chunk(config, size, np.random.default_rng(child))
            block = np.column_stack([a1, b1p, xc, pd])
            w.writerows([[fmt_float(v) for v in r] for r in block])


def cmd_mc_validate(args):
    base = scenario_from_args(args)
    v = base.scheme.v_mod
    alice = _source(args.alice_source, v)
    bob = _source(args.bob_source, v)
    gain = math.sqrt(optimal_gain(bob.y_var, base.link.eta_b)) if args.gain is None else args.gain
    config = mcsim.MCConfig(alice, bob, base.link, gain, samples=args.samples, seed=args.seed)
    rep = mcsim.mc_validate(config)
    if args.dump_samples:
        _dump_samples(config, args.dump_samples)
    _write(emit(rep.to_dict(), "json", kind="mc-report"), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_decoy(args):
    base = scenario_from_args(args)
    alpha_sq = args.alpha_sq if args.alpha_sq is not None else base.scheme.alpha_sq
    nbar = args.nbar if args.nbar is not None else alpha_sq
    p_max = decoy_mod.decoy_feasibility(alpha_sq, nbar, args.cutoff)
    w = decoy_mod.mixture_weights(args.p, args.p_est)
    scheme = ModulationScheme(Kind.FOUR_STATE, 2 * alpha_sq)
    rep = run_scenario(dataclasses.replace(base, scheme=scheme))
    out = {
        "alpha_sq": alpha_sq,
        "nbar": nbar,
        "p": args.p,
        "p_est": args.p_est,
        "p_max": p_max,
        "feasible": p_max > 0 and args.p <= p_max,
        "weights": {"key": w[0], "decoy": w[1], "est": w[2]},
        "key_rate": rep.key_rate,
        "key_rate_throughput_scaled": w[0] * rep.key_rate,
    }
    if args.labels_out:
        plan = decoy_mod.DecoyPlan(args.p, args.p_est, alpha_sq, nbar, seed=args.seed)
        labels = decoy_mod.sample_labels(plan, args.samples)
        if args.labels_format == "bin":
            Path(args.labels_out).write_bytes(labels.tobytes())
        else:
            Path(args.labels_out).write_text("label\n" + "\n".join(decoy_mod.LABELS[i] for i in labels) + "\n")
        counts = np.bincount(labels, minlength=3)
        out["label_counts"] = {name: int(c) for name, c in zip(decoy_mod.LABELS, counts)}
    _write(emit(out, "json", kind="decoy"), args.out)
    if p_max == 0:
        return EXIT_INFEASIBLE
    return EXIT_OK


def figure_tables(steps_vm=146, steps_d=401, steps_beta=301):
    """Data behind the three comparison figures, as lists of sweep rows."""
    vm_scan = []
    for d in VM_SCAN_DISTANCES:
        base = dataclasses.replace(Scenario(), link=LinkBudget(l_ac=d, eps_a=0.002, eps_b=0.002),
                                   label=f"DM D={d:g}km")
        vm_scan += sweep(SweepSpec("v_mod", 0.05, 1.5, steps_vm, base=base))
    distance_scan = []
    for eps in DISTANCE_SCAN_EPS:
        link = LinkBudget(l_ac=0.0, eps_a=eps, eps_b=eps)
        for kind, vm, name in ((Kind.FOUR_STATE, DM_VMOD, "DM"), (Kind.GAUSSIAN, GM_VMOD, "GM")):
            base = Scenario(ModulationScheme(kind, vm), link, beta=0.9, label=f"{name} eps={eps:g}")
            distance_scan += sweep(SweepSpec("distance", 0.0, 40.0, steps_d, base=base))
    beta_scan = []
    for kind, vm, name in ((Kind.FOUR_STATE, DM_VMOD, "DM"), (Kind.GAUSSIAN, GM_VMOD, "GM")):
        base = Scenario(ModulationScheme(kind, vm), LinkBudget(l_ac=20.0, eps_a=0.002, eps_b=0.002),
                        label=f"{name} D=20km")
        beta_scan += sweep(SweepSpec("beta", 0.7, 1.0, steps_beta, base=base))
    return {"vm_scan": vm_scan, "distance_scan": distance_scan, "beta_scan": beta_scan}


def cmd_figures(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, rows in figure_tables().items():
        (out_dir / f"{name}.csv").write_bytes(emit(rows, "csv", columns=SWEEP_COLUMNS))
    summary = {}
    for d in VM_SCAN_DISTANCES:
        base = dataclasses.replace(Scenario(), link=LinkBudget(l_ac=d, eps_a=0.002, eps_b=0.002))
        summary[f"optimal_vm_{d:g}km"] = finders.find_optimal_vm(base).to_dict()
    dm = Scenario(ModulationScheme(Kind.FOUR_STATE, DM_VMOD))
    gm = Scenario(ModulationScheme(Kind.GAUSSIAN, GM_VMOD))
    summary["beta_threshold_dm"] = finders.find_beta_threshold(dm).to_dict()
    summary["beta_threshold_gm"] = finders.find_beta_threshold(gm).to_dict()
    summary["crossing_beta"] = finders.find_crossing(dm, gm, "beta").to_dict()
    for eps in DISTANCE_SCAN_EPS:
        link = LinkBudget(l_ac=20.0, eps_a=eps, eps_b=eps)
        d, g = dataclasses.replace(dm, link=link), dataclasses.replace(gm, link=link)
        summary[f"crossing_distance_eps{eps:g}"] = finders.find_crossing(d, g, "distance").to_dict()
        summary[f"max_distance_dm_eps{eps:g}"] = finders.find_max_distance(d).to_dict()
        summary[f"max_distance_gm_eps{eps:g}"] = finders.find_max_distance(g).to_dict()
    (out_dir / "summary.json").write_bytes(emit(summary, "json", kind="figures"))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="cvmdi", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keyrate", help="key rate at one operating point")
    _add_scenario_args(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("sweep", help="key rate over a one-dimensional grid")
    _add_scenario_args(p)
    p.add_argument("--var", choices=["v_mod", "distance", "beta", "excess_noise"])
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--log", action="store_true", help="logarithmic grid")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("find", help="optimal V_M, maximal distance, thresholds, crossings")
    _add_scenario_args(p)
    p.add_argument("--target", required=True,
                   choices=["optimal-vm", "max-distance", "beta-threshold", "crossing-distance", "crossing-beta"])
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--vmod-dm", type=float, default=DM_VMOD)
    p.add_argument("--vmod-gm", type=float, default=GM_VMOD)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_find)

    p = sub.add_parser("mc-validate", help="Monte-Carlo check of the joint covariance matrix")
    _add_scenario_args(p)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alice-source", choices=["gaussian", "four-state"], default="gaussian")
    p.add_argument("--bob-source", choices=["gaussian", "four-state"], default="gaussian")
    p.add_argument("--gain", type=float, help="displacement gain g (default: optimal)")
    p.add_argument("--dump-samples", type=Path, help="write raw samples as CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc_validate)

    p = sub.add_parser("decoy", help="decoy-state feasibility and label sampling")
    _add_scenario_args(p)
    p.add_argument("--alpha-sq", type=float, help="default: V_M / 2 of the scenario")
    p.add_argument("--nbar", type=float, help="thermal reference photon number (default alpha^2)")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--p-est", type=float, default=0.1)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels-out", type=Path)
    p.add_argument("--labels-format", choices=["bin", "csv"], default="bin")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decoy)

    p = sub.add_parser("figures", help="emit the data for the V_M, distance and beta comparisons")
    p.add_argument("--out-dir", default="data")
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CVMDIError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
