"""Command-line front end: simulate collections, fit the mixture, run
benchmark experiments, and print matched graphon distances.

Exit codes: 0 success, 1 pipeline failure, 2 bad arguments or malformed
scenario/params input. All commands are deterministic given --seed; a
key=value config file can preset any flag and explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .evaluation import (REPORT_COLUMNS, Scenario, matched_distance_matrix,
                         run_experiment, simulate, write_report)
from .graphs import NetworkCollection, load_collection, save_collection
from .initializer import InitConfig, init_collection
from .mixture import FitOptions, fit
from .sbm import Hyperparams, SbmParams

__all__ = ["RunConfig", "main", "build_parser",
           "cmd_fit", "cmd_simulate", "cmd_bench", "cmd_dist"]


class CliError(Exception):
    """Failure with a chosen exit code (2 = bad arguments, 1 = pipeline)."""

    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    """Everything a fit run needs, assembled from flags and config file."""

    hyper: Hyperparams
    init: InitConfig
    options: FitOptions
    seed: int
    threads: int
    out_dir: str
    input_format: str | None
    validate: bool


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_methods(text: str) -> list[str]:
    return [m for m in str(text).replace(",", " ").split() if m]


# config-file keys and their converters; "lambda" is accepted for lam
_CONFIG_TYPES = {
    "seed": int, "threads": int, "verify": _parse_bool,
    "validate": _parse_bool, "alpha": float, "eta": float, "zeta": float,
    "lam": float, "k_min": int, "k_max": int, "restarts": int,
    "max_sweeps": int, "force_merge_all": _parse_bool, "match_budget": int,
    "out_dir": str, "format": str, "out": str, "replicates": int,
    "c_target": int, "m": int, "methods": _parse_methods,
}


def load_config_file(path: str) -> dict:
    """key=value lines; '#' comments and blank lines ignored; dashes in
    keys normalized to underscores; unknown keys rejected."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise CliError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        dest = key.strip().replace("-", "_")
        if dest == "lambda":
            dest = "lam"
        conv = _CONFIG_TYPES.get(dest)
        if conv is None:
            raise CliError(f"{path}:{lineno}: unknown config key {key.strip()!r}")
        try:
            out[dest] = conv(val.strip())
        except ValueError as exc:
            raise CliError(f"{path}:{lineno}: bad value for {dest}: {exc}") from exc
    return out


def _scan_config_path(argv) -> str | None:
    for t, arg in enumerate(argv):
        if arg == "--config":
            if t + 1 >= len(argv):
                raise CliError("--config needs a path")
            return argv[t + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default 0; simulate/bench fall back to "
                        "the scenario's own seed)")
    g.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: available cores)")
    g.add_argument("--config", type=str, default=None, metavar="FILE",
                   help="key=value config file; explicit flags win")
    g.add_argument("--verify", action="store_true",
                   help="recompute state from scratch at each merge (slow)")
    g.add_argument("--validate", action="store_true",
                   help="re-read and check every output file after writing")
    return p


def _model_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model options")
    g.add_argument("--alpha", type=float, default=1.0,
                   help="Dirichlet prior over block proportions (default 1)")
    g.add_argument("--eta", type=float, default=1.0,
                   help="Beta prior, edge pseudo-count (default 1)")
    g.add_argument("--zeta", type=float, default=1.0,
                   help="Beta prior, non-edge pseudo-count (default 1)")
    g.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="Dirichlet prior over cluster proportions (default 1)")
    g.add_argument("--k-min", type=int, default=1,
                   help="smallest block count tried per network (default 1)")
    g.add_argument("--k-max", type=int, default=None,
                   help="largest block count tried per network "
                        "(default: min(6, n/3))")
    g.add_argument("--restarts", type=int, default=10,
                   help="random restarts per block count (default 10)")
    g.add_argument("--max-sweeps", type=int, default=100,
                   help="label-optimization sweep cap (default 100)")
    g.add_argument("--force-merge-all", action="store_true",
                   help="merge to a single cluster even at an ICL loss")
    g.add_argument("--match-budget", type=int, default=50_000,
                   help="exhaustive block matching up to K1!*K2! pairs "
                        "(default 50000)")
    return p


def build_parser():
    common = _common_parser()
    model = _model_parser()
    parser = argparse.ArgumentParser(
        prog="sbmix",
        description="Cluster collections of directed binary networks with "
                    "a mixture of stochastic block models.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="{simulate,fit,bench,dist}")

    p_fit = sub.add_parser(
        "fit", parents=[common, model],
        help="cluster a collection and write clustering + dendrogram files")
    p_fit.add_argument("input",
                       help="collection: .ndjson file or edge-list directory")
    p_fit.add_argument("--format", choices=["ndjson", "edge-list-dir"],
                       default=None, help="input format (default: inferred)")
    p_fit.add_argument("--out-dir", default=".",
                       help="output directory (default: current)")

    p_sim = sub.add_parser(
        "simulate", parents=[common],
        help="draw a synthetic collection with ground truth")
    p_sim.add_argument("scenario",
                       help="scenario JSON file or built-in scenario name")
    p_sim.add_argument("--m", type=int, default=None,
                       help="override the scenario's network count")
    p_sim.add_argument("--out-dir", default=".",
                       help="output directory (default: current)")

    p_bench = sub.add_parser(
        "bench", parents=[common, model],
        help="replicated experiments on a scenario, TSV report out")
    p_bench.add_argument("scenario",
                         help="scenario JSON file or built-in scenario name")
    p_bench.add_argument("--methods", nargs="+", default=["hier"],
                         choices=["hier", "hier-force-merge-all", "gsc"],
                         help="methods to run (default: hier)")
    p_bench.add_argument("--replicates", type=int, default=10,
                         help="replicates per method (default 10)")
    p_bench.add_argument("--c-target", type=int, default=None,
                         help="cluster count handed to gsc (required for gsc)")
    p_bench.add_argument("--m", type=int, default=None,
                         help="override the scenario's network count")
    p_bench.add_argument("--out", default="report.tsv",
                         help="report path (default: report.tsv)")

    p_dist = sub.add_parser(
        "dist", parents=[common],
        help="matched pairwise graphon distances between params files")
    p_dist.add_argument("params", nargs="+",
                        help="SBM params JSON files ({\"pi\":..,\"gamma\":..})")
    p_dist.add_argument("--match-budget", type=int, default=50_000,
                        help="exhaustive matching budget (default 50000)")
    p_dist.add_argument("--out", default=None,
                        help="write the TSV here instead of stdout")

    return parser, [p_fit, p_sim, p_bench, p_dist]


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise CliError("--threads must be >= 1")
        return args.threads
    return os.cpu_count() or 1


def _run_config(args, default_seed: int = 0) -> RunConfig:
    seed = default_seed if args.seed is None else args.seed
    try:
        hyper = Hyperparams(alpha=args.alpha, eta=args.eta, zeta=args.zeta,
                            lam=args.lam)
        init = InitConfig(k_min=args.k_min, k_max=args.k_max,
                          restarts=args.restarts, seed=seed,
                          max_sweeps=args.max_sweeps)
        options = FitOptions(force_merge_all=args.force_merge_all,
                             match_budget=args.match_budget,
                             max_sweeps=args.max_sweeps, verify=args.verify,
                             seed=seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return RunConfig(hyper=hyper, init=init, options=options, seed=seed,
                     threads=_threads(args),
                     out_dir=getattr(args, "out_dir", "."),
                     input_format=getattr(args, "format", None),
                     validate=args.validate)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _clustering_obj(state, collection: NetworkCollection) -> dict:
    ids = sorted(state.clusters)
    index_of = {cid: t for t, cid in enumerate(ids)}
    clusters = []
    for cid in ids:
        cl = state.clusters[cid]
        clusters.append({
            "members": [int(mm) for mm in cl.members],
            "pi": [float(x) for x in cl.params.pi],
            "gamma": [[float(x) for x in row] for row in cl.params.gamma],
            "node_labels": {collection.id_of(mm): [int(x) for x in z]
                            for mm, z in zip(cl.members, cl.labels)},
        })
    return {"U": [index_of[c] for c in state.U.tolist()],
            "clusters": clusters, "icl": float(state.icl)}


def _validate_clustering(path: Path, collection: NetworkCollection) -> None:
    data = json.loads(path.read_text(encoding="utf-8"))
    m = collection.m_count
    u = data["U"]
    if len(u) != m:
        raise CliError(f"{path}: U has {len(u)} entries for {m} networks", 1)
    seen = [False] * m
    for idx, cl in enumerate(data["clusters"]):
        members = cl["members"]
        if not members:
            raise CliError(f"{path}: cluster {idx} is empty", 1)
        k = len(cl["pi"])
        gamma = np.asarray(cl["gamma"], dtype=float)
        if gamma.shape != (k, k):
            raise CliError(f"{path}: cluster {idx} gamma shape mismatch", 1)
        if abs(sum(cl["pi"]) - 1.0) > 1e-9 or np.any(gamma < 0) or np.any(gamma > 1):
            raise CliError(f"{path}: cluster {idx} params out of range", 1)
        for mm in members:
            if seen[mm]:
                raise CliError(f"{path}: network {mm} in two clusters", 1)
            seen[mm] = True
            if u[mm] != idx:
                raise CliError(f"{path}: U[{mm}] disagrees with members", 1)
            z = cl["node_labels"][collection.id_of(mm)]
            if len(z) != collection.networks[mm].n:
                raise CliError(f"{path}: node_labels length mismatch at "
                               f"network {mm}", 1)
            if z and not 0 <= min(z) <= max(z) < k:
                raise CliError(f"{path}: node labels out of range at "
                               f"network {mm}", 1)
    if not all(seen):
        raise CliError(f"{path}: some networks belong to no cluster", 1)


def _validate_dendrogram(path: Path, newick_path: Path, trace_path: Path,
                         m: int) -> None:
    data = json.loads(path.read_text(encoding="utf-8"))
    events = data["events"]
    if len(events) > m - 1:
        raise CliError(f"{path}: more than M-1 merge events", 1)
    running = data["initial_icl"]
    for e in events:
        running += e["delta"]
        if abs(e["icl_after"] - running) > 1e-6:
            raise CliError(f"{path}: icl_after breaks the cumulative-sum "
                           f"invariant at step {e['step']}", 1)
    newick = newick_path.read_text(encoding="utf-8").strip()
    if not newick.endswith(";") or newick.count("(") != newick.count(")"):
        raise CliError(f"{newick_path}: malformed tree text", 1)
    lines = trace_path.read_text(encoding="utf-8").splitlines()
    if lines[0] != "step\tc1\tc2\tdelta\ticl_after\tC":
        raise CliError(f"{trace_path}: unexpected header", 1)
    if len(lines) - 1 != len(events):
        raise CliError(f"{trace_path}: row count disagrees with events", 1)


def cmd_fit(args) -> int:
    cfg = _run_config(args)
    try:
        collection = load_collection(args.input, format=cfg.input_format)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load collection: {exc}", 1) from exc
    inits = init_collection(collection, cfg.hyper, cfg.init,
                            threads=cfg.threads)
    state, dendro = fit(collection, cfg.hyper, [r.labels for r in inits],
                        cfg.options)
    out = Path(cfg.out_dir)
    _write_text(out / "clustering.json",
                _json_text(_clustering_obj(state, collection)))
    _write_text(out / "dendrogram.json", _json_text(dendro.to_json_obj()))
    _write_text(out / "dendrogram.nwk", dendro.to_newick() + "\n")
    _write_text(out / "merges.tsv", dendro.trace_tsv())
    if cfg.validate:
        _validate_clustering(out / "clustering.json", collection)
        _validate_dendrogram(out / "dendrogram.json", out / "dendrogram.nwk",
                             out / "merges.tsv", collection.m_count)
    print(f"fit: M={collection.m_count} C={state.C} icl={state.icl!r} "
          f"outputs in {out}")
    return 0


def builtin_scenarios() -> dict[str, str]:
    """Names of the scenario files shipped with the package."""
    base = resources.files("sbmix") / "scenarios"
    return {p.name.removesuffix(".json"): p for p in base.iterdir()
            if p.name.endswith(".json")}


def _load_scenario(spec_arg: str) -> Scenario:
    path = Path(spec_arg)
    if path.exists():
        text = path.read_text(encoding="utf-8")
    else:
        builtin = builtin_scenarios()
        if spec_arg in builtin:
            text = builtin[spec_arg].read_text(encoding="utf-8")
        else:
            known = ", ".join(sorted(builtin))
            raise CliError(f"scenario {spec_arg!r} is neither a file nor a "
                           f"built-in name (built-ins: {known})")
    try:
        return Scenario.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"malformed scenario {spec_arg!r}: {exc}") from exc


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args.scenario)
    if args.m is not None:
        try:
            scenario = scenario.with_m(args.m)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    seed = scenario.seed if args.seed is None else args.seed
    sim = simulate(scenario, seed=seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_collection(sim.collection, out / "collection.ndjson",
                    format="ndjson")
    truth = {
        "scenario": scenario.name,
        "seed": seed,
        "u": [int(x) for x in sim.u],
        "labels": [[int(x) for x in z] for z in sim.labels],
        "components": [p.to_json_obj() for p in sim.components],
        "params": [p.to_json_obj() for p in sim.params],
    }
    _write_text(out / "truth.json", _json_text(truth))
    if args.validate:
        back = load_collection(out / "collection.ndjson")
        if back != sim.collection:
            raise CliError(f"{out / 'collection.ndjson'}: round trip "
                           f"changed the collection", 1)
        json.loads((out / "truth.json").read_text(encoding="utf-8"))
    print(f"simulate: {scenario.name} M={sim.collection.m_count} "
          f"outputs in {out}")
    return 0


def cmd_bench(args) -> int:
    scenario = _load_scenario(args.scenario)
    if args.m is not None:
        try:
            scenario = scenario.with_m(args.m)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    if "gsc" in args.methods and args.c_target is None:
        raise CliError("method gsc needs --c-target")
    cfg = _run_config(args, default_seed=scenario.seed)
    rows = []
    for method in args.methods:
        rows.extend(run_experiment(
            scenario, method, args.replicates, hyper=cfg.hyper,
            init_config=cfg.init, options=cfg.options,
            c_target=args.c_target, base_seed=cfg.seed,
            threads=cfg.threads))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_report(rows, out)
    if cfg.validate:
        lines = out.read_text(encoding="utf-8").splitlines()
        if lines[0] != "\t".join(REPORT_COLUMNS):
            raise CliError(f"{out}: unexpected report header", 1)
        if len(lines) - 1 != len(rows):
            raise CliError(f"{out}: row count mismatch", 1)
    print(f"bench: {scenario.name} methods={','.join(args.methods)} "
          f"replicates={args.replicates} report in {out}")
    return 0


def cmd_dist(args) -> int:
    params = []
    names = []
    for fname in args.params:
        try:
            obj = json.loads(Path(fname).read_text(encoding="utf-8"))
            params.append(SbmParams.from_json_obj(obj))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise CliError(f"malformed params file {fname}: {exc}") from exc
        names.append(Path(fname).name)
    d = matched_distance_matrix(params, budget=args.match_budget)
    lines = ["\t".join(["params", *names])]
    for i, name in enumerate(names):
        lines.append("\t".join([name, *(repr(float(x)) for x in d[i])]))
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


_DISPATCH = {"fit": cmd_fit, "simulate": cmd_simulate, "bench": cmd_bench,
             "dist": cmd_dist}


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, subparsers = build_parser()
    try:
        cfg_path = _scan_config_path(argv)
        if cfg_path is not None:
            overrides = load_config_file(cfg_path)
            for sp in subparsers:
                sp.set_defaults(**overrides)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        return _DISPATCH[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # pipeline failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
