"""``unitrig`` command line.

Every verb writes its artifacts into ``--out`` together with
``manifest.json``::

    {
      "config":   RunConfig as JSON (verb, inputs, out, mode, tol, seed, params, options),
      "artifacts": {file name: sha256 of its bytes},
      "inputs":    {input name: sha256 of the file},
      "versions":  {"unitrig", "python", "numpy", "scipy"},
      "wall_time_s": float,
      "schema": 1
    }

``unitrig <verb> --config manifest.json [--out DIR]`` re-runs the recorded
configuration.  Errors exit nonzero with a JSON object on stderr:
2 for usage/config errors, 3 for missing input, 1 for anything else.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .config import VERBS, ConfigError, RunConfig, apply_env, validate_config
from .formats import (
    dumps,
    edges_tsv,
    format_pointset,
    read_json,
    read_pointset,
    rows_tsv,
    write_json,
    write_text,
)
from .generators import GeneratorSpec, best_popular_square_distance, generate, scaled_grid_unit
from .geometry import EXACT, FLOAT

MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Outcome:
    artifacts: dict[str, str] = field(default_factory=dict)
    stdout: str = ""


# --- verb handlers ---------------------------------------------------------------


def _points(cfg: RunConfig, key: str = "points"):
    path = cfg.inputs.get(key)
    if not path:
        raise ConfigError([f"missing input {key!r}"])
    return read_pointset(path)


def do_generate(cfg: RunConfig) -> Outcome:
    o = cfg.options
    d = o.get("d")
    kind = o.get("kind", "integer_grid")
    if kind == "scaled_grid_unit" and d is None:
        d = best_popular_square_distance(o.get("m", 3))[0]
    spec = GeneratorSpec(kind=kind, m=o.get("m", 3), d=d or 1, seed=cfg.seed,
                         epsilon=o.get("epsilon", 0.0), mode=cfg.mode)
    errs = spec.validate()
    if errs:
        raise ConfigError(errs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        P = generate(spec)
    return Outcome({"points.tsv": format_pointset(P)}, f"{len(P)}\n")


def do_unitcount(cfg: RunConfig) -> Outcome:
    from .unit_graph import build_unit_graph

    P = _points(cfg)
    G = build_unit_graph(P)
    summary = {"n": len(P), "unit_sq": P.unit_sq, "mode": P.mode, "u": len(G.edges)}
    return Outcome({"unitcount.json": dumps(summary), "graph.json": dumps(G.to_json()),
                    "edges.tsv": edges_tsv(G.edges)}, f"{len(G.edges)}\n")


def do_incidence(cfg: RunConfig) -> Outcome:
    from .unit_graph import incidences, st_bound_check

    P = _points(cfg)
    C = _points(cfg, "centers") if cfg.inputs.get("centers") else P
    inc = incidences(P, C)
    rep = st_bound_check(len(P), len(C), len(inc), cfg.params.get("st_constant", 1.0))
    body = inc.to_json()
    body["count"] = len(inc)
    body["bound"] = rep.to_json()
    return Outcome({"incidences.json": dumps(body)}, f"{len(inc)}\n")


def do_partition(cfg: RunConfig) -> Outcome:
    from .partition import partition_points

    P = _points(cfg)
    o = cfg.options
    res = partition_points(P.as_array(), o.get("degree", 4), seed=cfg.seed,
                           resolution=o.get("resolution", 256), tol=cfg.tol,
                           c_occ=cfg.params.get("c_occ", 2.0), c_cells=cfg.params.get("c_cells", 2.0))
    return Outcome({"partition.json": dumps(res.to_json())}, f"{len(res.cells)}\n")


def _extract_input(cfg: RunConfig):
    if cfg.inputs.get("points"):
        return read_pointset(cfg.inputs["points"])
    m = cfg.options.get("m", 32)
    d = cfg.options.get("d") or best_popular_square_distance(m)[0]
    return scaled_grid_unit(m, d, EXACT)


def do_extract(cfg: RunConfig) -> Outcome:
    from .pipeline import run_structure_extraction, summary_tsv

    P = _extract_input(cfg)
    validate_config(cfg, len(P))
    out = run_structure_extraction(P, cfg.pipeline_params())
    graphs = {"P_prime": list(out.P_prime), "Q": list(out.Q),
              "graphs": [g.to_json() for g in out.graphs]}
    arts = {
        "points.tsv": format_pointset(P),
        "pprime.tsv": format_pointset(P.subset(out.P_prime)),
        "graphs.json": dumps(graphs),
        "report.json": dumps(out.report.to_json()),
        "summary.tsv": summary_tsv(out),
    }
    return Outcome(arts, f"{len(out.graphs)}\n")


def do_rigidity(cfg: RunConfig) -> Outcome:
    from .rigidity import (
        Framework,
        find_rigid_subframework,
        infinitesimal_rigidity_test,
        neighbors_collinear_violations,
        pebble_game_2_3,
    )

    path = cfg.inputs.get("framework")
    if not path:
        raise ConfigError(["missing input 'framework'"])
    fw = Framework.from_json(read_json(path))
    o = cfg.options
    body = {"n": fw.n, "edges": len(fw.edges),
            "pebble": pebble_game_2_3(fw.n, fw.edges).to_json(),
            "collinear_violations": neighbors_collinear_violations(fw, cfg.tol)}
    body["verdict"] = infinitesimal_rigidity_test(fw, o.get("rank_tol", 1e-8), cfg.seed).to_json() \
        if fw.n >= 2 else None
    w = None
    if fw.n >= 4:
        w = find_rigid_subframework(fw, o.get("min_vertices", 4), o.get("rank_tol", 1e-8),
                                    cap=o.get("cap", 12), seed=cfg.seed)
    body["witness"] = w.to_json() if w else None
    verdict = body["verdict"]["verdict"] if body["verdict"] else "undefined"
    return Outcome({"rigidity.json": dumps(body)}, f"{verdict}\n")


def do_conjecture(cfg: RunConfig) -> Outcome:
    from .rigidity import conjecture_experiment

    o = cfg.options
    res = conjecture_experiment(o.get("n", 64), o.get("alpha", 1 / 6), o.get("trials", 100),
                                o.get("model", "random"), seed=cfg.seed,
                                max_subsets=o.get("max_subsets", 2000))
    return Outcome({"experiment.tsv": res.tsv(), "summary.json": dumps(res.summary())},
                   f"{res.witness_fraction!r}\n")


def do_congruence(cfg: RunConfig) -> Outcome:
    from .congruence import pigeonhole_simulation
    from .pipeline import BipartiteCellGraph

    P = _points(cfg)
    gpath = cfg.inputs.get("graphs")
    if not gpath:
        raise ConfigError(["missing input 'graphs'"])
    gj = read_json(gpath)
    graphs = [BipartiteCellGraph.from_json(g) for g in gj["graphs"]]
    Pp = P.subset(gj["P_prime"]) if gj.get("P_prime") else None
    rep, wits = pigeonhole_simulation(graphs, P, cfg.params.get("h", 1.0), Pprime=Pp, seed=cfg.seed,
                                      max_subsets=cfg.options.get("max_subsets", 2000))
    w = [{"graph_id": x.graph_id, "U": list(x.U), "V": list(x.V), "edges": [list(e) for e in x.edges]}
         for x in wits]
    return Outcome({"pigeonhole.json": dumps(rep.to_json()), "witnesses.json": dumps(w)},
                   f"{rep.largest_class}\n")


def do_report(cfg: RunConfig) -> Outcome:
    dirs = cfg.inputs.get("dirs") or []
    u_rows, a_rows, h_rows = [], [], []
    runs = []
    for d in dirs:
        d = Path(d)
        man = read_json(d / MANIFEST)
        verb = man["config"]["verb"]
        runs.append({"dir": d.name, "verb": verb})
        if verb == "unitcount":
            s = read_json(d / "unitcount.json")
            u_rows.append((s["n"], s["u"], s["unit_sq"], s["u"] / s["n"] ** (4 / 3) if s["n"] else 0.0))
        elif verb == "conjecture":
            s = read_json(d / "summary.json")
            a_rows.append((s["n"], s["alpha"], s["model"], s["trials"], s["target_edges"],
                           s["witness_fraction"], s["hypothesis_violation_rate"]))
        elif verb == "extract":
            r = read_json(d / "report.json")
            c = r["checks"]
            h_rows.append((r["n"], r["params"]["h"], r["params"]["r"], r["params"]["t"], r["P_prime"], r["k"],
                           c["P_prime_size"]["measured"], c["k_lower"]["measured"],
                           c["side_sizes"]["measured"], c["edge_lower"]["measured"],
                           r["stages"]["first"]["zero_set_fraction"], r["cap_check"]["c5_needed_max"]))
    arts = {
        "u_vs_n.tsv": rows_tsv(["n", "u", "unit_sq", "u_over_n43"], sorted(u_rows, key=str)),
        "witness_vs_alpha.tsv": rows_tsv(["n", "alpha", "model", "trials", "edges", "witness_fraction",
                                          "violation_rate"], sorted(a_rows, key=str)),
        "bounds_vs_h.tsv": rows_tsv(["n", "h", "r", "t", "P_prime", "k", "P_prime_ratio", "k_ratio",
                                     "side_ratio", "edge_ratio", "zero_set_fraction", "c5_needed"],
                                    sorted(h_rows, key=str)),
        "report.json": dumps({"runs": runs, "unitcount": len(u_rows), "conjecture": len(a_rows),
                              "extract": len(h_rows)}),
    }
    return Outcome(arts, f"{len(runs)}\n")


HANDLERS: dict[str, Callable[[RunConfig], Outcome]] = {
    "generate": do_generate, "unitcount": do_unitcount, "incidence": do_incidence,
    "partition": do_partition, "extract": do_extract, "rigidity": do_rigidity,
    "conjecture": do_conjecture, "congruence": do_congruence, "report": do_report,
}


# --- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--mode", choices=[EXACT, FLOAT])
    common.add_argument("--config", help="re-run from a manifest.json")

    p = _Parser(prog="unitrig", description="Unit distances, partitioning and rigidity experiments.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", parser_class=_Parser, required=True)

    s = sub.add_parser("generate", parents=[common], help="write a point set")
    s.add_argument("--kind", default="integer_grid",
                   choices=["integer_grid", "scaled_grid_unit", "random_disk", "pseudo_generic"])
    s.add_argument("--m", type=int, default=3)
    s.add_argument("--d", type=int)
    s.add_argument("--epsilon", type=float, default=0.0)

    s = sub.add_parser("unitcount", parents=[common], help="count unit pairs")
    s.add_argument("--in", dest="points")

    s = sub.add_parser("incidence", parents=[common], help="point / unit-circle incidences")
    s.add_argument("--in", dest="points")
    s.add_argument("--centers")
    s.add_argument("--st-constant", type=float, default=1.0)

    s = sub.add_parser("partition", parents=[common], help="polynomial partition of a point set")
    s.add_argument("--in", dest="points")
    s.add_argument("--degree", type=int, default=4)
    s.add_argument("--resolution", type=int, default=256)

    s = sub.add_parser("extract", parents=[common], help="two-stage structure extraction")
    s.add_argument("--in", dest="points")
    s.add_argument("--m", type=int, default=32, help="scaled-grid side when no input is given")
    s.add_argument("--d", type=int)
    s.add_argument("--h", type=float, default=1.0)
    s.add_argument("--r", type=int)
    s.add_argument("--t", type=int)
    s.add_argument("--resolution", type=int)
    for c in ("c-thresh", "c1", "c2", "c3", "c4", "c5", "c-occ", "c-cross", "c-cells"):
        s.add_argument(f"--{c}", type=float)

    s = sub.add_parser("rigidity", parents=[common], help="rigidity of a framework JSON")
    s.add_argument("--in", dest="framework")
    s.add_argument("--min-vertices", type=int, default=4)
    s.add_argument("--cap", type=int, default=12)
    s.add_argument("--rank-tol", type=float, default=1e-8)

    s = sub.add_parser("conjecture", parents=[common], help="rigid-subframework experiment")
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--alpha", type=float, default=1 / 6)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--model", choices=["random", "unit"], default="random")
    s.add_argument("--max-subsets", type=int, default=2000)

    s = sub.add_parser("congruence", parents=[common], help="isomorphism/congruence counting on graphs.json")
    s.add_argument("--in", dest="graphs")
    s.add_argument("--points")
    s.add_argument("--h", type=float, default=1.0)
    s.add_argument("--max-subsets", type=int, default=2000)

    s = sub.add_parser("report", parents=[common], help="aggregate earlier run directories")
    s.add_argument("dirs", nargs="*")
    return p


_INPUT_KEYS = ("points", "centers", "framework", "graphs")
_PARAM_KEYS = ("h", "r", "t", "resolution", "c_thresh", "c1", "c2", "c3", "c4", "c5", "c_occ", "c_cross",
               "c_cells", "st_constant")
_OPTION_KEYS = ("kind", "m", "d", "epsilon", "degree", "resolution", "min_vertices", "cap", "rank_tol",
                "n", "alpha", "trials", "model", "max_subsets")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    args = vars(ns)
    cfg = RunConfig(verb=ns.verb, out=args.get("out") or "out")
    for k in _INPUT_KEYS:
        if args.get(k):
            cfg.inputs[k] = str(Path(args[k]).resolve())
    if ns.verb == "report":
        cfg.inputs["dirs"] = [str(Path(d).resolve()) for d in args.get("dirs") or []]
    if args.get("seed") is not None:
        cfg.seed = args["seed"]
    if args.get("tol") is not None:
        cfg.tol = args["tol"]
    if args.get("mode"):
        cfg.mode = args["mode"]
    errs = apply_env(cfg)
    if errs:
        raise ConfigError(errs)
    pipeline_verb = ns.verb in ("extract", "congruence", "incidence", "partition")
    for k in _PARAM_KEYS:
        if pipeline_verb and args.get(k) is not None and not (ns.verb == "partition" and k == "resolution"):
            cfg.params[k] = args[k]
    for k in _OPTION_KEYS:
        if args.get(k) is not None and k not in cfg.params:
            cfg.options[k] = args[k]
    return cfg


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _input_digests(cfg: RunConfig) -> dict:
    out = {}
    for k, v in cfg.inputs.items():
        paths = v if isinstance(v, list) else [v]
        for i, pth in enumerate(paths):
            f = Path(pth)
            if f.is_dir():
                f = f / MANIFEST
            if not f.exists():
                raise FileNotFoundError(str(f))
            out[k if not isinstance(v, list) else f"{k}[{i}]"] = _sha(f.read_bytes())
    return out


def run(cfg: RunConfig) -> Outcome:
    """Execute one verb and persist its artifacts and manifest."""
    validate_config(cfg)
    t0 = time.perf_counter()
    digests = _input_digests(cfg)
    outcome = HANDLERS[cfg.verb](cfg)
    wall = time.perf_counter() - t0
    out = Path(cfg.out)
    for name, text in sorted(outcome.artifacts.items()):
        write_text(out / name, text)
    manifest = {
        "schema": 1,
        "config": cfg.to_json(),
        "artifacts": {k: _sha(v.encode("utf-8")) for k, v in sorted(outcome.artifacts.items())},
        "inputs": digests,
        "versions": {"unitrig": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": round(wall, 6),
    }
    write_json(out / MANIFEST, manifest)
    return outcome


def _fail(code: int, kind: str, message: str, details=None) -> int:
    body = {"error": kind, "message": message}
    if details:
        body["details"] = details
    sys.stderr.write(json.dumps(body, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = build_parser().parse_args(argv)
        if ns.config:
            man = read_json(ns.config)
            cfg = RunConfig.from_json(man.get("config", man))
            if cfg.verb != ns.verb:
                raise ConfigError([f"manifest is for verb {cfg.verb!r}, not {ns.verb!r}"])
            if ns.out:
                cfg.out = ns.out
        else:
            cfg = config_from_args(ns)
        outcome = run(cfg)
    except UsageError as exc:
        return _fail(2, "usage", str(exc))
    except ConfigError as exc:
        return _fail(2, "config", str(exc), exc.errors)
    except FileNotFoundError as exc:
        return _fail(3, "missing_input", str(exc))
    except json.JSONDecodeError as exc:
        return _fail(2, "config", f"malformed JSON: {exc}")
    except Exception as exc:  # noqa: BLE001 - surfaced as structured error
        return _fail(1, type(exc).__name__, str(exc))
    sys.stdout.write(outcome.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
