"""Command-line entry point: ``ballexp <command> [options]``.

Exit codes: 0 success or PASS, 1 FAIL or refutation, 2 usage or configuration
error, 3 a resource cap was hit.  Options come from flags, then from the JSON
file given by ``--config``, then from built-in defaults.  The output
directory defaults to ``$BALLEXP_OUT`` or the working directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from typing import List, Optional

from . import acceptance, chaingraph, expanding, globalprops, shadowing
from .errors import BallexpError, ResourceError
from .numerics import WORD, fmt_point, fmt_rational, parse_point, parse_rational
from .report import envelope, output_dir, write_report, write_text
from .systems import DEFAULT_NET_CAP, build_net, iterate_system, system_from_config

DEFAULTS = {
    "system": "tent",
    "system_file": None,
    "N": 8,
    "m": 8,
    "alphabet": "0,1",
    "power": 1,
    "res": 6,
    "delta": None,
    "L": "1/2",
    "delta0": None,
    "eps": None,
    "target_res": 6,
    "cand_res": None,
    "slack": None,
    "trials": 100,
    "length": 40,
    "seed": 0,
    "method": "auto",
    "max_len": 4,
    "C": None,
    "x": None,
    "steps": 4,
    "rho": None,
    "n_min": 1,
    "n_max": 4,
    "tail": 3,
    "U": None,
    "V": None,
    "start": None,
    "end": None,
    "cap": 64,
    "max_period": 6,
    "format": "json",
    "only": None,
    "net_cap": DEFAULT_NET_CAP,
    "edge_cap": chaingraph.DEFAULT_EDGE_CAP,
    "chain_cap": shadowing.DEFAULT_CHAIN_CAP,
    "out": None,
}

COMMANDS = {
    "net": "build a net and write its points",
    "graph": "build the delta-transition graph",
    "components": "chain recurrent set, components, order and terminal components",
    "certify": "ball-expanding certificate or refutation",
    "expanding-side-checks": "metric-expanding and local-injectivity checks",
    "shadow": "Lipschitz shadowing of seeded pseudo-orbits",
    "hshadow": "endpoint-exact shadowing of all short delta-chains",
    "pullback": "inductive pullback toward an invariant set",
    "entropy": "separated-set entropy estimate",
    "trichotomy": "the three zero-entropy conditions",
    "leo": "first iterate covering the space",
    "mixing": "mixing over a window of iterates",
    "periodic": "periodic points (exact net cycles and affine branch solutions)",
    "hitting": "steps until an orbit enters the chain recurrent set",
    "export": "export a transition graph as edge-list, dot or json",
    "corpus-verify": "run the acceptance suite",
}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ballexp", description="Exact checks of ball-expanding dynamics on finite nets.")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name, help_text in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, argument_default=None)
        sp.add_argument("--config", help="JSON file of option values")
        sp.add_argument("--system", help="corpus tag: tent, doubling, logistic, shift, ex21, ex22, ex21_product")
        sp.add_argument("--system-file", help="JSON system definition (piecewise-affine branches)")
        sp.add_argument("--N", type=int, help="depth of the countable part")
        sp.add_argument("--m", type=int, help="word length")
        sp.add_argument("--alphabet", help="comma-separated word alphabet")
        sp.add_argument("--power", type=int, help="use the iterate f^power")
        sp.add_argument("--res", type=int, help="net resolution")
        sp.add_argument("--delta", action="append", help="delta (repeatable where a list is accepted)")
        sp.add_argument("--L")
        sp.add_argument("--delta0")
        sp.add_argument("--eps")
        sp.add_argument("--target-res", type=int)
        sp.add_argument("--cand-res", type=int)
        sp.add_argument("--slack")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--length", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--method", choices=["auto", "net", "interval"])
        sp.add_argument("--max-len", type=int)
        sp.add_argument("--C", help="';'-separated points of the invariant set")
        sp.add_argument("--x", help="a point (words as comma-separated symbols)")
        sp.add_argument("--steps", type=int)
        sp.add_argument("--rho")
        sp.add_argument("--n-min", type=int)
        sp.add_argument("--n-max", type=int)
        sp.add_argument("--tail", type=int)
        sp.add_argument("--U", help="'lo:hi;lo:hi' intervals or 'a,b,c;d,e' cylinder prefixes")
        sp.add_argument("--V", help="same format as --U")
        sp.add_argument("--start", type=int)
        sp.add_argument("--end", type=int)
        sp.add_argument("--cap", type=int, help="iterate cap")
        sp.add_argument("--max-period", type=int)
        sp.add_argument("--format", choices=["edge-list", "dot", "json"])
        sp.add_argument("--only", action="append", help="criterion id (repeatable or comma-separated)")
        sp.add_argument("--net-cap", type=int)
        sp.add_argument("--edge-cap", type=int)
        sp.add_argument("--chain-cap", type=int)
        sp.add_argument("--out", help="output directory")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over defaults."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("net_cap", "edge_cap", "chain_cap", "cap"):
        if int(cfg[key]) <= 0:
            raise UsageError(f"{key} must be positive")
    return cfg


def _rat(cfg, key, default=None) -> Optional[Fraction]:
    val = cfg.get(key)
    if val is None:
        return default
    try:
        return parse_rational(val)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"--{key.replace('_', '-')}: {exc}")


def _rats(cfg, key) -> List[Fraction]:
    val = cfg.get(key)
    if val is None:
        return []
    if not isinstance(val, list):
        val = [val]
    out = []
    for item in val:
        for part in str(item).split(","):
            try:
                out.append(parse_rational(part))
            except (ValueError, ZeroDivisionError) as exc:
                raise UsageError(f"--{key}: {exc}")
    return out


def _system(cfg):
    if cfg.get("system_file"):
        try:
            with open(cfg["system_file"], encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read system file: {exc}")
    else:
        obj = {"system": cfg["system"], "N": int(cfg["N"]), "m": int(cfg["m"]), "alphabet": str(cfg["alphabet"]).split(",")}
    try:
        system = system_from_config(obj)
    except ValueError as exc:
        raise UsageError(str(exc))
    if int(cfg["power"]) > 1:
        system = iterate_system(system, int(cfg["power"]))
    return system


def _point(net, text):
    if text is None:
        raise UsageError("a point is required (--x)")
    try:
        if net.metric == WORD:
            return net.embed(tuple(parse_rational(c) for c in str(text).split(",")))
        return parse_point(text)
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}: {exc}")


def _node(net, text) -> int:
    p = _point(net, text)
    i = net.index_of(p)
    if i is None:
        raise UsageError(f"{text} is not a net point")
    return i


def _union(system, text) -> globalprops.IntervalUnion:
    if not text:
        raise UsageError("--U/--V is required")
    pieces = [s for s in str(text).split(";") if s.strip()]
    try:
        if system.space.metric == WORD:
            return globalprops.IntervalUnion.of_cylinders(
                [tuple(parse_rational(c) for c in s.split(",") if c.strip()) for s in pieces]
            )
        spans = []
        for s in pieces:
            lo, hi = s.split(":")
            spans.append((parse_rational(lo), parse_rational(hi)))
        return globalprops.IntervalUnion.of_intervals(spans)
    except ValueError as exc:
        raise UsageError(f"bad set {text!r}: {exc}")


def _single_delta(cfg, default=None) -> Fraction:
    ds = _rats(cfg, "delta")
    if not ds:
        if default is None:
            raise UsageError("--delta is required")
        return default
    return ds[0]


def _net(system, cfg, res=None):
    return build_net(system.space, int(res or cfg["res"]), cap=int(cfg["net_cap"]))


def _graph(system, net, delta, cfg):
    return chaingraph.build_transition_graph(system, net, delta, edge_cap=int(cfg["edge_cap"]))


# Each handler returns (payload, verdict dict, exit code, extra files {name: text}).


def cmd_net(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    return net.to_json(), {"size": len(net)}, 0, {}


def cmd_graph(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    g = _graph(system, net, _single_delta(cfg), cfg)
    return chaingraph.graph_to_json(g), {"nodes": g.n_nodes, "edges": g.n_edges}, 0, {"graph.edges": chaingraph.to_edge_list(g)}


def cmd_components(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    g = _graph(system, net, _single_delta(cfg), cfg)
    an = chaingraph.chain_analysis(g)
    payload = an.to_json(net)
    payload["clopen_margins"] = {str(k): v for k, v in chaingraph.clopen_margins(g, an).items()}
    verdict = {"components": len(an.components), "terminal": len(an.terminal)}
    return payload, verdict, 0, {"components.dot": chaingraph.to_dot(g, an)}


def cmd_certify(cfg):
    system = _system(cfg)
    deltas = _rats(cfg, "delta")
    delta0 = _rat(cfg, "delta0", max(deltas) if deltas else Fraction(1, 2))
    eta = _rat(cfg, "slack", Fraction(0))
    target, cand = expanding.default_nets(system, int(cfg["target_res"]), cfg["cand_res"])
    cert = expanding.ball_expanding_check(system, target, cand, _rat(cfg, "L"), delta0, deltas or None, eta)
    verdict = {"verdict": cert.verdict}
    if cert.witness:
        verdict["witness"] = cert.witness.to_json()
    return cert.to_json(), verdict, 0 if cert.passed else 1, {}


def cmd_side_checks(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    L = _rat(cfg, "L")
    delta0 = _rat(cfg, "delta0", Fraction(1, 4))
    rho = _rat(cfg, "rho", delta0)
    me = expanding.metric_expanding_check(system, net, L, delta0)
    li = expanding.local_injectivity_check(system, net, rho)
    payload = {"metric_expanding": me.to_json(), "local_injectivity": li.to_json()}
    return payload, {"metric_expanding": me.passed, "local_injectivity": li.passed}, 0 if me.passed and li.passed else 1, {}


def cmd_shadow(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    L = _rat(cfg, "L")
    delta0 = _rat(cfg, "delta0", Fraction(1, 2))
    params = shadowing.ShadowingParams(L, delta0)
    rep = shadowing.lipschitz_shadowing_test(
        system, net, params, _single_delta(cfg, net.density), int(cfg["trials"]), int(cfg["length"]),
        _rat(cfg, "slack"), int(cfg["seed"]), cfg["method"],
    )
    return rep.to_json(), {"passed": rep.passed, "horizon": rep.horizon}, 0 if rep.passed else 1, {}


def cmd_hshadow(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    rep = shadowing.h_shadowing_test(
        system, net, _rat(cfg, "eps", Fraction(1, 4)), _single_delta(cfg), int(cfg["max_len"]), int(cfg["chain_cap"])
    )
    return rep.to_json(), {"passed": rep.passed, "chains": len(rep.trials)}, 0 if rep.passed else 1, {}


def cmd_pullback(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    if not cfg.get("C"):
        raise UsageError("--C is required")
    C = [_node(net, s) for s in str(cfg["C"]).split(";")]
    params = shadowing.ShadowingParams(_rat(cfg, "L"), _rat(cfg, "delta0", Fraction(1, 2)))
    tr = shadowing.pullback_trace(
        system, net, C, _point(net, cfg.get("x")), params, int(cfg["steps"]), _rat(cfg, "slack", Fraction(0))
    )
    return tr.to_json(), {"completed": tr.completed, "failed_step": tr.failed_step}, 0 if tr.completed else 1, {}


def cmd_entropy(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    est = globalprops.entropy_estimate(system, net, _rat(cfg, "eps", Fraction(1, 8)), int(cfg["n_min"]), int(cfg["n_max"]))
    return est.to_json(), {"verdict": est.verdict, "slope": est.slope}, 0, {"entropy.csv": est.to_csv()}


def cmd_trichotomy(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    grid = _rats(cfg, "delta") or list(chaingraph.DEFAULT_DELTA_GRID)
    tri = globalprops.entropy_trichotomy(
        system, net, grid, _rat(cfg, "eps", Fraction(1, 8)), (int(cfg["n_min"]), int(cfg["n_max"])), int(cfg["tail"])
    )
    verdict = {"verdicts": list(tri.verdicts), "consistent": tri.consistent}
    return tri.to_json(), verdict, 0 if tri.consistent else 1, {}


def cmd_leo(cfg):
    system = _system(cfg)
    U = _union(system, cfg.get("U"))
    i = globalprops.leo_check(system, U, int(cfg["cap"]))
    return {"U": U.to_json(), "covering_iterate": i, "cap": int(cfg["cap"])}, {"covering_iterate": i}, 0 if i is not None else 1, {}


def cmd_mixing(cfg):
    system = _system(cfg)
    U, V = _union(system, cfg.get("U")), _union(system, cfg.get("V"))
    mv = globalprops.mixing_check(system, U, V, cfg["start"], cfg["end"], int(cfg["cap"]))
    payload = {"U": U.to_json(), "V": V.to_json(), **mv.to_json()}
    return payload, {"passed": mv.passed}, 0 if mv.passed else 1, {}


def cmd_periodic(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    k = int(cfg["max_period"])
    payload = {"net": chaingraph.periodic_points_exact(system, net, k).to_json()}
    if system.is_piecewise_affine and system.space.metric != WORD:
        payload["branches"] = chaingraph.periodic_points_affine(system, k).to_json()
    return payload, {"exact_cycles": len(payload["net"]["exact_cycles"])}, 0, {}


def cmd_hitting(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    g = _graph(system, net, _single_delta(cfg), cfg)
    x = _node(net, cfg.get("x"))
    t = chaingraph.cr_hitting_time(g, x, int(cfg["cap"]))
    payload = {"x": fmt_point(net.points[x]), "delta": fmt_rational(g.delta), "hitting_time": t}
    return payload, {"hitting_time": t}, 0 if t is not None else 1, {}


def cmd_export(cfg):
    system = _system(cfg)
    net = _net(system, cfg)
    g = _graph(system, net, _single_delta(cfg), cfg)
    fmt = cfg["format"]
    if fmt == "edge-list":
        files = {"graph.edges": chaingraph.to_edge_list(g)}
    elif fmt == "dot":
        files = {"graph.dot": chaingraph.to_dot(g, chaingraph.chain_analysis(g))}
    elif fmt == "json":
        files = {"graph.json": json.dumps(chaingraph.graph_to_json(g), indent=2) + "\n"}
    else:
        raise UsageError(f"unknown export format {fmt!r}")
    return {"format": fmt, "files": sorted(files)}, {"edges": g.n_edges}, 0, files


def cmd_corpus_verify(cfg):
    only = []
    for item in cfg.get("only") or []:
        only.extend(s.strip() for s in str(item).split(",") if s.strip())
    caps = {"net_size": int(cfg["net_cap"]), "edge_count": int(cfg["edge_cap"])}
    try:
        results = acceptance.run_suite(only or None, echo=print, caps=caps)
    except KeyError as exc:
        raise UsageError(str(exc.args[0]))
    passed = all(r.passed for r in results)
    payload = {"criteria": [r.to_json() for r in results]}
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    return payload, {"all_passed": passed}, 0 if passed else 1, {}


HANDLERS = {
    "net": cmd_net,
    "graph": cmd_graph,
    "components": cmd_components,
    "certify": cmd_certify,
    "expanding-side-checks": cmd_side_checks,
    "shadow": cmd_shadow,
    "hshadow": cmd_hshadow,
    "pullback": cmd_pullback,
    "entropy": cmd_entropy,
    "trichotomy": cmd_trichotomy,
    "leo": cmd_leo,
    "mixing": cmd_mixing,
    "periodic": cmd_periodic,
    "hitting": cmd_hitting,
    "export": cmd_export,
    "corpus-verify": cmd_corpus_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        cfg = resolve_config(args)
        payload, verdict, code, files = HANDLERS[args.command](cfg)
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (UsageError, BallexpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = output_dir(cfg.get("out"))
    echo = {k: v for k, v in cfg.items() if k not in ("out", "config")}
    report = envelope(args.command, echo, payload, verdict, time.perf_counter() - start)
    path = write_report(out, f"{args.command}.json", report)
    for name, text in files.items():
        write_text(out, name, text)
    print(json.dumps(report["verdict"], sort_keys=True))
    print(f"report: {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
