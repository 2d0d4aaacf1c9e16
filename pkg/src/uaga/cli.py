"""Command-line front end.

Exit status: 0 on success, 1 on usage errors, 2 on runtime errors. Every
stochastic command requires ``--seed``; with ``--threads 1`` (the default)
reruns produce byte-identical reports.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from .adversarial import save_mapping, write_loss_history
from .baselines import CENTRALITY_KINDS, centrality, centrality_align, write_centrality
from .config import FLAGS, SECTIONS, flag_dest, load_config_file, resolve_config
from .embedding import deepwalk, load_embeddings, save_embeddings
from .errors import UagaError
from .evaluation import AlignmentReport, precision_at_n, write_summary_csv
from .graph import (AnchorLinkSet, Graph, barabasi_albert_graph, erdos_renyi_graph, filter_min_degree,
                    generate_aligned_pair, load_aligned_pair, load_edge_list, read_anchors,
                    save_aligned_pair, write_anchors)
from .experiments import link_prediction_study, run_lambda_experiment
from .incremental import VARIANTS, align_embeddings, run_iuaga
from .plotting import plot_iuaga_rounds, plot_loss_curves, plot_precision_bars

log = logging.getLogger("uaga")

NS = (1, 5, 10)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_DEFAULTS = {name: {f.name: f.default for f in fields(cls)} for name, cls in SECTIONS.items()}


def _add_config_flags(p, sections):
    for flag, section, name, typ, text in FLAGS:
        if section not in sections:
            continue
        default = _DEFAULTS[section][name]
        extra = {"choices": ["identity", "moments"]} if name == "init" else {}
        p.add_argument(flag, type=typ, default=None, metavar=name.upper(),
                       help=f"{text} (default: {default})", **extra)
    if "align" in sections:
        p.add_argument("--refine-threshold", action=argparse.BooleanOptionalAction, default=None,
                       help="apply --threshold when mining refinement anchors (default: off)")
        p.add_argument("--extend-threshold", action=argparse.BooleanOptionalAction, default=None,
                       help="apply --threshold to anchors used for graph extension (default: on)")


def _common(p, seed_required=True):
    p.add_argument("--seed", type=int, required=seed_required, default=None,
                   help="random seed" + (" (required)" if seed_required else ""))
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for embedding training; 1 is deterministic (default: 1)")
    p.add_argument("--config", type=Path, default=None, help="TOML or JSON file with [walk], "
                   "[adversarial] and [align] sections; flags override it")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uaga", description="Unsupervised adversarial graph alignment toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="build an aligned graph pair by edge dropout")
    g.add_argument("graph", help="edge list path, or ba:N:M / er:N:P for a synthetic graph")
    g.add_argument("out", type=Path, help="output pair directory")
    g.add_argument("--lambda-e", type=float, default=0.9, help="shared edge ratio (default: 0.9)")
    g.add_argument("--min-degree", type=int, default=None,
                   help="drop nodes with degree <= this value first (default: no filter)")
    g.add_argument("--single-pass", action="store_true", help="run the degree filter once, not to fixpoint")
    _common(g)

    e = sub.add_parser("embed", help="random-walk skip-gram embeddings of one graph")
    e.add_argument("graph", help="edge list path, or ba:N:M / er:N:P")
    e.add_argument("out", type=Path, help="embedding file")
    e.add_argument("--binary", action="store_true", help="write the binary float32 format")
    _common(e)
    _add_config_flags(e, {"walk"})

    a = sub.add_parser("align", help="adversarial map plus refinement between two embedding files")
    a.add_argument("out", type=Path, help="output directory")
    a.add_argument("--zs", type=Path, required=True, help="source embedding file")
    a.add_argument("--zt", type=Path, required=True, help="target embedding file")
    a.add_argument("--truth", type=Path, default=None, help="ground-truth anchors TSV (labels)")
    a.add_argument("--variant", choices=list(VARIANTS), default="Adv-Refine-CGSS",
                   help="map and retrieval used for candidates (default: Adv-Refine-CGSS)")
    _common(a)
    _add_config_flags(a, {"adversarial", "align"})

    i = sub.add_parser("iualign", help="incremental alignment of a graph pair")
    i.add_argument("pair", type=Path, help="pair directory written by 'generate'")
    i.add_argument("out", type=Path, help="output directory")
    i.add_argument("--no-truth", action="store_true", help="ignore the pair's ground truth")
    i.add_argument("--no-checkpoints", action="store_true", help="skip per-round checkpoint directories")
    _common(i)
    _add_config_flags(i, {"walk", "adversarial", "align"})

    b = sub.add_parser("baseline", help="centrality-based alignment of a graph pair")
    b.add_argument("pair", type=Path, help="pair directory written by 'generate'")
    b.add_argument("out", type=Path, help="output directory")
    b.add_argument("--kind", choices=[*CENTRALITY_KINDS, "all"], default="all", help="centrality (default: all)")
    b.add_argument("--top", type=int, default=10, help="candidate list length (default: 10)")
    _common(b, seed_required=False)

    v = sub.add_parser("eval", help="Precision@N of a candidates file against ground truth")
    v.add_argument("--candidates", type=Path, required=True, help="TSV: source then ranked targets")
    v.add_argument("--truth", type=Path, required=True, help="ground-truth anchors TSV")
    v.add_argument("--n", type=int, nargs="+", default=list(NS), help="N values (default: 1 5 10)")
    v.add_argument("--out", type=Path, default=None, help="write a report JSON here")

    lp = sub.add_parser("linkpred", help="held-out link prediction with raw vs extended-graph embeddings")
    lp.add_argument("graph", help="edge list path, or ba:N:M / er:N:P")
    lp.add_argument("out", type=Path, help="output directory")
    lp.add_argument("--holdout", type=float, default=0.1, help="held-out edge fraction (default: 0.1)")
    lp.add_argument("--lambda-e", type=float, default=0.85,
                    help="shared edge ratio of the counterpart graph used for extension (default: 0.85)")
    lp.add_argument("--ks", type=int, nargs="+", default=[10, 50, 100], help="k values (default: 10 50 100)")
    _common(lp)
    _add_config_flags(lp, {"walk", "adversarial", "align"})

    x = sub.add_parser("experiment", help="multi-seed comparison on generated pairs")
    x.add_argument("graph", help="edge list path, or ba:N:M / er:N:P")
    x.add_argument("out", type=Path, help="output directory")
    x.add_argument("--lambda-e", type=float, default=0.9, help="shared edge ratio (default: 0.9)")
    x.add_argument("--runs", type=int, default=5, help="seeds seed, seed+1, ... (default: 5)")
    x.add_argument("--iuaga", action="store_true", help="include the incremental loop")
    _common(x)
    _add_config_flags(x, {"walk", "adversarial", "align"})
    return p


# ------------------------------------------------------------------ helpers

def _graph_arg(spec: str, seed: int | None) -> Graph:
    if spec.startswith(("ba:", "er:")):
        kind, *params = spec.split(":")
        try:
            if kind == "ba":
                n, m = int(params[0]), int(params[1])
                return barabasi_albert_graph(n, m, seed if seed is not None else 0)
            n, prob = int(params[0]), float(params[1])
            return erdos_renyi_graph(n, prob, seed if seed is not None else 0)
        except (IndexError, ValueError):
            raise UsageError(f"bad synthetic graph spec {spec!r}; use ba:N:M or er:N:P") from None
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"graph file not found: {path}")
    return load_edge_list(path)


def _run_config(args, sections):
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {}
    for flag, section, name, _, _ in FLAGS:
        if section in sections:
            overrides[(section, name)] = getattr(args, flag_dest(flag), None)
    if "align" in sections:
        overrides[("align", "refine_threshold")] = args.refine_threshold
        overrides[("align", "extend_threshold")] = args.extend_threshold
    cfg = resolve_config({k: v for k, v in file_values.items() if k in sections}, overrides)
    walk = cfg.walk.replace(threads=args.threads, seed=args.seed if args.seed is not None else 0)
    adv = cfg.adversarial.replace(seed=args.seed if args.seed is not None else 0)
    snapshot = cfg.to_dict()
    snapshot["walk"]["seed"] = walk.seed
    snapshot["walk"].pop("threads")
    snapshot["adversarial"]["seed"] = adv.seed
    snapshot = {k: v for k, v in snapshot.items() if k in sections}
    return walk, adv, cfg.align, snapshot


def _write_report(out: Path, report: AlignmentReport, name="report.json"):
    (out / name).write_text(report.to_json(include_timing=False), encoding="utf-8")
    timings = out / "timings.json"
    data = json.loads(timings.read_text()) if timings.exists() else {}
    data[name] = report.wall_clock
    timings.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _write_candidates(path, cands, source_labels, target_labels):
    with open(path, "w", encoding="utf-8") as fh:
        for s, row in enumerate(np.asarray(cands).tolist()):
            fh.write("\t".join([source_labels[s], *(target_labels[t] for t in row)]) + "\n")


def _emit(rows):
    """Delimited summary on stdout: ``key<TAB>value``."""
    for k, v in rows:
        print(f"{k}\t{v}")


def _precision_rows(prefix, prec):
    return [(f"{prefix}P@{n}", f"{p:.4f}") for n, p in sorted(prec.items())]


# ----------------------------------------------------------------- commands

def cmd_generate(args):
    g = _graph_arg(args.graph, args.seed)
    if args.min_degree is not None:
        g, _ = filter_min_degree(g, args.min_degree, iterate=not args.single_pass)
    pair = generate_aligned_pair(g, args.lambda_e, args.seed)
    save_aligned_pair(pair, args.out)
    _emit([("nodes", g.node_count), ("edges", g.edge_count), ("source_edges", pair.source.edge_count),
           ("target_edges", pair.target.edge_count), ("pair_dir", args.out)])


def cmd_embed(args):
    walk, _, _, _ = _run_config(args, {"walk"})
    g = _graph_arg(args.graph, args.seed)
    emb = deepwalk(g, walk, seed=args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_embeddings(emb, args.out, binary=args.binary)
    _emit([("nodes", emb.n), ("dim", emb.d), ("embedding", args.out)])


def cmd_align(args):
    _, adv, cfg, snapshot = _run_config(args, {"adversarial", "align"})
    for p in (args.zs, args.zt):
        if not p.exists():
            raise UsageError(f"embedding file not found: {p}")
    zs, zt = load_embeddings(args.zs), load_embeddings(args.zt)
    if zs.d != zt.d:
        raise UagaError(f"dimension mismatch: {args.zs} has d={zs.d}, {args.zt} has d={zt.d}")
    top = max(cfg.top, max(NS))
    cfg = cfg.replace(top=top)
    t0 = time.perf_counter()
    res = align_embeddings(zs, zt, adv, cfg)
    cands = res.candidates(args.variant, top)
    elapsed = time.perf_counter() - t0
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    s_ids, t_ids = zs.node_ids(), zt.node_ids()
    save_mapping(res.mapping, out / "mapping.txt")
    save_mapping(res.adversarial.mapping, out / "adversarial_mapping.txt")
    write_anchors(out / "pseudo_anchors.tsv", res.anchors, s_ids, t_ids)
    write_loss_history(res.adversarial.history, out / "loss.csv")
    _write_candidates(out / "candidates.tsv", cands, s_ids, t_ids)
    plot_loss_curves(res.adversarial.history, out / "loss.png")
    prec, extra = {}, {}
    rows = [("pseudo_anchors", len(res.anchors))]
    if args.truth is not None:
        truth = read_anchors(args.truth, {s: i for i, s in enumerate(s_ids)}, {t: i for i, t in enumerate(t_ids)})
        prec = precision_at_n(cands, truth, NS)
        extra["variants"] = {v: {str(n): p for n, p in precision_at_n(res.candidates(v, top), truth, NS).items()}
                             for v in VARIANTS}
        rows += _precision_rows("", prec)
    report = AlignmentReport(
        "align", args.variant, prec, args.seed, len(res.anchors),
        res.anchors.precision_against(truth) if args.truth is not None else None,
        res.adversarial.history, snapshot, extra, elapsed)
    _write_report(out, report)
    _emit(rows + [("report", out / "report.json")])


def cmd_iualign(args):
    walk, adv, cfg, snapshot = _run_config(args, {"walk", "adversarial", "align"})
    if not args.pair.is_dir():
        raise UsageError(f"pair directory not found: {args.pair}")
    pair = load_aligned_pair(args.pair)
    truth = None if args.no_truth else pair.ground_truth
    top = max(cfg.top, max(NS))
    cfg = cfg.replace(top=top)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = run_iuaga(pair.source, pair.target, walk, adv, cfg, seed=args.seed, truth=truth,
                    checkpoint_dir=None if args.no_checkpoints else out / "checkpoints", ns=NS)
    cands = res.candidates(top)
    elapsed = time.perf_counter() - t0
    s_ids, t_ids = pair.source.node_labels(), pair.target.node_labels()
    save_mapping(res.mapping, out / "mapping.txt")
    write_anchors(out / "pseudo_anchors.tsv", res.anchors, s_ids, t_ids)
    _write_candidates(out / "candidates.tsv", cands, s_ids, t_ids)
    write_loss_history(res.histories[-1], out / "loss.csv")
    plot_loss_curves(res.histories[-1], out / "loss.png")
    plot_iuaga_rounds(res.rounds, out / "rounds.png")
    prec = precision_at_n(cands, truth, NS) if truth is not None else {}
    report = AlignmentReport(
        "iualign", "iUAGA", prec, args.seed, len(res.anchors),
        res.anchors.precision_against(truth) if truth is not None else None,
        res.histories[-1], snapshot,
        {"rounds": res.rounds, "converged": res.converged, "stopped_early": res.stopped_early}, elapsed)
    _write_report(out, report)
    rows = [("rounds", len(res.rounds)), ("converged", res.converged), ("stopped_early", res.stopped_early),
            ("pseudo_anchors", len(res.anchors))] + _precision_rows("", prec)
    _emit(rows + [("report", out / "report.json")])


def cmd_baseline(args):
    if not args.pair.is_dir():
        raise UsageError(f"pair directory not found: {args.pair}")
    pair = load_aligned_pair(args.pair)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    kinds = CENTRALITY_KINDS if args.kind == "all" else (args.kind,)
    top = max(args.top, max(NS))
    rows = []
    for kind in kinds:
        t0 = time.perf_counter()
        write_centrality(out / f"{kind}_source.tsv", pair.source, centrality(pair.source, kind))
        write_centrality(out / f"{kind}_target.tsv", pair.target, centrality(pair.target, kind))
        cands = centrality_align(pair.source, pair.target, kind, top)
        _write_candidates(out / f"{kind}_candidates.tsv", cands, pair.source.node_labels(),
                          pair.target.node_labels())
        prec = precision_at_n(cands, pair.ground_truth, NS)
        _write_report(out, AlignmentReport("baseline", kind.capitalize(), prec, None,
                                           wall_clock=time.perf_counter() - t0), f"report_{kind}.json")
        rows += _precision_rows(f"{kind}_", prec)
    _emit(rows)


def cmd_eval(args):
    for p in (args.candidates, args.truth):
        if not p.exists():
            raise UsageError(f"file not found: {p}")
    src_index, tgt_index, cands = {}, {}, {}
    with open(args.candidates, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if not parts or not parts[0]:
                continue
            s = src_index.setdefault(parts[0], len(src_index))
            cands[s] = [tgt_index.setdefault(t, len(tgt_index)) for t in parts[1:]]
    truth_pairs = []
    with open(args.truth, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) >= 2:
                truth_pairs.append((src_index.setdefault(parts[0], len(src_index)),
                                    tgt_index.setdefault(parts[1], len(tgt_index))))
    truth = AnchorLinkSet.from_pairs(truth_pairs)
    prec = precision_at_n(cands, truth, args.n)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(AlignmentReport("eval", args.candidates.name, prec).to_json(False), encoding="utf-8")
    _emit(_precision_rows("", prec))


def cmd_linkpred(args):
    walk, adv, cfg, snapshot = _run_config(args, {"walk", "adversarial", "align"})
    g = _graph_arg(args.graph, args.seed)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    res = link_prediction_study(g, args.holdout, args.lambda_e, args.ks, walk, adv, cfg, args.seed)
    for method, prec in res["precision"].items():
        report = AlignmentReport("linkpred", method, prec, args.seed, config=snapshot,
                                 extra={k: v for k, v in res.items() if k != "precision"})
        _write_report(out, report, f"report_{method}.json")
    rows = []
    for method, prec in res["precision"].items():
        rows += [(f"{method}_precision@{k}", f"{p:.4f}") for k, p in prec.items()]
    _emit(rows + [("added_edges", res["added_edges"]), ("added_heldout_edges", res["added_heldout_edges"])])


def cmd_experiment(args):
    walk, adv, cfg, snapshot = _run_config(args, {"walk", "adversarial", "align"})
    g = _graph_arg(args.graph, args.seed)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    seeds = range(args.seed, args.seed + args.runs)
    reports = run_lambda_experiment(g, args.lambda_e, seeds, walk, adv, cfg, iuaga=args.iuaga, ns=NS)
    with open(out / "reports.jsonl", "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_dict(include_timing=False), sort_keys=True) + "\n")
    (out / "timings.json").write_text(json.dumps(
        [{"seed": r.seed, "method": r.method, "wall_clock": r.wall_clock} for r in reports], indent=1) + "\n")
    rows = write_summary_csv(reports, out / "summary.csv")
    plot_precision_bars(rows, out / "precision.png", NS)
    print("method\t" + "\t".join(f"P@{n}" for n in NS))
    for r in rows:
        print(r["method"] + "\t" + "\t".join(f"{r[f'P@{n}']:.4f}" for n in NS))


COMMANDS = {
    "generate": cmd_generate,
    "embed": cmd_embed,
    "align": cmd_align,
    "iualign": cmd_iualign,
    "baseline": cmd_baseline,
    "eval": cmd_eval,
    "linkpred": cmd_linkpred,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"uaga: error: {exc}", file=sys.stderr)
        return 1
    except (UagaError, OSError, ValueError) as exc:
        print(f"uaga: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
