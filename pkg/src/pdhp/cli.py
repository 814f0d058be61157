"""Command-line entry point: ``pdhp {generate,fit,evaluate,sweep,export-intensity}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .config import RunConfig, dump_config, load_config
from .corpus import check_sorted
from .datagen import generate_corpus
from .errors import ConfigError, DataError, DomainError
from .evaluation import AGG_COLUMNS, RUN_COLUMNS, nmi, run_sweep
from .inference import ClusteringResult, FitConfig, fit
from .point_process import ClusterDynamics, KernelBasis, intensity

log = logging.getLogger("pdhp")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _out_dir(cfg: RunConfig) -> Path:
    if not cfg.out:
        raise UsageError("--out is required")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fit_config_echo(fc: FitConfig) -> dict:
    d = asdict(fc)
    d.pop("n_threads")  # results never depend on it
    return d


def cmd_generate(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    corpus = generate_corpus(cfg.generation_spec())
    io.write_corpus(out / "corpus.tsv", corpus.documents)
    io.write_labels(out / "labels.tsv", [d.doc_id for d in corpus.documents],
                    corpus.textual_labels, corpus.temporal_labels)
    io.write_json(out / "generation.json", {"spec": asdict(cfg.generation_spec()), **corpus.metadata})
    log.info("wrote %d documents to %s", len(corpus), out)
    return EXIT_OK


def intensity_rows(result: ClusteringResult, basis: KernelBasis, grid: np.ndarray):
    for cid in sorted(result.clusters):
        snap = result.clusters[cid]
        dyn = ClusterDynamics(np.array([snap.weights]), snap.event_times)
        for t in grid:
            yield {"cluster": cid, "time": float(t), "intensity": intensity(dyn, basis, float(t))}


def time_grid(documents, step: float) -> np.ndarray:
    if not documents:
        return np.array([])
    t0, t1 = documents[0].timestamp, documents[-1].timestamp
    n = int(np.floor((t1 - t0) / step)) + 1
    return t0 + step * np.arange(n + 1)


def cmd_fit(cfg: RunConfig) -> int:
    if not cfg.corpus:
        raise UsageError("--corpus is required")
    out = _out_dir(cfg)
    docs = io.read_corpus(cfg.corpus)
    check_sorted(docs)
    fc = cfg.fit_config()
    result = fit(docs, fc, top_words=cfg.top_words)
    io.write_assignments(out / "assignments.tsv", result.doc_ids, result.assignments)
    basis = fc.kernel_basis()
    io.write_table(out / "intensity.csv", ("cluster", "time", "intensity"),
                   intensity_rows(result, basis, time_grid(docs, cfg.grid_step)))
    meta = dict(result.metadata)
    meta.update(
        config=_fit_config_echo(fc),
        n_clusters=result.n_clusters,
        particle_log_weights=result.particle_log_weights,
        clusters={str(cid): {"weights": s.weights, "n_events": len(s.event_times), "n_words": s.n_words,
                             "top_words": s.top_words}
                  for cid, s in sorted(result.clusters.items())},
    )
    io.write_json(out / "metadata.json", meta)
    log.info("%d documents -> %d clusters", len(docs), result.n_clusters)
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    if not cfg.assignments or not cfg.labels:
        raise UsageError("--assignments and --labels are required")
    a_ids, clusters = io.read_assignments(cfg.assignments)
    l_ids, textual, temporal = io.read_labels(cfg.labels)
    if a_ids != l_ids:
        raise DataError(f"document ids differ between {cfg.assignments} ({len(a_ids)} rows) "
                        f"and {cfg.labels} ({len(l_ids)} rows)")
    if not a_ids:
        raise DataError("no documents to evaluate")
    norm = cfg.nmi_normalization
    report = {
        "nmi_textual": nmi(clusters, textual, norm),
        "nmi_temporal": nmi(clusters, temporal, norm),
        "n_clusters": len(set(clusters)),
        "n_documents": len(clusters),
        "normalization": norm,
    }
    report["nmi_diff"] = report["nmi_temporal"] - report["nmi_textual"]
    text = io.format_float
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        io.write_json(cfg.out, report)
    print(f"nmi_textual={text(report['nmi_textual'])} nmi_temporal={text(report['nmi_temporal'])} "
          f"clusters={report['n_clusters']}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    rows, agg = run_sweep(cfg.sweep_grid(), cfg.generation_spec(), cfg.fit_config(),
                          workers=cfg.sweep_workers, normalization=cfg.nmi_normalization)
    io.write_table(out / "runs.csv", RUN_COLUMNS, rows)
    io.write_table(out / "aggregate.csv", AGG_COLUMNS, agg)
    (out / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
    failed = sum(r["status"] != "ok" for r in rows)
    log.info("%d runs (%d failed), %d grid points", len(rows), failed, len(agg))
    return EXIT_OK


def cmd_export_intensity(cfg: RunConfig, fit_dir: str) -> int:
    """Re-evaluate cluster intensities of a finished fit on a uniform grid."""
    if not cfg.corpus or not fit_dir or not cfg.out:
        raise UsageError("--corpus, --fit-dir and --out are required")
    docs = io.read_corpus(cfg.corpus)
    check_sorted(docs)
    fit_dir = Path(fit_dir)
    ids, clusters = io.read_assignments(fit_dir / "assignments.tsv")
    if ids != [d.doc_id for d in docs]:
        raise DataError("assignments do not match the corpus document ids")
    meta = io.read_json(fit_dir / "metadata.json")
    fc = FitConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in meta["config"].items()})
    basis = fc.kernel_basis()
    grid = time_grid(docs, cfg.grid_step)
    rows = []
    for cid in sorted(set(clusters)):
        weights = np.array([meta["clusters"][str(cid)]["weights"]])
        dyn = ClusterDynamics(weights, [d.timestamp for d, c in zip(docs, clusters) if c == cid])
        rows.extend({"cluster": cid, "time": float(t), "intensity": intensity(dyn, basis, float(t))}
                    for t in grid)
    Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_table(cfg.out, ("cluster", "time", "intensity"), rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pdhp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, corpus=False):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        if corpus:
            sp.add_argument("--corpus")
        return sp

    common(sub.add_parser("generate", help="write a synthetic labeled corpus"))
    f = common(sub.add_parser("fit", help="cluster a corpus file"), corpus=True)
    f.add_argument("--r", type=float)
    f.add_argument("--particles", type=int)
    f.add_argument("--threads", type=int)
    f.add_argument("--mode", choices=("sample", "greedy"))
    e = common(sub.add_parser("evaluate", help="NMI of assignments against both label columns"))
    e.add_argument("--assignments")
    e.add_argument("--labels")
    s = common(sub.add_parser("sweep", help="grid of generate/fit/evaluate runs"))
    s.add_argument("--particles", type=int)
    s.add_argument("--workers", type=int)
    x = common(sub.add_parser("export-intensity", help="cluster intensities of a fit on a time grid"),
               corpus=True)
    x.add_argument("--fit-dir")
    x.add_argument("--grid-step", type=float)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {
        "seed": args.seed, "out": args.out,
        "corpus": getattr(args, "corpus", None),
        "r": getattr(args, "r", None),
        "n_particles": getattr(args, "particles", None),
        "n_threads": getattr(args, "threads", None),
        "mode": getattr(args, "mode", None),
        "assignments": getattr(args, "assignments", None),
        "labels": getattr(args, "labels", None),
        "sweep_workers": getattr(args, "workers", None),
        "grid_step": getattr(args, "grid_step", None),
    }
    try:
        cfg = load_config(args.config, **overrides)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_export_intensity(cfg, args.fit_dir)
    except (ConfigError, UsageError) as exc:
        print(f"pdhp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DomainError, OSError) as exc:
        print(f"pdhp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
