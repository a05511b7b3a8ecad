"""Command-line entry point.

Subcommands:
  embed    embed measures against a reference, one JSON file per measure
  distmat  pairwise embedding-distance matrix (optionally exact W2 too)
  mnist    the digit classification protocol (IDX input, report + SVGs)
  verify   run the invariant suites and write a pass/fail report
  gen      generate synthetic inputs (two-class families or digit corpus)

Exit codes: 0 success, 1 suite or acceptance failure, 2 bad config / I-O.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from .datasets import reference_from_config
from .embedding import (
    SolverConfig,
    distance_matrix,
    embed,
    exact_distance_matrix,
    save_embedding,
)
from .experiment import DigitExperimentConfig, run_digit_experiment
from .families import FamilySpec, make_two_class_dataset
from .measures import load_measure, save_measure

log = logging.getLogger("linot")


class ConfigError(Exception):
    pass


def _load_config(path) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        return json.load(fh)


def _outdir(args, config) -> str:
    out = args.out or config.get("out_dir", "out")
    os.makedirs(out, exist_ok=True)
    return out


def _load_measures(config) -> list:
    paths = config.get("measures", [])
    if isinstance(paths, str):
        paths = [paths]
    if not paths:
        raise ConfigError("config must list measure files under 'measures'")
    loaded = []
    for p in paths:
        if not os.path.exists(p):
            raise ConfigError(f"measure file not found: {p}")
        loaded.append((os.path.splitext(os.path.basename(p))[0], load_measure(p)))
    return loaded


def _reference(config):
    if "reference_path" in config:
        p = config["reference_path"]
        if not os.path.exists(p):
            raise ConfigError(f"reference file not found: {p}")
        return load_measure(p)
    return reference_from_config(config.get("reference", {}))


def _solver(config) -> SolverConfig:
    return SolverConfig.from_dict(config.get("solver", {}))


def cmd_embed(args) -> int:
    config = _load_config(args.config)
    out = _outdir(args, config)
    sigma = _reference(config)
    solver = _solver(config)
    manifest = {"reference_size": sigma.size, "embeddings": []}
    for name, mu in _load_measures(config):
        e = embed(sigma, mu, solver, source_id=name)
        path = os.path.join(out, f"{name}.embedding.json")
        save_embedding(e, path, reference_id=config.get("reference_id", "reference"))
        manifest["embeddings"].append(os.path.basename(path))
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    log.info("wrote %d embeddings to %s", len(manifest["embeddings"]), out)
    return 0


def cmd_distmat(args) -> int:
    config = _load_config(args.config)
    out = _outdir(args, config)
    sigma = _reference(config)
    solver = _solver(config)
    named = _load_measures(config)
    n = len(named)

    t0 = time.perf_counter()
    embeddings = [embed(sigma, mu, solver, source_id=name) for name, mu in named]
    t_embed = time.perf_counter() - t0
    t0 = time.perf_counter()
    lot = distance_matrix(embeddings)
    t_dist = time.perf_counter() - t0
    lot.export_csv(os.path.join(out, "lot_distances.csv"))

    timing = {
        "n_measures": n,
        "embed_solves": n,
        "pair_count": n * (n - 1) // 2,
        "seconds_embed": t_embed,
        "seconds_vector_distances": t_dist,
    }
    if args.exact:
        cap = int(config.get("exact_cap", 60))
        if n > cap:
            raise ConfigError(f"--exact capped at {cap} measures, got {n}")
        t0 = time.perf_counter()
        exact = exact_distance_matrix([m for _, m in named], [nm for nm, _ in named])
        timing["seconds_exact_solves"] = time.perf_counter() - t0
        timing["exact_solves"] = timing["pair_count"]
        exact.export_csv(os.path.join(out, "exact_distances.csv"))
    with open(os.path.join(out, "timing.json"), "w") as fh:
        json.dump(timing, fh, indent=2, sort_keys=True)
    log.info(
        "distmat: %d embeds in %.3f s; %d pair distances in %.3f s%s",
        n,
        t_embed,
        timing["pair_count"],
        t_dist,
        (
            f"; {timing['pair_count']} exact solves in "
            f"{timing['seconds_exact_solves']:.3f} s"
            if args.exact
            else ""
        ),
    )
    return 0


def cmd_mnist(args) -> int:
    config = _load_config(args.config)
    out = _outdir(args, config)
    doc = dict(config.get("mnist", config))
    if args.seed is not None:
        doc["seed"] = args.seed
    if "images" not in doc or not os.path.exists(doc.get("images", "")):
        if not doc.get("synthetic_fallback", True):
            raise ConfigError(
                f"image file not found: {doc.get('images', '<unset>')}"
            )
        from .synthetic import write_corpus

        per_class = int(doc.get("pool_per_class", 250))
        images = os.path.join(out, "synthetic-images-idx3-ubyte")
        labels = os.path.join(out, "synthetic-labels-idx1-ubyte")
        write_corpus(per_class, int(doc.get("seed", 0)) + 99, images, labels)
        log.info("no image data supplied; wrote synthetic corpus to %s", out)
        doc["images"], doc["labels"] = images, labels
    exp = DigitExperimentConfig.from_dict(doc)
    report = run_digit_experiment(exp, out_dir=out)
    sizes = [str(s) for s in exp.train_sizes]
    for s in sizes:
        print(
            f"N={s}: lot {report['lot'][s]['mean']:.4f} "
            f"+- {report['lot'][s]['stddev']:.4f} | "
            f"pca {report['pca'][s]['mean']:.4f}"
        )
    return 0


def cmd_verify(args) -> int:
    from .verify import run_all, write_report

    config = _load_config(args.config)
    out = _outdir(args, config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    results = run_all(seed=seed)
    passed = write_report(results, os.path.join(out, "verify_report.json"))
    for r in results:
        print(f"{r.name}: {'PASS' if r.passed else 'FAIL'}")
    return 0 if passed else 1


def _family_spec(doc: dict, template) -> FamilySpec:
    return FamilySpec(
        template=template,
        R=float(doc.get("R", 5.0)),
        eps=float(doc.get("eps", 0.0)),
        count=int(doc.get("count", 20)),
        seed=int(doc.get("seed", 0)),
        shift_prob=float(doc.get("shift_prob", 0.5)),
        scale_range=tuple(doc.get("scale_range", (0.25, 4.0))),
        shift_sigma=float(doc.get("shift_sigma", 1.0)),
        smoothness=float(doc.get("smoothness", 1.0)),
    )


def cmd_gen(args) -> int:
    config = _load_config(args.config)
    out = _outdir(args, config)
    what = config.get("what", "families")
    if what == "digits":
        from .synthetic import write_corpus

        doc = config.get("digits", {})
        write_corpus(
            int(doc.get("per_class", 250)),
            int(doc.get("seed", 0)),
            os.path.join(out, "synthetic-images-idx3-ubyte"),
            os.path.join(out, "synthetic-labels-idx1-ubyte"),
        )
        log.info("wrote synthetic digit corpus to %s", out)
        return 0
    if what != "families":
        raise ConfigError(f"unknown gen target {what!r}")
    fams = config.get("families", {})
    if "p" not in fams or "q" not in fams:
        raise ConfigError("gen families config needs 'families': {'p': ..., 'q': ...}")

    def template_of(doc):
        if "template_path" in doc:
            if not os.path.exists(doc["template_path"]):
                raise ConfigError(f"template not found: {doc['template_path']}")
            return load_measure(doc["template_path"])
        from .measures import make_measure

        return make_measure(doc["template"]["points"], doc["template"].get("weights"))

    spec_p = _family_spec(fams["p"], template_of(fams["p"]))
    spec_q = _family_spec(fams["q"], template_of(fams["q"]))
    ds = make_two_class_dataset(spec_p, spec_q)
    index = {"labels": ds.labels.tolist(), "files": [], "min_cross_w2": ds.min_cross_w2}
    for k, mu in enumerate(ds.measures):
        name = f"measure_{k:04d}.json"
        save_measure(mu, os.path.join(out, name))
        index["files"].append(name)
    with open(os.path.join(out, "dataset.json"), "w") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
    log.info(
        "wrote %d measures (min cross-class W2 %.4f) to %s",
        len(ds.measures),
        -1.0 if ds.min_cross_w2 is None else ds.min_cross_w2,
        out,
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="linot",
        description="Linear optimal transport embeddings: solvers, distances, experiments",
    )
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("embed", cmd_embed),
        ("distmat", cmd_distmat),
        ("mnist", cmd_mnist),
        ("verify", cmd_verify),
        ("gen", cmd_gen),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        if name == "distmat":
            p.add_argument("--exact", action="store_true")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
