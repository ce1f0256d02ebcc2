"""``dctnet`` command line.

Subcommands: train, eval, augment, distort, dct inspect, compare,
fetch-cifar10, experiment. Exit codes: 0 success, 1 usage, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, checkpoint, config
from .data import Dataset, fetch_cifar10, load_dataset, make_cifar10_subset, save_dataset, to_uint8
from .distortions import DistortionSpec, Kind, distort, get_profile
from .errors import DataError, NumericalError
from .rng import stream

log = logging.getLogger("dctnet")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
DATASET_ALIASES = {"cifar10-subset": "cifar10-subset"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _data_root() -> Path:
    return Path(os.environ.get("DCTNET_DATA", "data"))


def resolve_dataset(name: str, split: str) -> str:
    """Map a bundled dataset alias to its split file; pass paths through."""
    if name in DATASET_ALIASES:
        return str(_data_root() / DATASET_ALIASES[name] / f"{split}.bin")
    return name


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@contextlib.contextmanager
def _threads(deterministic: bool, workers: int | None):
    limit = 1 if deterministic else workers
    if limit is None:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover - optional
        yield
        return
    with threadpool_limits(limits=limit):
        yield


def _blocks(text: str | None):
    if text is None:
        return None
    return [[int(f) for f in block.split(",") if f] for block in text.split(";") if block]


def _ints(text: str | None):
    if text is None:
        return None
    return [int(v) for v in text.split(",") if v]


# -- train -----------------------------------------------------------------

def cmd_train(args) -> int:
    from .train import train

    overrides = {
        "train": {
            "epochs": args.epochs, "seed": args.seed, "lr": args.lr, "momentum": args.momentum,
            "batch_size": args.batch_size, "threshold_low": args.threshold_min,
            "threshold_high": args.threshold_max, "fixed_dropout": args.fixed_p,
            "augment": None if args.augment is None else args.augment == "dct",
            "adaptive_dropout": None if args.dropout is None else args.dropout == "adaptive",
        },
        "network": {"blocks": _blocks(args.blocks), "hidden": _ints(args.hidden)},
    }
    try:
        resolved = config.resolve(config.load_file(args.config), overrides)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc

    dataset_path = resolve_dataset(args.dataset, "train")
    ds = load_dataset(dataset_path, args.format).subset(args.limit)
    resolved["network"].update(input_shape=list(ds.geometry), num_classes=ds.num_classes)
    net_cfg, train_cfg = config.network_config(resolved), config.train_config(resolved)
    resolved["data"] = {"train": dataset_path, "format": ds.format, "limit": args.limit,
                        "class_names": ds.class_names, "sha256": _dataset_digest(ds)}

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "train_log.jsonl"
    log_path.write_text("")

    def on_epoch(record):
        with log_path.open("a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    with _threads(args.deterministic, args.workers):
        params, _ = train(ds.images, ds.labels, net_cfg, train_cfg, on_epoch=on_epoch)
    manifest = {"tool": f"dctnet {__version__}", "config": resolved}
    checkpoint.save(out / "model.ckpt", params, manifest)
    _write_json(out / "run_config.json", manifest)
    print(f"wrote {out / 'model.ckpt'}")
    return 0


def _dataset_digest(ds: Dataset) -> str:
    h = hashlib.sha256(np.ascontiguousarray(ds.images).tobytes())
    h.update(np.asarray(ds.labels, dtype="<i8").tobytes())
    return h.hexdigest()


# -- eval ------------------------------------------------------------------

def cmd_eval(args) -> int:
    from .evaluate import distorted_testset, evaluate
    from .distortions import level_grid

    overrides = {"eval": {"profile": args.profile, "seed": args.seed,
                          "families": args.families.split(",") if args.families else None}}
    try:
        resolved = config.resolve(config.load_file(args.config), overrides)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc

    params, manifest = checkpoint.load(args.checkpoint)
    dataset_path = resolve_dataset(args.dataset, "test")
    ds = load_dataset(dataset_path, args.format).subset(args.limit)
    if ds.geometry != params.config.input_shape:
        raise DataError(f"test images {ds.geometry} do not match the checkpoint's input "
                        f"{params.config.input_shape}")
    if ds.num_classes > params.config.num_classes:
        raise DataError(f"test set has {ds.num_classes} classes, checkpoint {params.config.num_classes}")

    ev = resolved["eval"]
    with _threads(args.deterministic, args.workers):
        report = evaluate(params, ds.images, ds.labels, ev["profile"], ev["families"], ev["seed"])
    report.meta.update({
        "eval_config": ev,
        "test_data": {"path": dataset_path, "sha256": _dataset_digest(ds), "limit": args.limit},
        "checkpoint_sha256": _sha256(args.checkpoint),
        "train_config": manifest.get("config", {}),
    })

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "report.csv").write_text(report.to_csv(args.name))
    if args.materialize:
        root = Path(args.materialize)
        for kind in report.per_family:
            for i, spec in enumerate(level_grid(kind, ev["profile"])):
                imgs = distorted_testset(ds.images, spec, i, ev["seed"], ev["profile"])
                save_dataset(root / f"{kind.value}-{i + 1}" / Path(dataset_path).name, ds, imgs)
    print(report.to_csv(args.name), end="")
    return 0


# -- augment / distort -----------------------------------------------------

def _output_target(out: Path, ds: Dataset, fmt: str) -> Path:
    if fmt == "image-directory":
        return out / "images"
    name = Path(ds.path).name if ds.format == fmt else {"cifar-binary": "data.bin",
                                                        "idx": "images-idx"}[fmt]
    return out / name


def cmd_augment(args) -> int:
    from .augment import ThresholdDistribution, augment_batch

    try:
        dist = ThresholdDistribution(args.threshold_min, args.threshold_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ds = load_dataset(args.dataset, args.format)
    out_imgs, samples = augment_batch(ds.images, args.seed, dist)
    fmt = args.output_format or ds.format
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = _output_target(out, ds, fmt)
    save_dataset(target, ds, to_uint8(out_imgs), fmt)
    _write_json(out / "manifest.json", {
        "command": "augment", "input": args.dataset, "output": target.name, "format": fmt,
        "seed": args.seed, "threshold_min": dist.low, "threshold_max": dist.high,
        "draws": [{"image_id": s.image_id, "X": s.X} for s in samples],
    })
    print(f"wrote {len(samples)} images to {target}")
    return 0


def cmd_distort(args) -> int:
    try:
        profile = get_profile(args.profile)
        spec = DistortionSpec(Kind(args.kind), args.level).validate(profile)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ds = load_dataset(args.dataset, args.format)
    imgs = np.stack([distort(img, spec, stream(args.seed, "distort", spec.kind.value, 0, i), profile)
                     for i, img in enumerate(ds.images)])
    fmt = args.output_format or ds.format
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = _output_target(out, ds, fmt)
    save_dataset(target, ds, to_uint8(imgs), fmt)
    _write_json(out / "manifest.json", {
        "command": "distort", "input": args.dataset, "output": target.name, "format": fmt,
        "kind": spec.kind.value, "level": spec.level, "profile": profile.name, "seed": args.seed,
        "streams": "per image i: stream(seed, 'distort', kind, 0, i)",
        "count": len(imgs),
    })
    print(f"wrote {len(imgs)} images to {target}")
    return 0


# -- dct inspect -----------------------------------------------------------

def cmd_dct_inspect(args) -> int:
    from .data import read_image
    from .dct import energy, fdct2

    img = read_image(args.image).astype(np.float64)
    if args.channel is not None:
        if not 0 <= args.channel < img.shape[2]:
            raise UsageError(f"image has {img.shape[2]} channels")
        img = img[:, :, args.channel:args.channel + 1]
    coeffs = fdct2(img)
    mags = np.abs(coeffs).sum(axis=2) if args.channel is None and img.shape[2] > 1 else np.abs(coeffs[:, :, 0])
    if args.csv is not None:
        fh = sys.stdout if args.csv == "-" else open(args.csv, "w", newline="")
        try:
            w = csv.writer(fh, lineterminator="\n")
            for row in mags:
                w.writerow([f"{v:.6g}" for v in row])
        finally:
            if fh is not sys.stdout:
                fh.close()
        return 0
    m, n = coeffs.shape[:2]
    low = energy(coeffs[: (m + 1) // 2, : (n + 1) // 2])
    total = energy(coeffs)
    print(f"size {m}x{n}x{img.shape[2]}")
    print(f"DC {coeffs[0, 0].tolist()}")
    print(f"low-frequency quarter energy {low / total if total else 0:.4f}")
    for x in (10, 25, 50):
        print(f"fraction of |B| < {x}: {np.mean(np.abs(coeffs) < x):.4f}")
    return 0


# -- compare / fetch / experiment ------------------------------------------

def cmd_compare(args) -> int:
    from .evaluate import EvalReport, compare_reports

    names = args.names.split(",") if args.names else [Path(p).parent.name or p for p in args.reports]
    if len(names) != len(args.reports):
        raise UsageError("--names must list one name per report")
    reports = {}
    for name, path in zip(names, args.reports):
        try:
            reports[name] = EvalReport.from_json(Path(path).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot read report {path}: {exc}") from exc
    try:
        table = compare_reports(reports)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(table.to_csv(), end="")
    return 0


def cmd_fetch(args) -> int:
    cache = Path(args.cache)
    if args.tarball:
        import tarfile

        with tarfile.open(args.tarball) as tf:
            tf.extractall(cache)
        batches = cache / "cifar-10-batches-bin"
    else:
        batches = fetch_cifar10(cache)
    manifest = make_cifar10_subset(batches, args.dest, args.train_per_class, args.test_per_class)
    print(f"wrote {manifest['splits']['train']['count']} train / "
          f"{manifest['splits']['test']['count']} test images to {args.dest}")
    return 0


def cmd_experiment(args) -> int:
    from . import experiment
    from .evaluate import compare_reports
    from .nn import NetworkConfig
    from .train import TrainConfig

    if args.standin:
        from .standin import natural_crops

        train_set, test_set = natural_crops(args.standin_train, args.standin_test)
    else:
        train_set = load_dataset(resolve_dataset(args.dataset, "train"))
        test_set = load_dataset(resolve_dataset(args.dataset, "test"))
    blocks = _blocks(args.blocks) or [[32, 32], [64, 64]]
    net = NetworkConfig(train_set.geometry, blocks, _ints(args.hidden) or [256], train_set.num_classes)
    base = TrainConfig(epochs=args.epochs, batch_size=args.batch_size)
    seeds = _ints(args.seeds)
    with _threads(args.deterministic, args.workers):
        results = experiment.run(train_set, test_set, seeds, base, net, profile=args.profile)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "trend": experiment.trend_summary(results),
        "ablation": experiment.ablation_summary(results),
        "reports": {str(s): {v: r.to_dict() for v, r in res.items()} for s, res in results.items()},
        "config": {"network": net.to_dict(), "train": base.to_dict(), "seeds": seeds,
                   "profile": args.profile, "dataset": "standin" if args.standin else args.dataset},
    }
    _write_json(out / "experiment.json", summary)
    for s, res in results.items():
        (out / f"table_seed{s}.csv").write_text(compare_reports(res).to_csv())
    print(json.dumps({"trend": summary["trend"], "ablation": summary["ablation"]}, indent=2))
    return 0


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dctnet", description="DCT-threshold augmentation toolkit")
    p.add_argument("--version", action="version", version=f"dctnet {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def runtime(sp):
        sp.add_argument("--deterministic", action="store_true",
                        help="force single-threaded numerics for bit-reproducible output")
        sp.add_argument("--workers", type=int, default=None, help="numeric thread count")

    t = sub.add_parser("train", help="train a classifier")
    t.add_argument("--dataset", required=True, help="dataset path or 'cifar10-subset'")
    t.add_argument("--format", choices=["cifar-binary", "idx", "image-directory"])
    t.add_argument("--config", help="YAML run configuration")
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--augment", choices=["dct", "none"])
    t.add_argument("--dropout", choices=["adaptive", "fixed"])
    t.add_argument("--fixed-p", type=float, help="dropout probability for --dropout fixed")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--momentum", type=float)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--threshold-min", type=int)
    t.add_argument("--threshold-max", type=int)
    t.add_argument("--blocks", help="conv filter counts, e.g. '32,32;64,64'")
    t.add_argument("--hidden", help="hidden FC widths, e.g. '256'")
    t.add_argument("--limit", type=int, help="use only the first N training images")
    runtime(t)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint under distortions")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--dataset", required=True, help="test set path or 'cifar10-subset'")
    e.add_argument("--format", choices=["cifar-binary", "idx", "image-directory"])
    e.add_argument("--config")
    e.add_argument("--families", help="comma-separated distortion families")
    e.add_argument("--profile", choices=["small", "large"])
    e.add_argument("--seed", type=int)
    e.add_argument("--out", required=True)
    e.add_argument("--name", default="model", help="row label in the CSV")
    e.add_argument("--limit", type=int)
    e.add_argument("--materialize", help="also write every distorted test set under this directory")
    runtime(e)
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("augment", help="write DCT-thresholded copies of a dataset")
    a.add_argument("--dataset", required=True)
    a.add_argument("--format", choices=["cifar-binary", "idx", "image-directory"])
    a.add_argument("--output-format", choices=["cifar-binary", "idx", "image-directory"])
    a.add_argument("--out", required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--threshold-min", type=int, default=0)
    a.add_argument("--threshold-max", type=int, default=50)
    a.set_defaults(func=cmd_augment)

    d = sub.add_parser("distort", help="write a distorted copy of a dataset")
    d.add_argument("--dataset", required=True)
    d.add_argument("--format", choices=["cifar-binary", "idx", "image-directory"])
    d.add_argument("--output-format", choices=["cifar-binary", "idx", "image-directory"])
    d.add_argument("--out", required=True)
    d.add_argument("--kind", required=True, choices=[k.value for k in Kind])
    d.add_argument("--level", required=True, type=float)
    d.add_argument("--profile", default="small", choices=["small", "large"])
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_distort)

    dc = sub.add_parser("dct", help="DCT utilities")
    dsub = dc.add_subparsers(dest="dct_command", required=True, parser_class=_Parser)
    di = dsub.add_parser("inspect", help="coefficient magnitudes of one PGM/PPM image")
    di.add_argument("image")
    di.add_argument("--csv", nargs="?", const="-", help="write the |B| table as CSV (default stdout)")
    di.add_argument("--channel", type=int, help="inspect one channel instead of summing |B|")
    di.set_defaults(func=cmd_dct_inspect)

    c = sub.add_parser("compare", help="side-by-side CSV of several report.json files")
    c.add_argument("reports", nargs="+")
    c.add_argument("--names", help="comma-separated row names")
    c.set_defaults(func=cmd_compare)

    f = sub.add_parser("fetch-cifar10", help="download CIFAR-10 and carve the desk-scale subset")
    f.add_argument("--dest", default=str(_data_root() / "cifar10-subset"))
    f.add_argument("--cache", default=str(_data_root() / "cache"))
    f.add_argument("--tarball", help="use a local cifar-10-binary.tar.gz instead of downloading")
    f.add_argument("--train-per-class", type=int, default=500)
    f.add_argument("--test-per-class", type=int, default=100)
    f.set_defaults(func=cmd_fetch)

    x = sub.add_parser("experiment", help="baseline vs DCT vs DCT-fixed-dropout over seeds")
    x.add_argument("--dataset", default="cifar10-subset")
    x.add_argument("--standin", action="store_true", help="use the offline natural-crop stand-in")
    x.add_argument("--standin-train", type=int, default=2000)
    x.add_argument("--standin-test", type=int, default=500)
    x.add_argument("--seeds", default="1,2,3")
    x.add_argument("--epochs", type=int, default=20)
    x.add_argument("--batch-size", type=int, default=128)
    x.add_argument("--blocks")
    x.add_argument("--hidden")
    x.add_argument("--profile", default="small", choices=["small", "large"])
    x.add_argument("--out", required=True)
    runtime(x)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dctnet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"dctnet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"dctnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
