"""``vismem`` command line: encode, short-term, online, eval, ablate, bench, config."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import ablation, bench
from .config import ConfigError, RunConfig, dump_config, load_config
from .encoder import (
    MANIFEST_NAME,
    FeatureFileError,
    ImageDecodeError,
    encode,
    load_features,
    load_frame,
    write_feature_file,
)
from .memory import SnapshotError, init_memory, restore, snapshot
from .metrics import LabeledSequence, UndefinedMetricError, evaluate, read_labels
from .numerics import DegenerateInputError
from .pipeline import density_map, read_scores, run_online, save_pgm, short_term_learn, write_scores

log = logging.getLogger("vismem")

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_METRIC = 5
EXIT_DATA = 6

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".pgm", ".tif", ".tiff", ".webp"}


class CheckFailed(RuntimeError):
    pass


def _effective_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.memory.seed = args.seed
        cfg.encoder = type(cfg.encoder)(**{**cfg.encoder.__dict__, "seed": args.seed})
    if getattr(args, "delta", None):
        cfg.eval.deltas = tuple(float(d) for d in args.delta.split(","))
    if getattr(args, "stride", None):
        cfg.eval.stride = args.stride
    return cfg.validate()


def _path(arg, fallback, what):
    value = arg if arg is not None else fallback
    if value is None:
        raise ConfigError(f"missing {what}")
    return Path(value)


def _list_images(source: Path) -> list[Path]:
    if source.is_dir():
        files = [p for p in source.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES]
    elif source.is_file():
        base = source.parent
        files = [base / line.strip() for line in source.read_text().splitlines() if line.strip()]
    else:
        raise FileNotFoundError(f"input not found: {source}")
    return sorted(files, key=lambda p: str(p))


def cmd_encode(args) -> int:
    cfg = _effective_config(args)
    source = _path(args.input, cfg.paths.input, "--input")
    out = _path(args.output, cfg.paths.output, "--output")
    out.mkdir(parents=True, exist_ok=True)
    files = _list_images(source)
    threads = max(1, int(os.environ.get("VISMEM_THREADS", "1")))

    def job(path):
        try:
            return encode(cfg.encoder, load_frame(path)), None
        except ImageDecodeError as exc:
            return None, exc

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(job, files))
    lines = []
    for path, (cube, err) in zip(files, results):
        if err is not None:
            if not args.skip_bad:
                raise err
            log.warning("skipping %s: %s", path, err)
            continue
        index = len(lines)
        name = f"frame_{index:06d}.vft"
        write_feature_file(out / name, cube)
        lines.append(f"{index}\t{name}\n")
    (out / MANIFEST_NAME).write_text("".join(lines))
    log.info("encoded %d frames into %s", len(lines), out)
    return EXIT_OK


def _load_bank(path, cfg: RunConfig, shape):
    if path is not None:
        bank = restore(Path(path).read_bytes())
        if bank.cube_shape != tuple(shape):
            raise FeatureFileError(f"memory cubes {bank.cube_shape} do not match features {tuple(shape)}")
        return bank
    m = cfg.memory
    return init_memory(m.n, *shape, gamma_w=m.gamma_w, gamma_r=m.gamma_r, seed=m.seed)


def _write_json(obj, path) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_short_term(args) -> int:
    cfg = _effective_config(args)
    manifest = _path(args.input, cfg.paths.input, "--input")
    cubes = [cube for _, cube in load_features(manifest)]
    if not cubes:
        raise ConfigError("short-term corpus is empty")
    bank = _load_bank(args.memory_in or cfg.paths.memory_in, cfg, cubes[0].shape)
    st = cfg.short_term
    bank, report = short_term_learn(bank, cubes, st.max_epochs, st.acc_threshold, st.patience, inplace=True)
    _path(args.memory_out, cfg.paths.memory_out, "--memory-out").write_bytes(snapshot(bank))
    _write_json(report.to_dict(), args.output or cfg.paths.output)
    return EXIT_OK


def cmd_online(args) -> int:
    cfg = _effective_config(args)
    manifest = _path(args.input, cfg.paths.input, "--input")
    out = _path(args.output, cfg.paths.output, "--output")
    density_dir = args.density_out or cfg.paths.density_out
    timing = args.timing or cfg.online.timing
    stream = load_features(manifest)
    first = next(stream, None)
    records = []
    bank = None
    if first is not None:
        bank = _load_bank(args.memory_in or cfg.paths.memory_in, cfg, first[1].shape)
        size = cfg.online.density_size or cfg.encoder.resize
        if density_dir:
            Path(density_dir).mkdir(parents=True, exist_ok=True)

        def frames():
            yield first
            yield from stream

        for record, x, rr in run_online(bank, frames(), inplace=True):
            if not timing:
                record.ms = 0.0
            records.append(record)
            if density_dir:
                dm = density_map(x, rr, (size[1], size[0]), record.index)
                save_pgm(dm, Path(density_dir) / f"frame_{record.index:06d}.pgm")
    write_scores(records, out)
    memory_out = args.memory_out or cfg.paths.memory_out
    if memory_out and bank is not None:
        Path(memory_out).write_bytes(snapshot(bank))
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _effective_config(args)
    records = read_scores(_path(args.input, cfg.paths.input, "--input"))
    index, counts = read_labels(_path(args.labels, cfg.paths.labels, "--labels"))
    votes = dict(zip(index.tolist(), counts.tolist()))
    missing = [r.index for r in records if r.index not in votes]
    if missing:
        raise UndefinedMetricError(f"no label for scored frames {missing[:5]}")
    seq = LabeledSequence([votes[r.index] for r in records], [r.interestingness for r in records])
    ev = cfg.eval
    report = evaluate(seq, ev.deltas, threshold=ev.category_threshold, stride=ev.stride, pessimistic=ev.pessimistic)
    _write_json(report.to_dict(), args.output or cfg.paths.output)
    return EXIT_OK


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def cmd_ablate(args) -> int:
    cfg = _effective_config(args)
    names = list(ablation.SUITES) if args.suite == "all" else [args.suite]
    seed = cfg.memory.seed
    result = {name: ablation.SUITES[name](seed=seed) for name in names}
    _write_json(_jsonable(result), args.output or cfg.paths.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = [bench.time_frame(*dims, repeats=args.repeats) for dims in bench.parse_dims(args.dims)]
    print(bench.format_table(rows))
    result = {"rows": rows}
    if args.scaling:
        scaling = bench.spatial_scaling(repeats=args.repeats)
        result["scaling"] = scaling
        print(f"read-time ratio 16->32: {scaling['ratios'][0]:.2f} (limit {scaling['limit']})")
    if args.output:
        _write_json(result, args.output)
    if args.scaling and not result["scaling"]["ok"]:
        raise CheckFailed("spatial scaling exceeds the log-linear limit")
    return EXIT_OK


def cmd_config(args) -> int:
    text = dump_config(_effective_config(args))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vismem", description="Visual memory interestingness toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="override memory and encoder seeds")
        p.set_defaults(func=func)
        return p

    p = command("encode", cmd_encode, "encode an image directory or list into feature files")
    p.add_argument("--input")
    p.add_argument("--output", help="feature directory")
    p.add_argument("--skip-bad", action="store_true", help="skip undecodable images instead of aborting")

    p = command("short-term", cmd_short_term, "short-term learning on a feature manifest")
    p.add_argument("--input", help="feature manifest")
    p.add_argument("--memory-in")
    p.add_argument("--memory-out")
    p.add_argument("--output", help="report JSON (default: stdout)")

    p = command("online", cmd_online, "score a feature stream online")
    p.add_argument("--input", help="feature manifest")
    p.add_argument("--memory-in")
    p.add_argument("--memory-out")
    p.add_argument("--output", help="score file (JSON lines)")
    p.add_argument("--density-out", help="directory for per-frame PGM density maps")
    p.add_argument("--timing", action="store_true", help="record per-frame wall time (makes output non-reproducible)")

    p = command("eval", cmd_eval, "evaluate scores against annotator labels")
    p.add_argument("--input", help="score file")
    p.add_argument("--labels")
    p.add_argument("--output", help="report JSON (default: stdout)")
    p.add_argument("--delta", help="comma-separated list, e.g. 1,2,3")
    p.add_argument("--stride", type=int)

    p = command("ablate", cmd_ablate, "run memory ablation experiments")
    p.add_argument("suite", choices=[*ablation.SUITES, "all"])
    p.add_argument("--output")

    p = command("bench", cmd_bench, "time reads and frames over a dims grid")
    p.add_argument("--dims", default="100x64x12x12", help="comma-separated NxCxHxW list")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--scaling", action="store_true", help="also check 16->32 read-time scaling")
    p.add_argument("--output")

    p = command("config", cmd_config, "print the effective configuration")
    p.add_argument("--output")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (OSError, FeatureFileError, SnapshotError, ImageDecodeError) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except UndefinedMetricError as exc:
        log.error("metric error: %s", exc)
        return EXIT_METRIC
    except (DegenerateInputError, CheckFailed) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
