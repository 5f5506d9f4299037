"""Command-line pipeline orchestration.

Subcommands: ``synth``, ``features``, ``train``, ``predict``,
``sweep-threshold``, ``evaluate``, ``plot``.  Exit codes: 0 on success,
1 on partial or runtime failure, 2 on usage errors.  Path options fall
back to ``SONGSEG_*`` environment variables where noted.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import annotations as ann
from . import evaluation, pipeline, postprocess, serialize, training
from .audio import write_wav
from .errors import CompatibilityError
from .model import BoundaryNet
from .params import RunConfig, path_from_env
from .svgplot import save_line_plot
from .synth import synth_corpus


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CompatibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="songseg",
        description="Music structure boundary detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with known boundaries")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--tracks", type=int, default=5)
    p.add_argument("--segments", type=int, nargs=2, default=(2, 4),
                   metavar=("LO", "HI"))
    p.add_argument("--duration", type=float, nargs=2, default=(8.0, 14.0),
                   metavar=("LO", "HI"), help="segment duration range in seconds")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="extract network input matrices")
    p.add_argument("--config", required=True)
    p.add_argument("--audio-dir", default=None,
                   help="directory of WAV files (env SONGSEG_AUDIO_DIR)")
    p.add_argument("--out", default=None,
                   help="matrix output directory (env SONGSEG_FEATURES_DIR)")
    p.add_argument("--force", action="store_true",
                   help="recompute even when outputs are up to date")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train the boundary detector")
    p.add_argument("--config", required=True)
    p.add_argument("--features", default=None, help="env SONGSEG_FEATURES_DIR")
    p.add_argument("--refs", default=None,
                   help="boundary annotation directory (env SONGSEG_REFS_DIR)")
    p.add_argument("--split", required=True, help="split manifest file")
    p.add_argument("--out", default=None, help="env SONGSEG_OUT_DIR")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict boundaries for one track")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", default=None, help="env SONGSEG_FEATURES_DIR")
    p.add_argument("--track", required=True)
    p.add_argument("--threshold", type=float, default=None,
                   help="defaults to the configured threshold")
    p.add_argument("--out", required=True, help="output boundary text file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep-threshold",
                       help="find the F-score-optimal picking threshold")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", default=None, help="env SONGSEG_FEATURES_DIR")
    p.add_argument("--refs", default=None, help="env SONGSEG_REFS_DIR")
    p.add_argument("--split", required=True)
    p.add_argument("--subset", choices=("train", "val", "test"), default="test")
    p.add_argument("--tolerance", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("evaluate", help="score predictions against references")
    p.add_argument("--ref-dir", default=None, help="env SONGSEG_REFS_DIR")
    p.add_argument("--est-dir", required=True)
    p.add_argument("--tolerance", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--all", action="store_true",
                   help="score both tolerances (0.5s, 3s) and both betas (1, 0.58)")
    p.add_argument("--out", default=None,
                   help="directory for CSV reports (env SONGSEG_OUT_DIR)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="plot a sweep CSV as SVG")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def cmd_synth(args) -> int:
    tracks = synth_corpus(args.seed, args.tracks,
                          segments_per_track=tuple(args.segments),
                          segment_duration=tuple(args.duration))
    audio_dir = os.path.join(args.out, "audio")
    refs_dir = os.path.join(args.out, "refs")
    os.makedirs(audio_dir, exist_ok=True)
    os.makedirs(refs_dir, exist_ok=True)
    ids = []
    for i, track in enumerate(tracks):
        tid = f"track{i:03d}"
        ids.append(tid)
        write_wav(os.path.join(audio_dir, f"{tid}.wav"), track.audio)
        ann.write_functions_file(os.path.join(refs_dir, f"{tid}.txt"),
                                 track.boundaries)
    split = ann.split_dataset(ids, args.split_seed)
    ann.save_split_manifest(os.path.join(args.out, "splits.tsv"), split)
    print(f"wrote {len(tracks)} tracks under {args.out}")
    return 0


def _extract_one(wav_path, out_dir, run, force):
    try:
        pipeline.extract_track_features(wav_path, out_dir, run, force=force)
        return wav_path, None
    except Exception as exc:  # report per-file, batch continues
        return wav_path, f"{type(exc).__name__}: {exc}"


def cmd_features(args) -> int:
    run = RunConfig.from_file(args.config)
    audio_dir = path_from_env(args.audio_dir, "SONGSEG_AUDIO_DIR")
    out_dir = path_from_env(args.out, "SONGSEG_FEATURES_DIR")
    if not audio_dir or not out_dir:
        print("error: --audio-dir and --out (or env vars) are required",
              file=sys.stderr)
        return 2
    wavs = sorted(
        os.path.join(audio_dir, f) for f in os.listdir(audio_dir)
        if f.lower().endswith(".wav")
    )
    if not wavs:
        print(f"error: no WAV files in {audio_dir}", file=sys.stderr)
        return 2
    os.makedirs(out_dir, exist_ok=True)

    failures = []
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = pool.map(
                _extract_one, wavs, [out_dir] * len(wavs),
                [run] * len(wavs), [args.force] * len(wavs))
            for wav_path, err in results:
                if err:
                    failures.append((wav_path, err))
    else:
        for wav_path in wavs:
            _, err = _extract_one(wav_path, out_dir, run, args.force)
            if err:
                failures.append((wav_path, err))

    for wav_path, err in failures:
        print(f"failed: {wav_path}: {err}", file=sys.stderr)
    print(f"features ready for {len(wavs) - len(failures)}/{len(wavs)} tracks "
          f"in {out_dir}")
    return 1 if failures else 0


def _load_examples(track_ids, features_dir, refs_dir, run):
    examples = []
    for tid in track_ids:
        inputs, frame_rate, pad = pipeline.load_track_input(
            features_dir, tid, run)
        ref_path = os.path.join(refs_dir, f"{tid}.txt")
        if not os.path.exists(ref_path):
            raise FileNotFoundError(f"missing annotations for track {tid!r}: "
                                    f"{ref_path}")
        boundaries = ann.parse_functions_file(ref_path)
        target = ann.to_target_curve(boundaries, inputs.shape[1], frame_rate, pad)
        examples.append(training.TrackExample(
            name=tid, inputs=inputs, target=target, boundaries=boundaries))
    return examples


def cmd_train(args) -> int:
    run = RunConfig.from_file(args.config)
    features_dir = path_from_env(args.features, "SONGSEG_FEATURES_DIR")
    refs_dir = path_from_env(args.refs, "SONGSEG_REFS_DIR")
    out_dir = path_from_env(args.out, "SONGSEG_OUT_DIR", ".")
    if not features_dir or not refs_dir:
        print("error: --features and --refs (or env vars) are required",
              file=sys.stderr)
        return 2
    split = ann.load_split_manifest(args.split)
    train_set = _load_examples(split.train, features_dir, refs_dir, run)
    val_set = _load_examples(split.validation, features_dir, refs_dir, run)

    model = BoundaryNet(input_height=train_set[0].inputs.shape[0],
                        seed=run.seed)
    result = training.train(model, train_set, epochs=run.epochs, seed=run.seed,
                            val_set=val_set, threshold=run.threshold)

    os.makedirs(out_dir, exist_ok=True)
    ckpt_path = os.path.join(out_dir, "checkpoint.ckpt")
    best = BoundaryNet(input_height=model.input_height, seed=run.seed)
    best.load_params(result.best_params)
    serialize.save_checkpoint(best, result.best_adam, ckpt_path,
                              config_hash=run.pipeline_hash(),
                              epoch=result.best_epoch)
    log_path = os.path.join(out_dir, "train_log.csv")
    training.write_log_csv(log_path, result.log)
    print(f"checkpoint (best epoch {result.best_epoch}) -> {ckpt_path}")
    print(f"training log -> {log_path}")
    return 0


def cmd_predict(args) -> int:
    run = RunConfig.from_file(args.config)
    features_dir = path_from_env(args.features, "SONGSEG_FEATURES_DIR")
    if not features_dir:
        print("error: --features (or SONGSEG_FEATURES_DIR) is required",
              file=sys.stderr)
        return 2
    model, _, _, _ = serialize.load_checkpoint(
        args.checkpoint, expected_hash=run.pipeline_hash())
    inputs, frame_rate, pad = pipeline.load_track_input(
        features_dir, args.track, run)
    logits = model.forward(inputs)
    curve = postprocess.from_logits(logits, frame_rate, pad)
    threshold = args.threshold if args.threshold is not None else run.threshold
    boundaries = postprocess.pick_peaks(curve, threshold)
    ann.write_boundary_file(args.out, boundaries)
    print(f"{len(boundaries)} boundaries -> {args.out}")
    return 0


def cmd_sweep(args) -> int:
    run = RunConfig.from_file(args.config)
    features_dir = path_from_env(args.features, "SONGSEG_FEATURES_DIR")
    refs_dir = path_from_env(args.refs, "SONGSEG_REFS_DIR")
    if not features_dir or not refs_dir:
        print("error: --features and --refs (or env vars) are required",
              file=sys.stderr)
        return 2
    model, _, _, _ = serialize.load_checkpoint(
        args.checkpoint, expected_hash=run.pipeline_hash())
    split = ann.load_split_manifest(args.split)
    subset = {"train": split.train, "val": split.validation,
              "test": split.test}[args.subset]
    examples = _load_examples(subset, features_dir, refs_dir, run)

    pairs = []
    for ex in examples:
        logits = model.forward(ex.inputs)
        curve = postprocess.from_logits(logits, ex.target.frame_rate,
                                        ex.target.pad_frames)
        pairs.append((curve, ex.boundaries))
    best, rows = postprocess.sweep_threshold(
        pairs, tolerance=args.tolerance, beta=args.beta)
    postprocess.write_sweep_csv(args.out_csv, rows)
    if args.out_svg:
        _sweep_svg(args.out_svg, rows, args.beta)
    best_row = next(r for r in rows if abs(r.threshold - best) < 1e-12)
    print(f"optimum threshold {best:.3f} "
          f"(F{args.beta:g}={best_row.f_score:.3f}) -> {args.out_csv}")
    return 0


def _sweep_svg(path, rows, beta) -> None:
    xs = [r.threshold for r in rows]
    save_line_plot(path, {
        "Precision": (xs, [r.precision for r in rows]),
        "Recall": (xs, [r.recall for r in rows]),
        f"F{beta:g}": (xs, [r.f_score for r in rows]),
    }, title="Score vs picking threshold", xlabel="threshold", ylabel="score")


def cmd_evaluate(args) -> int:
    ref_dir = path_from_env(args.ref_dir, "SONGSEG_REFS_DIR")
    out_dir = path_from_env(args.out, "SONGSEG_OUT_DIR")
    if not ref_dir:
        print("error: --ref-dir (or SONGSEG_REFS_DIR) is required",
              file=sys.stderr)
        return 2
    ref_ids = {os.path.splitext(f)[0] for f in os.listdir(ref_dir)
               if f.endswith(".txt")}
    est_ids = {os.path.splitext(f)[0] for f in os.listdir(args.est_dir)
               if f.endswith(".txt")}
    common = sorted(ref_ids & est_ids)
    for tid in sorted(ref_ids ^ est_ids):
        side = "reference" if tid in ref_ids else "estimate"
        print(f"warning: {tid} present only on the {side} side", file=sys.stderr)
    if not common:
        print("error: no track ids in common", file=sys.stderr)
        return 1

    pairs = [
        (ann.parse_functions_file(os.path.join(ref_dir, f"{tid}.txt")),
         ann.read_boundary_file(os.path.join(args.est_dir, f"{tid}.txt")))
        for tid in common
    ]
    settings = ([(0.5, 1.0), (0.5, 0.58), (3.0, 1.0), (3.0, 0.58)]
                if args.all else [(args.tolerance, args.beta)])
    reports = [evaluation.score_corpus(pairs, tolerance=tol, beta=beta)
               for tol, beta in settings]
    table = evaluation.format_score_table(reports,
                                          ["predictions"] * len(reports))
    print(table)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for rep in reports:
            name = f"scores_tol{rep.tolerance:g}_beta{rep.beta:g}.csv"
            with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
                fh.write("\n".join(evaluation.report_csv_lines(rep, common)) + "\n")
        with open(os.path.join(out_dir, "scores_table.txt"), "w",
                  encoding="utf-8") as fh:
            fh.write(table + "\n")
    return 0


def cmd_plot(args) -> int:
    rows = []
    with open(args.csv, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != ["threshold", "precision", "recall", "f_beta"]:
            print(f"error: unexpected CSV header {header}", file=sys.stderr)
            return 2
        for line in fh:
            t, p, r, f = (float(x) for x in line.strip().split(","))
            rows.append(postprocess.SweepRow(t, p, r, f))
    _sweep_svg(args.out, rows, 1.0)
    print(f"plot -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
