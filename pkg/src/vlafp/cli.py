"""Command-line surface: synth, segment, train, fingerprint, index, eval, inspect."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .audio import Waveform, load_audio, write_wav
from .augment import AugmentConfig, make_ir_pool, make_noise_pool
from .dsp import MelConfig
from .evaluation import cbr_evaluate, dtr_evaluate, make_dtr_queries, simulate_broadcast
from .index import FingerprintIndex
from .model import ModelConfig, init_parameters, load_checkpoint, save_checkpoint
from .pipeline import build_index, fingerprint_segments, make_embedder, training_sources
from .segmentation import (
    SegmenterConfig,
    default_theta,
    segment,
    segment_fixed,
    write_manifest,
)
from .synth import SynthSpec, generate
from .training import TrainConfig, train


def _theta(value: str) -> float:
    if value.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(value)


def _float_pair(value: str) -> tuple[float, float]:
    lo, hi = value.split(":")
    return float(lo), float(hi)


def _aug_set(value: str) -> frozenset:
    if value.lower() in ("none", ""):
        return frozenset()
    stages = {s.strip().lower() for s in value.split(",") if s.strip()}
    unknown = stages - {"ts", "bg", "ir"}
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown augmentation stages: {sorted(unknown)}")
    return frozenset(stages)


def load_corpus(audio_dir: str, sample_rate: int) -> tuple[list[tuple[int, Waveform]], list[str]]:
    root = Path(audio_dir)
    if root.is_file():
        files = [root]
    else:
        if not root.exists():
            raise FileNotFoundError(f"no such audio path: {audio_dir}")
        files = sorted(p for p in root.iterdir() if p.suffix.lower() in (".wav", ".f32", ".raw"))
    if not files:
        raise FileNotFoundError(f"no audio files under {audio_dir}")
    corpus = [(i, load_audio(p, sample_rate)) for i, p in enumerate(files)]
    return corpus, [str(p) for p in files]


def make_aug_config(args, sample_rate: int) -> AugmentConfig:
    stages = args.aug
    bg_pool: tuple = ()
    ir_pool: tuple = ()
    if "bg" in stages:
        if getattr(args, "bg_dir", None):
            bg_pool = tuple(w for _, w in load_corpus(args.bg_dir, sample_rate)[0])
        else:
            bg_pool = make_noise_pool(24, 3.0, sample_rate, args.seed + 101)
    if "ir" in stages:
        if getattr(args, "ir_dir", None):
            ir_pool = tuple(w for _, w in load_corpus(args.ir_dir, sample_rate)[0])
        else:
            ir_pool = make_ir_pool(12, 0.25, sample_rate, args.seed + 202)
    return AugmentConfig(
        enable_ts="ts" in stages,
        enable_bg="bg" in stages,
        enable_ir="ir" in stages,
        ts_range=args.ts,
        snr_range_db=args.snr,
        bg_pool=bg_pool,
        ir_pool=ir_pool,
        seed=args.seed,
    )


def seg_config_from_args(args) -> SegmenterConfig | None:
    if args.method == "fixed":
        return None
    theta = args.theta if args.theta is not None else default_theta(args.method)
    return SegmenterConfig(
        t_min=args.tmin,
        t_max=args.tmax,
        theta=theta,
        method=args.method,
        pelt_jump=getattr(args, "pelt_jump", 1),
        pelt_penalty=getattr(args, "pelt_penalty", None),
    )


def model_config_from_args(args) -> ModelConfig:
    return ModelConfig(
        f_bins=args.mel_bands,
        d1=args.dim,
        d2=args.dim,
        d=args.dim,
        n_blocks=args.blocks,
        n_heads=args.heads,
        d_head=args.dhead,
        ffn_alpha=args.alpha,
    )


def write_run_manifest(out_path: str | Path, subcommand: str, args) -> None:
    flags = {k: repr(v) for k, v in sorted(vars(args).items()) if k != "func"}
    payload = {
        "tool": "vlafp",
        "version": __version__,
        "subcommand": subcommand,
        "flags": flags,
        "config_digest": hashlib.sha256(json.dumps(flags, sort_keys=True).encode()).hexdigest(),
    }
    Path(str(out_path) + ".manifest.json").write_text(json.dumps(payload, indent=2) + "\n")


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- subcommands ------------------------------------------------------------


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_audios=args.n,
        duration_range=(args.dur, args.dur),
        sample_rate=args.rate,
        recipe=args.recipe,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for aid, w in generate(spec):
        write_wav(out / f"audio_{aid:04d}.wav", w)
    write_run_manifest(out / "corpus", "synth", args)
    print(f"wrote {args.n} audios to {out}")
    return 0


def cmd_segment(args) -> int:
    corpus, files = load_corpus(args.audio, args.rate)
    cfg = seg_config_from_args(args)

    def run(item):
        aid, w = item
        if cfg is None:
            return segment_fixed(w, args.window, args.hop, audio_id=aid)
        return segment(w, cfg, audio_id=aid)

    per_audio = _pmap(run, corpus, args.threads)
    segments = [s for segs in per_audio for s in segs]
    theta = cfg.theta if cfg is not None else 0.0
    write_manifest(args.out, segments, args.method, theta)
    write_run_manifest(args.out, "segment", args)
    print(f"{len(segments)} segments from {len(corpus)} audios -> {args.out}")
    for path, segs in zip(files, per_audio):
        print(f"  {path}: {len(segs)}")
    return 0


def cmd_train(args) -> int:
    corpus, _ = load_corpus(args.corpus, args.rate)
    mel_cfg = MelConfig(n_mels=args.mel_bands)
    model_cfg = model_config_from_args(args)
    seg_cfg = seg_config_from_args(args)
    sources = training_sources(corpus, seg_cfg, mel_cfg, args.window, args.hop)
    aug_cfg = make_aug_config(args, args.rate)
    train_cfg = TrainConfig(
        tau=args.tau,
        batch_items=args.batch,
        n_pos=args.npos,
        lr=args.lr,
        epochs=args.epochs,
        seed=args.seed,
    )
    params, history = train(
        sources,
        model_cfg,
        train_cfg,
        aug_cfg,
        mel_cfg,
        log=lambda e, l: print(f"epoch {e}: mean loss {l:.4f}", flush=True),
    )
    save_checkpoint(args.out, params, model_cfg)
    hist_path = Path(args.out).with_suffix(".loss.csv")
    with open(hist_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, loss in enumerate(history):
            writer.writerow([epoch, f"{loss:.6f}"])
    write_run_manifest(args.out, "train", args)
    print(f"checkpoint -> {args.out}; loss history -> {hist_path}")
    return 0


def cmd_fingerprint(args) -> int:
    corpus, _ = load_corpus(args.audio, args.rate)
    params, model_cfg = load_checkpoint(args.ckpt)
    mel_cfg = MelConfig(n_mels=model_cfg.f_bins)
    seg_cfg = seg_config_from_args(args)

    def run(item):
        aid, w = item
        segs = (
            segment_fixed(w, args.window, args.hop, audio_id=aid)
            if seg_cfg is None
            else segment(w, seg_cfg, audio_id=aid)
        )
        return fingerprint_segments(w, segs, mel_cfg, params, model_cfg)

    index = FingerprintIndex(model_cfg.d, metadata="fingerprints")
    for entries in _pmap(run, corpus, args.threads):
        for e in entries:
            index.insert(e)
    index.save(args.out)
    write_run_manifest(args.out, "fingerprint", args)
    print(f"{len(index)} fingerprints -> {args.out}")
    return 0


def cmd_index_build(args) -> int:
    merged: FingerprintIndex | None = None
    for path in args.fingerprints:
        part = FingerprintIndex.load(path)
        if merged is None:
            merged = part
        else:
            if part.dim != merged.dim:
                raise ValueError(f"dim mismatch: {part.dim} != {merged.dim}")
            for i in range(len(part)):
                merged.insert(part.entry(i))
    if merged is None:
        raise ValueError("no fingerprint files given")
    merged.save(args.out)
    write_run_manifest(args.out, "index-build", args)
    print(f"index with {len(merged)} entries -> {args.out}")
    return 0


def cmd_index_query(args) -> int:
    index = FingerprintIndex.load(args.idx)
    queries = FingerprintIndex.load(args.fingerprints)
    writer = csv.writer(sys.stdout)
    writer.writerow(
        ["query_ord", "rank", "audio_id", "segment_ord", "start_time", "duration", "score"]
    )
    for qi in range(len(queries)):
        entry = queries.entry(qi)
        for rank, (hit, score) in enumerate(index.search_top_k(entry.vector, args.k)):
            writer.writerow(
                [qi, rank, hit.audio_id, hit.segment_ord, f"{hit.start_time:.3f}",
                 f"{hit.duration:.3f}", f"{score:.6f}"]
            )
    return 0


def cmd_eval_cbr(args) -> int:
    corpus, _ = load_corpus(args.audio, args.rate)
    params, model_cfg = load_checkpoint(args.ckpt)
    mel_cfg = MelConfig(n_mels=model_cfg.f_bins)
    seg_cfg = seg_config_from_args(args)
    rng = np.random.default_rng(args.seed)
    aug_cfg = make_aug_config(args, args.rate)

    commercial = dict(corpus)[args.commercial_id]
    others = [w for aid, w in corpus if aid != args.commercial_id]
    sim = simulate_broadcast(commercial, others, aug_cfg, rng, n_others=args.others)

    commercial_index = build_index(
        [(args.commercial_id, commercial)], seg_cfg, mel_cfg, params, model_cfg,
        args.window, args.hop, metadata="cbr-commercial",
    )
    broadcast_segs = (
        segment(sim.stream, seg_cfg, audio_id=-1)
        if seg_cfg is not None
        else segment_fixed(sim.stream, args.window, args.hop, audio_id=-1)
    )
    entries = fingerprint_segments(sim.stream, broadcast_segs, mel_cfg, params, model_cfg)
    scored_segments = [(seg, e.vector) for seg, e in zip(broadcast_segs, entries)]
    report = cbr_evaluate(commercial_index, scored_segments, sim.span)

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "tp", "fp", "fn", "precision", "recall", "f1", "best"])
        for row in report.rows:
            writer.writerow(
                [f"{row.threshold:.6f}", row.tp, row.fp, row.fn,
                 f"{row.precision:.6f}", f"{row.recall:.6f}", f"{row.f1:.6f}",
                 int(row == report.best)]
            )
    dump_path = Path(args.out).with_suffix(".scores.csv")
    with open(dump_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["start_time", "duration", "score", "label"])
        for start, dur, score, label in report.scored:
            writer.writerow([f"{start:.4f}", f"{dur:.4f}", f"{score:.6f}", int(label)])
    write_run_manifest(args.out, "eval-cbr", args)
    print(
        f"CBR best F1 {report.best.f1:.4f} at threshold {report.best.threshold:.4f} "
        f"(P={report.best.precision:.4f}, R={report.best.recall:.4f}) -> {args.out}"
    )
    return 0


def cmd_eval_dtr(args) -> int:
    corpus, _ = load_corpus(args.audio, args.rate)
    params, model_cfg = load_checkpoint(args.ckpt)
    mel_cfg = MelConfig(n_mels=model_cfg.f_bins)
    rng = np.random.default_rng(args.seed)
    aug_cfg = make_aug_config(args, args.rate)

    n_targets = args.targets if args.targets is not None else min(500, len(corpus))
    targets = corpus[:n_targets]
    database = corpus if args.dummies is None else corpus[: n_targets + args.dummies]
    index = build_index(
        database, None, mel_cfg, params, model_cfg, args.window, args.hop, metadata="dtr-db"
    )
    durations = [float(d) for d in args.durations.split(",")]
    queries = make_dtr_queries(
        targets, durations, aug_cfg, rng, queries_per_target=args.queries_per_target
    )
    embed = make_embedder(params, model_cfg, mel_cfg)
    report = dtr_evaluate(index, queries, embed, args.window, args.hop)

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["duration_s", "hit_rate"])
        for dur in durations:
            writer.writerow([dur, f"{report.hit_rates[dur]:.6f}"])
    dump_path = Path(args.out).with_suffix(".results.csv")
    with open(dump_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target_id", "duration_s", "retrieved_id", "hit", "n_lookups"])
        for r in report.results:
            writer.writerow([r.target_id, r.duration_s, r.retrieved_id, int(r.hit), r.n_lookups])
    write_run_manifest(args.out, "eval-dtr", args)
    for dur in durations:
        print(f"DTR hit rate @ {dur:g}s: {report.hit_rates[dur]:.4f}")
    print(f"reports -> {args.out}, {dump_path}")
    return 0


def cmd_init(args) -> int:
    model_cfg = model_config_from_args(args)
    params = init_parameters(model_cfg, seed=args.seed)
    save_checkpoint(args.out, params, model_cfg)
    write_run_manifest(args.out, "init", args)
    print(f"random-init checkpoint -> {args.out}")
    return 0


def cmd_inspect(args) -> int:
    path = Path(args.path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    magic = path.open("rb").read(4)
    if magic == b"VLIX":
        index = FingerprintIndex.load(path)
        print(f"fingerprint index: dim={index.dim} entries={len(index)} bytes={path.stat().st_size}")
        audio_ids = {index.entry(i).audio_id for i in range(len(index))}
        print(f"distinct audio ids: {len(audio_ids)}")
    elif magic == b"VLFP":
        params, cfg = load_checkpoint(path)
        n_values = sum(v.size for v in params.values())
        print(f"model checkpoint: {cfg}")
        print(f"tensors={len(params)} parameters={n_values}")
    elif path.suffix == ".json":
        print(path.read_text().rstrip())
    else:
        lines = path.read_text().splitlines()
        print(f"text artifact: {len(lines)} lines")
        for line in lines[:5]:
            print(f"  {line}")
    return 0


# -- parser wiring ----------------------------------------------------------


def _add_common(p, rate=True):
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads (1 = deterministic mode)")
    p.add_argument("--config", default=None, help="key=value config file; flags win")
    if rate:
        p.add_argument("--rate", type=int, default=8000, help="expected sample rate")


def _add_segmentation(p):
    p.add_argument(
        "--method",
        choices=["main", "nosilence", "pelt", "waveform", "fixed"],
        default="main",
    )
    p.add_argument("--theta", type=_theta, default=None, help='z-score threshold; "inf" allowed')
    p.add_argument("--tmin", type=float, default=0.5)
    p.add_argument("--tmax", type=float, default=5.0)
    p.add_argument("--window", type=float, default=1.0, help="fixed window seconds")
    p.add_argument("--hop", type=float, default=0.5, help="fixed hop seconds")
    p.add_argument("--pelt-penalty", type=float, default=None)
    p.add_argument("--pelt-jump", type=int, default=1)


def _add_model(p):
    p.add_argument("--mel-bands", type=int, default=64)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--dhead", type=int, default=8)
    p.add_argument("--alpha", type=float, default=1.0)


def _add_aug(p, default="bg,ir"):
    p.add_argument("--aug", type=_aug_set, default=_aug_set(default), help="stages: ts,bg,ir or none")
    p.add_argument("--snr", type=_float_pair, default=(1.0, 10.0), help="SNR range dB lo:hi")
    p.add_argument("--ts", type=_float_pair, default=(0.8, 1.2), help="time-stretch range lo:hi")
    p.add_argument("--bg-dir", default=None, help="directory of noise WAVs (default: synthetic)")
    p.add_argument("--ir-dir", default=None, help="directory of IR WAVs (default: synthetic)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vlafp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vlafp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus of WAV files")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--dur", type=float, default=10.0)
    p.add_argument("--recipe", default="mixture", choices=["mixture", "tone_noise", "tone_silence"])
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("segment", help="segment audio files into a manifest")
    p.add_argument("--audio", required=True)
    p.add_argument("--out", required=True)
    _add_segmentation(p)
    _add_common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("train", help="contrastive training; writes a checkpoint")
    p.add_argument("--corpus", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--npos", type=int, default=3)
    p.add_argument("--batch", type=int, default=60)
    p.add_argument("--out", required=True)
    _add_segmentation(p)
    _add_model(p)
    _add_aug(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("fingerprint", help="fingerprint audio into a .vlix file")
    p.add_argument("--audio", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    _add_segmentation(p)
    _add_common(p)
    p.set_defaults(func=cmd_fingerprint)

    p = sub.add_parser("index", help="index operations")
    isub = p.add_subparsers(dest="index_command", required=True)
    pb = isub.add_parser("build", help="merge fingerprint files into an index")
    pb.add_argument("--fingerprints", nargs="+", required=True)
    pb.add_argument("--out", required=True)
    _add_common(pb, rate=False)
    pb.set_defaults(func=cmd_index_build)
    pq = isub.add_parser("query", help="query an index with stored fingerprints")
    pq.add_argument("--idx", required=True)
    pq.add_argument("--fingerprints", required=True)
    pq.add_argument("--k", type=int, default=1)
    _add_common(pq, rate=False)
    pq.set_defaults(func=cmd_index_query)

    p = sub.add_parser("eval", help="retrieval evaluations")
    esub = p.add_subparsers(dest="eval_command", required=True)
    pc = esub.add_parser("cbr", help="commercial-broadcast retrieval")
    pc.add_argument("--audio", required=True)
    pc.add_argument("--ckpt", required=True)
    pc.add_argument("--commercial-id", type=int, default=0)
    pc.add_argument("--others", type=int, default=19)
    pc.add_argument("--out", required=True)
    _add_segmentation(pc)
    _add_aug(pc, default="ts,bg,ir")
    _add_common(pc)
    pc.set_defaults(func=cmd_eval_cbr)
    pd = esub.add_parser("dtr", help="dummy-target retrieval")
    pd.add_argument("--audio", required=True)
    pd.add_argument("--ckpt", required=True)
    pd.add_argument("--durations", default="1,2,3,5,6,10")
    pd.add_argument("--targets", type=int, default=None)
    pd.add_argument("--dummies", type=int, default=None)
    pd.add_argument("--queries-per-target", type=int, default=1)
    pd.add_argument("--out", required=True)
    pd.add_argument("--window", type=float, default=1.0)
    pd.add_argument("--hop", type=float, default=0.5)
    _add_aug(pd, default="bg,ir")
    _add_common(pd)
    pd.set_defaults(func=cmd_eval_dtr)

    p = sub.add_parser("init", help="write a randomly initialized checkpoint")
    p.add_argument("--out", required=True)
    _add_model(p)
    _add_common(p, rate=False)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("inspect", help="describe an artifact file")
    p.add_argument("path")
    p.set_defaults(func=cmd_inspect)

    return parser


def _apply_config_file(argv: list[str]) -> list[str]:
    """Fold --config key=value pairs in as early flags; explicit flags win.

    Injected flags sit right after the subcommand words; argparse gives
    later occurrences precedence, so anything typed on the command line
    overrides the file.
    """
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise ValueError("--config needs a file argument")
    cfg_path = Path(argv[at + 1])
    if not cfg_path.exists():
        raise FileNotFoundError(f"no such config file: {cfg_path}")
    injected = []
    for line in cfg_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        injected += [f"--{key.strip().replace('_', '-')}", value.strip()]
    depth = 2 if argv and argv[0] in ("index", "eval") else 1
    return argv[:depth] + injected + argv[depth:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (
        ValueError,
        FileNotFoundError,
        IsADirectoryError,
        RuntimeError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
