"""Command-line surface: train, sample, reconstruct, fid, gradcheck, latent.

Every command is deterministic under a fixed config and seed; repeated
invocations write byte-identical artifacts. Wall-clock timings therefore go
to stdout only, never into files.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import data, gradcheck, images, metrics, models
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig, config_lines, load_config
from .models import TrainState, TrainingDiverged
from .numerics import Rng

SAMPLE_GRID_COUNT = 64
FID_EVAL_CAP = 10_000  # reference-set size for training-time desk-FID
DESK_FID_NOTE = (
    "desk-FID uses fixed PCA-of-pixels features; "
    "values are not comparable to Inception-based FID tables"
)

CHECKPOINT_NAME = "model.ckpt"
MANIFEST_NAME = "manifest.txt"
BASIS_NAME = "fid_basis.bin"


@dataclass
class RunManifest:
    """Config echo, per-interval log records, and the final metric block."""

    config: list[str] = field(default_factory=list)
    records: list[str] = field(default_factory=list)
    final: list[str] = field(default_factory=list)

    def text(self) -> str:
        lines = ["# config"]
        lines += self.config
        lines.append("# log")
        lines += self.records
        lines.append("# final")
        lines += self.final
        return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> RunManifest:
    manifest = RunManifest()
    section = None
    for line in text.splitlines():
        if line in ("# config", "# log", "# final"):
            section = line[2:]
            continue
        if section == "config":
            manifest.config.append(line)
        elif section == "log":
            manifest.records.append(line)
        elif section == "final":
            manifest.final.append(line)
    return manifest


def _record_line(report: models.StepReport) -> str:
    return (
        f"step={report.step} total={report.total!r} recon={report.recon!r} "
        f"reg={report.reg!r} lr={report.lr!r}"
    )


def _is_image_state(state: TrainState) -> bool:
    return state.image_shape is not None


class _FidEvaluator:
    """Desk-FID against a fixed reference slice in a fixed feature space."""

    def __init__(self, dataset: data.Dataset, out_dir: Path):
        self.count = min(dataset.n, FID_EVAL_CAP)
        reference = dataset.examples[: self.count]
        if dataset.image_shape is not None:
            k = min(metrics.DEFAULT_FEATURE_DIM, self.count, dataset.dim)
            basis_path = out_dir / BASIS_NAME
            if basis_path.is_file():
                basis = metrics.load_basis(basis_path)
                self.real, _ = metrics.pixel_pca_features(reference, basis)
            else:
                self.real, basis = metrics.pixel_pca_features(reference, None, k)
                metrics.save_basis(basis_path, basis)
            self.basis = basis
        else:
            self.basis = None
            self.real = metrics.FeatureSet(reference, "real")

    def score(self, state: TrainState, rng: Rng) -> float:
        generated = models.generate(state.model, rng, self.count)
        if self.basis is not None:
            feats, _ = metrics.pixel_pca_features(generated, self.basis)
        else:
            feats = metrics.FeatureSet(generated, "generated")
        return metrics.fid(self.real, feats)


def _write_sample_artifact(
    state: TrainState, rng: Rng, out: Path, count: int
) -> Path:
    samples = models.generate(state.model, rng, count)
    if state.image_shape is not None:
        images.write_pgm(out, images.tile_grid(samples, state.image_shape))
    else:
        images.write_points_csv(out, samples)
    return out


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    root = Rng(cfg.seed)
    dataset = data.load_dataset(cfg, root.split(3))
    state = models.init_train_state(cfg, dataset.dim, dataset.image_shape)
    stream = data.batches(dataset, cfg.batch_size, state.data_rng)

    manifest = RunManifest(config=config_lines(cfg))
    log_every = cfg.eval_every if cfg.eval_every > 0 else 100
    evaluator = _FidEvaluator(dataset, out_dir) if cfg.eval_every > 0 else None
    eval_base = root.split(4)
    fid_final = None
    fid_best = None
    fid_best_step = None

    started = time.monotonic()
    report = None
    while state.step < cfg.steps:
        x = next(stream)
        try:
            report = models.train_step(state, x)
        except TrainingDiverged as exc:
            save_checkpoint(out_dir / (CHECKPOINT_NAME + ".diverged"), state)
            manifest.final.append(f"diverged_at_step={exc.step}")
            (out_dir / MANIFEST_NAME).write_text(manifest.text())
            print(f"error: {exc}", file=sys.stderr)
            return 1

        at_interval = report.step % log_every == 0
        if at_interval or report.step == cfg.steps:
            line = _record_line(report)
            manifest.records.append(line)
            print(f"{line} wall={time.monotonic() - started:.1f}s")
        if evaluator is not None and (
            report.step % cfg.eval_every == 0 or report.step == cfg.steps
        ):
            step_rng = eval_base.split(report.step)
            score = evaluator.score(state, step_rng.split(0))
            fid_final = score
            if fid_best is None or score < fid_best:
                fid_best, fid_best_step = score, report.step
            manifest.records.append(f"step={report.step} desk_fid={score!r}")
            print(f"step={report.step} desk_fid={score!r}  ({DESK_FID_NOTE})")
            ext = ".pgm" if state.image_shape is not None else ".csv"
            _write_sample_artifact(
                state,
                step_rng.split(1),
                out_dir / f"samples_step{report.step:06d}{ext}",
                SAMPLE_GRID_COUNT,
            )

    save_checkpoint(out_dir / CHECKPOINT_NAME, state)
    manifest.final.append(f"final_step={state.step}")
    if report is not None:
        manifest.final.append(
            f"final_total={report.total!r} final_recon={report.recon!r} "
            f"final_reg={report.reg!r}"
        )
    if fid_final is not None:
        manifest.final.append(
            f"fid_final={fid_final!r} fid_best={fid_best!r} "
            f"fid_best_step={fid_best_step}"
        )
    (out_dir / MANIFEST_NAME).write_text(manifest.text())
    print(
        f"done steps={state.step} out={out_dir} wall={time.monotonic() - started:.1f}s"
    )
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    state = load_checkpoint(args.ckpt)
    if args.count < 1:
        raise ValueError(f"count must be positive, got {args.count}")
    rng = Rng(args.seed)
    out = _write_sample_artifact(state, rng, Path(args.out), args.count)
    print(f"wrote {out} count={args.count}")
    return 0


def _dataset_for(state: TrainState, data_path: Optional[str]) -> data.Dataset:
    """Explicit IDX path wins; otherwise rebuild the training dataset."""
    if data_path:
        return data.load_idx(data_path, data.derive_labels_path(data_path))
    cfg = state.config
    return data.load_dataset(cfg, Rng(cfg.seed).split(3))


def cmd_reconstruct(args: argparse.Namespace) -> int:
    state = load_checkpoint(args.ckpt)
    dataset = _dataset_for(state, args.data)
    count = min(args.count, dataset.n)
    if count < 1:
        raise ValueError(f"count must be positive, got {args.count}")
    x = dataset.examples[:count]
    x_hat = models.reconstruct(state.model, x)
    err = float(np.mean(np.sum((x - x_hat) ** 2, axis=1)))
    if state.image_shape is not None:
        images.write_pgm(
            args.out, images.pair_grid(x, x_hat, state.image_shape)
        )
    else:
        images.write_points_csv(args.out, np.hstack([x, x_hat]))
    print(f"wrote {args.out} count={count} recon={err!r}")
    return 0


def cmd_fid(args: argparse.Namespace) -> int:
    if args.features_a or args.features_b:
        if not (args.features_a and args.features_b):
            raise ValueError("feature mode needs both --features-a and --features-b")
        fa = metrics.read_features_csv(args.features_a)
        fb = metrics.read_features_csv(args.features_b)
        score = metrics.fid(fa, fb)
    else:
        if not args.ckpt:
            raise ValueError(
                "need either --features-a/--features-b or --ckpt (+ optional --data)"
            )
        state = load_checkpoint(args.ckpt)
        dataset = _dataset_for(state, args.data)
        count = min(args.count, dataset.n)
        if count < 2:
            raise ValueError(f"count must be at least 2, got {args.count}")
        real = dataset.examples[:count]
        generated = models.generate(state.model, Rng(args.seed), count)
        if state.image_shape is not None:
            basis_path = Path(args.ckpt).parent / BASIS_NAME
            if basis_path.is_file():
                basis = metrics.load_basis(basis_path)
                real_f, _ = metrics.pixel_pca_features(real, basis)
            else:
                k = min(metrics.DEFAULT_FEATURE_DIM, count, dataset.dim)
                real_f, basis = metrics.pixel_pca_features(real, None, k)
                metrics.save_basis(basis_path, basis)
            gen_f, _ = metrics.pixel_pca_features(generated, basis)
        else:
            real_f = metrics.FeatureSet(real, "real")
            gen_f = metrics.FeatureSet(generated, "generated")
        score = metrics.fid(real_f, gen_f)
    print(f"# {DESK_FID_NOTE}")
    print(f"desk_fid={score!r}")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    result = gradcheck.check_config(cfg)
    print(result.report_line())
    return 0 if result.passed else 1


def cmd_latent(args: argparse.Namespace) -> int:
    state = load_checkpoint(args.ckpt)
    dataset = _dataset_for(state, args.data)
    rng = Rng(state.config.seed).split(5)
    report = metrics.latent_report(state.model.enc, dataset, rng, dataset.n)
    images.write_latent_csv(args.out, report.codes, report.labels)
    mu_norm, cov_dist = metrics.latent_summary(report.stats)
    print(f"latent_mu_norm={mu_norm!r} latent_cov_dist={cov_dist!r}")
    print(f"wrote {args.out} rows={report.codes.shape[0]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wwae",
        description=(
            "Wasserstein-Wasserstein auto-encoder laboratory: train small "
            "generative models with closed-form Gaussian W2 latent "
            "regularization (or KL / MMD baselines) and evaluate them."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training job from a config file")
    p.add_argument("--config", required=True, help="path to key = value config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="decode prior samples from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--count", type=int, default=SAMPLE_GRID_COUNT)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reconstruct", help="encode/decode data through a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", default=None, help="IDX images path (default: training data)")
    p.add_argument("--count", type=int, default=SAMPLE_GRID_COUNT)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("fid", help="desk-FID between feature sets or model vs data")
    p.add_argument("--features-a", default=None)
    p.add_argument("--features-b", default=None)
    p.add_argument("--ckpt", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fid)

    p = sub.add_parser("gradcheck", help="finite-difference check of all gradients")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("latent", help="dump latent codes and posterior statistics")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_latent)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, OSError, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
