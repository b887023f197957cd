"""Business logic use cases."""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from mimo_deblur.adapters.checkpoints import load_checkpoint, save_checkpoint
from mimo_deblur.adapters.images import list_images
from mimo_deblur.adapters.reports import TrainLogWriter, write_eval_report
from mimo_deblur.config import Settings, config_hash
from mimo_deblur.core import (
    DatasetManifest,
    EvalReport,
    EvalRow,
    ImageCodec,
    InputError,
    ModelConfig,
    NonFiniteLossError,
    PairRecord,
    Restorer,
    TrainConfig,
    TrainLogRecord,
)
from mimo_deblur.core.optim import Adam
from mimo_deblur.datapipe import (
    BatchSampler,
    load_manifest,
    load_pair,
    load_sequence,
    sliding_pairs,
    validate_manifest,
)
from mimo_deblur.ensemble import EnsembleRestorer, PaddedRestorer
from mimo_deblur.gradcheck import GradCheckReport, check_model_gradients
from mimo_deblur.losses import total_loss
from mimo_deblur.metrics import psnr, quantize, ssim
from mimo_deblur.model import MimoUNet, NetworkRestorer
from mimo_deblur.schedule import lr_at_epoch, steps_per_epoch, total_steps

BANNER = "=" * 70
EFFECTIVE_CONFIG_NAME = "config.effective.yaml"


class _Console:
    """Progress output shared by the services; silent when ``quiet``."""

    quiet: bool = False

    def _print(self, message: str = "") -> None:
        if not self.quiet:
            print(message)

    def _banner(self, title: str) -> None:
        self._print("\n" + BANNER)
        self._print(title)
        self._print(BANNER)


def load_corpus(manifest: DatasetManifest, codec: ImageCodec) -> list[tuple[np.ndarray, np.ndarray]]:
    """Decode pair records and synthesize pairs from sequence records."""
    pairs = [load_pair(record, codec) for record in manifest.pairs]
    for record in manifest.sequences:
        sequence = load_sequence(record, codec)
        pairs.extend((b, s) for _, b, s in sliding_pairs(sequence, record.frames_per_blur))
    return pairs


class SynthesisService(_Console):
    """Turns sequences of sharp frames into blurry/sharp PNG pairs plus a manifest."""

    def __init__(self, codec: ImageCodec, quiet: bool = False) -> None:
        self.codec = codec
        self.quiet = quiet

    def run(self, manifest_path: Path, out_dir: Path) -> Path:
        self._banner("🎞️  BLUR SYNTHESIS")
        manifest = load_manifest(manifest_path)
        validate_manifest(manifest, self.codec)
        if not manifest.sequences:
            raise InputError(f"{manifest_path} contains no SEQ records to synthesize from")

        out_dir = Path(out_dir)
        (out_dir / "blurry").mkdir(parents=True, exist_ok=True)
        (out_dir / "sharp").mkdir(parents=True, exist_ok=True)
        lines = []
        for record in manifest.sequences:
            sequence = load_sequence(record, self.codec)
            count = 0
            for start, blurry, sharp in sliding_pairs(sequence, record.frames_per_blur):
                name = f"{record.record_id}_{start:05d}.png"
                self.codec.encode(blurry, out_dir / "blurry" / name)
                self.codec.encode(sharp, out_dir / "sharp" / name)
                lines.append(f"blurry/{name}\tsharp/{name}")
                count += 1
            self._print(
                f"  ✓ {record.record_id}: {len(sequence)} frames → {count} pairs "
                f"(M={record.frames_per_blur})"
            )

        output = out_dir / "manifest.tsv"
        output.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        self._print(f"\n✓ {len(lines)} pairs written, manifest: {output}")
        return output


@dataclass
class TrainResult:
    records: list[TrainLogRecord] = field(default_factory=list)
    checkpoint_path: Optional[Path] = None
    final_step: int = 0


def parameter_norms(model: MimoUNet) -> dict[str, float]:
    return {name: float(np.linalg.norm(p.data)) for name, p in model.named_parameters()}


class TrainingService(_Console):
    """Runs the optimization loop with periodic checkpoints and a per-step log."""

    def __init__(
        self,
        model_config: ModelConfig,
        train_config: TrainConfig,
        codec: ImageCodec,
        output_dir: Path,
        checkpoint_name: str = "model.ckpt",
        log_name: str = "train_log.tsv",
        threads: int = 1,
        quiet: bool = False,
    ) -> None:
        self.model_config = model_config
        self.train_config = train_config
        self.codec = codec
        self.output_dir = Path(output_dir)
        self.checkpoint_path = self.output_dir / checkpoint_name
        self.log_path = self.output_dir / log_name
        self.threads = threads
        self.quiet = quiet

    def write_effective_config(self, settings: Settings) -> Path:
        path = self.output_dir / EFFECTIVE_CONFIG_NAME
        self.output_dir.mkdir(parents=True, exist_ok=True)
        data = settings.to_dict()
        data["resolved"] = {
            "model": self.model_config.to_dict(),
            "train": self.train_config.to_dict(),
        }
        path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
        return path

    def _load_pairs(self, manifest_path: Path) -> list[tuple[np.ndarray, np.ndarray]]:
        self._banner("📥 LOADING TRAINING DATA")
        manifest = load_manifest(manifest_path)
        validate_manifest(manifest, self.codec)
        pairs = load_corpus(manifest, self.codec)
        if not pairs:
            raise InputError(f"{manifest_path} yields no training pairs")
        self._print(f"  ✓ {len(manifest.pairs)} pair records, {len(manifest.sequences)} sequences")
        self._print(f"  ✓ {len(pairs)} training pairs")
        return pairs

    def _abort(self, model: MimoUNet, step: int, epoch: int, lr: float, report) -> None:
        norms = parameter_norms(model)
        finite = [v for v in norms.values() if math.isfinite(v)]
        diagnostics = {
            "step": step,
            "epoch": epoch,
            "lr": lr,
            "l_cont": report.l_cont,
            "l_msfr": report.l_msfr,
            "non_finite_parameters": sorted(k for k, v in norms.items() if not math.isfinite(v)),
            "parameter_norm_min": min(finite, default=float("nan")),
            "parameter_norm_max": max(finite, default=float("nan")),
            "parameter_norms": norms,
        }
        dump = self.output_dir / "nonfinite_dump.yaml"
        dump.write_text(yaml.safe_dump(diagnostics, sort_keys=False), encoding="utf-8")
        self._print(f"  ✗ Non-finite loss at step {step} (lr={lr:g}); diagnostics: {dump}")
        raise NonFiniteLossError(
            f"Loss became non-finite at step {step} (epoch {epoch}, lr {lr:g})", diagnostics
        )

    def run(self, manifest_path: Path, resume: Optional[Path] = None) -> TrainResult:
        cfg = self.train_config
        pairs = self._load_pairs(manifest_path)
        epoch_steps = steps_per_epoch(len(pairs), cfg)
        last_step = total_steps(len(pairs), cfg)
        checkpoint_interval = cfg.checkpoint_every * epoch_steps

        rng = np.random.default_rng(cfg.seed)
        if resume is not None:
            checkpoint = load_checkpoint(resume, expected=self.model_config)
            model = checkpoint.build_model()
            optimizer = Adam(model.parameters())
            optimizer.state = checkpoint.restore_adam(model.parameters())
            start_step = int(checkpoint.train_state.get("step", 0))
            if "rng" in checkpoint.train_state:
                rng.bit_generator.state = checkpoint.train_state["rng"]
        else:
            model = MimoUNet(self.model_config, rng=rng)
            optimizer = Adam(model.parameters())
            start_step = 0

        log = TrainLogWriter(self.log_path)
        if resume is not None:
            log.truncate_after(start_step)
        sampler = BatchSampler(
            pairs,
            batch_size=cfg.batch_size,
            patch=cfg.patch_size,
            flip_prob=cfg.flip_prob,
            threads=self.threads,
        )

        self._banner("🏋️  TRAINING")
        self._print(f"  • Parameters: {model.num_parameters():,}")
        self._print(f"  • Steps: {start_step} → {last_step} ({epoch_steps} per epoch)")
        self._print(f"  • λ = {cfg.lam:g}, batch {cfg.batch_size}, patch {cfg.patch_size}")

        result = TrainResult(checkpoint_path=self.checkpoint_path, final_step=start_step)
        started = time.perf_counter()
        for step in range(start_step, last_step):
            epoch = step // epoch_steps
            lr = lr_at_epoch(epoch, cfg)
            blurry, sharp = sampler.sample(rng)
            predictions = model(blurry[0])
            targets = sharp.levels if self.model_config.enable_mosd else sharp.levels[:1]
            report = total_loss(predictions, targets, cfg.lam)
            if not report.is_finite:
                self._abort(model, step + 1, epoch, lr, report)

            optimizer.zero_grad()
            report.objective.backward()
            optimizer.step(lr)

            record = TrainLogRecord(
                step=step + 1,
                epoch=epoch,
                lr=lr,
                l_cont=report.l_cont,
                l_msfr=report.l_msfr,
                l_total=report.l_total,
                wall_time=time.perf_counter() - started,
            )
            log.append(record)
            result.records.append(record)
            result.final_step = step + 1

            if (step + 1) % cfg.log_every == 0 or step + 1 == last_step:
                self._print(
                    f"  step {record.step:>7}  epoch {epoch:>5}  lr {lr:.2e}  "
                    f"cont {record.l_cont:.5f}  msfr {record.l_msfr:.5f}  total {record.l_total:.5f}"
                )
            if (step + 1) % checkpoint_interval == 0 and step + 1 != last_step:
                self._checkpoint(model, optimizer, step + 1, rng)

        self._checkpoint(model, optimizer, result.final_step, rng)
        self._print(f"\n✓ Checkpoint: {self.checkpoint_path}")
        self._print(f"✓ Training log: {self.log_path}")
        return result

    def _checkpoint(self, model: MimoUNet, optimizer: Adam, step: int, rng: np.random.Generator) -> None:
        save_checkpoint(
            self.checkpoint_path,
            model,
            optimizer.state,
            {"step": step, "rng": rng.bit_generator.state},
        )


class EvaluationService(_Console):
    """Scores a restorer on a test manifest and writes the report."""

    def __init__(self, codec: ImageCodec, threads: int = 1, quiet: bool = False) -> None:
        self.codec = codec
        self.threads = max(threads, 1)
        self.quiet = quiet

    def _score(self, restorer: Restorer, record: PairRecord, quantized: bool) -> EvalRow:
        try:
            blurry, sharp = load_pair(record, self.codec)
            started = time.perf_counter()
            restored = restorer.restore(blurry)
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            restored = np.clip(restored, 0.0, 1.0)
            if quantized:
                restored = quantize(restored)
            return EvalRow(
                record_id=record.record_id,
                psnr=psnr(restored, sharp),
                ssim=ssim(restored[0], sharp[0]),
                inference_ms=elapsed_ms,
            )
        except Exception as e:
            return EvalRow(record_id=record.record_id, error=f"{type(e).__name__}: {e}")

    def evaluate(
        self,
        model: MimoUNet,
        manifest_path: Path,
        report_path: Path,
        variant: str,
        ensemble: bool = False,
        quantized: bool = False,
    ) -> EvalReport:
        self._banner("📊 EVALUATION")
        manifest = load_manifest(manifest_path, split="test")
        if manifest.sequences:
            raise InputError("Test manifests must list blurry/sharp pairs, not SEQ records")

        network = NetworkRestorer(model)
        restorer: Restorer = EnsembleRestorer(network) if ensemble else PaddedRestorer(network)
        self._print(f"  • {len(manifest.pairs)} images, ensemble={'on' if ensemble else 'off'}")

        if self.threads == 1:
            rows = [self._score(restorer, r, quantized) for r in manifest.pairs]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                rows = list(pool.map(lambda r: self._score(restorer, r, quantized), manifest.pairs))

        for row in rows:
            if row.ok:
                self._print(f"  ✓ {row.record_id}: {row.psnr:.3f} dB, SSIM {row.ssim:.4f}, {row.inference_ms:.1f} ms")
            else:
                self._print(f"  ✗ {row.record_id}: {row.error}")

        report = EvalReport(
            rows=rows,
            variant=variant,
            config_hash=config_hash(model.config),
            ensemble=ensemble,
        )
        write_eval_report(report, report_path)

        self._banner("✅ SUMMARY")
        self._print(f"  • Mean PSNR: {report.mean_psnr:.3f} dB")
        self._print(f"  • Mean SSIM: {report.mean_ssim:.4f}")
        self._print(f"  • Mean time: {report.mean_ms:.1f} ms")
        if report.infinite_psnr_count:
            self._print(f"  ⚠️  {report.infinite_psnr_count} image(s) restored exactly (PSNR = inf)")
        if report.failed:
            self._print(f"  ⚠️  {len(report.failed)} image(s) failed")
        self._print(f"  • Report: {report_path}")
        return report


class DeblurService(_Console):
    """Restores every PNG in a directory and writes the results under the same names."""

    def __init__(self, codec: ImageCodec, quiet: bool = False) -> None:
        self.codec = codec
        self.quiet = quiet

    def run(self, model: MimoUNet, input_dir: Path, out_dir: Path, ensemble: bool = False) -> list[Path]:
        self._banner("✨ DEBLURRING")
        network = NetworkRestorer(model)
        restorer: Restorer = EnsembleRestorer(network) if ensemble else PaddedRestorer(network)
        written = []
        for path in list_images(input_dir):
            restored = restorer.restore(self.codec.decode(path))
            target = Path(out_dir) / path.name
            self.codec.encode(restored, target)
            written.append(target)
            self._print(f"  ✓ {path.name}")
        self._print(f"\n✓ {len(written)} image(s) written to {out_dir}")
        return written


class GradientCheckService(_Console):
    """Runs the float64 finite-difference suite and prints per-tensor errors."""

    def __init__(self, tolerance: float = 1e-4, quiet: bool = False) -> None:
        self.tolerance = tolerance
        self.quiet = quiet

    def run(
        self,
        config: ModelConfig,
        size: int = 16,
        samples: int = 4,
        seed: int = 0,
        lam: float = 0.1,
    ) -> GradCheckReport:
        self._banner("🔬 GRADIENT CHECK")
        self._print(f"  • Input 1×3×{size}×{size}, float64, {samples or 'all'} entries per tensor")

        def progress(name: str, error: float) -> None:
            marker = "✓" if error <= self.tolerance else "✗"
            self._print(f"  {marker} {name}: {error:.2e}")

        report = check_model_gradients(config, size, samples, seed, lam, progress=progress)
        self._print(f"\n✓ Max relative error: {report.max_error:.3e} ({report.worst_tensor})")
        return report


def load_model(checkpoint_path: Path, expected: Optional[ModelConfig] = None) -> MimoUNet:
    return load_checkpoint(checkpoint_path, expected).build_model()


def zero_checkpoint(config: ModelConfig, path: Path) -> Path:
    """Write a checkpoint whose weights are all zero (the network then returns its input)."""
    save_checkpoint(path, MimoUNet.zeros(config))
    return path

