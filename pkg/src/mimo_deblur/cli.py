"""CLI entry point for mimo-deblur."""

import sys
from pathlib import Path
from typing import Optional, Sequence

import click
import yaml

from mimo_deblur.adapters.images import PngCodec
from mimo_deblur.config import ABLATIONS, VARIANT_PRESETS, Settings, describe_model, get_settings
from mimo_deblur.core import (
    ConfigurationError,
    DeblurError,
    FusionMode,
    InputError,
    ModelConfig,
    UsageError,
    ValidationError,
)
from mimo_deblur.model import count_params
from mimo_deblur.schedule import SCHEDULE_PRESETS
from mimo_deblur.use_cases import (
    DeblurService,
    EvaluationService,
    GradientCheckService,
    SynthesisService,
    TrainingService,
    load_model,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

# (mise, mosd, aff, msfr) rows of the component ablation, baseline first
ABLATION_ROWS: list[tuple[bool, bool, bool, bool]] = [
    (False, False, False, False),
    (True, False, False, False),
    (False, True, False, False),
    (False, False, True, False),
    (True, True, False, False),
    (False, True, True, False),
    (True, False, True, False),
    (True, True, True, False),
    (True, True, True, True),
]


variant_option = click.option(
    "--variant", type=click.Choice(sorted(VARIANT_PRESETS)), help="Model variant preset"
)


def _settings(ctx: click.Context, variant: Optional[str] = None) -> Settings:
    settings: Settings = ctx.obj["settings"]
    if variant is not None:
        settings.model.variant = variant
    return settings


def _echo_settings(settings: Settings) -> None:
    if settings.runtime.quiet:
        return
    print("\n⚙️  Effective configuration:")
    for line in yaml.safe_dump(settings.to_dict(), sort_keys=False).splitlines():
        print(f"  {line}")


def _apply_overrides(section: object, **values: object) -> None:
    """Copy every flag the user actually passed onto a settings section."""
    for key, value in values.items():
        if value is not None:
            setattr(section, key, value)


@click.group()
@click.option(
    "--config",
    "config_path",
    default="config.yaml",
    type=click.Path(path_type=Path),
    help="YAML config file (missing file means defaults)",
)
@variant_option
@click.option("--quiet", is_flag=True, help="Silence progress output")
@click.pass_context
def main(ctx: click.Context, config_path: Path, variant: Optional[str], quiet: bool) -> None:
    """Multi-input multi-output U-Net image deblurring."""
    settings = get_settings(config_path)
    if variant is not None:
        settings.model.variant = variant
    if quiet:
        settings.runtime.quiet = True
    ctx.obj = {"settings": settings}


@main.command()
@click.option("--manifest", required=True, type=click.Path(path_type=Path), help="Manifest of SEQ records")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path), help="Output directory")
@click.pass_context
def synthesize(ctx: click.Context, manifest: Path, out_dir: Path) -> int:
    """Average sharp frame sequences into blurry/sharp training pairs."""
    settings = _settings(ctx)
    SynthesisService(PngCodec(), quiet=settings.runtime.quiet).run(manifest, out_dir)
    return EXIT_OK


@main.command()
@click.option("--manifest", type=click.Path(path_type=Path), help="Training manifest")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), help="Run directory")
@click.option("--resume", type=click.Path(path_type=Path), help="Continue from this checkpoint")
@click.option("--schedule", type=click.Choice(sorted(SCHEDULE_PRESETS)), help="Schedule preset")
@click.option("--epochs", type=int)
@click.option("--batch-size", type=int)
@click.option("--lr", "lr0", type=float, help="Initial learning rate")
@click.option("--lr-decay-every", type=int, help="Epochs between decays")
@click.option("--lr-decay-factor", type=float)
@click.option("--lambda", "lam", type=float, help="Weight of the frequency loss")
@click.option("--seed", type=int)
@click.option("--checkpoint-every", type=int, help="Epochs between checkpoints")
@click.option("--patch-size", type=int)
@click.option("--flip-prob", type=float)
@click.option("--log-every", type=int, help="Steps between progress lines")
@click.option("--max-steps", type=int, help="Stop after this many steps")
@click.option("--steps-per-epoch", type=int, help="Fix the epoch length")
@click.option("--base-channels", type=int)
@click.option("--num-resblocks", type=int)
@click.option("--fusion", type=click.Choice([m.value for m in FusionMode]))
@click.option("--ablate", multiple=True, type=click.Choice(ABLATIONS), help="Disable a component (repeatable)")
@variant_option
@click.pass_context
def train(
    ctx: click.Context,
    variant: Optional[str],
    manifest: Optional[Path],
    out_dir: Optional[Path],
    resume: Optional[Path],
    schedule: Optional[str],
    base_channels: Optional[int],
    num_resblocks: Optional[int],
    fusion: Optional[str],
    ablate: Sequence[str],
    **train_flags: object,
) -> int:
    """Train a network on a manifest of pairs or frame sequences."""
    settings = _settings(ctx, variant)
    _apply_overrides(settings.train, schedule=schedule, **train_flags)
    _apply_overrides(
        settings.model, base_channels=base_channels, num_resblocks=num_resblocks, fusion=fusion
    )
    _apply_overrides(settings.data, train_manifest=manifest)
    _apply_overrides(settings.paths, output_dir=out_dir)
    settings.apply_ablations(ablate)
    if settings.data.train_manifest is None:
        raise UsageError("No training manifest: pass --manifest or set data.train_manifest")

    model_config = settings.model_config()
    train_config = settings.train_config()
    _echo_settings(settings)
    service = TrainingService(
        model_config,
        train_config,
        PngCodec(),
        settings.paths.output_dir,
        checkpoint_name=settings.paths.checkpoint_name,
        log_name=settings.paths.log_name,
        threads=settings.runtime.threads,
        quiet=settings.runtime.quiet,
    )
    service.write_effective_config(settings)
    service.run(settings.data.train_manifest, resume=resume)
    return EXIT_OK


@main.command(name="eval")
@click.option("--manifest", type=click.Path(path_type=Path), help="Test manifest of pairs")
@click.option("--checkpoint", type=click.Path(path_type=Path), help="Model checkpoint")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), help="Directory for the report")
@click.option("--ensemble", is_flag=True, help="Geometric self-ensemble")
@click.option("--quantize", is_flag=True, help="Round predictions to 8 bits before scoring")
@variant_option
@click.pass_context
def evaluate(
    ctx: click.Context,
    variant: Optional[str],
    manifest: Optional[Path],
    checkpoint: Optional[Path],
    out_dir: Optional[Path],
    ensemble: bool,
    quantize: bool,
) -> int:
    """Score a checkpoint with PSNR/SSIM; exits 3 if any image failed."""
    settings = _settings(ctx, variant)
    _apply_overrides(settings.data, test_manifest=manifest)
    _apply_overrides(settings.paths, output_dir=out_dir)
    if ensemble:
        settings.eval.ensemble = True
    if quantize:
        settings.eval.quantize = True
    if settings.data.test_manifest is None:
        raise UsageError("No test manifest: pass --manifest or set data.test_manifest")
    _echo_settings(settings)

    model = load_model(checkpoint or settings.checkpoint_path)
    label = describe_model(model.config)
    if settings.eval.ensemble:
        label += " + self-ensemble"
    report = EvaluationService(
        PngCodec(), threads=settings.runtime.threads, quiet=settings.runtime.quiet
    ).evaluate(
        model,
        settings.data.test_manifest,
        settings.report_path,
        variant=label,
        ensemble=settings.eval.ensemble,
        quantized=settings.eval.quantize,
    )
    return EXIT_RUNTIME if report.failed else EXIT_OK


@main.command()
@click.option("--input", "input_dir", required=True, type=click.Path(path_type=Path), help="Directory of blurry PNGs")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path), help="Output directory")
@click.option("--checkpoint", type=click.Path(path_type=Path), help="Model checkpoint")
@click.option("--ensemble", is_flag=True, help="Geometric self-ensemble")
@click.pass_context
def deblur(
    ctx: click.Context, input_dir: Path, out_dir: Path, checkpoint: Optional[Path], ensemble: bool
) -> int:
    """Restore every PNG in a directory."""
    settings = _settings(ctx)
    model = load_model(checkpoint or settings.checkpoint_path)
    DeblurService(PngCodec(), quiet=settings.runtime.quiet).run(
        model, input_dir, out_dir, ensemble=ensemble
    )
    return EXIT_OK


def _print_ablation_table(base: ModelConfig) -> None:
    def row(label: str, config: ModelConfig) -> None:
        print(f"  {label:<28} {count_params(config):>12,}")

    def mark(flag: bool) -> str:
        return "✓" if flag else "·"

    print("\nComponent ablation (MISE MOSD AFF MSFR):")
    for mise, mosd, aff, msfr in ABLATION_ROWS:
        config = ModelConfig(
            base_channels=base.base_channels,
            num_resblocks=base.num_resblocks,
            enable_mise=mise,
            enable_mosd=mosd,
            enable_aff=aff,
        )
        row(f"{mark(mise)}    {mark(mosd)}    {mark(aff)}   {mark(msfr)}", config)
    print("\nFusion variants:")
    for mode in FusionMode:
        config = ModelConfig(
            base_channels=base.base_channels, num_resblocks=base.num_resblocks, fusion=mode
        )
        row(mode.value, config)


@main.command()
@click.option("--base-channels", type=int)
@click.option("--num-resblocks", type=int)
@click.option("--ablate", multiple=True, type=click.Choice(ABLATIONS), help="Disable a component (repeatable)")
@click.option("--ablation-table", is_flag=True, help="Counts for every ablation row and fusion variant")
@variant_option
@click.pass_context
def params(
    ctx: click.Context,
    variant: Optional[str],
    base_channels: Optional[int],
    num_resblocks: Optional[int],
    ablate: Sequence[str],
    ablation_table: bool,
) -> int:
    """Print the exact number of trainable parameters."""
    settings = _settings(ctx, variant)
    _apply_overrides(settings.model, base_channels=base_channels, num_resblocks=num_resblocks)
    settings.apply_ablations(ablate)
    config = settings.model_config()
    total = count_params(config)
    print(f"{settings.variant_label}: {total:,} parameters ({total / 1e6:.2f} M)")
    if ablation_table:
        _print_ablation_table(config)
    return EXIT_OK


@main.command()
@click.option("--size", default=16, show_default=True, type=int, help="Input height and width")
@click.option("--samples", default=4, show_default=True, type=int, help="Entries per tensor (0 = all)")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--lambda", "lam", default=0.1, show_default=True, type=float)
@click.option("--tolerance", default=1e-4, show_default=True, type=float)
@click.option("--base-channels", type=int)
@click.option("--num-resblocks", type=int)
@click.option("--ablate", multiple=True, type=click.Choice(ABLATIONS), help="Disable a component (repeatable)")
@click.option("--fusion", type=click.Choice([m.value for m in FusionMode]))
@variant_option
@click.pass_context
def gradcheck(
    ctx: click.Context,
    variant: Optional[str],
    size: int,
    samples: int,
    seed: int,
    lam: float,
    tolerance: float,
    base_channels: Optional[int],
    num_resblocks: Optional[int],
    ablate: Sequence[str],
    fusion: Optional[str],
) -> int:
    """Compare analytic gradients with finite differences in float64."""
    settings = _settings(ctx, variant)
    _apply_overrides(
        settings.model, base_channels=base_channels, num_resblocks=num_resblocks, fusion=fusion
    )
    settings.apply_ablations(a for a in ablate if a != "msfr")
    if "msfr" in ablate:
        lam = 0.0
    service = GradientCheckService(tolerance=tolerance, quiet=settings.runtime.quiet)
    report = service.run(settings.model_config(), size=size, samples=samples, seed=seed, lam=lam)
    print(f"max relative error: {report.max_error:.3e}")
    return EXIT_OK if report.passed(tolerance) else EXIT_RUNTIME


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Invoke the command group and translate failures into exit codes."""
    try:
        args = list(argv) if argv is not None else None
        result = main.main(args=args, prog_name="mimo-deblur", standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except UsageError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as e:
        print(f"✗ {e}", file=sys.stderr)
        for problem in e.problems:
            print(f"  ✗ {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InputError, ConfigurationError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except DeblurError as e:
        print(f"✗ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        print(f"✗ Unexpected {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return result if isinstance(result, int) else EXIT_OK


def app() -> None:
    """CLI entry point."""
    sys.exit(run())


if __name__ == "__main__":
    app()
