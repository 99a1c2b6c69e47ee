"""Command-line interface: fit sails, build rigs, recolor, render, analyze.

Every command is byte-deterministic for a fixed --seed. Exit codes: 0 success,
2 for input or validation problems, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .alpha import RigConfig, fit_rig, fit_with_masks, rig_score, select_n_alpha
from .analyze import analyze_directory
from .colorimetry import ColorHistogram, EmptyDistributionError, build_histogram, patchmax_histogram
from .fit import DEFAULT_SEED, FitConfig, NumericalError, fit_sail, sweep_subdivision
from .metrics import combined_loss, e_l2, r_percent
from .pngio import load_gray_u8, load_rgb, save_rgb_u8
from .render import render_sail
from .rig import RigError, build_mapping, load_rig, recolor, save_rig
from .sail import ColorSail, decode

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


@dataclass(frozen=True)
class CliConfig:
    """Validated cross-command options; the seed is a fixed constant by
    default so reruns are byte-identical."""

    command: str
    seed: int = DEFAULT_SEED
    emit_json: bool = False


class InputError(ValueError):
    pass


def _parse_subdivision(text: str):
    """'5', '2..10', or '2,4,6' -> int or tuple of ints."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    if "," in text:
        return tuple(int(v) for v in text.split(","))
    return int(text)


def _load_fit_input(path: Path, n: int):
    """An image (PNG) or a serialized histogram (.json with n and entries)."""
    if path.suffix.lower() == ".json":
        doc = json.loads(path.read_text())
        size = int(doc["n"])
        masses = np.zeros((size, size, size))
        for i, j, k, mass in doc["entries"]:
            masses[int(i), int(j), int(k)] = float(mass)
        hist = ColorHistogram(size, masses, False).normalize()
        return hist, None, None
    image, alpha = load_rgb(path)
    pixels = image.reshape(-1, 3)
    weights = None if alpha is None else alpha.reshape(-1)
    hist = build_histogram(pixels, weights, n)
    return hist, image, weights


def _loss_dict(loss) -> dict:
    return {
        "e_l2": loss.e_l2,
        "e_kl": loss.e_kl,
        "r_percent": loss.r_percent,
        "combined": loss.combined,
        "lambda_kl": loss.lambda_kl,
    }


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_fit(args, cli: CliConfig) -> int:
    path = Path(args.input)
    if not path.exists():
        raise InputError(f"input not found: {path}")
    hist, image, weights = _load_fit_input(path, 10)
    sub = _parse_subdivision(args.subdivision)
    base = FitConfig(
        subdivision=sub if isinstance(sub, int) else sub[0],
        sweep=None if isinstance(sub, int) else sub,
        lambda_kl=args.lambda_kl,
        restarts=args.restarts,
        seed=cli.seed,
        complexity_weight=args.penalty,
    )

    sweep_docs = None
    if base.sweep is not None:
        results, selected = sweep_subdivision(hist, base)
        result = results[selected]
        sweep_docs = {str(s): {"loss": _loss_dict(r.loss), "iterations": r.iterations}
                      for s, r in results.items()}
    else:
        result = fit_sail(hist, base)
        selected = base.subdivision

    pixel_metrics = None
    if image is not None:
        palette = decode(result.sail, clamp=True).colors
        pixels = image.reshape(-1, 3)
        pixel_metrics = {
            "e_l2": e_l2(pixels, weights, palette),
            "r_percent": r_percent(pixels, weights, palette, 10.0),
        }

    doc = {
        "sail": result.sail.to_dict(),
        "selected_subdivision": selected,
        "loss": _loss_dict(result.loss),
        "pixel_metrics": pixel_metrics,
        "sweep": sweep_docs,
        "iterations": result.iterations,
        "restart_index": result.restart_index,
    }
    if args.output:
        Path(args.output).write_text(json.dumps(result.sail.to_dict(), indent=2) + "\n")
    if cli.emit_json:
        _emit(doc)
    else:
        if sweep_docs:
            for s_str, entry in sweep_docs.items():
                l = entry["loss"]
                print(f"s={s_str}: combined={l['combined']:.6f} e_l2={l['e_l2']:.6f} "
                      f"e_kl={l['e_kl']:.4f} r%={l['r_percent']:.4f}")
            print(f"selected subdivision: {selected}")
        loss = result.loss
        print(f"sail: subdivision={result.sail.subdivision} wind={result.sail.wind:+.4f} "
              f"focus=({result.sail.focus[0]:.4f}, {result.sail.focus[1]:.4f})")
        print(f"fit:  e_l2={loss.e_l2:.6f} e_kl={loss.e_kl:.4f} "
              f"r%={loss.r_percent:.4f} combined={loss.combined:.6f}")
        if pixel_metrics:
            print(f"pixels: e_l2={pixel_metrics['e_l2']:.6f} "
                  f"r%(d=10)={pixel_metrics['r_percent']:.4f}")
    return EXIT_OK


def cmd_rig(args, cli: CliConfig) -> int:
    path = Path(args.input)
    if not path.exists():
        raise InputError(f"input not found: {path}")
    image, _ = load_rgb(path)
    config = RigConfig(
        subdivision=args.subdivision_int,
        lambda_kl=args.lambda_kl,
        kappa_alpha=args.penalty,
        seed=cli.seed,
    )

    if args.alphas:
        mask_dir = Path(args.alphas)
        files = sorted(mask_dir.glob("*.png"))
        if not files:
            raise InputError(f"no mask PNGs in {mask_dir}")
        masks = []
        for f in files:
            m = load_gray_u8(f).astype(float) / 255.0
            if m.shape != image.shape[:2]:
                raise InputError(
                    f"mask {f.name} is {m.shape[1]}x{m.shape[0]}, "
                    f"image is {image.shape[1]}x{image.shape[0]}")
            masks.append(m)
        fit = fit_with_masks(image, np.stack(masks, axis=-1), config)
        n_alpha = fit.n_alpha
        selected = False
    elif args.n_alpha:
        fit = fit_rig(image, args.n_alpha, config)
        n_alpha = args.n_alpha
        selected = False
    else:
        candidates = tuple(int(v) for v in args.candidates.split(","))
        n_alpha, fit = select_n_alpha(image, candidates, config)
        selected = True

    rig = build_mapping(image, fit)
    save_rig(rig, args.bundle)
    doc = {
        "bundle": str(args.bundle),
        "n_alpha": n_alpha,
        "selected": selected,
        "score": rig_score(fit, config.kappa_alpha),
        "loss_recon": fit.loss_recon,
        "loss_tv": fit.loss_tv,
        "loss_total": fit.loss_total,
    }
    if cli.emit_json:
        _emit(doc)
    else:
        print(f"bundle: {args.bundle} (n_alpha={n_alpha}"
              f"{', selected' if selected else ''})")
        print(f"loss: recon={fit.loss_recon:.6f} tv={fit.loss_tv:.6f} "
              f"total={fit.loss_total:.6f}")
    return EXIT_OK


def cmd_recolor(args, cli: CliConfig) -> int:
    rig = load_rig(args.bundle)
    edits_path = Path(args.edits)
    if not edits_path.exists():
        raise InputError(f"edits file not found: {edits_path}")
    edits = json.loads(edits_path.read_text())
    if not isinstance(edits, list):
        raise InputError("edits JSON must be a list of {sail, set} objects")
    out = recolor(rig, edits)
    save_rgb_u8(args.output, out)
    doc = {"output": str(args.output), "edits_applied": len(edits),
           "width": rig.width, "height": rig.height}
    if cli.emit_json:
        _emit(doc)
    else:
        print(f"recolored {rig.width}x{rig.height} with {len(edits)} edit(s) "
              f"-> {args.output}")
    return EXIT_OK


def cmd_render(args, cli: CliConfig) -> int:
    sail_path = Path(args.sail)
    if not sail_path.exists():
        raise InputError(f"sail file not found: {sail_path}")
    sail = ColorSail.from_dict(json.loads(sail_path.read_text()))
    raster = render_sail(sail, args.size)
    save_rgb_u8(args.output, raster)
    doc = {"output": str(args.output), "width": raster.shape[1],
           "height": raster.shape[0], "subdivision": sail.subdivision}
    if cli.emit_json:
        _emit(doc)
    else:
        print(f"rendered {raster.shape[1]}x{raster.shape[0]} -> {args.output}")
    return EXIT_OK


def cmd_analyze(args, cli: CliConfig) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise InputError(f"not a directory: {directory}")
    count = analyze_directory(directory, args.output, cli.seed,
                              log=lambda msg: print(msg, file=sys.stderr))
    doc = {"output": str(args.output), "images": count}
    if cli.emit_json:
        _emit(doc)
    else:
        print(f"analyzed {count} image(s) -> {args.output}")
    return EXIT_OK


def cmd_metrics(args, cli: CliConfig) -> int:
    path = Path(args.input)
    if not path.exists():
        raise InputError(f"input not found: {path}")
    sail_path = Path(args.sail)
    if not sail_path.exists():
        raise InputError(f"sail file not found: {sail_path}")
    image, alpha = load_rgb(path)
    sail = ColorSail.from_dict(json.loads(sail_path.read_text()))
    weights = None if alpha is None else alpha.reshape(-1)
    hist = patchmax_histogram(image)
    loss = combined_loss(image.reshape(-1, 3), weights, sail, hist,
                         args.lambda_kl, args.delta)
    doc = _loss_dict(loss)
    if cli.emit_json:
        _emit(doc)
    else:
        print(f"e_l2={loss.e_l2:.6f} e_kl={loss.e_kl:.4f} "
              f"r%(d={args.delta:g})={loss.r_percent:.4f} combined={loss.combined:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colorsail",
        description="Triangular discrete-continuous palettes: fit, rig, recolor.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--json", dest="emit_json", action="store_true",
                       help="emit a machine-readable JSON report")

    p = sub.add_parser("fit", help="fit one sail to an image or histogram")
    p.add_argument("input", help="PNG image or histogram .json")
    p.add_argument("-o", "--output", help="write the fitted sail JSON here")
    p.add_argument("--subdivision", default="5",
                   help="single value, 'lo..hi' sweep, or comma list")
    p.add_argument("--lambda-kl", type=float, default=1e-4)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--penalty", type=float, default=0.0,
                   help="per-subdivision complexity penalty for sweeps")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rig", help="decompose an image into a recolorable rig bundle")
    p.add_argument("input", help="PNG image")
    p.add_argument("bundle", help="output bundle directory")
    p.add_argument("--n-alpha", type=int, default=None,
                   help="fixed mask count (skips model selection)")
    p.add_argument("--candidates", default="2,3,4,5",
                   help="mask counts tried during model selection")
    p.add_argument("--subdivision", dest="subdivision_int", type=int, default=5)
    p.add_argument("--lambda-kl", type=float, default=1e-4)
    p.add_argument("--penalty", type=float, default=5.0,
                   help="per-mask penalty in the selection score")
    p.add_argument("--alphas", default=None,
                   help="directory of user-supplied mask PNGs (skips mask optimization)")
    common(p)
    p.set_defaults(func=cmd_rig)

    p = sub.add_parser("recolor", help="apply sail edits to a rig bundle")
    p.add_argument("bundle", help="rig bundle directory")
    p.add_argument("edits", help="edits JSON file")
    p.add_argument("output", help="output PNG")
    common(p)
    p.set_defaults(func=cmd_recolor)

    p = sub.add_parser("render", help="rasterize a sail triangle")
    p.add_argument("sail", help="sail JSON file")
    p.add_argument("output", help="output PNG")
    p.add_argument("--size", type=int, default=256)
    common(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("analyze", help="per-image colorfulness and entropy CSV")
    p.add_argument("directory", help="directory of PNGs")
    p.add_argument("output", help="output CSV path")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("metrics", help="evaluate a sail against an image")
    p.add_argument("input", help="PNG image")
    p.add_argument("--sail", required=True, help="sail JSON file")
    p.add_argument("--lambda-kl", type=float, default=1e-4)
    p.add_argument("--delta", type=float, default=10.0)
    common(p)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cli = CliConfig(command=args.command, seed=args.seed, emit_json=args.emit_json)
    try:
        return args.func(args, cli)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, RigError, EmptyDistributionError, ValueError,
            OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
