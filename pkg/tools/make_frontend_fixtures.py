"""Generate the frontend test fixtures: decode-parity vectors, rig bundles,
edit sequences, and the batch tool's recolor outputs for cross-checking.

Run from the repository root:  python3 tools/make_frontend_fixtures.py
"""

import json
import shutil
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from colorsail.alpha import RigConfig, fit_rig
from colorsail.cli import main as cli_main
from colorsail.pngio import save_rgb_u8
from colorsail.rig import build_mapping, quantize_u8, save_rig
from colorsail.sail import ColorSail, decode
from conftest import random_focus, random_sail

FIXTURES = ROOT / "frontend" / "test" / "fixtures"


def make_parity(rng) -> None:
    cases = []
    for _ in range(1000):
        sail = random_sail(rng, s=int(rng.integers(2, 7)))
        colors = decode(sail, include_downward=True, clamp=False).colors
        cases.append({
            "sail": sail.to_dict(),
            "colors": [[float(c) for c in row] for row in colors],
        })
    out = FIXTURES / "decode_parity.json"
    out.write_text(json.dumps(cases, separators=(",", ":")))
    print(f"wrote {out} ({out.stat().st_size // 1024} KiB)")


def synthetic_image(rng, size=16):
    sails = [random_sail(rng, s=4, max_wind=0.4) for _ in range(2)]
    img = np.zeros((size, size, 3))
    half = size // 2
    for i, sail in enumerate(sails):
        colors = decode(sail, clamp=True).colors
        idx = rng.integers(0, len(colors), size=(size, size))
        region = colors[idx]
        if i == 0:
            img[:, :half] = region[:, :half]
        else:
            img[:, half:] = region[:, half:]
    return img


def edit_sequences(rng, n_sails):
    seqs = [[]]
    seqs.append([{"sail": 0, "set": {"vertex0": [0.1, 0.8, 0.3]}}])
    seqs.append([{
        "sail": n_sails - 1,
        "set": {"wind": float(np.round(rng.uniform(-0.9, 0.9), 3)),
                "focus": [0.5, 0.2]},
    }])
    seqs.append([
        {"sail": 0, "set": {"subdivision": 7, "vertex1": [0.9, 0.9, 0.1]}},
    ])
    multi = []
    for i in range(n_sails):
        multi.append({"sail": i, "set": {"wind": float(np.round(rng.uniform(-0.5, 0.5), 3))}})
    multi.append({"sail": 0, "set": {"subdivision": 2}})
    multi.append({"sail": 0, "set": {"vertex2": [0.0, 0.0, 0.0], "focus": [0.1, 0.1]}})
    seqs.append(multi)
    return seqs


def make_bundles(rng) -> None:
    bundles_dir = FIXTURES / "bundles"
    edits_dir = FIXTURES / "edits"
    expected_dir = FIXTURES / "expected"
    for d in (bundles_dir, edits_dir, expected_dir):
        shutil.rmtree(d, ignore_errors=True)
        d.mkdir(parents=True)
    cfg = RigConfig(epochs=2, subdivision=4, seed=5, init_fit_iterations=300,
                    mask_init_tries=1)
    for b in range(10):
        img = synthetic_image(rng)
        fit = fit_rig(img, 2, cfg)
        rig = build_mapping(img, fit)
        bundle = bundles_dir / f"b{b:02d}"
        save_rig(rig, bundle)
        for e, seq in enumerate(edit_sequences(rng, 2)):
            edits_path = edits_dir / f"b{b:02d}_e{e}.json"
            edits_path.write_text(json.dumps(seq, indent=2) + "\n")
            out_png = expected_dir / f"b{b:02d}_e{e}.png"
            code = cli_main(["recolor", str(bundle), str(edits_path), str(out_png)])
            assert code == 0, (b, e)
        print(f"bundle b{b:02d} done")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    make_parity(np.random.default_rng(101))
    make_bundles(np.random.default_rng(202))


if __name__ == "__main__":
    main()
