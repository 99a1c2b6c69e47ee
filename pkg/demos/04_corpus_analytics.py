"""Corpus analytics: colorfulness and patch-entropy hardness statistics.

Generates a tiny synthetic corpus and prints the CSV the analyze command
produces for it.
"""

import tempfile
from pathlib import Path

import numpy as np

from colorsail import colorfulness
from colorsail.analyze import analyze_directory
from colorsail.pngio import save_rgb_u8
from colorsail.rig import quantize_u8

rng = np.random.default_rng(11)
corpus = Path(tempfile.mkdtemp(prefix="sail_corpus_"))

# Three very different color statistics.
flat = np.tile([0.55, 0.55, 0.55], (96, 96, 1))                      # gray card
poster = np.zeros((96, 96, 3))
poster[:48, :, 0] = 0.9
poster[48:, :, 2] = 0.85
poster[24:72, 24:72, 1] = 0.8                                        # bold shapes
noise = rng.uniform(size=(96, 96, 3))                                # confetti

for name, img in [("flat.png", flat), ("poster.png", poster), ("noise.png", noise)]:
    save_rgb_u8(corpus / name, quantize_u8(img))
    print(f"{name:12s} colorfulness={colorfulness(img):7.2f}")

out_csv = corpus / "stats.csv"
analyze_directory(corpus, out_csv, seed=17)
print(f"\n{out_csv}:")
print(out_csv.read_text())
