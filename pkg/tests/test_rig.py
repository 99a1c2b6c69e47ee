import json

import numpy as np
import pytest

from colorsail.alpha import RigConfig, fit_rig
from colorsail.rig import (
    UNMAPPED,
    EditDelta,
    RigDimensionError,
    RigEntry,
    RigFileError,
    RigVersionError,
    SailRig,
    build_mapping,
    load_rig,
    quantize_u8,
    recolor,
    remap_subdivision,
    save_rig,
)
from colorsail.sail import ColorSail, decode, grid_barycentrics
from conftest import random_sail


def _simple_rig(rng, size=12, n_alpha=2, seed=0):
    img = np.zeros((size, size, 3))
    img[:, : size // 2] = [0.85, 0.15, 0.2]
    img[:, size // 2:] = [0.15, 0.3, 0.85]
    cfg = RigConfig(epochs=2, subdivision=3, seed=seed)
    fit = fit_rig(img, n_alpha, cfg)
    return img, build_mapping(img, fit)


def _one_hot_rig(sail, image):
    """Single sail covering the whole image."""
    palette = decode(sail, include_downward=True, clamp=True).colors
    h, w = image.shape[:2]
    flat = image.reshape(-1, 3)
    d2 = ((flat[:, None, :] - palette[None, :, :]) ** 2).sum(axis=2)
    idx = np.argmin(d2, axis=1).astype(np.uint16).reshape(h, w)
    entry = RigEntry(sail=sail, alpha=np.full((h, w), 255, dtype=np.uint8), index=idx)
    return SailRig(width=w, height=h, image_sha256="0" * 64,
                   fit_config_digest="0" * 64, entries=(entry,), original=image)


# ---------------------------------------------------------------------------
# quantization
# ---------------------------------------------------------------------------

def test_quantize_round_half_up():
    vals = np.array([[[0.0, 127.4 / 255.0, 127.5 / 255.0]]])
    assert list(quantize_u8(vals)[0, 0]) == [0, 127, 128]
    assert quantize_u8(np.array([[[1.0, 2.0, -1.0]]])).tolist() == [[[255, 255, 0]]]


# ---------------------------------------------------------------------------
# build_mapping
# ---------------------------------------------------------------------------

def test_mapping_exact_pixel(rng):
    sail = random_sail(rng, s=4)
    palette = decode(sail, include_downward=True, clamp=True).colors
    image = palette[7] * np.ones((3, 3, 3))
    rig = _one_hot_rig(sail, image)
    assert np.all(rig.entries[0].index == 7)


def test_mapping_tie_lowest_index():
    # two identical decoded colors: sail with coincident vertices
    v = np.tile([0.4, 0.4, 0.4], (3, 1))
    sail = ColorSail(v, wind=0.0, subdivision=2)
    image = np.full((2, 2, 3), 0.4)
    rig = _one_hot_rig(sail, image)
    assert np.all(rig.entries[0].index == 0)


def test_mapping_matches_bruteforce(rng):
    img, rig = _simple_rig(rng)
    flat = img.reshape(-1, 3)
    for e in rig.entries:
        palette = decode(e.sail, include_downward=True, clamp=True).colors
        expect = np.empty(flat.shape[0], dtype=np.uint16)
        for p in range(flat.shape[0]):
            best_j, best_d = 0, None
            for j in range(len(palette)):
                d = 0.0
                for c in range(3):
                    d += (flat[p, c] - palette[j, c]) ** 2
                if best_d is None or d < best_d:
                    best_d, best_j = d, j
            expect[p] = best_j
        assert np.array_equal(e.index.reshape(-1), expect)


def test_mapping_of_reconstruction_reproduces_assignment(rng):
    # hard one-hot alphas: the reconstruction IS the mapped colors, so
    # re-mapping it must return the same indices
    sail = random_sail(rng, s=4)
    palette = decode(sail, include_downward=True, clamp=True).colors
    idx = rng.integers(0, len(palette), size=(6, 6))
    image = palette[idx]
    rig = _one_hot_rig(sail, image)
    recon_rig = _one_hot_rig(sail, recolor(rig) / 255.0)
    # palette colors can coincide after clamping; compare mapped colors
    assert np.allclose(palette[recon_rig.entries[0].index],
                       palette[rig.entries[0].index], atol=1.0 / 255.0)


# ---------------------------------------------------------------------------
# recolor
# ---------------------------------------------------------------------------

def test_recolor_no_edits_deterministic(rng):
    _, rig = _simple_rig(rng)
    a = recolor(rig)
    b = recolor(rig, [])
    assert a.tobytes() == b.tobytes()


def test_recolor_vertex_edit_corner_pixel(rng):
    sail = ColorSail(np.array([[0.9, 0.1, 0.1], [0.1, 0.9, 0.1], [0.1, 0.1, 0.9]]),
                     wind=0.0, subdivision=3)
    image = np.tile([0.9, 0.1, 0.1], (4, 4, 1))
    rig = _one_hot_rig(sail, image)
    assert np.all(rig.entries[0].index == 0)  # corner grid point of v0
    out = recolor(rig, [{"sail": 0, "set": {"vertex0": [0.1, 0.2, 0.8]}}])
    expected = quantize_u8(np.tile([0.1, 0.2, 0.8], (4, 4, 1)))
    assert np.array_equal(out, expected)


def test_recolor_wind_edit_matches_bruteforce(rng):
    sail = ColorSail(np.eye(3), focus=(1 / 3, 1 / 3), wind=0.0, subdivision=3)
    palette = decode(sail, include_downward=True, clamp=True).colors
    idx = rng.integers(0, len(palette), size=(5, 5))
    image = palette[idx]
    rig = _one_hot_rig(sail, image)
    out = recolor(rig, [{"sail": 0, "set": {"wind": 0.5}}])
    edited = ColorSail(np.eye(3), (1 / 3, 1 / 3), 0.5, 3)
    new_palette = decode(edited, include_downward=True, clamp=True).colors
    expect = quantize_u8(new_palette[rig.entries[0].index])
    assert np.array_equal(out, expect)


def test_recolor_edit_locality(rng):
    img, rig = _simple_rig(rng)
    base = recolor(rig)
    out = recolor(rig, [{"sail": 0, "set": {"vertex1": [0.0, 1.0, 0.0], "wind": 0.3}}])
    untouched = rig.entries[0].alpha == 0
    assert np.array_equal(out[untouched], base[untouched])


def test_recolor_unmapped_sentinel(rng):
    sail = random_sail(rng, s=3)
    image = rng.uniform(size=(4, 4, 3))
    rig = _one_hot_rig(sail, image)
    idx = rig.entries[0].index.copy()
    idx[0, 0] = UNMAPPED
    entries = (RigEntry(sail=rig.entries[0].sail, alpha=rig.entries[0].alpha, index=idx),)
    rig2 = SailRig(width=4, height=4, image_sha256=rig.image_sha256,
                   fit_config_digest=rig.fit_config_digest, entries=entries,
                   original=image)
    out = recolor(rig2)
    assert np.array_equal(out[0, 0], quantize_u8(image)[0, 0])


def test_recolor_invalid_edit_field():
    sail = ColorSail(np.eye(3), subdivision=2)
    image = np.full((2, 2, 3), 0.5)
    rig = _one_hot_rig(sail, image)
    with pytest.raises(ValueError, match="wind"):
        recolor(rig, [{"sail": 0, "set": {"wind": 1.5}}])


# ---------------------------------------------------------------------------
# remap_subdivision
# ---------------------------------------------------------------------------

def test_remap_identity(rng):
    _, rig = _simple_rig(rng)
    again = remap_subdivision(rig, 0, rig.entries[0].sail.subdivision)
    assert np.array_equal(again.entries[0].index, rig.entries[0].index)


def test_remap_collapse_to_vertices(rng):
    sail = ColorSail(np.eye(3), wind=0.0, subdivision=10)
    palette = decode(sail, include_downward=True, clamp=True).colors
    image = np.tile(palette[0], (3, 3, 1))  # maps to grid index 0 = vertex v0
    rig = _one_hot_rig(sail, image)
    down = remap_subdivision(rig, 0, 2)
    assert down.entries[0].sail.subdivision == 2
    assert np.all(down.entries[0].index == 0)


def test_remap_matches_bruteforce(rng):
    sail = random_sail(rng, s=3)
    image = rng.uniform(size=(6, 6, 3))
    rig = _one_hot_rig(sail, image)
    out = remap_subdivision(rig, 0, 5)
    old = grid_barycentrics(3, True)
    new = grid_barycentrics(5, True)
    expect = np.empty_like(rig.entries[0].index)
    flat_old = rig.entries[0].index.reshape(-1)
    flat_new = expect.reshape(-1)
    for p, oi in enumerate(flat_old):
        best_j, best_d = 0, None
        for j in range(len(new)):
            d = 0.0
            for c in range(3):
                d += (old[oi, c] - new[j, c]) ** 2
            if best_d is None or d < best_d:
                best_d, best_j = d, j
        flat_new[p] = best_j
    assert np.array_equal(out.entries[0].index, expect)


# ---------------------------------------------------------------------------
# save / load
# ---------------------------------------------------------------------------

def test_bundle_roundtrip(rng, tmp_path):
    _, rig = _simple_rig(rng)
    d1 = tmp_path / "bundle"
    save_rig(rig, d1)
    loaded = load_rig(d1)
    assert loaded.width == rig.width and loaded.height == rig.height
    assert loaded.image_sha256 == rig.image_sha256
    for a, b in zip(loaded.entries, rig.entries):
        assert np.array_equal(a.alpha, b.alpha)
        assert np.array_equal(a.index, b.index)
        assert np.array_equal(a.sail.vertices, b.sail.vertices)
        assert a.sail.focus == b.sail.focus
        assert a.sail.wind == b.sail.wind
    assert np.array_equal(recolor(loaded), recolor(rig))


def test_bundle_save_load_save_identical(rng, tmp_path):
    _, rig = _simple_rig(rng)
    d1, d2 = tmp_path / "one", tmp_path / "two"
    save_rig(rig, d1)
    save_rig(load_rig(d1), d2)
    for f in sorted(p.name for p in d1.iterdir()):
        assert (d1 / f).read_bytes() == (d2 / f).read_bytes(), f


def test_bundle_recolor_empty_equals_stored_reconstruction(rng, tmp_path):
    _, rig = _simple_rig(rng)
    save_rig(rig, tmp_path / "b")
    from colorsail.pngio import load_rgb

    stored, _ = load_rgb(tmp_path / "b" / "reconstruction.png")
    assert np.array_equal(quantize_u8(stored), recolor(load_rig(tmp_path / "b")))


def test_bundle_version_rejected(rng, tmp_path):
    _, rig = _simple_rig(rng)
    save_rig(rig, tmp_path / "b")
    manifest = json.loads((tmp_path / "b" / "manifest.json").read_text())
    manifest["version"] = 99
    (tmp_path / "b" / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(RigVersionError):
        load_rig(tmp_path / "b")


def test_bundle_missing_file(rng, tmp_path):
    _, rig = _simple_rig(rng)
    save_rig(rig, tmp_path / "b")
    (tmp_path / "b" / "index_0.png").unlink()
    with pytest.raises(RigFileError, match="index_0.png"):
        load_rig(tmp_path / "b")


def test_bundle_dimension_mismatch(rng, tmp_path):
    _, rig = _simple_rig(rng)
    save_rig(rig, tmp_path / "b")
    from colorsail.pngio import save_gray_u16

    save_gray_u16(tmp_path / "b" / "index_1.png", np.zeros((3, 3), dtype=np.uint16))
    with pytest.raises(RigDimensionError, match="sail 1"):
        load_rig(tmp_path / "b")


def test_manifest_field_order(rng, tmp_path):
    _, rig = _simple_rig(rng)
    save_rig(rig, tmp_path / "b")
    text = (tmp_path / "b" / "manifest.json").read_text()
    keys = list(json.loads(text).keys())
    assert keys == ["version", "width", "height", "image_sha256", "sails", "fit_config_digest"]
    sail_keys = list(json.loads(text)["sails"][0].keys())
    assert sail_keys == ["vertices", "focus", "wind", "subdivision", "alpha_file", "index_file"]
