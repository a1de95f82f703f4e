import json
import os
import subprocess

import numpy as np
import pytest

import mtrnet


def random_image(rng, h, w):
    return rng.random((h, w, 3), dtype=np.float32)


def test_psnr_fixtures():
    a = np.full((8, 8, 3), 0.5, np.float32)
    b = np.full((8, 8, 3), 0.625, np.float32)
    assert mtrnet.psnr(a, b) == pytest.approx(10 * np.log10(64), abs=1e-12)
    assert mtrnet.psnr(a, a) == np.inf
    assert mtrnet.psnr(np.zeros_like(a), np.ones_like(a)) == 0.0


def test_ssim_matches_skimage():
    metrics = pytest.importorskip("skimage.metrics")
    rng = np.random.default_rng(3)
    for h, w, noise in [(16, 16, None), (24, 31, 0.05), (40, 33, 0.2), (64, 64, 0.0)]:
        a = random_image(rng, h, w)
        if noise is None:
            b = random_image(rng, h, w)
        else:
            b = np.clip(a + rng.normal(0, noise, a.shape), 0, 1).astype(np.float32)
        ours = mtrnet.ssim(a, b)
        ref = metrics.structural_similarity(
            a.astype(np.float64), b.astype(np.float64), gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False, data_range=1.0, channel_axis=-1)
        assert abs(ours - ref) < 1e-6


def test_mse_mae_and_mask_scores():
    mse, mae = mtrnet.mse_mae_pct(np.full((4, 4, 3), 0.5, np.float32), np.full((4, 4, 3), 0.6, np.float32))
    assert mse == pytest.approx(1.0, rel=1e-5)
    assert mae == pytest.approx(10.0, rel=1e-5)
    gt = np.array([[1, 1, 1, 1, 0, 0, 0, 0]], np.float32)
    half = np.array([[1, 1, 0, 0, 1, 1, 0, 0]], np.float32)
    assert mtrnet.mask_prf(half, gt) == {"precision": 0.5, "recall": 0.5, "f1": 0.5}


def test_mask_ops():
    m = mtrnet.rasterize_boxes([[(1, 1), (3, 1), (3, 2), (1, 2)]], 5, 6)
    assert m.shape == (5, 6)
    assert m.sum() == 6
    assert mtrnet.pad_mask(m, 1).sum() == 20
    assert mtrnet.pad_mask(m, 6).min() == 1.0
    with pytest.raises(mtrnet.InvalidArgument):
        mtrnet.pad_mask(m, -1)
    assert (mtrnet.dilate_disk(m, 0) == m).all()
    with pytest.raises(mtrnet.InvalidArgument):
        mtrnet.rasterize_boxes([[(0, 0), (1, 1)]], 4, 4)
    a = np.zeros((5, 6, 3), np.float32)
    b = np.ones((5, 6, 3), np.float32)
    assert (mtrnet.composite(b, a, m)[..., 0] == m).all()


def test_generate_sample_is_deterministic():
    s = mtrnet.generate_sample(32, 5, 2)
    t = mtrnet.generate_sample(32, 5, 2)
    assert s["input"].shape == (32, 32, 3)
    assert (s["input"] == t["input"]).all()
    assert s["boxes"] == t["boxes"]
    changed = (s["input"] != s["target"]).any(axis=-1)
    assert (changed == (s["gt_text_mask"] > 0.5)).all()


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory):
    cli = os.environ.get("MTRNET_CLI")
    if not cli:
        pytest.skip("MTRNET_CLI is not set")
    root = tmp_path_factory.mktemp("model")
    data = root / "data"
    subprocess.run([cli, "synth-data", "--n", "2", "--size", "32", "--seed", "1", "--out", str(data)], check=True)
    config = root / "config.json"
    config.write_text(json.dumps({
        "image_size": 32, "batch_size": 2, "seed": 2,
        "generator": {"base_channels": 4, "fine_base_channels": 2},
        "discriminator": {"channel_widths": [4, 8, 8, 8, 1]},
        "features": {"widths": [4, 4, 8, 8, 8], "convs_per_stage": [1, 1, 1, 1, 1]},
    }))
    ckpt = root / "model.ckpt"
    subprocess.run([cli, "train", "--config", str(config), "--data", str(data), "--out", str(ckpt),
                    "--steps", "1"], check=True, capture_output=True)
    return ckpt


def test_model_erase_keeps_outside_pixels(checkpoint):
    model = mtrnet.Model(str(checkpoint))
    assert model.step == 1
    assert len(model.id) == 8
    rng = np.random.default_rng(7)
    image = random_image(rng, 30, 37)
    mask = (rng.random((30, 37)) < 0.2).astype(np.float32)
    out = model.erase(image, mask=mask, intermediates=True)
    assert out["image"].shape == image.shape
    assert (out["image"][mask == 0] == image[mask == 0]).all()
    assert (out["removal_mask"] <= mask).all()
    assert len(out["attention_maps"]) == 4
    same = model.erase(image, polygons=[])
    assert (same["image"] == image).all()
    everything = model.erase(image, erase_all=True)
    assert everything["coarse_mask"].min() == 1.0
    with pytest.raises(mtrnet.InvalidArgument):
        model.erase(image)
    with pytest.raises(mtrnet.SchemaError):
        mtrnet.Model(__file__)
