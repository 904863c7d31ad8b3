from __future__ import annotations

import json
from dataclasses import replace

import cv2
import numpy as np
import pytest

from lesionmask import (
    ApplicationMode,
    ConfigError,
    DEFAULT_CONFIG,
    DimensionMismatchError,
    GaussianSmoothing,
    GlobalThreshold,
    ImageFormatError,
    MaskFlag,
    OtsuThreshold,
    PipelineConfig,
    Polarity,
    SweepSpec,
    apply_mask,
    config_from_dict,
    config_to_dict,
    export_mask,
    gaussian_blur,
    generate_mask,
    histogram,
    import_mask,
    otsu_threshold,
    run_sweep,
    to_grayscale,
)
from conftest import make_disk_image
from oracles import dice_oracle


class TestGenerateMask:
    def test_disk_recovery(self, disk_rgb):
        rgb, truth = disk_rgb
        outcome = generate_mask(rgb, DEFAULT_CONFIG)
        assert dice_oracle(outcome.mask, truth) >= 0.95
        assert outcome.otsu is not None
        assert not outcome.flags

    def test_constant_image_flagged_not_fatal(self):
        img = np.full((16, 16, 3), 77, dtype=np.uint8)
        outcome = generate_mask(img, DEFAULT_CONFIG)
        assert MaskFlag.DEGENERATE_HISTOGRAM in outcome.flags
        assert MaskFlag.EMPTY_MASK in outcome.flags
        assert outcome.otsu is None
        assert not outcome.mask.any()
        assert outcome.foreground_fraction == 0.0

    def test_dilation_grows_mask(self, disk_rgb):
        rgb, _ = disk_rgb
        base = generate_mask(rgb, replace(DEFAULT_CONFIG, dilate_side=0))
        grown = generate_mask(rgb, replace(DEFAULT_CONFIG, dilate_side=15))
        assert (base.mask <= grown.mask).all()
        assert grown.foreground_fraction > base.foreground_fraction

    def test_dilate_side_monotone(self, disk_rgb):
        rgb, _ = disk_rgb
        masks = [
            generate_mask(rgb, replace(DEFAULT_CONFIG, dilate_side=side)).mask
            for side in (0, 3, 8, 15)
        ]
        for smaller, larger in zip(masks, masks[1:]):
            assert (smaller <= larger).all()

    def test_otsu_runs_on_smoothed_image(self, disk_rgb):
        rgb, _ = disk_rgb
        outcome = generate_mask(rgb, DEFAULT_CONFIG)
        smoothed = gaussian_blur(to_grayscale(rgb), 1.0, 5)
        assert outcome.otsu == otsu_threshold(histogram(smoothed))

    def test_no_smoothing_uses_raw_histogram(self, disk_rgb):
        rgb, _ = disk_rgb
        cfg = replace(DEFAULT_CONFIG, smoothing=None)
        outcome = generate_mask(rgb, cfg)
        assert outcome.otsu == otsu_threshold(histogram(to_grayscale(rgb)))

    def test_global_threshold_skips_otsu(self, disk_rgb):
        rgb, truth = disk_rgb
        cfg = replace(DEFAULT_CONFIG, threshold=GlobalThreshold(120))
        outcome = generate_mask(rgb, cfg)
        assert outcome.otsu is None
        assert dice_oracle(outcome.mask, truth) >= 0.95

    def test_saturating_threshold_full_mask_flag(self):
        img = np.full((8, 8, 3), 10, dtype=np.uint8)
        img[0, 0] = (250, 250, 250)
        cfg = PipelineConfig(
            smoothing=None,
            threshold=GlobalThreshold(255),
            polarity=Polarity.DARK_FOREGROUND,
            clean_side=0,
            dilate_side=0,
        )
        outcome = generate_mask(img, cfg)
        assert MaskFlag.FULL_MASK in outcome.flags
        assert outcome.foreground_fraction == 1.0

    def test_determinism(self, disk_rgb):
        rgb, _ = disk_rgb
        a = generate_mask(rgb, DEFAULT_CONFIG)
        b = generate_mask(rgb, DEFAULT_CONFIG)
        assert np.array_equal(a.mask, b.mask)
        assert a.otsu == b.otsu


class TestSweep:
    def test_full_grid_cardinality(self, disk_rgb):
        rgb, _ = disk_rgb
        sides = (0, 5, 8, 10, 12, 15)
        pairs = tuple((d, c) for d in sides for c in sides)
        out = run_sweep(rgb, SweepSpec(pairs=pairs))
        assert len(out) == 36
        assert [p for p, _ in out] == list(pairs)

    def test_table_pairs_labels(self, disk_rgb):
        rgb, _ = disk_rgb
        pairs = ((10, 10), (15, 15), (10, 5), (50, 80))
        out = run_sweep(rgb, SweepSpec(pairs=pairs))
        assert [p for p, _ in out] == list(pairs)

    def test_identity_pair_is_raw_threshold(self, disk_rgb):
        rgb, _ = disk_rgb
        (pair, outcome), = run_sweep(rgb, SweepSpec(pairs=((0, 0),)))
        raw = generate_mask(rgb, replace(DEFAULT_CONFIG, clean_side=0, dilate_side=0))
        assert pair == (0, 0)
        assert np.array_equal(outcome.mask, raw.mask)

    def test_compositional_with_generate_mask(self, disk_rgb):
        rgb, _ = disk_rgb
        sweep = SweepSpec(pairs=((10, 5), (3, 8)))
        for pair, outcome in run_sweep(rgb, sweep):
            direct = generate_mask(rgb, sweep.config_for(pair))
            assert np.array_equal(outcome.mask, direct.mask)

    def test_pair_order_is_dilate_then_clean(self, disk_rgb):
        # (50, 80): clean with 80 wipes a 64x64 image, then dilating by 50
        # cannot resurrect it; the transposed reading would leave pixels.
        rgb, _ = disk_rgb
        (_, outcome), = run_sweep(rgb, SweepSpec(pairs=((50, 80),)))
        assert not outcome.mask.any()
        cfg = SweepSpec(pairs=((50, 80),)).config_for((50, 80))
        assert cfg.dilate_side == 50
        assert cfg.clean_side == 80

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            SweepSpec(pairs=())
        with pytest.raises(ConfigError):
            SweepSpec(pairs=((1, 1), (1, 1)))
        with pytest.raises(ConfigError):
            SweepSpec(pairs=((-1, 2),))


class TestApplyMask:
    def test_empty_mask_ablate_keeps_image(self, rng):
        img = rng.integers(0, 256, size=(6, 6, 3), dtype=np.uint8)
        mask = np.zeros((6, 6), dtype=bool)
        assert np.array_equal(apply_mask(img, mask, ApplicationMode.ABLATE_LESION), img)

    def test_full_mask_ablate_blacks_out(self, rng):
        img = rng.integers(1, 256, size=(6, 6, 3), dtype=np.uint8)
        mask = np.ones((6, 6), dtype=bool)
        assert not apply_mask(img, mask, ApplicationMode.ABLATE_LESION).any()

    def test_checkerboard_isolate_per_pixel(self):
        img = np.array(
            [[[10, 20, 30], [40, 50, 60]], [[70, 80, 90], [100, 110, 120]]],
            dtype=np.uint8,
        )
        mask = np.array([[True, False], [False, True]])
        out = apply_mask(img, mask, ApplicationMode.ISOLATE_LESION)
        assert out[0, 0].tolist() == [10, 20, 30]
        assert out[0, 1].tolist() == [0, 0, 0]
        assert out[1, 0].tolist() == [0, 0, 0]
        assert out[1, 1].tolist() == [100, 110, 120]

    def test_mask_only_ignores_rgb(self, rng):
        mask = rng.random((5, 5)) < 0.5
        img_a = rng.integers(0, 256, size=(5, 5, 3), dtype=np.uint8)
        img_b = rng.integers(0, 256, size=(5, 5, 3), dtype=np.uint8)
        out_a = apply_mask(img_a, mask, ApplicationMode.MASK_ONLY)
        out_b = apply_mask(img_b, mask, ApplicationMode.MASK_ONLY)
        assert np.array_equal(out_a, out_b)
        assert set(np.unique(out_a)) <= {0, 255}

    def test_ablate_isolate_partition(self, rng):
        for _ in range(10):
            img = rng.integers(0, 256, size=(7, 9, 3), dtype=np.uint8)
            mask = rng.random((7, 9)) < 0.5
            ablate = apply_mask(img, mask, ApplicationMode.ABLATE_LESION)
            isolate = apply_mask(img, mask, ApplicationMode.ISOLATE_LESION)
            assert np.array_equal(ablate.astype(np.int32) + isolate, img)

    def test_shape_mismatch_rejected(self, rng):
        img = rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)
        with pytest.raises(DimensionMismatchError):
            apply_mask(img, np.zeros((4, 5), dtype=bool), ApplicationMode.MASK_ONLY)


class TestMaskIO:
    def test_round_trip_random(self, tmp_path, rng):
        mask = rng.random((9, 13)) < 0.5
        path = tmp_path / "m.png"
        export_mask(mask, path)
        assert np.array_equal(import_mask(path), mask)

    def test_single_foreground_pixel_encodes_255(self, tmp_path):
        path = tmp_path / "one.png"
        export_mask(np.ones((1, 1), dtype=bool), path)
        decoded = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        assert decoded.shape == (1, 1)
        assert decoded[0, 0] == 255

    def test_diagonal_decodes_bit_for_bit(self, tmp_path):
        mask = np.eye(3, dtype=bool)
        path = tmp_path / "diag.png"
        export_mask(mask, path)
        decoded = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        assert np.array_equal(decoded == 255, mask)
        assert set(np.unique(decoded)) <= {0, 255}

    def test_import_threshold_on_antialiased_levels(self, tmp_path):
        from PIL import Image

        arr = np.array([[0, 120, 200, 255]], dtype=np.uint8)
        path = tmp_path / "aa.png"
        Image.fromarray(arr, mode="L").save(path)
        assert import_mask(path).tolist() == [[False, False, True, True]]

    def test_import_rgb_white_region(self, tmp_path):
        from PIL import Image

        arr = np.zeros((4, 4, 3), dtype=np.uint8)
        arr[1:3, 1:3] = 255
        path = tmp_path / "rgb.png"
        Image.fromarray(arr, mode="RGB").save(path)
        expected = np.zeros((4, 4), dtype=bool)
        expected[1:3, 1:3] = True
        assert np.array_equal(import_mask(path), expected)

    def test_import_rejects_alpha(self, tmp_path):
        from PIL import Image

        arr = np.zeros((3, 3, 4), dtype=np.uint8)
        path = tmp_path / "alpha.png"
        Image.fromarray(arr, mode="RGBA").save(path)
        with pytest.raises(ImageFormatError):
            import_mask(path)

    def test_import_threshold_validated(self, tmp_path):
        with pytest.raises(ValueError):
            import_mask(tmp_path / "x.png", threshold=300)

    def test_export_to_missing_directory_raises(self, tmp_path):
        with pytest.raises(OSError):
            export_mask(np.ones((2, 2), dtype=bool), tmp_path / "no" / "dir" / "m.png")


class TestConfigSerialization:
    @pytest.mark.parametrize(
        "cfg",
        [
            DEFAULT_CONFIG,
            PipelineConfig(smoothing=None, threshold=GlobalThreshold(88),
                           polarity=Polarity.LIGHT_FOREGROUND, clean_side=0, dilate_side=12),
            PipelineConfig(smoothing=GaussianSmoothing(sigma=2.5, kernel_side=7),
                           threshold=OtsuThreshold(), clean_side=8, dilate_side=10),
        ],
    )
    def test_round_trip(self, cfg):
        doc = config_to_dict(cfg)
        json.dumps(doc)
        assert config_from_dict(doc) == cfg

    def test_defaults_fill_missing_keys(self):
        assert config_from_dict({}) == DEFAULT_CONFIG

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"kernel": 5})

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"polarity": "sideways"})
        with pytest.raises(ConfigError):
            config_from_dict({"threshold": "adaptive"})
        with pytest.raises(ConfigError):
            config_from_dict({"threshold": {"global": 999}})
        with pytest.raises(ConfigError):
            config_from_dict({"smoothing": {"sigma": "wide"}})
        with pytest.raises(ConfigError):
            config_from_dict({"clean_side": -2})
        with pytest.raises(ConfigError):
            config_from_dict([1, 2])

    def test_global_threshold_range(self):
        with pytest.raises(ConfigError):
            GlobalThreshold(256)


def test_default_config_matches_documented_recipe():
    assert DEFAULT_CONFIG.smoothing == GaussianSmoothing(sigma=1.0, kernel_side=5)
    assert isinstance(DEFAULT_CONFIG.threshold, OtsuThreshold)
    assert DEFAULT_CONFIG.polarity is Polarity.DARK_FOREGROUND
    assert DEFAULT_CONFIG.clean_side == 5
    assert DEFAULT_CONFIG.dilate_side == 0


def test_disk_recovery_across_radii():
    for radius, seed in [(8, 11), (12, 12), (15, 13)]:
        rgb, truth = make_disk_image(radius=radius, seed=seed)
        outcome = generate_mask(rgb, DEFAULT_CONFIG)
        assert dice_oracle(outcome.mask, truth) >= 0.9
