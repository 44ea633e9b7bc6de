import numpy as np
import pytest
import scipy.stats

from orbit4d.errors import InvalidArgument
from orbit4d.evaluation import (
    CSV_COLUMNS,
    MetricReport,
    evaluate_pair,
    motion_monotonicity,
    psnr,
    report_hash,
    report_json,
    spearman,
    write_csv,
)
from orbit4d.scene import RgbVideo, build_trajectory, render_orbital, sample_asset, RenderSettings

SETTINGS = RenderSettings(height=48, width=48)
TRAJ = build_trajectory(6, 0.0, 2.0)


class TestPsnr:
    def test_identical_hits_cap(self):
        x = np.random.default_rng(0).uniform(0, 1, size=(16, 16, 3))
        assert psnr(x, x) == 99.0

    def test_known_mse(self):
        a = np.zeros((10, 10, 3))
        b = np.full((10, 10, 3), 0.1)
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0, 1, size=(8, 8, 3))
        b = rng.uniform(0, 1, size=(8, 8, 3))
        mse = 0.0
        for i in range(a.size):
            mse += (a.flat[i] - b.flat[i]) ** 2
        mse /= a.size
        assert psnr(a, b) == pytest.approx(10 * np.log10(1 / mse), abs=1e-10)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(0, 1, size=(8, 8, 3))
        b = rng.uniform(0, 1, size=(8, 8, 3))
        assert psnr(a, b) == pytest.approx(psnr(b, a), abs=1e-12)

    def test_rejects_mismatch(self):
        with pytest.raises(InvalidArgument):
            psnr(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))


class TestSpearman:
    def test_perfectly_increasing(self):
        assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0

    def test_perfectly_decreasing(self):
        assert spearman([1, 2, 3, 4], [5, 4, 3, 2]) == -1.0

    def test_one_inversion_closed_form(self):
        # ranks d = (0, 0, 0, 1, -1): 1 - 6*2 / (5*24) = 0.9
        assert spearman([1, 2, 3, 4, 5], [1.0, 1.5, 2.0, 3.0, 2.5]) == pytest.approx(0.9, abs=1e-12)

    def test_matches_scipy_with_ties(self):
        rng = np.random.default_rng(3)
        x = rng.integers(0, 5, size=20).astype(float)
        y = rng.normal(size=20)
        expected = scipy.stats.spearmanr(x, y).statistic
        assert spearman(x, y) == pytest.approx(expected, abs=1e-12)

    def test_matches_scipy_without_ties(self):
        rng = np.random.default_rng(4)
        x = rng.permutation(12).astype(float)
        y = rng.normal(size=12)
        expected = scipy.stats.spearmanr(x, y).statistic
        assert spearman(x, y) == pytest.approx(expected, abs=1e-12)


class TestMotionMonotonicity:
    def test_requires_three_levels(self):
        with pytest.raises(InvalidArgument):
            motion_monotonicity([(0.1, 0.2), (0.1, 0.3), (0.2, 0.4)])

    def test_positive_for_increasing(self):
        samples = [(0.1, 0.01), (0.5, 0.03), (0.9, 0.07)]
        assert motion_monotonicity(samples) == 1.0

    def test_pooled_levels_with_ties(self):
        samples = [(0.1, 0.01), (0.5, 0.05), (0.9, 0.09),
                   (0.1, 0.02), (0.5, 0.06), (0.9, 0.08)]
        assert motion_monotonicity(samples) > 0.8


class TestEvaluatePair:
    def test_identical_videos(self):
        asset = sample_asset(5, 1.0)
        video = render_orbital(asset, TRAJ, True, SETTINGS)
        report = evaluate_pair(video, video)
        assert report.mean_ssim == 1.0
        assert report.mean_psnr == 99.0
        assert len(report.per_view_psnr) == 6

    def test_uniform_offset(self):
        base = np.full((4, 48, 48, 3), 0.4)
        target = RgbVideo(base + 0.1)
        report = evaluate_pair(target, RgbVideo(base))
        for v in report.per_view_psnr:
            assert v == pytest.approx(20.0, abs=1e-9)

    def test_means_equal_hand_average(self):
        rng = np.random.default_rng(6)
        a = RgbVideo(rng.uniform(0, 1, size=(3, 48, 48, 3)))
        b = RgbVideo(rng.uniform(0, 1, size=(3, 48, 48, 3)))
        report = evaluate_pair(a, b)
        assert report.mean_psnr == pytest.approx(np.mean(report.per_view_psnr), rel=1e-12)
        assert report.mean_ssim == pytest.approx(np.mean(report.per_view_ssim), rel=1e-12)

    def test_includes_motion_magnitudes(self):
        asset = sample_asset(7, 1.0)
        dyn = render_orbital(asset, TRAJ, True, SETTINGS)
        sta = render_orbital(asset, TRAJ, False, SETTINGS)
        report = evaluate_pair(dyn, dyn, target_static=sta, reference_static=sta)
        assert report.motion_magnitude_target > 0
        assert report.motion_magnitude_target == report.motion_magnitude_reference

    def test_rejects_trajectory_mismatch(self):
        asset = sample_asset(7, 1.0)
        a = render_orbital(asset, TRAJ, True, SETTINGS)
        other = build_trajectory(6, 5.0, 2.0)
        b = render_orbital(asset, other, True, SETTINGS)
        with pytest.raises(InvalidArgument):
            evaluate_pair(a, b)


class TestReports:
    def test_report_reserves_null_slots(self):
        report = MetricReport("x", [30.0], [0.9])
        d = report.to_dict()
        assert d["clip_f"] is None and d["lpips"] is None and d["fvd"] is None

    def test_json_deterministic(self):
        r1 = MetricReport("x", [30.0, 31.0], [0.9, 0.91], metadata={"seed": 1}).to_dict()
        r2 = MetricReport("x", [30.0, 31.0], [0.9, 0.91], metadata={"seed": 1}).to_dict()
        assert report_json(r1) == report_json(r2)
        assert report_hash(r1) == report_hash(r2)
        r3 = MetricReport("x", [30.0, 31.0], [0.9, 0.92], metadata={"seed": 1}).to_dict()
        assert report_hash(r1) != report_hash(r3)

    def test_csv_column_order(self, tmp_path):
        path = tmp_path / "metrics.csv"
        write_csv(path, [{"name": "run", "ssim": 0.83, "psnr": 16.7}])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "name," + ",".join(CSV_COLUMNS)
        cells = lines[1].split(",")
        assert cells[0] == "run"
        assert cells[1 + CSV_COLUMNS.index("ssim")] == "0.83"
        assert cells[1 + CSV_COLUMNS.index("psnr")] == "16.7"
        assert cells[1 + CSV_COLUMNS.index("clip_f")] == ""
