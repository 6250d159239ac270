"""Acceptance suite: one test per release criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""

import contextlib
import hashlib
import itertools
import json
import shutil
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from umforge import (
    EvalGrid,
    FeatureSet,
    GaussianSummary,
    GrayImage,
    SegMask,
    ValueSpace,
    boundary_recall,
    dice,
    frechet_distance,
    gaussian_summary,
    generate_unsupervised_mask,
    kl_hu_histogram,
    mm_fid,
    mm_std,
    normalize_grids,
    quantize_superclusters,
    slic,
    wilcoxon_signed_rank,
)
from umforge.cli import run_cli
from umforge.metrics import SCALES, TASKS
from umforge.pngio import save_gray
from umforge.umft import write_umft

from conftest import quadrant_image, quadrant_gt


@contextlib.contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL [{name}]")
        raise
    print(f"ACCEPTANCE PASS [{name}]")


def unit8(arr):
    return GrayImage(np.asarray(arr, dtype=np.uint8), ValueSpace.UNIT8)


def test_mask_generation_conformance_and_runtime():
    with criterion("mask generation: 4 superclusters at M=512, t=50, < 2s at 1024^2"):
        img = quadrant_image(1024, values=(10, 90, 170, 250))
        start = time.perf_counter()
        mask = generate_unsupervised_mask(img, 512, 50)
        elapsed = time.perf_counter() - start
        assert mask.supercluster_values == (0, 50, 150, 250)
        assert elapsed < 2.0, f"took {elapsed:.2f}s"


def test_frechet_oracles():
    with criterion("Fréchet oracle: closed forms, Monte-Carlo 5%, identity grid < 1e-6"):
        one_a = GaussianSummary(mean=[0.0], cov=[[1.0]], n=10)
        one_b = GaussianSummary(mean=[1.0], cov=[[1.0]], n=10)
        assert abs(frechet_distance(one_a, one_b) - 1.0) < 1e-9

        two_a = GaussianSummary(mean=[0.0, 0.0], cov=np.eye(2), n=10)
        two_b = GaussianSummary(mean=[1.0, 1.0], cov=4.0 * np.eye(2), n=10)
        assert abs(frechet_distance(two_a, two_b) - 4.0) < 1e-9

        from scipy import linalg

        rng = np.random.default_rng(17)
        for d in (2, 5, 8):
            qa = rng.normal(size=(d, d))
            qb = rng.normal(size=(d, d))
            mu_a, mu_b = rng.normal(size=d) * 2, rng.normal(size=d) * 2
            cov_a = qa @ qa.T + 0.5 * np.eye(d)
            cov_b = qb @ qb.T + 0.5 * np.eye(d)
            analytic = float(
                np.sum((mu_a - mu_b) ** 2)
                + np.trace(cov_a + cov_b - 2.0 * linalg.sqrtm(cov_a @ cov_b).real)
            )
            xa = rng.multivariate_normal(mu_a, cov_a, size=100_000)
            xb = rng.multivariate_normal(mu_b, cov_b, size=100_000)
            sampled = frechet_distance(
                gaussian_summary(FeatureSet(xa, 128, "imagenet", "a")),
                gaussian_summary(FeatureSet(xb, 128, "imagenet", "b")),
            )
            assert abs(sampled - analytic) / analytic < 0.05

        real = [
            FeatureSet(rng.normal(size=(24, 6)), s, t, "real")
            for s in SCALES
            for t in TASKS
        ]
        synth = [FeatureSet(f.matrix, f.scale, f.task_id, "synth") for f in real]
        grid = mm_fid(real, synth)
        assert np.all(grid.cells < 1e-6)


def test_grid_contract():
    with criterion("grid contract: 4x4 layout; normalization in [0,1] preserves ranking"):
        rng = np.random.default_rng(23)
        sets = [
            FeatureSet(rng.normal(size=(16, 5)), s, t, "d") for s in SCALES for t in TASKS
        ]
        synth = [FeatureSet(f.matrix + 0.1, f.scale, f.task_id, "s") for f in sets]
        fid_grid = mm_fid(sets, synth)
        std_grid = mm_std(sets)
        for grid in (fid_grid, std_grid):
            assert grid.cells.shape == (4, 4)
            assert grid.scales == (128, 256, 512, 1024)
            assert grid.tasks == ("imagenet", "sex", "age", "real-vs-synth")

        grids = [EvalGrid(kind="FID", cells=rng.uniform(0, 9, (4, 4))) for _ in range(4)]
        normed = normalize_grids(grids)
        raw = np.stack([g.cells for g in grids])
        out = np.stack([g.cells for g in normed])
        assert out.min() >= 0.0 and out.max() <= 1.0
        for i in range(4):
            for j in range(4):
                assert np.array_equal(
                    np.argsort(raw[:, i, j], kind="stable"),
                    np.argsort(out[:, i, j], kind="stable"),
                )


def test_quantization_properties():
    with criterion("quantization: idempotence and t-monotonicity over 1000 random images"):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            arr = rng.integers(0, 256, size=(8, 8)).astype(np.uint8)
            t1 = int(rng.integers(1, 128))
            k = int(rng.integers(2, 4))
            t2 = min(t1 * k, 255)
            img = unit8(arr)
            fine = quantize_superclusters(img, t1)
            again = quantize_superclusters(fine.as_image(), t1)
            assert np.array_equal(fine.values, again.values)
            if t2 % t1 == 0:
                coarse = quantize_superclusters(img, t2)
                assert len(coarse.supercluster_values) <= len(fine.supercluster_values)
                # every coarse bin is a union of fine bins
                via_fine = quantize_superclusters(fine.as_image(), t2)
                assert np.array_equal(coarse.values, via_fine.values)


def test_slic_partition_suite():
    with criterion("SLIC: coverage, 4-connectivity, K<=M on 500 random images; recall 1.0"):
        from skimage import measure

        rng = np.random.default_rng(41)
        for _ in range(500):
            h = int(rng.integers(6, 25))
            w = int(rng.integers(6, 25))
            m = int(rng.integers(1, h * w + 1))
            img = unit8(rng.integers(0, 256, size=(h, w)))
            lab = slic(img, m)
            assert lab.count <= m
            present = np.unique(lab.labels)
            assert present[0] == 0 and present[-1] == lab.count - 1
            assert present.size == lab.count
            comp = measure.label(lab.labels, connectivity=1, background=-1)
            assert comp.max() == lab.count

        quad = quadrant_image(64, values=(0, 80, 160, 240))
        lab = slic(quad, 4)
        assert boundary_recall(lab, quadrant_gt(64), tolerance_px=0) == 1.0


def _brute_force_wilcoxon(diffs, alternative):
    diffs = np.asarray(diffs, dtype=np.float64)
    diffs = diffs[diffs != 0]
    ranks = stats.rankdata(np.abs(diffs))
    w_obs = ranks[diffs > 0].sum()
    ge = le = 0
    for signs in itertools.product((1, -1), repeat=diffs.size):
        w = sum(r for r, s in zip(ranks, signs) if s > 0)
        ge += w >= w_obs
        le += w <= w_obs
    total = 2.0 ** diffs.size
    if alternative == "greater":
        return w_obs, ge / total
    if alternative == "less":
        return w_obs, le / total
    return w_obs, min(1.0, 2.0 * min(ge / total, le / total))


def test_statistics_oracles():
    with criterion("statistics: Wilcoxon matches enumeration (n<=12); Dice/KL fixtures"):
        res = wilcoxon_signed_rank(
            [1.0, 2.0, 3.0, 4.0, 5.0], [0.5, 1.0, 2.0, 3.0, 4.0], alternative="greater"
        )
        assert abs(res.p_value - 1.0 / 32.0) < 1e-12

        rng = np.random.default_rng(59)
        for n in range(5, 13):
            for alternative in ("two-sided", "greater", "less"):
                diffs = rng.normal(size=n)
                if rng.random() < 0.5:  # force ties half the time
                    diffs = rng.integers(1, 4, size=n) * rng.choice([-1.0, 1.0], size=n)
                expected_w, expected_p = _brute_force_wilcoxon(diffs, alternative)
                got = wilcoxon_signed_rank(diffs, np.zeros(n), alternative=alternative)
                assert got.statistic == expected_w
                assert abs(got.p_value - expected_p) < 1e-12

        a = SegMask(np.array([[1, 1, 1, 1, 0, 0]], dtype=np.int64))
        b = SegMask(np.array([[0, 0, 1, 1, 1, 1]], dtype=np.int64))
        assert abs(dice(a, b, 1) - 0.5) < 1e-9
        same = SegMask(np.array([[1, 0], [0, 1]], dtype=np.int64))
        assert abs(dice(same, same, 1) - 1.0) < 1e-9

        expected_kl = 0.5 * np.log(2.0) + 0.5 * np.log(2.0 / 3.0)
        value = kl_hu_histogram(
            [0.5, 0.5, 1.5, 1.5], [0.5, 1.5, 1.5, 1.5], bin_width=1.0, value_range=(0.0, 2.0)
        )
        assert abs(value - expected_kl) < 1e-6


def _tree_digest(root: Path) -> dict:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_cli_determinism(tmp_path):
    with criterion("determinism: CLI pipelines bit-identical on rerun, workers 1 and 8"):
        wd = tmp_path
        rng = np.random.default_rng(101)
        (wd / "imgs").mkdir()
        for i in range(5):
            arr = (rng.integers(0, 6, size=(48, 48)) * 48).astype(np.uint8)
            save_gray(wd / "imgs" / f"i{i}.png", GrayImage(arr, ValueSpace.UNIT8))

        # series manifest for montage determinism
        yy, xx = np.mgrid[:64, :64]
        body = (yy - 32) ** 2 + (xx - 32) ** 2 <= 28**2
        lung = (yy - 32) ** 2 + (xx - 32) ** 2 <= 14**2
        (wd / "slices").mkdir()
        manifest = []
        for p in range(2):
            paths = []
            for i in range(9):
                hu = np.full((64, 64), -1000.0)
                hu[body] = float(rng.integers(-50, 50))
                hu[lung] = -800.0
                rel = f"slices/p{p}_{i}.png"
                save_gray(wd / rel, GrayImage(hu, ValueSpace.HU))
                paths.append(rel)
            manifest.append({"patient_id": f"p{p}", "slice_paths": paths})
        (wd / "series.json").write_text(json.dumps(manifest))

        feat_rng = np.random.default_rng(7)
        for side in ("real",):
            d = wd / side
            d.mkdir()
            for s in SCALES:
                for t in TASKS:
                    write_umft(
                        d / f"{s}_{t}.umft",
                        FeatureSet(feat_rng.normal(size=(12, 4)), s, t, side),
                    )
        shutil.copytree(wd / "real", wd / "synth")

        def pipeline(tag: str, workers: str):
            out = wd / tag
            out.mkdir()
            base = ["--workdir", str(wd), "--seed", "11", "--parallelism", workers]
            assert run_cli(base + ["umask", "gen", "--input-dir", "imgs",
                                   "--out", f"{tag}/masks", "--superpixels", "32",
                                   "--threshold", "50"]) == 0
            assert run_cli(base + ["prep", "montage", "--manifest", "series.json",
                                   "--out", f"{tag}/montages"]) == 0
            first_mask = sorted((out / "masks").glob("*_umask.png"))[0]
            rel = str(first_mask.relative_to(wd))
            assert run_cli(base + ["edit", "sweep", "--mask", rel,
                                   "--patch", "ellipse:24,24,8,6",
                                   "--values", "100,150,200,250",
                                   "--out", f"{tag}/sweep"]) == 0
            assert run_cli(base + ["eval", "mmfid", "--real", "real", "--synth", "synth",
                                   "--out", f"{tag}/grid.json"]) == 0
            return _tree_digest(out)

        d1 = pipeline("run1", "1")
        d2 = pipeline("run2", "1")
        d8 = pipeline("run8", "8")
        assert d1 and list(d1.values()) == list(d2.values()) == list(d8.values())

        grid = json.loads((wd / "run1" / "grid.json").read_text())
        assert np.all(np.asarray(grid["cells"]) < 1e-6)
