"""Mask-comparison metrics, cut-point uniformity experiment, timing harness."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .cutgen import CutGenConfig, sample_cut
from .data import FOREGROUND, ImageGrid
from .geometry import bezier_eval, rotate


@dataclass(frozen=True)
class MetricReport:
    """Agreement between a predicted and a true label grid (foreground = label 1)."""

    mse: float
    psnr: float
    jsc: float
    ssim: float
    pct_correct: float

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "psnr": None if math.isinf(self.psnr) else self.psnr,
            "psnr_infinite": math.isinf(self.psnr),
            "jsc": self.jsc,
            "ssim": self.ssim,
            "pct_correct": self.pct_correct,
        }


def _ssim_global(a: np.ndarray, b: np.ndarray) -> float:
    # single-window SSIM over the whole mask, dynamic range 1
    c1 = 0.01**2
    c2 = 0.03**2
    mu_a = a.mean()
    mu_b = b.mean()
    var_a = a.var()
    var_b = b.var()
    cov = ((a - mu_a) * (b - mu_b)).mean()
    val = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    )
    return float(min(1.0, max(0.0, val)))


def metrics(pred: ImageGrid, truth: ImageGrid) -> MetricReport:
    """MSE, PSNR, Jaccard, SSIM and percent-correct between two label grids."""
    if pred.labels.shape != truth.labels.shape:
        raise ValueError(
            f"grid shapes differ: {pred.labels.shape} vs {truth.labels.shape}"
        )
    a = (pred.labels == FOREGROUND).astype(float)
    b = (truth.labels == FOREGROUND).astype(float)
    mse = float(((a - b) ** 2).mean())
    psnr = math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse)
    inter = float(np.logical_and(a, b).sum())
    union = float(np.logical_or(a, b).sum())
    jsc = 1.0 if union == 0.0 else inter / union
    ssim = _ssim_global(a, b)
    pct = 100.0 * float((pred.labels == truth.labels).mean())
    return MetricReport(mse=mse, psnr=psnr, jsc=jsc, ssim=ssim, pct_correct=pct)


def chi_square_uniform(points, grid_g: int = 10, domain=((0.0, 1.0), (0.0, 1.0))):
    """Chi-square goodness-of-fit of 2-d points against uniformity on a g x g grid.

    Returns (statistic, p_value) with g^2 - 1 degrees of freedom.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) == 0:
        raise ValueError("need at least one point")
    (x0, x1), (y0, y1) = domain
    counts, _, _ = np.histogram2d(
        pts[:, 0], pts[:, 1], bins=grid_g, range=[[x0, x1], [y0, y1]]
    )
    n = counts.sum()
    expected = n / (grid_g * grid_g)
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = grid_g * grid_g - 1
    return stat, float(chi2.sf(stat, dof))


def _square_cloud(side: int) -> np.ndarray:
    ticks = np.linspace(0.0, 1.0, side)
    gx, gy = np.meshgrid(ticks, ticks)
    return np.column_stack((gx.ravel(), gy.ravel()))


def sample_cut_points(n_curves: int, cloud: np.ndarray, rng, cut_cfg, center, radius):
    """One parameter-uniform point from each of ``n_curves`` accepted cuts.

    Points are taken on the offset curve, mapped back to data coordinates, and
    filtered to the unit square [0, 1]^2.
    """
    kept = []
    for _ in range(n_curves):
        cut = sample_cut(cloud, cut_cfg, rng, center=center, radius=radius)
        s = rng.random()
        p_rot = bezier_eval(cut.curve, s)
        p_rot[1] += cut.offset
        p = rotate(p_rot, -cut.theta)
        if 0.0 <= p[0] <= 1.0 and 0.0 <= p[1] <= 1.0:
            kept.append(p)
    return np.asarray(kept)


@dataclass(frozen=True)
class UniformityResult:
    source: str
    pvalues: np.ndarray
    alpha_level: float

    @property
    def fraction_above(self) -> float:
        return float((self.pvalues > self.alpha_level).mean())


def uniformity_experiment(
    n_curves: int = 5000,
    n_replicates: int = 100,
    grid_g: int = 10,
    seed: int = 0,
    source: str = "cuts",
    cloud_side: int = 61,
    cut_cfg: CutGenConfig | None = None,
    alpha_level: float = 0.05,
) -> UniformityResult:
    """Do points on random cuts of the unit square look spatially uniform?

    ``source='cuts'`` draws each replicate's points from accepted cuts of a
    grid cloud filling [0, 1]^2; ``source='uniform'`` is the calibration arm
    with genuinely uniform points. Returns the per-replicate chi-square
    p-values; the headline number is the fraction above ``alpha_level``.
    """
    if source not in ("cuts", "uniform"):
        raise ValueError("source must be 'cuts' or 'uniform'")
    if cut_cfg is None:
        cut_cfg = CutGenConfig()
    cloud = _square_cloud(cloud_side)
    center = np.array([0.5, 0.5])
    radius = math.sqrt(0.5)  # enclosing circle of the unit square
    pvals = np.empty(n_replicates)
    for rep in range(n_replicates):
        rng = np.random.default_rng(np.random.SeedSequence([seed, rep]))
        if source == "cuts":
            pts = sample_cut_points(n_curves, cloud, rng, cut_cfg, center, radius)
        else:
            pts = rng.uniform(0.0, 1.0, size=(n_curves, 2))
        _, p = chi_square_uniform(pts, grid_g)
        pvals[rep] = p
    return UniformityResult(source=source, pvalues=pvals, alpha_level=alpha_level)


def timing_report(
    data,
    particle_counts,
    worker_counts,
    budget: float = math.inf,
    max_cuts: int | None = None,
    seed: int = 0,
) -> list:
    """Wall-clock grid over particle and worker counts; returns rows of dicts."""
    from .inference import SMCConfig, smc_fit

    rows = []
    for m in particle_counts:
        for w in worker_counts:
            cfg = SMCConfig(
                n_particles=int(m),
                budget=budget,
                max_cuts=max_cuts,
                n_workers=int(w),
                seed=seed,
            )
            t0 = time.perf_counter()
            fit = smc_fit(data, cfg)
            dt = time.perf_counter() - t0
            rows.append(
                {
                    "particles": int(m),
                    "workers": int(w),
                    "seconds": dt,
                    "rounds": fit.n_rounds,
                    "resamples": fit.n_resamples,
                }
            )
    return rows
