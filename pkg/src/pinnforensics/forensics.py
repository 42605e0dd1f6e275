"""Statistics of weight matrices: entry distributions and random-matrix diagnostics."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks
from scipy.special import gammaln

from . import kernels
from .errors import DegenerateInputError, EigenConvergenceError

LOW_CONFIDENCE_N = 1000


# --------------------------------------------------------------------------
# entry distributions


def kurtosis(samples) -> float:
    """Non-excess kurtosis ``E[(x - mu)^4] / sigma^4`` (3 for a Gaussian)."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 4:
        raise DegenerateInputError(f"kurtosis needs at least 4 samples, got {x.size}")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 == 0.0:
        raise DegenerateInputError("zero variance")
    return float(np.mean(d**4) / (m2 * m2))


def gg_moment_ratio(beta):
    """``E|x|^2 / (E|x|)^2`` of a generalized Gaussian with shape ``beta``."""
    beta = np.asarray(beta, dtype=np.float64)
    return np.exp(gammaln(1.0 / beta) + gammaln(3.0 / beta) - 2.0 * gammaln(2.0 / beta))


@dataclass(frozen=True)
class GenGaussianFit:
    mu: float
    alpha: float
    beta: float
    ok: bool
    ratio: float


def gen_gaussian_fit(samples, beta_range=(0.2, 20.0), tol=1e-10) -> GenGaussianFit:
    """Moment-matched fit of ``p(x) ~ exp(-|(x - mu)/alpha|^beta)``.

    ``beta`` solves ``E|x-mu|^2 / (E|x-mu|)^2 = G(1/b) G(3/b) / G(2/b)^2`` by
    bisection; the ratio decreases monotonically in ``beta``. When the sample
    ratio falls outside what ``beta_range`` can produce, ``beta`` is clamped
    to the nearer end and ``ok`` is False.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 100:
        raise DegenerateInputError(f"generalized-Gaussian fit needs at least 100 samples, got {x.size}")
    mu = float(x.mean())
    d = np.abs(x - mu)
    m1 = float(d.mean())
    m2 = float(np.mean(d * d))
    if m1 == 0.0:
        raise DegenerateInputError("zero spread")
    ratio = m2 / (m1 * m1)
    lo, hi = beta_range
    r_lo, r_hi = float(gg_moment_ratio(lo)), float(gg_moment_ratio(hi))
    ok = True
    if ratio >= r_lo:
        beta, ok = lo, False
    elif ratio <= r_hi:
        beta, ok = hi, False
    else:
        a, b = lo, hi
        while b - a > tol * b:
            mid = 0.5 * (a + b)
            if gg_moment_ratio(mid) > ratio:
                a = mid
            else:
                b = mid
        beta = 0.5 * (a + b)
    alpha = float(np.sqrt(m2 * np.exp(gammaln(1.0 / beta) - gammaln(3.0 / beta))))
    return GenGaussianFit(mu, alpha, float(beta), ok, ratio)


def gen_gaussian_pdf(x, mu, alpha, beta):
    x = np.asarray(x, dtype=np.float64)
    norm = beta / (2.0 * alpha * np.exp(gammaln(1.0 / beta)))
    return norm * np.exp(-np.abs((x - mu) / alpha) ** beta)


def kde_density(samples, theta):
    """Gaussian KDE with kernel variance ``theta`` as a callable density."""
    data = np.asarray(samples, dtype=np.float64).ravel()
    h = np.sqrt(theta)
    c = 1.0 / (np.sqrt(2.0 * np.pi) * h * data.size)

    def density(x):
        x = np.asarray(x, dtype=np.float64)
        flat = x.ravel()
        out = np.empty(flat.size)
        step = max(1, 2_000_000 // data.size)
        for i in range(0, flat.size, step):
            z = (flat[i : i + step, None] - data[None, :]) / h
            out[i : i + step] = c * np.exp(-0.5 * z * z).sum(axis=1)
        return out.reshape(x.shape)

    return density


def _binned_log_likelihood(train, test, thetas, lo, hi, n_bins=1 << 14):
    # Linear binning of the training set, FFT convolution with each kernel,
    # linear interpolation at the test points.
    delta = (hi - lo) / (n_bins - 1)
    pos = (train - lo) / delta
    left = np.clip(np.floor(pos).astype(np.int64), 0, n_bins - 2)
    frac = pos - left
    counts = np.bincount(left, weights=1.0 - frac, minlength=n_bins) + np.bincount(
        left + 1, weights=frac, minlength=n_bins
    )
    size = 2 * n_bins
    counts_f = np.fft.rfft(counts, size)
    offsets = np.arange(size)
    offsets = np.where(offsets < n_bins, offsets, offsets - size) * delta
    tpos = (test - lo) / delta
    out = []
    for theta in thetas:
        kern = np.exp(-0.5 * offsets * offsets / theta) / np.sqrt(2.0 * np.pi * theta)
        dens = np.fft.irfft(counts_f * np.fft.rfft(kern), size)[:n_bins] / train.size
        p = np.interp(tpos, np.arange(n_bins), np.maximum(dens, 0.0))
        out.append(float(np.sum(np.log(np.maximum(p, 1e-300)))))
    return np.array(out)


@dataclass(frozen=True)
class KDEFit:
    theta: float
    density: object
    thetas: np.ndarray
    cv_score: np.ndarray


def kde_bandwidth_grid(samples, n_grid=25):
    var = float(np.var(samples))
    return var * np.logspace(-4.0, 0.0, n_grid)


def kde_fit(samples, folds=5, n_grid=25, seed=0) -> KDEFit:
    """Gaussian KDE whose kernel variance maximizes k-fold held-out likelihood.

    Candidates are ``n_grid`` log-spaced values spanning ``[1e-4, 1]`` times
    the sample variance.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 8:
        raise DegenerateInputError(f"KDE needs at least 8 samples, got {x.size}")
    if np.all(x == x[0]):
        raise DegenerateInputError("all samples are identical")
    thetas = kde_bandwidth_grid(x, n_grid)
    h_max = np.sqrt(thetas[-1])
    lo, hi = x.min() - 8 * h_max, x.max() + 8 * h_max
    order = np.random.default_rng(seed).permutation(x.size)
    score = np.zeros(thetas.size)
    for k in range(folds):
        mask = np.zeros(x.size, dtype=bool)
        mask[order[k::folds]] = True
        score += _binned_log_likelihood(x[~mask], x[mask], thetas, lo, hi)
    theta = float(thetas[int(np.argmax(score))])
    return KDEFit(theta, kde_density(x, theta), thetas, score)


def count_modes(density, lo, hi, n_points=512, prominence=0.05):
    """Local maxima of ``density`` on a uniform grid whose prominence is at
    least ``prominence`` times the global peak. Always at least 1."""
    grid = np.linspace(lo, hi, n_points)
    vals = density(grid)
    peaks, _ = find_peaks(vals, prominence=prominence * float(vals.max()))
    return max(1, int(peaks.size))


def kde_grid(samples, theta, n_points=512):
    x = np.asarray(samples, dtype=np.float64).ravel()
    pad = 3.0 * np.sqrt(theta)
    return x.min() - pad, x.max() + pad


@dataclass(frozen=True)
class DistributionFit:
    mu: float
    sigma: float
    theta: float
    alpha: float
    beta: float
    kurtosis: float
    n_modes: int
    n: int
    fit_ok: bool
    low_confidence: bool

    def as_dict(self):
        return {
            "mu": self.mu,
            "sigma": self.sigma,
            "theta": self.theta,
            "alpha": self.alpha,
            "beta": self.beta,
            "kurtosis": self.kurtosis,
            "n_modes": self.n_modes,
            "n": self.n,
            "fit_ok": self.fit_ok,
            "low_confidence": self.low_confidence,
        }


def fit_distribution(samples, seed=0) -> tuple[DistributionFit, KDEFit | None]:
    """Summary statistics, KDE and generalized-Gaussian fit of one sample.

    Constant or tiny samples (zero-initialized biases, say) give a fit whose
    shape statistics are NaN and no KDE.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 8 or np.all(x == x[0]):
        nan = float("nan")
        fit = DistributionFit(
            mu=float(x.mean()) if x.size else nan,
            sigma=float(x.std()) if x.size else nan,
            theta=nan,
            alpha=nan,
            beta=nan,
            kurtosis=nan,
            n_modes=1 if x.size else 0,
            n=int(x.size),
            fit_ok=False,
            low_confidence=True,
        )
        return fit, None
    kde = kde_fit(x, seed=seed)
    lo, hi = kde_grid(x, kde.theta)
    gg = gen_gaussian_fit(x) if x.size >= 100 else None
    fit = DistributionFit(
        mu=float(x.mean()),
        sigma=float(x.std()),
        theta=kde.theta,
        alpha=gg.alpha if gg else float("nan"),
        beta=gg.beta if gg else float("nan"),
        kurtosis=kurtosis(x),
        n_modes=count_modes(kde.density, lo, hi),
        n=int(x.size),
        fit_ok=bool(gg.ok) if gg else False,
        low_confidence=x.size < LOW_CONFIDENCE_N,
    )
    return fit, kde


# --------------------------------------------------------------------------
# spectra


def _fingerprint(m):
    return hashlib.sha256(np.ascontiguousarray(m, dtype=np.float64).tobytes()).hexdigest()[:16]


def eigenspectrum(matrix) -> np.ndarray:
    """All eigenvalues of a real square matrix (LAPACK ``geev``), sorted by
    decreasing modulus. Complex pairs come out exactly conjugate."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"eigenspectrum needs a square matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    try:
        eig = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        fp = _fingerprint(m)
        raise EigenConvergenceError(f"eigenvalue iteration failed (matrix {fp}): {exc}", fingerprint=fp) from exc
    eig = eig.astype(np.complex128)
    order = np.lexsort((-eig.imag, -eig.real, -np.abs(eig)))
    return eig[order]


def singular_values(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    s = np.linalg.svd(m, compute_uv=False)
    return np.sort(s)[::-1]


def normalize_entries(matrix, mode="entry-std") -> np.ndarray:
    """``(W - mean) / (std sqrt(N))`` so an i.i.d. matrix has unit circular-law radius."""
    m = np.asarray(matrix, dtype=np.float64)
    if mode == "none":
        return m.copy()
    if mode != "entry-std":
        raise ValueError(f"unknown normalization {mode!r}")
    std = m.std()
    if std == 0.0:
        raise DegenerateInputError("matrix has zero entry variance")
    return (m - m.mean()) / (std * np.sqrt(m.shape[0]))


def radius_quantile(eigs, q=0.99) -> float:
    return float(np.quantile(np.abs(eigs), q))


@dataclass(frozen=True)
class CircularLawStats:
    radii: np.ndarray
    mean_radius: float
    radius_rel_spread: float
    outliers: np.ndarray
    inside_fraction: np.ndarray
    eigenvalues: tuple


def circular_law_stats(layers, normalization="entry-std", q=0.99, outlier_factor=1.05, inside_factor=1.1):
    """Cross-layer circular-law summary.

    Per layer: the ``q``-quantile of ``|lambda|`` as the radius, the count of
    eigenvalues beyond ``outlier_factor * radius`` and the fraction within
    ``inside_factor * radius``. ``radius_rel_spread`` is
    ``max |r_l - mean| / mean``.
    """
    mats = [np.asarray(m, dtype=np.float64) for m in layers]
    if len(mats) < 2:
        raise ValueError("need at least two layers")
    n = mats[0].shape
    for i, m in enumerate(mats):
        if m.shape != n or n[0] != n[1]:
            raise ValueError(f"layer {i} has shape {m.shape}; all layers must be square and of equal size")
    eigs = tuple(eigenspectrum(normalize_entries(m, normalization)) for m in mats)
    radii = np.array([radius_quantile(e, q) for e in eigs])
    mean = float(radii.mean())
    spread = float(np.max(np.abs(radii - mean)) / mean)
    outliers = np.array([int(np.sum(np.abs(e) > outlier_factor * r)) for e, r in zip(eigs, radii)])
    inside = np.array([float(np.mean(np.abs(e) <= inside_factor * r)) for e, r in zip(eigs, radii)])
    return CircularLawStats(radii, mean, spread, outliers, inside, eigs)


def gaussian_baseline(rows, cols, mean=0.0, std=1.0, seed=0) -> np.ndarray:
    """i.i.d. normal matrix; pass a subject's entry mean/std to moment-match it."""
    if not std > 0:
        raise ValueError(f"std must be positive, got {std}")
    rng = np.random.default_rng(seed)
    return mean + std * rng.standard_normal((rows, cols))


def matched_baseline(matrix, seed=0) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    return gaussian_baseline(m.shape[0], m.shape[1], float(m.mean()), float(m.std()), seed)


# --------------------------------------------------------------------------
# band structure


def band_energy_curve(matrix):
    """Cumulative squared-entry fraction within ``|i - j| <= k`` for every ``k``.

    Returns ``(plain, periodic)`` arrays of length ``n``; ``periodic`` uses the
    wrapped offset ``min(|i - j|, n - |i - j|)``. Both end at exactly 1.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"band energy needs a square matrix, got {m.shape}")
    plain, periodic = kernels.band_profile(m)
    cp, cw = np.cumsum(plain), np.cumsum(periodic)
    if cp[-1] == 0.0:
        raise DegenerateInputError("zero matrix has no band structure")
    return cp / cp[-1], cw / cw[-1]


def band_energy(matrix, k, periodic=False) -> float:
    """Fraction of ``||W||_F^2`` on diagonals with offset at most ``k``."""
    m = np.asarray(matrix)
    n = m.shape[0]
    if not 0 <= k < n:
        raise ValueError(f"halfwidth must satisfy 0 <= k < {n}, got {k}")
    plain, wrapped = band_energy_curve(m)
    curve = wrapped if periodic else plain
    return float(curve[min(k, curve.size - 1)])


# --------------------------------------------------------------------------
# singular-value drop detector


@dataclass(frozen=True)
class DropReport:
    top: np.ndarray
    baseline_mean: np.ndarray
    baseline_std: np.ndarray
    excess: np.ndarray  # relative excess over the baseline mean, top-3
    zscore: np.ndarray
    fired: bool


def singular_drop_detector(matrix, n_baselines=20, seed=0, top=3, z_threshold=5.0, rel_threshold=0.05):
    """Compare the leading singular values against moment-matched Gaussians.

    Fires when the largest singular value sits more than ``z_threshold``
    baseline standard deviations and ``rel_threshold`` (relative) above the
    baseline ensemble mean: a separated top of the spectrum that an i.i.d.
    matrix with the same entry moments does not produce.
    """
    m = np.asarray(matrix, dtype=np.float64)
    s = singular_values(m)[:top]
    base = np.array([singular_values(matched_baseline(m, seed + i))[:top] for i in range(n_baselines)])
    mean, std = base.mean(axis=0), base.std(axis=0, ddof=1)
    excess = s / mean - 1.0
    z = (s - mean) / np.maximum(std, 1e-300)
    fired = bool(z[0] > z_threshold and excess[0] > rel_threshold)
    return DropReport(s, mean, std, excess, z, fired)
