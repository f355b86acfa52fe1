"""Per-band entropies, the inter-band Pearson matrix, and the two reward rules.

Everything downstream (environment rewards, oracles, selection reports) reads
from a precomputed :class:`BandStats` so the O(L^2 N) correlation work happens
once per image.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConstantBand, EmptySubset, IndexOutOfRange, NotSuccessor
from .hsi_data import HyperspectralImage, QuantizedBand, quantize_band


@dataclass(frozen=True, eq=False)
class BandStats:
    """Cached per-band entropies (bits) and the L x L Pearson matrix.

    Correlation entries involving a constant (zero-variance) band are set to
    0, including that band's diagonal entry; all other diagonal entries are 1.
    """

    entropies: np.ndarray
    correlation: np.ndarray
    bin_count: int

    def __post_init__(self):
        ent = np.asarray(self.entropies, dtype=np.float64)
        corr = np.asarray(self.correlation, dtype=np.float64)
        if corr.shape != (ent.size, ent.size):
            raise ValueError(
                f"correlation shape {corr.shape} does not match {ent.size} bands"
            )
        ent.setflags(write=False)
        corr.setflags(write=False)
        object.__setattr__(self, "entropies", ent)
        object.__setattr__(self, "correlation", corr)

    @property
    def bands(self) -> int:
        return self.entropies.size


def band_entropy(q: QuantizedBand, per_pixel_sum: bool = False) -> float:
    """Shannon entropy (bits) of one quantized band.

    The default sums -p log2 p over the distinct bin codes of the empirical
    distribution. ``per_pixel_sum=True`` instead sums over pixels, weighting
    each code by its multiplicity; it exists for A/B comparisons only and is
    not used by any reward.
    """
    counts = np.bincount(q.codes, minlength=q.bin_count)
    n = q.codes.size
    p = counts[counts > 0] / n
    if per_pixel_sum:
        return float(-(counts[counts > 0] * p * np.log2(p)).sum())
    return float(-(p * np.log2(p)).sum())


def pearson(image: HyperspectralImage, i: int, j: int) -> float:
    """Population-moment Pearson coefficient between two raw bands.

    Raises :class:`ConstantBand` when either band has zero variance; the
    matrix builder substitutes 0 for such entries instead.
    """
    for b in (i, j):
        if not 0 <= b < image.bands:
            raise IndexOutOfRange(f"band {b} not in [0, {image.bands})")
    x = image.values[i]
    y = image.values[j]
    sx = x.std()
    sy = y.std()
    if sx == 0.0 or sy == 0.0:
        raise ConstantBand(f"band {i if sx == 0.0 else j} has zero variance")
    cov = ((x - x.mean()) * (y - y.mean())).mean()
    return float(np.clip(cov / (sx * sy), -1.0, 1.0))


def correlation_matrix(image: HyperspectralImage) -> np.ndarray:
    """Full L x L signed Pearson matrix with constant bands mapped to 0."""
    x = image.values
    centered = x - x.mean(axis=1, keepdims=True)
    std = x.std(axis=1)
    constant = std == 0.0
    safe_std = np.where(constant, 1.0, std)
    normed = centered / safe_std[:, None]
    corr = normed @ normed.T / image.pixels
    corr = (corr + corr.T) / 2.0
    np.clip(corr, -1.0, 1.0, out=corr)
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    return corr


def compute_band_stats(
    image: HyperspectralImage,
    bin_count: int = 256,
    per_pixel_entropy: bool = False,
    rescale: bool = False,
) -> BandStats:
    """Quantize every band and build the cached statistics.

    ``rescale`` maps all radiance values to [0, 1] by the global min and max
    before quantization. Per-band min-max binning makes the default entropies
    invariant to this, so the knob only matters for experimental entropy
    variants; it defaults to off.
    """
    if rescale:
        lo = image.values.min()
        hi = image.values.max()
        scaled = (image.values - lo) / (hi - lo) if hi > lo else np.zeros_like(image.values)
        image = HyperspectralImage(
            values=scaled,
            band_wavelengths=image.band_wavelengths,
            labels=image.labels,
        )
    entropies = np.array(
        [
            band_entropy(quantize_band(image, b, bin_count), per_pixel_sum=per_pixel_entropy)
            for b in range(image.bands)
        ]
    )
    return BandStats(
        entropies=entropies,
        correlation=correlation_matrix(image),
        bin_count=bin_count,
    )


def _as_indices(stats: BandStats, subset) -> np.ndarray:
    idx = np.asarray(sorted(int(b) for b in subset), dtype=np.int64)
    if idx.size == 0:
        raise EmptySubset("statistic requested for an empty band subset")
    if idx.size and (idx[0] < 0 or idx[-1] >= stats.bands):
        raise IndexOutOfRange(f"subset indices must lie in [0, {stats.bands})")
    if np.unique(idx).size != idx.size:
        raise ValueError("subset contains duplicate band indices")
    return idx


def mean_information_entropy(stats: BandStats, subset) -> float:
    """Arithmetic mean of the per-band entropies over ``subset``."""
    idx = _as_indices(stats, subset)
    return float(stats.entropies[idx].mean())


def mean_correlation(stats: BandStats, subset, absolute: bool = False) -> float:
    """Mean of all |B|^2 entries of the correlation submatrix over ``subset``.

    Self-terms and both orderings are counted, exactly as the signed double
    sum reads. ``absolute=True`` averages |r| instead (off by default).
    """
    idx = _as_indices(stats, subset)
    sub = stats.correlation[np.ix_(idx, idx)]
    if absolute:
        sub = np.abs(sub)
    return float(sub.mean())


def _one_new_band(before, after) -> int:
    prev = frozenset(int(b) for b in before)
    new = frozenset(int(b) for b in after)
    added = new - prev
    if len(added) != 1 or prev - new or len(new) != len(prev) + 1:
        raise NotSuccessor(
            f"after-subset must be before-subset plus exactly one band "
            f"(got {sorted(prev)} -> {sorted(new)})"
        )
    return next(iter(added))


def entropy_reward(stats: BandStats, before, after) -> float:
    """Change in mean information entropy from adding one band.

    The first step (empty ``before``) pays the new band's own entropy; later
    steps pay MIE(after) - MIE(before).
    """
    a = _one_new_band(before, after)
    if not before:
        return float(stats.entropies[_as_indices(stats, [a])[0]])
    return mean_information_entropy(stats, after) - mean_information_entropy(stats, before)


def corr_reward(stats: BandStats, before, after, absolute: bool = False) -> float:
    """Drop in mean correlation from adding one band (positive is good).

    The first step carries no signal (a singleton's mean correlation is
    identically 1 for non-constant bands) and is defined as 0.
    """
    _one_new_band(before, after)
    if not before:
        return 0.0
    return mean_correlation(stats, before, absolute) - mean_correlation(
        stats, after, absolute
    )


def stats_summary(stats: BandStats) -> dict:
    """JSON-ready digest: entropies plus a min/max/mean view of the correlations."""
    corr = stats.correlation
    off = ~np.eye(stats.bands, dtype=bool)
    return {
        "entropies": [float(e) for e in stats.entropies],
        "bin_count": stats.bin_count,
        "correlation_summary": {
            "min": float(corr.min()),
            "max": float(corr.max()),
            "mean_offdiag": float(corr[off].mean()) if stats.bands > 1 else None,
        },
    }
