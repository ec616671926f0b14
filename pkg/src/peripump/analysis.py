"""Waveform comparison statistics and pulsation-frequency extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNormalizer, NoDominantPeak, ZeroVariance

MIN_LENGTH = 8
# a sub-multiple of the top FFT peak counts as the fundamental when its
# magnitude reaches this fraction of the top peak
SUBHARMONIC_RATIO = 0.2
MAX_SUBHARMONIC = 8


@dataclass(frozen=True, eq=False)
class AlignedSeries:
    t: np.ndarray
    reference: np.ndarray
    candidate: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        ref = np.asarray(self.reference, dtype=float)
        cand = np.asarray(self.candidate, dtype=float)
        if not len(t) == len(ref) == len(cand):
            raise ValueError(f"length mismatch: t={len(t)}, ref={len(ref)}, cand={len(cand)}")
        if len(t) < MIN_LENGTH:
            raise ValueError(f"need at least {MIN_LENGTH} samples, got {len(t)}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(ref)) and np.all(np.isfinite(cand))):
            raise ValueError("series contain non-finite values")
        dt = np.diff(t)
        if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-6, atol=0):
            raise ValueError("time grid must be uniform and increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "reference", ref)
        object.__setattr__(self, "candidate", cand)

    def window(self, start: int = 0, stop: int | None = None) -> AlignedSeries:
        sl = slice(start, stop)
        return AlignedSeries(self.t[sl], self.reference[sl], self.candidate[sl])


def resample(t_src, values, t_dst) -> np.ndarray:
    """Linear interpolation of a trace onto another time grid."""
    t_src = np.asarray(t_src, dtype=float)
    t_dst = np.asarray(t_dst, dtype=float)
    if t_dst[0] < t_src[0] - 1e-12 or t_dst[-1] > t_src[-1] + 1e-12:
        raise ValueError(
            f"target grid [{t_dst[0]:g}, {t_dst[-1]:g}] s exceeds trace span "
            f"[{t_src[0]:g}, {t_src[-1]:g}] s")
    return np.interp(t_dst, t_src, np.asarray(values, dtype=float))


def rmse(s: AlignedSeries) -> float:
    diff = s.reference - s.candidate
    return float(np.sqrt(np.mean(diff * diff)))


def nrmse(s: AlignedSeries, normalizer: str = "mean") -> float:
    """RMSE as a fraction of the reference mean (default) or range."""
    if normalizer == "mean":
        scale = float(np.mean(s.reference))
    elif normalizer == "range":
        scale = float(np.ptp(s.reference))
    else:
        raise ValueError(f"normalizer must be 'mean' or 'range', got {normalizer!r}")
    if scale == 0:
        raise DegenerateNormalizer(f"reference {normalizer} is zero")
    return rmse(s) / abs(scale)


def pearson(s: AlignedSeries) -> float:
    dx = s.reference - np.mean(s.reference)
    dy = s.candidate - np.mean(s.candidate)
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise ZeroVariance("Pearson correlation needs both series to vary")
    r = float(np.dot(dx, dy)) / np.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def _peak_near(mag, k):
    lo, hi = max(1, k - 1), min(len(mag), k + 2)
    j = lo + int(np.argmax(mag[lo:hi]))
    return j, mag[j]


def fundamental_frequency(values, h: float) -> float:
    """Pulsation frequency of a uniformly sampled periodic signal [Hz].

    Starts from the largest nonzero DFT bin and then steps down to the
    lowest sub-multiple of it that still carries a clear peak, so a strong
    second or third harmonic (e.g. near a line resonance) is not mistaken
    for the fundamental.
    """
    x = np.asarray(values, dtype=float)
    x = x - np.mean(x)
    mag = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(len(x), h)
    if len(mag) < 3:
        raise NoDominantPeak("series too short for a spectrum")
    nonzero = mag[1:]
    k_top = 1 + int(np.argmax(nonzero))
    top = mag[k_top]
    median = float(np.median(nonzero))
    if top == 0 or top < 2 * median:
        raise NoDominantPeak(f"top bin {top:.3g} is below twice the median {median:.3g}")

    best = k_top
    for d in range(2, MAX_SUBHARMONIC + 1):
        k = int(round(k_top / d))
        if k < 1:
            break
        j, m = _peak_near(mag, k)
        is_local_max = m >= mag[max(j - 1, 1)] and m >= mag[min(j + 1, len(mag) - 1)]
        if is_local_max and m >= SUBHARMONIC_RATIO * top and m >= 2 * median:
            best = j
    return float(freqs[best])
