"""Photon frequency spectra: the two-Gaussian model, CSV ingestion, preset table.

A Spectrum is a normalized mixture of at most two Gaussian components over the
monochromator wavelength axis (nm).  The bundled tilt-angle presets reproduce
the nine Fabry-Perot cavity settings of the reference birefringence experiment;
their amplitudes are stored already normalized to unit total weight.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    DomainError,
    FitError,
    InsufficientDataError,
    SpectrumParseError,
    UnknownPresetError,
    ValidationError,
)

# 2 sqrt(2 ln 2): Gaussian FWHM per unit sigma
_FWHM_FACTOR = 2.0 * math.sqrt(2.0 * math.log(2.0))

SIGMA_FIT_MIN = 0.01
SIGMA_FIT_MAX = 5.0


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    center_nm: float
    sigma_nm: float


@dataclass(frozen=True)
class Spectrum:
    """Normalized one- or two-component Gaussian mixture over wavelength."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) not in (1, 2):
            raise ValidationError("spectrum needs 1 or 2 components")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {total}, expected 1")
        for c in comps:
            if not (0.0 < c.weight <= 1.0):
                raise ValidationError(f"weight {c.weight} outside (0, 1]")
            if c.center_nm <= 0.0:
                raise ValidationError(f"center {c.center_nm} must be positive")
            if c.sigma_nm < 0.0:
                raise ValidationError(f"sigma {c.sigma_nm} must be nonnegative")
        if len(comps) == 2 and comps[0].center_nm == comps[1].center_nm:
            raise ValidationError("two components must have distinct centers")
        object.__setattr__(self, "components", comps)

    def pdf(self, wavelength_nm) -> np.ndarray:
        """Mixture density on the wavelength axis. Requires all sigmas > 0."""
        lam = np.asarray(wavelength_nm, dtype=float)
        out = np.zeros_like(lam)
        for c in self.components:
            if c.sigma_nm == 0.0:
                raise DomainError("pdf undefined for a zero-width component")
            out = out + c.weight * np.exp(-0.5 * ((lam - c.center_nm) / c.sigma_nm) ** 2) / (
                c.sigma_nm * math.sqrt(2.0 * math.pi)
            )
        return out

    @classmethod
    def single(cls, center_nm: float, sigma_nm: float) -> "Spectrum":
        return cls((GaussianComponent(1.0, center_nm, sigma_nm),))

    @classmethod
    def from_amplitudes(cls, params) -> "Spectrum":
        """Build from (amplitude, center, sigma) triples; amplitudes get normalized."""
        total = sum(a for a, _, _ in params)
        if total <= 0:
            raise ValidationError("total amplitude must be positive")
        return cls(tuple(GaussianComponent(a / total, c, s) for a, c, s in params))


@dataclass(frozen=True)
class SpectrumSample:
    """Measured (wavelength, intensity) points, wavelengths strictly increasing."""

    points: tuple
    resorted: bool = False  # input rows arrived out of order and were re-sorted

    def __post_init__(self):
        pts = tuple((float(w), float(i)) for w, i in self.points)
        if len(pts) < 8:
            raise InsufficientDataError(f"need at least 8 points, got {len(pts)}")
        wl = np.array([p[0] for p in pts])
        if np.any(np.diff(wl) <= 0):
            raise ValidationError("wavelengths must be strictly increasing")
        if any(p[1] < 0 for p in pts):
            raise ValidationError("intensities must be nonnegative")
        object.__setattr__(self, "points", pts)

    @property
    def wavelengths(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def intensities(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


@dataclass(frozen=True)
class FitReport:
    spectrum: Spectrum
    residual_rms: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if self.residual_rms < 0:
            raise ValidationError("residual_rms must be nonnegative")


def load_spectrum(source) -> SpectrumSample:
    """Parse a `wavelength_nm,intensity` CSV from a path, bytes, or file object.

    Rows out of order are accepted and re-sorted (flagged on the sample).
    Malformed cells raise SpectrumParseError with the offending line number.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return _parse_sample(fh)
    if isinstance(source, bytes):
        return _parse_sample(io.StringIO(source.decode("utf-8")))
    return _parse_sample(source)


def _parse_sample(fh) -> SpectrumSample:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise SpectrumParseError("empty file", line_no=1)
    if [h.strip() for h in header] != ["wavelength_nm", "intensity"]:
        raise SpectrumParseError(
            f"expected header 'wavelength_nm,intensity', got {','.join(header)!r}", line_no=1
        )
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise SpectrumParseError(f"line {line_no}: expected 2 columns, got {len(row)}", line_no)
        try:
            wl, inten = float(row[0]), float(row[1])
        except ValueError:
            raise SpectrumParseError(f"line {line_no}: non-numeric cell in {row!r}", line_no)
        if not (math.isfinite(wl) and math.isfinite(inten)):
            raise SpectrumParseError(f"line {line_no}: non-finite value", line_no)
        rows.append((wl, inten))
    wl = [r[0] for r in rows]
    resorted = any(b <= a for a, b in zip(wl, wl[1:]))
    if resorted:
        rows = sorted(rows, key=lambda r: r[0])
    return SpectrumSample(points=tuple(rows), resorted=resorted)


def _mixture_model(params: np.ndarray, lam: np.ndarray, n_components: int) -> np.ndarray:
    out = np.zeros_like(lam)
    for j in range(n_components):
        a, c, s = params[3 * j : 3 * j + 3]
        out = out + a * np.exp(-0.5 * ((lam - c) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
    return out


def _initial_guess(lam: np.ndarray, inten: np.ndarray, n_components: int) -> np.ndarray:
    """Peak-picking start: the two largest local maxima at least 5 grid points apart.

    On equal peak heights the lower wavelength wins.
    """
    interior = np.arange(1, len(lam) - 1)
    is_max = (inten[interior] >= inten[interior - 1]) & (inten[interior] >= inten[interior + 1])
    candidates = interior[is_max]
    if candidates.size == 0:
        candidates = np.array([int(np.argmax(inten))])
    # stable sort: descending height, ascending wavelength breaks ties
    order = np.lexsort((lam[candidates], -inten[candidates]))
    ranked = candidates[order]
    picks = [ranked[0]]
    if n_components == 2:
        for idx in ranked[1:]:
            if abs(int(idx) - int(picks[0])) >= 5:
                picks.append(idx)
                break
        else:
            # no separated second peak; offset from the first
            picks.append(min(len(lam) - 1, picks[0] + 5))
    guess = []
    span = lam[-1] - lam[0]
    for idx in picks:
        center = lam[idx]
        height = max(inten[idx], 1e-12)
        sigma = _half_max_width(lam, inten, int(idx))
        sigma = min(max(sigma, SIGMA_FIT_MIN), min(SIGMA_FIT_MAX, max(span, SIGMA_FIT_MIN)))
        guess.extend([height * sigma * math.sqrt(2.0 * math.pi), center, sigma])
    return np.array(guess)


def _half_max_width(lam: np.ndarray, inten: np.ndarray, idx: int) -> float:
    half = inten[idx] / 2.0
    left = idx
    while left > 0 and inten[left] > half:
        left -= 1
    right = idx
    while right < len(lam) - 1 and inten[right] > half:
        right += 1
    fwhm = lam[right] - lam[left]
    if fwhm <= 0:
        fwhm = (lam[-1] - lam[0]) / 10.0
    return fwhm / _FWHM_FACTOR


def fit_mixture(sample: SpectrumSample, n_components: int = 2) -> FitReport:
    """Least-squares fit of the Gaussian mixture to a measured sample.

    Amplitudes, centers, and widths are free; sigma is bounded to
    [0.01, 5] nm and centers to the sampled wavelength range.  No baseline
    term is fitted.  A component whose fitted weight collapses to zero is
    dropped from the returned spectrum (reported, not an error).
    """
    if n_components not in (1, 2):
        raise DomainError("n_components must be 1 or 2")
    lam = sample.wavelengths
    inten = sample.intensities
    x0 = _initial_guess(lam, inten, n_components)
    lo, hi = [], []
    for _ in range(n_components):
        lo.extend([0.0, lam[0], SIGMA_FIT_MIN])
        hi.extend([np.inf, lam[-1], SIGMA_FIT_MAX])
    x0 = np.clip(x0, lo, hi)

    def residuals(p):
        return _mixture_model(p, lam, n_components) - inten

    try:
        result = least_squares(
            residuals, x0, bounds=(lo, hi), ftol=1e-10, gtol=1e-8, xtol=1e-12, max_nfev=500
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"least-squares fit failed: {exc}")
    if not np.isfinite(result.cost):
        raise FitError("fit diverged: cost is not finite")
    converged = bool(result.status in (1, 2, 3, 4))
    sigmas = result.x[2::3]
    if np.any(sigmas > SIGMA_FIT_MAX - 1e-9):
        # a width pinned at the bound means a degenerate blob, not a line
        converged = False
    triples = [tuple(result.x[3 * j : 3 * j + 3]) for j in range(n_components)]
    total_amp = sum(t[0] for t in triples)
    if total_amp <= 0 or not math.isfinite(total_amp):
        # degenerate data (e.g. all-zero intensities); report a placeholder fit
        spectrum = Spectrum.single(float(lam[int(np.argmax(inten))]), (lam[-1] - lam[0]) / 4.0)
        return FitReport(spectrum, float(np.sqrt(np.mean(inten**2))), int(result.nfev), False)
    kept = [t for t in triples if t[0] / total_amp > 1e-8]
    if len(kept) == 2 and abs(kept[0][1] - kept[1][1]) < 1e-9:
        merged = (kept[0][0] + kept[1][0], kept[0][1], max(kept[0][2], kept[1][2]))
        kept = [merged]
    kept.sort(key=lambda t: t[1])
    spectrum = Spectrum.from_amplitudes(kept)
    rms = float(np.sqrt(np.mean(residuals(result.x) ** 2)))
    return FitReport(spectrum, rms, int(result.nfev), converged)


# Tilt-angle presets: (amplitude, center_nm, sigma_nm) per component.
_PRESETS = {
    "1.5": ((0.787, 700.608, 0.185), (1.455, 704.286, 0.212)),
    "2.5": ((0.545, 700.476, 0.212), (1.636, 704.153, 0.225)),
    "3.5": ((0.182, 700.238, 0.172), (1.787, 703.836, 0.225)),
    "4.0": ((0.901, 700.079, 0.172), (1.848, 703.651, 0.212)),
    "6.0": ((1.848, 702.672, 0.198),),
    "7.5": ((1.909, 701.720, 0.185),),
    "8.0": ((1.636, 701.349, 0.212), (0.273, 704.788, 0.212)),
    "8.5": ((1.333, 701.005, 0.185), (0.758, 704.603, 0.212)),
    "9.0": ((0.667, 700.635, 0.185), (1.545, 704.286, 0.212)),
}

PRESET_THETAS = tuple(_PRESETS.keys())


def tilt_preset(theta) -> Spectrum:
    """Spectrum for one of the bundled tilt-angle settings.

    theta may be a float or the literal preset string ("1.5" ... "9.0").
    """
    key = theta if isinstance(theta, str) else format(float(theta), ".1f")
    if key not in _PRESETS:
        raise UnknownPresetError(
            f"unknown tilt preset {theta!r}; valid presets: {', '.join(PRESET_THETAS)}"
        )
    return Spectrum.from_amplitudes(_PRESETS[key])


def fwhm_of_sigma(sigma_nm: float) -> float:
    """Gaussian full width at half maximum, 2 sqrt(2 ln 2) sigma."""
    if sigma_nm < 0:
        raise DomainError("sigma must be nonnegative")
    return _FWHM_FACTOR * sigma_nm


def sigma_of_fwhm(fwhm_nm: float) -> float:
    if fwhm_nm < 0:
        raise DomainError("FWHM must be nonnegative")
    return fwhm_nm / _FWHM_FACTOR
