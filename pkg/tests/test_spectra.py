import io
import math

import numpy as np
import pytest
from scipy.integrate import quad

from dephaskit.errors import (
    DomainError,
    InsufficientDataError,
    SpectrumParseError,
    UnknownPresetError,
    ValidationError,
)
from dephaskit.spectra import (
    PRESET_THETAS,
    GaussianComponent,
    Spectrum,
    SpectrumSample,
    fit_mixture,
    fwhm_of_sigma,
    load_spectrum,
    sigma_of_fwhm,
    tilt_preset,
)


def sample_csv(rows, header="wavelength_nm,intensity"):
    return io.StringIO(header + "\n" + "\n".join(rows) + "\n")


def synthesize(spectrum, lo, hi, n, scale=1.0):
    lam = np.linspace(lo, hi, n)
    return SpectrumSample(points=tuple(zip(lam, scale * spectrum.pdf(lam))))


class TestLoadSpectrum:
    def test_parses_clean_file(self):
        rows = [f"{700 + 0.01 * i:.4f},{i + 1.0}" for i in range(100)]
        sample = load_spectrum(sample_csv(rows))
        assert len(sample.points) == 100
        assert not sample.resorted

    def test_parse_error_cites_line(self):
        rows = [f"{700 + 0.01 * i},1.0" for i in range(30)]
        rows[15] = "700.155,not_a_number"  # data line 17 counting the header
        with pytest.raises(SpectrumParseError) as err:
            load_spectrum(sample_csv(rows))
        assert err.value.line_no == 17
        assert "17" in str(err.value)

    def test_unsorted_rows_resorted(self):
        rows = [f"{w},1.0" for w in (703, 701, 702, 700, 705, 704, 706, 707)]
        sample = load_spectrum(sample_csv(rows))
        assert sample.resorted
        assert list(sample.wavelengths) == sorted(sample.wavelengths)

    def test_too_few_points(self):
        rows = [f"{700 + i},1.0" for i in range(5)]
        with pytest.raises(InsufficientDataError):
            load_spectrum(sample_csv(rows))

    def test_negative_intensity(self):
        rows = [f"{700 + i},1.0" for i in range(8)]
        rows[3] = "703,-2.0"
        with pytest.raises(ValidationError):
            load_spectrum(sample_csv(rows))

    def test_bad_header(self):
        with pytest.raises(SpectrumParseError):
            load_spectrum(sample_csv(["700,1"], header="lambda,counts"))

    def test_accepts_bytes(self):
        payload = b"wavelength_nm,intensity\n" + b"".join(
            f"{700 + i},{1.0}\n".encode() for i in range(10)
        )
        assert len(load_spectrum(payload).points) == 10


class TestFitMixture:
    def test_noiseless_single_gaussian_exact(self):
        spec = Spectrum.single(702.5, 0.21)
        report = fit_mixture(synthesize(spec, 700.5, 704.5, 200), n_components=1)
        assert report.converged
        assert report.residual_rms < 1e-10
        c = report.spectrum.components[0]
        assert c.center_nm == pytest.approx(702.5, abs=1e-8)
        assert c.sigma_nm == pytest.approx(0.21, abs=1e-8)

    def test_two_peak_round_trip_with_noise(self):
        spec = tilt_preset("8.5")
        lam = np.linspace(699.3, 706.3, 350)
        rng = np.random.default_rng(7)
        intensity = 240.0 * spec.pdf(lam) * (1.0 + 0.01 * rng.standard_normal(lam.size))
        sample = SpectrumSample(points=tuple(zip(lam, np.clip(intensity, 0.0, None))))
        report = fit_mixture(sample, n_components=2)
        assert report.converged
        for fitted, truth in zip(report.spectrum.components, spec.components):
            assert fitted.center_nm == pytest.approx(truth.center_nm, abs=0.05)
            assert fitted.sigma_nm == pytest.approx(truth.sigma_nm, rel=0.10)
            assert fitted.weight == pytest.approx(truth.weight, abs=0.05)

    def test_scale_equivariance(self):
        spec = tilt_preset("9.0")
        a = fit_mixture(synthesize(spec, 698.5, 706.5, 300), n_components=2).spectrum
        b = fit_mixture(synthesize(spec, 698.5, 706.5, 300, scale=37.5), n_components=2).spectrum
        for ca, cb in zip(a.components, b.components):
            assert cb.weight == pytest.approx(ca.weight, abs=1e-8)
            assert cb.center_nm == pytest.approx(ca.center_nm, abs=1e-8)
            assert cb.sigma_nm == pytest.approx(ca.sigma_nm, abs=1e-8)

    def test_two_components_on_single_peak_permitted(self):
        # the second component may collapse (dropped) or degenerate into an
        # overlapping twin; either way the fitted density must match
        spec = Spectrum.single(702.0, 0.2)
        report = fit_mixture(synthesize(spec, 700.0, 704.0, 250), n_components=2)
        assert report.converged
        assert len(report.spectrum.components) in (1, 2)
        lam = np.linspace(700.5, 703.5, 101)
        assert np.max(np.abs(report.spectrum.pdf(lam) - spec.pdf(lam))) < 1e-6

    def test_flat_sample_never_crashes(self):
        lam = np.linspace(700.0, 706.0, 64)
        flat = SpectrumSample(points=tuple((w, 1.0) for w in lam))
        report = fit_mixture(flat, n_components=1)
        assert not report.converged

    def test_preset_round_trips_noiseless(self):
        for theta in PRESET_THETAS:
            spec = tilt_preset(theta)
            centers = [c.center_nm for c in spec.components]
            sigmas = [c.sigma_nm for c in spec.components]
            lo = min(centers) - 8 * max(sigmas)
            hi = max(centers) + 8 * max(sigmas)
            report = fit_mixture(synthesize(spec, lo, hi, 200), n_components=len(centers))
            assert report.converged, theta
            for fitted, truth in zip(report.spectrum.components, spec.components):
                assert fitted.weight == pytest.approx(truth.weight, abs=1e-6)
                assert fitted.center_nm == pytest.approx(truth.center_nm, abs=1e-6)
                assert fitted.sigma_nm == pytest.approx(truth.sigma_nm, abs=1e-6)


class TestPresets:
    def test_single_component_row(self):
        spec = tilt_preset("6.0")
        assert len(spec.components) == 1
        c = spec.components[0]
        assert (c.weight, c.center_nm, c.sigma_nm) == (1.0, 702.672, 0.198)

    def test_two_component_weights_normalized(self):
        spec = tilt_preset(8.5)
        w1, w2 = (c.weight for c in spec.components)
        assert w1 == pytest.approx(1.333 / (1.333 + 0.758), abs=1e-12)
        assert w2 == pytest.approx(0.758 / (1.333 + 0.758), abs=1e-12)
        assert w1 == pytest.approx(0.6375, abs=5e-5)

    def test_unknown_theta(self):
        with pytest.raises(UnknownPresetError) as err:
            tilt_preset(5.0)
        assert "6.0" in str(err.value)

    def test_every_preset_integrates_to_one(self):
        for theta in PRESET_THETAS:
            spec = tilt_preset(theta)
            lo = min(c.center_nm - 8 * c.sigma_nm for c in spec.components)
            hi = max(c.center_nm + 8 * c.sigma_nm for c in spec.components)
            val, _ = quad(lambda lam: spec.pdf(lam), lo, hi, epsabs=1e-12, limit=200)
            assert val == pytest.approx(1.0, abs=1e-6)


class TestFwhm:
    def test_reference_width(self):
        assert fwhm_of_sigma(0.1093) == pytest.approx(0.2574, abs=5e-4)

    def test_zero(self):
        assert fwhm_of_sigma(0.0) == 0.0

    def test_unit_sigma(self):
        assert fwhm_of_sigma(1.0) == pytest.approx(2 * math.sqrt(2 * math.log(2)), abs=1e-12)
        assert fwhm_of_sigma(1.0) == pytest.approx(2.3548, abs=1e-4)

    def test_inverse_pair(self):
        for x in (0.0, 0.05, 0.1093, 1.7):
            assert sigma_of_fwhm(fwhm_of_sigma(x)) == pytest.approx(x, abs=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            fwhm_of_sigma(-1.0)
        with pytest.raises(DomainError):
            sigma_of_fwhm(-1.0)


class TestSpectrumValidation:
    def test_weights_must_normalize(self):
        with pytest.raises(ValidationError):
            Spectrum((GaussianComponent(0.5, 700.0, 0.2), GaussianComponent(0.4, 702.0, 0.2)))

    def test_centers_positive(self):
        with pytest.raises(ValidationError):
            Spectrum.single(-700.0, 0.2)

    def test_distinct_centers(self):
        with pytest.raises(ValidationError):
            Spectrum((GaussianComponent(0.5, 700.0, 0.2), GaussianComponent(0.5, 700.0, 0.3)))

    def test_zero_sigma_allowed(self):
        spec = Spectrum.single(702.0, 0.0)
        assert spec.components[0].sigma_nm == 0.0
        with pytest.raises(DomainError):
            spec.pdf(702.0)
