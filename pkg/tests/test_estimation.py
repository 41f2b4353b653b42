import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risloc.arrays import ArrayKind, ArraySpec, array_response
from risloc.channel import Frame
from risloc.errors import InvalidArgumentError, NoPeakError, NumericalDegeneracyError, ShapeError
from risloc.estimation import (
    Covariance,
    Spectrum,
    dominance_ratio,
    dump_spectrum,
    music_spectrum,
    pick_peak,
    sample_covariance,
    spectrum_peaks,
)

ULA_8 = ArraySpec(ArrayKind.ULA, 8)
FS = 122.88e6


def qpsk(rng, n):
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * rng.integers(0, 4, n)))


def plane_wave(azimuth, n_samples=64, seed=0):
    rng = np.random.default_rng(seed)
    return Frame(np.outer(array_response(ULA_8, azimuth, 0.0, 1.0), qpsk(rng, n_samples)), FS)


def test_noiseless_single_path_covariance_has_rank_one():
    cov = sample_covariance(plane_wave(np.radians(60)))
    eigenvalues = np.linalg.eigvalsh(cov.matrix)
    assert eigenvalues[-1] == pytest.approx(8.0)
    assert np.all(np.abs(eigenvalues[:-1]) < 1e-10)
    assert cov.n_snapshots == 64


def test_single_wave_peak_within_one_grid_step():
    spectrum = music_spectrum(sample_covariance(plane_wave(np.radians(60))), ULA_8)
    assert spectrum.grid[0] == 0.0 and spectrum.grid[-1] == pytest.approx(np.pi)
    assert spectrum.grid.size == 1801
    assert abs(spectrum.grid[spectrum.peak_index] - np.radians(60)) <= spectrum.grid_step


def test_refined_peak_is_exact_for_noiseless_waves():
    rng = np.random.default_rng(42)
    errors = []
    for azimuth in rng.uniform(np.radians(5), np.radians(175), 500):
        spectrum = music_spectrum(sample_covariance(plane_wave(azimuth, n_samples=32)), ULA_8)
        errors.append(abs(pick_peak(spectrum) - azimuth))
    assert np.degrees(max(errors)) <= 0.02


def noisy_wave(azimuth, seed):
    rng = np.random.default_rng(seed)
    noise = np.sqrt(0.1 / 2) * (rng.standard_normal((8, 128)) + 1j * rng.standard_normal((8, 128)))
    return Frame(plane_wave(azimuth, n_samples=128, seed=seed).samples + noise, FS)


@settings(max_examples=30, deadline=None)
@given(
    azimuth=st.floats(min_value=0.3, max_value=2.8),
    scale=st.floats(min_value=1e-3, max_value=1e3),
    phase=st.floats(min_value=-np.pi, max_value=np.pi),
    seed=st.integers(0, 1000),
)
def test_music_ignores_covariance_scale_and_global_phase(azimuth, scale, phase, seed):
    frame = noisy_wave(azimuth, seed)
    cov = sample_covariance(frame)
    spectrum = music_spectrum(cov, ULA_8, grid_step=np.radians(0.5))

    scaled = music_spectrum(Covariance(scale * cov.matrix, cov.n_snapshots), ULA_8, grid_step=np.radians(0.5))
    assert pick_peak(scaled) == pytest.approx(pick_peak(spectrum), abs=1e-9)

    rotated = sample_covariance(Frame(np.exp(1j * phase) * frame.samples, FS))
    np.testing.assert_allclose(music_spectrum(rotated, ULA_8, grid_step=np.radians(0.5)).values, spectrum.values, rtol=1e-6)


def test_two_sources_resolved_at_20_db():
    rng = np.random.default_rng(3)
    n_samples = 256
    truth = np.radians([60.0, 100.0])
    steering = np.stack([array_response(ULA_8, a, 0.0, 1.0) for a in truth], axis=1)
    signals = np.stack([qpsk(rng, n_samples), qpsk(rng, n_samples)])
    noise = np.sqrt(0.01 / 2) * (rng.standard_normal((8, n_samples)) + 1j * rng.standard_normal((8, n_samples)))
    spectrum = music_spectrum(sample_covariance(Frame(steering @ signals + noise, FS)), ULA_8, n_sources=2)

    np.testing.assert_allclose(spectrum_peaks(spectrum, 2), truth, atol=np.radians(1.0))


def test_exclusion_window_moves_the_pick():
    grid = np.linspace(0, np.pi, 181)
    values = np.exp(-((grid - 1.0) ** 2) / 0.01) + 0.5 * np.exp(-((grid - 2.0) ** 2) / 0.01)
    spectrum = Spectrum(grid, values, float(grid[1] - grid[0]))

    assert pick_peak(spectrum, refine="none") == pytest.approx(grid[np.argmin(np.abs(grid - 1.0))])
    assert abs(pick_peak(spectrum, exclude=(1.0, np.radians(10)), refine="parabolic") - 2.0) < 0.01
    with pytest.raises(NoPeakError):
        pick_peak(spectrum, exclude=(1.5, np.pi))


def test_parabolic_refinement_recovers_vertex():
    grid = np.linspace(0, 1, 11)
    spectrum = Spectrum(grid, 5 - (grid - 0.43) ** 2, 0.1)
    assert pick_peak(spectrum, refine="parabolic") == pytest.approx(0.43)


def test_unknown_refine_mode():
    spectrum = Spectrum(np.linspace(0, 1, 3), np.ones(3), 0.5)
    with pytest.raises(InvalidArgumentError):
        pick_peak(spectrum, refine="cubic")


def test_spectrum_peaks_needs_enough_maxima():
    grid = np.linspace(0, 1, 5)
    with pytest.raises(NoPeakError):
        spectrum_peaks(Spectrum(grid, grid, 0.25), 1)


def test_music_validates_inputs():
    cov = sample_covariance(plane_wave(1.0))
    with pytest.raises(ShapeError):
        music_spectrum(cov, ArraySpec(ArrayKind.ULA, 4))
    with pytest.raises(InvalidArgumentError):
        music_spectrum(cov, ULA_8, n_sources=8)
    with pytest.raises(InvalidArgumentError):
        music_spectrum(cov, ULA_8, grid_step=0.0)


def test_covariance_preconditions():
    with pytest.raises(ShapeError):
        Covariance(np.ones((2, 3)), 4)
    with pytest.raises(NumericalDegeneracyError):
        Covariance(np.array([[1.0, 1.0j], [1.0j, 1.0]]), 4)
    with pytest.raises(NumericalDegeneracyError):
        music_spectrum(Covariance(-np.eye(8), 4), ULA_8)
    with pytest.raises(InvalidArgumentError):
        sample_covariance(np.zeros((8, 0)))


def test_short_frame_logs_rank_warning(caplog):
    sample_covariance(np.ones((8, 3)))
    assert "rank deficient" in caplog.text


def test_dominance_ratio_separates_signal_from_noise():
    rng = np.random.default_rng(9)
    noise = (rng.standard_normal((8, 256)) + 1j * rng.standard_normal((8, 256))) / np.sqrt(2)
    assert dominance_ratio(sample_covariance(noise)) < 2.0

    signal = plane_wave(1.2, n_samples=256).samples
    assert dominance_ratio(sample_covariance(signal + noise)) > 5.0
    assert dominance_ratio(Covariance(np.zeros((8, 8)), 1)) == 0.0


def test_dump_spectrum(tmp_path):
    spectrum = music_spectrum(sample_covariance(plane_wave(1.0)), ULA_8, grid_step=np.radians(1))
    frame = pd.read_csv(dump_spectrum(spectrum, tmp_path / "spectrum.csv"))
    assert list(frame.columns) == ["azimuth_deg", "value"]
    assert len(frame) == 181
    assert frame["azimuth_deg"].iloc[-1] == pytest.approx(180.0)
