import numpy as np
import pytest
import soundfile as sf
from scipy import signal
from utils import noise, sine

from core.constants import LOG_FLOOR, SAMPLE_RATE
from core.dsp import (
    AudioClip,
    AudioError,
    apply_mask_and_invert,
    frame_count,
    logmel,
    mel_filterbank,
    read_wav,
    resample,
    snr_db,
    stft,
    write_wav,
)

INTERIOR = slice(1024, -1024)


class TestAudioClip:
    @pytest.mark.parametrize(
        "samples, sample_rate",
        [(np.zeros((2, 10)), SAMPLE_RATE), (np.zeros(10), 0), (np.array([0.0, np.nan]), SAMPLE_RATE)],
    )
    def test_invalid(self, samples, sample_rate):
        with pytest.raises(AudioError):
            AudioClip(samples, sample_rate)

    def test_duration(self):
        assert sine(seconds=2.5).duration == pytest.approx(2.5)


class TestFeatures:
    @pytest.mark.parametrize("n_samples, expected", [(16000, 101), (160000, 1001), (159, 1)])
    def test_frame_count(self, n_samples, expected):
        assert frame_count(n_samples) == expected

    def test_logmel_shape(self):
        features = logmel(sine(seconds=10.0))
        assert features.data.shape == (1001, 229)
        assert features.kind == "logmel"
        assert features.n_samples == 160000

    def test_stft_shape(self):
        features = stft(sine())
        assert features.data.shape == (101, 513)
        assert np.iscomplexobj(features.data)

    def test_silence_hits_the_floor(self):
        features = logmel(AudioClip(np.zeros(SAMPLE_RATE), SAMPLE_RATE))
        assert np.allclose(features.data, np.log(LOG_FLOOR))

    def test_filterbank(self):
        basis = mel_filterbank()
        assert basis.shape == (229, 1025)
        assert basis.min() >= 0
        assert not basis.flags.writeable
        assert mel_filterbank() is basis

    def test_dc_lands_in_bin_zero(self):
        features = stft(AudioClip(np.full(SAMPLE_RATE, 0.5), SAMPLE_RATE))
        magnitude = features.magnitude()[10:-10]
        assert np.all(magnitude.argmax(axis=1) == 0)

    def test_parseval_per_frame(self):
        clip = noise()
        spectrum = stft(clip).data
        window = signal.get_window("hann", 1024)
        for t in (20, 50, 80):
            segment = clip.samples[t * 160 - 512 : t * 160 + 512] * window
            power = np.abs(spectrum[t]) ** 2
            full_spectrum_energy = power[0] + power[-1] + 2 * power[1:-1].sum()
            assert full_spectrum_energy == pytest.approx(1024 * np.sum(segment**2), rel=1e-8)

    def test_gain_shifts_log_mel(self):
        clip = noise()
        base = logmel(clip).data
        louder = logmel(AudioClip(2 * clip.samples, SAMPLE_RATE)).data
        defined = base > -10
        assert defined.mean() > 0.5
        assert np.allclose(louder[defined], base[defined] + np.log(4), atol=1e-4)

    def test_wrong_sample_rate(self):
        with pytest.raises(AudioError, match="resample first"):
            logmel(sine(sample_rate=8000))
        with pytest.raises(AudioError):
            stft(sine(sample_rate=44100))

    def test_empty_clip(self):
        with pytest.raises(AudioError):
            stft(AudioClip(np.zeros(0), SAMPLE_RATE))


class TestResample:
    def test_identity(self):
        clip = noise()
        out = resample(clip, SAMPLE_RATE)
        assert np.array_equal(out.samples, clip.samples)
        assert out.samples is not clip.samples

    @pytest.mark.parametrize("source, target, n_in, n_out", [(8000, 16000, 8000, 16000), (16000, 44100, 1000, 2756)])
    def test_length(self, source, target, n_in, n_out):
        out = resample(AudioClip(np.zeros(n_in), source), target)
        assert len(out) == n_out
        assert out.sample_rate == target

    def test_downsampled_sine(self):
        out = resample(sine(440.0, sample_rate=32000), SAMPLE_RATE)
        expected = sine(440.0, sample_rate=SAMPLE_RATE).samples
        assert snr_db(expected[1600:-1600], out.samples[1600:-1600]) >= 60

    def test_invalid(self):
        with pytest.raises(AudioError):
            resample(sine(), 0)
        with pytest.raises(AudioError):
            resample(AudioClip(np.zeros(0), 8000))


class TestMaskInversion:
    def test_unit_mask_reconstructs(self):
        clip = sine(seconds=2.0)
        spectrum = stft(clip)
        out = apply_mask_and_invert(spectrum, np.ones(spectrum.data.shape), len(clip))
        assert len(out) == len(clip)
        assert snr_db(clip.samples[INTERIOR], out.samples[INTERIOR]) >= 60

    def test_zero_mask_is_silent(self):
        clip = noise()
        spectrum = stft(clip)
        out = apply_mask_and_invert(spectrum, np.zeros(spectrum.data.shape), len(clip))
        assert np.allclose(out.samples, 0.0)

    def test_half_mask_halves(self):
        clip = noise()
        spectrum = stft(clip)
        full = apply_mask_and_invert(spectrum, np.ones(spectrum.data.shape), len(clip))
        half = apply_mask_and_invert(spectrum, np.full(spectrum.data.shape, 0.5), len(clip))
        assert np.allclose(half.samples, 0.5 * full.samples, atol=1e-9)

    def test_complementary_masks_sum_to_the_mix(self):
        clip = noise(seed=3)
        spectrum = stft(clip)
        mask = np.random.default_rng(3).random(spectrum.data.shape)
        a = apply_mask_and_invert(spectrum, mask, len(clip))
        b = apply_mask_and_invert(spectrum, 1 - mask, len(clip))
        assert snr_db(clip.samples[INTERIOR], (a.samples + b.samples)[INTERIOR]) >= 60

    def test_invalid(self):
        clip = noise()
        spectrum = stft(clip)
        with pytest.raises(AudioError, match="does not match"):
            apply_mask_and_invert(spectrum, np.ones((10, 513)), len(clip))
        with pytest.raises(AudioError, match="lie in"):
            apply_mask_and_invert(spectrum, np.full(spectrum.data.shape, 1.5), len(clip))
        with pytest.raises(AudioError, match="STFT"):
            apply_mask_and_invert(logmel(clip), np.ones((101, 229)), len(clip))
        with pytest.raises(AudioError):
            apply_mask_and_invert(spectrum, np.ones(spectrum.data.shape), 0)


class TestWav:
    def test_float_round_trip(self, tmp_path):
        clip = sine()
        write_wav(tmp_path / "a.wav", clip)
        loaded = read_wav(tmp_path / "a.wav")
        assert loaded.sample_rate == SAMPLE_RATE
        assert np.allclose(loaded.samples, clip.samples, atol=1e-7)

    def test_pcm_round_trip(self, tmp_path):
        clip = sine()
        write_wav(tmp_path / "a.wav", clip, subtype="PCM_16")
        assert np.allclose(read_wav(tmp_path / "a.wav").samples, clip.samples, atol=1 / 32768)

    def test_stereo_is_downmixed(self, tmp_path):
        stereo = np.stack([np.full(100, 0.5), np.full(100, -0.25)], axis=1)
        sf.write(str(tmp_path / "s.wav"), stereo, 8000, subtype="FLOAT")
        clip = read_wav(tmp_path / "s.wav")
        assert clip.sample_rate == 8000
        assert np.allclose(clip.samples, 0.125)

    def test_missing_file(self, tmp_path):
        with pytest.raises(AudioError):
            read_wav(tmp_path / "missing.wav")
