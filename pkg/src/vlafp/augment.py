"""Distortion chain for positives and query simulation: TS -> BG -> IR."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve, lfilter

from .audio import Waveform
from .dsp import DEFAULT_HOP, DEFAULT_WINDOW, hann_window


@dataclass(frozen=True)
class AugmentConfig:
    enable_ts: bool = True
    enable_bg: bool = True
    enable_ir: bool = True
    ts_range: tuple[float, float] = (0.8, 1.2)
    snr_range_db: tuple[float, float] = (1.0, 10.0)
    bg_pool: tuple[Waveform, ...] = ()
    ir_pool: tuple[Waveform, ...] = ()
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.ts_range
        if not (0 < lo <= hi):
            raise ValueError(f"bad ts_range {self.ts_range}")
        if self.snr_range_db[0] > self.snr_range_db[1]:
            raise ValueError(f"bad snr_range_db {self.snr_range_db}")


def _istft_overlap_add(frames: np.ndarray, window_size: int, hop: int, length: int) -> np.ndarray:
    win = hann_window(window_size)
    n_frames = frames.shape[0]
    total = (n_frames - 1) * hop + window_size
    acc = np.zeros(total)
    norm = np.zeros(total)
    for i in range(n_frames):
        chunk = np.fft.irfft(frames[i], n=window_size)
        acc[i * hop : i * hop + window_size] += chunk * win
        norm[i * hop : i * hop + window_size] += win**2
    out = acc / np.maximum(norm, 1e-8)
    if out.shape[0] >= length:
        return out[:length]
    return np.concatenate([out, np.zeros(length - out.shape[0])])


def time_stretch(
    w: Waveform, factor: float, window_size: int = DEFAULT_WINDOW, hop: int = DEFAULT_HOP
) -> Waveform:
    """Phase-vocoder time stretch: factor > 1 speeds up, < 1 slows down.

    Pitch is preserved; output length is round(len(w) / factor).
    """
    if factor <= 0:
        raise ValueError(f"stretch factor must be positive, got {factor}")
    x = w.samples
    if x.shape[0] == 0:
        raise ValueError("empty input")
    target = max(1, round(x.shape[0] / factor))
    if factor == 1.0:
        return Waveform(x.copy(), w.sample_rate)

    pad = np.concatenate([x, np.zeros(window_size)])
    n = (pad.shape[0] - window_size) // hop + 1
    idx = np.arange(window_size)[None, :] + hop * np.arange(n)[:, None]
    spec = np.fft.rfft(pad[idx] * hann_window(window_size)[None, :], axis=1)

    steps = np.arange(0.0, n - 1, factor)
    omega = 2.0 * np.pi * hop * np.arange(spec.shape[1]) / window_size
    phase = np.angle(spec[0])
    out = np.empty((steps.shape[0], spec.shape[1]), dtype=np.complex128)
    for k, step in enumerate(steps):
        i = int(step)
        frac = step - i
        mag = (1.0 - frac) * np.abs(spec[i]) + frac * np.abs(spec[i + 1])
        out[k] = mag * np.exp(1j * phase)
        dphi = np.angle(spec[i + 1]) - np.angle(spec[i]) - omega
        dphi -= 2.0 * np.pi * np.round(dphi / (2.0 * np.pi))
        phase = phase + omega + dphi
    return Waveform(_istft_overlap_add(out, window_size, hop, target), w.sample_rate)


def _noise_excerpt(noise: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    if noise.shape[0] >= length:
        off = int(rng.integers(0, noise.shape[0] - length + 1))
        return noise[off : off + length]
    reps = int(np.ceil((length + noise.shape[0]) / noise.shape[0]))
    tiled = np.tile(noise, reps)
    off = int(rng.integers(0, noise.shape[0]))
    return tiled[off : off + length]


def mix_background(
    w: Waveform, noise: Waveform, snr_db: float, rng: np.random.Generator
) -> Waveform:
    """Add a noise excerpt scaled so signal/noise power hits snr_db exactly."""
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    excerpt = _noise_excerpt(noise.samples, len(w), rng)
    p_noise = float(np.mean(excerpt**2))
    if p_noise <= 0.0:
        raise ValueError("noise must be non-silent")
    p_signal = float(np.mean(w.samples**2))
    if p_signal <= 0.0:
        warnings.warn("silent signal: SNR undefined, returning noise excerpt")
        return Waveform(excerpt.copy(), w.sample_rate)
    scale = np.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0)))
    return Waveform(w.samples + scale * excerpt, w.sample_rate)


def convolve_ir(w: Waveform, ir: Waveform) -> Waveform:
    """Full linear convolution truncated to len(w), peak-matched to the input."""
    if len(ir) == 0:
        raise ValueError("empty impulse response")
    out = fftconvolve(w.samples, ir.samples)[: len(w)]
    peak_in = w.peak
    peak_out = float(np.max(np.abs(out))) if out.size else 0.0
    if peak_out > 0.0 and peak_in > 0.0:
        out = out * (peak_in / peak_out)
    return Waveform(out, w.sample_rate)


@dataclass(frozen=True)
class ChainDraws:
    """Parameters drawn for one pass through the chain (None = stage disabled)."""

    ts_factor: float | None = None
    bg_index: int | None = None
    snr_db: float | None = None
    ir_index: int | None = None


def augment_chain_with_draws(
    w: Waveform, cfg: AugmentConfig, rng: np.random.Generator
) -> tuple[Waveform, ChainDraws]:
    """Apply the enabled stages in order TS -> BG -> IR with draws from rng."""
    out = w
    factor = bg_index = snr = ir_index = None
    if cfg.enable_ts:
        factor = float(rng.uniform(*cfg.ts_range))
        out = time_stretch(out, factor)
    if cfg.enable_bg:
        if not cfg.bg_pool:
            raise ValueError("BG stage enabled but bg_pool is empty")
        bg_index = int(rng.integers(0, len(cfg.bg_pool)))
        snr = float(rng.uniform(*cfg.snr_range_db))
        out = mix_background(out, cfg.bg_pool[bg_index], snr, rng)
    if cfg.enable_ir:
        if not cfg.ir_pool:
            raise ValueError("IR stage enabled but ir_pool is empty")
        ir_index = int(rng.integers(0, len(cfg.ir_pool)))
        out = convolve_ir(out, cfg.ir_pool[ir_index])
    return out, ChainDraws(factor, bg_index, snr, ir_index)


def augment_chain(w: Waveform, cfg: AugmentConfig, rng: np.random.Generator) -> Waveform:
    out, _ = augment_chain_with_draws(w, cfg, rng)
    return out


def make_noise_pool(
    n: int, duration_s: float, sample_rate: int, seed: int
) -> tuple[Waveform, ...]:
    """Synthetic colored-noise pool: white noise shaped by a random one-pole filter."""
    rng = np.random.default_rng(seed)
    pool = []
    length = int(duration_s * sample_rate)
    for _ in range(n):
        white = rng.standard_normal(length)
        alpha = float(rng.uniform(0.0, 0.95))
        shaped = lfilter([1.0 - alpha], [1.0, -alpha], white)
        shaped /= max(np.max(np.abs(shaped)), 1e-12)
        pool.append(Waveform(0.5 * shaped, sample_rate))
    return tuple(pool)


def make_ir_pool(
    n: int, duration_s: float, sample_rate: int, seed: int
) -> tuple[Waveform, ...]:
    """Synthetic impulse responses: direct path + exponentially decaying tail."""
    rng = np.random.default_rng(seed)
    pool = []
    length = max(2, int(duration_s * sample_rate))
    t = np.arange(length)
    for _ in range(n):
        decay = float(rng.uniform(20.0, 200.0))
        tail = rng.standard_normal(length) * np.exp(-t / decay)
        tail[0] = 1.0
        pool.append(Waveform(tail / np.max(np.abs(tail)), sample_rate))
    return tuple(pool)
