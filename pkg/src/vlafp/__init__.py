"""Variable-length audio fingerprinting toolkit."""

__version__ = "0.1.0"

from .audio import Waveform, load_audio, read_wav, write_wav
from .dsp import MelConfig, MelSpectrogram, StftFrames, mel_spectrogram, spectral_entropy, stft
from .model import Fingerprint, ModelConfig, PackedBatch, fingerprint, init_parameters
from .segmentation import Segment, SegmenterConfig, segment, segment_fixed
from .index import FingerprintIndex, IndexEntry
from .training import TrainConfig, train
from .synth import SynthSpec, generate

__all__ = [
    "Waveform",
    "load_audio",
    "read_wav",
    "write_wav",
    "MelConfig",
    "MelSpectrogram",
    "StftFrames",
    "mel_spectrogram",
    "spectral_entropy",
    "stft",
    "Fingerprint",
    "ModelConfig",
    "PackedBatch",
    "fingerprint",
    "init_parameters",
    "Segment",
    "SegmenterConfig",
    "segment",
    "segment_fixed",
    "FingerprintIndex",
    "IndexEntry",
    "TrainConfig",
    "train",
    "SynthSpec",
    "generate",
]
