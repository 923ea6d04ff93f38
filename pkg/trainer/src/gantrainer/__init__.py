"""Adversarial waveform-model training against OFDM dataset containers."""

from .data import Scaling, TrainingData, load_training_data
from .losses import gradient_penalty, wgan_gp_loss
from .models import GanPair, build, build_psk_gan, build_stft_gan, build_wavegan, latent_batch
from .training import TrainConfig, load_checkpoint, sample_to_container, sample_waveforms, train

__all__ = [
    "GanPair",
    "Scaling",
    "TrainConfig",
    "TrainingData",
    "build",
    "build_psk_gan",
    "build_stft_gan",
    "build_wavegan",
    "gradient_penalty",
    "latent_batch",
    "load_checkpoint",
    "load_training_data",
    "sample_to_container",
    "sample_waveforms",
    "train",
    "wgan_gp_loss",
]

__version__ = "0.1.0"
