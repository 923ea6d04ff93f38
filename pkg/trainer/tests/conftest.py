import subprocess
import sys

import pytest
import torch

torch.set_num_threads(2)


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """Small raw + stft containers produced by the dataset CLI."""
    d = tmp_path_factory.mktemp("data")
    raw = d / "train_raw.ofdg"
    spec = '{"symbol_len": 128, "alloc_class": "small", "mod_order": 4, "target_evm_db": -25.0}'
    subprocess.run(
        [sys.executable, "-m", "ofdmgen.cli", "generate", "--spec", spec,
         "--count", "64", "--seed", "5", "--out", str(raw)],
        check=True, capture_output=True,
    )
    stft = d / "train_stft.ofdg"
    subprocess.run(
        [sys.executable, "-m", "ofdmgen.cli", "transform", "--in", str(raw),
         "--out", str(stft), "--to", "stft", "--scaling", "featurewise"],
        check=True, capture_output=True,
    )
    return d
