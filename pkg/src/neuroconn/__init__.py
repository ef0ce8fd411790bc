"""neuroconn: phase-connectivity EEG decoding toolkit.

Pipeline: recordings -> filtering/epoching -> band-power and PLV/PLI
connectivity features -> compact convolutional decoders -> experiment grid
with paired statistics.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .signal_core import (
    CANONICAL_BANDS,
    EpochSet,
    FrequencyBand,
    Marker,
    Paradigm,
    Recording,
    SpeechWordVocabulary,
    load_recording,
    save_recording,
    segment_epochs,
)

__all__ = [
    "BACKEND",
    "CANONICAL_BANDS",
    "EpochSet",
    "FrequencyBand",
    "Marker",
    "Paradigm",
    "Recording",
    "SpeechWordVocabulary",
    "load_recording",
    "save_recording",
    "segment_epochs",
    "__version__",
]
