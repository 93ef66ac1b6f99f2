"""Linear-probe evaluation of frozen EEG embeddings with clinical metrics."""

__version__ = "0.1.0"
