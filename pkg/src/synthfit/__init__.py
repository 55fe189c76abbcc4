"""synthfit: invert a small FM synthesizer from audio.

Renders patches from a quantized 23-parameter space, extracts spectrogram
or bag-of-words features, trains small convolutional / fully-connected
models to predict the patch back from sound, and reports ranking and
spectrogram-distance metrics.  Ships a CLI and an HTTP service.
"""

__version__ = "0.1.0"
