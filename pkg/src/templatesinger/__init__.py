"""Template-conditioned singing voice synthesis, trained on speech only.

The package covers the full desk-scale pipeline: vocal feature extraction
(pitch, harmonicity, cepstral peak prominence, intensity, formants, octave),
a feature-conditioned sequence-to-sequence acoustic model with auxiliary
task heads and a Wasserstein critic, phased training, template-based
inference and objective evaluation.
"""

__version__ = "0.1.0"
