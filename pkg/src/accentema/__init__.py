"""Accent strength from PMI-weighted phoneme distance, related to articulatory features."""

__version__ = "0.1.0"

from .align import GAP, Alignment, PhonemeSeq, WeightTable, align, normalized_distance  # noqa: E402
from .gesture import FitConfig, FitWindow, GestureFit, GestureParams, fit_gesture, objective, simulate  # noqa: E402
from .pmi import (AccentScore, PmiTable, TrainConfig, estimate_pmi, pmi_to_weights,  # noqa: E402
                  speaker_accent_score, train_weights)
from .reparam import EmaTrack, ReparamTrack, TonguePcaBasis, fit_tongue_pca, reparameterize, segment_mean  # noqa: E402
from .stats import RegressionResult, SummaryCell, linreg, summarize, t_sf  # noqa: E402
