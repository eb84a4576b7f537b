"""Reparameterise 12-channel fleshpoint tracks into lip, jaw and tongue features.

Raw channel order is (ULx, ULy, LLx, LLy, LIx, LIy, TTx, TTy, TBx, TBy, TDx, TDy).
Derived channel order is (LA, LP, JAW, TTA, TTR, TBA, TBR, TDA, TDR).
"""

import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from .errors import EmptySegment, RankDeficient, WidenedSegment

EMA_CHANNELS = ("ULx", "ULy", "LLx", "LLy", "LIx", "LIy",
                "TTx", "TTy", "TBx", "TBy", "TDx", "TDy")
FEATURES = ("LA", "LP", "JAW", "TTA", "TTR", "TBA", "TBR", "TDA", "TDR")
TONGUE_SENSORS = ("TT", "TB", "TD")
_SENSOR_COLS = {"UL": 0, "LL": 2, "LI": 4, "TT": 6, "TB": 8, "TD": 10}


@dataclass
class EmaTrack:
    times: np.ndarray     # frame-centre times, seconds
    frames: np.ndarray    # (n, 12)
    rate: float = 50.0
    speaker_id: str = ""
    utterance_id: str = ""

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.ndim != 2 or self.frames.shape[1] != 12:
            raise ValueError(f"EMA frames must be (n, 12), got {self.frames.shape}")
        if self.times is None:
            self.times = np.arange(len(self.frames)) / self.rate
        self.times = np.asarray(self.times, dtype=float)
        if self.rate <= 0:
            raise ValueError("rate must be positive")

    def sensor(self, name: str) -> np.ndarray:
        c = _SENSOR_COLS[name]
        return self.frames[:, c:c + 2]


@dataclass
class ReparamTrack:
    times: np.ndarray
    channels: np.ndarray  # (n, 9)
    rate: float = 50.0
    speaker_id: str = ""
    utterance_id: str = ""

    def feature(self, name: str) -> np.ndarray:
        return self.channels[:, FEATURES.index(name)]


@dataclass(frozen=True)
class SensorBasis:
    mean: np.ndarray        # (2,)
    A: np.ndarray           # unit vector, advancement
    R: np.ndarray           # unit vector, raising
    explained: tuple        # variance along (A, R)


@dataclass(frozen=True)
class TonguePcaBasis:
    sensors: Dict[str, SensorBasis]

    def __getitem__(self, name):
        return self.sensors[name]

    def to_dict(self):
        return {
            s: {"mean": b.mean.tolist(), "A": b.A.tolist(), "R": b.R.tolist(),
                "explained": list(b.explained)}
            for s, b in self.sensors.items()
        }


class _Moments:
    """Mergeable count / mean / scatter for 2-D points (Chan et al. update)."""

    def __init__(self):
        self.n = 0
        self.mean = np.zeros(2)
        self.scatter = np.zeros((2, 2))

    def add(self, pts: np.ndarray):
        if len(pts) == 0:
            return
        m = pts.mean(axis=0)
        d = pts - m
        self.merge(len(pts), m, d.T @ d)

    def merge(self, n, mean, scatter):
        if n == 0:
            return
        tot = self.n + n
        delta = mean - self.mean
        self.scatter = self.scatter + scatter + np.outer(delta, delta) * (self.n * n / tot)
        self.mean = self.mean + delta * (n / tot)
        self.n = tot


def orient_components(vecs: np.ndarray, vals: np.ndarray):
    """Pick (A, R) from the two eigenvectors (columns of ``vecs``).

    A is the eigenvector with the larger |cosine| to +x; both are sign-flipped
    so A points anterior (+x) and R superior (+y).
    """
    v0, v1 = vecs[:, 0], vecs[:, 1]
    if abs(v0[0]) >= abs(v1[0]):
        a, r, va, vr = v0, v1, vals[0], vals[1]
    else:
        a, r, va, vr = v1, v0, vals[1], vals[0]
    a = a / np.linalg.norm(a)
    r = r / np.linalg.norm(r)
    if a[0] < 0:
        a = -a
    if r[1] < 0:
        r = -r
    return a, r, (float(va), float(vr))


def _basis_from_moments(mom: _Moments, sensor: str) -> SensorBasis:
    if mom.n < 2:
        raise RankDeficient(f"{sensor}: need at least 2 frames for PCA, got {mom.n}")
    cov = mom.scatter / (mom.n - 1)
    tr = float(np.trace(cov))
    scale = max(float(np.max(np.abs(mom.mean))), 1.0)
    if not tr > 1e-24 * scale * scale:
        raise RankDeficient(f"{sensor}: covariance is singular (all frames identical)")
    vals, vecs = np.linalg.eigh(cov)
    a, r, explained = orient_components(vecs, vals)
    return SensorBasis(mom.mean.copy(), a, r, explained)


def fit_tongue_pca(tracks: Iterable[EmaTrack], masks: Optional[Sequence] = None) -> TonguePcaBasis:
    """Fit one A/R basis per tongue sensor over all given tracks.

    ``masks`` optionally selects frames per track (e.g. vowel frames only).
    """
    moms = {s: _Moments() for s in TONGUE_SENSORS}
    for i, tr in enumerate(tracks):
        sel = slice(None) if masks is None else np.asarray(masks[i], dtype=bool)
        for s in TONGUE_SENSORS:
            moms[s].add(tr.sensor(s)[sel])
    return TonguePcaBasis({s: _basis_from_moments(moms[s], s) for s in TONGUE_SENSORS})


def fit_bases(tracks: Sequence[EmaTrack], scope: str = "per-speaker", masks=None) -> Dict[str, TonguePcaBasis]:
    """Map speaker id -> basis. With ``scope='global'`` every speaker shares one."""
    tracks = list(tracks)
    masks = None if masks is None else list(masks)
    speakers = sorted({t.speaker_id for t in tracks})
    if scope == "global":
        basis = fit_tongue_pca(tracks, masks)
        return {s: basis for s in speakers}
    if scope != "per-speaker":
        raise ValueError(f"unknown PCA scope {scope!r}")
    out = {}
    for spk in speakers:
        idx = [i for i, t in enumerate(tracks) if t.speaker_id == spk]
        sub_masks = None if masks is None else [masks[i] for i in idx]
        try:
            out[spk] = fit_tongue_pca([tracks[i] for i in idx], sub_masks)
        except RankDeficient as exc:
            raise RankDeficient(f"speaker {spk}: {exc}") from exc
    return out


def reparameterize(track: EmaTrack, basis: TonguePcaBasis) -> ReparamTrack:
    f = track.frames
    out = np.empty((len(f), 9))
    out[:, 0] = np.hypot(f[:, 0] - f[:, 2], f[:, 1] - f[:, 3])
    out[:, 1] = (f[:, 0] + f[:, 2]) / 2
    out[:, 2] = f[:, 5]
    for i, s in enumerate(TONGUE_SENSORS):
        b = basis[s]
        centred = track.sensor(s) - b.mean
        out[:, 3 + 2 * i] = centred @ b.A
        out[:, 4 + 2 * i] = centred @ b.R
    return ReparamTrack(track.times.copy(), out, track.rate, track.speaker_id, track.utterance_id)


def segment_frames(times: np.ndarray, t_start: float, t_end: float) -> np.ndarray:
    return (times >= t_start) & (times < t_end)


def segment_mean(track: ReparamTrack, t_start: float, t_end: float, widen: bool = False) -> np.ndarray:
    """Per-channel mean over frames whose centre lies in [t_start, t_end).

    With ``widen``, a segment holding no frame centre falls back to the frame
    nearest its midpoint, provided the segment overlaps the track at all.
    """
    sel = segment_frames(track.times, t_start, t_end)
    if sel.any():
        return track.channels[sel].mean(axis=0)
    if widen and len(track.times):
        half = 0.5 / track.rate
        if t_end > track.times[0] - half and t_start < track.times[-1] + half:
            mid = 0.5 * (t_start + t_end)
            k = int(np.argmin(np.abs(track.times - mid)))
            warnings.warn(
                f"segment [{t_start}, {t_end}) in {track.utterance_id!r} holds no frame; "
                f"using frame at t={track.times[k]:.4f}", WidenedSegment, stacklevel=2)
            return track.channels[k].copy()
    raise EmptySegment(f"no frame in [{t_start}, {t_end}) of {track.utterance_id!r}")

