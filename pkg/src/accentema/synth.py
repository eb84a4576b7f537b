"""Synthetic corpora with a known accent-articulation link.

Each speaker has a latent accent value ``theta`` in [0, 1]. Of the word
tokens a speaker utters whose US and UK pronunciations differ, a randomly
chosen ``round(theta * m)`` are recognised with the UK pronunciation and the
rest with the US one; the phone strings then pass through a small
recognition-noise channel.

Articulator tracks are chained critically damped movements between per-phone
targets. Targets combine a shared phone target, a per-speaker offset common
to all phones, a per-speaker per-phone offset and per-segment jitter. For the
planted vowel, one raw channel's target moves by ``planted_slope * theta``.
Everything else is independent of ``theta``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .reparam import EMA_CHANNELS

# (word, US pronunciation, UK pronunciation)
LEXICON = (
    ("car", "k ɑ ɹ", "k ɑː"),
    ("bird", "b ɝ d", "b ɜː d"),
    ("nurse", "n ɝ s", "n ɜː s"),
    ("worker", "w ɝ k ɚ", "w ɜː k ə"),
    ("lot", "l ɑ t", "l ɒ t"),
    ("dance", "d æ n s", "d ɑː n s"),
    ("fast", "f æ s t", "f ɑː s t"),
    ("better", "b ɛ t ɚ", "b ɛ t ə"),
    ("water", "w ɑ t ɚ", "w ɔː t ə"),
    ("see", "s i", "s iː"),
    ("food", "f ʉ d", "f uː d"),
    ("cloth", "k l ɒ θ", "k l ɒ θ"),
    ("sit", "s ɪ t", "s ɪ t"),
    ("put", "p ʊ t", "p ʊ t"),
    ("about", "ə b aʊ t", "ə b aʊ t"),
    ("cat", "k æ t", "k æ t"),
)

VOWEL_LIKE = frozenset("i ɒ ɛ ə æ ɪ ɑ ʉ ʊ ɝ ɚ aʊ ɑː ɜː ɔː iː uː".split())

# resting sensor positions (x, y) for UL, LL, LI, TT, TB, TD
_REST = np.array([0.5, 1.0, 0.5, -1.0, 0.3, -1.5, 1.5, 0.0, 0.0, 0.5, -1.0, 0.5])
# per-phone target spread per channel; tongue sensors vary more in x than y
_SPREAD = np.array([0.08, 0.10, 0.08, 0.30, 0.05, 0.25, 0.60, 0.10, 0.55, 0.10, 0.50, 0.10])


@dataclass
class SynthConfig:
    n_speakers: int = 20
    n_utts: int = 8
    words_per_utt: int = 5
    rate: float = 50.0
    stiffness_rate: float = 35.0      # sqrt(k) of the generating movements, 1/s
    planted_vowel: str = "ɝ"
    planted_channel: str = "TDy"
    planted_slope: float = -0.5
    segment_noise: float = 0.05       # sd of per-segment target jitter
    speaker_noise: float = 0.02       # sd of per-speaker offsets shared by all phones
    idiolect_noise: float = 0.08      # sd of per-speaker, per-phone target offsets
    sensor_noise: float = 0.01        # sd of per-frame measurement noise
    sub_rate: float = 0.04            # recognition substitution probability
    del_rate: float = 0.02            # recognition deletion probability
    thetas: tuple = None              # default: evenly spaced over [0, 1]
    seed: int = 0


@dataclass
class SynthCorpus:
    manifest_path: Path
    thetas: dict = field(default_factory=dict)


_TONGUE_X = [EMA_CHANNELS.index(c) for c in ("TTx", "TBx", "TDx")]


def _phone_targets(phones, rng, central=()):
    """Random per-phone targets; ``central`` phones sit mid-range in tongue x."""
    out = {p: _REST + _SPREAD * rng.standard_normal(12) for p in sorted(phones)}
    for p in central:
        out[p][_TONGUE_X] = _REST[_TONGUE_X]
    return out


def _chain(times, onsets, targets, x_init, omega):
    """Critically damped response to a piecewise-constant target, evaluated exactly."""
    out = np.empty((len(times), len(x_init)))
    x = np.array(x_init, dtype=float)
    v = np.zeros_like(x)
    piece = np.searchsorted(onsets, times, side="right") - 1
    for i, t_on in enumerate(onsets):
        T = targets[i]
        c1 = x - T
        c2 = v + omega * c1
        sel = piece == i
        if sel.any():
            tau = (times[sel] - t_on)[:, None]
            e = np.exp(-omega * tau)
            out[sel] = T + (c1 + c2 * tau) * e
        if i + 1 < len(onsets):
            tau = onsets[i + 1] - t_on
            e = np.exp(-omega * tau)
            x, v = T + (c1 + c2 * tau) * e, (c2 - omega * (c1 + c2 * tau)) * e
    return out


def generate(outdir, cfg: SynthConfig = SynthConfig()) -> SynthCorpus:
    """Write manifest.json, phones.tsv, segments.tsv and ema/*.tsv under ``outdir``."""
    outdir = Path(outdir)
    (outdir / "ema").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    thetas = (np.linspace(0.0, 1.0, cfg.n_speakers) if cfg.thetas is None
              else np.asarray(cfg.thetas, dtype=float))

    inventory = sorted({p for _, us, uk in LEXICON for p in (us + " " + uk).split()})
    # a central planted vowel keeps its raising shift from tilting the
    # per-speaker tongue PCA axes, which would leak into other cells
    targets = _phone_targets(inventory, rng, central=(cfg.planted_vowel,))
    planted_col = EMA_CHANNELS.index(cfg.planted_channel)

    phones_rows = ["utterance_id\tsource\tphones"]
    seg_rows = ["utterance_id\tspeaker_id\tphone\tword\tt_start\tt_end"]
    speakers, utts = [], []
    for s, theta in enumerate(thetas):
        spk = f"s{s:02d}"
        speakers.append({"id": spk, "accent": "UK" if theta >= 0.5 else "US"})
        anatomy = cfg.speaker_noise * rng.standard_normal(12)
        idiolect = {p: cfg.idiolect_noise * rng.standard_normal(12) for p in inventory}
        script = [[LEXICON[i] for i in rng.integers(0, len(LEXICON), cfg.words_per_utt)]
                  for _ in range(cfg.n_utts)]
        differing = [(u, j) for u, words in enumerate(script)
                     for j, (_, us, uk) in enumerate(words) if us != uk]
        n_uk = int(round(theta * len(differing)))
        uk_tokens = {differing[i] for i in rng.permutation(len(differing))[:n_uk]}
        for u, words in enumerate(script):
            uid = f"{spk}_{u:03d}"
            ref_us, ref_uk, pred = [], [], []
            for j, (_, us, uk) in enumerate(words):
                ref_us += us.split()
                ref_uk += uk.split()
                pred += (uk if (u, j) in uk_tokens else us).split()
            noisy = []
            for p in pred:
                r = rng.random()
                if r < cfg.del_rate:
                    continue
                if r < cfg.del_rate + cfg.sub_rate:
                    p = inventory[rng.integers(len(inventory))]
                noisy.append(p)
            phones_rows += [f"{uid}\tpred\t{' '.join(noisy)}",
                            f"{uid}\tref_us\t{' '.join(ref_us)}",
                            f"{uid}\tref_uk\t{' '.join(ref_uk)}"]

            # timeline: leading silence, US-dictionary phones, trailing silence
            t = 0.15
            onsets, tgts = [0.0], [_REST + anatomy]
            for word, us, _ in words:
                for p in us.split():
                    dur = rng.uniform(0.10, 0.18) if p in VOWEL_LIKE else rng.uniform(0.05, 0.09)
                    tgt = targets[p] + anatomy + idiolect[p] + cfg.segment_noise * rng.standard_normal(12)
                    if p == cfg.planted_vowel:
                        tgt[planted_col] += cfg.planted_slope * theta
                    onsets.append(t)
                    tgts.append(tgt)
                    seg_rows.append(f"{uid}\t{spk}\t{p}\t{word}\t{t:.4f}\t{t + dur:.4f}")
                    t = round(t + dur, 4)
            onsets.append(t)
            tgts.append(_REST + anatomy)
            total = t + 0.15
            times = (np.arange(int(total * cfg.rate)) + 0.5) / cfg.rate
            frames = _chain(times, np.array(onsets), tgts, _REST + anatomy, cfg.stiffness_rate)
            frames += cfg.sensor_noise * rng.standard_normal(frames.shape)
            lines = ["t\t" + "\t".join(EMA_CHANNELS)]
            lines += ["\t".join([f"{tt:.4f}"] + [f"{v:.6f}" for v in row]) for tt, row in zip(times, frames)]
            (outdir / "ema" / f"{uid}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
            utts.append({"id": uid, "speaker": spk, "ema": f"ema/{uid}.tsv"})

    (outdir / "phones.tsv").write_text("\n".join(phones_rows) + "\n", encoding="utf-8")
    (outdir / "segments.tsv").write_text("\n".join(seg_rows) + "\n", encoding="utf-8")
    manifest = {"schema_version": 1, "ema_rate": cfg.rate, "phones": "phones.tsv",
                "segments": "segments.tsv", "speakers": speakers, "utterances": utts}
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    truth = {sp["id"]: float(th) for sp, th in zip(speakers, thetas)}
    (outdir / "truth.json").write_text(json.dumps({
        "theta": truth, "planted_vowel": cfg.planted_vowel,
        "planted_channel": cfg.planted_channel, "planted_slope": cfg.planted_slope,
    }, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return SynthCorpus(path, truth)
