"""Run configuration, loadable from JSON or YAML.

Unknown keys are rejected so a typo cannot silently fall back to a default.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .gesture import FitConfig
from .pmi import TrainConfig

# The ten vowels analysed by default, as IPA labels from the US dictionary.
DEFAULT_VOWELS = ("i", "ɒ", "ɛ", "ə", "æ", "ɪ", "ɑ", "ʉ", "ʊ", "ɝ")

# Segment label -> analysed vowel. IPA labels map to themselves (see
# ``map_phone``); this table adds ARPAbet (stress digits are stripped first)
# and length-marked variants emitted by some dictionaries.
DEFAULT_PHONE_MAP = {
    "IY": "i", "IH": "ɪ", "EH": "ɛ", "AE": "æ", "AA": "ɑ", "AO": "ɒ",
    "AH": "ə", "UW": "ʉ", "UH": "ʊ", "ER": "ɝ",
    "iː": "i", "ɑː": "ɑ", "ʉː": "ʉ", "ɝː": "ɝ", "u": "ʉ", "uː": "ʉ",
}

MEASURES = ("us", "relative")
STATISTICS = ("mean", "T")


@dataclass
class PipelineConfig:
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    pca_scope: str = "per-speaker"      # or "global"
    pca_frames: str = "all"             # or "vowels"
    vowels: tuple = DEFAULT_VOWELS
    phone_map: dict = field(default_factory=lambda: dict(DEFAULT_PHONE_MAP))
    measures: tuple = MEASURES
    statistics: tuple = STATISTICS
    alpha: float = 0.05
    strong_r: float = 0.3
    min_speakers: int = 3
    workers: int = 1

    def __post_init__(self):
        self.vowels = tuple(self.vowels)
        self.measures = tuple(self.measures)
        self.statistics = tuple(self.statistics)
        if self.pca_scope not in ("per-speaker", "global"):
            raise ConfigError(f"pca_scope must be per-speaker or global, got {self.pca_scope!r}")
        if self.pca_frames not in ("all", "vowels"):
            raise ConfigError(f"pca_frames must be all or vowels, got {self.pca_frames!r}")
        if not self.measures or set(self.measures) - set(MEASURES):
            raise ConfigError(f"measures must be a non-empty subset of {MEASURES}")
        if not self.statistics or set(self.statistics) - set(STATISTICS):
            raise ConfigError(f"statistics must be a non-empty subset of {STATISTICS}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.min_speakers < 3:
            raise ConfigError("min_speakers must be >= 3")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def map_phone(self, label: str) -> str:
        if label in self.phone_map:
            return self.phone_map[label]
        stripped = label.rstrip("012")
        return self.phone_map.get(stripped, label)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["fit"]["rates"] = list(self.fit.rates)
        d["fit"]["onsets"] = list(self.fit.onsets)
        for key in ("vowels", "measures", "statistics"):
            d[key] = list(d[key])
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict) -> PipelineConfig:
    data = dict(data or {})
    if "train" in data:
        data["train"] = _build(TrainConfig, data["train"], "train")
    if "fit" in data:
        fit = dict(data["fit"]) if isinstance(data["fit"], dict) else data["fit"]
        data["fit"] = _build(FitConfig, fit, "fit")
    return _build(PipelineConfig, data, "config")


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: cannot parse: {exc}") from None
    return config_from_dict(data)
