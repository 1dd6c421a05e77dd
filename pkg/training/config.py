# config.py
import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional, Union, get_args, get_origin

# Sentence/word budgets per dataset (L_E, L_C).
PROFILES = {
    "cnndm": {"L_E": 3, "L_C": 58},
    "newsroom": {"L_E": 2, "L_C": 26},
    "xsum": {"L_E": 2, "L_C": 24},
}

SCHEDULES = ("joint", "staged")


def _coerce(name, value, annotation):
    """Check a config file value against its field type; ints are accepted for floats."""
    allowed = get_args(annotation) if get_origin(annotation) is Union else (annotation,)
    if value is None:
        if type(None) in allowed:
            return None
        raise ValueError(f"{name} must not be null")
    expected = next(t for t in allowed if t is not type(None))
    if expected is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, expected) and not (expected is int and isinstance(value, bool)):
        return value
    raise ValueError(f"{name} must be {expected.__name__}, got {type(value).__name__} {value!r}")


def get_profile(profile):
    """
    Returns the extraction/compression budgets of a dataset profile.

    Parameters:
        profile (str): "cnndm", "newsroom" or "xsum".

    Returns:
        dict: {"L_E": int, "L_C": int}
    """
    profile = profile.lower()
    if profile not in PROFILES:
        raise ValueError(f"Profile must be one of {', '.join(PROFILES)}.")
    return dict(PROFILES[profile])


@dataclass(frozen=True)
class TrainConfig:
    train_path: Optional[str] = None
    out_dir: str = "runs/default"
    embeddings_path: Optional[str] = None
    stopwords_path: Optional[str] = None
    lm: str = "ngram"
    lm_order: int = 3
    learning_rate: float = 0.01
    batch_size: int = 3
    epochs: int = 1
    weight_decay: float = 0.01
    grad_clip_norm: float = 2.0
    L_E: int = 3
    L_C: int = 58
    w_cov: float = 1.0
    w_flu: float = 2.0
    seed: int = 0
    checkpoint_every: int = 0
    hidden_size: int = 150
    num_layers: int = 3
    num_heads: int = 4
    d_emb: int = 300
    M_max: int = 40
    N_max: int = 50
    min_count: int = 1
    dropout: float = 0.0
    schedule: str = "joint"
    max_documents: Optional[int] = None

    @classmethod
    def from_file(cls, path, base=None, **overrides):
        """
        Load a flat JSON config whose keys mirror the dataclass fields.
        File values replace those of `base` (defaults when None); explicit
        (non-None) overrides take precedence over the file.
        """
        with open(path, encoding="utf-8") as f:
            values = json.load(f)
        if not isinstance(values, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValueError(f"{path}: unknown config keys: {', '.join(unknown)}")
        types = {f.name: f.type for f in fields(cls)}
        values = {k: _coerce(k, v, types[k]) for k, v in values.items()}
        return replace(base or cls(), **values).with_overrides(**overrides)

    def with_overrides(self, **overrides):
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def with_profile(self, profile):
        return replace(self, **get_profile(profile))

    def validate(self):
        positive = ("learning_rate", "batch_size", "epochs", "grad_clip_norm", "L_E", "L_C", "lm_order",
                    "hidden_size", "num_layers", "num_heads", "d_emb", "M_max", "N_max", "min_count")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("weight_decay", "w_cov", "w_flu", "checkpoint_every", "dropout"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if (2 * self.hidden_size) % self.num_heads:
            raise ValueError("num_heads must divide 2 * hidden_size")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        if self.lm not in ("ngram", "gpt2"):
            raise ValueError("lm must be 'ngram' or 'gpt2'")
        if self.max_documents is not None and self.max_documents < 1:
            raise ValueError("max_documents must be >= 1")
        return self

    def to_dict(self):
        return asdict(self)
