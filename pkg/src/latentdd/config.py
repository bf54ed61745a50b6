"""Plain-text ``key = value`` run configuration."""
import hashlib
from dataclasses import dataclass, fields, replace

from .errors import ConfigError
from .mlp import PRESETS

METHODS = ("pinv", "complement", "pca", "mlp", "domain-mlp")
METHOD_GROUPS = {"all": METHODS, "interp-only": ("pinv", "complement", "pca")}


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    case: int = 1
    n_train: int = 1000
    n_test: int = 200
    seed_train: int = 0
    seed_test: int = 1
    M: int = 1024
    k: float = 90.0
    target_dim: int = 1
    evr_floor: float = 0.9
    fallback_drop: int = 1
    radius_factor: float = 3.0
    gamma: float = 4.0
    gammas: tuple = (1.0, 1.5, 2.0, 3.0, 4.0, 14.0)
    min_points_per_domain: int = 100
    inverse_mode: str = "pinv"
    k_nn: int = 1
    metric: str = "relative_l2"
    methods: str = "all"
    mlp_preset: str = "desk"
    mlp_epochs: int = -1
    mlp_seed: int = 0
    out_dir: str = "run"

    def __post_init__(self):
        checks = [
            (self.case in (1, 2), "case must be 1 or 2"),
            (self.n_train >= 3, "n_train must be >= 3"),
            (self.n_test >= 1, "n_test must be >= 1"),
            (self.M >= 2, "M must be >= 2"),
            (self.k > 0, "k must be positive"),
            (self.target_dim >= 1, "target_dim must be >= 1"),
            (0 < self.evr_floor <= 1, "evr_floor must lie in (0, 1]"),
            (self.fallback_drop >= 1, "fallback_drop must be >= 1"),
            (self.radius_factor > 0, "radius_factor must be positive"),
            (self.gamma > 0, "gamma must be positive"),
            (len(self.gammas) > 0 and all(g > 0 for g in self.gammas),
             "gammas must be a non-empty list of positive values"),
            (self.min_points_per_domain >= 2, "min_points_per_domain must be >= 2"),
            (self.inverse_mode in ("pinv", "complement", "none"),
             "inverse_mode must be pinv, complement or none"),
            (self.k_nn >= 1, "k_nn must be >= 1"),
            (self.metric in ("relative_l2", "linf"), "metric must be relative_l2 or linf"),
            (self.mlp_epochs >= -1, "mlp_epochs must be >= 0 (or -1 for the preset)"),
            (bool(self.out_dir), "out_dir must not be empty"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        self.method_list()
        if self.mlp_preset not in PRESETS:
            raise ConfigError(f"mlp_preset must be one of {sorted(PRESETS)}")

    def method_list(self):
        if self.methods in METHOD_GROUPS:
            return METHOD_GROUPS[self.methods]
        chosen = tuple(m.strip() for m in self.methods.split(",") if m.strip())
        bad = [m for m in chosen if m not in METHODS]
        if bad or not chosen:
            raise ConfigError(f"unknown methods {bad}; choose from {list(METHODS)} "
                              f"or {sorted(METHOD_GROUPS)}")
        return chosen

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(float(g)) for g in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def seeds(self):
        return {"seed_train": self.seed_train, "seed_test": self.seed_test,
                "mlp_seed": self.mlp_seed}


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, text):
    kind = _TYPES[key]
    try:
        if kind is tuple:
            return _floats(text)
        if kind in (int, float):
            return kind(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}") from None
    return text


def parse_pairs(pairs, base=None):
    """Apply ``(key, text)`` overrides to ``base`` with type conversion."""
    values = {}
    for key, text in pairs:
        if key not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _convert(key, str(text).strip())
    return replace(base or RunConfig(), **values)


def parse_text(text, base=None):
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value))
    return parse_pairs(pairs, base)


def load_config(path=None, overrides=()):
    """Read ``path`` (if any) and then apply command-line ``overrides``."""
    cfg = RunConfig()
    if path is not None:
        with open(path) as fh:
            cfg = parse_text(fh.read(), cfg)
    return parse_pairs(overrides, cfg)
