"""Sweep configuration: defaults, the quick variant and file loading."""

import dataclasses
import json
from dataclasses import dataclass, fields
from pathlib import Path

from ..exceptions import InvalidArgumentError

METHODS = ("manifold", "l21")


@dataclass(frozen=True)
class SweepConfig:
    """Measurement-count sweep.

    Each trial draws one ``M_full x N`` Gaussian matrix and one ``s``-row
    sparse ``N x K`` matrix; for every ``k`` in ``k_grid`` the first ``k``
    rows of the matrix are used as the measurement operator.
    """

    M_full: int = 80
    N: int = 300
    K: int = 70
    s: int = 30
    k_grid: tuple = tuple(range(38, 81, 2))
    trials: int = 22
    delta: float = 1e-3
    lam: float = 9.0
    grad_rel_tol: float = 1e-8
    max_iter: int = 1000
    n_starts: int = 5
    seed: int = 0
    methods: tuple = METHODS
    success_tol: float = 1e-3
    support_tol: float = 1e-8
    delta_schedule: tuple = (1e-1, 1e-2)
    init_scale: float = 1e-3
    balance: bool = False

    def __post_init__(self):
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))
        object.__setattr__(self, "methods", tuple(str(m) for m in self.methods))
        object.__setattr__(self, "delta_schedule", tuple(float(d) for d in self.delta_schedule))
        for name in ("M_full", "N", "K", "s", "trials", "max_iter", "n_starts"):
            if int(getattr(self, name)) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be non-negative")
        if self.s > self.N:
            raise InvalidArgumentError(f"s={self.s} exceeds N={self.N}")
        if not self.k_grid:
            raise InvalidArgumentError("k_grid is empty")
        if len(set(self.k_grid)) != len(self.k_grid):
            raise InvalidArgumentError("k_grid has duplicates")
        bad = [k for k in self.k_grid if not 1 <= k <= self.M_full]
        if bad:
            raise InvalidArgumentError(f"k values outside [1, {self.M_full}]: {bad}")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods or len(set(self.methods)) != len(self.methods):
            raise InvalidArgumentError(f"methods must be distinct entries of {METHODS}")
        for name in ("delta", "lam", "grad_rel_tol", "success_tol", "support_tol", "init_scale"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")

    @classmethod
    def quick(cls, **overrides):
        """Desk-scale variant: 8 trials, ``k`` step 4, 3 starts."""
        base = dict(trials=8, k_grid=tuple(range(38, 81, 4)), n_starts=3)
        base.update(overrides)
        return cls(**base)

    def to_dict(self):
        return {f.name: list(v) if isinstance(v := getattr(self, f.name), tuple) else v
                for f in fields(self)}

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_ALIASES = {"lambda": "lam", "workers": None}


def parse_int_list(text):
    """``"38,40,42"`` or an inclusive range ``"38:80:2"``."""
    text = str(text).strip().strip("[]")
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise InvalidArgumentError(f"bad range {text!r}")
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else 1
        if step < 1:
            raise InvalidArgumentError(f"bad range step in {text!r}")
        return tuple(range(start, stop + 1, step))
    return tuple(int(p) for p in text.split(",") if p.strip())


def _coerce(name, value):
    kinds = {f.name: f.type for f in fields(SweepConfig)}
    if name not in kinds:
        raise InvalidArgumentError(f"unknown config key {name!r}")
    kind = kinds[name]
    try:
        if name == "k_grid":
            return parse_int_list(value) if isinstance(value, str) else tuple(int(v) for v in value)
        if name in ("methods", "delta_schedule"):
            if isinstance(value, str):
                value = [v.strip() for v in value.strip("[]").split(",") if v.strip()]
            return tuple(value)
        if kind is bool:
            if isinstance(value, str):
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                return value.lower() in ("true", "1", "yes")
            return bool(value)
        if kind is int:
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"bad value for {name}: {value!r}") from None


def normalize(mapping):
    """Map raw key/value pairs onto SweepConfig field names and types."""
    out = {}
    for key, value in mapping.items():
        key = key.strip()
        key = _ALIASES.get(key, key)
        if key is None:
            continue
        out[key] = _coerce(key, value)
    return out


def read_config_file(path):
    """Read a JSON object or ``key = value`` lines (``#`` starts a comment)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise InvalidArgumentError(f"{path}: expected a JSON object")
        return normalize(raw)
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    return normalize(raw)


def load_config(source=None, quick=False, **overrides):
    """Build a SweepConfig from ``"default"``, ``"quick"`` or a file, then apply overrides."""
    values = {}
    if source not in (None, "default", "quick"):
        values = read_config_file(source)
    quick = quick or source == "quick"
    values.update(overrides)
    return SweepConfig.quick(**values) if quick else SweepConfig(**values)
