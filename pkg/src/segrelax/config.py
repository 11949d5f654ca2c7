"""Run parameters and the ``key = value`` config file format.

The file format is a flat TOML-like subset: one ``key = value`` per line,
``#`` comments, numbers and the literals ``auto``/``true``/``false``.  CLI
flags override file values, which override the defaults below.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import InputError

_ALIASES = {
    "c": "edge_constant",
    "lambda": "boundary_weight",
}


@dataclass(frozen=True)
class Config:
    edge_constant: float = 1e-5      # additive floor on edge weights
    boundary_weight: float = 10.0    # scales the boundary term against unary costs
    threshold: float = 0.08          # default foreground cut on continuous labels
    epsilon: float | None = None     # smoothness regularization; None picks auto
    superpixels: int = 800
    compactness: float = 0.2
    lp_tol: float = 1e-7
    lp_max_iter: int = 200
    session_ttl: float = 1800.0      # idle seconds before a service session expires

    def __post_init__(self):
        if self.edge_constant <= 0:
            raise InputError("edge_constant must be > 0")
        if not 0.0 <= self.threshold <= 1.0:
            raise InputError("threshold must be in [0, 1]")
        if self.epsilon is not None and self.epsilon < 0:
            raise InputError("epsilon must be >= 0 (or auto)")
        if self.superpixels < 1:
            raise InputError("superpixels must be >= 1")
        if self.lp_tol <= 0 or self.lp_max_iter < 1:
            raise InputError("lp_tol must be > 0 and lp_max_iter >= 1")

    def override(self, **updates) -> "Config":
        updates = {k: v for k, v in updates.items() if v is not None}
        return replace(self, **updates) if updates else self


def _parse_value(key: str, raw: str):
    text = raw.strip().strip('"').strip("'")
    low = text.lower()
    if low == "auto":
        return None
    if low in ("true", "false"):
        return low == "true"
    try:
        if key in ("superpixels", "lp_max_iter"):
            return int(float(text))
        return float(text)
    except ValueError as exc:
        raise InputError(f"cannot parse config value {raw!r} for {key!r}") from exc


def parse_config_text(text: str, base: Config | None = None) -> Config:
    known = {f.name for f in fields(Config)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise InputError(f"config line {lineno}: expected key = value, got {line!r}")
        key, raw = body.split("=", 1)
        key = _ALIASES.get(key.strip(), key.strip())
        if key not in known:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    cfg = base or Config()
    # replace() directly so "epsilon = auto" (None) survives the merge
    return replace(cfg, **values) if values else cfg


def load_config(path, base: Config | None = None) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, base)
