"""Line-oriented ``key = value`` experiment configs.

Recognized keys: ``intervals`` (target region, ``a1-b1, a2-b2, ...``),
``eta``, ``classes``, ``penalty`` (one kind or a comma list), ``gamma``,
``gamma1``, ``gamma2``, ``mc_draws``, ``profile``, ``n``, ``reps``, ``seed``,
``workers``. Blank lines and ``#`` comments are ignored. ``workers`` is an
execution hint, not part of the experiment's identity, so it is returned
separately from the config.
"""

from __future__ import annotations

from .classes import parse_hierarchy
from .complexity import ConstantProfile
from .data import NoisyRegionDistribution
from .harness import ExperimentConfig
from .penalties import KINDS

_KNOWN_KEYS = {
    "intervals", "eta", "classes", "penalty", "gamma", "gamma1", "gamma2",
    "mc_draws", "profile", "n", "reps", "seed", "workers",
}

_REQUIRED_KEYS = ("intervals", "eta", "classes", "n", "reps")


def parse_pairs(text: str) -> dict[str, str]:
    """Raw key/value pairs; rejects unknown or duplicate keys and bad lines."""
    pairs: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ValueError(f"line {line_no}: unknown key {key!r}")
        if key in pairs:
            raise ValueError(f"line {line_no}: duplicate key {key!r}")
        if not value:
            raise ValueError(f"line {line_no}: empty value for {key!r}")
        pairs[key] = value
    return pairs


def parse_intervals(value: str) -> tuple[tuple[float, float], ...]:
    out = []
    for piece in value.split(","):
        piece = piece.strip()
        if not piece:
            continue
        lo, sep, hi = piece.partition("-")
        if not sep:
            raise ValueError(f"bad interval {piece!r}: expected a-b")
        out.append((float(lo), float(hi)))
    if not out:
        raise ValueError("empty intervals value")
    return tuple(out)


def parse_kinds(value: str) -> tuple[str, ...]:
    kinds = tuple(piece.strip() for piece in value.split(",") if piece.strip())
    for kind in kinds:
        if kind not in KINDS:
            raise ValueError(f"unknown penalty kind {kind!r}")
    if not kinds:
        raise ValueError("empty penalty value")
    return kinds


def build_experiment(pairs: dict[str, str]) -> tuple[ExperimentConfig, int]:
    """Turn parsed pairs into (ExperimentConfig, workers)."""
    missing = [key for key in _REQUIRED_KEYS if key not in pairs]
    if missing:
        raise ValueError(f"missing config keys: {', '.join(missing)}")
    dist = NoisyRegionDistribution(
        parse_intervals(pairs["intervals"]), float(pairs["eta"])
    )
    cfg = ExperimentConfig(
        dist=dist,
        hierarchy=parse_hierarchy(pairs["classes"]),
        n=int(pairs["n"]),
        reps=int(pairs["reps"]),
        kinds=parse_kinds(pairs.get("penalty", ",".join(KINDS))),
        seed=int(pairs.get("seed", "0")),
        profile=ConstantProfile.parse(pairs.get("profile", "paper")),
        mc_draws=int(pairs.get("mc_draws", "10000")),
        gamma=float(pairs.get("gamma", "1.0")),
        gamma1=float(pairs.get("gamma1", "2.0")),
        gamma2=float(pairs.get("gamma2", "1.0")),
    )
    workers = int(pairs.get("workers", "1"))
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return cfg, workers


def load_experiment(path: str) -> tuple[ExperimentConfig, int]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise RuntimeError(f"cannot read config {path!r}: {exc}") from exc
    try:
        return build_experiment(parse_pairs(text))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
