"""Tunable constants and plain-text experiment configuration.

The theory behind the test and the discovery schedule fixes rates but hides
multiplicative constants.  The constants shipped here were fixed once by the
documented calibration runs (see README and the ``calibrate`` subcommand) and
can be overridden per run via CLI flags or a key=value config file.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

#: Sample-size multiplier for the closeness test, from the shipped
#: calibration run at (epsilon, delta) = (0.4, 0.1) on the reference pairs:
#: ``causalkl calibrate --epsilon 0.4 --delta 0.1 --trials 200 --seed 20260809``.
DEFAULT_KAPPA = 14.0

#: Calibration search gives up past this multiplier.
KAPPA_MAX = 64.0

#: Bandwidth scale for the closeness-test experiments on ``[-3, 3]``.
REFERENCE_BANDWIDTH_SCALE = 1.5

#: Bandwidth scale shared by both estimators in the convergence-rate sweep
#: and baseline comparison (generous smoothing makes the first-order bias
#: the plug-in keeps, and the correction removes, visible at bench sizes).
RATE_BANDWIDTH_SCALE = 2.5

#: Bandwidth scale used by the discovery experiments on unit-box models,
#: fixed by the documented sweep in the calibration notes.
DISCOVERY_BANDWIDTH_SCALE = 0.5

#: Accounting constant: interventional samples per edge test stay below
#: KAPPA_PRIME * c / epsilon**tau across the supported sweep (epsilon down
#: to 0.1, any c >= 1); the ratio is dominated by the finest level of the
#: epsilon = 0.1 schedule at the calibrated kappa.
KAPPA_PRIME = 1.2e6

DEFAULT_BETA = 2.0
DEFAULT_KERNEL_ORDER = 2
DEFAULT_EPSILON = 0.5
DEFAULT_C = 3.0
DEFAULT_DELTA = 0.1


@dataclass
class ExperimentConfig:
    """Bundle of knobs shared by the harness subcommands.

    Re-running any experiment with an identical config (including ``seed``)
    reproduces its output files byte for byte.
    """

    seed: int = 0
    trials: int = 100
    jobs: int = 1
    output_dir: str = "results"
    beta: float = DEFAULT_BETA
    dim: int = 1
    kernel_order: int = DEFAULT_KERNEL_ORDER
    kappa: float = DEFAULT_KAPPA
    kappa_prime: float = KAPPA_PRIME
    #: None picks the per-experiment default (reference vs. discovery scale).
    bandwidth_scale: float | None = None
    floor: float | None = None
    epsilon: float = DEFAULT_EPSILON
    delta: float = DEFAULT_DELTA
    c: float = DEFAULT_C
    d_max: float = 1.0
    budget: int | None = None
    structure: str = "all"
    mode: str = "with_obs"
    replicates: int = 1
    strength: float = 1.0

    def to_text(self) -> str:
        lines = ["# causalkl experiment config"]
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {'' if value is None else value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "ExperimentConfig":
        converters = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in converters:
                raise KeyError(f"unknown config key: {key!r}")
            kwargs[key] = _convert(raw, converters[key].type)
        return cls(**kwargs)


def _convert(raw: str, annotation: object) -> object:
    text = raw.strip()
    ann = str(annotation)
    if text == "":
        return None
    if "int" in ann and "None" not in ann:
        return int(text)
    if ann in ("int | None", "typing.Optional[int]"):
        return int(text)
    if "float" in ann:
        return float(text)
    return text


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_mapping(parse_config_text(Path(path).read_text()))


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(config.to_text())
