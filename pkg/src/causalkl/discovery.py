"""Edge testing and three-way structure identification from interventions.

The driver enumerates a geometric grid of candidate separations: if the mean
of the conditional-vs-marginal KL statistic exceeds the coupling separation,
then at some level ``j`` the statistic exceeds ``2**-j`` with probability at
least ``r_j``, so drawing ``l_j`` candidate intervention points per level and
running a closeness test for each finds a witness with constant probability.
Per-level test error budgets ``delta_j`` are sized so that a union bound over
every test performed keeps the total error probability at or below 0.1.

An edge is declared on the first separated test; if neither direction yields
an edge, the correlation is attributed to a hidden common cause.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import config as cfg
from .closeness import ClosenessConfig, SampleSizeRule, closeness_test, required_samples
from .scm import A_TO_B, B_TO_A, CONFOUNDED, SamplingOracle

WITH_OBS = "with_obs"
INTERV_ONLY = "interv_only"
MODES = (WITH_OBS, INTERV_ONLY)


class ScheduleError(ValueError):
    """The level schedule violates one of its arithmetic invariants."""


@dataclass(frozen=True)
class LevinSchedule:
    """Per-level parameters of the edge-testing loop.

    Level ``j`` (1-based) tests threshold ``eps_j = 2**-j`` on ``l_j``
    candidate points, each with a closeness test sized for error ``delta_j``.
    The arrays satisfy, by construction:

    * ``k = ceil(log2(2 / epsilon))`` levels,
    * ``r_j = 2**j * epsilon / (k + 5 - j)**2`` lies in ``(0, 1]``,
    * ``sum_j l_j * delta_j <= 0.1`` (the union-bound error budget).
    """

    epsilon: float
    c: float
    beta: float
    dim: int
    kappa: float
    tau: float
    k: int
    eps_j: tuple[float, ...]
    r_j: tuple[float, ...]
    delta_j: tuple[float, ...]
    l_j: tuple[int, ...]
    n_j: tuple[int, ...]
    m_j: tuple[int, ...]

    @property
    def error_budget(self) -> float:
        return float(sum(l * d for l, d in zip(self.l_j, self.delta_j)))

    @property
    def tests_total(self) -> int:
        return int(sum(self.l_j))

    def samples_per_side(self) -> int:
        """Test samples one full sweep consumes on each side (p and q)."""
        return int(sum(l * n for l, n in zip(self.l_j, self.n_j)))


def build_schedule(
    epsilon: float,
    c: float,
    beta: float = cfg.DEFAULT_BETA,
    dim: int = 1,
    kappa: float = cfg.DEFAULT_KAPPA,
) -> LevinSchedule:
    """Compute the level schedule for separation ``epsilon`` and confidence ``c``."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if c <= 0:
        raise ValueError("c must be positive")
    rule = SampleSizeRule(beta=beta, dim=dim, kappa=kappa)
    k = math.ceil(math.log2(2.0 / epsilon))
    eps_j, r_j, delta_j, l_j, n_j, m_j = [], [], [], [], [], []
    for j in range(1, k + 1):
        eps = 2.0**-j
        r = 2.0**j * epsilon / (k + 5 - j) ** 2
        delta = 2.0 ** (j - k) / ((2.0 * c + 2.0) * (k + 5 - j) ** 4)
        tests = math.floor((2.0 * c + 2.0) / r)
        n, m = required_samples(eps, delta, rule)
        eps_j.append(eps)
        r_j.append(r)
        delta_j.append(delta)
        l_j.append(tests)
        n_j.append(n)
        m_j.append(m)
    schedule = LevinSchedule(
        epsilon=epsilon, c=c, beta=beta, dim=dim, kappa=kappa, tau=rule.tau,
        k=k, eps_j=tuple(eps_j), r_j=tuple(r_j), delta_j=tuple(delta_j),
        l_j=tuple(l_j), n_j=tuple(n_j), m_j=tuple(m_j),
    )
    if any(not 0.0 < r <= 1.0 for r in schedule.r_j):
        raise ScheduleError(f"some r_j left (0, 1]: {schedule.r_j}")
    if any(l < 1 for l in schedule.l_j):
        raise ScheduleError(f"some level has no tests: {schedule.l_j}")
    if schedule.error_budget > 0.1:
        raise ScheduleError(
            f"error budget {schedule.error_budget:.4f} exceeds 0.1"
        )
    return schedule


@dataclass(frozen=True)
class Witness:
    """The first separated test: where it fired and what it saw."""

    level: int
    index: int
    values: tuple[tuple[float, ...], ...]
    statistic: float


@dataclass(frozen=True)
class EdgeVerdict:
    edge: str
    present: bool
    witness: Witness | None
    samples_used: dict[str, int]
    tests_run: int

    def __post_init__(self) -> None:
        if self.present != (self.witness is not None):
            raise ValueError("present must hold exactly when a witness exists")


@dataclass(frozen=True)
class StructureVerdict:
    structure: str
    edge_ab: EdgeVerdict | None = None
    edge_ba: EdgeVerdict | None = None
    boosted: int = 1
    tie: bool = False
    votes: dict | None = None


@dataclass(frozen=True)
class DiscoveryConfig:
    """Estimator and scaling knobs for the edge tests."""

    beta: float = cfg.DEFAULT_BETA
    kernel_order: int = cfg.DEFAULT_KERNEL_ORDER
    kappa: float = cfg.DEFAULT_KAPPA
    bandwidth_scale: float = cfg.DISCOVERY_BANDWIDTH_SCALE
    floor: float | None = None
    #: Statistic scale bound; thresholds are multiplied by it and the
    #: schedule is built on ``epsilon / d_max``.  The default of 1 runs the
    #: level grid verbatim on raw KL values.
    d_max: float = 1.0
    #: Intervention point used to emulate cause draws in the
    #: interventional-only test; defaults to the domain midpoint.
    reference_value: tuple[float, ...] | None = None


def _roles(direction: str) -> tuple[str, str]:
    if direction == A_TO_B:
        return "A", "B"
    if direction == B_TO_A:
        return "B", "A"
    raise ValueError(f"direction must be {A_TO_B!r} or {B_TO_A!r}")


def _closeness_config(
    oracle: SamplingOracle, effect: str, config: DiscoveryConfig
) -> ClosenessConfig:
    floor = config.floor
    if floor is None:
        # Clamp at half the instance's certified density minimum.
        floor = oracle.instance.density_lower_bound() / 2.0
    return ClosenessConfig(
        domain=oracle.instance.domain(effect),
        beta=config.beta,
        kernel_order=config.kernel_order,
        bandwidth_scale=config.bandwidth_scale,
        floor=floor,
        kappa=config.kappa,
    )


def _run_levels(
    oracle: SamplingOracle,
    direction: str,
    schedule: LevinSchedule,
    config: DiscoveryConfig,
    draw_pair: Callable[[int, int], tuple[np.ndarray, np.ndarray, tuple]],
) -> EdgeVerdict:
    before = dict(oracle.counters)
    test_cfg = _closeness_config(oracle, _roles(direction)[1], config)
    tests_run = 0
    witness = None
    for j in range(schedule.k):
        for i in range(schedule.l_j[j]):
            samples_p, samples_q, seen = draw_pair(j, i)
            outcome = closeness_test(
                samples_p,
                samples_q,
                schedule.eps_j[j] * config.d_max,
                test_cfg,
                delta=schedule.delta_j[j],
            )
            tests_run += 1
            if outcome.separated:
                witness = Witness(
                    level=j + 1, index=i + 1, values=seen,
                    statistic=outcome.statistic,
                )
                break
        if witness is not None:
            break
    used = {key: oracle.counters[key] - before.get(key, 0) for key in oracle.counters}
    return EdgeVerdict(
        edge=direction,
        present=witness is not None,
        witness=witness,
        samples_used=used,
        tests_run=tests_run,
    )


def edge_test_obs(
    oracle: SamplingOracle,
    direction: str,
    schedule: LevinSchedule,
    config: DiscoveryConfig | None = None,
) -> EdgeVerdict:
    """Test one directed edge using observational and interventional data.

    For each level and candidate, a cause point is drawn observationally,
    the effect is sampled under an intervention at that point, and the
    closeness test compares those draws against fresh observational draws of
    the effect.  The first separated test is the witness for the edge.
    """
    config = config or DiscoveryConfig()
    cause, effect = _roles(direction)

    def draw_pair(j: int, i: int):
        cause_point = oracle.sample_obs_marginal(cause, 1)[0]
        interventional = oracle.sample_interventional(
            cause, cause_point, schedule.n_j[j]
        )
        observational = oracle.sample_obs_marginal(effect, schedule.m_j[j])
        return interventional, observational, (tuple(map(float, cause_point)),)

    return _run_levels(oracle, direction, schedule, config, draw_pair)


def edge_test_interv(
    oracle: SamplingOracle,
    direction: str,
    schedule: LevinSchedule,
    config: DiscoveryConfig | None = None,
) -> EdgeVerdict:
    """Test one directed edge from interventional data alone.

    Cause draws are emulated by intervening on the effect at a fixed
    reference point; each candidate compares the effect's law under
    interventions at two independently drawn cause points.
    """
    config = config or DiscoveryConfig()
    cause, effect = _roles(direction)
    if config.reference_value is not None:
        reference = np.asarray(config.reference_value, dtype=float)
    else:
        reference = oracle.instance.domain(effect).midpoint

    def draw_pair(j: int, i: int):
        pair = oracle.sample_interventional(effect, reference, 2)
        first, second = pair[0], pair[1]
        samples_p = oracle.sample_interventional(cause, first, schedule.n_j[j])
        samples_q = oracle.sample_interventional(cause, second, schedule.m_j[j])
        seen = (tuple(map(float, first)), tuple(map(float, second)))
        return samples_p, samples_q, seen

    return _run_levels(oracle, direction, schedule, config, draw_pair)


def discover_structure(
    oracle: SamplingOracle,
    epsilon: float,
    c: float,
    config: DiscoveryConfig | None = None,
    mode: str = WITH_OBS,
) -> StructureVerdict:
    """Identify the structure among a directed edge either way or confounding.

    Tests the A-to-B edge first, then B-to-A only if the first is absent;
    when both are absent the verdict is a hidden common cause.  The schedule
    is rebuilt from ``epsilon / d_max`` so that thresholds remain valid when
    the statistic is scaled into ``[0, 1]``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    config = config or DiscoveryConfig()
    schedule = build_schedule(
        epsilon / config.d_max, c,
        beta=config.beta, dim=oracle.instance.dim, kappa=config.kappa,
    )
    runner = edge_test_obs if mode == WITH_OBS else edge_test_interv
    ab = runner(oracle, A_TO_B, schedule, config)
    if ab.present:
        return StructureVerdict(structure=A_TO_B, edge_ab=ab)
    ba = runner(oracle, B_TO_A, schedule, config)
    if ba.present:
        return StructureVerdict(structure=B_TO_A, edge_ab=ab, edge_ba=ba)
    return StructureVerdict(structure=CONFOUNDED, edge_ab=ab, edge_ba=ba)


def boost_median(
    inner: Callable[[int], StructureVerdict], replicates: int
) -> StructureVerdict:
    """Boost a constant-probability identifier by majority over replicates.

    ``inner`` maps a replicate index to a verdict and must use independent
    oracles or seeds per index.  The modal structure wins; ties are broken
    toward the confounded verdict and flagged.  With a single replicate the
    inner verdict is returned unchanged.
    """
    if replicates < 1 or replicates % 2 == 0:
        raise ValueError("replicates must be an odd positive integer")
    verdicts = [inner(r) for r in range(replicates)]
    if replicates == 1:
        return verdicts[0]
    votes = Counter(v.structure for v in verdicts)
    top = max(votes.values())
    winners = [s for s, count in votes.items() if count == top]
    tie = len(winners) > 1
    chosen = CONFOUNDED if tie else winners[0]
    representative = next((v for v in verdicts if v.structure == chosen), None)
    return StructureVerdict(
        structure=chosen,
        edge_ab=representative.edge_ab if representative else None,
        edge_ba=representative.edge_ba if representative else None,
        boosted=replicates,
        tie=tie,
        votes=dict(votes),
    )
