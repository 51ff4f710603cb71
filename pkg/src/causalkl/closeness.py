"""Closeness testing: is ``p == q`` or is ``KL(p || q)`` above a separation?

The test computes the Von Mises estimate from the two sample sets and
declares the separated hypothesis exactly when the statistic strictly
exceeds ``epsilon / 2``.  The sample-size rule inverts the estimator's
exponential concentration: ``n = m = ceil(kappa * ((1/eps) * ln(1/delta))**tau)``
with ``tau = max(2, (2*beta + d) / (2*beta))``; ``kappa`` is the calibrated
constant the theory leaves unspecified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import config as cfg
from .divergence import vm_estimate
from .domain import DomainBox
from .kernels import make_kernel

H0 = "H0"
H1 = "H1"


@dataclass(frozen=True)
class SampleSizeRule:
    """Exponent and constant of the closeness-test sample-size rule."""

    beta: float = cfg.DEFAULT_BETA
    dim: int = 1
    kappa: float = cfg.DEFAULT_KAPPA

    def __post_init__(self) -> None:
        if self.beta <= 0 or self.dim < 1 or self.kappa <= 0:
            raise ValueError("beta, dim and kappa must be positive")

    @property
    def tau(self) -> float:
        return max(2.0, (2.0 * self.beta + self.dim) / (2.0 * self.beta))


def required_samples(
    epsilon: float, delta: float, rule: SampleSizeRule
) -> tuple[int, int]:
    """Per-side sample counts sufficient for error probability ``delta``.

    Both counts equal ``ceil(kappa * ((1/epsilon) * ln(1/delta))**tau)``
    (natural logarithm; the calibrated ``kappa`` absorbs the base), floored
    at the estimator's minimum of 4.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie strictly in (0, 1)")
    count = math.ceil(rule.kappa * ((1.0 / epsilon) * math.log(1.0 / delta)) ** rule.tau)
    count = max(count, 4)
    return count, count


@dataclass(frozen=True)
class TestOutcome:
    """Decision of one closeness test plus everything that produced it."""

    decision: str  # H0 or H1
    statistic: float
    threshold: float
    n: int
    m: int
    epsilon: float
    delta: float | None = None

    @property
    def separated(self) -> bool:
        return self.decision == H1


@dataclass(frozen=True)
class ClosenessConfig:
    """Estimator knobs shared by every test in an experiment."""

    domain: DomainBox
    beta: float = cfg.DEFAULT_BETA
    kernel_order: int = cfg.DEFAULT_KERNEL_ORDER
    bandwidth_scale: float = 1.0
    floor: float | None = None
    kappa: float = cfg.DEFAULT_KAPPA

    def rule(self) -> SampleSizeRule:
        return SampleSizeRule(beta=self.beta, dim=self.domain.dim, kappa=self.kappa)


def closeness_test(
    samples_p: np.ndarray,
    samples_q: np.ndarray,
    epsilon: float,
    config: ClosenessConfig,
    delta: float | None = None,
) -> TestOutcome:
    """Decide ``p == q`` versus ``KL(p || q) > epsilon`` from samples.

    Returns the separated decision exactly when the Von Mises statistic is
    strictly greater than ``epsilon / 2``; a statistic of exactly the
    threshold keeps the null.  Deterministic given the sample arrays.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    kernel = make_kernel(config.kernel_order, config.domain.dim)
    estimate = vm_estimate(
        samples_p,
        samples_q,
        kernel,
        beta=config.beta,
        domain=config.domain,
        floor=config.floor,
        bandwidth_scale=config.bandwidth_scale,
    )
    threshold = epsilon / 2.0
    decision = H1 if estimate.value > threshold else H0
    return TestOutcome(
        decision=decision,
        statistic=estimate.value,
        threshold=threshold,
        n=estimate.n,
        m=estimate.m,
        epsilon=epsilon,
        delta=delta,
    )
