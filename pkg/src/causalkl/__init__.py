"""KL closeness testing and interventional causal discovery for continuous data.

The package provides, bottom up: compactly supported higher-order product
kernels and KDE on a box (`kernels`, `kde`); a data-split bias-corrected KL
estimator with a plug-in baseline and a quadrature ground truth
(`divergence`); a two-sample closeness test with its sample-size rule
(`closeness`); ground-truth structural models with certified coupling
(`scm`); edge tests and three-way structure identification (`discovery`);
and a reproducible experiment harness with a CLI (`harness`, `cli`).
"""

from .closeness import (
    ClosenessConfig,
    SampleSizeRule,
    TestOutcome,
    closeness_test,
    required_samples,
)
from .densities import (
    AnalyticDensity,
    BetaMix,
    Mixture,
    ProductDensity,
    SmoothMap,
    TruncatedGaussian,
    Uniform,
)
from .discovery import (
    DiscoveryConfig,
    EdgeVerdict,
    LevinSchedule,
    StructureVerdict,
    Witness,
    boost_median,
    build_schedule,
    discover_structure,
    edge_test_interv,
    edge_test_obs,
)
from .divergence import KlEstimate, kl_oracle, plugin_estimate, vm_estimate
from .domain import DomainBox
from .kde import DensityEstimate, default_floor, kde_eval, kde_fit
from .kernels import KernelSpec, bandwidth_rule, make_kernel
from .scm import (
    A_TO_B,
    B_TO_A,
    CONFOUNDED,
    BudgetExceededError,
    MechanismParams,
    SamplingOracle,
    ScmInstance,
    make_scm,
)

__version__ = "0.1.0"

__all__ = [
    "A_TO_B",
    "B_TO_A",
    "CONFOUNDED",
    "AnalyticDensity",
    "BetaMix",
    "BudgetExceededError",
    "ClosenessConfig",
    "DensityEstimate",
    "DiscoveryConfig",
    "DomainBox",
    "EdgeVerdict",
    "KernelSpec",
    "KlEstimate",
    "LevinSchedule",
    "MechanismParams",
    "Mixture",
    "ProductDensity",
    "SampleSizeRule",
    "SamplingOracle",
    "ScmInstance",
    "SmoothMap",
    "StructureVerdict",
    "TestOutcome",
    "TruncatedGaussian",
    "Uniform",
    "Witness",
    "bandwidth_rule",
    "boost_median",
    "build_schedule",
    "closeness_test",
    "default_floor",
    "discover_structure",
    "edge_test_interv",
    "edge_test_obs",
    "kde_eval",
    "kde_fit",
    "kl_oracle",
    "make_kernel",
    "make_scm",
    "plugin_estimate",
    "required_samples",
    "vm_estimate",
]
