"""Simulated-annealing ABC with per-statistic energies and temperatures.

Likelihood-free posterior sampling in which every summary statistic carries
its own energy (its distance to the observed value, rectified to be uniform
under the prior) and, optionally, its own adaptively annealed temperature
derived from a minimal-entropy-production schedule.  Ships with benchmark
simulators, an SMC-ABC baseline, reference-posterior oracles, and the MMD /
classifier two-sample metrics used to compare them.
"""

from .annealing import (
    Schedule,
    TemperatureOverflowError,
    TemperatureState,
    beta_of_u,
    catalan_coeff,
    geodesic_u,
    metric,
    onsager_matrix,
    onsager_mc_estimate,
    u_of_beta,
    update_beta_e_multi,
    update_beta_e_single,
)
from .energies import EnergyTransform, build_transform, to_energy, to_energy_vector
from .metrics import c2st, mmd
from .oracles import (
    OracleSample,
    get_oracle,
    grid_posterior_1d,
    mh_posterior,
    rejection_posterior,
)
from .records import ConfigError, RunConfig, RunRecord
from .sampler import (
    Population,
    ProposalKernel,
    importance_jump,
    initialize,
    metropolis_step,
    propose,
    run_sabc,
    systematic_resample,
)
from .smc import run_smcabc
from .tasks import (
    SimulationError,
    Task,
    TASKS,
    distractor_task,
    get_task,
    gmm_task,
    hyperboloid_task,
    sir_task,
    two_moons_task,
)

__version__ = "0.1.0"
