"""Conditional mode regression by inverting a linear quantile regression.

The quantile process is fitted on a grid of levels, its derivative in tau
(the sparsity function) is estimated by difference quotients, and the level
where it is smallest gives the conditional mode.
"""

from .bandwidth import BandwidthPlan, km_bandwidth, select_bandwidth
from .chernoff import (ChernoffTable, build_table, chernoff_quantile, gumbel_constants,
                       gumbel_convergence_check, simulate_chernoff)
from .config import ModeConfig
from .dataset import Dataset, DesignPoint, load_csv, validate
from .errors import ModalRegError
from .inference import (IntervalResult, analytic_ci, simultaneous_ci, subsample_ci,
                        subsample_distribution, subsample_interval)
from .lmr import lmr_em_fit
from .mode import ModeEstimate, estimate_mode, estimate_modes, minimize_sparsity, sparsity_curve
from .qr import QuantileProcess, predict_quantile, solve_path, solve_qr
from .simlab import (DgpSpec, ExperimentReport, conformal_experiment, coverage_experiment,
                     rmse_experiment, sample_dgp)

__version__ = "0.1.0"
