"""Online linear and robust subspace learning by averaging on the Grassmannian."""
from ._accel import USE_NUMBA
from .errors import *  # noqa: F401,F403
from .geometry import (GrassmannPoint, TangentVector, exp_map, geodesic_distance,
                       geodesic_point, in_regular_ball, log_map, principal_angles)
from .learners import (EMPCA, RIGA, RRIGA, BatchPCA, LearnerConfig, Oja, SubspaceEstimate,
                       batch_pca, fit, make_learner)
from .means import (MeanState, MedianState, batch_frechet_median, batch_karcher_mean,
                    iga_update, median_update)
from .metrics import expressed_variance, reconstruction_error, subspace_error

__version__ = "0.1.0"
