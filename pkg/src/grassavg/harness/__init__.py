from .data import MixtureConfig, sample_mixture, substream
from .experiment import ExperimentSpec, RunRecord, cross_check, run_experiment
from .io import iter_rows, read_matrix, write_matrix
